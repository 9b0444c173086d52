use super::norm::batchnorm_train_output;
use super::*;

/// Gradients produced by one layer's backward pass.
///
/// `param_grads` follows the parameter order of the layer: kernels/weights
/// then bias for convolutions and fully-connected layers, gamma then beta
/// for batch normalization, nothing for parameter-free layers.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerGrads<T> {
    pub input_grad: Tensor<T>,
    pub param_grads: Vec<Tensor<T>>,
}

/// A single layer together with borrowed parameters.
#[derive(Clone, Copy, Debug)]
pub enum Layer<'a, T> {
    Conv {
        kernels: &'a Tensor<T>,
        bias: Option<&'a [T]>,
        stride: usize,
        padding: usize,
    },
    Depthwise {
        kernels: &'a Tensor<T>,
        bias: Option<&'a [T]>,
        stride: usize,
        padding: usize,
    },
    Pointwise {
        kernels: &'a Tensor<T>,
        bias: Option<&'a [T]>,
    },
    BatchNorm {
        gamma: &'a [T],
        beta: &'a [T],
        running_mean: &'a [T],
        running_var: &'a [T],
        epsilon: T,
        training: bool,
    },
    Relu,
    Pool {
        mode: PoolMode,
        window: (usize, usize),
        stride: (usize, usize),
    },
    FullyConnected {
        weights: &'a Tensor<T>,
        bias: &'a [T],
    },
}

impl<T: Scalar> Layer<'_, T> {
    pub fn name(&self) -> &'static str {
        match self {
            Layer::Conv { .. } => "conv",
            Layer::Depthwise { .. } => "depthwise",
            Layer::Pointwise { .. } => "pointwise",
            Layer::BatchNorm { .. } => "batchnorm",
            Layer::Relu => "relu",
            Layer::Pool { .. } => "pool",
            Layer::FullyConnected { .. } => "fully_connected",
        }
    }
}

/// Forward pass of one layer. Batch normalization in training mode uses the
/// batch statistics but does not update any running statistics.
pub fn layer_forward<T: Scalar>(layer: &Layer<'_, T>, input: &Tensor<T>) -> Result<Tensor<T>> {
    match *layer {
        Layer::Conv { kernels, bias, stride, padding } => conv2d_forward(input, kernels, bias, stride, padding),
        Layer::Depthwise { kernels, bias, stride, padding } => depthwise_conv2d_forward(input, kernels, bias, stride, padding),
        Layer::Pointwise { kernels, bias } => pointwise_conv2d_forward(input, kernels, bias),
        Layer::BatchNorm { gamma, beta, running_mean, running_var, epsilon, training } => {
            if training {
                batchnorm_train_output(input, gamma, beta, epsilon)
            } else {
                let (mut rm, mut rv) = (running_mean.to_vec(), running_var.to_vec());
                batchnorm_forward(input, gamma, beta, &mut rm, &mut rv, epsilon, false)
            }
        }
        Layer::Relu => Ok(relu(input)),
        Layer::Pool { mode, window, stride } => pool2d_rect(input, mode, window, stride),
        Layer::FullyConnected { weights, bias } => fully_connected_forward(input, weights, bias),
    }
}

/// Analytic gradients of one layer given its forward input and the gradient
/// flowing into its output.
pub fn layer_backward<T: Scalar>(layer: &Layer<'_, T>, input: &Tensor<T>, upstream: &Tensor<T>) -> Result<LayerGrads<T>> {
    match *layer {
        Layer::Conv { kernels, bias, stride, padding } => conv2d_backward(input, kernels, bias.is_some(), stride, padding, upstream),
        Layer::Depthwise { kernels, bias, stride, padding } => {
            depthwise_conv2d_backward(input, kernels, bias.is_some(), stride, padding, upstream)
        }
        Layer::Pointwise { kernels, bias } => pointwise_conv2d_backward(input, kernels, bias.is_some(), upstream),
        Layer::BatchNorm { gamma, running_mean, running_var, epsilon, training, .. } => {
            batchnorm_backward(input, gamma, running_mean, running_var, epsilon, training, upstream)
        }
        Layer::Relu => relu_backward(input, upstream),
        Layer::Pool { mode, window, stride } => pool2d_backward(input, mode, window, stride, upstream),
        Layer::FullyConnected { weights, .. } => fully_connected_backward(input, weights, upstream),
    }
}
