use super::spec::{Head, LayerPlan, ModelSpec};
use super::weights::{build_model, ModelWeights, Op, Program};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{batchnorm_forward, layer_backward, layer_forward, sigmoid, softmax, Layer, Shape, Tensor, BN_EPSILON};

/// A validated spec compiled to primitive operations.
///
/// Compile once and reuse across batches; the forward and backward passes
/// only borrow the weights.
#[derive(Clone, Debug)]
pub struct Network {
    spec: ModelSpec,
    plans: Vec<LayerPlan>,
    program: Program,
}

/// Activations recorded by [`Network::forward_train`] for the backward pass.
#[derive(Clone, Debug)]
pub struct Tape<T> {
    inputs: Vec<Tensor<T>>,
}

impl Network {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        Ok(Self {
            spec: spec.clone(),
            plans: spec.plan()?,
            program: Program::compile(spec)?,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn plans(&self) -> &[LayerPlan] {
        &self.plans
    }

    pub fn build<T: Scalar>(&self, seed: u64) -> Result<ModelWeights<T>> {
        build_model(&self.spec, seed)
    }

    /// Checks that `weights` match this network's parameter layout.
    pub fn check_weights<T: Scalar>(&self, weights: &ModelWeights<T>) -> Result<()> {
        self.program.check(weights)
    }

    fn check_batch<T: Scalar>(&self, batch: &Tensor<T>) -> Result<()> {
        let s = batch.shape();
        let want = self.spec.input;
        for (axis, expected, actual) in [("channels", want.c, s.c), ("height", want.h, s.h), ("width", want.w, s.w)] {
            if expected != actual {
                return Err(Error::dim(axis, expected, actual, format!("batch {s} vs model input {want}")));
            }
        }
        if s.n == 0 {
            return Err(Error::dim("batch", 1, 0, "empty batch"));
        }
        Ok(())
    }

    fn layer<'a, T: Scalar>(&self, op: &Op, w: &'a ModelWeights<T>, training: bool) -> Option<Layer<'a, T>> {
        let t = |i: usize| &w.params[i].tensor;
        let d = |i: usize| w.params[i].tensor.data();
        Some(match *op {
            Op::Conv { weight, bias, stride, padding } => Layer::Conv { kernels: t(weight), bias: bias.map(d), stride, padding },
            Op::Depthwise { weight, bias, stride, padding } => Layer::Depthwise { kernels: t(weight), bias: bias.map(d), stride, padding },
            Op::Pointwise { weight, bias } => Layer::Pointwise { kernels: t(weight), bias: bias.map(d) },
            Op::BatchNorm { gamma, beta, mean, var } => Layer::BatchNorm {
                gamma: d(gamma),
                beta: d(beta),
                running_mean: d(mean),
                running_var: d(var),
                epsilon: T::lit(BN_EPSILON),
                training,
            },
            Op::Relu => Layer::Relu,
            Op::Pool { mode, window, stride } => Layer::Pool { mode, window, stride },
            Op::FullyConnected { weight, bias } => Layer::FullyConnected { weights: t(weight), bias: d(bias) },
            Op::Flatten => return None,
        })
    }

    fn flatten<T: Scalar>(x: Tensor<T>) -> Result<Tensor<T>> {
        let s = x.shape();
        x.reshape(Shape::new(s.n, s.item_len(), 1, 1))
    }

    /// Inference forward pass: batch N×C×H×W to logits N×K×1×1. Batch norm
    /// uses the running statistics.
    pub fn forward<T: Scalar>(&self, weights: &ModelWeights<T>, batch: &Tensor<T>) -> Result<Tensor<T>> {
        self.check_weights(weights)?;
        self.check_batch(batch)?;
        let mut x = batch.clone();
        for op in &self.program.ops {
            x = match self.layer(op, weights, false) {
                Some(layer) => layer_forward(&layer, &x)?,
                None => Self::flatten(x)?,
            };
        }
        Ok(x)
    }

    /// Training forward pass. Batch norm normalizes with batch statistics
    /// and folds them into the running statistics held in `weights`.
    pub fn forward_train<T: Scalar>(&self, weights: &mut ModelWeights<T>, batch: &Tensor<T>) -> Result<(Tensor<T>, Tape<T>)> {
        self.check_weights(weights)?;
        self.check_batch(batch)?;
        let mut inputs = Vec::with_capacity(self.program.ops.len());
        let mut x = batch.clone();
        for op in &self.program.ops {
            let y = match *op {
                Op::BatchNorm { gamma, beta, mean, var } => {
                    let mut rm = weights.params[mean].tensor.data().to_vec();
                    let mut rv = weights.params[var].tensor.data().to_vec();
                    let y = batchnorm_forward(
                        &x,
                        weights.params[gamma].tensor.data(),
                        weights.params[beta].tensor.data(),
                        &mut rm,
                        &mut rv,
                        T::lit(BN_EPSILON),
                        true,
                    )?;
                    weights.params[mean].tensor.data_mut().copy_from_slice(&rm);
                    weights.params[var].tensor.data_mut().copy_from_slice(&rv);
                    y
                }
                Op::Flatten => Self::flatten(x.clone())?,
                _ => layer_forward(&self.layer(op, weights, true).expect("parametric op"), &x)?,
            };
            inputs.push(x);
            x = y;
        }
        Ok((x, Tape { inputs }))
    }

    /// Backpropagates `dlogits` (N×K×1×1) through the recorded pass.
    ///
    /// Returns one gradient per entry of `weights.params`; running
    /// statistics get zero gradients.
    pub fn backward<T: Scalar>(&self, weights: &ModelWeights<T>, tape: &Tape<T>, dlogits: &Tensor<T>) -> Result<Vec<Tensor<T>>> {
        self.check_weights(weights)?;
        if tape.inputs.len() != self.program.ops.len() {
            return Err(Error::dim("tape", self.program.ops.len(), tape.inputs.len(), "tape from a different network"));
        }
        let mut grads: Vec<Tensor<T>> = weights.params.iter().map(|p| Tensor::zeros(p.tensor.shape())).collect();
        let mut upstream = dlogits.clone();
        for (op, input) in self.program.ops.iter().zip(&tape.inputs).rev() {
            upstream = match self.layer(op, weights, true) {
                None => upstream.reshape(input.shape())?,
                Some(layer) => {
                    let g = layer_backward(&layer, input, &upstream)?;
                    let slots: Vec<usize> = match *op {
                        Op::Conv { weight, bias, .. } | Op::Depthwise { weight, bias, .. } | Op::Pointwise { weight, bias } => {
                            std::iter::once(weight).chain(bias).collect()
                        }
                        Op::BatchNorm { gamma, beta, .. } => vec![gamma, beta],
                        Op::FullyConnected { weight, bias } => vec![weight, bias],
                        Op::Relu | Op::Pool { .. } | Op::Flatten => Vec::new(),
                    };
                    for (slot, pg) in slots.into_iter().zip(g.param_grads) {
                        grads[slot] = pg;
                    }
                    g.input_grad
                }
            };
        }
        debug_assert!(weights.params.iter().zip(&grads).all(|(p, g)| p.role.trainable() || g.data().iter().all(|v| *v == T::zero())));
        Ok(grads)
    }
}

/// A class decision with the head's probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub index: usize,
    pub label: String,
    pub probabilities: Vec<f64>,
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Applies the head to one row of logits. A sigmoid head yields the pair
/// `[1 - p, p]` so both heads produce one probability per class.
pub fn head_probabilities<T: Scalar>(head: Head, logits: &[T]) -> Vec<T> {
    match head {
        Head::Softmax => softmax(logits),
        Head::SigmoidBinary => {
            let p = sigmoid(logits[0]);
            vec![T::one() - p, p]
        }
    }
}

/// Inference forward pass.
pub fn forward<T: Scalar>(spec: &ModelSpec, weights: &ModelWeights<T>, batch: &Tensor<T>) -> Result<Tensor<T>> {
    Network::new(spec)?.forward(weights, batch)
}

/// Predictions for every item of a batch.
pub fn predict_batch<T: Scalar>(spec: &ModelSpec, weights: &ModelWeights<T>, batch: &Tensor<T>) -> Result<Vec<Prediction>> {
    let logits = forward(spec, weights, batch)?;
    Ok(decide(spec, &logits))
}

/// Prediction for a single 1×C×H×W image tensor.
pub fn predict<T: Scalar>(spec: &ModelSpec, weights: &ModelWeights<T>, image: &Tensor<T>) -> Result<Prediction> {
    if image.shape().n != 1 {
        return Err(Error::dim("batch", 1, image.shape().n, "predict takes a single image"));
    }
    Ok(predict_batch(spec, weights, image)?.remove(0))
}

/// Turns N×K logits into predictions.
pub fn decide<T: Scalar>(spec: &ModelSpec, logits: &Tensor<T>) -> Vec<Prediction> {
    (0..logits.shape().n)
        .map(|n| {
            let probs = head_probabilities(spec.head, logits.item(n));
            let index = argmax(&probs);
            Prediction {
                index,
                label: spec.class_labels[index].clone(),
                probabilities: probs.iter().map(|p| p.as_f64()).collect(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ModelSpec {
        ModelSpec::desk((0..5).map(|i| format!("c{i}")).collect(), 32, 32, 0.25)
    }

    #[test]
    fn logits_shape_and_determinism() {
        let spec = tiny();
        let w = build_model::<f32>(&spec, 7).unwrap();
        let x = Tensor::filled(Shape::new(1, 3, 32, 32), 0.3f32);
        let a = forward(&spec, &w, &x).unwrap();
        assert_eq!(a.shape(), Shape::new(1, 5, 1, 1));
        assert!(a.is_finite());
        assert_eq!(a, forward(&spec, &w, &x).unwrap());
    }

    #[test]
    fn zero_weights_give_zero_logits() {
        let spec = tiny();
        let w = build_model::<f32>(&spec, 7).unwrap().zeroed();
        let x = Tensor::zeros(Shape::new(2, 3, 32, 32));
        assert!(forward(&spec, &w, &x).unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn wrong_input_shape_is_dimension_error() {
        let spec = tiny();
        let w = build_model::<f32>(&spec, 7).unwrap();
        let x = Tensor::zeros(Shape::new(1, 3, 16, 32));
        assert!(matches!(forward(&spec, &w, &x), Err(Error::Dimension { axis: "height", .. })));
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[0.1, 2.0, 0.1, 0.1, 0.1]), 1);
        assert_eq!(argmax(&[0.5; 5]), 0);
        let p = head_probabilities(Head::Softmax, &[0.2f64; 5]);
        assert_eq!(argmax(&p), 0);
    }

    #[test]
    fn training_pass_updates_running_stats_only() {
        let spec = tiny();
        let mut w = build_model::<f64>(&spec, 3).unwrap();
        let before = w.clone();
        let x = Tensor::from_vec(Shape::new(2, 3, 32, 32), (0..6144).map(|i| (i % 17) as f64 / 17.0).collect()).unwrap();
        let net = Network::new(&spec).unwrap();
        let (logits, tape) = net.forward_train(&mut w, &x).unwrap();
        for (a, b) in before.params.iter().zip(&w.params) {
            let moved = a.tensor != b.tensor;
            assert_eq!(moved, !a.role.trainable(), "{}", a.name);
        }
        let grads = net.backward(&w, &tape, &Tensor::filled(logits.shape(), 1.0)).unwrap();
        assert_eq!(grads.len(), w.params.len());
        assert!(grads.iter().all(|g| g.is_finite()));
    }
}
