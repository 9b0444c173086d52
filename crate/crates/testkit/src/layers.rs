//! Finite-difference gradient checks for every layer kind.
//!
//! Each case draws a random layer with shapes no larger than 1×4×8×8,
//! projects its output onto a random direction `r` (loss = Σ r·y) and
//! compares the analytic input and parameter gradients against central
//! differences of that loss.

use vigil::tensor::{layer_backward, layer_forward, Layer, PoolMode, Shape, Tensor};

use crate::{central_diff, relative_error, SplitMix};

/// Finite-difference step.
pub const STEP: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerKind {
    Conv,
    Depthwise,
    Pointwise,
    BatchNormTrain,
    BatchNormInfer,
    Relu,
    MaxPool,
    AvgPool,
    FullyConnected,
}

impl LayerKind {
    pub const ALL: [LayerKind; 9] = [
        LayerKind::Conv,
        LayerKind::Depthwise,
        LayerKind::Pointwise,
        LayerKind::BatchNormTrain,
        LayerKind::BatchNormInfer,
        LayerKind::Relu,
        LayerKind::MaxPool,
        LayerKind::AvgPool,
        LayerKind::FullyConnected,
    ];
}

/// Hyper-parameters fixed per case; the tensors in `params` are perturbed.
#[derive(Clone, Debug)]
struct Case {
    kind: LayerKind,
    input: Tensor<f64>,
    params: Vec<Tensor<f64>>,
    /// Number of leading params that receive gradients.
    trainable: usize,
    stride: usize,
    padding: usize,
    window: usize,
    bias: bool,
}

fn with_layer<R>(case: &Case, params: &[Tensor<f64>], f: impl FnOnce(&Layer<'_, f64>) -> R) -> R {
    let bias = |i: usize| if case.bias { Some(params[i].data()) } else { None };
    let layer = match case.kind {
        LayerKind::Conv => Layer::Conv { kernels: &params[0], bias: bias(1), stride: case.stride, padding: case.padding },
        LayerKind::Depthwise => Layer::Depthwise { kernels: &params[0], bias: bias(1), stride: case.stride, padding: case.padding },
        LayerKind::Pointwise => Layer::Pointwise { kernels: &params[0], bias: bias(1) },
        LayerKind::BatchNormTrain | LayerKind::BatchNormInfer => Layer::BatchNorm {
            gamma: params[0].data(),
            beta: params[1].data(),
            running_mean: params[2].data(),
            running_var: params[3].data(),
            epsilon: 1e-5,
            training: case.kind == LayerKind::BatchNormTrain,
        },
        LayerKind::Relu => Layer::Relu,
        LayerKind::MaxPool | LayerKind::AvgPool => Layer::Pool {
            mode: if case.kind == LayerKind::MaxPool { PoolMode::Max } else { PoolMode::Average },
            window: (case.window, case.window),
            stride: (case.stride, case.stride),
        },
        LayerKind::FullyConnected => Layer::FullyConnected { weights: &params[0], bias: params[1].data() },
    };
    f(&layer)
}

fn tensor(rng: &mut SplitMix, shape: Shape, lo: f64, hi: f64) -> Tensor<f64> {
    Tensor::from_vec(shape, rng.vec(shape.len(), lo, hi)).unwrap()
}

/// Values bounded away from zero so ReLU kinks sit outside the FD stencil.
fn away_from_zero(rng: &mut SplitMix, shape: Shape) -> Tensor<f64> {
    let data = (0..shape.len())
        .map(|_| {
            let mag = rng.uniform(0.05, 1.5);
            if rng.below(2) == 0 { mag } else { -mag }
        })
        .collect();
    Tensor::from_vec(shape, data).unwrap()
}

/// Distinct values spaced far apart relative to the FD step, so window
/// maxima never swap under perturbation.
fn distinct(rng: &mut SplitMix, shape: Shape) -> Tensor<f64> {
    let n = shape.len();
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        order.swap(i, j);
    }
    let data = order.iter().map(|&r| r as f64 * 0.05 - 1.0 + rng.uniform(0.0, 0.01)).collect();
    Tensor::from_vec(shape, data).unwrap()
}

fn random_case(kind: LayerKind, seed: u64) -> Case {
    let mut rng = SplitMix::new(seed ^ 0xA5A5_0000 ^ ((kind as u64) << 40));
    let c = 1 + rng.below(4) as usize;
    let h = 3 + rng.below(6) as usize;
    let w = 3 + rng.below(6) as usize;
    let shape = Shape::new(1, c, h, w);
    let mut case = Case {
        kind,
        input: tensor(&mut rng, shape, -1.0, 1.0),
        params: Vec::new(),
        trainable: 0,
        stride: 1,
        padding: 0,
        window: 0,
        bias: rng.below(2) == 0,
    };
    match kind {
        LayerKind::Conv | LayerKind::Depthwise => {
            let k = [1usize, 3][rng.below(2) as usize];
            case.stride = 1 + rng.below(2) as usize;
            case.padding = rng.below(k as u64 / 2 + 1) as usize;
            let c_out = if kind == LayerKind::Conv { 1 + rng.below(4) as usize } else { c };
            let kc = if kind == LayerKind::Conv { c } else { 1 };
            case.params.push(tensor(&mut rng, Shape::new(c_out, kc, k, k), -1.0, 1.0));
            if case.bias {
                case.params.push(tensor(&mut rng, Shape::new(c_out, 1, 1, 1), -0.5, 0.5));
            }
            case.trainable = case.params.len();
        }
        LayerKind::Pointwise => {
            let c_out = 1 + rng.below(4) as usize;
            case.params.push(tensor(&mut rng, Shape::new(c_out, c, 1, 1), -1.0, 1.0));
            if case.bias {
                case.params.push(tensor(&mut rng, Shape::new(c_out, 1, 1, 1), -0.5, 0.5));
            }
            case.trainable = case.params.len();
        }
        LayerKind::BatchNormTrain | LayerKind::BatchNormInfer => {
            case.params.push(tensor(&mut rng, Shape::new(c, 1, 1, 1), 0.5, 1.5));
            case.params.push(tensor(&mut rng, Shape::new(c, 1, 1, 1), -0.5, 0.5));
            case.params.push(tensor(&mut rng, Shape::new(c, 1, 1, 1), -0.2, 0.2));
            case.params.push(tensor(&mut rng, Shape::new(c, 1, 1, 1), 0.5, 1.5));
            case.trainable = 2;
        }
        LayerKind::Relu => case.input = away_from_zero(&mut rng, shape),
        LayerKind::MaxPool | LayerKind::AvgPool => {
            case.window = 2;
            case.stride = 2;
            let shape = Shape::new(1, c, 2 * (1 + rng.below(4) as usize), 2 * (1 + rng.below(4) as usize));
            case.input = if kind == LayerKind::MaxPool { distinct(&mut rng, shape) } else { tensor(&mut rng, shape, -1.0, 1.0) };
        }
        LayerKind::FullyConnected => {
            let m = 1 + rng.below(5) as usize;
            let d = shape.item_len();
            case.params.push(tensor(&mut rng, Shape::new(m, d, 1, 1), -0.5, 0.5));
            case.params.push(tensor(&mut rng, Shape::new(m, 1, 1, 1), -0.5, 0.5));
            case.trainable = 2;
        }
    }
    case
}

/// Outcome of one randomized gradient check.
#[derive(Clone, Debug)]
pub struct GradReport {
    pub kind: LayerKind,
    pub seed: u64,
    /// Relative error of the input gradient, then of each trainable parameter.
    pub errors: Vec<f64>,
}

impl GradReport {
    pub fn worst(&self) -> f64 {
        self.errors.iter().copied().fold(0.0, f64::max)
    }
}

fn projected_loss(case: &Case, input: &Tensor<f64>, params: &[Tensor<f64>], direction: &[f64]) -> f64 {
    let out = with_layer(case, params, |layer| layer_forward(layer, input)).expect("forward");
    out.data().iter().zip(direction).map(|(y, r)| y * r).sum()
}

/// Runs one randomized finite-difference check of `kind`.
pub fn check_layer(kind: LayerKind, seed: u64) -> GradReport {
    let case = random_case(kind, seed);
    let out = with_layer(&case, &case.params, |layer| layer_forward(layer, &case.input)).expect("forward");
    let mut rng = SplitMix::new(seed.wrapping_mul(31).wrapping_add(7));
    let direction = rng.vec(out.len(), -1.0, 1.0);
    let upstream = Tensor::from_vec(out.shape(), direction.clone()).unwrap();
    let grads = with_layer(&case, &case.params, |layer| layer_backward(layer, &case.input, &upstream)).expect("backward");

    let mut errors = Vec::new();
    let numeric_input = central_diff(
        |x| {
            let probe = Tensor::from_vec(case.input.shape(), x.to_vec()).unwrap();
            projected_loss(&case, &probe, &case.params, &direction)
        },
        case.input.data(),
        STEP,
    );
    errors.push(relative_error(grads.input_grad.data(), &numeric_input));

    assert_eq!(grads.param_grads.len(), case.trainable, "{kind:?}: parameter gradient count");
    for (i, analytic) in grads.param_grads.iter().enumerate() {
        assert_eq!(analytic.shape(), case.params[i].shape(), "{kind:?}: gradient shape of param {i}");
        let numeric = central_diff(
            |p| {
                let mut params = case.params.clone();
                params[i] = Tensor::from_vec(params[i].shape(), p.to_vec()).unwrap();
                projected_loss(&case, &case.input, &params, &direction)
            },
            case.params[i].data(),
            STEP,
        );
        errors.push(relative_error(analytic.data(), &numeric));
    }
    GradReport { kind, seed, errors }
}
