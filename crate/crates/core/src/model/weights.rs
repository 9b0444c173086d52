use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::spec::{Activation, LayerSpec, ModelSpec, PoolWindow};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{PoolMode, Shape, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParamRole {
    /// Convolution kernels or fully-connected weights.
    Weight,
    Bias,
    BnGamma,
    BnBeta,
    RunningMean,
    RunningVar,
}

impl ParamRole {
    /// Updated by gradient descent.
    pub fn trainable(self) -> bool {
        !matches!(self, ParamRole::RunningMean | ParamRole::RunningVar)
    }

    /// Included in the L1/L2 penalty.
    pub fn regularized(self) -> bool {
        self == ParamRole::Weight
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param<T> {
    pub name: String,
    pub role: ParamRole,
    pub tensor: Tensor<T>,
}

/// Learned parameters of a [`ModelSpec`], in layer order.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelWeights<T> {
    /// Seed the weights were initialized from.
    pub seed: u64,
    pub params: Vec<Param<T>>,
}

impl<T: Scalar> ModelWeights<T> {
    pub fn cast<U: Scalar>(&self) -> ModelWeights<U> {
        ModelWeights {
            seed: self.seed,
            params: self
                .params
                .iter()
                .map(|p| Param {
                    name: p.name.clone(),
                    role: p.role,
                    tensor: p.tensor.cast(),
                })
                .collect(),
        }
    }

    pub fn param(&self, name: &str) -> Option<&Param<T>> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Total number of scalar values (trainable or not).
    pub fn len(&self) -> usize {
        self.params.iter().map(|p| p.tensor.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every value zero except running variances, which are one.
    pub fn zeroed(&self) -> Self {
        let mut out = self.clone();
        for p in &mut out.params {
            let v = if p.role == ParamRole::RunningVar { T::one() } else { T::zero() };
            p.tensor.data_mut().fill(v);
        }
        out
    }
}

/// Primitive operation of a compiled network; indices point into
/// [`ModelWeights::params`].
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Op {
    Conv { weight: usize, bias: Option<usize>, stride: usize, padding: usize },
    Depthwise { weight: usize, bias: Option<usize>, stride: usize, padding: usize },
    Pointwise { weight: usize, bias: Option<usize> },
    BatchNorm { gamma: usize, beta: usize, mean: usize, var: usize },
    Relu,
    Pool { mode: PoolMode, window: (usize, usize), stride: (usize, usize) },
    Flatten,
    FullyConnected { weight: usize, bias: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct ParamSlot {
    pub name: String,
    pub role: ParamRole,
    pub shape: Shape,
    pub fan_in: usize,
}

/// A spec lowered to primitive operations plus the parameter layout.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Program {
    pub ops: Vec<Op>,
    pub slots: Vec<ParamSlot>,
}

impl Program {
    pub fn compile(spec: &ModelSpec) -> Result<Self> {
        let plans = spec.plan()?;
        let mut ops = Vec::new();
        let mut slots: Vec<ParamSlot> = Vec::new();
        let mut add = |slots: &mut Vec<ParamSlot>, name: String, role, shape, fan_in| {
            slots.push(ParamSlot { name, role, shape, fan_in });
            slots.len() - 1
        };
        let bn = |slots: &mut Vec<ParamSlot>, prefix: &str, c: usize, add: &mut dyn FnMut(&mut Vec<ParamSlot>, String, ParamRole, Shape, usize) -> usize| {
            let v = Shape::new(c, 1, 1, 1);
            Op::BatchNorm {
                gamma: add(slots, format!("{prefix}.gamma"), ParamRole::BnGamma, v, 0),
                beta: add(slots, format!("{prefix}.beta"), ParamRole::BnBeta, v, 0),
                mean: add(slots, format!("{prefix}.running_mean"), ParamRole::RunningMean, v, 0),
                var: add(slots, format!("{prefix}.running_var"), ParamRole::RunningVar, v, 0),
            }
        };

        for plan in &plans {
            let i = plan.index;
            let c_in = plan.input.c;
            match plan.spec {
                LayerSpec::Conv { kernel, stride, padding, bn: has_bn, bias, activation, .. } => {
                    let c_out = plan.channels;
                    let weight = add(&mut slots, format!("l{i}.conv.weight"), ParamRole::Weight, Shape::new(c_out, c_in, kernel, kernel), c_in * kernel * kernel);
                    let bias = bias.then(|| add(&mut slots, format!("l{i}.conv.bias"), ParamRole::Bias, Shape::new(c_out, 1, 1, 1), 0));
                    ops.push(Op::Conv { weight, bias, stride, padding });
                    if has_bn {
                        ops.push(bn(&mut slots, &format!("l{i}.bn"), c_out, &mut add));
                    }
                    if activation == Activation::Relu {
                        ops.push(Op::Relu);
                    }
                }
                LayerSpec::Separable { kernel, stride, padding, bn: has_bn, bias, activation, .. } => {
                    let c_out = plan.channels;
                    let weight = add(&mut slots, format!("l{i}.dw.weight"), ParamRole::Weight, Shape::new(c_in, 1, kernel, kernel), kernel * kernel);
                    let b = bias.then(|| add(&mut slots, format!("l{i}.dw.bias"), ParamRole::Bias, Shape::new(c_in, 1, 1, 1), 0));
                    ops.push(Op::Depthwise { weight, bias: b, stride, padding });
                    if has_bn {
                        ops.push(bn(&mut slots, &format!("l{i}.dw_bn"), c_in, &mut add));
                    }
                    if activation == Activation::Relu {
                        ops.push(Op::Relu);
                    }
                    let weight = add(&mut slots, format!("l{i}.pw.weight"), ParamRole::Weight, Shape::new(c_out, c_in, 1, 1), c_in);
                    let b = bias.then(|| add(&mut slots, format!("l{i}.pw.bias"), ParamRole::Bias, Shape::new(c_out, 1, 1, 1), 0));
                    ops.push(Op::Pointwise { weight, bias: b });
                    if has_bn {
                        ops.push(bn(&mut slots, &format!("l{i}.pw_bn"), c_out, &mut add));
                    }
                    if activation == Activation::Relu {
                        ops.push(Op::Relu);
                    }
                }
                LayerSpec::MaxPool(w) | LayerSpec::AvgPool(w) => {
                    let mode = if matches!(plan.spec, LayerSpec::MaxPool(_)) { PoolMode::Max } else { PoolMode::Average };
                    let (window, stride) = match w {
                        PoolWindow::Global => ((plan.input.h, plan.input.w), (1, 1)),
                        PoolWindow::Square { size, stride } => ((size, size), (stride, stride)),
                    };
                    ops.push(Op::Pool { mode, window, stride });
                }
                LayerSpec::Flatten => ops.push(Op::Flatten),
                LayerSpec::FullyConnected { units, activation, .. } => {
                    let weight = add(&mut slots, format!("l{i}.fc.weight"), ParamRole::Weight, Shape::new(units, c_in, 1, 1), c_in);
                    let bias = add(&mut slots, format!("l{i}.fc.bias"), ParamRole::Bias, Shape::new(units, 1, 1, 1), 0);
                    ops.push(Op::FullyConnected { weight, bias });
                    if activation == Activation::Relu {
                        ops.push(Op::Relu);
                    }
                }
            }
        }
        Ok(Self { ops, slots })
    }

    /// Checks that `weights` has exactly this program's parameter layout.
    pub fn check<T: Scalar>(&self, weights: &ModelWeights<T>) -> Result<()> {
        if weights.params.len() != self.slots.len() {
            return Err(Error::dim("parameters", self.slots.len(), weights.params.len(), "weights vs model spec"));
        }
        for (slot, p) in self.slots.iter().zip(&weights.params) {
            if slot.name != p.name || slot.role != p.role {
                return Err(Error::config(format!("parameter {:?} found where {:?} expected", p.name, slot.name)));
            }
            if slot.shape != p.tensor.shape() {
                return Err(Error::dim("parameter", slot.shape.len(), p.tensor.len(), format!("{}: {} vs {}", slot.name, p.tensor.shape(), slot.shape)));
            }
        }
        Ok(())
    }
}

/// Initializes weights for `spec`: He-uniform kernels (bound √(6 / fan_in)),
/// zero biases, BN gamma 1 / beta 0, running mean 0 / variance 1.
/// Deterministic in `seed`.
pub fn build_model<T: Scalar>(spec: &ModelSpec, seed: u64) -> Result<ModelWeights<T>> {
    let program = Program::compile(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = program
        .slots
        .iter()
        .map(|slot| {
            let tensor = match slot.role {
                ParamRole::Weight => {
                    let bound = (6.0 / slot.fan_in as f64).sqrt();
                    let data = (0..slot.shape.len()).map(|_| T::lit(rng.gen_range(-bound..bound))).collect();
                    Tensor::from_vec(slot.shape, data)?
                }
                ParamRole::BnGamma | ParamRole::RunningVar => Tensor::filled(slot.shape, T::one()),
                ParamRole::Bias | ParamRole::BnBeta | ParamRole::RunningMean => Tensor::zeros(slot.shape),
            };
            Ok(Param {
                name: slot.name.clone(),
                role: slot.role,
                tensor,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ModelWeights { seed, params })
}
