use super::conv::check_grad_shape;
use super::{LayerGrads, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default batch-norm epsilon.
pub const BN_EPSILON: f64 = 1e-5;
/// Weight of the current batch in the running-statistics moving average.
pub const BN_MOMENTUM: f64 = 0.1;

fn check_params<T: Scalar>(input: &Tensor<T>, params: &[(&'static str, usize)], epsilon: T) -> Result<()> {
    let c = input.shape().c;
    for &(axis, len) in params {
        if len != c {
            return Err(Error::dim(axis, c, len, "batchnorm: per-channel parameter length"));
        }
    }
    if !(epsilon > T::zero()) {
        return Err(Error::config("batchnorm: epsilon must be positive"));
    }
    Ok(())
}

/// Per-channel batch mean and biased variance over (N, H, W).
fn batch_stats<T: Scalar>(input: &Tensor<T>) -> (Vec<T>, Vec<T>) {
    let s = input.shape();
    let plane = s.plane();
    let count = T::lit((s.n * plane) as f64);
    let x = input.data();
    let mut mean = vec![T::zero(); s.c];
    let mut var = vec![T::zero(); s.c];
    for c in 0..s.c {
        let mut acc = T::zero();
        for b in 0..s.n {
            for &v in &x[(b * s.c + c) * plane..(b * s.c + c + 1) * plane] {
                acc = acc + v;
            }
        }
        let m = acc / count;
        let mut sq = T::zero();
        for b in 0..s.n {
            for &v in &x[(b * s.c + c) * plane..(b * s.c + c + 1) * plane] {
                let d = v - m;
                sq = sq + d * d;
            }
        }
        mean[c] = m;
        var[c] = sq / count;
    }
    (mean, var)
}

fn normalize<T: Scalar>(input: &Tensor<T>, gamma: &[T], beta: &[T], mean: &[T], var: &[T], epsilon: T) -> Tensor<T> {
    let s = input.shape();
    let plane = s.plane();
    let mut out = input.clone();
    let y = out.data_mut();
    for c in 0..s.c {
        let inv = (var[c] + epsilon).sqrt().recip();
        for b in 0..s.n {
            for v in &mut y[(b * s.c + c) * plane..(b * s.c + c + 1) * plane] {
                *v = gamma[c] * ((*v - mean[c]) * inv) + beta[c];
            }
        }
    }
    out
}

/// Batch normalization over (N, H, W) per channel.
///
/// In training mode the batch statistics normalize the input and are folded
/// into `running_mean` / `running_var` with momentum [`BN_MOMENTUM`] (the
/// running variance uses the unbiased batch estimate). In inference mode the
/// running statistics are used and left untouched.
#[allow(clippy::too_many_arguments)]
pub fn batchnorm_forward<T: Scalar>(
    input: &Tensor<T>,
    gamma: &[T],
    beta: &[T],
    running_mean: &mut [T],
    running_var: &mut [T],
    epsilon: T,
    training: bool,
) -> Result<Tensor<T>> {
    check_params(
        input,
        &[("gamma", gamma.len()), ("beta", beta.len()), ("running_mean", running_mean.len()), ("running_var", running_var.len())],
        epsilon,
    )?;
    if !training {
        return Ok(normalize(input, gamma, beta, running_mean, running_var, epsilon));
    }
    let s = input.shape();
    let count = s.n * s.plane();
    if count < 2 {
        return Err(Error::config(format!(
            "batchnorm: training needs at least 2 values per channel, got {count} (shape {s})"
        )));
    }
    let (mean, var) = batch_stats(input);
    let momentum = T::lit(BN_MOMENTUM);
    let keep = T::one() - momentum;
    let unbias = T::lit(count as f64 / (count - 1) as f64);
    for c in 0..s.c {
        running_mean[c] = keep * running_mean[c] + momentum * mean[c];
        running_var[c] = keep * running_var[c] + momentum * (var[c] * unbias);
    }
    Ok(normalize(input, gamma, beta, &mean, &var, epsilon))
}

/// Training-mode forward without touching running statistics.
pub(super) fn batchnorm_train_output<T: Scalar>(input: &Tensor<T>, gamma: &[T], beta: &[T], epsilon: T) -> Result<Tensor<T>> {
    check_params(input, &[("gamma", gamma.len()), ("beta", beta.len())], epsilon)?;
    let s = input.shape();
    if s.n * s.plane() < 2 {
        return Err(Error::config("batchnorm: training needs at least 2 values per channel"));
    }
    let (mean, var) = batch_stats(input);
    Ok(normalize(input, gamma, beta, &mean, &var, epsilon))
}

/// Gradients of batch normalization: `param_grads = [d_gamma, d_beta]`.
///
/// In training mode the batch statistics are recomputed from `input` and
/// differentiated through; in inference mode the running statistics are
/// constants.
#[allow(clippy::too_many_arguments)]
pub fn batchnorm_backward<T: Scalar>(
    input: &Tensor<T>,
    gamma: &[T],
    running_mean: &[T],
    running_var: &[T],
    epsilon: T,
    training: bool,
    upstream: &Tensor<T>,
) -> Result<LayerGrads<T>> {
    check_params(input, &[("gamma", gamma.len())], epsilon)?;
    check_grad_shape(upstream, input.shape(), "batchnorm")?;
    let s = input.shape();
    let plane = s.plane();
    let (mean, var) = if training {
        if s.n * plane < 2 {
            return Err(Error::config("batchnorm: training needs at least 2 values per channel"));
        }
        batch_stats(input)
    } else {
        check_params(input, &[("running_mean", running_mean.len()), ("running_var", running_var.len())], epsilon)?;
        (running_mean.to_vec(), running_var.to_vec())
    };
    let x = input.data();
    let up = upstream.data();
    let count = T::lit((s.n * plane) as f64);
    let mut dx = vec![T::zero(); x.len()];
    let mut dgamma = vec![T::zero(); s.c];
    let mut dbeta = vec![T::zero(); s.c];

    for c in 0..s.c {
        let inv = (var[c] + epsilon).sqrt().recip();
        let mut sum_up = T::zero();
        let mut sum_up_xhat = T::zero();
        for b in 0..s.n {
            let base = (b * s.c + c) * plane;
            for i in base..base + plane {
                let xhat = (x[i] - mean[c]) * inv;
                sum_up = sum_up + up[i];
                sum_up_xhat = sum_up_xhat + up[i] * xhat;
            }
        }
        dgamma[c] = sum_up_xhat;
        dbeta[c] = sum_up;
        let g = gamma[c];
        for b in 0..s.n {
            let base = (b * s.c + c) * plane;
            for i in base..base + plane {
                dx[i] = if training {
                    let xhat = (x[i] - mean[c]) * inv;
                    g * inv / count * (count * up[i] - sum_up - xhat * sum_up_xhat)
                } else {
                    g * inv * up[i]
                };
            }
        }
    }

    Ok(LayerGrads {
        input_grad: Tensor { shape: s, data: dx },
        param_grads: vec![Tensor::vector(dgamma), Tensor::vector(dbeta)],
    })
}
