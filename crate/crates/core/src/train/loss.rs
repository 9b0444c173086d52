use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{Head, ModelWeights};
use crate::scalar::Scalar;
use crate::tensor::{sigmoid, softmax, Shape, Tensor};

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before the log.
pub const PROB_CLAMP: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Loss {
    /// Binary cross-entropy on a single sigmoid logit.
    Bce,
    /// Categorical cross-entropy on softmax logits.
    Ce,
}

impl Loss {
    /// The loss matching a head.
    pub fn for_head(head: Head) -> Self {
        match head {
            Head::SigmoidBinary => Loss::Bce,
            Head::Softmax => Loss::Ce,
        }
    }

    pub fn check_head(self, head: Head) -> Result<()> {
        if Loss::for_head(head) != self {
            return Err(Error::config(format!("loss {self} does not fit a {head:?} head")));
        }
        Ok(())
    }
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Loss::Bce => "bce",
            Loss::Ce => "ce",
        })
    }
}

impl FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "bce" => Ok(Loss::Bce),
            "ce" => Ok(Loss::Ce),
            other => Err(Error::config(format!("unknown loss {other:?} (expected bce or ce)"))),
        }
    }
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// `-[y ln p + (1 - y) ln(1 - p)]` with `p` clamped.
pub fn bce_loss(p: f64, y: f64) -> f64 {
    let p = clamp_prob(p);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

/// Binary cross-entropy of `sigmoid(logit)` and its gradient wrt the logit, `p - y`.
pub fn bce_with_logit<T: Scalar>(logit: T, y: T) -> (f64, T) {
    let p = sigmoid(logit);
    (bce_loss(p.as_f64(), y.as_f64()), p - y)
}

/// `-ln probs[y]` with the probability clamped.
pub fn ce_loss(probs: &[f64], y: usize) -> f64 {
    -clamp_prob(probs[y]).ln()
}

/// Cross-entropy of `softmax(logits)` and its gradient wrt the logits,
/// `p - onehot(y)`.
pub fn ce_with_logits<T: Scalar>(logits: &[T], y: usize) -> (f64, Vec<T>) {
    let mut p = softmax(logits);
    let loss = -clamp_prob(p[y].as_f64()).ln();
    p[y] = p[y] - T::one();
    (loss, p)
}

/// Mean loss over a batch of logits (N×K×1×1) and the gradient of that
/// mean wrt the logits.
pub fn batch_loss<T: Scalar>(loss: Loss, logits: &Tensor<T>, labels: &[usize]) -> Result<(f64, Tensor<T>)> {
    let s = logits.shape();
    if labels.len() != s.n {
        return Err(Error::dim("labels", s.n, labels.len(), "one label per batch item"));
    }
    let k = s.item_len();
    let scale = T::lit(1.0 / s.n as f64);
    let mut grad = Vec::with_capacity(s.n * k);
    let mut total = 0.0;
    for (n, &y) in labels.iter().enumerate() {
        let row = logits.item(n);
        let (l, g) = match loss {
            Loss::Bce => {
                if k != 1 || y > 1 {
                    return Err(Error::config(format!("bce needs one logit and labels in {{0, 1}}, got {k} logits, label {y}")));
                }
                let (l, g) = bce_with_logit(row[0], T::lit(y as f64));
                (l, vec![g])
            }
            Loss::Ce => {
                if y >= k {
                    return Err(Error::config(format!("label {y} outside {k} classes")));
                }
                ce_with_logits(row, y)
            }
        };
        total += l;
        grad.extend(g.into_iter().map(|v| v * scale));
    }
    Ok((total / s.n as f64, Tensor::from_vec(Shape::new(s.n, k, 1, 1), grad)?))
}

fn sign(w: f64) -> f64 {
    if w > 0.0 {
        1.0
    } else if w < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `l1·Σ|w| + ½·l2·Σw²` and its gradient `l1·sign(w) + l2·w` (sign(0) = 0).
pub fn reg_penalty_slice<T: Scalar>(weights: &[T], l1: f64, l2: f64) -> (f64, Vec<T>) {
    let mut abs = 0.0;
    let mut sq = 0.0;
    let grad = weights
        .iter()
        .map(|&w| {
            let w = w.as_f64();
            abs += w.abs();
            sq += w * w;
            T::lit(l1 * sign(w) + l2 * w)
        })
        .collect();
    (l1 * abs + 0.5 * l2 * sq, grad)
}

/// Regularization over the conv and fully-connected weights of a model.
/// Returns the penalty and one gradient per parameter (zero for biases,
/// batch-norm parameters and running statistics).
pub fn reg_penalty<T: Scalar>(weights: &ModelWeights<T>, l1: f64, l2: f64) -> (f64, Vec<Tensor<T>>) {
    let mut total = 0.0;
    let grads = weights
        .params
        .iter()
        .map(|p| {
            if p.role.regularized() && (l1 != 0.0 || l2 != 0.0) {
                let (v, g) = reg_penalty_slice(p.tensor.data(), l1, l2);
                total += v;
                Tensor::from_vec(p.tensor.shape(), g).expect("same length")
            } else {
                Tensor::zeros(p.tensor.shape())
            }
        })
        .collect();
    (total, grads)
}
