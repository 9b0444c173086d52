//! Finite-difference checks of the loss and penalty gradients.

use vigil::train::{bce_with_logit, ce_with_logits, reg_penalty_slice};

use crate::{central_diff, relative_error, SplitMix};

pub const STEP: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossKind {
    CrossEntropy,
    BinaryCrossEntropy,
    Regularization,
}

impl LossKind {
    pub const ALL: [LossKind; 3] = [LossKind::CrossEntropy, LossKind::BinaryCrossEntropy, LossKind::Regularization];
}

/// Relative error between the analytic and numeric gradient of one random
/// case of `kind`.
pub fn check_loss(kind: LossKind, seed: u64) -> f64 {
    let mut rng = SplitMix::new(seed.wrapping_mul(0x2545_F491).wrapping_add(kind as u64));
    match kind {
        LossKind::CrossEntropy => {
            let k = 2 + rng.below(6) as usize;
            let logits = rng.vec(k, -3.0, 3.0);
            let y = rng.below(k as u64) as usize;
            let (_, g) = ce_with_logits(&logits, y);
            relative_error(&g, &central_diff(|z| ce_with_logits(z, y).0, &logits, STEP))
        }
        LossKind::BinaryCrossEntropy => {
            let z = rng.uniform(-4.0, 4.0);
            let y = rng.below(2) as f64;
            let (_, g) = bce_with_logit(z, y);
            relative_error(&[g], &central_diff(|v| bce_with_logit(v[0], y).0, &[z], STEP))
        }
        LossKind::Regularization => {
            // magnitudes of at least 0.1 keep the L1 kink out of the stencil
            let w: Vec<f64> = (0..8).map(|_| rng.uniform(0.1, 2.0) * if rng.below(2) == 0 { 1.0 } else { -1.0 }).collect();
            let (l1, l2) = (rng.uniform(0.0, 0.5), rng.uniform(0.0, 0.5));
            let (_, g) = reg_penalty_slice(&w, l1, l2);
            relative_error(&g, &central_diff(|v| reg_penalty_slice(v, l1, l2).0, &w, STEP))
        }
    }
}
