use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;

/// Disjoint train/validation index sets covering `0..n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitPlan {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub fraction: f64,
    pub seed: u64,
}

/// `0..n` shuffled by a generator seeded with `seed`.
pub fn shuffled(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx
}

/// Seeded shuffle of `0..n`; the first `round(fraction·n)` indices train.
pub fn split_dataset(n: usize, fraction: f64, seed: u64) -> Result<SplitPlan> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::config(format!("train fraction {fraction} outside [0, 1]")));
    }
    let mut idx = shuffled(n, seed);
    let n_train = (fraction * n as f64).round() as usize;
    let val = idx.split_off(n_train);
    Ok(SplitPlan {
        train: idx,
        val,
        fraction,
        seed,
    })
}

/// `k` folds over a seeded shuffle of `0..n`. Fold sizes differ by at most
/// one and every index validates exactly once.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<SplitPlan>> {
    if k < 2 || k > n {
        return Err(Error::config(format!("k-fold needs 2 <= k <= n, got k = {k}, n = {n}")));
    }
    let idx = shuffled(n, seed);
    let (base, extra) = (n / k, n % k);
    let mut start = 0;
    Ok((0..k)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let val = idx[start..start + len].to_vec();
            let train = idx[..start].iter().chain(&idx[start + len..]).copied().collect();
            start += len;
            SplitPlan {
                train,
                val,
                fraction: (n - len) as f64 / n as f64,
                seed,
            }
        })
        .collect())
}
