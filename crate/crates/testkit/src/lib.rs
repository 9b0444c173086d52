//! Reference oracles for the test suites.
//!
//! The numeric oracles work on plain `f64` slices and share no code with the
//! `vigil` kernels they check. [`layers`] wires the finite-difference oracle
//! to each layer kind.

pub mod layers;
pub mod losses;

/// Central finite differences of a scalar function at `x`.
pub fn central_diff<F>(f: F, x: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let plus = f(&probe);
            probe[i] = orig - h;
            let minus = f(&probe);
            probe[i] = orig;
            (plus - minus) / (2.0 * h)
        })
        .collect()
}

/// Norm-wise relative error `‖a − b‖ / max(‖a‖, ‖b‖)`; 0 when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "relative_error: length mismatch");
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = na.max(nb);
    if scale < 1e-12 {
        0.0
    } else {
        diff / scale
    }
}

/// Direct nested-loop cross-correlation over NCHW data with zero padding.
///
/// `groups == 1` is a standard convolution; `groups == c_in` with
/// `c_out == c_in` is a depthwise one.
#[allow(clippy::too_many_arguments)]
pub fn naive_conv2d(
    input: &[f64],
    dims: [usize; 4],
    kernels: &[f64],
    c_out: usize,
    k: usize,
    bias: &[f64],
    stride: usize,
    pad: usize,
    groups: usize,
) -> (Vec<f64>, [usize; 4]) {
    let [n, c_in, h, w] = dims;
    let oh = (h + 2 * pad - k) / stride + 1;
    let ow = (w + 2 * pad - k) / stride + 1;
    let cin_per_group = c_in / groups;
    let cout_per_group = c_out / groups;
    let mut out = vec![0.0; n * c_out * oh * ow];
    for b in 0..n {
        for co in 0..c_out {
            let g = co / cout_per_group;
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = bias.get(co).copied().unwrap_or(0.0);
                    for cig in 0..cin_per_group {
                        let ci = g * cin_per_group + cig;
                        for ky in 0..k {
                            for kx in 0..k {
                                let iy = (oy * stride + ky) as isize - pad as isize;
                                let ix = (ox * stride + kx) as isize - pad as isize;
                                if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                                    continue;
                                }
                                let v = input[((b * c_in + ci) * h + iy as usize) * w + ix as usize];
                                let kw = kernels[((co * cin_per_group + cig) * k + ky) * k + kx];
                                acc += v * kw;
                            }
                        }
                    }
                    out[((b * c_out + co) * oh + oy) * ow + ox] = acc;
                }
            }
        }
    }
    (out, [n, c_out, oh, ow])
}

/// Small deterministic generator so oracles do not depend on the crate's RNG.
#[derive(Clone, Debug)]
pub struct SplitMix(u64);

impl SplitMix {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        lo + (hi - lo) * u
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }

    pub fn vec(&mut self, len: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..len).map(|_| self.uniform(lo, hi)).collect()
    }
}
