use rayon::prelude::*;

use super::{LayerGrads, Shape, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Output extent of a convolution along one axis: `(size + 2·pad − k) / stride + 1`,
/// rounded down when the last window does not fit exactly.
pub fn conv_output_extent(size: usize, k: usize, stride: usize, padding: usize) -> Result<usize> {
    if stride == 0 {
        return Err(Error::config("stride must be positive"));
    }
    let padded = size + 2 * padding;
    if padded < k {
        return Err(Error::config(format!(
            "kernel {k} larger than padded extent {padded} (size {size}, padding {padding})"
        )));
    }
    Ok((padded - k) / stride + 1)
}

/// Range of output positions whose source coordinate `o·stride + tap − pad`
/// falls inside `[0, in_len)`.
#[inline]
fn valid_outputs(out_len: usize, in_len: usize, stride: usize, tap: usize, pad: usize) -> (usize, usize) {
    let lo = if pad > tap { (pad - tap).div_ceil(stride) } else { 0 };
    let limit = in_len + pad;
    let hi = if limit > tap { ((limit - tap - 1) / stride + 1).min(out_len) } else { 0 };
    (lo, hi.max(lo))
}

#[derive(Clone, Copy)]
struct Geometry {
    n: usize,
    c_in: usize,
    h: usize,
    w: usize,
    c_out: usize,
    k: usize,
    oh: usize,
    ow: usize,
    stride: usize,
    pad: usize,
    depthwise: bool,
}

impl Geometry {
    /// Input channels feeding output channel `co`, and the kernel's channel slot count.
    #[inline]
    fn sources(&self, co: usize) -> std::ops::Range<usize> {
        if self.depthwise {
            co..co + 1
        } else {
            0..self.c_in
        }
    }

    #[inline]
    fn kernel_channels(&self) -> usize {
        if self.depthwise {
            1
        } else {
            self.c_in
        }
    }

    #[inline]
    fn kernel_offset(&self, co: usize, ci: usize, ky: usize, kx: usize) -> usize {
        let slot = if self.depthwise { 0 } else { ci };
        ((co * self.kernel_channels() + slot) * self.k + ky) * self.k + kx
    }

    fn output_shape(&self) -> Shape {
        Shape::new(self.n, self.c_out, self.oh, self.ow)
    }
}

fn geometry<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    bias: Option<&[T]>,
    stride: usize,
    padding: usize,
    depthwise: bool,
    op: &str,
) -> Result<Geometry> {
    let is = input.shape();
    let ks = kernels.shape();
    if ks.h != ks.w {
        return Err(Error::dim("kernel width", ks.h, ks.w, format!("{op}: kernels must be square")));
    }
    let k = ks.h;
    if !matches!(k, 1 | 3 | 5) {
        return Err(Error::config(format!("{op}: kernel size {k} not in {{1, 3, 5}}")));
    }
    let c_out = ks.n;
    if depthwise {
        if ks.c != 1 {
            return Err(Error::dim("kernel channels", 1, ks.c, format!("{op}: one kernel per input channel")));
        }
        if c_out != is.c {
            return Err(Error::dim("channels", is.c, c_out, format!("{op}: kernel count vs input channels")));
        }
    } else if ks.c != is.c {
        return Err(Error::dim("channels", ks.c, is.c, format!("{op}: input channels vs kernel C_in")));
    }
    if let Some(b) = bias {
        if b.len() != c_out {
            return Err(Error::dim("bias", c_out, b.len(), format!("{op}: bias length")));
        }
    }
    let oh = conv_output_extent(is.h, k, stride, padding)?;
    let ow = conv_output_extent(is.w, k, stride, padding)?;
    Ok(Geometry {
        n: is.n,
        c_in: is.c,
        h: is.h,
        w: is.w,
        c_out,
        k,
        oh,
        ow,
        stride,
        pad: padding,
        depthwise,
    })
}

fn forward_impl<T: Scalar>(g: Geometry, input: &[T], kernels: &[T], bias: Option<&[T]>) -> Vec<T> {
    let out_plane = g.oh * g.ow;
    let in_plane = g.h * g.w;
    let mut out = vec![T::zero(); g.n * g.c_out * out_plane];
    if out.is_empty() {
        return out;
    }
    out.par_chunks_mut(g.c_out * out_plane).enumerate().for_each(|(b, out_n)| {
        for co in 0..g.c_out {
            let plane = &mut out_n[co * out_plane..(co + 1) * out_plane];
            plane.fill(bias.map_or(T::zero(), |bv| bv[co]));
            for ci in g.sources(co) {
                let src = &input[(b * g.c_in + ci) * in_plane..(b * g.c_in + ci + 1) * in_plane];
                for ky in 0..g.k {
                    let (y0, y1) = valid_outputs(g.oh, g.h, g.stride, ky, g.pad);
                    for kx in 0..g.k {
                        let (x0, x1) = valid_outputs(g.ow, g.w, g.stride, kx, g.pad);
                        let wv = kernels[g.kernel_offset(co, ci, ky, kx)];
                        for oy in y0..y1 {
                            let iy = oy * g.stride + ky - g.pad;
                            let row = &src[iy * g.w..(iy + 1) * g.w];
                            let dst = &mut plane[oy * g.ow..(oy + 1) * g.ow];
                            for ox in x0..x1 {
                                dst[ox] = dst[ox] + wv * row[ox * g.stride + kx - g.pad];
                            }
                        }
                    }
                }
            }
        }
    });
    out
}

fn backward_impl<T: Scalar>(
    g: Geometry,
    input: &[T],
    kernels: &[T],
    upstream: &[T],
    with_bias: bool,
) -> (Vec<T>, Vec<T>, Option<Vec<T>>) {
    let out_plane = g.oh * g.ow;
    let in_plane = g.h * g.w;

    let mut input_grad = vec![T::zero(); g.n * g.c_in * in_plane];
    if !input_grad.is_empty() {
        input_grad.par_chunks_mut(g.c_in * in_plane).enumerate().for_each(|(b, din_n)| {
            for co in 0..g.c_out {
                let up = &upstream[(b * g.c_out + co) * out_plane..(b * g.c_out + co + 1) * out_plane];
                for ci in g.sources(co) {
                    let dst = &mut din_n[ci * in_plane..(ci + 1) * in_plane];
                    for ky in 0..g.k {
                        let (y0, y1) = valid_outputs(g.oh, g.h, g.stride, ky, g.pad);
                        for kx in 0..g.k {
                            let (x0, x1) = valid_outputs(g.ow, g.w, g.stride, kx, g.pad);
                            let wv = kernels[g.kernel_offset(co, ci, ky, kx)];
                            for oy in y0..y1 {
                                let iy = oy * g.stride + ky - g.pad;
                                for ox in x0..x1 {
                                    let ix = ox * g.stride + kx - g.pad;
                                    dst[iy * g.w + ix] = dst[iy * g.w + ix] + wv * up[oy * g.ow + ox];
                                }
                            }
                        }
                    }
                }
            }
        });
    }

    let per_co = g.kernel_channels() * g.k * g.k;
    let mut kernel_grad = vec![T::zero(); g.c_out * per_co];
    kernel_grad.par_chunks_mut(per_co).enumerate().for_each(|(co, dk)| {
        for ci in g.sources(co) {
            for ky in 0..g.k {
                let (y0, y1) = valid_outputs(g.oh, g.h, g.stride, ky, g.pad);
                for kx in 0..g.k {
                    let (x0, x1) = valid_outputs(g.ow, g.w, g.stride, kx, g.pad);
                    let mut acc = T::zero();
                    for b in 0..g.n {
                        let up = &upstream[(b * g.c_out + co) * out_plane..];
                        let src = &input[(b * g.c_in + ci) * in_plane..];
                        for oy in y0..y1 {
                            let iy = oy * g.stride + ky - g.pad;
                            for ox in x0..x1 {
                                let ix = ox * g.stride + kx - g.pad;
                                acc = acc + up[oy * g.ow + ox] * src[iy * g.w + ix];
                            }
                        }
                    }
                    let slot = if g.depthwise { 0 } else { ci };
                    dk[(slot * g.k + ky) * g.k + kx] = acc;
                }
            }
        }
    });

    let bias_grad = with_bias.then(|| {
        (0..g.c_out)
            .map(|co| {
                let mut acc = T::zero();
                for b in 0..g.n {
                    for &v in &upstream[(b * g.c_out + co) * out_plane..(b * g.c_out + co + 1) * out_plane] {
                        acc = acc + v;
                    }
                }
                acc
            })
            .collect()
    });

    (input_grad, kernel_grad, bias_grad)
}

fn check_upstream<T: Scalar>(upstream: &Tensor<T>, expected: Shape, op: &str) -> Result<()> {
    let s = upstream.shape();
    let pairs = [("batch", expected.n, s.n), ("channels", expected.c, s.c), ("height", expected.h, s.h), ("width", expected.w, s.w)];
    for (axis, e, a) in pairs {
        if e != a {
            return Err(Error::dim(axis, e, a, format!("{op}: upstream gradient")));
        }
    }
    Ok(())
}

pub(super) fn check_grad_shape<T: Scalar>(upstream: &Tensor<T>, expected: Shape, op: &str) -> Result<()> {
    check_upstream(upstream, expected, op)
}

fn assemble<T: Scalar>(
    g: Geometry,
    kernel_shape: Shape,
    (din, dk, db): (Vec<T>, Vec<T>, Option<Vec<T>>),
) -> LayerGrads<T> {
    let mut param_grads = vec![Tensor { shape: kernel_shape, data: dk }];
    if let Some(db) = db {
        param_grads.push(Tensor::vector(db));
    }
    LayerGrads {
        input_grad: Tensor {
            shape: Shape::new(g.n, g.c_in, g.h, g.w),
            data: din,
        },
        param_grads,
    }
}

/// Standard 2-D cross-correlation with zero padding.
///
/// `kernels` is `C_out × C_in × k × k`; a missing bias is treated as zero.
pub fn conv2d_forward<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    bias: Option<&[T]>,
    stride: usize,
    padding: usize,
) -> Result<Tensor<T>> {
    let g = geometry(input, kernels, bias, stride, padding, false, "conv2d")?;
    let data = forward_impl(g, input.data(), kernels.data(), bias);
    Ok(Tensor { shape: g.output_shape(), data })
}

/// Per-channel spatial convolution; `kernels` is `C × 1 × k × k`.
pub fn depthwise_conv2d_forward<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    bias: Option<&[T]>,
    stride: usize,
    padding: usize,
) -> Result<Tensor<T>> {
    let g = geometry(input, kernels, bias, stride, padding, true, "depthwise_conv2d")?;
    let data = forward_impl(g, input.data(), kernels.data(), bias);
    Ok(Tensor { shape: g.output_shape(), data })
}

/// 1×1 convolution: a per-pixel linear map across channels.
///
/// Accumulates `bias + Σ_ci w·x` in ascending channel order, the same order
/// the general convolution uses, so both agree bitwise.
pub fn pointwise_conv2d_forward<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    bias: Option<&[T]>,
) -> Result<Tensor<T>> {
    let ks = kernels.shape();
    if ks.h != 1 || ks.w != 1 {
        return Err(Error::dim("kernel height", 1, ks.h, "pointwise_conv2d: kernels must be 1x1"));
    }
    let g = geometry(input, kernels, bias, 1, 0, false, "pointwise_conv2d")?;
    let plane = g.h * g.w;
    let x = input.data();
    let wts = kernels.data();
    let mut out = vec![T::zero(); g.n * g.c_out * plane];
    if !out.is_empty() {
        out.par_chunks_mut(g.c_out * plane).enumerate().for_each(|(b, out_n)| {
            let src = &x[b * g.c_in * plane..(b + 1) * g.c_in * plane];
            for co in 0..g.c_out {
                let row = &wts[co * g.c_in..(co + 1) * g.c_in];
                let start = bias.map_or(T::zero(), |bv| bv[co]);
                for p in 0..plane {
                    let mut acc = start;
                    for (ci, &wv) in row.iter().enumerate() {
                        acc = acc + wv * src[ci * plane + p];
                    }
                    out_n[co * plane + p] = acc;
                }
            }
        });
    }
    Ok(Tensor { shape: g.output_shape(), data: out })
}

/// Gradients of [`conv2d_forward`]: `param_grads = [d_kernels, d_bias?]`.
pub fn conv2d_backward<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    with_bias: bool,
    stride: usize,
    padding: usize,
    upstream: &Tensor<T>,
) -> Result<LayerGrads<T>> {
    let g = geometry(input, kernels, None, stride, padding, false, "conv2d")?;
    check_upstream(upstream, g.output_shape(), "conv2d")?;
    let parts = backward_impl(g, input.data(), kernels.data(), upstream.data(), with_bias);
    Ok(assemble(g, kernels.shape(), parts))
}

pub fn depthwise_conv2d_backward<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    with_bias: bool,
    stride: usize,
    padding: usize,
    upstream: &Tensor<T>,
) -> Result<LayerGrads<T>> {
    let g = geometry(input, kernels, None, stride, padding, true, "depthwise_conv2d")?;
    check_upstream(upstream, g.output_shape(), "depthwise_conv2d")?;
    let parts = backward_impl(g, input.data(), kernels.data(), upstream.data(), with_bias);
    Ok(assemble(g, kernels.shape(), parts))
}

pub fn pointwise_conv2d_backward<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    with_bias: bool,
    upstream: &Tensor<T>,
) -> Result<LayerGrads<T>> {
    conv2d_backward(input, kernels, with_bias, 1, 0, upstream)
}
