use super::conv::check_grad_shape;
use super::{LayerGrads, Shape, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PoolMode {
    Max,
    Average,
}

/// Output extent of an unpadded pooling window; the windows must tile the
/// input exactly.
pub fn pool_output_extent(size: usize, window: usize, stride: usize) -> Result<usize> {
    if window == 0 || stride == 0 {
        return Err(Error::config("pool window and stride must be positive"));
    }
    if size < window || (size - window) % stride != 0 {
        return Err(Error::config(format!(
            "pool window {window} / stride {stride} does not tile extent {size}"
        )));
    }
    Ok((size - window) / stride + 1)
}

fn out_shape(s: Shape, window: (usize, usize), stride: (usize, usize)) -> Result<Shape> {
    Ok(Shape::new(
        s.n,
        s.c,
        pool_output_extent(s.h, window.0, stride.0)?,
        pool_output_extent(s.w, window.1, stride.1)?,
    ))
}

/// Square-window pooling.
pub fn pool2d<T: Scalar>(input: &Tensor<T>, mode: PoolMode, window: usize, stride: usize) -> Result<Tensor<T>> {
    pool2d_rect(input, mode, (window, window), (stride, stride))
}

/// Pooling with independent (height, width) windows and strides; a window
/// equal to the input extent gives global pooling.
pub fn pool2d_rect<T: Scalar>(
    input: &Tensor<T>,
    mode: PoolMode,
    window: (usize, usize),
    stride: (usize, usize),
) -> Result<Tensor<T>> {
    let s = input.shape();
    let os = out_shape(s, window, stride)?;
    let x = input.data();
    let area = T::lit((window.0 * window.1) as f64);
    let mut out = Vec::with_capacity(os.len());
    for b in 0..s.n {
        for c in 0..s.c {
            let plane = &x[(b * s.c + c) * s.plane()..(b * s.c + c + 1) * s.plane()];
            for oy in 0..os.h {
                for ox in 0..os.w {
                    let mut acc = match mode {
                        PoolMode::Max => T::neg_infinity(),
                        PoolMode::Average => T::zero(),
                    };
                    for wy in 0..window.0 {
                        let row = (oy * stride.0 + wy) * s.w + ox * stride.1;
                        for &v in &plane[row..row + window.1] {
                            acc = match mode {
                                PoolMode::Max => acc.max(v),
                                PoolMode::Average => acc + v,
                            };
                        }
                    }
                    out.push(match mode {
                        PoolMode::Max => acc,
                        PoolMode::Average => acc / area,
                    });
                }
            }
        }
    }
    Tensor::from_vec(os, out)
}

/// Gradient of pooling. Max pooling routes each upstream value to the first
/// maximal element of its window.
pub fn pool2d_backward<T: Scalar>(
    input: &Tensor<T>,
    mode: PoolMode,
    window: (usize, usize),
    stride: (usize, usize),
    upstream: &Tensor<T>,
) -> Result<LayerGrads<T>> {
    let s = input.shape();
    let os = out_shape(s, window, stride)?;
    check_grad_shape(upstream, os, "pool2d")?;
    let x = input.data();
    let up = upstream.data();
    let area = T::lit((window.0 * window.1) as f64);
    let mut dx = vec![T::zero(); x.len()];
    for b in 0..s.n {
        for c in 0..s.c {
            let base = (b * s.c + c) * s.plane();
            for oy in 0..os.h {
                for ox in 0..os.w {
                    let g = up[((b * s.c + c) * os.h + oy) * os.w + ox];
                    match mode {
                        PoolMode::Max => {
                            let mut best = base + oy * stride.0 * s.w + ox * stride.1;
                            for wy in 0..window.0 {
                                for wx in 0..window.1 {
                                    let i = base + (oy * stride.0 + wy) * s.w + ox * stride.1 + wx;
                                    if x[i] > x[best] {
                                        best = i;
                                    }
                                }
                            }
                            dx[best] = dx[best] + g;
                        }
                        PoolMode::Average => {
                            let share = g / area;
                            for wy in 0..window.0 {
                                for wx in 0..window.1 {
                                    let i = base + (oy * stride.0 + wy) * s.w + ox * stride.1 + wx;
                                    dx[i] = dx[i] + share;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(LayerGrads {
        input_grad: Tensor { shape: s, data: dx },
        param_grads: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Tensor<f32> {
        Tensor::from_vec(Shape::new(1, 1, 2, 2), vec![1.0, 2.0, 3.0, 4.0]).unwrap()
    }

    #[test]
    fn max_and_average_of_2x2() {
        assert_eq!(pool2d(&square(), PoolMode::Max, 2, 2).unwrap().data(), &[4.0]);
        assert_eq!(pool2d(&square(), PoolMode::Average, 2, 2).unwrap().data(), &[2.5]);
    }

    #[test]
    fn constant_input_is_preserved() {
        let input = Tensor::filled(Shape::new(2, 3, 4, 6), 1.75f32);
        for mode in [PoolMode::Max, PoolMode::Average] {
            let out = pool2d(&input, mode, 2, 2).unwrap();
            assert_eq!(out.shape(), Shape::new(2, 3, 2, 3));
            assert!(out.data().iter().all(|&v| v == 1.75));
        }
    }

    #[test]
    fn non_tiling_window_is_config_error() {
        let input = Tensor::<f32>::zeros(Shape::new(1, 1, 5, 5));
        assert!(matches!(pool2d(&input, PoolMode::Max, 2, 2), Err(Error::Config(_))));
        assert!(pool2d(&input, PoolMode::Max, 3, 2).is_ok());
    }

    #[test]
    fn global_rectangular_average() {
        let input = Tensor::from_vec(Shape::new(1, 1, 2, 3), vec![1.0f32, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let out = pool2d_rect(&input, PoolMode::Average, (2, 3), (1, 1)).unwrap();
        assert_eq!(out.data(), &[3.5]);
    }

    #[test]
    fn max_backward_routes_to_first_max() {
        let input = Tensor::from_vec(Shape::new(1, 1, 2, 2), vec![4.0f32, 1.0, 4.0, 0.0]).unwrap();
        let up = Tensor::from_vec(Shape::new(1, 1, 1, 1), vec![3.0]).unwrap();
        let g = pool2d_backward(&input, PoolMode::Max, (2, 2), (2, 2), &up).unwrap();
        assert_eq!(g.input_grad.data(), &[3.0, 0.0, 0.0, 0.0]);
    }
}
