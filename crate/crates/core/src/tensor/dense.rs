use super::conv::check_grad_shape;
use super::{LayerGrads, Shape, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub fn relu<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    input.map(|v| v.max(T::zero()))
}

pub fn relu_backward<T: Scalar>(input: &Tensor<T>, upstream: &Tensor<T>) -> Result<LayerGrads<T>> {
    check_grad_shape(upstream, input.shape(), "relu")?;
    let data = input
        .data()
        .iter()
        .zip(upstream.data())
        .map(|(&x, &g)| if x > T::zero() { g } else { T::zero() })
        .collect();
    Ok(LayerGrads {
        input_grad: Tensor { shape: input.shape(), data },
        param_grads: Vec::new(),
    })
}

fn fc_dims<T: Scalar>(input: &Tensor<T>, weights: &Tensor<T>, bias_len: Option<usize>) -> Result<(usize, usize, usize)> {
    let features = input.shape().item_len();
    let ws = weights.shape();
    if ws.item_len() != features {
        return Err(Error::dim("features", ws.item_len(), features, "fully_connected: weight columns vs flattened input"));
    }
    if let Some(len) = bias_len {
        if len != ws.n {
            return Err(Error::dim("bias", ws.n, len, "fully_connected: bias length"));
        }
    }
    Ok((input.shape().n, features, ws.n))
}

/// `y = W·x + b` per batch row. The input is flattened item-wise; `weights`
/// is `M × D` (stored `M × D × 1 × 1`) and the result is `N × M × 1 × 1`.
pub fn fully_connected_forward<T: Scalar>(input: &Tensor<T>, weights: &Tensor<T>, bias: &[T]) -> Result<Tensor<T>> {
    let (n, d, m) = fc_dims(input, weights, Some(bias.len()))?;
    let x = input.data();
    let w = weights.data();
    let mut out = Vec::with_capacity(n * m);
    for b in 0..n {
        let row = &x[b * d..(b + 1) * d];
        for (j, &bj) in bias.iter().enumerate() {
            let mut acc = bj;
            for (&wv, &xv) in w[j * d..(j + 1) * d].iter().zip(row) {
                acc = acc + wv * xv;
            }
            out.push(acc);
        }
    }
    Tensor::from_vec(Shape::new(n, m, 1, 1), out)
}

/// Gradients of [`fully_connected_forward`]: `param_grads = [d_weights, d_bias]`.
/// The input gradient has the (unflattened) input shape.
pub fn fully_connected_backward<T: Scalar>(input: &Tensor<T>, weights: &Tensor<T>, upstream: &Tensor<T>) -> Result<LayerGrads<T>> {
    let (n, d, m) = fc_dims(input, weights, None)?;
    check_grad_shape(upstream, Shape::new(n, m, 1, 1), "fully_connected")?;
    let x = input.data();
    let w = weights.data();
    let up = upstream.data();

    let mut dx = vec![T::zero(); n * d];
    for b in 0..n {
        let dst = &mut dx[b * d..(b + 1) * d];
        for j in 0..m {
            let g = up[b * m + j];
            for (o, &wv) in dst.iter_mut().zip(&w[j * d..(j + 1) * d]) {
                *o = *o + g * wv;
            }
        }
    }
    let mut dw = vec![T::zero(); m * d];
    let mut db = vec![T::zero(); m];
    for b in 0..n {
        let row = &x[b * d..(b + 1) * d];
        for j in 0..m {
            let g = up[b * m + j];
            db[j] = db[j] + g;
            for (o, &xv) in dw[j * d..(j + 1) * d].iter_mut().zip(row) {
                *o = *o + g * xv;
            }
        }
    }
    Ok(LayerGrads {
        input_grad: Tensor { shape: input.shape(), data: dx },
        param_grads: vec![Tensor { shape: weights.shape(), data: dw }, Tensor::vector(db)],
    })
}

/// Softmax with the maximum logit subtracted before exponentiation.
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_values_and_idempotence() {
        let t = Tensor::vector(vec![-1.0f32, 0.0, 2.0]);
        let r = relu(&t);
        assert_eq!(r.data(), &[0.0, 0.0, 2.0]);
        assert_eq!(relu(&r), r);
    }

    #[test]
    fn relu_backward_masks() {
        let x = Tensor::vector(vec![-1.0f32, 2.0]);
        let up = Tensor::vector(vec![5.0, 7.0]);
        assert_eq!(relu_backward(&x, &up).unwrap().input_grad.data(), &[0.0, 7.0]);
    }

    #[test]
    fn fc_hand_evaluation() {
        let x = Tensor::from_vec(Shape::new(1, 2, 1, 1), vec![1.0f32, 2.0]).unwrap();
        let w = Tensor::from_vec(Shape::new(1, 2, 1, 1), vec![3.0, 4.0]).unwrap();
        let y = fully_connected_forward(&x, &w, &[5.0]).unwrap();
        assert_eq!(y.data(), &[16.0]);

        let up = Tensor::from_vec(Shape::new(1, 1, 1, 1), vec![1.0]).unwrap();
        let g = fully_connected_backward(&x, &w, &up).unwrap();
        assert_eq!(g.param_grads[0].data(), &[1.0, 2.0]);
        assert_eq!(g.param_grads[1].data(), &[1.0]);
        assert_eq!(g.input_grad.data(), &[3.0, 4.0]);
    }

    #[test]
    fn fc_identity_and_zero_input() {
        let x = Tensor::from_vec(Shape::new(2, 3, 1, 1), vec![1.0f32, -2.0, 0.5, 4.0, 0.0, 9.0]).unwrap();
        let mut w = Tensor::zeros(Shape::new(3, 3, 1, 1));
        for i in 0..3 {
            w.data_mut()[i * 3 + i] = 1.0;
        }
        assert_eq!(fully_connected_forward(&x, &w, &[0.0; 3]).unwrap().data(), x.data());
        let zero = Tensor::zeros(Shape::new(1, 3, 1, 1));
        assert_eq!(fully_connected_forward(&zero, &w, &[1.0, 2.0, 3.0]).unwrap().data(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn fc_feature_mismatch() {
        let x = Tensor::<f32>::zeros(Shape::new(1, 2, 2, 2));
        let w = Tensor::zeros(Shape::new(3, 7, 1, 1));
        assert!(matches!(
            fully_connected_forward(&x, &w, &[0.0; 3]),
            Err(Error::Dimension { axis: "features", expected: 7, actual: 8, .. })
        ));
    }

    #[test]
    fn softmax_examples() {
        let p = softmax(&[0.0f64, 0.0, 0.0]);
        assert!(p.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-12));
        let p = softmax(&[2.0f64.ln(), 0.0]);
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-12 && (p[1] - 1.0 / 3.0).abs() < 1e-12);
        let shifted = softmax(&[2.0f64.ln() + 700.0, 700.0]);
        assert!((shifted[0] - p[0]).abs() < 1e-12);
    }

    #[test]
    fn sigmoid_examples() {
        assert_eq!(sigmoid(0.0f64), 0.5);
        assert!((sigmoid(4.0f64) - 0.982_013_790_037_908_4).abs() < 1e-12);
        for z in [-30.0f64, -2.5, 0.3, 8.0] {
            assert!((sigmoid(-z) - (1.0 - sigmoid(z))).abs() < 1e-12);
        }
        assert!(sigmoid(-1000.0f32).is_finite());
    }
}
