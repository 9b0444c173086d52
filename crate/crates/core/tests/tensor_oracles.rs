use proptest::prelude::*;
use vigil::tensor::*;
use vigil_testkit::layers::{check_layer, LayerKind};
use vigil_testkit::{naive_conv2d, SplitMix};

fn to_f64(t: &Tensor<f32>) -> Vec<f64> {
    t.data().iter().map(|&v| v as f64).collect()
}

fn random_f32(rng: &mut SplitMix, shape: Shape) -> Tensor<f32> {
    Tensor::from_vec(shape, rng.vec(shape.len(), -1.0, 1.0).into_iter().map(|v| v as f32).collect()).unwrap()
}

#[test]
fn conv_matches_nested_loop_on_fixed_instance() {
    let mut rng = SplitMix::new(11);
    let input = random_f32(&mut rng, Shape::new(1, 2, 4, 4));
    let kernels = random_f32(&mut rng, Shape::new(3, 2, 3, 3));
    let bias = [0.0f32; 3];
    let out = conv2d_forward(&input, &kernels, Some(&bias), 1, 1).unwrap();
    let (expected, dims) = naive_conv2d(&to_f64(&input), [1, 2, 4, 4], &to_f64(&kernels), 3, 3, &[0.0; 3], 1, 1, 1);
    assert_eq!(out.shape().dims(), dims);
    for (a, b) in out.data().iter().zip(&expected) {
        assert!((*a as f64 - b).abs() < 1e-5);
    }
}

#[test]
fn depthwise_all_ones_gives_per_channel_window_sums() {
    let input = Tensor::from_vec(Shape::new(1, 2, 3, 3), (0..18).map(|v| v as f32).collect()).unwrap();
    let kernels = Tensor::filled(Shape::new(2, 1, 3, 3), 1.0f32);
    let out = depthwise_conv2d_forward(&input, &kernels, Some(&[0.0, 0.0]), 1, 0).unwrap();
    let (expected, _) = naive_conv2d(&to_f64(&input), [1, 2, 3, 3], &[1.0; 18], 2, 3, &[0.0; 2], 1, 0, 2);
    assert_eq!(expected, vec![36.0, 117.0]);
    assert_eq!(to_f64(&out), expected);
}

#[test]
fn pointwise_is_bitwise_equal_to_general_conv() {
    for seed in 0..20 {
        let mut rng = SplitMix::new(seed);
        let c_in = 1 + rng.below(6) as usize;
        let c_out = 1 + rng.below(6) as usize;
        let shape = Shape::new(1 + rng.below(3) as usize, c_in, 1 + rng.below(7) as usize, 1 + rng.below(7) as usize);
        let input = random_f32(&mut rng, shape);
        let kernels = random_f32(&mut rng, Shape::new(c_out, c_in, 1, 1));
        let bias: Vec<f32> = rng.vec(c_out, -1.0, 1.0).into_iter().map(|v| v as f32).collect();
        let a = pointwise_conv2d_forward(&input, &kernels, Some(&bias)).unwrap();
        let b = conv2d_forward(&input, &kernels, Some(&bias), 1, 0).unwrap();
        let bits = |t: &Tensor<f32>| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b), "seed {seed}");
    }
}

#[test]
fn separable_equals_composed_standard_conv() {
    // depthwise K_c then pointwise P[o][c] equals a standard conv with
    // kernel W[o][c] = P[o][c] · K_c, when both carry no bias.
    for seed in 0..20 {
        let mut rng = SplitMix::new(100 + seed);
        let c = 1 + rng.below(4) as usize;
        let c_out = 1 + rng.below(4) as usize;
        let k = [3usize, 5][rng.below(2) as usize];
        let h = k + rng.below(4) as usize;
        let w = k + rng.below(4) as usize;
        let stride = 1 + rng.below(2) as usize;
        let pad = rng.below(k as u64 / 2 + 1) as usize;
        let input = random_f32(&mut rng, Shape::new(1, c, h, w));
        let dw = random_f32(&mut rng, Shape::new(c, 1, k, k));
        let pw = random_f32(&mut rng, Shape::new(c_out, c, 1, 1));

        let mid = depthwise_conv2d_forward(&input, &dw, None, stride, pad).unwrap();
        let sep = pointwise_conv2d_forward(&mid, &pw, None).unwrap();

        let mut composed = Tensor::zeros(Shape::new(c_out, c, k, k));
        for o in 0..c_out {
            for ci in 0..c {
                for ky in 0..k {
                    for kx in 0..k {
                        let off = composed.offset(o, ci, ky, kx);
                        composed.data_mut()[off] = pw.at(o, ci, 0, 0) * dw.at(ci, 0, ky, kx);
                    }
                }
            }
        }
        let std = conv2d_forward(&input, &composed, None, stride, pad).unwrap();
        assert_eq!(sep.shape(), std.shape());
        for (a, b) in sep.data().iter().zip(std.data()) {
            assert!((a - b).abs() < 1e-4, "seed {seed}: {a} vs {b}");
        }
    }
}

#[test]
fn every_layer_kind_matches_finite_differences() {
    for kind in LayerKind::ALL {
        for seed in 0..20 {
            let report = check_layer(kind, seed);
            assert!(report.worst() < 1e-3, "{kind:?} seed {seed}: {:?}", report.errors);
        }
    }
}

fn conv_case() -> impl Strategy<Value = (u64, usize, usize, usize, usize, usize, usize, usize, usize, usize)> {
    (any::<u64>(), 1usize..=2, 1usize..=4, 1usize..=4, 1usize..=8, 1usize..=8, 0usize..3, 1usize..=3, 0usize..=2, any::<bool>())
        .prop_map(|(seed, n, c_in, c_out, h, w, ki, stride, pad, dw)| {
            let k = [1, 3, 5][ki];
            let c_out = if dw { c_in } else { c_out };
            (seed, n, c_in, c_out, h, w, k, stride, pad, dw as usize)
        })
        .prop_filter("kernel must fit", |&(_, _, _, _, h, w, k, _, pad, _)| h + 2 * pad >= k && w + 2 * pad >= k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn conv_matches_oracle((seed, n, c_in, c_out, h, w, k, stride, pad, dw) in conv_case()) {
        let depthwise = dw == 1;
        let mut rng = SplitMix::new(seed);
        let input = random_f32(&mut rng, Shape::new(n, c_in, h, w));
        let kernels = random_f32(&mut rng, Shape::new(c_out, if depthwise { 1 } else { c_in }, k, k));
        let bias: Vec<f32> = rng.vec(c_out, -1.0, 1.0).into_iter().map(|v| v as f32).collect();
        let out = if depthwise {
            depthwise_conv2d_forward(&input, &kernels, Some(&bias), stride, pad).unwrap()
        } else {
            conv2d_forward(&input, &kernels, Some(&bias), stride, pad).unwrap()
        };
        let bias64: Vec<f64> = bias.iter().map(|&b| b as f64).collect();
        let (expected, dims) = naive_conv2d(
            &to_f64(&input), [n, c_in, h, w], &to_f64(&kernels), c_out, k, &bias64, stride, pad,
            if depthwise { c_in } else { 1 },
        );
        prop_assert_eq!(out.shape().dims(), dims);
        prop_assert_eq!(dims[2], conv_output_extent(h, k, stride, pad).unwrap());
        for (a, b) in out.data().iter().zip(&expected) {
            prop_assert!((*a as f64 - b).abs() < 1e-5);
        }
    }

    #[test]
    fn pool_extent_formula(h in 1usize..=12, w in 1usize..=12, win in 1usize..=4, stride in 1usize..=3) {
        let input = Tensor::<f32>::zeros(Shape::new(1, 2, h, w));
        let out = pool2d(&input, PoolMode::Average, win, stride);
        let tiles = |s: usize| s >= win && (s - win) % stride == 0;
        if tiles(h) && tiles(w) {
            let out = out.unwrap();
            prop_assert_eq!(out.shape(), Shape::new(1, 2, (h - win) / stride + 1, (w - win) / stride + 1));
        } else {
            prop_assert!(out.is_err());
        }
    }

    #[test]
    fn softmax_properties(logits in proptest::collection::vec(-15.0f64..15.0, 1..12), shift in -100.0f64..100.0) {
        let p = softmax(&logits);
        let sum: f64 = p.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-6);
        prop_assert!(p.iter().all(|&v| v > 0.0 && v < 1.0 || logits.len() == 1));
        let argmax = |v: &[f64]| v.iter().enumerate().fold(0, |best, (i, &x)| if x > v[best] { i } else { best });
        prop_assert_eq!(argmax(&p), argmax(&logits));
        let shifted: Vec<f64> = logits.iter().map(|z| z + shift).collect();
        for (a, b) in softmax(&shifted).iter().zip(&p) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn layers_keep_finite_values(seed in any::<u64>()) {
        let mut rng = SplitMix::new(seed);
        let input = random_f32(&mut rng, Shape::new(2, 3, 6, 6));
        let kernels = random_f32(&mut rng, Shape::new(3, 1, 3, 3));
        let y = depthwise_conv2d_forward(&input, &kernels, None, 1, 1).unwrap();
        let (mut rm, mut rv) = (vec![0.0; 3], vec![1.0; 3]);
        let y = batchnorm_forward(&y, &[1.0; 3], &[0.0; 3], &mut rm, &mut rv, 1e-5, true).unwrap();
        let y = relu(&y);
        let y = pool2d(&y, PoolMode::Max, 2, 2).unwrap();
        prop_assert!(y.is_finite());
        let g = layer_backward(&Layer::Relu, &y, &y).unwrap();
        prop_assert!(g.input_grad.is_finite());
    }
}
