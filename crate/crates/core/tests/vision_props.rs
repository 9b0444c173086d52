use proptest::prelude::*;
use vigil::vision::*;

fn image_strategy(max: usize) -> impl Strategy<Value = Image> {
    (1..=max, 1..=max, prop::sample::select(vec![1usize, 3])).prop_flat_map(|(w, h, c)| {
        prop::collection::vec(any::<u8>(), w * h * c).prop_map(move |px| Image::new(w, h, c, px).unwrap())
    })
}

/// Integer shift computed pixel by pixel.
fn shift_oracle(img: &Image, dx: i64, dy: i64, fill: u8) -> Image {
    img.from_fn(|x, y, ch| {
        let (sx, sy) = (x as i64 - dx, y as i64 - dy);
        if sx < 0 || sy < 0 || sx >= img.width() as i64 || sy >= img.height() as i64 {
            fill
        } else {
            img.get(sx as usize, sy as usize, ch)
        }
    })
}

#[test]
fn single_pixel_sweeps_stay_in_range() {
    // u8 storage rules out wraparound; these sweeps check saturation and
    // that every op is total over the full value range.
    for v in 0..=255u8 {
        let px = Image::new(1, 1, 1, vec![v]).unwrap();
        for delta in [-300, -255, -1, 0, 1, 255, 300] {
            let want = (v as i32 + delta).clamp(0, 255) as u8;
            assert_eq!(adjust_brightness(&px, delta).get(0, 0, 0), want);
        }
        for g in [0.2, 0.5, 1.0, 2.2, 5.0] {
            let want = (255.0 * (v as f64 / 255.0).powf(g)).round();
            assert_eq!(gamma_correct(&px, g).unwrap().get(0, 0, 0) as f64, want);
        }
        assert_eq!(histogram_equalize(&px), px);
        assert_eq!(gaussian_blur(&px, 1.5).unwrap(), px);
        assert_eq!(median_filter(&px, 3).unwrap(), px);
        assert_eq!(affine_transform(&px, &AffineMap::rotation(37.0, 1, 1), 0), px);
    }
}

#[test]
fn blur_preserves_interior_mean() {
    let mut img = Image::filled(24, 24, 1, 40).unwrap();
    for y in 8..16 {
        for x in 8..16 {
            img.set(x, y, 0, 200);
        }
    }
    let blurred = gaussian_blur(&img, 1.0).unwrap();
    let mean = |im: &Image| im.pixels().iter().map(|&v| v as f64).sum::<f64>() / im.pixels().len() as f64;
    assert!((mean(&img) - mean(&blurred)).abs() <= 1.0);
}

#[test]
fn constant_images_survive_filters() {
    let img = Image::filled(9, 7, 3, 77).unwrap();
    assert_eq!(gaussian_blur(&img, 2.0).unwrap(), img);
    assert_eq!(median_filter(&img, 5).unwrap(), img);
    assert_eq!(histogram_equalize(&img), img);
}

#[test]
fn crop_resize_matches_sample_formula() {
    let img = Image::new(6, 4, 1, (0..24).collect()).unwrap();
    let out = crop_resize(&img, Rect::new(1, 1, 4, 3), 3, 2).unwrap();
    for oy in 0..2 {
        for ox in 0..3 {
            let sx = 1 + (((ox as f64 + 0.5) * 4.0 / 3.0).floor() as usize);
            let sy = 1 + (((oy as f64 + 0.5) * 3.0 / 2.0).floor() as usize);
            assert_eq!(out.get(ox, oy, 0), img.get(sx, sy, 0));
        }
    }
}

proptest! {
    #[test]
    fn codec_round_trip(img in image_strategy(64)) {
        let bytes = encode_pnm(&img);
        prop_assert_eq!(decode_pnm(&bytes).unwrap(), img);
    }

    #[test]
    fn truncated_files_report_format_errors(img in image_strategy(8), cut in 1usize..20) {
        let bytes = encode_pnm(&img);
        let keep = bytes.len().saturating_sub(cut);
        let is_format = matches!(decode_pnm(&bytes[..keep]), Err(vigil::Error::Format { .. }));
        prop_assert!(is_format);
    }

    #[test]
    fn identity_map_is_identity(img in image_strategy(16), fill in any::<u8>()) {
        prop_assert_eq!(affine_transform(&img, &AffineMap::IDENTITY, fill), img);
    }

    #[test]
    fn translations_match_oracle_and_compose(img in image_strategy(12), a in -4i64..5, b in -4i64..5, c in -4i64..5, d in -4i64..5) {
        let one = affine_transform(&img, &AffineMap::translation(a as f64, b as f64), 9);
        prop_assert_eq!(&one, &shift_oracle(&img, a, b, 9));
        let composed = AffineMap::translation(a as f64, b as f64).then(&AffineMap::translation(c as f64, d as f64));
        prop_assert_eq!(affine_transform(&img, &composed, 9), shift_oracle(&img, a + c, b + d, 9));
    }

    #[test]
    fn augment_is_pure(img in image_strategy(16), seed in any::<u64>()) {
        let policy = AugmentPolicy {
            rot_deg: Some((-20.0, 20.0)),
            shear_x: Some((-0.2, 0.2)),
            scale: Some((-0.1, 0.1)),
            trans_px: Some((-2.0, 2.0)),
            brightness: Some((-40.0, 40.0)),
            crop_frac: Some((0.0, 0.25)),
        };
        let a = augment_sample(&img, &policy, seed);
        prop_assert_eq!(&a, &augment_sample(&img, &policy, seed));
        prop_assert_eq!((a.width(), a.height(), a.channels()), (img.width(), img.height(), img.channels()));
    }

    #[test]
    fn equalize_is_monotone(img in image_strategy(16)) {
        let out = histogram_equalize(&img);
        for ch in 0..img.channels() {
            let mut pairs: Vec<(u8, u8)> = img.pixels().iter().zip(out.pixels()).skip(ch).step_by(img.channels()).map(|(&a, &b)| (a, b)).collect();
            pairs.sort_unstable();
            prop_assert!(pairs.windows(2).all(|w| w[0].1 <= w[1].1));
        }
    }
}
