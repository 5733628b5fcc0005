use proptest::prelude::*;
use vsrlab_core::metrics::{psnr_luma, psnr_y, spearman, ssim_luma, ssim_y, MetricSeries, FrameMetric, PSNR_CAP};
use vsrlab_core::Image;

/// Direct 2-D evaluation of mean SSIM on 0–255 luma planes, window by window.
fn ssim_reference(a: &Image, b: &Image) -> f64 {
    let (h, w, _) = a.shape();
    let g: Vec<f64> = (-5i32..=5).map(|i| (-(i * i) as f64 / (2.0 * 1.5 * 1.5)).exp()).collect();
    let z: f64 = g.iter().sum();
    let g: Vec<f64> = g.iter().map(|v| v / z).collect();
    let (c1, c2) = ((0.01 * 255.0f64).powi(2), (0.03 * 255.0f64).powi(2));
    let mut total = 0.0;
    let mut count = 0.0;
    for y0 in 0..=h - 11 {
        for x0 in 0..=w - 11 {
            let (mut mx, mut my, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for i in 0..11 {
                for j in 0..11 {
                    let wt = g[i] * g[j];
                    let p = 255.0 * a.get(y0 + i, x0 + j, 0);
                    let q = 255.0 * b.get(y0 + i, x0 + j, 0);
                    mx += wt * p;
                    my += wt * q;
                    sxx += wt * p * p;
                    syy += wt * q * q;
                    sxy += wt * p * q;
                }
            }
            let (vx, vy, cov) = (sxx - mx * mx, syy - my * my, sxy - mx * my);
            total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            count += 1.0;
        }
    }
    total / count
}

fn plane(h: usize, w: usize) -> impl Strategy<Value = Image> {
    prop::collection::vec(0.0f64..=1.0, h * w).prop_map(move |d| Image::from_vec(h, w, 1, d).unwrap())
}

fn rgb(h: usize, w: usize) -> impl Strategy<Value = Image> {
    prop::collection::vec(-0.2f64..=1.2, h * w * 3).prop_map(move |d| Image::from_vec(h, w, 3, d).unwrap())
}

#[test]
fn psnr_uniform_luma_offsets() {
    let a = Image::filled(6, 6, 1, 100.0 / 255.0);
    let b = Image::filled(6, 6, 1, 101.0 / 255.0);
    assert!((psnr_luma(&a, &b).unwrap() - 48.1308).abs() < 1e-3);
    assert!((psnr_luma(&a, &b).unwrap() - 10.0 * (255.0f64 * 255.0).log10()).abs() < 1e-9);
    let black = Image::filled(6, 6, 1, 0.0);
    let white = Image::filled(6, 6, 1, 1.0);
    assert!(psnr_luma(&black, &white).unwrap().abs() < 1e-3);
    assert_eq!(psnr_luma(&a, &a).unwrap(), PSNR_CAP);
}

#[test]
fn rgb_psnr_measures_luma_only() {
    let a = Image::filled(4, 4, 3, 0.5);
    let b = Image::from_fn(4, 4, 3, |_, _, c| if c == 1 { 0.5 + 1.0 / 128.553 } else { 0.5 });
    // G step of 1/128.553 raises Y by exactly 1/255
    assert!((psnr_y(&a, &b).unwrap() - 48.1308).abs() < 1e-3);
}

#[test]
fn constant_vs_constant_ssim_closed_form() {
    for (m1, m2) in [(0.1, 0.9), (0.5, 0.52), (0.0, 1.0), (0.3, 0.3)] {
        let s = ssim_luma(&Image::filled(13, 17, 1, m1), &Image::filled(13, 17, 1, m2)).unwrap();
        let (a, b) = (255.0 * m1, 255.0 * m2);
        let c1 = (0.01f64 * 255.0).powi(2);
        assert!((s - (2.0 * a * b + c1) / (a * a + b * b + c1)).abs() < 1e-9);
    }
}

#[test]
fn series_means_are_arithmetic() {
    let recs: Vec<FrameMetric> = (0..4)
        .map(|i| FrameMetric {
            video_id: "v".into(),
            frame: i,
            psnr: 20.0 + i as f64,
            ssim: 0.5 + 0.1 * i as f64,
        })
        .collect();
    let s = MetricSeries::from_records("v", recs);
    assert!((s.mean_psnr - 21.5).abs() < 1e-12);
    assert!((s.mean_ssim - 0.65).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ssim_matches_direct_evaluation(a in plane(14, 16), b in plane(14, 16)) {
        let got = ssim_luma(&a, &b).unwrap();
        prop_assert!((got - ssim_reference(&a, &b)).abs() < 1e-9);
        prop_assert!((-1.0..=1.0).contains(&got));
    }

    #[test]
    fn metrics_are_symmetric(a in rgb(12, 12), b in rgb(12, 12)) {
        prop_assert_eq!(psnr_y(&a, &b).unwrap(), psnr_y(&b, &a).unwrap());
        prop_assert!((ssim_y(&a, &b).unwrap() - ssim_y(&b, &a).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn self_similarity_is_one(a in rgb(11, 13)) {
        prop_assert_eq!(ssim_y(&a, &a).unwrap(), 1.0);
        prop_assert_eq!(psnr_y(&a, &a).unwrap(), PSNR_CAP);
    }

    #[test]
    fn psnr_falls_as_uniform_error_grows(base in 0.0f64..0.5, d1 in 0.001f64..0.2, extra in 0.001f64..0.2) {
        let a = Image::filled(5, 5, 1, base);
        let p1 = psnr_luma(&a, &Image::filled(5, 5, 1, base + d1)).unwrap();
        let p2 = psnr_luma(&a, &Image::filled(5, 5, 1, base + d1 + extra)).unwrap();
        prop_assert!(p2 < p1);
    }

    #[test]
    fn spearman_is_invariant_to_monotone_maps(x in prop::collection::vec(-10.0f64..10.0, 3..30)) {
        let y: Vec<f64> = x.iter().map(|v| v.powi(3) + 2.0 * v).collect();
        if let Some(r) = spearman(&x, &y) {
            prop_assert!((r - 1.0).abs() < 1e-12);
        }
    }
}
