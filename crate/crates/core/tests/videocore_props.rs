use proptest::prelude::*;
use vsrlab_core::videocore::{degrade, degrade_frame, gaussian_kernel, load_video, rgb_to_y, save_video};
use vsrlab_core::{Image, VideoTensor};

/// Independent reference: truncated Gaussian weight for offset `d`, normalized over the support.
fn reference_weight(d: i64, sigma: f64) -> f64 {
    let r = (3.0 * sigma).ceil() as i64;
    if d.abs() > r {
        return 0.0;
    }
    let z: f64 = (-r..=r).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).sum();
    (-(d * d) as f64 / (2.0 * sigma * sigma)).exp() / z
}

fn image(h: usize, w: usize, c: usize) -> impl Strategy<Value = Image> {
    prop::collection::vec(0.0f64..=1.0, h * w * c).prop_map(move |d| Image::from_vec(h, w, c, d).unwrap())
}

fn video(t: usize, h: usize, w: usize) -> impl Strategy<Value = VideoTensor> {
    prop::collection::vec(image(h, w, 3), t).prop_map(|f| VideoTensor::new(f).unwrap())
}

#[test]
fn impulse_response_matches_reference_kernel() {
    let (h, w) = (64, 64);
    let (py, px) = (30, 33);
    let mut frame = Image::zeros(h, w, 1);
    frame.set(py, px, 0, 1.0);
    let lr = degrade(&VideoTensor::new(vec![frame]).unwrap(), 1.5, 4).unwrap();
    assert_eq!(lr.shape(), [1, 16, 16, 1]);
    let out = lr.frame(0);
    for oy in 0..16 {
        for ox in 0..16 {
            let want = reference_weight(py as i64 - 4 * oy as i64, 1.5) * reference_weight(px as i64 - 4 * ox as i64, 1.5);
            assert!((out.get(oy, ox, 0) - want).abs() < 1e-6, "({oy},{ox})");
        }
    }
}

#[test]
fn kernel_matches_reference() {
    for sigma in [0.5, 1.0, 1.5, 2.3] {
        let k = gaussian_kernel(sigma);
        let r = (k.len() / 2) as i64;
        for (i, v) in k.iter().enumerate() {
            assert!((v - reference_weight(i as i64 - r, sigma)).abs() < 1e-15);
        }
    }
}

#[test]
fn output_shapes() {
    let v = VideoTensor::new(vec![Image::zeros(180, 320, 3); 2]).unwrap();
    assert_eq!(degrade(&v, 1.5, 4).unwrap().shape(), [2, 45, 80, 3]);
    let v = VideoTensor::new(vec![Image::zeros(48, 48, 3)]).unwrap();
    assert_eq!(degrade(&v, 1.5, 4).unwrap().shape(), [1, 12, 12, 3]);
    assert!(degrade(&v, 0.0, 4).is_err());
}

#[test]
fn constant_frames_survive_reflection_borders() {
    let v = VideoTensor::new(vec![Image::filled(16, 16, 3, 0.37)]).unwrap();
    let lr = degrade(&v, 1.5, 4).unwrap();
    assert!(lr.frame(0).data().iter().all(|&x| (x - 0.37).abs() < 1e-12));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn degradation_is_linear(a in image(16, 12, 3), b in image(16, 12, 3), alpha in -2.0f64..2.0, beta in -2.0f64..2.0) {
        let k = gaussian_kernel(1.5);
        let mix = Image::from_vec(16, 12, 3, a.data().iter().zip(b.data()).map(|(x, y)| alpha * x + beta * y).collect()).unwrap();
        let lhs = degrade_frame(&mix, &k, 4).unwrap();
        let (da, db) = (degrade_frame(&a, &k, 4).unwrap(), degrade_frame(&b, &k, 4).unwrap());
        for i in 0..lhs.data().len() {
            prop_assert!((lhs.data()[i] - (alpha * da.data()[i] + beta * db.data()[i])).abs() < 1e-9);
        }
    }

    #[test]
    fn degradation_commutes_with_concat(a in video(2, 8, 8), b in video(3, 8, 8)) {
        let joined = degrade(&VideoTensor::concat(&[a.clone(), b.clone()]).unwrap(), 1.5, 4).unwrap();
        let parts = VideoTensor::concat(&[degrade(&a, 1.5, 4).unwrap(), degrade(&b, 1.5, 4).unwrap()]).unwrap();
        prop_assert_eq!(joined, parts);
    }

    #[test]
    fn degraded_values_stay_in_range(v in video(1, 12, 8)) {
        let lr = degrade(&v, 1.5, 4).unwrap();
        prop_assert!(lr.frames().iter().all(|f| f.in_unit_range()));
    }

    #[test]
    fn save_load_roundtrip_is_within_half_a_level(v in video(2, 5, 7)) {
        let dir = tempfile::tempdir().unwrap();
        save_video(&v, dir.path()).unwrap();
        let back = load_video(dir.path()).unwrap();
        prop_assert_eq!(back.shape(), v.shape());
        prop_assert!(back.max_abs_diff(&v) <= 0.5 / 255.0 + 1e-12);
        // already-quantized values survive exactly
        let dir2 = tempfile::tempdir().unwrap();
        save_video(&back, dir2.path()).unwrap();
        prop_assert_eq!(load_video(dir2.path()).unwrap(), back);
    }

    #[test]
    fn luma_is_in_studio_range(f in image(3, 3, 3)) {
        let y = rgb_to_y(&f).unwrap();
        prop_assert!(y.data().iter().all(|v| (16.0 / 255.0 - 1e-12..=235.0 / 255.0 + 1e-12).contains(v)));
    }
}
