mod common;

use common::*;
use vsrlab_core::bptt::{
    build_store, clip_gradient, crop_epoch, pi_gradient, random_crop, ri_step, run_training, sample_clip, Adam,
    ClipSpec, CropRect, LrSchedule, StepSettings, Strategy, TrainConfig, TrainStatus,
};
use vsrlab_core::model::init_state;
use vsrlab_core::synthgen::SyntheticKind;
use vsrlab_core::{InitKind, VideoTensor};

fn full_crop(pair: &vsrlab_core::bptt::VideoPair) -> CropRect {
    CropRect {
        x: 0,
        y: 0,
        w: pair.lr.width(),
        h: pair.lr.height(),
    }
}

#[test]
fn sample_clip_is_uniform() {
    let mut r = rng(42);
    let mut counts = [0u64; 86];
    let draws = 200_000;
    for _ in 0..draws {
        counts[sample_clip(100, 15, &mut r).unwrap()] += 1;
    }
    let expect = draws as f64 / 86.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expect).powi(2) / expect).sum();
    // 85 degrees of freedom; 130 is past the 0.999 quantile
    assert!(chi2 < 130.0, "chi2 = {chi2}");
    assert!(counts.iter().all(|&c| c > 0));
    assert!((0..50).all(|_| sample_clip(15, 15, &mut r).unwrap() == 0));
    assert!(sample_clip(10, 15, &mut r).is_err());
}

#[test]
fn crop_positions_cover_the_frame() {
    let mut r = rng(1);
    let (mut max_x, mut max_y) = (0, 0);
    for _ in 0..5000 {
        let c = random_crop(320, 180, 64, &mut r).unwrap();
        assert!(c.x <= 256 && c.y <= 116);
        max_x = max_x.max(c.x);
        max_y = max_y.max(c.y);
    }
    assert_eq!((max_x, max_y), (256, 116));
    assert_eq!(random_crop(64, 64, 64, &mut r).unwrap(), CropRect { x: 0, y: 0, w: 64, h: 64 });
    assert!(random_crop(32, 64, 64, &mut r).is_err());

    let data = toy_data(SyntheticKind::Static, 3, 2, 10, 12, 0);
    assert_eq!(crop_epoch(&data, 6, &mut rng(9)).unwrap(), crop_epoch(&data, 6, &mut rng(9)).unwrap());
}

#[test]
fn store_matches_independent_rerun() {
    let m = model(4, 1, true, 3);
    let data = toy_data(SyntheticKind::Mixed, 2, 9, 8, 8, 5);
    let crops = crop_epoch(&data, 6, &mut rng(2)).unwrap();
    let store = build_store(&m, &data, &crops, InitKind::UniformNoise, &mut rng(77), 0).unwrap();
    let mut init_rng = rng(77);
    for (v, pair) in data.iter().enumerate() {
        let init = init_state(InitKind::UniformNoise, m.state_shape(6, 6), &mut init_rng);
        assert!(states_bitwise_equal(store.get(v, -1).unwrap(), &init));
        let (lr, _) = cropped_frames(pair, crops[v]);
        for (t, s) in rerun(&m, &lr, &init).iter().enumerate() {
            assert!(states_bitwise_equal(store.get(v, t as i64).unwrap(), s), "video {v} frame {t}");
        }
        assert_eq!(store.indices(v), (-1..9).collect::<Vec<i64>>());
    }
    assert!(store.get(0, 9).is_err());
    assert!(store.get(2, 0).is_err());
}

#[test]
fn single_frame_store_and_isolation() {
    let m = model(4, 1, false, 1);
    let one = toy_data(SyntheticKind::Static, 1, 1, 6, 6, 0);
    let crops = vec![full_crop(&one[0])];
    let store = build_store(&m, &one, &crops, InitKind::Zeros, &mut rng(0), 0).unwrap();
    assert_eq!(store.indices(0), vec![-1, 0]);

    let data = toy_data(SyntheticKind::Mixed, 2, 5, 6, 6, 4);
    let crops = vec![full_crop(&data[0]); 2];
    let a = build_store(&m, &data, &crops, InitKind::UniformNoise, &mut rng(5), 0).unwrap();
    let mut edited = data.clone();
    let dark: Vec<_> = edited[1].lr.frames().iter().map(|f| f.map(|v| v * 0.5)).collect();
    edited[1].lr = VideoTensor::new(dark).unwrap();
    let b = build_store(&m, &edited, &crops, InitKind::UniformNoise, &mut rng(5), 0).unwrap();
    for t in -1..5 {
        assert!(states_bitwise_equal(a.get(0, t).unwrap(), b.get(0, t).unwrap()));
    }
    assert!(!states_bitwise_equal(a.get(1, 4).unwrap(), b.get(1, 4).unwrap()));
}

#[test]
fn pi_gradient_equals_severed_full_unroll() {
    let m = model(4, 1, true, 11);
    let data = toy_data(SyntheticKind::Mixed, 2, 8, 6, 6, 8);
    let crops: Vec<CropRect> = data.iter().map(full_crop).collect();
    let store = build_store(&m, &data, &crops, InitKind::UniformNoise, &mut rng(3), 0).unwrap();
    let l = 3;
    for v in 0..2 {
        let (lr, hr) = cropped_frames(&data[v], crops[v]);
        for t in [0, 1, 3, 8 - l] {
            let clip = ClipSpec { video: v, start: t, len: l, crop: crops[v] };
            let (value, got) = pi_gradient(&m, &data, &[clip], &store, 1.0).unwrap();
            let (want_value, want) =
                severed_unroll_gradient(&m, &lr, &hr, store.get(v, -1).unwrap(), t, l, 1.0);
            assert_eq!(value.total.to_bits(), want_value.total.to_bits());
            assert!(max_abs_diff(&got, &want) < 1e-10, "video {v} t {t}");
        }
    }
}

#[test]
fn whole_video_clip_equals_full_sequence_loss() {
    let m = model(4, 1, false, 2);
    let data = toy_data(SyntheticKind::Mixed, 1, 6, 6, 6, 1);
    let crop = full_crop(&data[0]);
    let store = build_store(&m, &data, &[crop], InitKind::UniformNoise, &mut rng(8), 0).unwrap();
    let clip = ClipSpec { video: 0, start: 0, len: 6, crop };
    let (pi, _) = pi_gradient(&m, &data, &[clip], &store, 1.0).unwrap();
    let (lr, hr) = cropped_frames(&data[0], crop);
    let (full, _) = clip_gradient(&m, &lr, &hr, store.get(0, -1).unwrap(), 1.0).unwrap();
    assert_eq!(pi.total.to_bits(), full.total.to_bits());
}

#[test]
fn perturbing_a_stored_state_only_affects_later_clips() {
    let m = model(4, 1, false, 6);
    let data = toy_data(SyntheticKind::Mixed, 1, 10, 6, 6, 2);
    let crop = full_crop(&data[0]);
    let store = build_store(&m, &data, &[crop], InitKind::UniformNoise, &mut rng(1), 0).unwrap();
    let mut perturbed = store.clone();
    let mut s = store.get(0, 5).unwrap().clone();
    s.prev_sr = s.prev_sr.map(|v| v + 0.1);
    perturbed.replace(0, 5, s).unwrap();
    let early = ClipSpec { video: 0, start: 1, len: 4, crop };
    let late = ClipSpec { video: 0, start: 6, len: 4, crop };
    let g = |st: &_, c: ClipSpec| pi_gradient(&m, &data, &[c], st, 1.0).unwrap().1;
    assert_eq!(g(&store, early), g(&perturbed, early));
    assert_ne!(g(&store, late), g(&perturbed, late));
}

#[test]
fn identical_clips_average_to_one_clip() {
    let m = model(4, 1, false, 4);
    let data = toy_data(SyntheticKind::Mixed, 1, 5, 6, 6, 3);
    let crop = full_crop(&data[0]);
    let store = build_store(&m, &data, &[crop], InitKind::UniformNoise, &mut rng(1), 0).unwrap();
    let clip = ClipSpec { video: 0, start: 1, len: 3, crop };
    let (_, one) = pi_gradient(&m, &data, &[clip], &store, 1.0).unwrap();
    let (_, two) = pi_gradient(&m, &data, &[clip, clip], &store, 1.0).unwrap();
    assert_eq!(one, two);
    let (_, four) = pi_gradient(&m, &data, &[clip; 4], &store, 1.0).unwrap();
    assert!(max_abs_diff(&one, &four) <= 1e-15 * one.iter().fold(1.0f64, |a, b| a.max(b.abs())));
}

#[test]
fn zero_learning_rate_leaves_parameters_untouched() {
    let mut m = model(4, 1, false, 4);
    let before = m.params().to_vec();
    let data = toy_data(SyntheticKind::Mixed, 2, 5, 6, 6, 3);
    let clips = vec![ClipSpec { video: 1, start: 0, len: 3, crop: full_crop(&data[1]) }];
    let mut opt = Adam::new(m.num_params());
    let settings = StepSettings { learning_rate: 0.0, warp_weight: 1.0 };
    ri_step(&mut m, &data, &clips, InitKind::UniformNoise, &mut rng(0), &mut opt, settings).unwrap();
    let bits = |p: &[f64]| p.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(m.params()), bits(&before));
}

fn toy_train_config(strategy: Strategy, iterations: u64) -> TrainConfig {
    TrainConfig {
        strategy,
        reuse: 4,
        clip_len: 4,
        crop: 6,
        batch: 2,
        iterations,
        learning_rate: 3e-3,
        schedule: LrSchedule::Constant,
        init: InitKind::UniformNoise,
        warp_weight: 1.0,
        checkpoint_every: 0,
    }
}

#[test]
fn ri_training_overfits_a_toy_set() {
    let data = toy_data(SyntheticKind::Mixed, 2, 8, 8, 8, 21);
    let out = run_training(model(6, 1, false, 0), &data, &toy_train_config(Strategy::Ri, 200), 5, None).unwrap();
    assert_eq!(out.status, TrainStatus::Completed);
    assert_eq!(out.stores_built, 0);
    let first = out.log[0].loss;
    let last: f64 = out.log[190..].iter().map(|r| r.loss).sum::<f64>() / 10.0;
    assert!(last < 0.5 * first, "first {first} last {last}");
}

#[test]
fn pi_epochs_make_n_times_r_draws() {
    let data = toy_data(SyntheticKind::Mixed, 3, 6, 8, 8, 2);
    let cfg = toy_train_config(Strategy::Pi, 12);
    let out = run_training(model(4, 1, false, 0), &data, &cfg, 1, None).unwrap();
    // 3 videos × R=4 draws / batch 2 = 6 iterations per epoch
    assert_eq!(out.stores_built, 2);
    assert!(out.ledger.epochs.iter().all(|e| e.n_it == 6 && e.executed == 6));
    assert!(out.log.iter().all(|r| r.strategy == Strategy::Pi));
    assert_eq!(out.log.iter().filter(|r| r.epoch == 1).count(), 6);
}

#[test]
fn training_is_deterministic() {
    let data = toy_data(SyntheticKind::Mixed, 2, 6, 8, 8, 2);
    for strategy in [Strategy::Ri, Strategy::Pi] {
        let cfg = toy_train_config(strategy, 10);
        let a = run_training(model(4, 1, true, 0), &data, &cfg, 9, None).unwrap();
        let b = run_training(model(4, 1, true, 0), &data, &cfg, 9, None).unwrap();
        let strip = |o: &vsrlab_core::bptt::TrainOutcome| {
            o.log.iter().map(|r| (r.iteration, r.loss.to_bits(), r.lr.to_bits())).collect::<Vec<_>>()
        };
        assert_eq!(strip(&a), strip(&b));
        assert_eq!(a.model.params(), b.model.params());
    }
}

#[test]
fn divergence_keeps_last_good_parameters() {
    let data = toy_data(SyntheticKind::Mixed, 2, 6, 8, 8, 2);
    let mut cfg = toy_train_config(Strategy::Ri, 50);
    cfg.learning_rate = 1e300;
    let out = run_training(model(4, 1, false, 0), &data, &cfg, 9, None).unwrap();
    match out.status {
        TrainStatus::Diverged { iteration, .. } => assert_eq!(out.log.len() as u64, iteration),
        TrainStatus::Completed => panic!("expected divergence"),
    }
    assert!(out.model.params().iter().all(|p| p.is_finite()));
}
