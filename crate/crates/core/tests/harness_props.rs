use proptest::prelude::*;
use vsrlab_core::bptt::Strategy as Training;
use vsrlab_core::harness::ExperimentConfig;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn config_round_trips(
        seed in 0..=i64::MAX as u64,
        reuse in 1..100usize,
        pi in any::<bool>(),
        lr in 1e-6..1e-2f64,
        sigma in 0.1..3.0f64,
        cond in any::<bool>(),
    ) {
        let mut cfg = ExperimentConfig::preset("desk-scale").unwrap();
        cfg.seed = seed;
        cfg.training.reuse = reuse;
        cfg.training.strategy = if pi { Training::Pi } else { Training::Ri };
        cfg.training.learning_rate = lr;
        cfg.degradation.sigma = sigma;
        cfg.model.condition.enabled = cond;
        let text = cfg.to_toml();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn unsigned_only_seeds_rejected(seed in i64::MAX as u64 + 1..=u64::MAX) {
        let mut cfg = ExperimentConfig::preset("desk-scale").unwrap();
        cfg.seed = seed;
        prop_assert!(cfg.validate().is_err());
    }
}
