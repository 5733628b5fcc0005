//! Experiment orchestration: layered configuration, self-describing artifact
//! directories, training and evaluation runs, the `R` sweep and SVG plots.

mod artifacts;
mod config;
mod data;
mod experiment;
mod plot;
mod synth;
mod tradeoff;

pub use artifacts::{load_snapshot, RunDir, RunRecord, CHECKPOINTS, CONFIG_SNAPSHOT, LOSS_LOG, RUN_RECORD, TIME_LEDGER};
pub use config::{
    apply_overrides, preset_names, preset_text, DataConfig, DegradationConfig, EvalConfig, ExperimentConfig,
    TestSetConfig, OUTPUT_ROOT_ENV,
};
pub use data::{degrade_dir, load_hr_pairs, pair_from_hr, synthetic_pairs, test_set, test_sets, training_data, NamedSet};
pub use experiment::{
    evaluate_to_dir, load_model_for_scale, super_resolve_dirs, train_experiment, training_seed, TrainSummary,
    FRAMES_DIR, STATUS_FILE, SUMMARY_CSV,
};
pub use plot::{history_series, plot_history, plot_tradeoff, render_svg, tradeoff_points, Mark, Series};
pub use synth::{run_synth, FrameSource, SynthRequest, MANIFEST};
pub use tradeoff::{member_config, run_tradeoff, write_report, SetScore, TradeoffReport, TradeoffRow, REPORT_CSV, SCATTER_CSV};
