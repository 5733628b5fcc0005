use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use vsrlab_core::bptt::{Strategy, TrainStatus};
use vsrlab_core::harness::{
    self, degrade_dir, evaluate_to_dir, load_model_for_scale, plot_history, plot_tradeoff, run_synth, run_tradeoff,
    super_resolve_dirs, train_experiment, ExperimentConfig, FrameSource, NamedSet, SynthRequest, OUTPUT_ROOT_ENV,
};
use vsrlab_core::synthgen::SlidePath;

/// Train and stress-test recurrent video super-resolution models.
#[derive(Debug, Parser)]
#[command(name = "vsrlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a probe video as a frame directory.
    Synth {
        #[command(subcommand)]
        generator: Generator,
    },
    /// Blur and subsample an HR frame directory into an LR one.
    Degrade {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1.5)]
        sigma: f64,
        #[arg(long, default_value_t = 4)]
        scale: usize,
    },
    /// Train a model and write checkpoints, loss log and time ledger.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        strategy: Option<Strategy>,
        /// Clip draws per video per epoch.
        #[arg(long = "R")]
        reuse: Option<usize>,
        /// Feed the normalized frame index to the SR network.
        #[arg(long)]
        cond_frame_number: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a checkpoint and write per-frame and summary CSVs.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// HR frame directories forming one set; replaces the configured test sets.
        #[arg(long = "test")]
        tests: Vec<PathBuf>,
        /// Treat `--test` directories as LR input and only save SR frames.
        #[arg(long)]
        no_hr: bool,
        #[arg(long)]
        scale: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train an RI baseline plus one PI model per R and report time against PSNR.
    Tradeoff {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long = "R", value_delimiter = ',', required = true)]
        reuse: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render SVG plots from CSV outputs.
    Plot {
        #[command(subcommand)]
        kind: PlotKind,
    },
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// TOML experiment config.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in config (frvsr-paper, desk-scale).
    #[arg(long)]
    preset: Option<String>,
    /// Override a config key, e.g. `training.iterations=100`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Args)]
struct SourceArgs {
    /// Seed frame: an image file or a frame directory (first frame).
    #[arg(long)]
    frame: Option<PathBuf>,
    /// Procedural seed frame of this size, `WxH`.
    #[arg(long, value_parser = parse_size, conflicts_with = "frame")]
    procedural: Option<(usize, usize)>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Subcommand)]
enum Generator {
    Static {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        length: usize,
        #[arg(long)]
        out: PathBuf,
    },
    Sliding {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        length: usize,
        /// Displacement per frame in pixels.
        #[arg(long)]
        slide: usize,
        /// Window size `WxH`; defaults to half the seed frame.
        #[arg(long, value_parser = parse_size)]
        window: Option<(usize, usize)>,
        #[arg(long, default_value = "horizontal-pingpong", value_parser = parse_path)]
        path: SlidePath,
        #[arg(long)]
        out: PathBuf,
    },
    Gamma {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        length: usize,
        #[arg(long, default_value_t = 0.6)]
        gamma_min: f64,
        #[arg(long, default_value_t = 1.6)]
        gamma_max: f64,
        #[arg(long, default_value_t = 40)]
        period: usize,
        #[arg(long)]
        out: PathBuf,
    },
    Palindrome {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        length: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum PlotKind {
    /// PSNR-vs-frame lines from per-frame CSVs.
    History {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time-vs-PSNR scatter from a trade-off scatter CSV.
    Tradeoff {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected WxH, got `{s}`"))?;
    let w = w.trim().parse().map_err(|_| format!("bad width in `{s}`"))?;
    let h = h.trim().parse().map_err(|_| format!("bad height in `{s}`"))?;
    Ok((w, h))
}

fn parse_path(s: &str) -> Result<SlidePath, String> {
    match s {
        "horizontal-pingpong" | "horizontal" => Ok(SlidePath::HorizontalPingpong),
        "diagonal-pingpong" | "diagonal" => Ok(SlidePath::DiagonalPingpong),
        _ => Err(format!("unknown slide path `{s}`")),
    }
}

impl SourceArgs {
    fn source(&self) -> Result<FrameSource> {
        match (&self.frame, self.procedural) {
            (Some(path), _) => Ok(FrameSource::File { path: path.clone() }),
            (None, Some((width, height))) => Ok(FrameSource::Procedural {
                height,
                width,
                seed: self.seed,
            }),
            (None, None) => bail!("either --frame or --procedural is required"),
        }
    }
}

impl ConfigArgs {
    fn load(&self, extra: &[String]) -> Result<ExperimentConfig> {
        let mut overrides = self.overrides.clone();
        overrides.extend_from_slice(extra);
        let cfg = match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::load_with_overrides(path, &overrides)?,
            (None, Some(name)) => ExperimentConfig::preset_with_overrides(name, &overrides)?,
            (None, None) => bail!("either --config or --preset is required"),
        };
        Ok(cfg)
    }

    fn load_or_default(&self) -> Result<ExperimentConfig> {
        if self.config.is_none() && self.preset.is_none() {
            return Ok(ExperimentConfig::from_str_with_overrides("seed = 0\n", &self.overrides)?);
        }
        self.load(&[])
    }
}

fn output_dir(cfg: &ExperimentConfig, out: Option<PathBuf>, leaf: Option<&str>) -> PathBuf {
    if let Some(out) = out {
        return out;
    }
    let root = std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from);
    let base = cfg.resolved_output_dir(root.as_deref());
    match leaf {
        Some(leaf) => base.join(leaf),
        None => base,
    }
}

fn synth(generator: Generator) -> Result<()> {
    let (request, out) = match generator {
        Generator::Static { source, length, out } => (
            SynthRequest::Static {
                source: source.source()?,
                length,
            },
            out,
        ),
        Generator::Sliding {
            source,
            length,
            slide,
            window,
            path,
            out,
        } => {
            let src = source.source()?;
            let (window_w, window_h) = match window {
                Some(size) => size,
                None => {
                    let frame = src.load()?;
                    (frame.width() / 2, frame.height() / 2)
                }
            };
            (
                SynthRequest::Sliding {
                    source: src,
                    length,
                    slide,
                    window_w,
                    window_h,
                    path,
                },
                out,
            )
        }
        Generator::Gamma {
            source,
            length,
            gamma_min,
            gamma_max,
            period,
            out,
        } => (
            SynthRequest::Gamma {
                source: source.source()?,
                length,
                gamma_min,
                gamma_max,
                period,
            },
            out,
        ),
        Generator::Palindrome { input, length, out } => (SynthRequest::Palindrome { input, length }, out),
    };
    let video = run_synth(&request, &out)?;
    println!(
        "generator={} frames={} size={}x{} out={}",
        request.generator(),
        video.frame_count(),
        video.width(),
        video.height(),
        out.display()
    );
    Ok(())
}

fn train(
    config: ConfigArgs,
    strategy: Option<Strategy>,
    reuse: Option<usize>,
    cond: bool,
    out: Option<PathBuf>,
) -> Result<()> {
    let mut flags = Vec::new();
    if let Some(s) = strategy {
        flags.push(format!("training.strategy=\"{}\"", s.as_str()));
    }
    if let Some(r) = reuse {
        flags.push(format!("training.reuse={r}"));
    }
    if cond {
        flags.push("model.condition.enabled=true".into());
    }
    let cfg = config.load(&flags)?;
    let dir = output_dir(&cfg, out, None);
    let summary = train_experiment(&cfg, &dir)?;
    println!(
        "run_dir={} config_hash={} strategy={} iterations={} stores_built={} per_iteration_ms={:.3}",
        dir.display(),
        summary.config_hash,
        cfg.training.strategy.as_str(),
        summary.iterations,
        summary.stores_built,
        summary.ledger.per_iteration_ms()
    );
    if let TrainStatus::Diverged { iteration, reason } = summary.status {
        return Err(vsrlab_core::Error::Divergence(format!(
            "training diverged at iteration {iteration} ({reason}); last good checkpoint kept in {}",
            dir.display()
        ))
        .into());
    }
    Ok(())
}

fn eval(
    checkpoint: &Path,
    config: ConfigArgs,
    tests: Vec<PathBuf>,
    no_hr: bool,
    scale: Option<usize>,
    out: Option<PathBuf>,
) -> Result<()> {
    let cfg = config.load_or_default()?;
    let scale = scale.unwrap_or(cfg.degradation.scale);
    let model = load_model_for_scale(checkpoint, scale)?;
    let dir = output_dir(&cfg, out, Some("eval"));
    if no_hr {
        if tests.is_empty() {
            bail!("--no-hr needs at least one --test directory");
        }
        let written = super_resolve_dirs(&model, &tests, cfg.eval.init, &dir)?;
        println!("sr_videos={} out={}", written.len(), dir.display());
        return Ok(());
    }
    let mut degradation = cfg.degradation.clone();
    degradation.scale = scale;
    let sets = if tests.is_empty() {
        harness::test_sets(&cfg)?
    } else {
        vec![NamedSet {
            name: "test".into(),
            videos: harness::load_hr_pairs(&tests, &degradation)?,
        }]
    };
    let hash = cfg.hash();
    let results = evaluate_to_dir(&model, &sets, cfg.eval.init, &dir, &hash)?;
    for (name, e) in &results {
        println!(
            "set={name} videos={} mean_psnr={:.4} mean_ssim={:.5}",
            e.videos.len(),
            e.mean_psnr,
            e.mean_ssim
        );
    }
    println!("out={}", dir.display());
    Ok(())
}

fn tradeoff(config: ConfigArgs, reuse: Vec<usize>, out: Option<PathBuf>) -> Result<()> {
    let cfg = config.load(&[])?;
    let dir = output_dir(&cfg, out, Some("tradeoff"));
    let report = run_tradeoff(&cfg, &reuse, &dir)?;
    for row in &report.rows {
        println!(
            "label={} per_iteration_ms={:.3} amortized_ms={:.3} psnr={} status={}",
            row.label,
            row.per_iteration_ms,
            row.amortized_ms,
            row.mean_psnr().map_or_else(|| "-".into(), |p| format!("{p:.4}")),
            if row.failure.is_some() { "failed" } else { "ok" }
        );
    }
    println!("out={}", dir.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth { generator } => synth(generator),
        Command::Degrade {
            input,
            out,
            sigma,
            scale,
        } => {
            let lr = degrade_dir(&input, &out, sigma, scale)
                .with_context(|| format!("degrading {}", input.display()))?;
            println!("frames={} size={}x{} out={}", lr.frame_count(), lr.width(), lr.height(), out.display());
            Ok(())
        }
        Command::Train {
            config,
            strategy,
            reuse,
            cond_frame_number,
            out,
        } => train(config, strategy, reuse, cond_frame_number, out),
        Command::Eval {
            checkpoint,
            config,
            tests,
            no_hr,
            scale,
            out,
        } => eval(&checkpoint, config, tests, no_hr, scale, out),
        Command::Tradeoff { config, reuse, out } => tradeoff(config, reuse, out),
        Command::Plot { kind } => match kind {
            PlotKind::History { inputs, out } => Ok(plot_history(&inputs, &out)?),
            PlotKind::Tradeoff { input, out } => Ok(plot_tradeoff(&input, &out)?),
        },
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").replace('"', "'")
}

fn error_kind(err: &anyhow::Error) -> &'static str {
    err.chain()
        .find_map(|e| e.downcast_ref::<vsrlab_core::Error>())
        .map_or("runtime", |e| e.kind())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error kind=usage msg=\"{}\"", one_line(first));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error kind={} msg=\"{}\"", error_kind(&err), one_line(&format!("{err:#}")));
            ExitCode::FAILURE
        }
    }
}
