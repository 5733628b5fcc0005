use std::path::Path;

use serde::Serialize;

use super::artifacts::{create_dir, write_file};
use super::config::ExperimentConfig;
use super::data::test_sets;
use super::experiment::{evaluate_to_dir, train_experiment};
use crate::bptt::{Strategy, TrainStatus};
use crate::error::{Error, Result};

pub const REPORT_CSV: &str = "tradeoff.csv";
pub const SCATTER_CSV: &str = "tradeoff_scatter.csv";

#[derive(Clone, Debug, PartialEq)]
pub struct SetScore {
    pub name: String,
    pub psnr: f64,
    pub ssim: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TradeoffRow {
    pub label: String,
    pub strategy: Strategy,
    pub reuse: usize,
    pub is_base: bool,
    /// `None` when the run completed.
    pub failure: Option<String>,
    pub mean_step_ms: f64,
    pub amortized_ms: f64,
    pub per_iteration_ms: f64,
    pub scores: Vec<SetScore>,
}

impl TradeoffRow {
    pub fn mean_psnr(&self) -> Option<f64> {
        if self.failure.is_some() || self.scores.is_empty() {
            return None;
        }
        Some(self.scores.iter().map(|s| s.psnr).sum::<f64>() / self.scores.len() as f64)
    }
}

/// Base (RI) row first, then PI rows by increasing `R`.
#[derive(Clone, Debug, PartialEq)]
pub struct TradeoffReport {
    pub config_hash: String,
    pub rows: Vec<TradeoffRow>,
}

/// The config of one sweep member; only the strategy and `R` differ from `base`.
pub fn member_config(base: &ExperimentConfig, reuse: Option<usize>) -> ExperimentConfig {
    let mut cfg = base.clone();
    match reuse {
        Some(r) => {
            cfg.training.strategy = Strategy::Pi;
            cfg.training.reuse = r;
            cfg.name = format!("{}-pi-r{r}", base.name);
        }
        None => {
            cfg.training.strategy = Strategy::Ri;
            cfg.name = format!("{}-ri-base", base.name);
        }
    }
    cfg
}

fn member_dir(reuse: Option<usize>) -> String {
    match reuse {
        Some(r) => format!("r{r:03}"),
        None => "base".into(),
    }
}

/// Trains an RI baseline and one PI model per `R` with identical seeds and iteration
/// budgets, evaluates each on the configured test sets and writes the report.
pub fn run_tradeoff(base: &ExperimentConfig, reuse: &[usize], dir: &Path) -> Result<TradeoffReport> {
    if reuse.is_empty() || reuse.contains(&0) {
        return Err(Error::Config("R list must be non-empty with values >= 1".into()));
    }
    let mut rs = reuse.to_vec();
    rs.sort_unstable();
    rs.dedup();
    base.validate()?;
    let sets = test_sets(base)?;
    create_dir(dir)?;

    let members = std::iter::once(None).chain(rs.iter().map(|&r| Some(r)));
    let mut rows = Vec::new();
    for reuse in members {
        let cfg = member_config(base, reuse);
        let sub = dir.join(member_dir(reuse));
        let summary = train_experiment(&cfg, &sub)?;
        let mut row = TradeoffRow {
            label: reuse.map_or_else(|| "base".to_string(), |r| format!("R={r}")),
            strategy: cfg.training.strategy,
            reuse: cfg.training.reuse,
            is_base: reuse.is_none(),
            failure: None,
            mean_step_ms: summary.ledger.mean_step_ms(),
            amortized_ms: summary.ledger.amortized_ms(),
            per_iteration_ms: summary.ledger.per_iteration_ms(),
            scores: Vec::new(),
        };
        match summary.status {
            TrainStatus::Diverged { iteration, reason } => {
                row.failure = Some(format!("diverged at iteration {iteration}: {reason}"));
            }
            TrainStatus::Completed if !sets.is_empty() => {
                match evaluate_to_dir(&summary.model, &sets, cfg.eval.init, &sub, &summary.config_hash) {
                    Ok(results) => {
                        row.scores = results
                            .into_iter()
                            .map(|(name, e)| SetScore {
                                name,
                                psnr: e.mean_psnr,
                                ssim: e.mean_ssim,
                            })
                            .collect();
                    }
                    Err(Error::Divergence(reason)) => row.failure = Some(format!("evaluation diverged: {reason}")),
                    Err(e) => return Err(e),
                }
            }
            TrainStatus::Completed => {}
        }
        rows.push(row);
    }
    let report = TradeoffReport {
        config_hash: base.hash(),
        rows,
    };
    write_report(&report, dir)?;
    Ok(report)
}

#[derive(Serialize)]
struct ScatterRow<'a> {
    label: &'a str,
    time_ms: f64,
    psnr: f64,
}

fn fmt(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else {
        String::new()
    }
}

/// Writes `tradeoff.csv` (one row per member) and `tradeoff_scatter.csv` (time vs PSNR).
pub fn write_report(report: &TradeoffReport, dir: &Path) -> Result<()> {
    let set_names: Vec<String> = report
        .rows
        .iter()
        .find(|r| !r.scores.is_empty())
        .map(|r| r.scores.iter().map(|s| s.name.clone()).collect())
        .unwrap_or_default();
    let mut header = vec![
        "label".to_string(),
        "strategy".into(),
        "R".into(),
        "base".into(),
        "status".into(),
        "mean_step_ms".into(),
        "amortized_ms".into(),
        "per_iteration_ms".into(),
    ];
    for n in &set_names {
        header.push(format!("{n}_psnr"));
        header.push(format!("{n}_ssim"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::invalid(e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    for row in &report.rows {
        let mut rec = vec![
            row.label.clone(),
            row.strategy.as_str().to_string(),
            row.reuse.to_string(),
            row.is_base.to_string(),
            row.failure.clone().map_or_else(|| "ok".into(), |f| format!("failed: {f}")),
            fmt(row.mean_step_ms),
            fmt(row.amortized_ms),
            fmt(row.per_iteration_ms),
        ];
        for n in &set_names {
            match row.scores.iter().find(|s| &s.name == n) {
                Some(s) => {
                    rec.push(fmt(s.psnr));
                    rec.push(fmt(s.ssim));
                }
                None => {
                    rec.push(String::new());
                    rec.push(String::new());
                }
            }
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| Error::invalid(e.to_string()))?).expect("utf8");
    write_file(&dir.join(REPORT_CSV), &format!("# config_hash={}\n{body}", report.config_hash))?;

    let mut s = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    s.write_record(["label", "time_ms", "psnr"]).map_err(csv_err)?;
    for row in &report.rows {
        if let Some(psnr) = row.mean_psnr() {
            s.serialize(ScatterRow {
                label: &row.label,
                time_ms: row.per_iteration_ms,
                psnr,
            })
            .map_err(csv_err)?;
        }
    }
    let body = String::from_utf8(s.into_inner().map_err(|e| Error::invalid(e.to_string()))?).expect("utf8");
    write_file(&dir.join(SCATTER_CSV), &format!("# config_hash={}\n{body}", report.config_hash))
}
