//! Run artifacts: per-round CSV, JSON summaries, manifests and the report fold.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::experiment::{ExperimentResult, PairedReport, SweepReport};
use crate::data::DatasetStats;
use crate::error::{Error, Result};
use crate::federation::RoundRecord;

pub const CSV_HEADER: [&str; 5] = ["round", "accuracy", "loss", "grad_evals", "guessed_steps"];

/// One line of a run CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub round: usize,
    pub accuracy: f64,
    pub loss: f64,
    pub grad_evals: u64,
    pub guessed_steps: u64,
}

impl From<&RoundRecord> for CurveRow {
    fn from(r: &RoundRecord) -> Self {
        CurveRow {
            round: r.round,
            accuracy: r.accuracy,
            loss: r.loss,
            grad_evals: r.grad_evals,
            guessed_steps: r.guessed_steps,
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

pub fn write_curve<W: std::io::Write>(writer: W, records: &[RoundRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if records.is_empty() {
        w.write_record(CSV_HEADER).map_err(csv_err)?;
    }
    for r in records {
        w.serialize(CurveRow::from(r)).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn curve_to_string(records: &[RoundRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_curve(&mut buf, records)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn write_curve_file(path: &Path, records: &[RoundRecord]) -> Result<()> {
    write_curve(fs::File::create(path)?, records)
}

pub fn read_curve_file(path: &Path) -> Result<Vec<CurveRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse(format!("{}: unexpected header {:?}", path.display(), header)));
    }
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub result: ExperimentResult,
    pub target_accuracy: Option<f64>,
    pub reached_target: bool,
    pub final_accuracy: Option<f64>,
    pub final_loss: Option<f64>,
}

impl TrainSummary {
    pub fn new(result: ExperimentResult, records: &[RoundRecord], target: Option<f64>) -> Self {
        TrainSummary {
            reached_target: result.rounds_to_target.is_some(),
            result,
            target_accuracy: target,
            final_accuracy: records.last().map(|r| r.accuracy),
            final_loss: records.last().map(|r| r.loss),
        }
    }
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Summary {
    Train(TrainSummary),
    Paired(PairedReport),
    Sweep(SweepReport),
}

/// Contents of `manifest.json`: everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    pub dataset: DatasetStats,
    pub dataset_source: serde_json::Value,
}

impl Manifest {
    pub fn new(command: &str, config: &ExperimentConfig, dataset: DatasetStats, source: serde_json::Value) -> Self {
        Manifest {
            tool: "gel".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seeds: config.seeds.clone(),
            config: config.clone(),
            dataset,
            dataset_source: source,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// `runs/<arm key>_seed<seed>.csv` under an output directory.
pub fn run_csv_path(out: &Path, result: &ExperimentResult) -> PathBuf {
    out.join("runs").join(format!("{}_seed{}.csv", result.arm.key(), result.seed))
}

/// Every `summary.json` at or below `root`, sorted by path.
pub fn find_summaries(root: &Path) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::Io(e.into()))?;
        if entry.file_type().is_file() && (entry.depth() == 0 || entry.file_name() == "summary.json") {
            found.push(entry.into_path());
        }
    }
    Ok(found)
}

fn fmt_opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".into(), |v| v.to_string())
}

fn fmt_f(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.digits$}"))
}

/// Plain-text table for one summary.
pub fn render_summary(summary: &Summary) -> String {
    let mut out = String::new();
    match summary {
        Summary::Train(t) => {
            let r = &t.result;
            out += &format!(
                "train {} seed {}: rounds {} | CR {} | target {} | final acc {} | grad evals {} | guessed {}\n",
                r.arm.key(),
                r.seed,
                r.rounds_run,
                fmt_opt(r.rounds_to_target),
                fmt_f(t.target_accuracy, 4),
                fmt_f(t.final_accuracy, 4),
                r.total_grad_evals,
                r.total_guessed_steps
            );
        }
        Summary::Paired(p) => {
            out += &format!("paired: target {:.4}, seeds {:?}\n", p.target_accuracy, p.seeds);
            out += &format!("  {:<24} {:>7} {:>9} {:>6} {:>6} {:>12}\n", "arm", "reached", "mean CR", "min", "max", "grad evals");
            for s in &p.summaries {
                out += &format!(
                    "  {:<24} {:>3}/{:<3} {:>9} {:>6} {:>6} {:>12.0}\n",
                    s.arm.key(),
                    s.reached,
                    s.runs,
                    fmt_f(s.mean_rounds, 1),
                    fmt_opt(s.min_rounds),
                    fmt_opt(s.max_rounds),
                    s.mean_grad_evals
                );
            }
            out += &format!("  mean speedup {} | mean savings {}\n", fmt_f(p.mean_speedup, 3), fmt_f(p.mean_savings, 0));
        }
        Summary::Sweep(s) => {
            out += &format!("sweep: target {:.4}, seeds {:?}\n", s.target_accuracy, s.seeds);
            out += &format!(
                "  {:>4} {:>6} {:>4} {:>10} {:>10} {:>10} {:>12} {:>12} {:>12}\n",
                "u'", "p%", "g'", "CR base", "CR gel", "CR target", "evals base", "evals gel", "evals target"
            );
            for c in &s.cells {
                out += &format!(
                    "  {:>4} {:>6} {:>4} {:>10} {:>10} {:>10} {:>12.0} {:>12.0} {:>12.0}\n",
                    c.budget,
                    c.percentage,
                    c.guesses,
                    fmt_f(c.baseline.mean_rounds, 1),
                    fmt_f(c.gel.mean_rounds, 1),
                    fmt_f(c.target.mean_rounds, 1),
                    c.baseline.mean_grad_evals,
                    c.gel.mean_grad_evals,
                    c.target.mean_grad_evals
                );
            }
        }
    }
    out
}

/// Folds every summary under `root` into one text report.
pub fn report(root: &Path) -> Result<String> {
    let paths = find_summaries(root)?;
    if paths.is_empty() {
        return Err(Error::Config(format!("no summary.json found under {}", root.display())));
    }
    let mut out = String::new();
    for path in paths {
        let summary: Summary = read_json(&path)?;
        out += &format!("== {}\n", path.display());
        out += &render_summary(&summary);
    }
    Ok(out)
}
