//! Experiment orchestration: configuration, paired arms, sweeps, metrics and
//! run artifacts.

mod config;
mod experiment;
mod metrics;
mod output;

pub use config::{DataConfig, ExperimentConfig, LocalWork, ModelConfig, ModelKind, SweepSpec, TargetSpec, TrainingSection};
pub use experiment::{
    paired_arms, ArmLabel, ArmRun, ArmSpec, ArmSummary, Calibration, Experiment, ExperimentResult, PairedReport,
    SeedComparison, SweepCell, SweepReport,
};
pub use metrics::{compute_savings, first_crossing, rounds_to_target, speedup};
pub use output::{
    curve_to_string, find_summaries, read_curve_file, read_json, render_summary, report, run_csv_path, write_curve,
    write_curve_file, write_json, CurveRow, Manifest, Summary, TrainSummary, CSV_HEADER,
};
