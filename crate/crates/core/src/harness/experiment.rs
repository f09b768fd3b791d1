//! Paired Baseline / GeL / Target experiments and guess-percentage sweeps.
//!
//! All arms of one replicate run under the same master seed, so they share
//! the initial model, the selected clients and the sampled budgets round for
//! round; they differ only in budget and guess policy.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, TargetSpec};
use super::metrics::{compute_savings, mean, rounds_to_target, speedup};
use crate::data::FederatedDataset;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::federation::{run_training, streams, BudgetModel, GuessPolicy, RoundRecord};
use crate::models::{Model, ParameterVector};
use crate::numeric::seeded_stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArmLabel {
    Baseline,
    #[serde(rename = "gel")]
    GeL,
    Target,
}

impl std::fmt::Display for ArmLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ArmLabel::Baseline => "baseline",
            ArmLabel::GeL => "gel",
            ArmLabel::Target => "target",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmSpec {
    pub label: ArmLabel,
    pub budget: BudgetModel,
    pub guesses: GuessPolicy,
}

impl ArmSpec {
    pub fn new(label: ArmLabel, budget: BudgetModel, guesses: GuessPolicy) -> Self {
        ArmSpec { label, budget, guesses }
    }

    /// File-name-safe identifier, e.g. `gel_u4_g4` or `baseline_u4-13_g0`.
    pub fn key(&self) -> String {
        let budget = match self.budget {
            BudgetModel::Homogeneous { budget } => format!("u{budget}"),
            BudgetModel::HeterogeneousUniform { min, max } => format!("u{min}-{max}"),
        };
        let guesses = match self.guesses {
            GuessPolicy::FixedCount(g) => format!("g{g}"),
            GuessPolicy::Percentage(p) => format!("p{p}"),
        };
        format!("{}_{budget}_{guesses}", self.label)
    }
}

/// Baseline `(u', 0)`, GeL `(u', g')` and Target `(u' + g', 0)`.
///
/// With heterogeneous budgets the Target arm shifts the range by `g` and is
/// only defined for a fixed guess count.
pub fn paired_arms(budget: BudgetModel, guesses: GuessPolicy) -> Result<Vec<ArmSpec>> {
    budget.validate()?;
    guesses.validate()?;
    let none = GuessPolicy::none();
    let mut arms = vec![ArmSpec::new(ArmLabel::Baseline, budget, none), ArmSpec::new(ArmLabel::GeL, budget, guesses)];
    match budget {
        BudgetModel::Homogeneous { budget: u } => {
            let g = guesses.resolve(u);
            if g == 0 {
                return Err(Error::Config(format!("guess policy {guesses:?} gives no guesses for budget {u}")));
            }
            arms.push(ArmSpec::new(ArmLabel::Target, BudgetModel::Homogeneous { budget: u + g }, none));
        }
        BudgetModel::HeterogeneousUniform { min, max } => match guesses {
            GuessPolicy::FixedCount(0) => return Err(Error::Config("GeL arm needs at least one guess".into())),
            GuessPolicy::FixedCount(g) => arms.push(ArmSpec::new(
                ArmLabel::Target,
                BudgetModel::HeterogeneousUniform { min: min + g, max: max + g },
                none,
            )),
            GuessPolicy::Percentage(_) => {}
        },
    }
    Ok(arms)
}

/// Outcome of one arm on one replicate seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub arm: ArmSpec,
    pub seed: u64,
    pub rounds_to_target: Option<usize>,
    pub rounds_run: usize,
    pub total_grad_evals: u64,
    pub total_guessed_steps: u64,
    pub accuracy_curve: Vec<f64>,
}

/// A result plus the full per-round records it was derived from.
#[derive(Debug, Clone)]
pub struct ArmRun {
    pub result: ExperimentResult,
    pub records: Vec<RoundRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub arm: ArmSpec,
    pub runs: usize,
    pub reached: usize,
    /// Mean/min/max rounds to target over the runs that reached it.
    pub mean_rounds: Option<f64>,
    pub min_rounds: Option<usize>,
    pub max_rounds: Option<usize>,
    pub mean_grad_evals: f64,
}

impl ArmSummary {
    pub fn from_results(arm: ArmSpec, results: &[&ExperimentResult]) -> Self {
        let rounds: Vec<usize> = results.iter().filter_map(|r| r.rounds_to_target).collect();
        let as_f64: Vec<f64> = rounds.iter().map(|&r| r as f64).collect();
        let evals: Vec<f64> = results.iter().map(|r| r.total_grad_evals as f64).collect();
        ArmSummary {
            arm,
            runs: results.len(),
            reached: rounds.len(),
            mean_rounds: mean(&as_f64),
            min_rounds: rounds.iter().min().copied(),
            max_rounds: rounds.iter().max().copied(),
            mean_grad_evals: mean(&evals).unwrap_or(0.0),
        }
    }

    pub fn all_reached(&self) -> bool {
        self.runs > 0 && self.reached == self.runs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub reference: ArmSpec,
    pub fraction: f64,
    pub rounds: usize,
    pub tail: f64,
    /// Tail-mean accuracy of the reference arm per seed.
    pub final_accuracies: Vec<f64>,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedComparison {
    pub seed: u64,
    /// `CR_baseline / CR_gel`.
    pub speedup: Option<f64>,
    /// Gradient computations saved versus Target (homogeneous budgets only).
    pub savings: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedReport {
    pub arms: Vec<ArmSpec>,
    pub seeds: Vec<u64>,
    pub clients_per_round: usize,
    pub max_rounds: usize,
    pub target_accuracy: f64,
    pub calibration: Option<Calibration>,
    pub summaries: Vec<ArmSummary>,
    pub comparisons: Vec<SeedComparison>,
    pub mean_speedup: Option<f64>,
    pub mean_savings: Option<f64>,
    pub results: Vec<ExperimentResult>,
}

impl PairedReport {
    pub fn summary(&self, label: ArmLabel) -> Option<&ArmSummary> {
        self.summaries.iter().find(|s| s.arm.label == label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub budget: usize,
    pub percentage: f64,
    pub guesses: usize,
    pub baseline: ArmSummary,
    pub gel: ArmSummary,
    pub target: ArmSummary,
}

impl SweepCell {
    pub fn all_reached(&self) -> bool {
        self.baseline.all_reached() && self.gel.all_reached() && self.target.all_reached()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub seeds: Vec<u64>,
    pub target_accuracy: f64,
    pub calibration: Option<Calibration>,
    pub cells: Vec<SweepCell>,
    pub results: Vec<ExperimentResult>,
}

/// A configured experiment: resolved dataset and model plus the config.
pub struct Experiment {
    config: ExperimentConfig,
    dataset: FederatedDataset,
    source: serde_json::Value,
    model: Model,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let (dataset, source) = config.build_dataset()?;
        Self::with_dataset(config, dataset, source)
    }

    pub fn with_dataset(config: ExperimentConfig, dataset: FederatedDataset, source: serde_json::Value) -> Result<Self> {
        config.validate()?;
        if config.training.clients_per_round > dataset.num_clients() {
            return Err(Error::Config(format!(
                "clients_per_round {} exceeds the {} available clients",
                config.training.clients_per_round,
                dataset.num_clients()
            )));
        }
        let model = config.build_model(&dataset);
        Ok(Experiment { config, dataset, source, model })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn dataset(&self) -> &FederatedDataset {
        &self.dataset
    }

    /// Where the dataset came from (file path or generator parameters).
    pub fn dataset_source(&self) -> &serde_json::Value {
        &self.source
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    /// The replicate's shared initial model.
    pub fn init_params(&self, seed: u64) -> Result<ParameterVector> {
        self.model.init(&mut seeded_stream(seed, streams::INIT))
    }

    /// Runs one arm on one replicate. `target = None` runs all `max_rounds`.
    pub fn run_arm(&self, arm: &ArmSpec, seed: u64, target: Option<f64>, max_rounds: usize) -> Result<ArmRun> {
        self.run_arm_with(arm, seed, target, max_rounds, self.config.training.execution)
    }

    fn run_arm_with(
        &self,
        arm: &ArmSpec,
        seed: u64,
        target: Option<f64>,
        max_rounds: usize,
        execution: Execution,
    ) -> Result<ArmRun> {
        let mut training = self.config.training_for(seed, target);
        training.budget = arm.budget;
        training.guesses = arm.guesses;
        training.max_rounds = max_rounds;
        training.execution = execution;
        let run = run_training(&self.model, &self.dataset, self.init_params(seed)?, &training)?;
        let last = run.records.last();
        let result = ExperimentResult {
            arm: *arm,
            seed,
            rounds_to_target: target.and_then(|t| rounds_to_target(&run.records, t)),
            rounds_run: run.records.len(),
            total_grad_evals: last.map_or(0, |r| r.grad_evals),
            total_guessed_steps: last.map_or(0, |r| r.guessed_steps),
            accuracy_curve: run.records.iter().map(|r| r.accuracy).collect(),
        };
        Ok(ArmRun { result, records: run.records })
    }

    /// Runs independent `(arm, seed)` jobs, concurrently when configured.
    /// Output order matches `jobs`.
    pub fn run_jobs(&self, jobs: &[(ArmSpec, u64)], target: Option<f64>, max_rounds: usize) -> Result<Vec<ArmRun>> {
        let outer = self.config.training.execution;
        // One level of parallelism is plenty; inner rounds run serially.
        let inner = if outer.is_parallel() && jobs.len() > 1 { Execution::Serial } else { outer };
        outer
            .map(jobs, |(arm, seed)| self.run_arm_with(arm, *seed, target, max_rounds, inner))
            .into_iter()
            .collect()
    }

    /// Fixed target, or one calibrated against `reference`.
    pub fn resolve_target(&self, reference: &ArmSpec) -> Result<(f64, Option<Calibration>)> {
        match self.config.training.target {
            TargetSpec::Fixed(t) => Ok((t, None)),
            TargetSpec::Calibrated { fraction, rounds, tail } => {
                let cal = self.calibrate(reference, fraction, rounds, tail)?;
                Ok((cal.target, Some(cal)))
            }
        }
    }

    pub fn calibrate(&self, reference: &ArmSpec, fraction: f64, rounds: usize, tail: f64) -> Result<Calibration> {
        let jobs: Vec<(ArmSpec, u64)> = self.config.seeds.iter().map(|&s| (*reference, s)).collect();
        let runs = self.run_jobs(&jobs, None, rounds)?;
        let window = ((rounds as f64 * tail).ceil() as usize).clamp(1, rounds);
        let finals: Vec<f64> = runs
            .iter()
            .map(|r| {
                let curve = &r.result.accuracy_curve;
                curve[curve.len() - window..].iter().sum::<f64>() / window as f64
            })
            .collect();
        let target = fraction * mean(&finals).expect("at least one seed");
        Ok(Calibration { reference: *reference, fraction, rounds, tail, final_accuracies: finals, target })
    }

    /// Baseline / GeL / Target over every replicate seed, using the
    /// configured local budget and guess policy.
    pub fn run_paired(&self) -> Result<(PairedReport, Vec<ArmRun>)> {
        let arms = paired_arms(self.config.local.budget, self.config.local.guesses)?;
        let reference = arms.iter().find(|a| a.label == ArmLabel::Target).unwrap_or(&arms[0]);
        let (target, calibration) = self.resolve_target(reference)?;
        let seeds = &self.config.seeds;
        let jobs: Vec<(ArmSpec, u64)> =
            seeds.iter().flat_map(|&s| arms.iter().map(move |a| (*a, s))).collect();
        let max_rounds = self.config.training.max_rounds;
        let runs = self.run_jobs(&jobs, Some(target), max_rounds)?;
        let results: Vec<ExperimentResult> = runs.iter().map(|r| r.result.clone()).collect();

        let summaries = arms
            .iter()
            .map(|a| {
                let mine: Vec<&ExperimentResult> = results.iter().filter(|r| r.arm == *a).collect();
                ArmSummary::from_results(*a, &mine)
            })
            .collect();

        let find = |label: ArmLabel, seed: u64| {
            results.iter().find(|r| r.arm.label == label && r.seed == seed).and_then(|r| r.rounds_to_target)
        };
        let homogeneous = match (self.config.local.budget, arms.len()) {
            (BudgetModel::Homogeneous { budget }, 3) => Some((budget, self.config.local.guesses.resolve(budget))),
            _ => None,
        };
        let k = self.config.training.clients_per_round as u64;
        let comparisons: Vec<SeedComparison> = seeds
            .iter()
            .map(|&seed| {
                let (b, g, t) = (find(ArmLabel::Baseline, seed), find(ArmLabel::GeL, seed), find(ArmLabel::Target, seed));
                let savings = match (homogeneous, t, g) {
                    (Some((u, gg)), Some(t), Some(g)) => {
                        Some(compute_savings(t as u64, g as u64, u as u64, gg as u64, k))
                    }
                    _ => None,
                };
                SeedComparison { seed, speedup: speedup(b, g), savings }
            })
            .collect();
        let speedups: Vec<f64> = comparisons.iter().filter_map(|c| c.speedup).collect();
        let savings: Vec<f64> = comparisons.iter().filter_map(|c| c.savings.map(|s| s as f64)).collect();

        let report = PairedReport {
            arms,
            seeds: seeds.clone(),
            clients_per_round: self.config.training.clients_per_round,
            max_rounds,
            target_accuracy: target,
            calibration,
            summaries,
            mean_speedup: mean(&speedups),
            mean_savings: mean(&savings),
            comparisons,
            results,
        };
        Ok((report, runs))
    }

    /// Grid of homogeneous budgets `u'` × guess percentages. Each cell holds
    /// Baseline `(u', 0)`, GeL `(u', p%)` and Target `(u' + g', 0)`; identical
    /// arms across cells are run once.
    pub fn run_sweep(&self) -> Result<(SweepReport, Vec<ArmRun>)> {
        let spec = &self.config.sweep;
        if spec.budgets.is_empty() || spec.percentages.is_empty() {
            return Err(Error::Config("sweep needs at least one budget and one percentage".into()));
        }
        let none = GuessPolicy::none();
        let mut cells_arms = Vec::new();
        let mut unique: Vec<ArmSpec> = Vec::new();
        let mut push = |arm: ArmSpec| {
            if !unique.contains(&arm) {
                unique.push(arm);
            }
            arm
        };
        for &u in &spec.budgets {
            for &p in &spec.percentages {
                let policy = GuessPolicy::Percentage(p);
                let g = policy.resolve(u);
                let hom = |b| BudgetModel::Homogeneous { budget: b };
                let b = push(ArmSpec::new(ArmLabel::Baseline, hom(u), none));
                let gel = push(ArmSpec::new(ArmLabel::GeL, hom(u), policy));
                let t = push(ArmSpec::new(ArmLabel::Target, hom(u + g), none));
                cells_arms.push((u, p, g, b, gel, t));
            }
        }

        let min_budget = *spec.budgets.iter().min().expect("nonempty");
        let reference = ArmSpec::new(ArmLabel::Baseline, BudgetModel::Homogeneous { budget: min_budget }, none);
        let (target, calibration) = self.resolve_target(&reference)?;

        let seeds = &self.config.seeds;
        let jobs: Vec<(ArmSpec, u64)> =
            unique.iter().flat_map(|a| seeds.iter().map(move |&s| (*a, s))).collect();
        let runs = self.run_jobs(&jobs, Some(target), self.config.training.max_rounds)?;
        let results: Vec<ExperimentResult> = runs.iter().map(|r| r.result.clone()).collect();

        let mut by_arm: BTreeMap<String, Vec<&ExperimentResult>> = BTreeMap::new();
        for r in &results {
            by_arm.entry(r.arm.key()).or_default().push(r);
        }
        let summarize = |arm: &ArmSpec| ArmSummary::from_results(*arm, &by_arm[&arm.key()]);
        let cells = cells_arms
            .iter()
            .map(|(u, p, g, b, gel, t)| SweepCell {
                budget: *u,
                percentage: *p,
                guesses: *g,
                baseline: summarize(b),
                gel: summarize(gel),
                target: summarize(t),
            })
            .collect();
        Ok((SweepReport { seeds: seeds.clone(), target_accuracy: target, calibration, cells, results }, runs))
    }
}
