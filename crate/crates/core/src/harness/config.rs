//! Declarative experiment configuration (TOML).
//!
//! ```toml
//! seeds = [1, 2, 3, 4, 5]
//!
//! [data]
//! seed = 7
//! iid = false
//! [data.synthetic]
//! num_clients = 100
//! dim = 20
//! classes = 5
//!
//! [model]
//! kind = "logistic_regression"
//!
//! [training]
//! clients_per_round = 20
//! batch_size = 5
//! max_rounds = 1000
//! target = 0.3            # or { fraction = 0.8, rounds = 600, tail = 0.1 }
//!
//! [local.budget]
//! kind = "homogeneous"
//! budget = 4
//! [local.guesses]
//! kind = "fixed_count"
//! value = 4
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{generate_synthetic, partition_iid, read_dataset, FederatedDataset, SyntheticConfig};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::federation::{BudgetModel, GuessPolicy, TrainingConfig};
use crate::models::{Model, DEFAULT_HIDDEN};
use crate::numeric::seeded_stream;
use crate::optim::OptimizerConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Replicate master seeds. Each seed fixes model init, client selection,
    /// budget draws and batch sampling; every arm of a replicate shares them.
    pub seeds: Vec<u64>,
    pub data: DataConfig,
    pub model: ModelConfig,
    pub training: TrainingSection,
    pub local: LocalWork,
    pub sweep: SweepSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seeds: (1..=5).collect(),
            data: DataConfig::default(),
            model: ModelConfig::default(),
            training: TrainingSection::default(),
            local: LocalWork::default(),
            sweep: SweepSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Load a dataset table instead of generating one.
    pub path: Option<PathBuf>,
    pub seed: u64,
    /// Repartition the pooled samples IID across the same clients.
    pub iid: bool,
    pub synthetic: SyntheticConfig,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig { path: None, seed: 7, iid: false, synthetic: SyntheticConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    LogisticRegression,
    Mlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub hidden: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { kind: ModelKind::LogisticRegression, hidden: DEFAULT_HIDDEN }
    }
}

/// How the target accuracy is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetSpec {
    Fixed(f64),
    /// `fraction` × the reference arm's final accuracy, where final accuracy
    /// is the mean over the last `tail` fraction of a `rounds`-long run,
    /// averaged over the replicate seeds.
    Calibrated { fraction: f64, rounds: usize, tail: f64 },
}

impl Default for TargetSpec {
    fn default() -> Self {
        TargetSpec::Calibrated { fraction: 0.8, rounds: 600, tail: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSection {
    pub clients_per_round: usize,
    pub batch_size: usize,
    pub max_rounds: usize,
    pub target: TargetSpec,
    pub optimizer: OptimizerConfig,
    pub execution: Execution,
}

impl Default for TrainingSection {
    fn default() -> Self {
        TrainingSection {
            clients_per_round: 20,
            batch_size: 5,
            max_rounds: 1000,
            target: TargetSpec::default(),
            optimizer: OptimizerConfig::default(),
            execution: Execution::default(),
        }
    }
}

/// Per-client local work for `train` and `paired`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalWork {
    pub budget: BudgetModel,
    pub guesses: GuessPolicy,
}

impl Default for LocalWork {
    fn default() -> Self {
        LocalWork { budget: BudgetModel::Homogeneous { budget: 4 }, guesses: GuessPolicy::FixedCount(4) }
    }
}

/// Grid of real-step budgets × guess percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub budgets: Vec<usize>,
    pub percentages: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec { budgets: vec![5, 10, 15], percentages: vec![10.0, 25.0, 50.0, 75.0, 100.0, 125.0] }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one replicate seed is required".into()));
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.seeds.len() {
            return Err(Error::Config("replicate seeds must be distinct".into()));
        }
        self.local.budget.validate()?;
        self.local.guesses.validate()?;
        if self.training.batch_size == 0 || self.training.clients_per_round == 0 {
            return Err(Error::Config("batch_size and clients_per_round must be >= 1".into()));
        }
        match self.training.target {
            TargetSpec::Fixed(t) if !(t > 0.0 && t < 1.0) => {
                return Err(Error::Config(format!("target accuracy must lie in (0, 1), got {t}")));
            }
            TargetSpec::Calibrated { fraction, rounds, tail }
                if !(fraction > 0.0 && fraction < 1.0) || rounds == 0 || !(tail > 0.0 && tail <= 1.0) =>
            {
                return Err(Error::Config("calibrated target needs fraction in (0,1), rounds >= 1, tail in (0,1]".into()));
            }
            _ => {}
        }
        if self.model.kind == ModelKind::Mlp && self.model.hidden == 0 {
            return Err(Error::Config("MLP needs at least one hidden unit".into()));
        }
        if self.sweep.budgets.iter().any(|&u| u == 0) || self.sweep.percentages.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::Config("sweep budgets must be >= 1 and percentages >= 0".into()));
        }
        Ok(())
    }

    /// Loads or generates the dataset, returning it with a provenance record.
    pub fn build_dataset(&self) -> Result<(FederatedDataset, serde_json::Value)> {
        let (mut dataset, mut source) = match &self.data.path {
            Some(path) => {
                let (ds, sidecar) = read_dataset(path)?;
                (ds, serde_json::json!({ "path": path, "sidecar_source": sidecar.source }))
            }
            None => {
                let ds = generate_synthetic(&self.data.synthetic, &mut seeded_stream(self.data.seed, "data"))?;
                (ds, serde_json::json!({ "generator": "synthetic", "seed": self.data.seed, "params": self.data.synthetic }))
            }
        };
        if self.data.iid {
            dataset = partition_iid(&dataset, &mut seeded_stream(self.data.seed, "iid"))?;
            source["iid_partition_seed"] = self.data.seed.into();
        }
        Ok((dataset, source))
    }

    pub fn build_model(&self, dataset: &FederatedDataset) -> Model {
        match self.model.kind {
            ModelKind::LogisticRegression => Model::logistic(dataset.dim(), dataset.classes()),
            ModelKind::Mlp => Model::mlp(dataset.dim(), self.model.hidden, dataset.classes()),
        }
    }

    /// Training configuration for one replicate, before the arm's budget and
    /// guess policy are filled in.
    pub fn training_for(&self, seed: u64, target: Option<f64>) -> TrainingConfig {
        TrainingConfig {
            seed,
            clients_per_round: self.training.clients_per_round,
            batch_size: self.training.batch_size,
            budget: self.local.budget,
            guesses: self.local.guesses,
            target_accuracy: target,
            max_rounds: self.training.max_rounds,
            optimizer: self.training.optimizer,
            execution: self.training.execution,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = ExperimentConfig::default();
        let text = cfg.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
        cfg.validate().unwrap();
    }

    #[test]
    fn parses_documented_example() {
        let text = r#"
            seeds = [1, 2, 3, 4, 5]
            [data]
            seed = 7
            [data.synthetic]
            num_clients = 30
            dim = 8
            [model]
            kind = "mlp"
            hidden = 12
            [training]
            max_rounds = 50
            target = 0.3
            [training.optimizer]
            kind = "adam"
            epsilon = 0.002
            [local.budget]
            kind = "heterogeneous_uniform"
            min = 4
            max = 13
            [local.guesses]
            kind = "percentage"
            value = 25.0
        "#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.data.synthetic.num_clients, 30);
        assert_eq!(cfg.data.synthetic.classes, 5);
        assert_eq!(cfg.model, ModelConfig { kind: ModelKind::Mlp, hidden: 12 });
        assert_eq!(cfg.training.target, TargetSpec::Fixed(0.3));
        assert_eq!(cfg.local.budget, BudgetModel::HeterogeneousUniform { min: 4, max: 13 });
        assert_eq!(cfg.local.guesses, GuessPolicy::Percentage(25.0));
        match cfg.training.optimizer {
            OptimizerConfig::Adam(a) => {
                assert_eq!(a.epsilon, 0.002);
                assert_eq!(a.alpha, 0.9);
            }
            other => panic!("{other:?}"),
        }
        cfg.validate().unwrap();
    }

    #[test]
    fn calibrated_target_table_parses() {
        let cfg = ExperimentConfig::from_toml("[training]\ntarget = { fraction = 0.7, rounds = 100, tail = 0.2 }\n").unwrap();
        assert_eq!(cfg.training.target, TargetSpec::Calibrated { fraction: 0.7, rounds: 100, tail: 0.2 });
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::from_toml("unknown_key = 3").is_err());
        let mut cfg = ExperimentConfig { seeds: vec![], ..Default::default() };
        assert!(cfg.validate().is_err());
        cfg.seeds = vec![1, 1];
        assert!(cfg.validate().is_err());
        cfg.seeds = vec![1];
        cfg.training.target = TargetSpec::Fixed(1.2);
        assert!(cfg.validate().is_err());
        cfg.training.target = TargetSpec::Fixed(0.5);
        cfg.local.budget = BudgetModel::Homogeneous { budget: 0 };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }
}
