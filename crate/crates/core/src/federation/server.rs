use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{client_update, select_clients, streams, BudgetModel, ClientOutcome, ClientPlan, GuessPolicy};
use crate::data::FederatedDataset;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::models::{correct_count, Objective, ParameterVector, Split};
use crate::numeric::{seeded_stream, Vector};
use crate::optim::OptimizerConfig;

/// Everything that determines a training run besides the data and the
/// initial model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub seed: u64,
    pub clients_per_round: usize,
    pub batch_size: usize,
    pub budget: BudgetModel,
    pub guesses: GuessPolicy,
    /// Stop after the first round whose pooled test accuracy reaches this.
    pub target_accuracy: Option<f64>,
    pub max_rounds: usize,
    pub optimizer: OptimizerConfig,
    pub execution: Execution,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            seed: 0,
            clients_per_round: 20,
            batch_size: 5,
            budget: BudgetModel::Homogeneous { budget: 4 },
            guesses: GuessPolicy::none(),
            target_accuracy: None,
            max_rounds: 100,
            optimizer: OptimizerConfig::default(),
            execution: Execution::default(),
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self, pool_size: usize) -> Result<()> {
        self.budget.validate()?;
        self.guesses.validate()?;
        if self.clients_per_round == 0 || self.clients_per_round > pool_size {
            return Err(Error::Config(format!(
                "clients_per_round must be in 1..={pool_size}, got {}",
                self.clients_per_round
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if let Some(t) = self.target_accuracy {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::Config(format!("target accuracy must lie in (0, 1), got {t}")));
            }
        }
        Ok(())
    }
}

/// Metrics after one aggregation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based round index.
    pub round: usize,
    pub selected: Vec<usize>,
    pub budgets: Vec<usize>,
    pub guesses: Vec<usize>,
    /// Pooled test accuracy of the new global model over all clients.
    pub accuracy: f64,
    /// Pooled train loss of the new global model over all clients.
    pub loss: f64,
    /// Cumulative gradient evaluations.
    pub grad_evals: u64,
    /// Cumulative guessed steps.
    pub guessed_steps: u64,
}

#[derive(Debug, Clone)]
pub struct RoundOutcome {
    pub record: RoundRecord,
    /// Global model the clients started from.
    pub broadcast: ParameterVector,
    /// Client results in ascending client-id order.
    pub clients: Vec<ClientOutcome>,
}

/// Serializable server state: global model plus round and counters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub round: usize,
    pub grad_evals: u64,
    pub guessed_steps: u64,
    pub params: ParameterVector,
}

pub const CHECKPOINT_FORMAT: &str = "gel-checkpoint/v1";

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        serde_json::to_writer_pretty(File::create(path)?, self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let cp: Checkpoint = serde_json::from_reader(File::open(path)?)?;
        if cp.format != CHECKPOINT_FORMAT {
            return Err(Error::Parse(format!("unsupported checkpoint format {:?}", cp.format)));
        }
        Ok(cp)
    }
}

/// Elementwise mean of client models, summed in the order given.
///
/// Each coordinate is clamped to the range spanned by the inputs so rounding
/// in the sum can never push the mean outside it.
pub fn aggregate(models: &[ParameterVector]) -> Result<ParameterVector> {
    let first = models.first().ok_or_else(|| Error::Domain("nothing to aggregate".into()))?;
    for m in &models[1..] {
        first.ensure_same_layout(m)?;
    }
    let k = models.len() as f64;
    let mean: Vector = (0..first.len())
        .map(|i| {
            let (mut sum, mut lo, mut hi) = (0.0, f64::INFINITY, f64::NEG_INFINITY);
            for m in models {
                let x = m.values()[i];
                sum += x;
                lo = lo.min(x);
                hi = hi.max(x);
            }
            (sum / k).clamp(lo, hi)
        })
        .collect();
    ParameterVector::new(first.layout().to_vec(), mean)
}

/// The round loop. Rounds are sequential; clients within a round run
/// according to the configured [`Execution`].
pub struct Server<'a, O: Objective + ?Sized> {
    objective: &'a O,
    dataset: &'a FederatedDataset,
    config: TrainingConfig,
    global: ParameterVector,
    round: usize,
    grad_evals: u64,
    guessed_steps: u64,
}

impl<'a, O: Objective + ?Sized> Server<'a, O> {
    pub fn new(
        objective: &'a O,
        dataset: &'a FederatedDataset,
        config: TrainingConfig,
        init: ParameterVector,
    ) -> Result<Self> {
        config.validate(dataset.num_clients())?;
        Ok(Server { objective, dataset, config, global: init, round: 0, grad_evals: 0, guessed_steps: 0 })
    }

    pub fn resume(
        objective: &'a O,
        dataset: &'a FederatedDataset,
        config: TrainingConfig,
        checkpoint: Checkpoint,
    ) -> Result<Self> {
        let mut server = Self::new(objective, dataset, config, checkpoint.params)?;
        server.round = checkpoint.round;
        server.grad_evals = checkpoint.grad_evals;
        server.guessed_steps = checkpoint.guessed_steps;
        Ok(server)
    }

    pub fn global(&self) -> &ParameterVector {
        &self.global
    }

    /// Rounds completed so far.
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn config(&self) -> &TrainingConfig {
        &self.config
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_owned(),
            round: self.round,
            grad_evals: self.grad_evals,
            guessed_steps: self.guessed_steps,
            params: self.global.clone(),
        }
    }

    /// Selection, budgets and guess counts for 0-based round `t`.
    pub fn plan_round(&self, t: usize) -> Result<Vec<ClientPlan>> {
        let seed = self.config.seed;
        let selected =
            select_clients(self.dataset.num_clients(), self.config.clients_per_round, &mut seeded_stream(seed, &streams::select(t)))?;
        let mut budget_stream = seeded_stream(seed, &streams::budget(t));
        Ok(selected
            .into_iter()
            .map(|client_id| {
                let budget = self.config.budget.sample(&mut budget_stream);
                ClientPlan {
                    client_id,
                    budget,
                    guesses: self.config.guesses.resolve(budget),
                    batch_size: self.config.batch_size,
                }
            })
            .collect())
    }

    pub fn run_round(&mut self, trace: bool) -> Result<RoundOutcome> {
        let t = self.round;
        let plans = self.plan_round(t)?;
        let seed = self.config.seed;
        let (objective, dataset, global, optimizer) =
            (self.objective, self.dataset, &self.global, &self.config.optimizer);
        let clients = self
            .config
            .execution
            .map(&plans, |plan| {
                let mut stream = seeded_stream(seed, &streams::client(t, plan.client_id));
                client_update(objective, global, &dataset.shards()[plan.client_id], plan, optimizer, &mut stream, trace)
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;

        let models: Vec<ParameterVector> = clients.iter().map(|c| c.params.clone()).collect();
        let broadcast = std::mem::replace(&mut self.global, aggregate(&models)?);
        self.round += 1;
        self.grad_evals += clients.iter().map(|c| c.grad_evals as u64).sum::<u64>();
        self.guessed_steps += clients.iter().map(|c| c.guessed_steps as u64).sum::<u64>();
        let (accuracy, loss) = self.evaluate()?;

        let record = RoundRecord {
            round: self.round,
            selected: plans.iter().map(|p| p.client_id).collect(),
            budgets: plans.iter().map(|p| p.budget).collect(),
            guesses: plans.iter().map(|p| p.guesses).collect(),
            accuracy,
            loss,
            grad_evals: self.grad_evals,
            guessed_steps: self.guessed_steps,
        };
        Ok(RoundOutcome { record, broadcast, clients })
    }

    /// Pooled test accuracy and pooled train loss of the current global model.
    pub fn evaluate(&self) -> Result<(f64, f64)> {
        let (objective, global) = (self.objective, &self.global);
        let per_shard = self.config.execution.map(self.dataset.shards(), |shard| {
            let (correct, tested) = correct_count(objective, global, shard, Split::Test);
            let loss = match shard.split_batch(Split::Train) {
                Some(b) => objective.loss(global, &b).map(|l| (l * b.len() as f64, b.len())),
                None => Ok((0.0, 0)),
            };
            loss.map(|(sum, n)| (correct, tested, sum, n))
        });
        let (mut correct, mut tested, mut loss_sum, mut trained) = (0, 0, 0.0, 0);
        for r in per_shard {
            let (c, t, l, n) = r?;
            correct += c;
            tested += t;
            loss_sum += l;
            trained += n;
        }
        if tested == 0 || trained == 0 {
            return Err(Error::Evaluation("pooled test or train split is empty".into()));
        }
        Ok((correct as f64 / tested as f64, loss_sum / trained as f64))
    }
}

#[derive(Debug, Clone)]
pub struct TrainingRun {
    pub records: Vec<RoundRecord>,
    pub final_params: ParameterVector,
    /// First round reaching the target, if one was configured and reached.
    pub rounds_to_target: Option<usize>,
}

/// Runs rounds until the target accuracy is reached or `max_rounds` pass.
/// Missing the target is a normal outcome, not an error.
pub fn run_training<O: Objective + ?Sized>(
    objective: &O,
    dataset: &FederatedDataset,
    init: ParameterVector,
    config: &TrainingConfig,
) -> Result<TrainingRun> {
    let mut server = Server::new(objective, dataset, config.clone(), init)?;
    let mut records = Vec::new();
    let mut reached = None;
    while server.round() < config.max_rounds {
        let record = server.run_round(false)?.record;
        let hit = config.target_accuracy.is_some_and(|t| record.accuracy >= t);
        records.push(record);
        if hit {
            reached = Some(server.round());
            break;
        }
    }
    Ok(TrainingRun { records, final_params: server.global, rounds_to_target: reached })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticConfig};
    use crate::models::{Block, Model};
    use proptest::prelude::*;

    fn pv(xs: &[f64]) -> ParameterVector {
        ParameterVector::new(vec![Block::new("w", 1, xs.len())], xs.to_vec().into()).unwrap()
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(aggregate(&[pv(&[1.0, 3.0]), pv(&[3.0, 5.0])]).unwrap(), pv(&[2.0, 4.0]));
        let m = pv(&[0.1, -7.3, 1e-300]);
        assert_eq!(aggregate(&vec![m.clone(); 3]).unwrap(), m);
        assert_eq!(aggregate(&vec![m.clone(); 20]).unwrap(), m);
        assert!(aggregate(&[]).is_err());
        assert!(aggregate(&[pv(&[1.0]), pv(&[1.0, 2.0])]).is_err());
    }

    #[test]
    fn aggregate_is_single_level_mean() {
        // Mean of {1, 2, 6}, not the mean of mean({1, 2}) and 6.
        let flat = aggregate(&[pv(&[1.0]), pv(&[2.0]), pv(&[6.0])]).unwrap();
        assert_eq!(flat.values()[0], 3.0);
    }

    proptest! {
        #[test]
        fn aggregate_within_bounds(models in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 4), 1..25)) {
            let pvs: Vec<ParameterVector> = models.iter().map(|m| pv(m)).collect();
            let mean = aggregate(&pvs).unwrap();
            for i in 0..4 {
                let lo = models.iter().map(|m| m[i]).fold(f64::INFINITY, f64::min);
                let hi = models.iter().map(|m| m[i]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(lo <= mean.values()[i] && mean.values()[i] <= hi);
            }
        }
    }

    fn small() -> (Model, FederatedDataset) {
        let cfg = SyntheticConfig { num_clients: 12, dim: 6, classes: 3, ..Default::default() };
        let ds = generate_synthetic(&cfg, &mut seeded_stream(1, "data")).unwrap();
        (Model::logistic(6, 3), ds)
    }

    #[test]
    fn zero_rounds_returns_init() {
        let (model, ds) = small();
        let init = model.init(&mut seeded_stream(1, "init")).unwrap();
        let cfg = TrainingConfig { max_rounds: 0, clients_per_round: 5, ..Default::default() };
        let run = run_training(&model, &ds, init.clone(), &cfg).unwrap();
        assert!(run.records.is_empty());
        assert_eq!(run.final_params, init);
        assert_eq!(run.rounds_to_target, None);
    }

    #[test]
    fn config_errors() {
        let (model, ds) = small();
        let init = model.zeros();
        let too_many = TrainingConfig { clients_per_round: 13, ..Default::default() };
        assert!(matches!(Server::new(&model, &ds, too_many, init.clone()), Err(Error::Config(_))));
        let bad_target = TrainingConfig { clients_per_round: 5, target_accuracy: Some(1.5), ..Default::default() };
        assert!(Server::new(&model, &ds, bad_target, init).is_err());
    }

    #[test]
    fn records_are_consistent_and_stop_at_target() {
        let (model, ds) = small();
        let init = model.init(&mut seeded_stream(2, "init")).unwrap();
        let cfg = TrainingConfig {
            seed: 2,
            clients_per_round: 5,
            budget: BudgetModel::HeterogeneousUniform { min: 2, max: 6 },
            guesses: GuessPolicy::FixedCount(3),
            max_rounds: 15,
            ..Default::default()
        };
        let run = run_training(&model, &ds, init.clone(), &cfg).unwrap();
        assert_eq!(run.records.len(), 15);
        let mut evals = 0;
        for (i, r) in run.records.iter().enumerate() {
            assert_eq!(r.round, i + 1);
            evals += r.budgets.iter().sum::<usize>() as u64;
            assert_eq!(r.grad_evals, evals);
            assert!(r.guesses.iter().all(|&g| g == 3));
            assert_eq!(r.guessed_steps, 15 * (i as u64 + 1));
        }
        let target = run.records[7].accuracy.min(0.99);
        let first = run.records.iter().position(|r| r.accuracy >= target).unwrap() + 1;
        let stopped = run_training(&model, &ds, init, &TrainingConfig { target_accuracy: Some(target), ..cfg }).unwrap();
        assert_eq!(stopped.rounds_to_target, Some(first));
        assert_eq!(stopped.records.len(), first);
        assert_eq!(stopped.records[..], run.records[..first]);
    }

    #[test]
    fn checkpoint_resume_continues_trajectory() {
        let (model, ds) = small();
        let init = model.init(&mut seeded_stream(3, "init")).unwrap();
        let cfg = TrainingConfig { seed: 3, clients_per_round: 4, max_rounds: 6, ..Default::default() };
        let full = run_training(&model, &ds, init.clone(), &cfg).unwrap();

        let mut first = Server::new(&model, &ds, cfg.clone(), init).unwrap();
        for _ in 0..3 {
            first.run_round(false).unwrap();
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("checkpoint.json");
        first.checkpoint().save(&path).unwrap();
        let loaded = Checkpoint::load(&path).unwrap();
        assert_eq!(loaded, first.checkpoint());

        let mut resumed = Server::resume(&model, &ds, cfg, loaded).unwrap();
        let rest: Vec<RoundRecord> = (0..3).map(|_| resumed.run_round(false).unwrap().record).collect();
        assert_eq!(rest[..], full.records[3..]);
        assert_eq!(resumed.global(), &full.final_params);
    }
}
