use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use gel_core::data::{generate_synthetic, partition_iid, write_dataset, BudgetPreset, SyntheticConfig};
use gel_core::exec::Execution;
use gel_core::federation::{streams, BudgetModel, Checkpoint, GuessPolicy, Server};
use gel_core::harness::{
    report, run_csv_path, write_curve_file, write_json, ArmLabel, ArmRun, ArmSpec, Experiment, ExperimentConfig,
    ExperimentResult, Manifest, ModelKind, Summary, TargetSpec, TrainSummary,
};
use gel_core::numeric::seeded_stream;

#[derive(Parser)]
#[command(name = "gel", version, about = "Federated learning simulator with guessed local updates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic federated dataset table plus its JSON sidecar.
    GenData(GenData),
    /// Train one configuration on one seed.
    Train(Train),
    /// Paired Baseline / GeL / Target runs over the replicate seeds.
    Paired(Common),
    /// Budget × guess-percentage sweep.
    Sweep(Sweep),
    /// Summarize every summary.json under a directory.
    Report {
        /// Output directory (or a single summary.json).
        dir: PathBuf,
    },
}

#[derive(Args)]
struct GenData {
    /// Master seed of the data stream.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    clients: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 20)]
    dim: usize,
    #[arg(long, default_value_t = 5)]
    classes: usize,
    #[arg(long, default_value_t = 10)]
    min_samples: usize,
    /// Repartition the samples IID across the same number of clients.
    #[arg(long)]
    iid: bool,
    /// Output table path; the sidecar goes next to it with a .json extension.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct Common {
    /// TOML experiment config; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset table written by `gen-data`.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Replicate master seed (the first of `--replicates` consecutive seeds).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, requires = "seed")]
    replicates: Option<u64>,
    #[arg(long)]
    clients_per_round: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Homogeneous real-step budget u'.
    #[arg(long, conflicts_with_all = ["budget_range", "preset"])]
    budget: Option<usize>,
    /// Heterogeneous budgets drawn uniformly from [A, B].
    #[arg(long, num_args = 2, value_names = ["A", "B"], conflicts_with = "preset")]
    budget_range: Option<Vec<usize>>,
    /// Named budget range and batch size (shakespeare, sent140, femnist, celeba, synthetic).
    #[arg(long)]
    preset: Option<String>,
    /// Fixed number of guessed steps per client.
    #[arg(long, conflicts_with = "guess_pct")]
    guesses: Option<usize>,
    /// Guessed steps as a percentage of each client's budget.
    #[arg(long)]
    guess_pct: Option<f64>,
    /// Target pooled test accuracy; otherwise the config decides.
    #[arg(long)]
    target_acc: Option<f64>,
    #[arg(long)]
    max_rounds: Option<usize>,
    /// Use the two-layer perceptron instead of logistic regression.
    #[arg(long)]
    mlp: bool,
    /// Run everything on the calling thread.
    #[arg(long)]
    serial: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct Train {
    #[command(flatten)]
    common: Common,
    /// Continue from a checkpoint written by an earlier `train`.
    #[arg(long)]
    resume: Option<PathBuf>,
}

#[derive(Args)]
struct Sweep {
    #[command(flatten)]
    common: Common,
    /// Real-step budgets u' to sweep.
    #[arg(long, value_delimiter = ',')]
    budgets: Option<Vec<usize>>,
    /// Guess percentages to sweep.
    #[arg(long, value_delimiter = ',')]
    percentages: Option<Vec<f64>>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(path) = &self.data {
            cfg.data.path = Some(path.clone());
        }
        if let Some(seed) = self.seed {
            cfg.seeds = (seed..seed + self.replicates.unwrap_or(1)).collect();
        }
        if let Some(k) = self.clients_per_round {
            cfg.training.clients_per_round = k;
        }
        if let Some(name) = &self.preset {
            let preset: BudgetPreset = name.parse()?;
            let (min, max) = preset.range();
            cfg.local.budget = BudgetModel::HeterogeneousUniform { min, max };
            cfg.training.batch_size = preset.batch_size();
        }
        if let Some(b) = self.batch_size {
            cfg.training.batch_size = b;
        }
        if let Some(u) = self.budget {
            cfg.local.budget = BudgetModel::Homogeneous { budget: u };
        }
        if let Some(r) = &self.budget_range {
            cfg.local.budget = BudgetModel::HeterogeneousUniform { min: r[0], max: r[1] };
        }
        if let Some(g) = self.guesses {
            cfg.local.guesses = GuessPolicy::FixedCount(g);
        }
        if let Some(p) = self.guess_pct {
            cfg.local.guesses = GuessPolicy::Percentage(p);
        }
        if let Some(t) = self.target_acc {
            cfg.training.target = TargetSpec::Fixed(t);
        }
        if let Some(m) = self.max_rounds {
            cfg.training.max_rounds = m;
        }
        if self.mlp {
            cfg.model.kind = ModelKind::Mlp;
        }
        if self.serial {
            cfg.training.execution = Execution::Serial;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn prepare(out: &Path, command: &str, exp: &Experiment) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let manifest = Manifest::new(command, exp.config(), exp.dataset().stats().clone(), exp.dataset_source().clone());
    write_json(&out.join("manifest.json"), &manifest)?;
    fs::write(out.join("config.toml"), exp.config().to_toml()?)?;
    Ok(())
}

fn write_runs(out: &Path, runs: &[ArmRun]) -> Result<()> {
    fs::create_dir_all(out.join("runs"))?;
    for run in runs {
        write_curve_file(&run_csv_path(out, &run.result), &run.records)?;
    }
    Ok(())
}

fn gen_data(args: &GenData) -> Result<()> {
    let cfg = SyntheticConfig {
        num_clients: args.clients,
        alpha: args.alpha,
        beta: args.beta,
        dim: args.dim,
        classes: args.classes,
        min_samples: args.min_samples,
    };
    let mut ds = generate_synthetic(&cfg, &mut seeded_stream(args.seed, "data"))?;
    if args.iid {
        ds = partition_iid(&ds, &mut seeded_stream(args.seed, "iid"))?;
    }
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let source = serde_json::json!({ "generator": "synthetic", "seed": args.seed, "iid": args.iid, "params": cfg });
    write_dataset(&ds, &args.out, source)?;
    let stats = ds.stats();
    println!(
        "wrote {} clients, {} samples (median {}) to {}",
        stats.clients,
        stats.total_samples,
        stats.median_client_samples,
        args.out.display()
    );
    Ok(())
}

fn train(args: &Train) -> Result<()> {
    let cfg = args.common.resolve()?;
    let seed = cfg.seeds[0];
    let target = match cfg.training.target {
        TargetSpec::Fixed(t) => Some(t),
        TargetSpec::Calibrated { .. } => None,
    };
    let exp = Experiment::new(cfg)?;
    let out = &args.common.out;
    prepare(out, "train", &exp)?;

    let training = exp.config().training_for(seed, target);
    let mut server = match &args.resume {
        Some(path) => {
            let cp = Checkpoint::load(path).with_context(|| format!("loading {}", path.display()))?;
            Server::resume(exp.model(), exp.dataset(), training.clone(), cp)?
        }
        None => {
            let init = exp.model().init(&mut seeded_stream(seed, streams::INIT))?;
            Server::new(exp.model(), exp.dataset(), training.clone(), init)?
        }
    };
    let mut records = Vec::new();
    while server.round() < training.max_rounds {
        let record = server.run_round(false)?.record;
        let hit = target.is_some_and(|t| record.accuracy >= t);
        records.push(record);
        if hit {
            break;
        }
    }
    server.checkpoint().save(&out.join("checkpoint.json"))?;
    write_curve_file(&out.join("run.csv"), &records)?;

    let label = if training.guesses == GuessPolicy::none() { ArmLabel::Baseline } else { ArmLabel::GeL };
    let last = records.last();
    let result = ExperimentResult {
        arm: ArmSpec::new(label, training.budget, training.guesses),
        seed,
        rounds_to_target: target.and_then(|t| records.iter().find(|r| r.accuracy >= t).map(|r| r.round)),
        rounds_run: server.round(),
        total_grad_evals: last.map_or(0, |r| r.grad_evals),
        total_guessed_steps: last.map_or(0, |r| r.guessed_steps),
        accuracy_curve: records.iter().map(|r| r.accuracy).collect(),
    };
    let summary = Summary::Train(TrainSummary::new(result, &records, target));
    write_json(&out.join("summary.json"), &summary)?;
    print!("{}", gel_core::harness::render_summary(&summary));
    Ok(())
}

fn paired(args: &Common) -> Result<()> {
    let exp = Experiment::new(args.resolve()?)?;
    prepare(&args.out, "paired", &exp)?;
    let (report, runs) = exp.run_paired()?;
    write_runs(&args.out, &runs)?;
    let summary = Summary::Paired(report);
    write_json(&args.out.join("summary.json"), &summary)?;
    print!("{}", gel_core::harness::render_summary(&summary));
    Ok(())
}

fn sweep(args: &Sweep) -> Result<()> {
    let mut cfg = args.common.resolve()?;
    if let Some(b) = &args.budgets {
        cfg.sweep.budgets = b.clone();
    }
    if let Some(p) = &args.percentages {
        cfg.sweep.percentages = p.clone();
    }
    let exp = Experiment::new(cfg)?;
    prepare(&args.common.out, "sweep", &exp)?;
    let (report, runs) = exp.run_sweep()?;
    write_runs(&args.common.out, &runs)?;
    let summary = Summary::Sweep(report);
    write_json(&args.common.out.join("summary.json"), &summary)?;
    print!("{}", gel_core::harness::render_summary(&summary));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData(args) => gen_data(&args),
        Command::Train(args) => train(&args),
        Command::Paired(args) => paired(&args),
        Command::Sweep(args) => sweep(&args),
        Command::Report { dir } => {
            if !dir.exists() {
                bail!("{} does not exist", dir.display());
            }
            print!("{}", report(&dir)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
