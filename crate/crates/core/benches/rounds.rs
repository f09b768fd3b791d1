use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use gel_core::data::{generate_synthetic, SyntheticConfig};
use gel_core::exec::Execution;
use gel_core::federation::{streams, BudgetModel, GuessPolicy, Server, TrainingConfig};
use gel_core::models::Model;
use gel_core::numeric::seeded_stream;

const MODES: [(&str, Execution); 2] = [("serial", Execution::Serial), ("parallel", Execution::Parallel)];

fn rounds(c: &mut Criterion) {
    let ds = generate_synthetic(&SyntheticConfig::default(), &mut seeded_stream(7, "data")).unwrap();
    let mut group = c.benchmark_group("round");
    for (name, model) in [("logreg", Model::logistic(20, 5)), ("mlp", Model::mlp(20, 20, 5))] {
        for (mode, execution) in MODES {
            let cfg = TrainingConfig {
                seed: 1,
                budget: BudgetModel::HeterogeneousUniform { min: 4, max: 22 },
                guesses: GuessPolicy::FixedCount(5),
                max_rounds: usize::MAX,
                execution,
                ..Default::default()
            };
            let init = model.init(&mut seeded_stream(1, streams::INIT)).unwrap();
            let mut server = Server::new(&model, &ds, cfg, init).unwrap();
            group.bench_function(BenchmarkId::new(name, mode), |b| b.iter(|| server.run_round(false).unwrap()));
        }
    }
    group.finish();
}

fn evaluation(c: &mut Criterion) {
    let cfg = SyntheticConfig { num_clients: 1000, ..Default::default() };
    let ds = generate_synthetic(&cfg, &mut seeded_stream(7, "data")).unwrap();
    let model = Model::mlp(20, 20, 5);
    let mut group = c.benchmark_group("evaluate_1000_clients");
    for (mode, execution) in MODES {
        let training = TrainingConfig { execution, ..Default::default() };
        let init = model.init(&mut seeded_stream(1, streams::INIT)).unwrap();
        let server = Server::new(&model, &ds, training, init).unwrap();
        group.bench_function(mode, |b| b.iter(|| server.evaluate().unwrap()));
    }
    group.finish();
}

criterion_group!(benches, rounds, evaluation);
criterion_main!(benches);
