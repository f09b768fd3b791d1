use super::ClientPlan;
use crate::data::sample_batch;
use crate::error::{Error, Result};
use crate::models::{ClientShard, Objective, ParameterVector};
use crate::numeric::{RngStream, Vector};
use crate::optim::OptimizerConfig;

/// One optimizer step as seen by the client, recorded only when tracing.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// 1-based step index passed to the optimizer.
    pub step: usize,
    pub guessed: bool,
    pub grad: Vector,
    pub delta: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientOutcome {
    pub plan: ClientPlan,
    pub params: ParameterVector,
    /// Calls made to the objective's gradient; always `plan.budget`.
    pub grad_evals: usize,
    pub guessed_steps: usize,
    pub trace: Vec<StepRecord>,
}

/// Local training on one client.
///
/// Builds a fresh optimizer, runs `plan.budget` real steps on mini-batches
/// drawn from `stream`, then `plan.guesses` steps that feed the last real
/// gradient back in. The optimizer is dropped on return, so nothing carries
/// over to the client's next participation.
pub fn client_update<O: Objective + ?Sized>(
    objective: &O,
    global: &ParameterVector,
    shard: &ClientShard,
    plan: &ClientPlan,
    optimizer: &OptimizerConfig,
    stream: &mut RngStream,
    trace: bool,
) -> Result<ClientOutcome> {
    if plan.budget == 0 {
        return Err(Error::Protocol(format!(
            "client {} has no real step budget; a guess needs a computed gradient",
            plan.client_id
        )));
    }
    if shard.is_empty() {
        return Err(Error::Protocol(format!("client {} has no data", plan.client_id)));
    }

    let mut params = global.clone();
    let mut opt = optimizer.build(params.len());
    let mut records = Vec::new();
    let mut last_grad: Option<Vector> = None;

    for step in 1..=plan.budget {
        let batch = sample_batch(shard, plan.batch_size, stream)?;
        let (_, grad) = objective.loss_grad(&params, &batch)?;
        let grad = grad.into_values();
        let delta = opt.gradient_step(&grad)?;
        params.apply_update(&delta)?;
        if trace {
            records.push(StepRecord { step, guessed: false, grad: grad.clone(), delta });
        }
        last_grad = Some(grad);
    }

    let proxy = last_grad.expect("budget >= 1");
    for step in plan.budget + 1..=plan.budget + plan.guesses {
        let delta = opt.gradient_step(&proxy)?;
        params.apply_update(&delta)?;
        if trace {
            records.push(StepRecord { step, guessed: true, grad: proxy.clone(), delta });
        }
    }

    Ok(ClientOutcome {
        plan: *plan,
        params,
        grad_evals: plan.budget,
        guessed_steps: plan.guesses,
        trace: records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticConfig};
    use crate::models::Model;
    use crate::numeric::seeded_stream;
    use crate::optim::{AdamConfig, AdamState};

    fn setup() -> (Model, ClientShard, ParameterVector) {
        let cfg = SyntheticConfig { num_clients: 2, dim: 5, classes: 3, ..Default::default() };
        let ds = generate_synthetic(&cfg, &mut seeded_stream(1, "data")).unwrap();
        let model = Model::logistic(5, 3);
        let w = model.init(&mut seeded_stream(1, "init")).unwrap();
        (model, ds.shards()[0].clone(), w)
    }

    fn plan(budget: usize, guesses: usize) -> ClientPlan {
        ClientPlan { client_id: 0, budget, guesses, batch_size: 5 }
    }

    #[test]
    fn one_real_one_guess_replays_adam() {
        let (model, shard, w) = setup();
        let out = client_update(
            &model,
            &w,
            &shard,
            &plan(1, 1),
            &OptimizerConfig::default(),
            &mut seeded_stream(4, "client/0/0"),
            true,
        )
        .unwrap();
        let batch = sample_batch(&shard, 5, &mut seeded_stream(4, "client/0/0")).unwrap();
        let (_, g) = model.loss_grad(&w, &batch).unwrap();
        let g = g.into_values();
        let mut adam = AdamState::new(w.len(), AdamConfig::default());
        let d1 = adam.gradient_step(&g).unwrap();
        let d2 = adam.gradient_step(&g).unwrap();
        assert_eq!(adam.t, 2);
        let mut expected = w.clone();
        expected.apply_update(&d1).unwrap();
        expected.apply_update(&d2).unwrap();
        assert_eq!(out.params, expected);
        assert_eq!(out.grad_evals, 1);
        assert_eq!(out.guessed_steps, 1);
        assert_eq!(out.trace.len(), 2);
        assert!(out.trace[1].guessed);
        assert_eq!(out.trace[1].grad, out.trace[0].grad);
        assert_eq!(out.trace[1].delta, d2);
    }

    #[test]
    fn zero_guesses_is_plain_local_adam() {
        let (model, shard, w) = setup();
        let mut stream = seeded_stream(5, "client/0/0");
        let out =
            client_update(&model, &w, &shard, &plan(3, 0), &OptimizerConfig::default(), &mut stream, false).unwrap();
        let mut replay = seeded_stream(5, "client/0/0");
        let mut adam = AdamState::new(w.len(), AdamConfig::default());
        let mut expected = w.clone();
        for _ in 0..3 {
            let batch = sample_batch(&shard, 5, &mut replay).unwrap();
            let (_, g) = model.loss_grad(&expected, &batch).unwrap();
            let d = adam.gradient_step(g.values()).unwrap();
            expected.apply_update(&d).unwrap();
        }
        assert_eq!(out.params, expected);
        assert!(out.trace.is_empty());
    }

    #[test]
    fn zero_budget_is_protocol_error() {
        let (model, shard, w) = setup();
        let err = client_update(
            &model,
            &w,
            &shard,
            &plan(0, 3),
            &OptimizerConfig::default(),
            &mut seeded_stream(1, "c"),
            false,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Protocol(_)));
    }

    #[test]
    fn prior_participation_does_not_leak() {
        let (model, shard, w) = setup();
        let run = |stream_label: &str| {
            client_update(
                &model,
                &w,
                &shard,
                &plan(4, 2),
                &OptimizerConfig::default(),
                &mut seeded_stream(6, stream_label),
                false,
            )
            .unwrap()
        };
        let fresh = run("client/5/0");
        // Same client trained in other rounds first.
        for t in 0..3 {
            run(&format!("client/{t}/0"));
        }
        assert_eq!(run("client/5/0"), fresh);
    }
}
