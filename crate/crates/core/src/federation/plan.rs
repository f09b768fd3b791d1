use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::RngStream;

/// What one selected client does in one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClientPlan {
    pub client_id: usize,
    /// Real gradient steps `u_k`.
    pub budget: usize,
    /// Guessed steps `g_k`.
    pub guesses: usize,
    pub batch_size: usize,
}

/// How many guessed steps a client adds after its real ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum GuessPolicy {
    FixedCount(usize),
    /// Percent of the client's own budget, rounded to the nearest integer.
    Percentage(f64),
}

impl GuessPolicy {
    pub fn none() -> Self {
        GuessPolicy::FixedCount(0)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            GuessPolicy::Percentage(p) if !(p >= 0.0 && p.is_finite()) => {
                Err(Error::Config(format!("guess percentage must be >= 0, got {p}")))
            }
            _ => Ok(()),
        }
    }

    /// Guess count for a client with `budget` real steps. A percentage
    /// policy only needs the budget here, on the client, so the server can
    /// assign it without knowing any client's budget.
    pub fn resolve(&self, budget: usize) -> usize {
        match *self {
            GuessPolicy::FixedCount(g) => g,
            GuessPolicy::Percentage(p) => (p * budget as f64 / 100.0).round() as usize,
        }
    }
}

pub fn assign_guesses(policy: &GuessPolicy, plan: &ClientPlan) -> usize {
    policy.resolve(plan.budget)
}

/// Per-client real-step budgets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BudgetModel {
    Homogeneous { budget: usize },
    /// Integer budgets uniform in `[min, max]`, redrawn every round.
    HeterogeneousUniform { min: usize, max: usize },
}

impl BudgetModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BudgetModel::Homogeneous { budget } if budget >= 1 => Ok(()),
            BudgetModel::HeterogeneousUniform { min, max } if 1 <= min && min <= max => Ok(()),
            other => Err(Error::Config(format!("invalid budget model {other:?}"))),
        }
    }

    pub fn sample(&self, stream: &mut RngStream) -> usize {
        match *self {
            BudgetModel::Homogeneous { budget } => budget,
            BudgetModel::HeterogeneousUniform { min, max } => stream.range_inclusive(min, max),
        }
    }
}

/// `k` distinct client ids out of `pool_size`, uniform without replacement,
/// returned in ascending order.
pub fn select_clients(pool_size: usize, k: usize, stream: &mut RngStream) -> Result<Vec<usize>> {
    if k > pool_size {
        return Err(Error::Config(format!("cannot select {k} clients from a pool of {pool_size}")));
    }
    let mut ids = stream.sample_distinct(pool_size, k);
    ids.sort_unstable();
    Ok(ids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::seeded_stream;

    fn plan(budget: usize) -> ClientPlan {
        ClientPlan { client_id: 0, budget, guesses: 0, batch_size: 5 }
    }

    #[test]
    fn guess_assignment_examples() {
        for u in [1, 4, 13, 40] {
            assert_eq!(assign_guesses(&GuessPolicy::FixedCount(5), &plan(u)), 5);
        }
        assert_eq!(assign_guesses(&GuessPolicy::Percentage(25.0), &plan(8)), 2);
        assert_eq!(assign_guesses(&GuessPolicy::Percentage(125.0), &plan(4)), 5);
        assert_eq!(assign_guesses(&GuessPolicy::Percentage(50.0), &plan(8)), 4);
        assert_eq!(assign_guesses(&GuessPolicy::Percentage(10.0), &plan(5)), 1);
        assert_eq!(assign_guesses(&GuessPolicy::Percentage(0.0), &plan(9)), 0);
        assert!(GuessPolicy::Percentage(-1.0).validate().is_err());
    }

    #[test]
    fn selection_examples() {
        let mut s = seeded_stream(1, "select/0");
        assert_eq!(select_clients(20, 20, &mut s).unwrap(), (0..20).collect::<Vec<_>>());
        let ids = select_clients(1000, 20, &mut s).unwrap();
        assert_eq!(ids.len(), 20);
        assert!(ids.windows(2).all(|w| w[0] < w[1]));
        assert!(ids.iter().all(|&i| i < 1000));
        let a = select_clients(1000, 20, &mut seeded_stream(9, "select/3")).unwrap();
        let b = select_clients(1000, 20, &mut seeded_stream(9, "select/3")).unwrap();
        assert_eq!(a, b);
        assert!(matches!(select_clients(5, 6, &mut s), Err(Error::Config(_))));
    }

    #[test]
    fn selection_is_roughly_uniform() {
        let mut counts = vec![0usize; 50];
        for t in 0..4000 {
            for id in select_clients(50, 10, &mut seeded_stream(2, &format!("select/{t}"))).unwrap() {
                counts[id] += 1;
            }
        }
        // Each id appears with probability 0.2 per round: mean 800, sd ≈ 25.3.
        assert!(counts.iter().all(|&c| (c as f64 - 800.0).abs() < 110.0), "{counts:?}");
    }

    #[test]
    fn budgets() {
        let mut s = seeded_stream(3, "budget/0");
        assert_eq!(BudgetModel::Homogeneous { budget: 7 }.sample(&mut s), 7);
        let m = BudgetModel::HeterogeneousUniform { min: 4, max: 13 };
        let draws: Vec<usize> = (0..2000).map(|_| m.sample(&mut s)).collect();
        assert!(draws.iter().all(|b| (4..=13).contains(b)));
        assert!(draws.contains(&4) && draws.contains(&13));
        assert!(BudgetModel::Homogeneous { budget: 0 }.validate().is_err());
        assert!(BudgetModel::HeterogeneousUniform { min: 5, max: 4 }.validate().is_err());
        assert!(BudgetModel::HeterogeneousUniform { min: 0, max: 4 }.validate().is_err());
    }
}
