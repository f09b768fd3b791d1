use crate::federation::RoundRecord;

/// 1-based index of the first round whose accuracy reaches `target`.
pub fn rounds_to_target(records: &[RoundRecord], target: f64) -> Option<usize> {
    first_crossing(records.iter().map(|r| r.accuracy), target)
}

pub fn first_crossing(accuracies: impl IntoIterator<Item = f64>, target: f64) -> Option<usize> {
    accuracies.into_iter().position(|a| a >= target).map(|i| i + 1)
}

/// Gradient computations GeL saves over the Target arm:
/// `(CR_T · (u' + g') − CR_G · u') · clients_per_round`. May be negative.
pub fn compute_savings(cr_target: u64, cr_gel: u64, budget: u64, guesses: u64, clients_per_round: u64) -> i64 {
    let target = i128::from(cr_target) * (i128::from(budget) + i128::from(guesses));
    let gel = i128::from(cr_gel) * i128::from(budget);
    i64::try_from((target - gel) * i128::from(clients_per_round)).expect("savings overflow i64")
}

/// `CR_baseline / CR_gel`; `None` when either arm missed the target.
pub fn speedup(cr_baseline: Option<usize>, cr_gel: Option<usize>) -> Option<f64> {
    match (cr_baseline, cr_gel) {
        (Some(b), Some(g)) if g > 0 => Some(b as f64 / g as f64),
        _ => None,
    }
}

pub(crate) fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}
