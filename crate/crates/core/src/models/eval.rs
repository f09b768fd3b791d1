use super::{ClientShard, Objective, ParameterVector, Split};
use crate::error::{Error, Result};

/// `(correct, total)` predictions on one shard's `split`.
pub fn correct_count<O: Objective + ?Sized>(
    model: &O,
    params: &ParameterVector,
    shard: &ClientShard,
    split: Split,
) -> (usize, usize) {
    let rows = shard.indices(split);
    let correct = rows.iter().filter(|&&i| model.predict(params, shard.row(i)) == shard.labels()[i]).count();
    (correct, rows.len())
}

/// Fraction of correctly classified samples pooled over every shard's `split`.
pub fn accuracy<O: Objective + ?Sized>(
    model: &O,
    params: &ParameterVector,
    shards: &[ClientShard],
    split: Split,
) -> Result<f64> {
    let (correct, total) = shards
        .iter()
        .map(|s| correct_count(model, params, s, split))
        .fold((0, 0), |(c, t), (ci, ti)| (c + ci, t + ti));
    if total == 0 {
        return Err(Error::Evaluation(format!("no {split:?} samples to evaluate")));
    }
    Ok(correct as f64 / total as f64)
}

/// Sample-weighted mean loss pooled over every shard's `split`.
pub fn mean_loss<O: Objective + ?Sized>(
    model: &O,
    params: &ParameterVector,
    shards: &[ClientShard],
    split: Split,
) -> Result<f64> {
    let mut sum = 0.0;
    let mut total = 0usize;
    for shard in shards {
        if let Some(batch) = shard.split_batch(split) {
            sum += model.loss(params, &batch)? * batch.len() as f64;
            total += batch.len();
        }
    }
    if total == 0 {
        return Err(Error::Evaluation(format!("no {split:?} samples to evaluate")));
    }
    Ok(sum / total as f64)
}
