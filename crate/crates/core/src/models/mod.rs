//! Differentiable classifiers with analytic gradients.
//!
//! Both models map a feature row to class logits and are trained on mean
//! softmax cross-entropy. Parameters live in one flat [`ParameterVector`] so
//! optimizers and aggregation never need to know the layer structure.

mod eval;
mod fd;
mod logreg;
mod mlp;
mod params;
mod shard;

use serde::{Deserialize, Serialize};

pub use eval::{accuracy, correct_count, mean_loss};
pub use fd::{finite_diff, finite_diff_grad};
pub use params::{Block, ParameterVector};
pub use shard::{Batch, ClientShard, Split};

use crate::error::{Error, Result};
use crate::numeric::RngStream;

/// Anything the federation engine can train: loss/gradient on a batch plus a
/// class prediction for evaluation.
pub trait Objective: Sync {
    fn loss_grad(&self, params: &ParameterVector, batch: &Batch) -> Result<(f64, ParameterVector)>;

    fn predict(&self, params: &ParameterVector, features: &[f64]) -> usize;

    /// Mean cross-entropy on a batch without the gradient.
    fn loss(&self, params: &ParameterVector, batch: &Batch) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Architecture {
    LogisticRegression,
    Mlp { hidden: usize },
}

/// A classifier over `dim` features and `classes` labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Model {
    pub architecture: Architecture,
    pub dim: usize,
    pub classes: usize,
}

/// Default MLP width.
pub const DEFAULT_HIDDEN: usize = 20;

/// Standard deviation of the logistic-regression weight initialization.
pub const LOGREG_INIT_STD: f64 = 0.01;

impl Model {
    pub fn logistic(dim: usize, classes: usize) -> Self {
        Model { architecture: Architecture::LogisticRegression, dim, classes }
    }

    pub fn mlp(dim: usize, hidden: usize, classes: usize) -> Self {
        Model { architecture: Architecture::Mlp { hidden }, dim, classes }
    }

    pub fn layout(&self) -> Vec<Block> {
        let (d, c) = (self.dim, self.classes);
        match self.architecture {
            Architecture::LogisticRegression => {
                vec![Block::new("weight", d, c), Block::new("bias", 1, c)]
            }
            Architecture::Mlp { hidden: h } => vec![
                Block::new("hidden.weight", d, h),
                Block::new("hidden.bias", 1, h),
                Block::new("output.weight", h, c),
                Block::new("output.bias", 1, c),
            ],
        }
    }

    pub fn zeros(&self) -> ParameterVector {
        ParameterVector::zeros(self.layout())
    }

    /// Random initial parameters drawn from `stream`; biases start at zero.
    ///
    /// MLP weight matrices use `N(0, 1/sqrt(fan_in))`, logistic regression uses
    /// `N(0, LOGREG_INIT_STD)`.
    pub fn init(&self, stream: &mut RngStream) -> Result<ParameterVector> {
        let mut params = self.zeros();
        let layout = params.layout().to_vec();
        let mut offset = 0;
        for block in &layout {
            let len = block.len();
            if !block.name.ends_with("bias") {
                let std = match self.architecture {
                    Architecture::LogisticRegression => LOGREG_INIT_STD,
                    Architecture::Mlp { .. } => 1.0 / (block.rows as f64).sqrt(),
                };
                for w in &mut params.values_mut().as_mut_slice()[offset..offset + len] {
                    *w = stream.normal(0.0, std)?;
                }
            }
            offset += len;
        }
        Ok(params)
    }

    fn check(&self, params: &ParameterVector, batch: &Batch) -> Result<()> {
        if params.layout() != self.layout().as_slice() {
            return Err(Error::Shape(format!(
                "parameter layout {:?} does not match model {:?}",
                params.layout(),
                self.layout()
            )));
        }
        if batch.dim() != self.dim {
            return Err(Error::Dimension { expected: self.dim, actual: batch.dim() });
        }
        if let Some(&bad) = batch.labels().iter().find(|&&y| y >= self.classes) {
            return Err(Error::Domain(format!("label {bad} outside {} classes", self.classes)));
        }
        Ok(())
    }
}

impl Objective for Model {
    fn loss_grad(&self, params: &ParameterVector, batch: &Batch) -> Result<(f64, ParameterVector)> {
        self.check(params, batch)?;
        let (loss, grad) = match self.architecture {
            Architecture::LogisticRegression => {
                logreg::loss_grad(params.values().as_slice(), batch, self.dim, self.classes)
            }
            Architecture::Mlp { hidden } => {
                mlp::loss_grad(params.values().as_slice(), batch, self.dim, hidden, self.classes)
            }
        };
        Ok((loss, ParameterVector::new(params.layout().to_vec(), grad.into())?))
    }

    fn loss(&self, params: &ParameterVector, batch: &Batch) -> Result<f64> {
        self.check(params, batch)?;
        let w = params.values().as_slice();
        let total: f64 = batch
            .rows()
            .zip(batch.labels())
            .map(|(x, &y)| {
                let logits = self.logits(w, x);
                log_sum_exp(&logits) - logits[y]
            })
            .sum();
        Ok(total / batch.len() as f64)
    }

    fn predict(&self, params: &ParameterVector, features: &[f64]) -> usize {
        argmax(&self.logits(params.values().as_slice(), features))
    }
}

impl Model {
    fn logits(&self, w: &[f64], x: &[f64]) -> Vec<f64> {
        match self.architecture {
            Architecture::LogisticRegression => logreg::logits(w, x, self.dim, self.classes),
            Architecture::Mlp { hidden } => mlp::forward(w, x, self.dim, hidden, self.classes).1,
        }
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Softmax probabilities written into `z` in place.
pub(crate) fn softmax_in_place(z: &mut [f64]) {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in z.iter_mut() {
        *v = (*v - m).exp();
        total += *v;
    }
    for v in z.iter_mut() {
        *v /= total;
    }
}
