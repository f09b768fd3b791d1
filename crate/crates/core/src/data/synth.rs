//! Synthetic(α, β) federated classification benchmark.
//!
//! For each client `k`:
//!
//! * `u_k ~ N(0, α)`, `B_k ~ N(0, β)` (α and β are variances);
//! * local labeling model `W_k ~ N(u_k, 1)` (dim × classes) and `b_k ~ N(u_k, 1)`;
//! * feature mean `v_k` with `v_kj ~ N(B_k, 1)`;
//! * samples `x ~ N(v_k, Σ)` with diagonal `Σ_jj = j^-1.2` (1-based `j`),
//!   labeled `y = argmax(W_kᵀ x + b_k)`.
//!
//! Per-client sample counts follow `LogNormal(ln(2 · min_samples), 1)`,
//! floored and clipped below at `min_samples`. All draws come from the one
//! stream passed in, in client order.

use serde::{Deserialize, Serialize};

use super::FederatedDataset;
use crate::error::{Error, Result};
use crate::models::{argmax, ClientShard};
use crate::numeric::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub num_clients: usize,
    pub alpha: f64,
    pub beta: f64,
    pub dim: usize,
    pub classes: usize,
    pub min_samples: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig { num_clients: 100, alpha: 1.0, beta: 1.0, dim: 20, classes: 5, min_samples: 10 }
    }
}

pub fn generate_synthetic(config: &SyntheticConfig, stream: &mut RngStream) -> Result<FederatedDataset> {
    let SyntheticConfig { num_clients, alpha, beta, dim, classes, min_samples } = *config;
    if num_clients == 0 || dim == 0 || min_samples == 0 {
        return Err(Error::Domain("num_clients, dim and min_samples must be >= 1".into()));
    }
    if classes < 2 {
        return Err(Error::Domain(format!("need at least 2 classes, got {classes}")));
    }
    if !(alpha >= 0.0 && beta >= 0.0) {
        return Err(Error::Domain("alpha and beta must be nonnegative".into()));
    }

    let feature_std: Vec<f64> = (1..=dim).map(|j| (j as f64).powf(-1.2).sqrt()).collect();
    let log_median = (2.0 * min_samples as f64).ln();

    let mut shards = Vec::with_capacity(num_clients);
    for k in 0..num_clients {
        let n = (stream.lognormal(log_median, 1.0)?.floor() as usize).max(min_samples);
        let model_mean = stream.normal(0.0, alpha.sqrt())?;
        let feature_mean = stream.normal(0.0, beta.sqrt())?;

        let weight: Vec<f64> =
            (0..dim * classes).map(|_| stream.normal(model_mean, 1.0)).collect::<Result<_>>()?;
        let bias: Vec<f64> = (0..classes).map(|_| stream.normal(model_mean, 1.0)).collect::<Result<_>>()?;
        let centre: Vec<f64> = (0..dim).map(|_| stream.normal(feature_mean, 1.0)).collect::<Result<_>>()?;

        let mut features = Vec::with_capacity(n * dim);
        let mut labels = Vec::with_capacity(n);
        let mut logits = vec![0.0; classes];
        for _ in 0..n {
            let start = features.len();
            for j in 0..dim {
                features.push(stream.normal(centre[j], feature_std[j])?);
            }
            logits.copy_from_slice(&bias);
            for (j, &xj) in features[start..].iter().enumerate() {
                for (z, &w) in logits.iter_mut().zip(&weight[j * classes..(j + 1) * classes]) {
                    *z += xj * w;
                }
            }
            labels.push(argmax(&logits));
        }
        shards.push(ClientShard::new(k, dim, features, labels)?);
    }
    FederatedDataset::new(shards, dim, classes)
}
