//! Labeled random streams.
//!
//! A stream is identified by `(master_seed, label)`. The pair is hashed with
//! SHA-256 over `b"gel-stream/v1" || master_seed.to_le_bytes() || label` and
//! the 32-byte digest seeds a ChaCha8 generator. Both primitives are fully
//! specified and platform independent, so any `(seed, label)` replays
//! bit-identically on every machine running the same build.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use sha2::{Digest, Sha256};

use super::Vector;
use crate::error::{Error, Result};

const DOMAIN_TAG: &[u8] = b"gel-stream/v1";

/// Deterministic random stream owned by a single logical actor.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    label: String,
    rng: ChaCha8Rng,
}

/// Opens the stream for `(master_seed, label)`.
///
/// # Panics
///
/// Panics if `label` is empty.
pub fn seeded_stream(master_seed: u64, label: &str) -> RngStream {
    assert!(!label.is_empty(), "stream label must be nonempty");
    let mut hasher = Sha256::new();
    hasher.update(DOMAIN_TAG);
    hasher.update(master_seed.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest: [u8; 32] = hasher.finalize().into();
    RngStream {
        master_seed,
        label: label.to_owned(),
        rng: ChaCha8Rng::from_seed(digest),
    }
}

impl RngStream {
    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Opens a fresh stream labeled `"{label}/{suffix}"` under the same master seed.
    pub fn child(&self, suffix: impl std::fmt::Display) -> RngStream {
        seeded_stream(self.master_seed, &format!("{}/{}", self.label, suffix))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw from `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform index in `0..n`. `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    /// Uniform integer in `lo..=hi`.
    pub fn range_inclusive(&mut self, lo: usize, hi: usize) -> usize {
        self.rng.random_range(lo..=hi)
    }

    pub fn normal(&mut self, mean: f64, std: f64) -> Result<f64> {
        if !(std >= 0.0) || !std.is_finite() {
            return Err(Error::Domain(format!("standard deviation must be >= 0, got {std}")));
        }
        if std == 0.0 {
            return Ok(mean);
        }
        let dist = Normal::new(mean, std).map_err(|e| Error::Domain(e.to_string()))?;
        Ok(dist.sample(&mut self.rng))
    }

    pub fn lognormal(&mut self, mu: f64, sigma: f64) -> Result<f64> {
        let dist = LogNormal::new(mu, sigma).map_err(|e| Error::Domain(e.to_string()))?;
        Ok(dist.sample(&mut self.rng))
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }

    /// `k` distinct values from `0..n`, uniform without replacement.
    ///
    /// Partial Fisher-Yates over the index range; `k <= n` required.
    pub fn sample_distinct(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.index(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}

/// `n` independent draws from `N(mean, std²)`.
pub fn sample_normal(stream: &mut RngStream, mean: f64, std: f64, n: usize) -> Result<Vector> {
    if n == 0 {
        return Err(Error::Domain("sample count must be >= 1".into()));
    }
    (0..n).map(|_| stream.normal(mean, std)).collect::<Result<Vec<_>>>().map(Vector::from)
}
