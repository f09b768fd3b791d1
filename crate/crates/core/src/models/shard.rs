use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Which part of a client's data to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// A mini-batch: `len()` feature rows of width `dim` plus labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    dim: usize,
    features: Vec<f64>,
    labels: Vec<usize>,
}

impl Batch {
    pub fn new(dim: usize, features: Vec<f64>, labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Domain("batch must contain at least one sample".into()));
        }
        check_len(labels.len() * dim, features.len())?;
        Ok(Batch { dim, features, labels })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.features.chunks_exact(self.dim.max(1))
    }
}

/// One client's local dataset with a fixed train/test partition of its rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientShard {
    pub id: usize,
    dim: usize,
    features: Vec<f64>,
    labels: Vec<usize>,
    train: Vec<usize>,
    test: Vec<usize>,
}

/// Fraction of each shard assigned to the train split.
pub const TRAIN_FRACTION: f64 = 0.8;

impl ClientShard {
    /// Builds a shard and splits it: the first `ceil(0.8 n)` rows train, the rest test.
    pub fn new(id: usize, dim: usize, features: Vec<f64>, labels: Vec<usize>) -> Result<Self> {
        let n = labels.len();
        let n_train = ((n as f64 * TRAIN_FRACTION).ceil() as usize).clamp(1.min(n), n);
        Self::with_split(id, dim, features, labels, (0..n_train).collect(), (n_train..n).collect())
    }

    pub fn with_split(
        id: usize,
        dim: usize,
        features: Vec<f64>,
        labels: Vec<usize>,
        train: Vec<usize>,
        test: Vec<usize>,
    ) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::Domain(format!("client {id} has no samples")));
        }
        check_len(n * dim, features.len())?;
        let mut seen = vec![false; n];
        for &i in train.iter().chain(&test) {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(Error::Domain(format!("client {id}: invalid split index {i}")));
            }
        }
        Ok(ClientShard { id, dim, features, labels, train, test })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn indices(&self, split: Split) -> &[usize] {
        match split {
            Split::Train => &self.train,
            Split::Test => &self.test,
        }
    }

    pub fn split_of(&self, i: usize) -> Split {
        if self.train.contains(&i) {
            Split::Train
        } else {
            Split::Test
        }
    }

    /// Gathers the given rows into a batch.
    pub fn gather(&self, rows: &[usize]) -> Result<Batch> {
        let features = rows.iter().flat_map(|&i| self.row(i).iter().copied()).collect();
        let labels = rows.iter().map(|&i| self.labels[i]).collect();
        Batch::new(self.dim, features, labels)
    }

    /// The whole split as one batch, or `None` if the split is empty.
    pub fn split_batch(&self, split: Split) -> Option<Batch> {
        let rows = self.indices(split);
        if rows.is_empty() {
            None
        } else {
            self.gather(rows).ok()
        }
    }
}
