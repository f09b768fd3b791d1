//! Federated datasets: the synthetic non-IID benchmark, IID repartitioning,
//! mini-batch sampling and the on-disk dataset format.

mod io;
mod synth;

use serde::{Deserialize, Serialize};

pub use crate::models::{Batch, ClientShard, Split};
pub use io::{read_dataset, write_dataset};
pub use synth::{generate_synthetic, SyntheticConfig};

use crate::error::{Error, Result};
use crate::numeric::RngStream;

/// Summary statistics of a federated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub clients: usize,
    pub total_samples: usize,
    /// Median of per-client sample counts (mean of the middle two for an even count).
    pub median_client_samples: f64,
}

impl DatasetStats {
    pub fn from_shards(shards: &[ClientShard]) -> Self {
        let mut counts: Vec<usize> = shards.iter().map(ClientShard::len).collect();
        counts.sort_unstable();
        let n = counts.len();
        let median = match n {
            0 => 0.0,
            _ if n % 2 == 1 => counts[n / 2] as f64,
            _ => (counts[n / 2 - 1] + counts[n / 2]) as f64 / 2.0,
        };
        DatasetStats { clients: n, total_samples: counts.iter().sum(), median_client_samples: median }
    }
}

/// Client shards plus the feature/label geometry they share.
#[derive(Debug, Clone, PartialEq)]
pub struct FederatedDataset {
    shards: Vec<ClientShard>,
    dim: usize,
    classes: usize,
    stats: DatasetStats,
}

impl FederatedDataset {
    pub fn new(shards: Vec<ClientShard>, dim: usize, classes: usize) -> Result<Self> {
        if shards.is_empty() {
            return Err(Error::Domain("dataset needs at least one client".into()));
        }
        for (k, s) in shards.iter().enumerate() {
            if s.id != k {
                return Err(Error::Domain(format!("shard at position {k} has id {}", s.id)));
            }
            if s.dim() != dim {
                return Err(Error::Dimension { expected: dim, actual: s.dim() });
            }
            if let Some(&y) = s.labels().iter().find(|&&y| y >= classes) {
                return Err(Error::Domain(format!("client {k}: label {y} outside {classes} classes")));
            }
        }
        let stats = DatasetStats::from_shards(&shards);
        Ok(FederatedDataset { shards, dim, classes, stats })
    }

    pub fn shards(&self) -> &[ClientShard] {
        &self.shards
    }

    pub fn num_clients(&self) -> usize {
        self.shards.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn stats(&self) -> &DatasetStats {
        &self.stats
    }

    /// `u_m = ceil(n_m / B)`: local steps the median client takes in one epoch.
    pub fn median_client_steps(&self, batch_size: usize) -> usize {
        median_client_steps(self.stats.median_client_samples, batch_size)
    }
}

pub fn median_client_steps(median_samples: f64, batch_size: usize) -> usize {
    assert!(batch_size >= 1, "batch size must be >= 1");
    (median_samples / batch_size as f64).ceil() as usize
}

/// Pools every sample, shuffles, and deals them back out to the same number
/// of clients in near-equal shards (sizes differ by at most one).
pub fn partition_iid(dataset: &FederatedDataset, stream: &mut RngStream) -> Result<FederatedDataset> {
    let mut pool: Vec<(usize, usize)> = dataset
        .shards
        .iter()
        .flat_map(|s| (0..s.len()).map(move |i| (s.id, i)))
        .collect();
    stream.shuffle(&mut pool);
    let clients = dataset.num_clients();
    let base = pool.len() / clients;
    let extra = pool.len() % clients;
    let mut shards = Vec::with_capacity(clients);
    let mut cursor = 0;
    for k in 0..clients {
        let take = base + usize::from(k < extra);
        let mut features = Vec::with_capacity(take * dataset.dim);
        let mut labels = Vec::with_capacity(take);
        for &(src, i) in &pool[cursor..cursor + take] {
            let shard = &dataset.shards[src];
            features.extend_from_slice(shard.row(i));
            labels.push(shard.labels()[i]);
        }
        cursor += take;
        shards.push(ClientShard::new(k, dataset.dim, features, labels)?);
    }
    FederatedDataset::new(shards, dataset.dim, dataset.classes)
}

/// `batch_size` rows drawn uniformly with replacement from the shard's train split.
pub fn sample_batch(shard: &ClientShard, batch_size: usize, stream: &mut RngStream) -> Result<Batch> {
    let train = shard.indices(Split::Train);
    if train.is_empty() {
        return Err(Error::Domain(format!("client {} has an empty train split", shard.id)));
    }
    if batch_size == 0 {
        return Err(Error::Domain("batch size must be >= 1".into()));
    }
    let rows: Vec<usize> = (0..batch_size).map(|_| train[stream.index(train.len())]).collect();
    shard.gather(&rows)
}

/// Budget ranges `[a, b]` used for the guess-percentage sweeps and the
/// heterogeneous-budget experiments, one per benchmark profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BudgetPreset {
    Shakespeare,
    Sent140,
    Femnist,
    Celeba,
    Synthetic,
}

impl BudgetPreset {
    pub fn range(self) -> (usize, usize) {
        match self {
            BudgetPreset::Shakespeare => (10, 50),
            BudgetPreset::Sent140 => (3, 17),
            BudgetPreset::Femnist => (8, 40),
            BudgetPreset::Celeba => (4, 19),
            BudgetPreset::Synthetic => (4, 22),
        }
    }

    /// Local mini-batch size used with this profile.
    pub fn batch_size(self) -> usize {
        match self {
            BudgetPreset::Shakespeare | BudgetPreset::Femnist => 20,
            BudgetPreset::Sent140 => 10,
            BudgetPreset::Celeba | BudgetPreset::Synthetic => 5,
        }
    }

    /// Lower and upper halves of the range, split at the midpoint (shared endpoint).
    pub fn halves(self) -> ((usize, usize), (usize, usize)) {
        let (a, b) = self.range();
        let mid = (a + b) / 2;
        ((a, mid), (mid, b))
    }
}

impl std::str::FromStr for BudgetPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "shakespeare" => Ok(BudgetPreset::Shakespeare),
            "sent140" => Ok(BudgetPreset::Sent140),
            "femnist" => Ok(BudgetPreset::Femnist),
            "celeba" => Ok(BudgetPreset::Celeba),
            "synthetic" => Ok(BudgetPreset::Synthetic),
            other => Err(Error::Config(format!("unknown budget preset {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::seeded_stream;

    fn toy(sizes: &[usize]) -> FederatedDataset {
        let mut next = 0.0;
        let shards = sizes
            .iter()
            .enumerate()
            .map(|(k, &n)| {
                let features: Vec<f64> = (0..n)
                    .map(|_| {
                        next += 1.0;
                        next
                    })
                    .collect();
                ClientShard::new(k, 1, features, (0..n).map(|i| i % 2).collect()).unwrap()
            })
            .collect();
        FederatedDataset::new(shards, 1, 2).unwrap()
    }

    #[test]
    fn median_steps_examples() {
        assert_eq!(median_client_steps(22.0, 5), 5);
        assert_eq!(median_client_steps(10.0, 10), 1);
        assert_eq!(median_client_steps(161.0, 20), 9);
    }

    #[test]
    fn stats_median() {
        assert_eq!(toy(&[3, 1, 2]).stats().median_client_samples, 2.0);
        assert_eq!(toy(&[4, 1, 2, 9]).stats().median_client_samples, 3.0);
        assert_eq!(toy(&[4, 1, 2, 9]).stats().total_samples, 16);
    }

    #[test]
    fn iid_partition_two_clients_four_samples() {
        let ds = toy(&[3, 1]);
        let out = partition_iid(&ds, &mut seeded_stream(1, "iid")).unwrap();
        assert_eq!(out.shards()[0].len(), 2);
        assert_eq!(out.shards()[1].len(), 2);
        let mut all: Vec<f64> = out.shards().iter().flat_map(|s| s.features().to_vec()).collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn iid_partition_is_balanced_disjoint_and_replayable() {
        let ds = toy(&[17, 1, 5, 40, 2]);
        let a = partition_iid(&ds, &mut seeded_stream(3, "iid")).unwrap();
        let b = partition_iid(&ds, &mut seeded_stream(3, "iid")).unwrap();
        assert_eq!(a, b);
        let sizes: Vec<usize> = a.shards().iter().map(ClientShard::len).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let mut all: Vec<f64> = a.shards().iter().flat_map(|s| s.features().to_vec()).collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (1..=65).map(f64::from).collect::<Vec<_>>());
    }

    #[test]
    fn batch_sampling_edge_cases() {
        let single = ClientShard::new(0, 2, vec![4.0, 5.0], vec![1]).unwrap();
        let b = sample_batch(&single, 1, &mut seeded_stream(1, "b")).unwrap();
        assert_eq!(b.row(0), &[4.0, 5.0]);
        assert_eq!(b.labels(), &[1]);

        let three = ClientShard::with_split(0, 1, vec![0.0, 1.0, 2.0], vec![0, 0, 0], vec![0, 1, 2], vec![]).unwrap();
        let b = sample_batch(&three, 5, &mut seeded_stream(1, "b")).unwrap();
        assert_eq!(b.len(), 5);
        assert!(b.rows().all(|r| r[0] < 3.0));

        let no_train = ClientShard::with_split(0, 1, vec![0.0], vec![0], vec![], vec![0]).unwrap();
        assert!(sample_batch(&no_train, 1, &mut seeded_stream(1, "b")).is_err());
    }

    #[test]
    fn batch_sampling_never_touches_test_rows() {
        let shard = ClientShard::new(0, 1, (0..10).map(f64::from).collect(), vec![0; 10]).unwrap();
        let mut s = seeded_stream(2, "b");
        for _ in 0..200 {
            let b = sample_batch(&shard, 4, &mut s).unwrap();
            assert!(b.rows().all(|r| r[0] < 8.0));
        }
    }

    #[test]
    fn batch_frequencies_are_uniform() {
        let n = 10;
        let shard =
            ClientShard::with_split(0, 1, (0..n).map(|i| i as f64).collect(), vec![0; n], (0..n).collect(), vec![])
                .unwrap();
        let mut s = seeded_stream(77, "freq");
        let draws = 100_000;
        let mut counts = vec![0usize; n];
        let b = sample_batch(&shard, draws, &mut s).unwrap();
        for r in b.rows() {
            counts[r[0] as usize] += 1;
        }
        let p = 1.0 / n as f64;
        let expect = draws as f64 * p;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - expect).abs() < 4.0 * sd, "count {c}");
        }
    }

    #[test]
    fn presets() {
        assert_eq!(BudgetPreset::Synthetic.range(), (4, 22));
        assert_eq!(BudgetPreset::Synthetic.halves(), ((4, 13), (13, 22)));
        assert_eq!(BudgetPreset::Femnist.range(), (8, 40));
        assert_eq!("celeba".parse::<BudgetPreset>().unwrap(), BudgetPreset::Celeba);
        assert!("mnist".parse::<BudgetPreset>().is_err());
    }
}
