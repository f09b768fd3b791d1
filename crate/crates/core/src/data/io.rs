//! Dataset files.
//!
//! A dataset is a CSV table with header `client,split,label,x0,…,x{d-1}`,
//! one row per sample, grouped by client in ascending id and in row order
//! within a client. `split` is `train` or `test`. Floats are written in
//! shortest round-trip form, so a write/read cycle is lossless.
//!
//! Next to `name.csv` sits `name.json`, a sidecar with the geometry and
//! summary statistics. Reading checks the recomputed statistics against it.

use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{DatasetStats, FederatedDataset};
use crate::error::{Error, Result};
use crate::models::{ClientShard, Split};

pub const DATASET_FORMAT: &str = "gel-dataset/v1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSidecar {
    pub format: String,
    pub dim: usize,
    pub classes: usize,
    pub stats: DatasetStats,
    /// Free-form provenance (generator parameters, seed).
    #[serde(default)]
    pub source: serde_json::Value,
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn write_dataset(dataset: &FederatedDataset, csv_path: &Path, source: serde_json::Value) -> Result<()> {
    let mut w = csv::Writer::from_path(csv_path).map_err(csv_err)?;
    let mut header = vec!["client".to_owned(), "split".to_owned(), "label".to_owned()];
    header.extend((0..dataset.dim()).map(|j| format!("x{j}")));
    w.write_record(&header).map_err(csv_err)?;
    for shard in dataset.shards() {
        for i in 0..shard.len() {
            let split = match shard.split_of(i) {
                Split::Train => "train",
                Split::Test => "test",
            };
            let mut record = vec![shard.id.to_string(), split.to_owned(), shard.labels()[i].to_string()];
            record.extend(shard.row(i).iter().map(f64::to_string));
            w.write_record(&record).map_err(csv_err)?;
        }
    }
    w.flush()?;
    let sidecar = DatasetSidecar {
        format: DATASET_FORMAT.to_owned(),
        dim: dataset.dim(),
        classes: dataset.classes(),
        stats: dataset.stats().clone(),
        source,
    };
    serde_json::to_writer_pretty(File::create(sidecar_path(csv_path))?, &sidecar)?;
    Ok(())
}

#[derive(Default)]
struct ShardBuilder {
    features: Vec<f64>,
    labels: Vec<usize>,
    train: Vec<usize>,
    test: Vec<usize>,
}

pub fn read_dataset(csv_path: &Path) -> Result<(FederatedDataset, DatasetSidecar)> {
    let sidecar: DatasetSidecar = serde_json::from_reader(File::open(sidecar_path(csv_path))?)?;
    if sidecar.format != DATASET_FORMAT {
        return Err(Error::Parse(format!("unsupported dataset format {:?}", sidecar.format)));
    }
    let dim = sidecar.dim;
    let mut r = csv::Reader::from_path(csv_path).map_err(csv_err)?;
    if r.headers().map_err(csv_err)?.len() != dim + 3 {
        return Err(Error::Parse(format!("expected {} columns", dim + 3)));
    }
    let mut builders: Vec<ShardBuilder> = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let at = |what: &str| Error::Parse(format!("row {}: bad {what}", line + 2));
        let client: usize = record[0].parse().map_err(|_| at("client"))?;
        if client > builders.len() {
            return Err(at("client order"));
        }
        if client == builders.len() {
            builders.push(ShardBuilder::default());
        }
        let b = &mut builders[client];
        let idx = b.labels.len();
        match &record[1] {
            "train" => b.train.push(idx),
            "test" => b.test.push(idx),
            _ => return Err(at("split")),
        }
        b.labels.push(record[2].parse().map_err(|_| at("label"))?);
        for j in 0..dim {
            b.features.push(record[3 + j].parse().map_err(|_| at("feature"))?);
        }
    }
    let shards = builders
        .into_iter()
        .enumerate()
        .map(|(k, b)| ClientShard::with_split(k, dim, b.features, b.labels, b.train, b.test))
        .collect::<Result<Vec<_>>>()?;
    let dataset = FederatedDataset::new(shards, dim, sidecar.classes)?;
    if dataset.stats() != &sidecar.stats {
        return Err(Error::Parse(format!(
            "sidecar stats {:?} disagree with table {:?}",
            sidecar.stats,
            dataset.stats()
        )));
    }
    Ok((dataset, sidecar))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}
