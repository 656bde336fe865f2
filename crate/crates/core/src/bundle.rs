//! Run bundles: a directory holding everything one repeated-seed training
//! experiment produced.
//!
//! ```text
//! config.json        dataset description, training config, spec hash
//! data.csv           the (normalized) training data
//! trace.csv          seed,epoch,quantization,edge_norm,valid_count
//! trajectories.csv   seed,epoch,prototype,c0,c1,...
//! model.json         final model per seed
//! aggregate.csv      per-epoch mean and standard error over seeds
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::datasets::{self, Dataset, GeneratorSpec};
use crate::error::{Error, Result};
use crate::layers::ModelDocument;
use crate::trainer::{self, AggregateRow, SeedRun, TrainConfig};

pub const CONFIG_FILE: &str = "config.json";
pub const DATA_FILE: &str = "data.csv";
pub const TRACE_FILE: &str = "trace.csv";
pub const TRAJECTORY_FILE: &str = "trajectories.csv";
pub const MODEL_FILE: &str = "model.json";
pub const AGGREGATE_FILE: &str = "aggregate.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub d: usize,
    pub n: usize,
    pub normalized: bool,
    #[serde(default)]
    pub generator: Option<GeneratorSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleConfig {
    pub dataset: DatasetInfo,
    pub train: TrainConfig,
    pub repetitions: usize,
    /// SHA-256 of the canonical JSON of the three fields above.
    pub spec_hash: String,
}

impl BundleConfig {
    pub fn new(dataset: DatasetInfo, train: TrainConfig, repetitions: usize) -> Self {
        let mut cfg = Self {
            dataset,
            train,
            repetitions,
            spec_hash: String::new(),
        };
        cfg.spec_hash = cfg.compute_hash();
        cfg
    }

    pub fn compute_hash(&self) -> String {
        let canonical = serde_json::json!({
            "dataset": self.dataset,
            "train": self.train,
            "repetitions": self.repetitions,
        });
        let digest = Sha256::digest(canonical.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub seed: u64,
    pub epoch: usize,
    pub quantization: f64,
    pub edge_norm: f64,
    pub valid_count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelsFile {
    models: Vec<ModelDocument>,
}

/// Everything written to or read from a bundle directory.
#[derive(Debug, Clone)]
pub struct RunBundle {
    pub config: BundleConfig,
    pub data: Dataset,
    pub trace: Vec<TraceRow>,
    /// `(seed, epoch, d × k prototypes)`.
    pub trajectories: Vec<(u64, usize, DMatrix<f64>)>,
    pub models: Vec<ModelDocument>,
    pub aggregate: Vec<AggregateRow>,
}

impl RunBundle {
    pub fn from_runs(config: BundleConfig, data: Dataset, runs: &[SeedRun]) -> Self {
        let mut trace = Vec::new();
        let mut trajectories = Vec::new();
        for run in runs {
            for r in run.trace.records.iter().chain(std::iter::once(&run.trace.final_record)) {
                trace.push(TraceRow {
                    seed: run.seed,
                    epoch: r.epoch,
                    quantization: r.quantization,
                    edge_norm: r.edge_norm,
                    valid_count: r.valid_count,
                });
                trajectories.push((run.seed, r.epoch, r.prototypes.clone()));
            }
        }
        let traces: Vec<_> = runs.iter().map(|r| &r.trace).collect();
        let aggregate = trainer::aggregate(&traces);
        let models = runs
            .iter()
            .map(|r| ModelDocument::from_model(&r.model, data.x.d(), data.x.n(), r.seed))
            .collect();
        Self {
            config,
            data,
            trace,
            trajectories,
            models,
            aggregate,
        }
    }

    /// Seeds in trace order.
    pub fn seeds(&self) -> Vec<u64> {
        let mut seeds: Vec<u64> = Vec::new();
        for row in &self.trace {
            if !seeds.contains(&row.seed) {
                seeds.push(row.seed);
            }
        }
        seeds
    }

    /// Recomputes the aggregate from the per-seed trace rows, skipping the
    /// final post-training row of each seed.
    pub fn recompute_aggregate(&self) -> Vec<AggregateRow> {
        let epochs = self.config.train.epochs;
        let seeds = self.seeds();
        let per_seed: Vec<Vec<&TraceRow>> = seeds
            .iter()
            .map(|s| self.trace.iter().filter(|r| r.seed == *s && r.epoch < epochs).collect())
            .collect();
        let Some(first) = per_seed.first() else {
            return Vec::new();
        };
        (0..first.len())
            .map(|idx| {
                let col = |f: &dyn Fn(&TraceRow) -> f64| {
                    let v: Vec<f64> = per_seed.iter().map(|rows| f(rows[idx])).collect();
                    trainer::mean_sem(&v)
                };
                let (q_mean, q_sem) = col(&|r| r.quantization);
                let (edge_mean, edge_sem) = col(&|r| r.edge_norm);
                let (valid_mean, valid_sem) = col(&|r| r.valid_count as f64);
                AggregateRow {
                    epoch: first[idx].epoch,
                    q_mean,
                    q_sem,
                    edge_mean,
                    edge_sem,
                    valid_mean,
                    valid_sem,
                }
            })
            .collect()
    }

    /// Snapshots of one seed, in epoch order.
    pub fn trajectory_of(&self, seed: u64) -> Vec<(usize, DMatrix<f64>)> {
        self.trajectories
            .iter()
            .filter(|(s, _, _)| *s == seed)
            .map(|(_, e, p)| (*e, p.clone()))
            .collect()
    }

    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        fs::write(
            dir.join(CONFIG_FILE),
            serde_json::to_string_pretty(&self.config)? + "\n",
        )?;
        datasets::save_csv(&self.data, dir.join(DATA_FILE))?;

        let mut w = csv::Writer::from_path(dir.join(TRACE_FILE)).map_err(csv_io)?;
        for row in &self.trace {
            w.serialize(row).map_err(csv_io)?;
        }
        w.flush()?;

        let mut out = std::io::BufWriter::new(fs::File::create(dir.join(TRAJECTORY_FILE))?);
        // prototypes of the deep model live in the encoded space
        let d = self.trajectories.first().map_or(self.data.x.d(), |t| t.2.nrows());
        let coords: Vec<String> = (0..d).map(|c| format!("c{c}")).collect();
        writeln!(out, "seed,epoch,prototype,{}", coords.join(","))?;
        for (seed, epoch, p) in &self.trajectories {
            for (j, col) in p.column_iter().enumerate() {
                let values: Vec<String> = col.iter().map(|v| v.to_string()).collect();
                writeln!(out, "{seed},{epoch},{j},{}", values.join(","))?;
            }
        }
        out.flush()?;

        let models = ModelsFile {
            models: self.models.clone(),
        };
        fs::write(dir.join(MODEL_FILE), serde_json::to_string(&models)? + "\n")?;
        write_aggregate(&self.aggregate, dir.join(AGGREGATE_FILE))?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let require = |name: &str| -> Result<PathBuf> {
            let p = dir.join(name);
            if p.is_file() {
                Ok(p)
            } else {
                Err(Error::Bundle {
                    path: p,
                    message: "missing bundle file".into(),
                })
            }
        };
        let config_path = require(CONFIG_FILE)?;
        let data_path = require(DATA_FILE)?;
        let trace_path = require(TRACE_FILE)?;
        let traj_path = require(TRAJECTORY_FILE)?;
        let model_path = require(MODEL_FILE)?;
        let agg_path = require(AGGREGATE_FILE)?;

        let bundle_err = |path: &Path, message: String| Error::Bundle {
            path: path.to_path_buf(),
            message,
        };
        let config: BundleConfig = serde_json::from_str(&fs::read_to_string(&config_path)?)
            .map_err(|e| bundle_err(&config_path, e.to_string()))?;
        let data = datasets::load_csv(&data_path)?;

        let mut trace = Vec::new();
        let mut reader = csv::Reader::from_path(&trace_path).map_err(|e| bundle_err(&trace_path, e.to_string()))?;
        for row in reader.deserialize() {
            trace.push(row.map_err(|e: csv::Error| bundle_err(&trace_path, e.to_string()))?);
        }

        let trajectories = read_trajectories(&traj_path)?;
        let models: ModelsFile = serde_json::from_str(&fs::read_to_string(&model_path)?)
            .map_err(|e| bundle_err(&model_path, e.to_string()))?;

        let mut aggregate = Vec::new();
        let mut reader = csv::Reader::from_path(&agg_path).map_err(|e| bundle_err(&agg_path, e.to_string()))?;
        for row in reader.deserialize() {
            aggregate.push(row.map_err(|e: csv::Error| bundle_err(&agg_path, e.to_string()))?);
        }

        Ok(Self {
            config,
            data,
            trace,
            trajectories,
            models: models.models,
            aggregate,
        })
    }
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

pub fn write_aggregate(rows: &[AggregateRow], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref()).map_err(csv_io)?;
    for row in rows {
        w.serialize(row).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn read_trajectories(path: &Path) -> Result<Vec<(u64, usize, DMatrix<f64>)>> {
    let err = |message: String| Error::Bundle {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
    let header = reader.headers().map_err(|e| err(e.to_string()))?;
    if header.len() < 4 || &header[0] != "seed" || &header[1] != "epoch" || &header[2] != "prototype" {
        return Err(err("expected header seed,epoch,prototype,c0,...".into()));
    }
    let d = header.len() - 3;
    let mut out: Vec<(u64, usize, Vec<Vec<f64>>)> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| err(e.to_string()))?;
        if record.len() != 3 + d {
            return Err(err(format!("row {}: expected {} fields", line + 1, 3 + d)));
        }
        let parse_err = |c: usize| err(format!("row {}: bad value in column {c}", line + 1));
        let seed: u64 = record[0].parse().map_err(|_| parse_err(0))?;
        let epoch: usize = record[1].parse().map_err(|_| parse_err(1))?;
        let proto: usize = record[2].parse().map_err(|_| parse_err(2))?;
        let coords = (0..d)
            .map(|c| record[3 + c].parse::<f64>().map_err(|_| parse_err(3 + c)))
            .collect::<Result<Vec<_>>>()?;
        match out.last_mut() {
            Some((s, e, cols)) if *s == seed && *e == epoch => {
                if proto != cols.len() {
                    return Err(err(format!("row {}: prototype index out of order", line + 1)));
                }
                cols.push(coords);
            }
            _ => {
                if proto != 0 {
                    return Err(err(format!("row {}: snapshot must start at prototype 0", line + 1)));
                }
                out.push((seed, epoch, vec![coords]));
            }
        }
    }
    Ok(out
        .into_iter()
        .map(|(s, e, cols)| {
            let k = cols.len();
            (s, e, DMatrix::from_fn(d, k, |f, j| cols[j][f]))
        })
        .collect())
}
