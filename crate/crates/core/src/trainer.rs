//! Full-batch gradient descent for the competitive layers, with per-epoch
//! metric traces, repeated-seed experiments and grid search.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::layers::{DclLayer, DeepDcl, Model, ModelKind, VclLayer};
use crate::linalg::{edm_unchecked, DataMatrix};
use crate::loss::{self, VoronoiAssignment};

/// Learning rate for the vanilla layer on standardized planar data.
pub const VCL_LEARNING_RATE: f64 = 0.008;
/// Learning rate for the dual layers on standardized planar data.
pub const DCL_LEARNING_RATE: f64 = 0.0008;
pub const DEFAULT_EPOCHS: usize = 400;
pub const DEFAULT_K: usize = 30;
pub const DEFAULT_ENCODER: [usize; 2] = [10, 10];
/// Training aborts once Q exceeds this multiple of its initial value.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub model_kind: ModelKind,
    pub k: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub seed: u64,
    pub record_every: usize,
    /// Hold the Voronoi partition computed at the first epoch fixed.
    #[serde(default)]
    pub freeze_assignment: bool,
    /// Per-output bias on the dual head.
    #[serde(default)]
    pub dcl_bias: bool,
    /// Encoder widths for the deep model; the last entry is the encoded width.
    #[serde(default)]
    pub encoder_widths: Vec<usize>,
}

impl TrainConfig {
    pub fn new(model_kind: ModelKind) -> Self {
        let learning_rate = match model_kind {
            ModelKind::Vcl => VCL_LEARNING_RATE,
            ModelKind::Dcl | ModelKind::DeepDcl => DCL_LEARNING_RATE,
        };
        Self {
            model_kind,
            k: DEFAULT_K,
            epochs: DEFAULT_EPOCHS,
            learning_rate,
            lambda: loss::DEFAULT_LAMBDA,
            seed: 0,
            record_every: 1,
            freeze_assignment: false,
            dcl_bias: false,
            encoder_widths: if model_kind == ModelKind::DeepDcl {
                DEFAULT_ENCODER.to_vec()
            } else {
                Vec::new()
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if self.epochs == 0 {
            return bad("epoch count must be at least 1".into());
        }
        if self.k < 2 {
            return bad(format!("prototype count must be at least 2, got {}", self.k));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be nonnegative, got {}", self.lambda));
        }
        if self.record_every == 0 {
            return bad("record interval must be positive".into());
        }
        if self.model_kind == ModelKind::DeepDcl && self.encoder_widths.contains(&0) {
            return bad("encoder widths must be positive".into());
        }
        Ok(())
    }
}

/// Glorot-initialized model for data of shape `d × n`.
pub fn init_model(config: &TrainConfig, d: usize, n: usize) -> Model {
    match config.model_kind {
        ModelKind::Vcl => Model::Vcl(VclLayer::glorot(config.k, d, config.seed)),
        ModelKind::Dcl => Model::Dcl(DclLayer::glorot(config.k, n, config.seed, config.dcl_bias)),
        ModelKind::DeepDcl => Model::DeepDcl(DeepDcl::glorot(
            d,
            n,
            config.k,
            &config.encoder_widths,
            config.seed,
            config.dcl_bias,
        )),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// Number of updates applied before this snapshot.
    pub epoch: usize,
    pub quantization: f64,
    pub edge_norm: f64,
    pub valid_count: usize,
    /// `d × k` prototype positions (in encoded space for the deep model).
    pub prototypes: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsTrace {
    /// Snapshots at epochs `0, r, 2r, …` below the epoch budget.
    pub records: Vec<TraceRecord>,
    /// State after the last update.
    pub final_record: TraceRecord,
}

impl MetricsTrace {
    /// Record at exactly `epoch`, including the final one.
    pub fn at(&self, epoch: usize) -> Option<&TraceRecord> {
        if self.final_record.epoch == epoch {
            return Some(&self.final_record);
        }
        self.records.iter().find(|r| r.epoch == epoch)
    }
}

fn apply_step(model: &mut Model, x: &DataMatrix, a: &VoronoiAssignment, lambda: f64, lr: f64) -> Result<()> {
    match model {
        Model::Vcl(layer) => {
            let g = loss::grad_vcl(x, layer, a, lambda);
            layer.weights -= &g * lr;
        }
        Model::Dcl(layer) => {
            let g = loss::grad_dcl(x, layer, a, lambda)?;
            layer.weights -= &g.weights * lr;
            if let (Some(b), Some(gb)) = (layer.bias.as_mut(), g.bias.as_ref()) {
                b.axpy(-lr, gb, 1.0);
            }
        }
        Model::DeepDcl(m) => {
            let g = loss::grad_deep(m, x, a, lambda)?;
            for (layer, gl) in m.encoder.iter_mut().zip(&g.encoder) {
                layer.weights -= &gl.weights * lr;
                layer.bias.axpy(-lr, &gl.bias, 1.0);
            }
            m.head.weights -= &g.head.weights * lr;
            if let (Some(b), Some(gb)) = (m.head.bias.as_mut(), g.head.bias.as_ref()) {
                b.axpy(-lr, gb, 1.0);
            }
        }
    }
    Ok(())
}

/// Trains a freshly initialized model with plain full-batch gradient descent.
pub fn train(dataset: &Dataset, config: &TrainConfig) -> Result<(Model, MetricsTrace)> {
    config.validate()?;
    let x = &dataset.x;
    let max_mean = x.as_matrix().row_iter().map(|r| r.mean().abs()).fold(0.0, f64::max);
    if max_mean > 1e-6 {
        log::warn!(
            "{}: training on data that is not centered (max feature mean {max_mean:.3e})",
            dataset.name
        );
    }
    let model = init_model(config, x.d(), x.n());
    train_model(model, x, config)
}

/// Trains an existing model in place of a fresh initialization.
pub fn train_model(mut model: Model, x: &DataMatrix, config: &TrainConfig) -> Result<(Model, MetricsTrace)> {
    config.validate()?;
    let mut frozen: Option<VoronoiAssignment> = None;
    let mut records = Vec::with_capacity(config.epochs / config.record_every + 1);
    let mut limit = f64::INFINITY;

    let evaluate =
        |model: &Model, frozen: &mut Option<VoronoiAssignment>| -> Result<(VoronoiAssignment, TraceRecord)> {
            let (view, p) = model.embed(x)?;
            let a = match frozen {
                Some(a) => a.clone(),
                None => {
                    let a = loss::assign_matrix(&view, p.as_matrix())?;
                    if config.freeze_assignment {
                        *frozen = Some(a.clone());
                    }
                    a
                }
            };
            let l = loss::frozen_loss(&view, p.as_matrix(), &a, config.lambda);
            let record = TraceRecord {
                epoch: 0,
                quantization: l.quantization,
                edge_norm: l.edge_norm,
                valid_count: loss::valid_prototypes(&a),
                prototypes: p.into_matrix(),
            };
            Ok((a, record))
        };

    for epoch in 0..config.epochs {
        let (a, mut record) = evaluate(&model, &mut frozen)?;
        record.epoch = epoch;
        if epoch == 0 {
            limit = DIVERGENCE_FACTOR * record.quantization.max(f64::MIN_POSITIVE);
        }
        if !record.quantization.is_finite() || record.quantization > limit {
            return Err(Error::Diverged {
                epoch,
                quantization: record.quantization,
                limit,
            });
        }
        if epoch % config.record_every == 0 {
            records.push(record);
        }
        apply_step(&mut model, x, &a, config.lambda, config.learning_rate)?;
    }

    let (_, mut final_record) = evaluate(&model, &mut frozen)?;
    final_record.epoch = config.epochs;
    if !final_record.quantization.is_finite() || final_record.quantization > limit {
        return Err(Error::Diverged {
            epoch: config.epochs,
            quantization: final_record.quantization,
            limit,
        });
    }
    Ok((model, MetricsTrace { records, final_record }))
}

/// Nearest prototype for every sample (ties to the lower index).
pub fn nearest_prototypes(model: &Model, x: &DataMatrix) -> Result<Vec<usize>> {
    let (view, p) = model.embed(x)?;
    let dist = edm_unchecked(&view, p.as_matrix());
    Ok(dist
        .row_iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .fold(
                    (0, f64::INFINITY),
                    |best, (j, &d)| if d < best.1 { (j, d) } else { best },
                )
                .0
        })
        .collect())
}

/// Sample-weighted majority-class purity of the clusters induced by `winners`.
pub fn cluster_accuracy(winners: &[usize], labels: &[usize]) -> Result<f64> {
    if winners.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            context: "accuracy label count",
            expected: winners.len(),
            actual: labels.len(),
        });
    }
    if winners.is_empty() {
        return Err(Error::InvalidArgument("accuracy of an empty dataset".into()));
    }
    let k = winners.iter().max().map_or(0, |m| m + 1);
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0usize; classes]; k];
    for (&w, &l) in winners.iter().zip(labels) {
        table[w][l] += 1;
    }
    let hits: usize = table.iter().map(|row| row.iter().copied().max().unwrap_or(0)).sum();
    Ok(hits as f64 / winners.len() as f64)
}

pub fn accuracy(model: &Model, dataset: &Dataset) -> Result<f64> {
    let labels = dataset
        .labels
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument(format!("{} has no labels", dataset.name)))?;
    cluster_accuracy(&nearest_prototypes(model, &dataset.x)?, labels)
}

/// Outcome of one training run inside an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub seed: u64,
    pub model: Model,
    pub trace: MetricsTrace,
}

/// Mean and standard error of the mean over seeds for one recorded epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub epoch: usize,
    pub q_mean: f64,
    pub q_sem: f64,
    pub edge_mean: f64,
    pub edge_sem: f64,
    pub valid_mean: f64,
    pub valid_sem: f64,
}

/// `(mean, s / √R)` with the unbiased sample standard deviation `s`.
pub fn mean_sem(values: &[f64]) -> (f64, f64) {
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}

/// Per-epoch aggregate over traces that share the same recording schedule.
pub fn aggregate(traces: &[&MetricsTrace]) -> Vec<AggregateRow> {
    let Some(first) = traces.first() else {
        return Vec::new();
    };
    (0..first.records.len())
        .map(|idx| {
            let pick = |f: &dyn Fn(&TraceRecord) -> f64| -> (f64, f64) {
                let v: Vec<f64> = traces.iter().map(|t| f(&t.records[idx])).collect();
                mean_sem(&v)
            };
            let (q_mean, q_sem) = pick(&|r| r.quantization);
            let (edge_mean, edge_sem) = pick(&|r| r.edge_norm);
            let (valid_mean, valid_sem) = pick(&|r| r.valid_count as f64);
            AggregateRow {
                epoch: first.records[idx].epoch,
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

/// Trains `repetitions` models with seeds `config.seed + r`. Runs execute on
/// the current rayon pool; results are ordered by seed.
pub fn run_seeds(dataset: &Dataset, config: &TrainConfig, repetitions: usize) -> Result<Vec<SeedRun>> {
    if repetitions == 0 {
        return Err(Error::InvalidArgument("repetitions must be at least 1".into()));
    }
    (0..repetitions as u64)
        .into_par_iter()
        .map(|r| {
            let mut cfg = config.clone();
            cfg.seed = config.seed.wrapping_add(r);
            let (model, trace) = train(dataset, &cfg)?;
            Ok(SeedRun {
                seed: cfg.seed,
                model,
                trace,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub config: TrainConfig,
    pub mean_final_q: f64,
    pub mean_final_edge: f64,
    pub final_q: Vec<f64>,
}

/// Trains every configuration over `repetitions` seeds and ranks by mean
/// final quantization, then by mean edge norm.
pub fn grid_search(dataset: &Dataset, grid: &[TrainConfig], repetitions: usize) -> Result<Vec<GridResult>> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument(
            "grid search needs at least one configuration".into(),
        ));
    }
    let mut results = grid
        .iter()
        .map(|cfg| {
            let runs = run_seeds(dataset, cfg, repetitions)?;
            let final_q: Vec<f64> = runs.iter().map(|r| r.trace.final_record.quantization).collect();
            let edges: Vec<f64> = runs.iter().map(|r| r.trace.final_record.edge_norm).collect();
            Ok(GridResult {
                config: cfg.clone(),
                mean_final_q: mean_sem(&final_q).0,
                mean_final_edge: mean_sem(&edges).0,
                final_q,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    results.sort_by(|a, b| {
        a.mean_final_q
            .total_cmp(&b.mean_final_q)
            .then(a.mean_final_edge.total_cmp(&b.mean_final_edge))
    });
    Ok(results)
}
