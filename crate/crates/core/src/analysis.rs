//! Numerical checks of the gradient-flow picture for the two layers.
//!
//! With the Voronoi partition frozen and `λ = 0`, the vanilla weights of
//! prototype `j` follow `W(t) = μⱼ + (W₀ − μⱼ) e^{−t}`, while the dual weights
//! follow `Ω(t) = X⁺μⱼ + Σᵢ cᵢ vᵢ e^{−σᵢ² t}`, zero-σ modes being constant.
//! Discrete epochs map to continuous time through [`TimeMap`].

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::layers::{DclLayer, ModelKind, VclLayer};
use crate::linalg::{pseudoinverse, svd, DataMatrix, SvdFactors, RANK_TOLERANCE};
use crate::loss::{self, VoronoiAssignment};

/// Maps an epoch index onto the flow's time axis:
/// `t = 2 · ε · n_j · epoch / n`.
///
/// The gradient of the mean quantization error for prototype `j` is
/// `(2 n_j / n)` times the per-set flow field, so one step of size `ε` advances
/// the flow by that much time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeMap {
    pub learning_rate: f64,
    pub n: usize,
    pub voronoi_size: usize,
}

impl TimeMap {
    pub fn new(learning_rate: f64, n: usize, voronoi_size: usize) -> Self {
        Self {
            learning_rate,
            n,
            voronoi_size,
        }
    }

    pub fn time(&self, epoch: f64) -> f64 {
        2.0 * self.learning_rate * self.voronoi_size as f64 * epoch / self.n as f64
    }
}

/// Closed-form dual flow for one prototype.
#[derive(Debug, Clone)]
pub struct FlowPrediction {
    /// `Ω_crit = X⁺μ`.
    pub critical: DVector<f64>,
    /// Coordinates of `Ω₀ − Ω_crit` in the right singular basis.
    pub mode_constants: DVector<f64>,
    /// `σᵢ²` per mode; zero for center modes.
    pub rates: DVector<f64>,
    /// Right singular vectors as columns.
    pub basis: DMatrix<f64>,
    pub time_map: TimeMap,
}

impl FlowPrediction {
    pub fn at_time(&self, t: f64) -> DVector<f64> {
        let mut out = self.critical.clone();
        for i in 0..self.basis.ncols() {
            let c = self.mode_constants[i] * (-self.rates[i] * t).exp();
            out.axpy(c, &self.basis.column(i), 1.0);
        }
        out
    }

    pub fn at_epoch(&self, epoch: usize) -> DVector<f64> {
        self.at_time(self.time_map.time(epoch as f64))
    }

    /// Indices of the zero-rate modes.
    pub fn center_modes(&self) -> Vec<usize> {
        (0..self.rates.len()).filter(|&i| self.rates[i] == 0.0).collect()
    }
}

fn mode_rates(factors: &SvdFactors, n: usize) -> DVector<f64> {
    let top = factors.singular_values.get(0).copied().unwrap_or(0.0);
    DVector::from_fn(n, |i, _| match factors.singular_values.get(i) {
        Some(&s) if s > RANK_TOLERANCE * top => s * s,
        _ => 0.0,
    })
}

/// Predicted dual trajectory at the requested epochs.
pub fn predict_dual_flow(
    x: &DataMatrix,
    omega0: &DVector<f64>,
    mu: &DVector<f64>,
    epochs: &[usize],
    time_map: TimeMap,
) -> Result<(FlowPrediction, Vec<DVector<f64>>)> {
    if omega0.len() != x.n() {
        return Err(Error::DimensionMismatch {
            context: "dual weight length",
            expected: x.n(),
            actual: omega0.len(),
        });
    }
    if mu.len() != x.d() {
        return Err(Error::DimensionMismatch {
            context: "centroid length",
            expected: x.d(),
            actual: mu.len(),
        });
    }
    let factors = svd(x)?;
    let critical = pseudoinverse(x)? * mu;
    let mode_constants = factors.v.tr_mul(&(omega0 - &critical));
    let prediction = FlowPrediction {
        critical,
        mode_constants,
        rates: mode_rates(&factors, x.n()),
        basis: factors.v,
        time_map,
    };
    let path = epochs.iter().map(|&e| prediction.at_epoch(e)).collect();
    Ok((prediction, path))
}

/// Predicted vanilla trajectory `μ + (W₀ − μ) e^{−t}` at the requested epochs.
pub fn predict_base_flow(
    w0: &DVector<f64>,
    mu: &DVector<f64>,
    epochs: &[usize],
    time_map: TimeMap,
) -> Result<Vec<DVector<f64>>> {
    if w0.len() != mu.len() {
        return Err(Error::DimensionMismatch {
            context: "base flow centroid length",
            expected: w0.len(),
            actual: mu.len(),
        });
    }
    Ok(epochs
        .iter()
        .map(|&e| mu + (w0 - mu) * (-time_map.time(e as f64)).exp())
        .collect())
}

/// Modes whose initial amplitude falls below this are not fitted.
pub const UNOBSERVABLE_AMPLITUDE: f64 = 1e-10;
/// Points below this amplitude are dropped from the log-linear fit.
pub const FIT_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeFit {
    pub mode: usize,
    pub initial_amplitude: f64,
    /// Least-squares slope of `log|amplitude|` against `t`; `None` for
    /// unobservable modes.
    pub slope: Option<f64>,
}

/// Projects `(t, state)` samples on each basis column after removing `center`
/// and fits an exponential rate per mode.
pub fn fit_decay_rates(samples: &[(f64, DVector<f64>)], center: &DVector<f64>, basis: &DMatrix<f64>) -> Vec<ModeFit> {
    (0..basis.ncols())
        .map(|mode| {
            let b = basis.column(mode);
            let amps: Vec<(f64, f64)> = samples.iter().map(|(t, s)| (*t, b.dot(&(s - center)))).collect();
            let initial_amplitude = amps.first().map_or(0.0, |a| a.1.abs());
            let pts: Vec<(f64, f64)> = amps
                .iter()
                .filter(|(_, a)| a.abs() > FIT_FLOOR)
                .map(|&(t, a)| (t, a.abs().ln()))
                .collect();
            let slope = (initial_amplitude >= UNOBSERVABLE_AMPLITUDE && pts.len() >= 2)
                .then(|| least_squares_slope(&pts))
                .flatten();
            ModeFit {
                mode,
                initial_amplitude,
                slope,
            }
        })
        .collect()
}

fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    let m = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Subspace {
    /// Column space of `X`, spanned by the leading left singular vectors.
    RangeX,
    /// Row space of `X`, spanned by the leading right singular vectors.
    RangeXt,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubspaceReport {
    pub residual_norms: Vec<f64>,
    pub basis_rank: usize,
}

/// Distance from each vector to the chosen range subspace.
pub fn subspace_residuals(vectors: &[DVector<f64>], x: &DataMatrix, which: Subspace) -> Result<SubspaceReport> {
    let factors = svd(x)?;
    subspace_residuals_with(vectors, &factors, which)
}

pub fn subspace_residuals_with(
    vectors: &[DVector<f64>],
    factors: &SvdFactors,
    which: Subspace,
) -> Result<SubspaceReport> {
    let rank = factors.rank(1e-10);
    let basis = match which {
        Subspace::RangeX => factors.u.columns(0, rank),
        Subspace::RangeXt => factors.v.columns(0, rank),
    };
    let residual_norms = vectors
        .iter()
        .map(|v| {
            if v.len() != basis.nrows() {
                return Err(Error::DimensionMismatch {
                    context: "subspace vector length",
                    expected: basis.nrows(),
                    actual: v.len(),
                });
            }
            let coords = basis.tr_mul(v);
            Ok((v - basis * coords).norm())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SubspaceReport {
        residual_norms,
        basis_rank: rank,
    })
}

/// First epoch whose residual drops below 10% of the initial residual.
pub fn transient_epoch(epochs: &[usize], residuals: &[f64]) -> Option<usize> {
    let first = *residuals.first()?;
    epochs
        .iter()
        .zip(residuals)
        .find(|(_, &r)| r < 0.1 * first)
        .map(|(&e, _)| e)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualityReport {
    /// `‖XXᵀ − I_d‖_F`; zero for whitened data.
    pub whiteness_residual: f64,
    /// `‖XᵀX − I_n‖_F`; at least 1 whenever `n > d`.
    pub complete_duality_residual: f64,
    /// `max ‖uᵢ − Xvᵢ/σᵢ‖_∞` over nonzero modes.
    pub u_recovery_error: f64,
    /// `max ‖μⱼ − X X⁺ μⱼ‖` over the supplied centroids.
    pub centroid_recovery_error: f64,
}

pub fn duality_checks(x: &DataMatrix, centroids: &[DVector<f64>]) -> Result<DualityReport> {
    let m = x.as_matrix();
    let (d, n) = (x.d(), x.n());
    let whiteness_residual = (m * m.transpose() - DMatrix::<f64>::identity(d, d)).norm();
    let complete_duality_residual = (m.tr_mul(m) - DMatrix::<f64>::identity(n, n)).norm();
    let factors = svd(x)?;
    let rank = factors.rank(1e-10);
    let u_recovery_error = (0..rank)
        .map(|i| {
            let s = factors.singular_values[i];
            (factors.u.column(i) - m * factors.v.column(i) / s).amax()
        })
        .fold(0.0, f64::max);
    let pinv = pseudoinverse(x)?;
    let centroid_recovery_error = centroids
        .iter()
        .map(|mu| (mu - m * (&pinv * mu)).norm())
        .fold(0.0, f64::max);
    Ok(DualityReport {
        whiteness_residual,
        complete_duality_residual,
        u_recovery_error,
        centroid_recovery_error,
    })
}

/// Centroid of each Voronoi set; `None` for empty sets.
pub fn voronoi_centroids(x: &DMatrix<f64>, assignment: &VoronoiAssignment) -> Vec<Option<DVector<f64>>> {
    (0..assignment.k())
        .map(|j| {
            let members: Vec<usize> = assignment.members(j).collect();
            (!members.is_empty())
                .then(|| members.iter().map(|&i| x.column(i).into_owned()).sum::<DVector<f64>>() / members.len() as f64)
        })
        .collect()
}

/// Recorded `(step, weights)` pairs.
pub type WeightPath = Vec<(usize, DMatrix<f64>)>;

/// Gradient descent on the dual layer with a fixed partition. Returns the
/// weights after every `record_every` steps, starting with the initial ones.
pub fn frozen_dual_descent(
    x: &DataMatrix,
    mut layer: DclLayer,
    assignment: &VoronoiAssignment,
    lambda: f64,
    learning_rate: f64,
    steps: usize,
    record_every: usize,
) -> Result<(DclLayer, WeightPath)> {
    let every = record_every.max(1);
    let mut path = vec![(0, layer.weights.clone())];
    for step in 1..=steps {
        let g = loss::grad_dcl(x, &layer, assignment, lambda)?;
        layer.weights -= &g.weights * learning_rate;
        if step % every == 0 {
            path.push((step, layer.weights.clone()));
        }
    }
    Ok((layer, path))
}

/// Vanilla counterpart of [`frozen_dual_descent`].
pub fn frozen_base_descent(
    x: &DataMatrix,
    mut layer: VclLayer,
    assignment: &VoronoiAssignment,
    lambda: f64,
    learning_rate: f64,
    steps: usize,
    record_every: usize,
) -> (VclLayer, WeightPath) {
    let every = record_every.max(1);
    let mut path = vec![(0, layer.weights.clone())];
    for step in 1..=steps {
        let g = loss::grad_vcl(x, &layer, assignment, lambda);
        layer.weights -= &g * learning_rate;
        if step % every == 0 {
            path.push((step, layer.weights.clone()));
        }
    }
    (layer, path)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeComparison {
    pub mode: usize,
    pub singular_value: f64,
    /// Predicted decay rate in flow time (`σᵢ²` dual, `1` vanilla).
    pub predicted_rate: f64,
    /// Negated fitted slope; `None` when the mode is unobservable.
    pub fitted_rate: Option<f64>,
    pub initial_amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrototypeRates {
    pub prototype: usize,
    pub voronoi_size: usize,
    pub modes: Vec<ModeComparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualCurve {
    pub epochs: Vec<usize>,
    /// Mean distance of the prototypes to `R(X)` per recorded epoch.
    pub mean_residual: Vec<f64>,
    pub transient_epoch: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub model_kind: ModelKind,
    pub time_mapping: String,
    pub learning_rate: f64,
    pub singular_values: Vec<f64>,
    pub duality: DualityReport,
    pub rates: Vec<PrototypeRates>,
    pub range_residuals: ResidualCurve,
}

/// Compares a recorded prototype trajectory (`(epoch, d × k)` snapshots,
/// first snapshot at epoch 0) against the predicted flow rates. The
/// partition used is the one induced by the first snapshot.
pub fn analyze_trajectory(
    x: &DataMatrix,
    kind: ModelKind,
    learning_rate: f64,
    snapshots: &[(usize, DMatrix<f64>)],
) -> Result<AnalysisReport> {
    let (_, first) = snapshots
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty trajectory".into()))?;
    if first.nrows() != x.d() {
        return Err(Error::DimensionMismatch {
            context: "trajectory feature dimension",
            expected: x.d(),
            actual: first.nrows(),
        });
    }
    let factors = svd(x)?;
    let assignment = loss::assign_matrix(x.as_matrix(), first)?;
    let centroids = voronoi_centroids(x.as_matrix(), &assignment);
    let present: Vec<DVector<f64>> = centroids.iter().flatten().cloned().collect();
    let duality = duality_checks(x, &present)?;

    let mut rates = Vec::new();
    if kind != ModelKind::DeepDcl {
        for (j, centroid) in centroids.iter().enumerate() {
            let Some(mu) = centroid else { continue };
            let time_map = TimeMap::new(learning_rate, x.n(), assignment.counts[j]);
            let samples: Vec<(f64, DVector<f64>)> = snapshots
                .iter()
                .map(|(e, p)| (time_map.time(*e as f64), p.column(j).into_owned()))
                .collect();
            let fits = fit_decay_rates(&samples, mu, &factors.u);
            let modes = fits
                .iter()
                .map(|f| {
                    let sigma = factors.singular_values.get(f.mode).copied().unwrap_or(0.0);
                    ModeComparison {
                        mode: f.mode,
                        singular_value: sigma,
                        predicted_rate: match kind {
                            ModelKind::Vcl => 1.0,
                            _ => sigma * sigma,
                        },
                        fitted_rate: f.slope.map(|s| -s),
                        initial_amplitude: f.initial_amplitude,
                    }
                })
                .collect();
            rates.push(PrototypeRates {
                prototype: j,
                voronoi_size: assignment.counts[j],
                modes,
            });
        }
    }

    let mut epochs = Vec::with_capacity(snapshots.len());
    let mut mean_residual = Vec::with_capacity(snapshots.len());
    for (e, p) in snapshots {
        let cols: Vec<DVector<f64>> = p.column_iter().map(|c| c.into_owned()).collect();
        let report = subspace_residuals_with(&cols, &factors, Subspace::RangeX)?;
        epochs.push(*e);
        mean_residual.push(report.residual_norms.iter().sum::<f64>() / cols.len() as f64);
    }
    let transient = transient_epoch(&epochs, &mean_residual);
    Ok(AnalysisReport {
        model_kind: kind,
        time_mapping: "t = 2 * learning_rate * voronoi_size * epoch / n".into(),
        learning_rate,
        singular_values: factors.singular_values.iter().copied().collect(),
        duality,
        rates,
        range_residuals: ResidualCurve {
            epochs,
            mean_residual,
            transient_epoch: transient,
        },
    })
}
