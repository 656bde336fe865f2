//! Seeded generators for the synthetic benchmarks, feature standardization and
//! CSV ingest/export.
//!
//! CSV files are sample-major: one row per observation, one column per
//! feature, with an optional trailing `label` column named in the header.

use std::f64::consts::PI;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DataMatrix;

/// Default isotropic noise for the two-dimensional generators.
pub const DEFAULT_NOISE: f64 = 0.05;
/// Spiral arc `θ ∈ [0.5π, 3.5π]`, radius `r = θ`.
pub const SPIRAL_ARC: (f64, f64) = (0.5 * PI, 3.5 * PI);
/// Hypercube half-side for the MADELON-style vertices.
pub const MADELON_VERTEX_SCALE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DataMatrix,
    pub labels: Option<Vec<usize>>,
    pub name: String,
    pub seed: u64,
    /// Non-fatal issues raised while building or transforming the data.
    pub warnings: Vec<String>,
}

impl Dataset {
    pub fn new(x: DataMatrix, labels: Option<Vec<usize>>, name: impl Into<String>, seed: u64) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != x.n() {
                return Err(Error::DimensionMismatch {
                    context: "label count",
                    expected: x.n(),
                    actual: l.len(),
                });
            }
        }
        Ok(Self {
            x,
            labels,
            name: name.into(),
            seed,
            warnings: Vec::new(),
        })
    }

    pub fn n_classes(&self) -> usize {
        self.labels.as_ref().and_then(|l| l.iter().max()).map_or(0, |m| m + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    Spiral,
    Moons,
    Circles,
    Madelon,
}

impl GeneratorKind {
    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::Spiral => "spiral",
            GeneratorKind::Moons => "moons",
            GeneratorKind::Circles => "circles",
            GeneratorKind::Madelon => "madelon",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub n_samples: usize,
    pub n_features: usize,
    pub noise: f64,
    pub n_clusters: usize,
    pub seed: u64,
}

impl GeneratorSpec {
    /// Two-dimensional spec with the standard cluster count for `kind`.
    pub fn planar(kind: GeneratorKind, n_samples: usize, seed: u64) -> Self {
        let n_clusters = match kind {
            GeneratorKind::Spiral => 1,
            _ => 2,
        };
        Self {
            kind,
            n_samples,
            n_features: 2,
            noise: DEFAULT_NOISE,
            n_clusters,
            seed,
        }
    }

    pub fn madelon(n_samples: usize, n_features: usize, n_clusters: usize, seed: u64) -> Self {
        Self {
            kind: GeneratorKind::Madelon,
            n_samples,
            n_features,
            noise: 1.0,
            n_clusters,
            seed,
        }
    }

    pub fn generate(&self) -> Result<Dataset> {
        if self.kind != GeneratorKind::Madelon && self.n_features != 2 {
            return Err(Error::InvalidArgument(format!(
                "{} data is two-dimensional, got {} features",
                self.kind.name(),
                self.n_features
            )));
        }
        match self.kind {
            GeneratorKind::Spiral => gen_spiral(self.n_samples, self.noise, self.seed),
            GeneratorKind::Moons => gen_moons(self.n_samples, self.noise, self.seed),
            GeneratorKind::Circles => gen_circles(self.n_samples, self.noise, self.seed),
            GeneratorKind::Madelon => {
                gen_madelon_with_std(self.n_samples, self.n_features, self.n_clusters, self.noise, self.seed)
            }
        }
    }
}

fn check_planar_args(n: usize, noise: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise must be a nonnegative real, got {noise}"
        )));
    }
    Ok(())
}

fn noise_source(noise: f64) -> Normal<f64> {
    Normal::new(0.0, noise).expect("noise validated as nonnegative")
}

fn planar(points: Vec<[f64; 2]>, labels: Vec<usize>, name: &str, seed: u64) -> Result<Dataset> {
    let n = points.len();
    let x = DataMatrix::new(DMatrix::from_fn(2, n, |f, i| points[i][f]))?;
    Dataset::new(x, Some(labels), name, seed)
}

/// Archimedean spiral `r = θ` over [`SPIRAL_ARC`], one cluster.
pub fn gen_spiral(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    check_planar_args(n, noise)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = noise_source(noise);
    let points = (0..n)
        .map(|_| {
            let theta = rng.random_range(SPIRAL_ARC.0..=SPIRAL_ARC.1);
            [
                theta * theta.cos() + jitter.sample(&mut rng),
                theta * theta.sin() + jitter.sample(&mut rng),
            ]
        })
        .collect();
    planar(points, vec![0; n], "spiral", seed)
}

fn class_sizes(n: usize) -> (usize, usize) {
    (n.div_ceil(2), n / 2)
}

fn linspace(count: usize, end: f64, inclusive: bool) -> impl Iterator<Item = f64> {
    let steps = if inclusive {
        count.saturating_sub(1).max(1)
    } else {
        count.max(1)
    };
    (0..count).map(move |i| end * i as f64 / steps as f64)
}

/// Two interleaving half circles, labels 0 (upper) and 1 (lower).
pub fn gen_moons(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    check_planar_args(n, noise)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = noise_source(noise);
    let (upper, lower) = class_sizes(n);
    let mut points = Vec::with_capacity(n);
    for t in linspace(upper, PI, true) {
        points.push([t.cos(), t.sin()]);
    }
    for t in linspace(lower, PI, true) {
        points.push([1.0 - t.cos(), 0.5 - t.sin()]);
    }
    for p in &mut points {
        p[0] += jitter.sample(&mut rng);
        p[1] += jitter.sample(&mut rng);
    }
    let labels = (0..n).map(|i| usize::from(i >= upper)).collect();
    planar(points, labels, "moons", seed)
}

/// Two concentric circles of radius 1 (label 0) and 0.5 (label 1).
pub fn gen_circles(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    check_planar_args(n, noise)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = noise_source(noise);
    let (outer, inner) = class_sizes(n);
    let mut points = Vec::with_capacity(n);
    for t in linspace(outer, 2.0 * PI, false) {
        points.push([t.cos(), t.sin()]);
    }
    for t in linspace(inner, 2.0 * PI, false) {
        points.push([0.5 * t.cos(), 0.5 * t.sin()]);
    }
    for p in &mut points {
        p[0] += jitter.sample(&mut rng);
        p[1] += jitter.sample(&mut rng);
    }
    let labels = (0..n).map(|i| usize::from(i >= outer)).collect();
    planar(points, labels, "circles", seed)
}

/// Gaussian blobs (unit std) around distinct hypercube vertices, clusters
/// alternating between two classes.
pub fn gen_madelon(n_samples: usize, n_features: usize, n_clusters: usize, seed: u64) -> Result<Dataset> {
    gen_madelon_with_std(n_samples, n_features, n_clusters, 1.0, seed)
}

pub fn gen_madelon_with_std(
    n_samples: usize,
    n_features: usize,
    n_clusters: usize,
    cluster_std: f64,
    seed: u64,
) -> Result<Dataset> {
    if n_samples == 0 || n_features == 0 {
        return Err(Error::InvalidArgument(
            "sample and feature counts must be positive".into(),
        ));
    }
    if n_clusters == 0 || !n_clusters.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "cluster count must be a positive even number, got {n_clusters}"
        )));
    }
    let free_bits = n_features.min(20);
    if n_clusters > 1usize << free_bits {
        return Err(Error::InvalidArgument(format!(
            "{n_clusters} clusters exceed the {} available hypercube vertices",
            1usize << free_bits
        )));
    }
    if !(cluster_std >= 0.0 && cluster_std.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "cluster std must be nonnegative, got {cluster_std}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Distinct codes on the first `free_bits` coordinates guarantee distinct
    // vertices; the remaining coordinates are free random signs.
    let codes = index::sample(&mut rng, 1usize << free_bits, n_clusters).into_vec();
    let vertices: Vec<Vec<f64>> = codes
        .iter()
        .map(|&code| {
            (0..n_features)
                .map(|f| {
                    let positive = if f < free_bits {
                        (code >> f) & 1 == 1
                    } else {
                        rng.random_bool(0.5)
                    };
                    if positive {
                        MADELON_VERTEX_SCALE
                    } else {
                        -MADELON_VERTEX_SCALE
                    }
                })
                .collect()
        })
        .collect();

    let base = n_samples / n_clusters;
    let extra = n_samples % n_clusters;
    let blob = Normal::new(0.0, cluster_std).expect("std validated");
    let mut x = DMatrix::zeros(n_features, n_samples);
    let mut labels = Vec::with_capacity(n_samples);
    let mut col = 0;
    for (c, vertex) in vertices.iter().enumerate() {
        let size = base + usize::from(c < extra);
        for _ in 0..size {
            for (f, v) in vertex.iter().enumerate() {
                x[(f, col)] = v + blob.sample(&mut rng);
            }
            labels.push(c % 2);
            col += 1;
        }
    }
    Dataset::new(DataMatrix::new(x)?, Some(labels), "madelon", seed)
}

/// Standardizes every feature row to zero mean and unit population variance.
/// Constant features become all zeros and are reported in `warnings`.
pub fn normalize(ds: &Dataset) -> Result<Dataset> {
    let mut x = ds.x.as_matrix().clone();
    let n = x.ncols() as f64;
    let mut warnings = ds.warnings.clone();
    for f in 0..x.nrows() {
        let mut row = x.row_mut(f);
        let mean = row.iter().sum::<f64>() / n;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        if var <= f64::EPSILON * f64::EPSILON * (1.0 + mean * mean) {
            row.fill(0.0);
            let msg = format!("feature {f} has zero variance; set to zero");
            log::warn!("{}: {msg}", ds.name);
            warnings.push(msg);
        } else {
            let std = var.sqrt();
            row.apply(|v| *v = (*v - mean) / std);
        }
    }
    Ok(Dataset {
        x: DataMatrix::new(x)?,
        labels: ds.labels.clone(),
        name: ds.name.clone(),
        seed: ds.seed,
        warnings,
    })
}

pub const LABEL_COLUMN: &str = "label";

/// Writes the dataset sample-major with 17 significant digits per value.
pub fn save_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::io::BufWriter::new(File::create(path.as_ref())?);
    let d = ds.x.d();
    let mut header: Vec<String> = (0..d).map(|f| format!("f{f}")).collect();
    if ds.labels.is_some() {
        header.push(LABEL_COLUMN.to_string());
    }
    writeln!(out, "{}", header.join(","))?;
    let m = ds.x.as_matrix();
    for i in 0..ds.x.n() {
        let mut fields: Vec<String> = (0..d).map(|f| format!("{:.16e}", m[(f, i)])).collect();
        if let Some(labels) = &ds.labels {
            fields.push(labels[i].to_string());
        }
        writeln!(out, "{}", fields.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let csv_err = |row: usize, col: usize, message: String| Error::Csv {
        path: path.to_path_buf(),
        row,
        col,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_err(0, 0, e.to_string()))?;
    let header = reader.headers().map_err(|e| csv_err(0, 0, e.to_string()))?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::NoRows {
            path: path.to_path_buf(),
        });
    }
    let has_label = header.iter().next_back() == Some(LABEL_COLUMN);
    let width = header.len();
    let d = if has_label { width - 1 } else { width };
    if d == 0 {
        return Err(csv_err(0, 0, "no feature columns".into()));
    }

    let mut samples = Vec::new();
    let mut labels = Vec::new();
    for (r, record) in reader.records().enumerate() {
        // row numbers are 1-based data rows, header is row 0
        let row = r + 1;
        let record = record.map_err(|e| csv_err(row, 0, e.to_string()))?;
        if record.len() != width {
            return Err(csv_err(
                row,
                record.len().min(width),
                format!("expected {width} fields, found {}", record.len()),
            ));
        }
        let mut sample = Vec::with_capacity(d);
        for (c, cell) in record.iter().take(d).enumerate() {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| csv_err(row, c, format!("not a number: {cell:?}")))?;
            if !v.is_finite() {
                return Err(csv_err(row, c, format!("non-finite value: {cell:?}")));
            }
            sample.push(v);
        }
        if has_label {
            let cell = &record[d];
            labels.push(
                cell.trim()
                    .parse::<usize>()
                    .map_err(|_| csv_err(row, d, format!("invalid label: {cell:?}")))?,
            );
        }
        samples.push(sample);
    }
    if samples.is_empty() {
        return Err(Error::NoRows {
            path: path.to_path_buf(),
        });
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Dataset::new(
        DataMatrix::from_samples(&samples)?,
        has_label.then_some(labels),
        name,
        0,
    )
}
