//! Competitive layers and the deep dual stack.
//!
//! A [`VclLayer`] stores prototypes directly as weight rows and has no forward
//! pass. A [`DclLayer`] is a dense layer applied to the transposed data: its
//! `k × n` weights mix samples, and its outputs are the prototypes.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DataMatrix, PrototypeSet};

/// Zero-mean normal draw with variance `2 / (rows + cols)`, filled row by row.
pub fn glorot_init(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let std = (2.0 / (rows + cols) as f64).sqrt();
    let normal = Normal::new(0.0, std).expect("positive std");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = (0..rows * cols).map(|_| normal.sample(&mut rng)).collect();
    DMatrix::from_row_slice(rows, cols, &values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VclLayer {
    /// `k × d`; row `j` is prototype `j`.
    pub weights: DMatrix<f64>,
}

impl VclLayer {
    pub fn new(weights: DMatrix<f64>) -> Result<Self> {
        if weights.nrows() == 0 {
            return Err(Error::InvalidArgument("VCL needs at least one prototype".into()));
        }
        crate::linalg::check_finite(&weights)?;
        Ok(Self { weights })
    }

    pub fn glorot(k: usize, d: usize, seed: u64) -> Self {
        Self {
            weights: glorot_init(k, d, seed),
        }
    }

    pub fn k(&self) -> usize {
        self.weights.nrows()
    }

    pub fn d(&self) -> usize {
        self.weights.ncols()
    }

    pub fn param_count(&self) -> usize {
        self.weights.len()
    }
}

/// Prototypes of a vanilla layer: the transposed weight matrix.
pub fn vcl_prototypes(layer: &VclLayer) -> PrototypeSet {
    PrototypeSet::from_matrix_unchecked(layer.weights.transpose())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DclLayer {
    /// `k × n`; row `j` holds the sample mixing weights `Ωⱼ` of output `j`.
    pub weights: DMatrix<f64>,
    /// Optional per-output bias added to every feature of prototype `j`.
    pub bias: Option<DVector<f64>>,
}

impl DclLayer {
    pub fn new(weights: DMatrix<f64>, bias: Option<DVector<f64>>) -> Result<Self> {
        crate::linalg::check_finite(&weights)?;
        if let Some(b) = &bias {
            if b.len() != weights.nrows() {
                return Err(Error::DimensionMismatch {
                    context: "dcl bias length",
                    expected: weights.nrows(),
                    actual: b.len(),
                });
            }
        }
        Ok(Self { weights, bias })
    }

    pub fn glorot(k: usize, n: usize, seed: u64, with_bias: bool) -> Self {
        Self {
            weights: glorot_init(k, n, seed),
            bias: with_bias.then(|| DVector::zeros(k)),
        }
    }

    pub fn k(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n(&self) -> usize {
        self.weights.ncols()
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.as_ref().map_or(0, |b| b.len())
    }
}

/// `P = (W₂ Xᵀ)ᵀ = X W₂ᵀ`, plus the bias broadcast over features when enabled.
pub fn dcl_forward(layer: &DclLayer, x: &DataMatrix) -> Result<PrototypeSet> {
    dcl_forward_matrix(layer, x.as_matrix()).map(PrototypeSet::from_matrix_unchecked)
}

pub(crate) fn dcl_forward_matrix(layer: &DclLayer, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.ncols() != layer.n() {
        return Err(Error::DimensionMismatch {
            context: "dual layer sample count",
            expected: layer.n(),
            actual: x.ncols(),
        });
    }
    let mut p = x * layer.weights.transpose();
    if let Some(b) = &layer.bias {
        for (j, mut col) in p.column_iter_mut().enumerate() {
            col.add_scalar_mut(b[j]);
        }
    }
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, m: &mut DMatrix<f64>) {
        if self == Activation::Tanh {
            m.apply(|v| *v = v.tanh());
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `out × in`.
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn input_width(&self) -> usize {
        self.weights.ncols()
    }

    pub fn output_width(&self) -> usize {
        self.weights.nrows()
    }
}

/// Dense encoder feeding a dual head on the encoded, transposed features.
#[derive(Debug, Clone, PartialEq)]
pub struct DeepDcl {
    pub encoder: Vec<DenseLayer>,
    pub head: DclLayer,
}

/// Intermediate values kept for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `inputs[l]` is the input of encoder layer `l`; the last entry is the
    /// encoded feature matrix.
    pub inputs: Vec<DMatrix<f64>>,
}

impl ForwardCache {
    pub fn features(&self) -> &DMatrix<f64> {
        self.inputs.last().expect("cache holds at least the input")
    }
}

impl DeepDcl {
    /// Builds an encoder with the given widths (tanh on every layer but the
    /// last, which is linear) and zero biases.
    pub fn glorot(d: usize, n: usize, k: usize, widths: &[usize], seed: u64, head_bias: bool) -> Self {
        let mut encoder = Vec::with_capacity(widths.len());
        let mut fan_in = d;
        for (l, &w) in widths.iter().enumerate() {
            let activation = if l + 1 == widths.len() {
                Activation::Identity
            } else {
                Activation::Tanh
            };
            encoder.push(DenseLayer {
                weights: glorot_init(w, fan_in, seed.wrapping_add(1 + l as u64)),
                bias: DVector::zeros(w),
                activation,
            });
            fan_in = w;
        }
        Self {
            encoder,
            head: DclLayer::glorot(k, n, seed, head_bias),
        }
    }

    pub fn input_width(&self) -> Option<usize> {
        self.encoder.first().map(DenseLayer::input_width)
    }

    pub fn param_count(&self) -> usize {
        self.encoder
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum::<usize>()
            + self.head.param_count()
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        let mut width = d;
        for layer in &self.encoder {
            if layer.input_width() != width {
                return Err(Error::DimensionMismatch {
                    context: "encoder layer input width",
                    expected: width,
                    actual: layer.input_width(),
                });
            }
            if layer.bias.len() != layer.output_width() {
                return Err(Error::DimensionMismatch {
                    context: "encoder bias length",
                    expected: layer.output_width(),
                    actual: layer.bias.len(),
                });
            }
            width = layer.output_width();
        }
        if width == 0 {
            return Err(Error::InvalidArgument("encoded width must be positive".into()));
        }
        Ok(())
    }

    pub fn forward_cached(&self, x: &DMatrix<f64>) -> Result<ForwardCache> {
        self.validate(x.nrows())?;
        let mut inputs = Vec::with_capacity(self.encoder.len() + 1);
        inputs.push(x.clone());
        for layer in &self.encoder {
            let prev = inputs.last().expect("non-empty");
            let mut h = &layer.weights * prev;
            for mut col in h.column_iter_mut() {
                col += &layer.bias;
            }
            layer.activation.apply(&mut h);
            inputs.push(h);
        }
        Ok(ForwardCache { inputs })
    }
}

/// Encoded features (`d₁ × n`) and the prototypes the dual head produces from
/// them (`d₁ × k`).
pub fn deep_forward(model: &DeepDcl, x: &DataMatrix) -> Result<(DMatrix<f64>, PrototypeSet)> {
    let cache = model.forward_cached(x.as_matrix())?;
    let p = dcl_forward_matrix(&model.head, cache.features())?;
    let features = cache.inputs.into_iter().last().expect("non-empty");
    Ok((features, PrototypeSet::from_matrix_unchecked(p)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Vcl,
    Dcl,
    DeepDcl,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Vcl => "vcl",
            ModelKind::Dcl => "dcl",
            ModelKind::DeepDcl => "deep_dcl",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Vcl(VclLayer),
    Dcl(DclLayer),
    DeepDcl(DeepDcl),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Vcl(_) => ModelKind::Vcl,
            Model::Dcl(_) => ModelKind::Dcl,
            Model::DeepDcl(_) => ModelKind::DeepDcl,
        }
    }

    pub fn k(&self) -> usize {
        match self {
            Model::Vcl(l) => l.k(),
            Model::Dcl(l) => l.k(),
            Model::DeepDcl(m) => m.head.k(),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Model::Vcl(l) => l.param_count(),
            Model::Dcl(l) => l.param_count(),
            Model::DeepDcl(m) => m.param_count(),
        }
    }

    /// Data as seen by the competitive layer (the encoded features for the
    /// deep model) together with the current prototypes.
    pub fn embed(&self, x: &DataMatrix) -> Result<(DMatrix<f64>, PrototypeSet)> {
        match self {
            Model::Vcl(l) => {
                if l.d() != x.d() {
                    return Err(Error::DimensionMismatch {
                        context: "vcl feature dimension",
                        expected: l.d(),
                        actual: x.d(),
                    });
                }
                Ok((x.as_matrix().clone(), vcl_prototypes(l)))
            }
            Model::Dcl(l) => Ok((x.as_matrix().clone(), dcl_forward(l, x)?)),
            Model::DeepDcl(m) => deep_forward(m, x),
        }
    }
}

// ---------------------------------------------------------------------------
// JSON documents

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix_from_rows(rows: &[Vec<f64>], context: &'static str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|row| row.len() != c) {
        return Err(Error::DimensionMismatch {
            context,
            expected: c,
            actual: bad.len(),
        });
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DenseDocument {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    activation: Activation,
}

/// Serialized model: weights as nested row arrays plus metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub kind: ModelKind,
    pub d: usize,
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub weights: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    encoder: Vec<DenseDocument>,
}

impl ModelDocument {
    pub fn from_model(model: &Model, d: usize, n: usize, seed: u64) -> Self {
        let (weights, bias, encoder) = match model {
            Model::Vcl(l) => (rows_of(&l.weights), None, Vec::new()),
            Model::Dcl(l) => (
                rows_of(&l.weights),
                l.bias.as_ref().map(|b| b.iter().copied().collect()),
                Vec::new(),
            ),
            Model::DeepDcl(m) => (
                rows_of(&m.head.weights),
                m.head.bias.as_ref().map(|b| b.iter().copied().collect()),
                m.encoder
                    .iter()
                    .map(|l| DenseDocument {
                        weights: rows_of(&l.weights),
                        bias: l.bias.iter().copied().collect(),
                        activation: l.activation,
                    })
                    .collect(),
            ),
        };
        Self {
            kind: model.kind(),
            d,
            n,
            k: model.k(),
            seed,
            weights,
            bias,
            encoder,
        }
    }

    pub fn to_model(&self) -> Result<Model> {
        let weights = matrix_from_rows(&self.weights, "model weight rows")?;
        let bias = self.bias.as_ref().map(|b| DVector::from_column_slice(b));
        let model = match self.kind {
            ModelKind::Vcl => Model::Vcl(VclLayer::new(weights)?),
            ModelKind::Dcl => Model::Dcl(DclLayer::new(weights, bias)?),
            ModelKind::DeepDcl => {
                let encoder = self
                    .encoder
                    .iter()
                    .map(|l| {
                        Ok(DenseLayer {
                            weights: matrix_from_rows(&l.weights, "encoder weight rows")?,
                            bias: DVector::from_column_slice(&l.bias),
                            activation: l.activation,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let m = DeepDcl {
                    encoder,
                    head: DclLayer::new(weights, bias)?,
                };
                m.validate(self.d)?;
                Model::DeepDcl(m)
            }
        };
        if model.k() != self.k {
            return Err(Error::DimensionMismatch {
                context: "model prototype count",
                expected: self.k,
                actual: model.k(),
            });
        }
        Ok(model)
    }
}
