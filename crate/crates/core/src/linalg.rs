//! Dense matrix foundations: SVD, pseudoinverse, Gram matrix and the two
//! forms of the Euclidean distance matrix.
//!
//! Data is feature-major throughout: a [`DataMatrix`] is `d × n` with one
//! observation per column. Prototypes are stored the same way, `d × k`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Feature-major data matrix (`d` features by `n` samples).
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::InvalidArgument(format!(
                "data matrix must be non-empty, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        check_finite(&values)?;
        Ok(Self { values })
    }

    /// Builds a data matrix from sample-major rows (one observation per row).
    pub fn from_samples(samples: &[Vec<f64>]) -> Result<Self> {
        let n = samples.len();
        let d = samples.first().map_or(0, Vec::len);
        if let Some(bad) = samples.iter().find(|s| s.len() != d) {
            return Err(Error::DimensionMismatch {
                context: "sample length",
                expected: d,
                actual: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(d, n, |f, i| samples[i][f]))
    }

    pub fn d(&self) -> usize {
        self.values.nrows()
    }

    pub fn n(&self) -> usize {
        self.values.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.values
    }

    /// Sample `i` as a column vector.
    pub fn sample(&self, i: usize) -> DVector<f64> {
        self.values.column(i).into_owned()
    }

    pub fn gram(&self) -> GramMatrix {
        GramMatrix {
            values: self.values.tr_mul(&self.values),
        }
    }
}

/// Prototype positions, one prototype per column (`d × k`).
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeSet {
    values: DMatrix<f64>,
}

impl PrototypeSet {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        check_finite(&values)?;
        Ok(Self { values })
    }

    pub(crate) fn from_matrix_unchecked(values: DMatrix<f64>) -> Self {
        Self { values }
    }

    pub fn d(&self) -> usize {
        self.values.nrows()
    }

    pub fn k(&self) -> usize {
        self.values.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.values
    }

    pub fn prototype(&self, j: usize) -> DVector<f64> {
        self.values.column(j).into_owned()
    }
}

/// Sample inner-product matrix `XᵀX`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    values: DMatrix<f64>,
}

impl GramMatrix {
    /// Wraps an existing square matrix. Symmetry is checked to 1e-10 relative.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != values.ncols() {
            return Err(Error::DimensionMismatch {
                context: "gram matrix columns",
                expected: values.nrows(),
                actual: values.ncols(),
            });
        }
        check_finite(&values)?;
        let scale = 1.0 + values.amax();
        if (&values - values.transpose()).amax() > 1e-10 * scale {
            return Err(Error::InvalidArgument("gram matrix is not symmetric".into()));
        }
        Ok(Self { values })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.values
    }
}

/// Full singular value decomposition `X = U Σ Vᵀ` with square orthogonal
/// factors.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    /// `d × d`, columns are the left singular vectors.
    pub u: DMatrix<f64>,
    /// `min(d, n)` values in nonincreasing order.
    pub singular_values: DVector<f64>,
    /// `n × n`, columns are the right singular vectors.
    pub v: DMatrix<f64>,
}

impl SvdFactors {
    /// Number of singular values above `tol · σ₁`.
    pub fn rank(&self, tol: f64) -> usize {
        let top = self.singular_values.get(0).copied().unwrap_or(0.0);
        self.singular_values
            .iter()
            .filter(|&&s| s > tol * top && s > 0.0)
            .count()
    }

    /// Reassembles `U Σ Vᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let (d, n) = (self.u.nrows(), self.v.nrows());
        let mut sigma = DMatrix::zeros(d, n);
        for (i, s) in self.singular_values.iter().enumerate() {
            sigma[(i, i)] = *s;
        }
        &self.u * sigma * self.v.transpose()
    }
}

/// Relative rank tolerance used for pseudoinverse truncation.
pub const RANK_TOLERANCE: f64 = 1e-12;

pub(crate) fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    // column-major iteration: index i maps to (i % rows, i / rows)
    match m.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite {
            row: i % m.nrows().max(1),
            col: i / m.nrows().max(1),
        }),
        None => Ok(()),
    }
}

/// Thin SVD sorted in descending order, with each pair `(uᵢ, vᵢ)` flipped so
/// the largest-magnitude entry of `uᵢ` is positive.
fn thin_svd(x: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let svd = nalgebra::SVD::new(x.clone(), true, true);
    let mut u = svd.u.expect("u requested");
    let mut v = svd.v_t.expect("v requested").transpose();
    for i in 0..u.ncols() {
        if leading_sign(u.column(i).iter()) < 0.0 {
            u.column_mut(i).neg_mut();
            v.column_mut(i).neg_mut();
        }
    }
    (u, svd.singular_values, v)
}

fn leading_sign<'a>(values: impl Iterator<Item = &'a f64>) -> f64 {
    let mut best = 0.0_f64;
    for &v in values {
        // strict comparison keeps the first index on ties
        if v.abs() > best.abs() {
            best = v;
        }
    }
    if best < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Extends an orthonormal column set to a full orthonormal basis of its
/// ambient space by Gram–Schmidt over the standard basis.
fn complete_basis(partial: &DMatrix<f64>) -> DMatrix<f64> {
    let dim = partial.nrows();
    let mut cols: Vec<DVector<f64>> = partial.column_iter().map(|c| c.into_owned()).collect();
    let mut candidate = 0;
    while cols.len() < dim && candidate < dim {
        let mut e = DVector::zeros(dim);
        e[candidate] = 1.0;
        candidate += 1;
        // two passes for numerical orthogonality
        for _ in 0..2 {
            for c in &cols {
                let proj = c.dot(&e);
                e.axpy(-proj, c, 1.0);
            }
        }
        let norm = e.norm();
        if norm > 1e-6 {
            e /= norm;
            if leading_sign(e.iter()) < 0.0 {
                e.neg_mut();
            }
            cols.push(e);
        }
    }
    DMatrix::from_columns(&cols)
}

/// Full SVD with square `U` (`d × d`) and `V` (`n × n`).
pub fn svd(x: &DataMatrix) -> Result<SvdFactors> {
    svd_matrix(x.as_matrix())
}

pub(crate) fn svd_matrix(x: &DMatrix<f64>) -> Result<SvdFactors> {
    check_finite(x)?;
    let (u, s, v) = thin_svd(x);
    Ok(SvdFactors {
        u: complete_basis(&u),
        singular_values: s,
        v: complete_basis(&v),
    })
}

/// Singular values only, descending. Cheaper than [`svd`] for tall data.
pub fn singular_values(x: &DataMatrix) -> DVector<f64> {
    nalgebra::SVD::new(x.as_matrix().clone(), false, false).singular_values
}

/// Moore–Penrose pseudoinverse (`n × d`), truncating singular values below
/// [`RANK_TOLERANCE`]` · σ₁`.
pub fn pseudoinverse(x: &DataMatrix) -> Result<DMatrix<f64>> {
    pseudoinverse_matrix(x.as_matrix())
}

pub(crate) fn pseudoinverse_matrix(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_finite(x)?;
    let (u, s, v) = thin_svd(x);
    let top = s.get(0).copied().unwrap_or(0.0);
    let tau = RANK_TOLERANCE * top;
    let mut out = DMatrix::zeros(x.ncols(), x.nrows());
    for (i, &sigma) in s.iter().enumerate() {
        if sigma > tau && sigma > 0.0 {
            out += (v.column(i) / sigma) * u.column(i).transpose();
        }
    }
    Ok(out)
}

/// Squared distances between every sample and every prototype (`n × k`).
pub fn edm(x: &DataMatrix, p: &PrototypeSet) -> Result<DMatrix<f64>> {
    if p.d() != x.d() {
        return Err(Error::DimensionMismatch {
            context: "edm feature dimension",
            expected: x.d(),
            actual: p.d(),
        });
    }
    Ok(edm_unchecked(x.as_matrix(), p.as_matrix()))
}

pub(crate) fn edm_unchecked(x: &DMatrix<f64>, p: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, k) = (x.ncols(), p.ncols());
    let mut out = DMatrix::zeros(n, k);
    for j in 0..k {
        let pj = p.column(j);
        for i in 0..n {
            let xi = x.column(i);
            out[(i, j)] = xi.iter().zip(pj.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
        }
    }
    out
}

/// Distance matrix written as a quadratic function of dual weights `Ω`
/// (`k × n`) and the Gram matrix `G`:
/// `1ₙ diag(Ω G Ωᵀ)ᵀ − 2 G Ωᵀ + diag(G) 1ₖᵀ`.
pub fn edm_gram(g: &GramMatrix, omega: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = g.n();
    if omega.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "edm_gram weight columns",
            expected: n,
            actual: omega.ncols(),
        });
    }
    let gm = g.as_matrix();
    let g_omega_t = gm * omega.transpose(); // n × k
    let k = omega.nrows();
    // diag(Ω G Ωᵀ)_j = Ω_j · (G Ω_jᵀ)
    let proto_norms: Vec<f64> = (0..k)
        .map(|j| omega.row(j).transpose().dot(&g_omega_t.column(j)))
        .collect();
    Ok(DMatrix::from_fn(n, k, |i, j| {
        (proto_norms[j] - 2.0 * g_omega_t[(i, j)] + gm[(i, i)]).max(0.0)
    }))
}
