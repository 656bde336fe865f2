//! Voronoi assignment, Competitive Hebbian edges and the prototype loss
//! `L = Q + λ‖E‖` with closed-form gradients for every layer type.
//!
//! `Q` is the mean squared distance from each sample to its first winner.
//! Every sample links its first and second winner; edge `(a, b)` carries the
//! co-winner count times the squared distance `‖p_a − p_b‖²`, so the edge
//! penalty is differentiable in the prototypes. Winners are treated as
//! constants when differentiating.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::layers::{Activation, DclLayer, DeepDcl, VclLayer};
use crate::linalg::{edm_unchecked, DataMatrix, PrototypeSet};

/// Default edge-penalty multiplier.
pub const DEFAULT_LAMBDA: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoronoiAssignment {
    pub winner1: Vec<usize>,
    pub winner2: Vec<usize>,
    /// Voronoi set cardinality per prototype.
    pub counts: Vec<usize>,
}

impl VoronoiAssignment {
    /// Builds an assignment from explicit winners, e.g. to freeze a partition.
    pub fn from_winners(winner1: Vec<usize>, winner2: Vec<usize>, k: usize) -> Result<Self> {
        if winner1.len() != winner2.len() {
            return Err(Error::DimensionMismatch {
                context: "second winner count",
                expected: winner1.len(),
                actual: winner2.len(),
            });
        }
        let mut counts = vec![0; k];
        for (&a, &b) in winner1.iter().zip(&winner2) {
            if a >= k || b >= k || a == b {
                return Err(Error::InvalidArgument(format!(
                    "invalid winner pair ({a}, {b}) for {k} prototypes"
                )));
            }
            counts[a] += 1;
        }
        Ok(Self {
            winner1,
            winner2,
            counts,
        })
    }

    pub fn n(&self) -> usize {
        self.winner1.len()
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    /// Sample indices whose first winner is `j`.
    pub fn members(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        self.winner1
            .iter()
            .enumerate()
            .filter(move |(_, &w)| w == j)
            .map(|(i, _)| i)
    }
}

/// First and second nearest prototype for every sample; ties go to the lower
/// prototype index.
pub fn assign(x: &DataMatrix, p: &PrototypeSet) -> Result<VoronoiAssignment> {
    if p.d() != x.d() {
        return Err(Error::DimensionMismatch {
            context: "assignment feature dimension",
            expected: x.d(),
            actual: p.d(),
        });
    }
    assign_matrix(x.as_matrix(), p.as_matrix())
}

pub(crate) fn assign_matrix(x: &DMatrix<f64>, p: &DMatrix<f64>) -> Result<VoronoiAssignment> {
    let k = p.ncols();
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "competitive Hebbian edges need at least two prototypes, got {k}"
        )));
    }
    let dist = edm_unchecked(x, p);
    let n = x.ncols();
    let mut winner1 = Vec::with_capacity(n);
    let mut winner2 = Vec::with_capacity(n);
    let mut counts = vec![0; k];
    for i in 0..n {
        let (mut best, mut second) = (usize::MAX, usize::MAX);
        let (mut best_d, mut second_d) = (f64::INFINITY, f64::INFINITY);
        for j in 0..k {
            let dj = dist[(i, j)];
            if best == usize::MAX || dj < best_d {
                second = best;
                second_d = best_d;
                best = j;
                best_d = dj;
            } else if second == usize::MAX || dj < second_d {
                second = j;
                second_d = dj;
            }
        }
        counts[best] += 1;
        winner1.push(best);
        winner2.push(second);
    }
    Ok(VoronoiAssignment {
        winner1,
        winner2,
        counts,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMatrix {
    /// Weighted symmetric adjacency, zero diagonal.
    pub values: DMatrix<f64>,
    /// Co-winner counts per unordered prototype pair, stored symmetrically.
    pub occupancy: DMatrix<usize>,
}

impl EdgeMatrix {
    pub fn k(&self) -> usize {
        self.values.nrows()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.norm()
    }

    /// Prototypes without any edge.
    pub fn lonely(&self) -> Vec<usize> {
        (0..self.k())
            .filter(|&j| self.occupancy.row(j).iter().all(|&c| c == 0))
            .collect()
    }

    /// Connected components of the occupancy graph, ignoring lonely
    /// prototypes. Each component is a sorted list of prototype indices.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let k = self.k();
        let mut parent: Vec<usize> = (0..k).collect();
        fn find(parent: &mut [usize], mut a: usize) -> usize {
            while parent[a] != a {
                parent[a] = parent[parent[a]];
                a = parent[a];
            }
            a
        }
        for a in 0..k {
            for b in (a + 1)..k {
                if self.occupancy[(a, b)] > 0 {
                    let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                    if ra != rb {
                        parent[ra.max(rb)] = ra.min(rb);
                    }
                }
            }
        }
        let lonely = self.lonely();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut root_slot = vec![usize::MAX; k];
        for j in (0..k).filter(|j| !lonely.contains(j)) {
            let r = find(&mut parent, j);
            if root_slot[r] == usize::MAX {
                root_slot[r] = groups.len();
                groups.push(Vec::new());
            }
            groups[root_slot[r]].push(j);
        }
        groups
    }
}

/// Links first and second winners of every sample.
pub fn chl_edges(assignment: &VoronoiAssignment, p: &PrototypeSet) -> EdgeMatrix {
    chl_edges_matrix(assignment, p.as_matrix())
}

pub(crate) fn chl_edges_matrix(assignment: &VoronoiAssignment, p: &DMatrix<f64>) -> EdgeMatrix {
    let k = p.ncols();
    let mut occupancy = DMatrix::<usize>::zeros(k, k);
    for (&a, &b) in assignment.winner1.iter().zip(&assignment.winner2) {
        occupancy[(a, b)] += 1;
        occupancy[(b, a)] += 1;
    }
    let mut values = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in (a + 1)..k {
            let c = occupancy[(a, b)];
            if c > 0 {
                let w = c as f64 * (p.column(a) - p.column(b)).norm_squared();
                values[(a, b)] = w;
                values[(b, a)] = w;
            }
        }
    }
    EdgeMatrix { values, occupancy }
}

/// Mean squared distance of each sample to its first winner.
pub fn quantization(x: &DataMatrix, p: &PrototypeSet, assignment: &VoronoiAssignment) -> f64 {
    quantization_matrix(x.as_matrix(), p.as_matrix(), assignment)
}

pub(crate) fn quantization_matrix(x: &DMatrix<f64>, p: &DMatrix<f64>, assignment: &VoronoiAssignment) -> f64 {
    let n = x.ncols();
    let total: f64 = assignment
        .winner1
        .iter()
        .enumerate()
        .map(|(i, &j)| (x.column(i) - p.column(j)).norm_squared())
        .sum();
    total / n as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub quantization: f64,
    pub edge_norm: f64,
    pub lambda: f64,
    pub total: f64,
}

impl LossBreakdown {
    fn new(quantization: f64, edge_norm: f64, lambda: f64) -> Self {
        Self {
            quantization,
            edge_norm,
            lambda,
            total: quantization + lambda * edge_norm,
        }
    }
}

/// Assigns, builds edges and evaluates the loss at the current prototypes.
pub fn total_loss(x: &DataMatrix, p: &PrototypeSet, lambda: f64) -> Result<LossBreakdown> {
    let a = assign(x, p)?;
    Ok(frozen_loss(x.as_matrix(), p.as_matrix(), &a, lambda))
}

/// Loss with the winners held fixed at `assignment`.
pub fn frozen_loss(x: &DMatrix<f64>, p: &DMatrix<f64>, assignment: &VoronoiAssignment, lambda: f64) -> LossBreakdown {
    let q = quantization_matrix(x, p, assignment);
    let e = chl_edges_matrix(assignment, p);
    LossBreakdown::new(q, e.frobenius_norm(), lambda)
}

/// `∂L/∂P` (`d × k`) with frozen winners. Prototypes with an empty Voronoi
/// set get no quantization pull.
pub fn prototype_gradient(
    x: &DMatrix<f64>,
    p: &DMatrix<f64>,
    assignment: &VoronoiAssignment,
    lambda: f64,
) -> DMatrix<f64> {
    let n = x.ncols() as f64;
    let mut grad = DMatrix::zeros(p.nrows(), p.ncols());
    for (i, &j) in assignment.winner1.iter().enumerate() {
        let mut g = grad.column_mut(j);
        g += p.column(j) - x.column(i);
    }
    grad *= 2.0 / n;

    if lambda != 0.0 {
        let edges = chl_edges_matrix(assignment, p);
        let norm = edges.frobenius_norm();
        if norm > 0.0 {
            // ‖E‖² = 2 Σ_{a<b} c² D², so ∂‖E‖/∂p_a = 4/‖E‖ Σ_b c² D_ab (p_a − p_b)
            let k = p.ncols();
            for a in 0..k {
                for b in (a + 1)..k {
                    let c = edges.occupancy[(a, b)] as f64;
                    if c == 0.0 {
                        continue;
                    }
                    let diff = p.column(a) - p.column(b);
                    let dab = diff.norm_squared();
                    let scale = lambda * 4.0 * c * c * dab / norm;
                    grad.column_mut(a).axpy(scale, &diff, 1.0);
                    grad.column_mut(b).axpy(-scale, &diff, 1.0);
                }
            }
        }
    }
    grad
}

/// Gradient with respect to the VCL weights (`k × d`).
pub fn grad_vcl(x: &DataMatrix, layer: &VclLayer, assignment: &VoronoiAssignment, lambda: f64) -> DMatrix<f64> {
    let p = layer.weights.transpose();
    prototype_gradient(x.as_matrix(), &p, assignment, lambda).transpose()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DclGradient {
    /// `k × n`.
    pub weights: DMatrix<f64>,
    pub bias: Option<DVector<f64>>,
}

fn dcl_gradient_from(g_p: &DMatrix<f64>, input: &DMatrix<f64>, layer: &DclLayer) -> DclGradient {
    DclGradient {
        // P = F W₂ᵀ ⇒ ∂L/∂W₂ = (∂L/∂P)ᵀ F
        weights: g_p.tr_mul(input),
        bias: layer
            .bias
            .as_ref()
            .map(|_| DVector::from_iterator(g_p.ncols(), g_p.column_iter().map(|c| c.sum()))),
    }
}

/// Gradient with respect to the DCL weights, by the chain rule through
/// `P = X W₂ᵀ`.
pub fn grad_dcl(x: &DataMatrix, layer: &DclLayer, assignment: &VoronoiAssignment, lambda: f64) -> Result<DclGradient> {
    let p = crate::layers::dcl_forward_matrix(layer, x.as_matrix())?;
    let g_p = prototype_gradient(x.as_matrix(), &p, assignment, lambda);
    Ok(dcl_gradient_from(&g_p, x.as_matrix(), layer))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGradient {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeepGradient {
    pub encoder: Vec<DenseGradient>,
    pub head: DclGradient,
}

/// Reverse-mode gradient through the dual head and the encoder. Both the
/// encoded samples and the prototypes depend on the encoder, so the feature
/// adjoint collects the direct quantization term and the head's pullback.
pub fn grad_deep(model: &DeepDcl, x: &DataMatrix, assignment: &VoronoiAssignment, lambda: f64) -> Result<DeepGradient> {
    let cache = model.forward_cached(x.as_matrix())?;
    let features = cache.features();
    let p = crate::layers::dcl_forward_matrix(&model.head, features)?;
    let g_p = prototype_gradient(features, &p, assignment, lambda);
    let head = dcl_gradient_from(&g_p, features, &model.head);
    if model.encoder.is_empty() {
        return Ok(DeepGradient {
            encoder: Vec::new(),
            head,
        });
    }

    let n = features.ncols() as f64;
    let mut adjoint = &g_p * &model.head.weights; // through P = F W₂ᵀ
    for (i, &j) in assignment.winner1.iter().enumerate() {
        let mut col = adjoint.column_mut(i);
        col.axpy(2.0 / n, &(features.column(i) - p.column(j)), 1.0);
    }

    let mut encoder = Vec::with_capacity(model.encoder.len());
    for (l, layer) in model.encoder.iter().enumerate().rev() {
        let output = &cache.inputs[l + 1];
        let input = &cache.inputs[l];
        let delta = match layer.activation {
            Activation::Identity => adjoint,
            Activation::Tanh => adjoint.zip_map(output, |g, h| g * (1.0 - h * h)),
        };
        let bias = DVector::from_iterator(delta.nrows(), delta.row_iter().map(|r| r.sum()));
        let weights = &delta * input.transpose();
        adjoint = layer.weights.tr_mul(&delta);
        encoder.push(DenseGradient { weights, bias });
    }
    encoder.reverse();
    Ok(DeepGradient { encoder, head })
}

/// Number of prototypes with a non-empty Voronoi set.
pub fn valid_prototypes(assignment: &VoronoiAssignment) -> usize {
    assignment.counts.iter().filter(|&&c| c > 0).count()
}

/// Removes prototypes that have no edge.
pub fn prune_lonely(p: &PrototypeSet, edges: &EdgeMatrix) -> PrototypeSet {
    let lonely = edges.lonely();
    let keep: Vec<usize> = (0..p.k()).filter(|j| !lonely.contains(j)).collect();
    PrototypeSet::from_matrix_unchecked(p.as_matrix().select_columns(keep.iter()))
}
