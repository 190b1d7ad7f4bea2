//! Reduction of a raw real matrix to a nonnegative, zero-diagonal L1 instance,
//! and strongly connected component decomposition.
//!
//! Balancing `A` in the L_p norm is the same problem as balancing
//! `(|a_ij|^p)` in the L1 norm: if `x` balances the powered matrix, the
//! L_p scaling of `A` is `x / p`. Signs and the diagonal play no role.

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::error::{BalanceError, Result};
use crate::matrix::{Arc, SparseNonnegMatrix};
use crate::model::ScalingVector;

/// A square real matrix in coordinate form (duplicates already combined).
#[derive(Debug, Clone, PartialEq)]
pub struct RawMatrix {
    pub n: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl RawMatrix {
    pub fn new(n: usize, entries: Vec<(usize, usize, f64)>) -> Self {
        Self { n, entries }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(BalanceError::NotSquare {
                    row: i,
                    len: row.len(),
                    n,
                });
            }
            entries.extend(
                row.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, &v)| (i, j, v)),
            );
        }
        Ok(Self { n, entries })
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n]; self.n];
        for &(i, j, v) in &self.entries {
            dense[i][j] += v;
        }
        dense
    }
}

/// What canonicalization did to the raw input.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Provenance {
    pub diagonal_dropped: usize,
    pub negatives_flipped: usize,
    pub zeros_skipped: usize,
}

/// The L1 instance equivalent to balancing the raw matrix in L_p.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalInstance {
    pub matrix: SparseNonnegMatrix,
    pub provenance: Provenance,
    pub p: f64,
}

impl CanonicalInstance {
    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    /// True when there are no off-diagonal entries: every index is
    /// vacuously balanced.
    pub fn is_trivial(&self) -> bool {
        self.matrix.nnz() == 0
    }

    pub fn min_entry(&self) -> f64 {
        self.matrix.min_entry()
    }

    pub fn total(&self) -> f64 {
        self.matrix.total()
    }

    pub fn dynamic_range(&self) -> f64 {
        self.matrix.dynamic_range()
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(BalanceError::InvalidExponent(p))
    }
}

/// Strips signs and the diagonal and raises every entry to the power `p >= 1`.
pub fn canonicalize(raw: &RawMatrix, p: f64) -> Result<CanonicalInstance> {
    check_exponent(p)?;
    if raw.n == 0 {
        return Err(BalanceError::EmptyDimension);
    }
    let mut provenance = Provenance::default();
    let mut triplets = Vec::with_capacity(raw.entries.len());
    for &(i, j, v) in &raw.entries {
        if i >= raw.n || j >= raw.n {
            return Err(BalanceError::IndexOutOfRange {
                row: i,
                col: j,
                n: raw.n,
            });
        }
        if !v.is_finite() {
            return Err(BalanceError::NonFiniteEntry { row: i, col: j });
        }
        if i == j {
            provenance.diagonal_dropped += 1;
            continue;
        }
        if v == 0.0 {
            provenance.zeros_skipped += 1;
            continue;
        }
        if v < 0.0 {
            provenance.negatives_flipped += 1;
        }
        let powered = if p == 1.0 { v.abs() } else { v.abs().powf(p) };
        if !(powered.is_finite() && powered > 0.0) {
            return Err(BalanceError::Overflow);
        }
        triplets.push((i, j, powered));
    }
    Ok(CanonicalInstance {
        matrix: SparseNonnegMatrix::new(raw.n, triplets)?,
        provenance,
        p,
    })
}

/// L_p scaling from the scaling of the canonical L1 instance: `x / p`.
pub fn uncanonicalize_scaling(x: &ScalingVector, p: f64) -> Result<ScalingVector> {
    if !(p.is_finite() && p > 0.0) {
        return Err(BalanceError::InvalidExponent(p));
    }
    Ok(x.scaled(1.0 / p))
}

/// Tolerance for the canonical L1 run that delivers `epsilon` in L_p:
/// `(1 + epsilon)^p - 1`.
pub fn canonical_epsilon(epsilon: f64, p: f64) -> f64 {
    (1.0 + epsilon).powf(p) - 1.0
}

/// One strongly connected component with its induced submatrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    /// Global indices, ascending; local index `k` is `nodes[k]`.
    pub nodes: Vec<usize>,
    pub matrix: SparseNonnegMatrix,
}

impl Component {
    pub fn is_singleton(&self) -> bool {
        self.nodes.len() == 1
    }
}

/// Strongly connected components in topological order (every cross arc goes
/// from a lower to a higher component id).
#[derive(Debug, Clone, PartialEq)]
pub struct SccDecomposition {
    pub component_of: Vec<usize>,
    pub components: Vec<Component>,
    pub cross_arcs: Vec<Arc>,
}

impl SccDecomposition {
    pub fn is_strongly_connected(&self) -> bool {
        self.components.len() == 1
    }

    /// Whether global index `i` has an arc leaving or entering its component.
    pub fn touches_cross_arc(&self, i: usize) -> bool {
        self.cross_arcs.iter().any(|a| a.row == i || a.col == i)
    }
}

/// Strongly connected components, ascending node lists, in topological order.
fn components_of(matrix: &SparseNonnegMatrix) -> Vec<Vec<usize>> {
    let mut graph = DiGraph::<(), ()>::with_capacity(matrix.n(), matrix.nnz());
    for _ in 0..matrix.n() {
        graph.add_node(());
    }
    for arc in matrix.arcs() {
        graph.add_edge(NodeIndex::new(arc.row), NodeIndex::new(arc.col), ());
    }
    // tarjan_scc lists sink components first
    tarjan_scc(&graph)
        .into_iter()
        .rev()
        .map(|comp| {
            let mut nodes: Vec<usize> = comp.into_iter().map(NodeIndex::index).collect();
            nodes.sort_unstable();
            nodes
        })
        .collect()
}

pub fn scc_decompose(matrix: &SparseNonnegMatrix) -> SccDecomposition {
    let groups = components_of(matrix);
    let mut component_of = vec![0; matrix.n()];
    for (id, nodes) in groups.iter().enumerate() {
        for &v in nodes {
            component_of[v] = id;
        }
    }
    let components = groups
        .into_iter()
        .map(|nodes| {
            let matrix = matrix
                .induced(&nodes)
                .expect("induced submatrix of a valid matrix is valid");
            Component { nodes, matrix }
        })
        .collect();
    let cross_arcs = matrix
        .arcs()
        .iter()
        .filter(|a| component_of[a.row] != component_of[a.col])
        .copied()
        .collect();
    SccDecomposition {
        component_of,
        components,
        cross_arcs,
    }
}

pub(crate) fn require_strongly_connected(matrix: &SparseNonnegMatrix) -> Result<()> {
    let count = components_of(matrix).len();
    if count == 1 {
        Ok(())
    } else {
        Err(BalanceError::NotStronglyConnected { components: count })
    }
}
