//! The objective `f(x) = sum a_ij e^(x_i - x_j)`, its gradient, the contracted
//! objective over a frozen set, and the incrementally maintained scaled weights.

use crate::error::{BalanceError, Result};
use crate::matrix::SparseNonnegMatrix;

/// Log-domain scaling exponents; the similarity is `D = diag(e^x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingVector(Vec<f64>);

impl ScalingVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub(crate) fn add(&mut self, i: usize, delta: f64) {
        self.0[i] += delta;
    }

    /// Shifted so the first coordinate is zero; `f` is invariant under the shift.
    pub fn normalized(&self) -> Self {
        let base = self.0.first().copied().unwrap_or(0.0);
        Self(self.0.iter().map(|v| v - base).collect())
    }

    /// `x / p`, elementwise.
    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|v| v * factor).collect())
    }
}

impl From<Vec<f64>> for ScalingVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Membership mask for a set of indices.
pub fn index_mask(n: usize, members: &[usize]) -> Vec<bool> {
    let mut mask = vec![false; n];
    for &i in members {
        mask[i] = true;
    }
    mask
}

fn check_dims(a: &SparseNonnegMatrix, x: &ScalingVector) -> Result<()> {
    if a.n() != x.len() {
        return Err(BalanceError::DimensionMismatch {
            expected: a.n(),
            got: x.len(),
        });
    }
    Ok(())
}

#[inline]
fn scaled_entry(value: f64, xi: f64, xj: f64) -> Result<f64> {
    let b = value * (xi - xj).exp();
    if b.is_finite() && b > 0.0 {
        Ok(b)
    } else {
        Err(BalanceError::Overflow)
    }
}

/// `f(x)` by fresh summation over every arc.
pub fn f_value(a: &SparseNonnegMatrix, x: &ScalingVector) -> Result<f64> {
    check_dims(a, x)?;
    let xs = x.as_slice();
    let mut sum = 0.0;
    for arc in a.arcs() {
        sum += scaled_entry(arc.value, xs[arc.row], xs[arc.col])?;
    }
    if sum.is_finite() {
        Ok(sum)
    } else {
        Err(BalanceError::Overflow)
    }
}

/// Row and column sums of the scaled matrix, computed from scratch.
pub fn scaled_norms(a: &SparseNonnegMatrix, x: &ScalingVector) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dims(a, x)?;
    let xs = x.as_slice();
    let mut row = vec![0.0; a.n()];
    let mut col = vec![0.0; a.n()];
    for arc in a.arcs() {
        let b = scaled_entry(arc.value, xs[arc.row], xs[arc.col])?;
        row[arc.row] += b;
        col[arc.col] += b;
    }
    Ok((row, col))
}

/// `grad_i = r_i - c_i`: scaled out-weight minus in-weight of node `i`.
pub fn gradient(a: &SparseNonnegMatrix, x: &ScalingVector) -> Result<Vec<f64>> {
    let (row, col) = scaled_norms(a, x)?;
    Ok(row.iter().zip(&col).map(|(r, c)| r - c).collect())
}

/// Sum of scaled weights over arcs with at least one endpoint outside `frozen`.
pub fn contracted_f(a: &SparseNonnegMatrix, x: &ScalingVector, frozen: &[bool]) -> Result<f64> {
    check_dims(a, x)?;
    let xs = x.as_slice();
    let mut sum = 0.0;
    for arc in a.arcs() {
        if !(frozen[arc.row] && frozen[arc.col]) {
            sum += scaled_entry(arc.value, xs[arc.row], xs[arc.col])?;
        }
    }
    Ok(sum)
}

/// L1 norm of the gradient of the contracted objective.
///
/// The contracted graph has one node per active index plus, when `frozen`
/// is nonempty, a super-node standing for the whole frozen set. Arcs inside
/// the frozen set vanish; the super-node's imbalance is taken over the arcs
/// that cross between the frozen set and the active indices.
pub fn contracted_gradient_norm(
    a: &SparseNonnegMatrix,
    x: &ScalingVector,
    frozen: &[bool],
) -> Result<f64> {
    check_dims(a, x)?;
    if frozen.iter().all(|&b| b) {
        return Err(BalanceError::FullContraction);
    }
    let xs = x.as_slice();
    let mut imbalance = vec![0.0; a.n()];
    let mut super_node = 0.0;
    for arc in a.arcs() {
        let (from, to) = (frozen[arc.row], frozen[arc.col]);
        if from && to {
            continue;
        }
        let b = scaled_entry(arc.value, xs[arc.row], xs[arc.col])?;
        imbalance[arc.row] += b;
        imbalance[arc.col] -= b;
        if from {
            super_node += b;
        }
        if to {
            super_node -= b;
        }
    }
    let active: f64 = (0..a.n())
        .filter(|&i| !frozen[i])
        .map(|i| imbalance[i].abs())
        .sum();
    Ok(active + super_node.abs())
}

/// Scaled arc weights with row sums, column sums and the total `f`, kept
/// current under single-index shifts of `x`.
///
/// Per-arc weights are always recomputed from `(a_ij, x)` when touched, so
/// they carry no drift. Row/column sums and the total are updated by
/// differences and are refreshed from the arc weights when the accumulated
/// rounding bound exceeds `DRIFT_LIMIT * total` or after `n^2` shifts.
#[derive(Debug, Clone)]
pub struct ScaledWeights {
    arc_weight: Vec<f64>,
    row: Vec<f64>,
    col: Vec<f64>,
    total: f64,
    drift: f64,
    shifts_since_refresh: u64,
    refresh_period: u64,
}

/// Relative drift bound that triggers a refresh.
pub const DRIFT_LIMIT: f64 = 1e-10;

/// Before/after sums at the shifted index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftOutcome {
    pub row_before: f64,
    pub col_before: f64,
    pub row_after: f64,
    pub col_after: f64,
}

impl ScaledWeights {
    pub fn new(a: &SparseNonnegMatrix, x: &ScalingVector) -> Result<Self> {
        check_dims(a, x)?;
        let n = a.n() as u64;
        let mut weights = Self {
            arc_weight: vec![0.0; a.nnz()],
            row: vec![0.0; a.n()],
            col: vec![0.0; a.n()],
            total: 0.0,
            drift: 0.0,
            shifts_since_refresh: 0,
            refresh_period: (n * n).max(1),
        };
        weights.refresh(a, x)?;
        Ok(weights)
    }

    /// Recomputes every arc weight and every sum from `(a, x)`.
    pub fn refresh(&mut self, a: &SparseNonnegMatrix, x: &ScalingVector) -> Result<()> {
        let xs = x.as_slice();
        self.row.iter_mut().for_each(|v| *v = 0.0);
        self.col.iter_mut().for_each(|v| *v = 0.0);
        for (id, arc) in a.arcs().iter().enumerate() {
            let b = scaled_entry(arc.value, xs[arc.row], xs[arc.col])?;
            self.arc_weight[id] = b;
            self.row[arc.row] += b;
            self.col[arc.col] += b;
        }
        self.total = self.row.iter().sum();
        self.drift = 0.0;
        self.shifts_since_refresh = 0;
        Ok(())
    }

    pub fn needs_refresh(&self) -> bool {
        self.shifts_since_refresh >= self.refresh_period || self.drift > DRIFT_LIMIT * self.total
    }

    pub fn arc_weight(&self, id: usize) -> f64 {
        self.arc_weight[id]
    }

    pub fn arc_weights(&self) -> &[f64] {
        &self.arc_weight
    }

    /// `r_i`, the scaled out-weight of `i`.
    pub fn row(&self, i: usize) -> f64 {
        self.row[i]
    }

    /// `c_i`, the scaled in-weight of `i`.
    pub fn col(&self, i: usize) -> f64 {
        self.col[i]
    }

    pub fn rows(&self) -> &[f64] {
        &self.row
    }

    pub fn cols(&self) -> &[f64] {
        &self.col
    }

    /// `r_i + c_i`.
    pub fn weight(&self, i: usize) -> f64 {
        self.row[i] + self.col[i]
    }

    /// `r_i - c_i`, the gradient component at `i`.
    pub fn imbalance(&self, i: usize) -> f64 {
        self.row[i] - self.col[i]
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// Out- and in-sums of `i` taken directly from its arc weights.
    pub fn exact_sums(&self, a: &SparseNonnegMatrix, i: usize) -> (f64, f64) {
        let r = a.out_arcs(i).map(|id| self.arc_weight[id]).sum();
        let c = a.in_arcs(i).iter().map(|&id| self.arc_weight[id]).sum();
        (r, c)
    }

    /// Adds `delta` to `x_i` and updates every arc incident to `i`.
    pub(crate) fn shift(
        &mut self,
        a: &SparseNonnegMatrix,
        x: &mut ScalingVector,
        i: usize,
        delta: f64,
    ) -> Result<ShiftOutcome> {
        let (row_before, col_before) = self.exact_sums(a, i);
        x.add(i, delta);
        let xs = x.as_slice();
        let eps = f64::EPSILON;

        let mut row_after = 0.0;
        for id in a.out_arcs(i) {
            let arc = a.arc(id);
            let new = scaled_entry(arc.value, xs[i], xs[arc.col])?;
            let old = std::mem::replace(&mut self.arc_weight[id], new);
            self.col[arc.col] += new - old;
            self.drift += (self.col[arc.col].abs() + old + new) * eps;
            row_after += new;
        }
        let mut col_after = 0.0;
        for &id in a.in_arcs(i) {
            let arc = a.arc(id);
            let new = scaled_entry(arc.value, xs[arc.row], xs[i])?;
            let old = std::mem::replace(&mut self.arc_weight[id], new);
            self.row[arc.row] += new - old;
            self.drift += (self.row[arc.row].abs() + old + new) * eps;
            col_after += new;
        }
        self.row[i] = row_after;
        self.col[i] = col_after;
        self.total += (row_after + col_after) - (row_before + col_before);
        self.drift += (self.total + row_before + col_before) * eps;
        self.shifts_since_refresh += 1;
        if !self.total.is_finite() {
            return Err(BalanceError::Overflow);
        }
        Ok(ShiftOutcome {
            row_before,
            col_before,
            row_after,
            col_after,
        })
    }
}
