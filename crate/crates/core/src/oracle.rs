//! Brute-force minimizer of `f` for small instances.
//!
//! Test support, not a production solver. It shares no state or norm code
//! with the balancing runs: every coordinate update re-sums the affected row
//! and column from `(a_ij, x)`, and convergence is judged on a fully
//! recomputed gradient after each sweep.

use crate::error::{BalanceError, Result};
use crate::matrix::SparseNonnegMatrix;
use crate::model::ScalingVector;

/// Coordinate steps after which the oracle gives up.
pub const ORACLE_MAX_STEPS: u64 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    /// Minimizer, shifted so its first coordinate is 0.
    pub x: ScalingVector,
    pub f: f64,
    pub gradient_norm: f64,
    pub steps: u64,
}

fn sums_at(a: &SparseNonnegMatrix, x: &[f64], i: usize) -> (f64, f64) {
    let mut out = 0.0;
    let mut inn = 0.0;
    for arc in a.arcs() {
        if arc.row == i {
            out += arc.value * (x[i] - x[arc.col]).exp();
        } else if arc.col == i {
            inn += arc.value * (x[arc.row] - x[i]).exp();
        }
    }
    (out, inn)
}

fn objective_and_gradient(a: &SparseNonnegMatrix, x: &[f64]) -> (f64, f64) {
    let mut grad = vec![0.0; a.n()];
    let mut f = 0.0;
    for arc in a.arcs() {
        let b = arc.value * (x[arc.row] - x[arc.col]).exp();
        f += b;
        grad[arc.row] += b;
        grad[arc.col] -= b;
    }
    (f, grad.iter().map(|g| g.abs()).sum())
}

fn reaches_all(a: &SparseNonnegMatrix, forward: bool) -> bool {
    let n = a.n();
    let mut seen = vec![false; n];
    let mut queue = vec![0];
    seen[0] = true;
    while let Some(v) = queue.pop() {
        for arc in a.arcs() {
            let (from, to) = if forward {
                (arc.row, arc.col)
            } else {
                (arc.col, arc.row)
            };
            if from == v && !seen[to] {
                seen[to] = true;
                queue.push(to);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Minimizes `f` from `x = 0` until `||grad f||_1 <= tolerance * f`.
pub fn brute_minimize(a: &SparseNonnegMatrix, tolerance: f64) -> Result<OracleSolution> {
    brute_minimize_from(a, &ScalingVector::zeros(a.n()), tolerance)
}

/// As [`brute_minimize`], starting from `start`.
pub fn brute_minimize_from(
    a: &SparseNonnegMatrix,
    start: &ScalingVector,
    tolerance: f64,
) -> Result<OracleSolution> {
    let n = a.n();
    if start.len() != n {
        return Err(BalanceError::DimensionMismatch {
            expected: n,
            got: start.len(),
        });
    }
    if !(reaches_all(a, true) && reaches_all(a, false)) {
        return Err(BalanceError::NotStronglyConnected { components: 0 });
    }
    let mut x = start.as_slice().to_vec();
    let mut steps = 0u64;
    loop {
        let (f, grad) = objective_and_gradient(a, &x);
        if !f.is_finite() {
            return Err(BalanceError::Overflow);
        }
        if grad <= tolerance * f || n == 1 {
            let base = x[0];
            let x: Vec<f64> = x.iter().map(|v| v - base).collect();
            let (f, gradient_norm) = objective_and_gradient(a, &x);
            return Ok(OracleSolution {
                x: ScalingVector::from(x),
                f,
                gradient_norm,
                steps,
            });
        }
        if steps >= ORACLE_MAX_STEPS {
            return Err(BalanceError::OracleDiverged { steps });
        }
        for i in 0..n {
            // exact minimizer of f along coordinate i
            let (out, inn) = sums_at(a, &x, i);
            x[i] += 0.5 * (inn / out).ln();
            steps += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_closed_form() {
        let a = SparseNonnegMatrix::from_dense(&[vec![0.0, 4.0], vec![1.0, 0.0]]).unwrap();
        let sol = brute_minimize(&a, 1e-12).unwrap();
        assert!((sol.f - 4.0).abs() < 1e-12);
        // shift-normalized: x = (0, ln 2), i.e. (-ln 2, 0) up to a shift
        assert!((sol.x.get(1) - sol.x.get(0) - 2f64.ln()).abs() < 1e-12);
        assert_eq!(sol.x.get(0), 0.0);
    }

    #[test]
    fn three_cycle_geometric_mean() {
        let a = SparseNonnegMatrix::new(3, [(0, 1, 1.0), (1, 2, 2.0), (2, 0, 4.0)]).unwrap();
        let sol = brute_minimize(&a, 1e-12).unwrap();
        assert!((sol.f - 6.0).abs() < 1e-10);
        assert!(sol.gradient_norm <= 1e-12 * sol.f);
        let x = sol.x.as_slice();
        for arc in a.arcs() {
            assert!((arc.value * (x[arc.row] - x[arc.col]).exp() - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn balanced_input_is_fixed() {
        let a = SparseNonnegMatrix::from_dense(&[vec![0.0, 3.0], vec![3.0, 0.0]]).unwrap();
        let sol = brute_minimize(&a, 1e-12).unwrap();
        assert_eq!(sol.steps, 0);
        assert_eq!(sol.x.as_slice(), &[0.0, 0.0]);
        assert_eq!(sol.f, 6.0);
    }

    #[test]
    fn rejects_reducible() {
        let a = SparseNonnegMatrix::new(2, [(0, 1, 1.0)]).unwrap();
        assert!(brute_minimize(&a, 1e-12).is_err());
    }
}
