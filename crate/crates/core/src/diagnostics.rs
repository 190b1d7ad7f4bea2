//! Imbalance metrics, similarity checks and the closed-form bounds that
//! balancing runs are checked against.

use crate::error::{BalanceError, Result};
use crate::matrix::SparseNonnegMatrix;
use crate::model::{scaled_norms, ScalingVector};

/// Largest dimension accepted by the dense similarity check.
pub const DENSE_MAX_N: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct ImbalanceReport {
    /// `max(r_i, c_i) / min(r_i, c_i) - 1` per index.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// `sqrt(sum (c_i - r_i)^2) / f`.
    pub weak: f64,
    /// `||grad f||_1 / f`.
    pub gradient_relative: f64,
    /// Largest `r_i + c_i`.
    pub max_weight: f64,
}

impl ImbalanceReport {
    /// Every index satisfies `max/min <= 1 + epsilon`.
    pub fn is_strictly_balanced(&self, epsilon: f64) -> bool {
        self.max_ratio <= epsilon
    }
}

/// Per-index imbalance of `D A D^-1` from freshly summed norms.
pub fn strict_imbalance(a: &SparseNonnegMatrix, x: &ScalingVector) -> Result<ImbalanceReport> {
    let (row, col) = scaled_norms(a, x)?;
    let mut ratios = Vec::with_capacity(a.n());
    for (i, (&r, &c)) in row.iter().zip(&col).enumerate() {
        if r <= 0.0 || c <= 0.0 {
            return Err(BalanceError::ZeroNorm { index: i });
        }
        ratios.push(r.max(c) / r.min(c) - 1.0);
    }
    let total: f64 = row.iter().sum();
    let weak = row
        .iter()
        .zip(&col)
        .map(|(r, c)| (c - r) * (c - r))
        .sum::<f64>()
        .sqrt()
        / total;
    let gradient_relative = row
        .iter()
        .zip(&col)
        .map(|(r, c)| (r - c).abs())
        .sum::<f64>()
        / total;
    let max_weight = row.iter().zip(&col).map(|(r, c)| r + c).fold(0.0, f64::max);
    Ok(ImbalanceReport {
        max_ratio: ratios.iter().copied().fold(0.0, f64::max),
        ratios,
        weak,
        gradient_relative,
        max_weight,
    })
}

/// Whether `ratio` (as reported, `max/min - 1`) meets `epsilon` up to
/// `slack` of arithmetic noise.
pub fn within_epsilon(ratio: f64, epsilon: f64, slack: f64) -> bool {
    ratio <= epsilon + slack
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

fn traces_of_powers(a: &[Vec<f64>], k_max: usize) -> Vec<f64> {
    let mut power = a.to_vec();
    let mut traces = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        if k > 1 {
            power = mat_mul(&power, a);
        }
        traces.push((0..a.len()).map(|i| power[i][i]).sum());
    }
    traces
}

/// `tr(B^k) - tr(A^k)` for `k = 1..=k_max`, where `B = D A D^-1`, paired with
/// `tr(A^k)`. Similar matrices share all traces of powers.
pub fn similarity_invariants(
    raw: &[Vec<f64>],
    x: &ScalingVector,
    k_max: usize,
) -> Result<Vec<(f64, f64)>> {
    let n = raw.len();
    if n > DENSE_MAX_N {
        return Err(BalanceError::TooLargeForDense {
            n,
            max: DENSE_MAX_N,
        });
    }
    if x.len() != n {
        return Err(BalanceError::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    let xs = x.as_slice();
    let scaled: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| raw[i][j] * (xs[i] - xs[j]).exp()).collect())
        .collect();
    let base = traces_of_powers(raw, k_max);
    let after = traces_of_powers(&scaled, k_max);
    Ok(after.iter().zip(&base).map(|(b, a)| (b - a, *a)).collect())
}

/// Tolerance used for trace comparisons: `1e-8 |tr(A^k)| + 1e-10`.
pub fn similarity_tolerance(trace: f64) -> f64 {
    1e-8 * trace.abs() + 1e-10
}

/// Product of scaled weights along a directed cycle divided by the product of
/// the original weights. The scaling factors telescope, so this is 1.
///
/// `cycle` lists the nodes in order; the closing arc back to `cycle[0]` is implied.
pub fn cycle_product_check(
    a: &SparseNonnegMatrix,
    x: &ScalingVector,
    cycle: &[usize],
) -> Result<f64> {
    if cycle.len() < 2 {
        return Err(BalanceError::NotACycle(cycle.to_vec()));
    }
    let xs = x.as_slice();
    let mut ratio = 1.0;
    for k in 0..cycle.len() {
        let (i, j) = (cycle[k], cycle[(k + 1) % cycle.len()]);
        let id = a
            .find_arc(i, j)
            .ok_or_else(|| BalanceError::NotACycle(cycle.to_vec()))?;
        let value = a.arc(id).value;
        let scaled = value * (xs[i] - xs[j]).exp();
        ratio *= scaled / value;
    }
    Ok(ratio)
}

/// Worst-case step count `eps^-2 n^9 ln(w n / eps) ln(w) / ln(n)` with unit constant.
pub fn worst_case_step_bound(n: usize, w: f64, epsilon: f64) -> f64 {
    let nf = n as f64;
    let log_n = nf.ln().max(f64::MIN_POSITIVE);
    epsilon.powi(-2) * nf.powi(9) * (w * nf / epsilon).ln() * w.ln() / log_n
}

/// Upper bound on the number of phases, `log(n w^n) / log(4 n^2) + 2`,
/// evaluated in log space.
pub fn phase_count_bound(n: usize, w: f64) -> f64 {
    let nf = n as f64;
    (nf.ln() + nf * w.ln()) / (4.0 * nf * nf).ln() + 2.0
}

/// Interval every scaled arc weight stays in under any sequence of balancing
/// steps: `[(a_min / S)^n S, S]`.
pub fn weight_envelope(a: &SparseNonnegMatrix) -> (f64, f64) {
    let s = a.total();
    let n = a.n() as f64;
    let lower = (n * (a.min_entry() / s).ln() + s.ln()).exp();
    (lower, s)
}

/// Drop that the greedy choice is guaranteed to achieve inside a phase:
/// `||grad||_1^2 / (16 n f)`.
pub fn progress_lower_bound(grad_norm: f64, f: f64, n: usize) -> f64 {
    if f <= 0.0 {
        return 0.0;
    }
    grad_norm * grad_norm / (16.0 * n as f64 * f)
}

/// Bound on how far `f` is above its minimum given the current gradient:
/// `(n / 2) ||grad||_1`.
pub fn optimality_gap_bound(grad_norm: f64, n: usize) -> f64 {
    0.5 * n as f64 * grad_norm
}

/// Weight above which an index is guaranteed epsilon-balanced once the
/// relative gradient at the regime start was at most `eps'`:
/// `f_start / (8 n^3)`.
pub fn heavy_weight_threshold(f_start: f64, n: usize) -> f64 {
    f_start / (8.0 * (n as f64).powi(3))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> SparseNonnegMatrix {
        SparseNonnegMatrix::from_dense(&[vec![0.0, 4.0], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn imbalance_examples() {
        let r = strict_imbalance(&two_by_two(), &ScalingVector::zeros(2)).unwrap();
        assert_eq!(r.ratios, vec![3.0, 3.0]);
        assert_eq!(r.max_ratio, 3.0);
        assert!(!r.is_strictly_balanced(0.5));
        assert_eq!(r.gradient_relative, 6.0 / 5.0);
        assert!((r.weak - (18f64).sqrt() / 5.0).abs() < 1e-15);

        let bal = SparseNonnegMatrix::from_dense(&[vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
        let r = strict_imbalance(&bal, &ScalingVector::zeros(2)).unwrap();
        assert_eq!(r.ratios, vec![0.0, 0.0]);
        assert!(r.is_strictly_balanced(0.0));
    }

    #[test]
    fn imbalance_zero_norm_names_index() {
        let a = SparseNonnegMatrix::new(3, [(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0)]).unwrap();
        assert_eq!(
            strict_imbalance(&a, &ScalingVector::zeros(3)),
            Err(BalanceError::ZeroNorm { index: 2 })
        );
    }

    #[test]
    fn similarity_identity_scaling() {
        let dense = two_by_two().to_dense();
        let diffs = similarity_invariants(&dense, &ScalingVector::zeros(2), 2).unwrap();
        assert!(diffs.iter().all(|(d, _)| *d == 0.0));
        assert_eq!(diffs[1].1, 8.0);
    }

    #[test]
    fn similarity_three_cycle() {
        let a = SparseNonnegMatrix::new(3, [(0, 1, 1.0), (1, 2, 2.0), (2, 0, 4.0)]).unwrap();
        let x = ScalingVector::from(vec![0.4, -1.3, 2.2]);
        let diffs = similarity_invariants(&a.to_dense(), &x, 3).unwrap();
        assert_eq!(diffs[2].1, 24.0);
        assert!(diffs[2].0.abs() <= similarity_tolerance(24.0));
    }

    #[test]
    fn similarity_rejects_large() {
        let big = vec![vec![0.0; 65]; 65];
        assert!(matches!(
            similarity_invariants(&big, &ScalingVector::zeros(65), 1),
            Err(BalanceError::TooLargeForDense { .. })
        ));
    }

    #[test]
    fn cycle_product_examples() {
        let a = two_by_two();
        let x = ScalingVector::from(vec![1.7, -0.4]);
        assert!((cycle_product_check(&a, &x, &[0, 1]).unwrap() - 1.0).abs() < 1e-14);
        assert!(matches!(
            cycle_product_check(&a, &x, &[0]),
            Err(BalanceError::NotACycle(_))
        ));
        let path = SparseNonnegMatrix::new(3, [(0, 1, 1.0), (1, 2, 1.0), (2, 1, 1.0)]).unwrap();
        assert!(cycle_product_check(&path, &ScalingVector::zeros(3), &[0, 1, 2]).is_err());
    }

    #[test]
    fn bound_helpers() {
        assert_eq!(progress_lower_bound(4.0, 2.0, 2), 0.25);
        assert_eq!(optimality_gap_bound(2.0, 4), 4.0);
        assert_eq!(heavy_weight_threshold(64.0, 2), 1.0);
        let (lo, hi) = weight_envelope(&two_by_two());
        assert_eq!(hi, 5.0);
        assert!((lo - 0.2f64.powi(2) * 5.0).abs() < 1e-14);
        // n = 2, w = 5: ln(2 * 25) / ln(16) + 2
        assert!((phase_count_bound(2, 5.0) - (50f64.ln() / 16f64.ln() + 2.0)).abs() < 1e-12);
        assert!(worst_case_step_bound(2, 5.0, 0.1) > 0.0);
    }
}
