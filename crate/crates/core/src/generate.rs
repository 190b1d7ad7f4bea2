//! Seeded random instances for tests and benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matrix::SparseNonnegMatrix;

/// Random strongly connected matrix: a random Hamiltonian cycle plus every
/// other off-diagonal arc with probability `density`. Entries are
/// log-uniform in `[lo, hi]`.
///
/// Panics unless `n >= 2`, `0 < lo <= hi` and `density` is in `[0, 1]`.
pub fn strongly_connected(
    n: usize,
    density: f64,
    lo: f64,
    hi: f64,
    seed: u64,
) -> SparseNonnegMatrix {
    assert!(n >= 2, "need n >= 2");
    assert!(lo > 0.0 && lo <= hi, "need 0 < lo <= hi");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut present = vec![vec![false; n]; n];
    for k in 0..n {
        present[order[k]][order[(k + 1) % n]] = true;
    }
    for (i, row) in present.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            if i != j && rng.gen_bool(density) {
                *cell = true;
            }
        }
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    let mut triplets = Vec::new();
    for (i, row) in present.iter().enumerate() {
        for (j, &cell) in row.iter().enumerate() {
            if cell {
                triplets.push((i, j, rng.gen_range(llo..=lhi).exp()));
            }
        }
    }
    SparseNonnegMatrix::new(n, triplets).expect("generated entries are valid")
}

/// Chain `0 - 1 - ... - (n-1)` of 2-cycles whose weights shrink by `ratio`
/// per link, each link three times heavier forward than backward. Small
/// ratios make the strict schedule freeze one scale per phase.
pub fn multiscale_chain(n: usize, ratio: f64) -> SparseNonnegMatrix {
    let mut triplets = Vec::with_capacity(2 * n);
    for i in 0..n.saturating_sub(1) {
        let scale = ratio.powi(i as i32);
        triplets.push((i, i + 1, 3.0 * scale));
        triplets.push((i + 1, i, scale));
    }
    SparseNonnegMatrix::new(n, triplets).expect("chain entries are valid")
}
