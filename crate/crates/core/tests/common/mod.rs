#![allow(dead_code)]

use osborne::generate::strongly_connected;
use osborne::SparseNonnegMatrix;

/// One entry of the random test corpus.
pub struct CorpusCase {
    pub seed: u64,
    pub n: usize,
    pub epsilon: f64,
    pub matrix: SparseNonnegMatrix,
}

/// 100 instances: 25 per `n` in {4, 8, 16, 32}, epsilon alternating between
/// 0.1 and 0.01, density 0.3, entries log-uniform in `[1, 1e3]`.
pub fn corpus() -> Vec<CorpusCase> {
    let mut cases = Vec::new();
    for (block, &n) in [4usize, 8, 16, 32].iter().enumerate() {
        for k in 0..25u64 {
            let seed = 1000 * (block as u64 + 1) + k;
            let epsilon = if k % 2 == 0 { 0.1 } else { 0.01 };
            cases.push(CorpusCase {
                seed,
                n,
                epsilon,
                matrix: strongly_connected(n, 0.3, 1.0, 1e3, seed),
            });
        }
    }
    cases
}

/// Heavy 2-cycle {0, 1}; node 2 hangs off node 0 with weight 0.02 above the
/// phase-2 threshold; node 3 hangs off node 2 and is unbalanced. Balancing
/// node 3 in phase 2 pulls node 2 below the threshold.
pub fn reactivation_fixture() -> SparseNonnegMatrix {
    let h = 1e6;
    let m = (2.0 * h + 5.12 - 25.5) / 510.0;
    SparseNonnegMatrix::new(
        4,
        [
            (0, 1, h),
            (1, 0, h),
            (0, 2, m),
            (2, 0, m),
            (2, 3, 0.09),
            (3, 2, 0.01),
        ],
    )
    .unwrap()
}
