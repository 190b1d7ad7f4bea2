use osborne::generate::strongly_connected;
use osborne::preprocess::{canonical_epsilon, uncanonicalize_scaling};
use osborne::{
    canonicalize, run_strict, scc_decompose, NullSink, RawMatrix, ScalingVector, SparseNonnegMatrix,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_digraph() -> impl Strategy<Value = SparseNonnegMatrix> {
    (1usize..=10, 0.0f64..0.4, any::<u64>()).prop_map(|(n, density, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut triplets = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && rng.gen_bool(density) {
                    triplets.push((i, j, 1.0));
                }
            }
        }
        SparseNonnegMatrix::new(n, triplets).unwrap()
    })
}

fn reachability(a: &SparseNonnegMatrix) -> Vec<Vec<bool>> {
    let n = a.n();
    let mut reach = vec![vec![false; n]; n];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    for arc in a.arcs() {
        reach[arc.row][arc.col] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    reach
}

/// Raw dense matrix with random signs and diagonal over a strongly connected
/// off-diagonal pattern.
fn signed_raw(n: usize, seed: u64) -> RawMatrix {
    let pattern = strongly_connected(n, 0.3, 1.0, 1e3, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut dense = pattern.to_dense();
    for (i, row) in dense.iter_mut().enumerate() {
        for v in row.iter_mut() {
            if rng.gen_bool(0.5) {
                *v = -*v;
            }
        }
        row[i] = rng.gen_range(-50.0..50.0);
    }
    RawMatrix::from_dense(&dense).unwrap()
}

/// Per-index `max/min` of the off-diagonal L_p row and column norms of
/// `diag(e^y) A diag(e^-y)`.
fn lp_ratios(raw: &RawMatrix, y: &ScalingVector, p: f64) -> Vec<f64> {
    let dense = raw.to_dense();
    let n = raw.n;
    let ys = y.as_slice();
    let mut row = vec![0.0; n];
    let mut col = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let b = (dense[i][j] * (ys[i] - ys[j]).exp()).abs().powf(p);
                row[i] += b;
                col[j] += b;
            }
        }
    }
    (0..n)
        .map(|i| {
            let (r, c) = (row[i].powf(1.0 / p), col[i].powf(1.0 / p));
            r.max(c) / r.min(c)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn scc_matches_reachability(a in random_digraph()) {
        let d = scc_decompose(&a);
        let reach = reachability(&a);
        let n = a.n();
        for (i, row) in reach.iter().enumerate() {
            for (j, &forward) in row.iter().enumerate() {
                let same = forward && reach[j][i];
                prop_assert_eq!(d.component_of[i] == d.component_of[j], same);
            }
        }
        let mut covered: Vec<usize> = d.components.iter().flat_map(|c| c.nodes.clone()).collect();
        covered.sort_unstable();
        prop_assert_eq!(covered, (0..n).collect::<Vec<_>>());
        for arc in &d.cross_arcs {
            prop_assert!(d.component_of[arc.row] < d.component_of[arc.col]);
        }
        let inside: usize = d.components.iter().map(|c| c.matrix.nnz()).sum();
        prop_assert_eq!(inside + d.cross_arcs.len(), a.nnz());
    }
}

#[test]
fn canonical_instance_is_powered_absolute_value() {
    for p in [1.0, 2.0, 3.0, 1.5] {
        let raw = signed_raw(6, 11);
        let c = canonicalize(&raw, p).unwrap();
        let dense = raw.to_dense();
        for arc in c.matrix.arcs() {
            assert_ne!(arc.row, arc.col);
            let expected = dense[arc.row][arc.col].abs().powf(p);
            assert!((arc.value - expected).abs() <= 1e-12 * expected);
        }
        assert_eq!(c.provenance.diagonal_dropped, 6);
    }
}

#[test]
fn lp_round_trip() {
    for p in [1.0, 2.0, 3.0] {
        for (k, n) in [3usize, 4, 5, 6, 8].into_iter().enumerate() {
            let raw = signed_raw(n, 100 + k as u64);
            let c = canonicalize(&raw, p).unwrap();
            for eps in [0.1, 0.01] {
                let out = run_strict(&c.matrix, eps, &mut NullSink).unwrap();
                let y = uncanonicalize_scaling(&out.x, p).unwrap();
                let bound = (1.0 + eps).powf(1.0 / p) + 1e-9;
                for (i, ratio) in lp_ratios(&raw, &y, p).into_iter().enumerate() {
                    assert!(ratio <= bound, "p={p} n={n} eps={eps} i={i} ratio={ratio}");
                }
            }
        }
    }
}

#[test]
fn canonical_tolerance_delivers_user_tolerance_in_lp() {
    // random 4x4, p = 3: a strict run at (1+eps)^3 - 1 gives eps in L_3
    let p = 3.0;
    let raw = signed_raw(4, 7);
    let c = canonicalize(&raw, p).unwrap();
    for eps in [0.1, 0.01] {
        let out = run_strict(&c.matrix, canonical_epsilon(eps, p), &mut NullSink).unwrap();
        let y = uncanonicalize_scaling(&out.x, p).unwrap();
        for ratio in lp_ratios(&raw, &y, p) {
            assert!(ratio <= 1.0 + eps + 1e-12, "eps={eps} ratio={ratio}");
        }
    }
}
