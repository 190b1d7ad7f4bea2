//! The balancing step and the classic index-selection policies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::strict_imbalance;
use crate::error::{BalanceError, Result};
use crate::matrix::SparseNonnegMatrix;
use crate::model::{ScaledWeights, ScalingVector};
use crate::preprocess::require_strongly_connected;
use crate::trace::{is_sampled, StateView, StepRecord, TraceSink};

/// Steps whose drop is below this fraction of `f` are flagged as no-ops.
pub const NOOP_DROP: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VariantKind {
    RoundRobin,
    Greedy,
    UniformRandom,
    Strict,
}

impl VariantKind {
    pub fn name(self) -> &'static str {
        match self {
            VariantKind::RoundRobin => "round_robin",
            VariantKind::Greedy => "greedy",
            VariantKind::UniformRandom => "uniform_random",
            VariantKind::Strict => "strict",
        }
    }
}

/// How the next index is picked. The random kind draws from ChaCha8
/// seeded with `seed`, so traces reproduce across platforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VariantPolicy {
    pub kind: VariantKind,
    pub seed: u64,
}

impl VariantPolicy {
    pub fn new(kind: VariantKind, seed: u64) -> Self {
        Self { kind, seed }
    }

    pub fn round_robin() -> Self {
        Self::new(VariantKind::RoundRobin, 0)
    }

    pub fn greedy() -> Self {
        Self::new(VariantKind::Greedy, 0)
    }

    pub fn uniform_random(seed: u64) -> Self {
        Self::new(VariantKind::UniformRandom, seed)
    }
}

/// Drop of `f` obtained by balancing an index with sums `(r, c)`,
/// `(sqrt(c) - sqrt(r))^2`, in a form that keeps relative accuracy near balance.
#[inline]
pub fn balancing_drop(row: f64, col: f64) -> f64 {
    let denom = row.sqrt() + col.sqrt();
    if denom == 0.0 {
        return 0.0;
    }
    let d = (col - row) / denom;
    d * d
}

/// Result of one balancing step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    /// Step number, starting at 1.
    pub t: u64,
    pub index: usize,
    pub delta: f64,
    pub row_before: f64,
    pub col_before: f64,
    pub row_after: f64,
    pub col_after: f64,
    pub predicted_drop: f64,
    /// `(r + c) - (r' + c')`, the decrease of every objective that keeps all
    /// arcs of the balanced index.
    pub drop: f64,
    pub f_after: f64,
}

/// Scaling vector plus scaled weights for one run over one matrix.
#[derive(Debug, Clone)]
pub struct BalanceState<'a> {
    matrix: &'a SparseNonnegMatrix,
    x: ScalingVector,
    weights: ScaledWeights,
    t: u64,
    touched: Vec<usize>,
    stamp: Vec<u64>,
}

impl<'a> BalanceState<'a> {
    pub fn new(matrix: &'a SparseNonnegMatrix) -> Result<Self> {
        Self::with_scaling(matrix, ScalingVector::zeros(matrix.n()))
    }

    pub fn with_scaling(matrix: &'a SparseNonnegMatrix, x: ScalingVector) -> Result<Self> {
        let weights = ScaledWeights::new(matrix, &x)?;
        Ok(Self {
            matrix,
            x,
            weights,
            t: 0,
            touched: Vec::new(),
            stamp: vec![u64::MAX; matrix.n()],
        })
    }

    pub fn matrix(&self) -> &'a SparseNonnegMatrix {
        self.matrix
    }

    pub fn x(&self) -> &ScalingVector {
        &self.x
    }

    pub fn into_scaling(self) -> ScalingVector {
        self.x
    }

    pub fn weights(&self) -> &ScaledWeights {
        &self.weights
    }

    /// Number of balancing steps taken so far.
    pub fn steps(&self) -> u64 {
        self.t
    }

    /// The balanced index and its neighbours from the last step; these are the
    /// only indices whose sums changed.
    pub fn touched(&self) -> &[usize] {
        &self.touched
    }

    pub fn view(&self) -> StateView<'_> {
        StateView {
            matrix: self.matrix,
            x: &self.x,
            weights: &self.weights,
            frozen: None,
        }
    }

    pub fn refresh(&mut self) -> Result<()> {
        self.weights.refresh(self.matrix, &self.x)
    }

    /// Refreshes the weights if the drift policy asks for it.
    pub fn refresh_if_needed(&mut self) -> Result<bool> {
        if self.weights.needs_refresh() {
            self.refresh()?;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    /// Balances index `i`: `x_i += (ln c_i - ln r_i) / 2`, after which the
    /// row and column sums of `i` both equal `sqrt(r_i c_i)`.
    pub fn balance_index(&mut self, i: usize) -> Result<StepOutcome> {
        let (row, col) = self.weights.exact_sums(self.matrix, i);
        if row <= 0.0 || col <= 0.0 {
            return Err(BalanceError::ZeroNorm { index: i });
        }
        let delta = 0.5 * (col.ln() - row.ln());
        let shift = self.weights.shift(self.matrix, &mut self.x, i, delta)?;
        self.t += 1;

        self.touched.clear();
        self.mark(i);
        let m = self.matrix;
        for id in m.out_arcs(i) {
            self.mark(m.arc(id).col);
        }
        for &id in m.in_arcs(i) {
            self.mark(m.arc(id).row);
        }

        Ok(StepOutcome {
            t: self.t,
            index: i,
            delta,
            row_before: shift.row_before,
            col_before: shift.col_before,
            row_after: shift.row_after,
            col_after: shift.col_after,
            predicted_drop: balancing_drop(row, col),
            drop: (shift.row_before + shift.col_before) - (shift.row_after + shift.col_after),
            f_after: self.weights.total(),
        })
    }

    fn mark(&mut self, v: usize) {
        if self.stamp[v] != self.t {
            self.stamp[v] = self.t;
            self.touched.push(v);
        }
    }
}

/// Tournament tree returning the index with the largest key, smallest index
/// on ties. Inactive indices carry `-inf`.
#[derive(Debug, Clone)]
struct ArgmaxTree {
    size: usize,
    keys: Vec<f64>,
    best: Vec<usize>,
}

impl ArgmaxTree {
    fn new(n: usize) -> Self {
        let size = n.next_power_of_two().max(1);
        let mut tree = Self {
            size,
            keys: vec![f64::NEG_INFINITY; size],
            best: vec![0; 2 * size],
        };
        for k in 0..size {
            tree.best[size + k] = k;
        }
        for node in (1..size).rev() {
            tree.pull(node);
        }
        tree
    }

    fn better(&self, a: usize, b: usize) -> usize {
        let (ka, kb) = (self.keys[a], self.keys[b]);
        if kb > ka || (kb == ka && b < a) {
            b
        } else {
            a
        }
    }

    fn pull(&mut self, node: usize) {
        self.best[node] = self.better(self.best[2 * node], self.best[2 * node + 1]);
    }

    fn set(&mut self, i: usize, key: f64) {
        self.keys[i] = key;
        let mut node = (self.size + i) / 2;
        while node >= 1 {
            self.pull(node);
            node /= 2;
        }
    }

    fn argmax(&self) -> Option<usize> {
        let i = if self.size == 1 { 0 } else { self.best[1] };
        (self.keys[i] > f64::NEG_INFINITY).then_some(i)
    }
}

/// Stateful index picker for one run.
#[derive(Debug, Clone)]
pub struct IndexSelector {
    kind: VariantKind,
    tree: ArgmaxTree,
    cursor: usize,
    rng: ChaCha8Rng,
    active_list: Vec<usize>,
}

impl IndexSelector {
    /// `Strict` uses the greedy rule restricted to the active set.
    pub fn new(policy: VariantPolicy, n: usize) -> Self {
        Self {
            kind: policy.kind,
            tree: ArgmaxTree::new(n),
            cursor: 0,
            rng: ChaCha8Rng::seed_from_u64(policy.seed),
            active_list: Vec::new(),
        }
    }

    fn is_greedy(&self) -> bool {
        matches!(self.kind, VariantKind::Greedy | VariantKind::Strict)
    }

    /// Recomputes every key from scratch.
    pub fn rebuild(&mut self, weights: &ScaledWeights, active: &[bool]) {
        self.active_list = (0..active.len()).filter(|&i| active[i]).collect();
        if self.is_greedy() {
            for i in 0..active.len() {
                self.tree.set(i, key(weights, active, i));
            }
        }
    }

    /// Updates keys for `indices` after their sums or activity changed.
    pub fn update(&mut self, weights: &ScaledWeights, active: &[bool], indices: &[usize]) {
        if self.is_greedy() {
            for &i in indices {
                self.tree.set(i, key(weights, active, i));
            }
        }
    }

    /// Updates the cached active list after membership changed.
    pub fn set_active(&mut self, weights: &ScaledWeights, active: &[bool], changed: &[usize]) {
        self.active_list = (0..active.len()).filter(|&i| active[i]).collect();
        self.update(weights, active, changed);
    }

    /// Picks the next index among the active ones.
    ///
    /// Greedy maximizes `(sqrt(c_i) - sqrt(r_i))^2`, smallest index on ties;
    /// round-robin takes the next active index after the last one picked;
    /// uniform-random draws from the active set.
    pub fn select(&mut self, active: &[bool]) -> Result<usize> {
        if self.active_list.is_empty() {
            return Err(BalanceError::EmptyActiveSet);
        }
        let n = active.len();
        match self.kind {
            VariantKind::Greedy | VariantKind::Strict => {
                self.tree.argmax().ok_or(BalanceError::EmptyActiveSet)
            }
            VariantKind::RoundRobin => {
                let i = (0..n)
                    .map(|k| (self.cursor + k) % n)
                    .find(|&i| active[i])
                    .ok_or(BalanceError::EmptyActiveSet)?;
                self.cursor = (i + 1) % n;
                Ok(i)
            }
            VariantKind::UniformRandom => {
                let k = self.rng.gen_range(0..self.active_list.len());
                Ok(self.active_list[k])
            }
        }
    }
}

fn key(weights: &ScaledWeights, active: &[bool], i: usize) -> f64 {
    if active[i] {
        balancing_drop(weights.row(i), weights.col(i))
    } else {
        f64::NEG_INFINITY
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Balanced,
    IterationCap,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::Balanced => "balanced",
            Termination::IterationCap => "iteration_cap",
        }
    }
}

/// Which exit of the strict outer loop fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrictExit {
    /// Every index was frozen.
    AllFrozen,
    /// Every index was already epsilon-balanced at a phase boundary.
    AllBalanced,
}

impl StrictExit {
    pub fn name(self) -> &'static str {
        match self {
            StrictExit::AllFrozen => "all_frozen",
            StrictExit::AllBalanced => "all_balanced",
        }
    }
}

/// Bookkeeping for one completed phase of a strict run.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSummary {
    pub phase: u32,
    /// First step number of the phase.
    pub t_start: u64,
    /// First step number after the phase.
    pub t_end: u64,
    /// `tau_s` in force during the phase.
    pub tau: f64,
    /// Contracted objective at the phase start.
    pub f_start: f64,
    /// Contracted objective when the inner loop exited.
    pub f_end: f64,
    pub grad_end: f64,
    pub reactivations: u64,
    /// `tau_{s+1}` set by the freeze step closing the phase.
    pub tau_next: f64,
    pub frozen_after: usize,
}

/// Outcome of balancing one strongly connected matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceOutcome {
    pub x: ScalingVector,
    pub termination: Termination,
    pub steps: u64,
    pub productive_steps: u64,
    /// Executed phases (strict only).
    pub phases: u32,
    pub reactivations: u64,
    pub strict_exit: Option<StrictExit>,
    pub phase_summaries: Vec<PhaseSummary>,
    pub f_initial: f64,
    pub f_final: f64,
    /// Per-index `max(r,c)/min(r,c) - 1` at the final scaling.
    pub imbalance: Vec<f64>,
    pub max_imbalance: f64,
}

pub(crate) fn finish_outcome(
    matrix: &SparseNonnegMatrix,
    x: ScalingVector,
    termination: Termination,
    f_initial: f64,
) -> Result<BalanceOutcome> {
    let report = if matrix.nnz() == 0 {
        None
    } else {
        Some(strict_imbalance(matrix, &x)?)
    };
    let f_final = crate::model::f_value(matrix, &x)?;
    let (imbalance, max_imbalance) = match report {
        Some(r) => (r.ratios, r.max_ratio),
        None => (vec![0.0; matrix.n()], 0.0),
    };
    Ok(BalanceOutcome {
        x,
        termination,
        steps: 0,
        productive_steps: 0,
        phases: 0,
        reactivations: 0,
        strict_exit: None,
        phase_summaries: Vec::new(),
        f_initial,
        f_final,
        imbalance,
        max_imbalance,
    })
}

pub(crate) fn is_eps_balanced(row: f64, col: f64, epsilon: f64) -> bool {
    row.max(col) <= (1.0 + epsilon) * row.min(col)
}

/// Classic Osborne iteration: pick an index by `policy`, balance it, repeat
/// until every index is epsilon-balanced or `max_iters` steps were taken.
///
/// The epsilon-balance of each index is tracked incrementally from the
/// maintained sums; a candidate termination is confirmed on freshly
/// recomputed sums.
pub fn run_classic(
    matrix: &SparseNonnegMatrix,
    policy: VariantPolicy,
    epsilon: f64,
    max_iters: u64,
    sink: &mut dyn TraceSink,
) -> Result<BalanceOutcome> {
    if max_iters == 0 {
        return Err(BalanceError::InvalidIterationLimit);
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(BalanceError::InvalidEpsilon(epsilon));
    }
    let n = matrix.n();
    if n == 1 {
        return finish_outcome(matrix, ScalingVector::zeros(1), Termination::Balanced, 0.0);
    }
    require_strongly_connected(matrix)?;

    let mut state = BalanceState::new(matrix)?;
    let f_initial = state.weights().total();
    let active = vec![true; n];
    let mut selector = IndexSelector::new(policy, n);
    selector.rebuild(state.weights(), &active);

    let mut ok: Vec<bool> = (0..n)
        .map(|i| is_eps_balanced(state.weights().row(i), state.weights().col(i), epsilon))
        .collect();
    let mut unbalanced = ok.iter().filter(|&&b| !b).count();
    let mut productive = 0;
    let mut termination = Termination::IterationCap;

    loop {
        if unbalanced == 0 {
            state.refresh()?;
            let w = state.weights();
            for (i, flag) in ok.iter_mut().enumerate() {
                *flag = is_eps_balanced(w.row(i), w.col(i), epsilon);
            }
            unbalanced = ok.iter().filter(|&&b| !b).count();
            selector.rebuild(state.weights(), &active);
            if unbalanced == 0 {
                termination = Termination::Balanced;
                break;
            }
        }
        if state.steps() >= max_iters {
            break;
        }

        let i = selector.select(&active)?;
        let f_before = state.weights().total();
        let grad_norm: f64 = (0..n).map(|j| state.weights().imbalance(j).abs()).sum();
        let step = state.balance_index(i)?;
        let is_productive = step.drop >= NOOP_DROP * f_before;
        if is_productive {
            productive += 1;
        }

        let touched = state.touched().to_vec();
        selector.update(state.weights(), &active, &touched);
        let w = state.weights();
        for &j in &touched {
            let now = is_eps_balanced(w.row(j), w.col(j), epsilon);
            match (ok[j], now) {
                (true, false) => unbalanced += 1,
                (false, true) => unbalanced -= 1,
                _ => {}
            }
            ok[j] = now;
        }

        if is_sampled(n, step.t) {
            let record = StepRecord {
                t: step.t,
                phase: 1,
                index: i,
                row_before: step.row_before,
                col_before: step.col_before,
                predicted_drop: step.predicted_drop,
                drop: step.drop,
                f_before,
                grad_norm,
                active_count: n,
                frozen_count: 0,
                tau: 0.0,
                productive: is_productive,
            };
            sink.on_step(&record, &state.view());
        }

        if state.refresh_if_needed()? {
            let w = state.weights();
            for (j, flag) in ok.iter_mut().enumerate() {
                *flag = is_eps_balanced(w.row(j), w.col(j), epsilon);
            }
            unbalanced = ok.iter().filter(|&&b| !b).count();
            selector.rebuild(state.weights(), &active);
        }
    }

    let steps = state.steps();
    let mut outcome = finish_outcome(matrix, state.into_scaling(), termination, f_initial)?;
    outcome.steps = steps;
    outcome.productive_steps = productive;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::f_value;
    use crate::trace::{NullSink, VecSink};

    fn two_by_two() -> SparseNonnegMatrix {
        SparseNonnegMatrix::from_dense(&[vec![0.0, 4.0], vec![1.0, 0.0]]).unwrap()
    }

    fn three_cycle() -> SparseNonnegMatrix {
        SparseNonnegMatrix::new(3, [(0, 1, 1.0), (1, 2, 2.0), (2, 0, 4.0)]).unwrap()
    }

    #[test]
    fn balance_two_by_two() {
        let a = two_by_two();
        let mut state = BalanceState::new(&a).unwrap();
        let step = state.balance_index(0).unwrap();
        assert!((state.x().get(0) + 2f64.ln()).abs() < 1e-15);
        assert!((state.weights().arc_weight(0) - 2.0).abs() < 1e-14);
        assert!((state.weights().arc_weight(1) - 2.0).abs() < 1e-14);
        assert_eq!(step.predicted_drop, 1.0);
        assert!((step.drop - 1.0).abs() < 1e-14);
        assert!((step.f_after - 4.0).abs() < 1e-14);
        assert_eq!(step.t, 1);
    }

    #[test]
    fn balanced_index_is_a_fixed_point() {
        let a = SparseNonnegMatrix::from_dense(&[vec![0.0, 3.0], vec![3.0, 0.0]]).unwrap();
        let mut state = BalanceState::new(&a).unwrap();
        let step = state.balance_index(1).unwrap();
        assert_eq!(step.drop, 0.0);
        assert_eq!(state.x().as_slice(), &[0.0, 0.0]);
        assert_eq!(step.t, 1);
    }

    #[test]
    fn three_cycle_step_drop() {
        let a = three_cycle();
        let mut state = BalanceState::new(&a).unwrap();
        let step = state.balance_index(0).unwrap();
        assert_eq!((step.row_before, step.col_before), (1.0, 4.0));
        assert_eq!(step.predicted_drop, 1.0);
        let fresh = f_value(&a, state.x()).unwrap();
        assert!((fresh - 6.0).abs() < 1e-14);
        assert!((step.f_after - fresh).abs() < 1e-14);
        let mut touched = state.touched().to_vec();
        touched.sort();
        assert_eq!(touched, vec![0, 1, 2]);
    }

    #[test]
    fn zero_norm_is_structural_error() {
        let a = SparseNonnegMatrix::new(2, [(0, 1, 1.0)]).unwrap();
        let mut state = BalanceState::new(&a).unwrap();
        assert_eq!(
            state.balance_index(0),
            Err(BalanceError::ZeroNorm { index: 0 })
        );
    }

    #[test]
    fn greedy_picks_largest_drop_then_smallest_index() {
        // (r, c) = (1, 4), (10.5625, 7.5625), (9.0625, 9.0625): drops 1, 0.25, 0
        let a = SparseNonnegMatrix::new(
            3,
            [
                (0, 1, 0.5),
                (0, 2, 0.5),
                (1, 0, 2.0),
                (2, 0, 2.0),
                (1, 2, 8.5625),
                (2, 1, 7.0625),
            ],
        )
        .unwrap();
        let state = BalanceState::new(&a).unwrap();
        let w = state.weights();
        assert_eq!(balancing_drop(w.row(0), w.col(0)), 1.0);
        assert_eq!(balancing_drop(w.row(1), w.col(1)), 0.25);
        assert_eq!(balancing_drop(w.row(2), w.col(2)), 0.0);
        let active = vec![true; 3];
        let mut sel = IndexSelector::new(VariantPolicy::greedy(), 3);
        sel.rebuild(w, &active);
        assert_eq!(sel.select(&active).unwrap(), 0);

        let tie = SparseNonnegMatrix::from_dense(&[vec![0.0, 4.0], vec![1.0, 0.0]]).unwrap();
        let state = BalanceState::new(&tie).unwrap();
        let mut sel = IndexSelector::new(VariantPolicy::greedy(), 2);
        sel.rebuild(state.weights(), &[true, true]);
        assert_eq!(sel.select(&[true, true]).unwrap(), 0);
    }

    #[test]
    fn round_robin_skips_inactive() {
        let a = SparseNonnegMatrix::new(
            5,
            [
                (0, 1, 1.0),
                (1, 2, 1.0),
                (2, 3, 1.0),
                (3, 4, 1.0),
                (4, 0, 1.0),
            ],
        )
        .unwrap();
        let state = BalanceState::new(&a).unwrap();
        // active {1, 2, 4} in 1-based labels is {0, 1, 3} here
        let active = vec![true, true, false, true, false];
        let mut sel = IndexSelector::new(VariantPolicy::round_robin(), 5);
        sel.rebuild(state.weights(), &active);
        assert_eq!(sel.select(&active).unwrap(), 0);
        assert_eq!(sel.select(&active).unwrap(), 1);
        assert_eq!(sel.select(&active).unwrap(), 3);
        assert_eq!(sel.select(&active).unwrap(), 0);
    }

    #[test]
    fn random_is_reproducible_and_stays_active() {
        let a = three_cycle();
        let state = BalanceState::new(&a).unwrap();
        let active = vec![true, false, true];
        let draw = |seed| {
            let mut sel = IndexSelector::new(VariantPolicy::uniform_random(seed), 3);
            sel.rebuild(state.weights(), &active);
            (0..50)
                .map(|_| sel.select(&active).unwrap())
                .collect::<Vec<_>>()
        };
        let first = draw(7);
        assert_eq!(first, draw(7));
        assert!(first.iter().all(|&i| i != 1));
        assert!(first.contains(&0) && first.contains(&2));
    }

    #[test]
    fn empty_active_set() {
        let a = three_cycle();
        let state = BalanceState::new(&a).unwrap();
        for policy in [
            VariantPolicy::greedy(),
            VariantPolicy::round_robin(),
            VariantPolicy::uniform_random(1),
        ] {
            let mut sel = IndexSelector::new(policy, 3);
            sel.rebuild(state.weights(), &[false; 3]);
            assert_eq!(sel.select(&[false; 3]), Err(BalanceError::EmptyActiveSet));
        }
    }

    #[test]
    fn classic_already_balanced_takes_no_steps() {
        let a = SparseNonnegMatrix::from_dense(&[vec![0.0, 3.0], vec![3.0, 0.0]]).unwrap();
        for policy in [VariantPolicy::greedy(), VariantPolicy::round_robin()] {
            let out = run_classic(&a, policy, 0.01, 100, &mut NullSink).unwrap();
            assert_eq!(out.steps, 0);
            assert_eq!(out.termination, Termination::Balanced);
        }
    }

    #[test]
    fn classic_two_by_two_single_step() {
        let a = two_by_two();
        for policy in [
            VariantPolicy::greedy(),
            VariantPolicy::round_robin(),
            VariantPolicy::uniform_random(3),
        ] {
            let out = run_classic(&a, policy, 1e-9, 100, &mut NullSink).unwrap();
            assert_eq!(out.steps, 1);
            assert_eq!(out.productive_steps, 1);
            assert_eq!(out.termination, Termination::Balanced);
            assert!(out.max_imbalance < 1e-14);
        }
    }

    #[test]
    fn classic_three_cycle_reaches_geometric_mean() {
        let a = three_cycle();
        let mut sink = VecSink::default();
        let out = run_classic(&a, VariantPolicy::greedy(), 1e-6, 100_000, &mut sink).unwrap();
        assert_eq!(out.termination, Termination::Balanced);
        assert!(out.max_imbalance <= 1e-6);
        let x = out.x.as_slice();
        for arc in a.arcs() {
            let b = arc.value * (x[arc.row] - x[arc.col]).exp();
            assert!((b - 2.0).abs() < 1e-5, "arc weight {b}");
        }
        let mut f = sink.steps[0].f_before;
        for rec in &sink.steps {
            assert!(rec.f_before <= f * (1.0 + 1e-12));
            f = rec.f_before;
        }
    }

    #[test]
    fn classic_cap_and_argument_errors() {
        // a single step balances any 3-cycle, so use a dense fixture
        let a = SparseNonnegMatrix::from_dense(&[
            vec![0.0, 1.0, 5.0],
            vec![2.0, 0.0, 1.0],
            vec![7.0, 3.0, 0.0],
        ])
        .unwrap();
        let out = run_classic(&a, VariantPolicy::round_robin(), 0.01, 1, &mut NullSink).unwrap();
        assert_eq!(out.termination, Termination::IterationCap);
        assert_eq!(out.steps, 1);
        assert_eq!(
            run_classic(&a, VariantPolicy::greedy(), 0.01, 0, &mut NullSink),
            Err(BalanceError::InvalidIterationLimit)
        );
        let split = SparseNonnegMatrix::new(2, [(0, 1, 1.0)]).unwrap();
        assert!(matches!(
            run_classic(&split, VariantPolicy::greedy(), 0.01, 10, &mut NullSink),
            Err(BalanceError::NotStronglyConnected { .. })
        ));
    }
}
