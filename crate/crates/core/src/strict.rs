//! Strict balancing by phases.
//!
//! Each phase runs greedy balancing on the objective contracted over the
//! current frozen set until the relative L1 norm of its gradient drops to
//! `eps' = eps^2 / (64 n^4)`. The phase then sets the next threshold
//! `tau = f_contracted / (4 n^3)` and freezes every index whose weight
//! `r_i + c_i` reaches it. Indices frozen in the current phase whose weight
//! later falls below the threshold are released back to active balancing.
//! The run ends once every index is frozen (or, checked at phase boundaries,
//! once every index is already epsilon-balanced).

use crate::diagnostics::worst_case_step_bound;
use crate::error::{BalanceError, Result};
use crate::matrix::SparseNonnegMatrix;
use crate::model::{ScaledWeights, ScalingVector};
use crate::preprocess::require_strongly_connected;
use crate::steps::{
    finish_outcome, is_eps_balanced, BalanceOutcome, BalanceState, IndexSelector, PhaseSummary,
    StrictExit, Termination, VariantPolicy, NOOP_DROP,
};
use crate::trace::{is_sampled, PhaseEvent, StateView, StepRecord, TraceSink};

/// Multiplier on the worst-case step bound used as a hard budget.
pub const SAFETY_FACTOR: f64 = 10.0;

/// Phase machinery: nested frozen sets, thresholds and counters.
///
/// Membership is stored as the phase that froze each index, so
/// `B_k = { i : frozen_at[i] <= k }` and the sets are nested by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenSetState {
    n: usize,
    phase: u32,
    t: u64,
    frozen_at: Vec<Option<u32>>,
    // tau[k] is the threshold of phase k + 1; tau[0] = 0
    tau: Vec<f64>,
    epsilon: f64,
    eps_prime: f64,
}

impl FrozenSetState {
    pub fn new(n: usize, epsilon: f64) -> Self {
        let nf = n as f64;
        Self {
            n,
            phase: 1,
            t: 1,
            frozen_at: vec![None; n],
            tau: vec![0.0],
            epsilon,
            eps_prime: epsilon * epsilon / (64.0 * nf.powi(4)),
        }
    }

    /// Current phase `s`.
    pub fn phase(&self) -> u32 {
        self.phase
    }

    /// Global step counter `t`; `t - 1` steps have been taken.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn eps_prime(&self) -> f64 {
        self.eps_prime
    }

    /// `tau_s` for the current phase.
    pub fn tau(&self) -> f64 {
        self.tau[self.phase as usize - 1]
    }

    /// `tau_1, ..., tau_s`.
    pub fn thresholds(&self) -> &[f64] {
        &self.tau
    }

    /// Whether `i` is in `B_s`.
    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen_at[i].is_some()
    }

    /// Phase that froze `i`, if it is currently frozen.
    pub fn frozen_at(&self, i: usize) -> Option<u32> {
        self.frozen_at[i]
    }

    /// Members of `B_k` for `k <= s`.
    pub fn members(&self, k: u32) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| matches!(self.frozen_at[i], Some(p) if p <= k))
            .collect()
    }

    pub fn frozen_mask(&self) -> Vec<bool> {
        self.frozen_at.iter().map(Option::is_some).collect()
    }

    pub fn frozen_count(&self) -> usize {
        self.frozen_at.iter().filter(|f| f.is_some()).count()
    }

    pub fn all_frozen(&self) -> bool {
        self.frozen_at.iter().all(Option::is_some)
    }

    /// Releases every `i` in `B_s \ B_{s-1}` with weight below `tau_s`.
    /// A no-op in phase 1.
    pub fn reactivation_check(&mut self, weights: &ScaledWeights) -> Vec<usize> {
        let all: Vec<usize> = (0..self.n).collect();
        self.reactivate_among(weights, &all)
    }

    /// As [`reactivation_check`](Self::reactivation_check), restricted to
    /// `candidates` (the indices whose weight may have changed).
    pub fn reactivate_among(
        &mut self,
        weights: &ScaledWeights,
        candidates: &[usize],
    ) -> Vec<usize> {
        if self.phase <= 1 {
            return Vec::new();
        }
        let tau = self.tau();
        let mut released: Vec<usize> = candidates
            .iter()
            .copied()
            .filter(|&i| self.frozen_at[i] == Some(self.phase) && weights.weight(i) < tau)
            .collect();
        released.sort_unstable();
        for &i in &released {
            self.frozen_at[i] = None;
        }
        released
    }

    /// Closes phase `s`: `tau_{s+1} = f_contracted / (4 n^3)` and
    /// `B_{s+1} = B_s + { i : r_i + c_i >= tau_{s+1} }`. Returns the new
    /// threshold and the newly frozen indices.
    pub fn freeze_step(&mut self, f_contracted: f64, weights: &ScaledWeights) -> (f64, Vec<usize>) {
        let nf = self.n as f64;
        let tau = f_contracted / (4.0 * nf.powi(3));
        if self.phase > 1 {
            debug_assert!(
                tau <= self.tau() / (4.0 * nf * nf) * (1.0 + 1e-9),
                "threshold decay violated: {tau} vs {}",
                self.tau()
            );
        }
        self.phase += 1;
        self.tau.push(tau);
        let mut added = Vec::new();
        for i in 0..self.n {
            if self.frozen_at[i].is_none() && weights.weight(i) >= tau {
                self.frozen_at[i] = Some(self.phase);
                added.push(i);
            }
        }
        (tau, added)
    }
}

/// Contracted objective and its gradient norm, kept current step by step.
#[derive(Debug, Clone)]
struct ContractedTracker {
    f: f64,
    abs_sum: f64,
    signed_sum: f64,
    cached: Vec<f64>,
    any_frozen: bool,
}

impl ContractedTracker {
    fn new(n: usize) -> Self {
        Self {
            f: 0.0,
            abs_sum: 0.0,
            signed_sum: 0.0,
            cached: vec![0.0; n],
            any_frozen: false,
        }
    }

    fn rebuild(&mut self, matrix: &SparseNonnegMatrix, weights: &ScaledWeights, frozen: &[bool]) {
        self.f = matrix
            .arcs()
            .iter()
            .enumerate()
            .filter(|(_, arc)| !(frozen[arc.row] && frozen[arc.col]))
            .map(|(id, _)| weights.arc_weight(id))
            .sum();
        self.abs_sum = 0.0;
        self.signed_sum = 0.0;
        for (i, &is_frozen) in frozen.iter().enumerate() {
            if !is_frozen {
                let imb = weights.imbalance(i);
                self.cached[i] = imb;
                self.abs_sum += imb.abs();
                self.signed_sum += imb;
            }
        }
        self.any_frozen = frozen.iter().any(|&b| b);
    }

    fn update(
        &mut self,
        weights: &ScaledWeights,
        frozen: &[bool],
        touched: &[usize],
        delta_f: f64,
    ) {
        self.f -= delta_f;
        for &j in touched {
            if !frozen[j] {
                let imb = weights.imbalance(j);
                let old = std::mem::replace(&mut self.cached[j], imb);
                self.abs_sum += imb.abs() - old.abs();
                self.signed_sum += imb - old;
            }
        }
    }

    /// Active components plus the super-node, whose imbalance is minus the
    /// sum of the active ones.
    fn grad_norm(&self) -> f64 {
        let super_node = if self.any_frozen {
            self.signed_sum.abs()
        } else {
            0.0
        };
        self.abs_sum.max(0.0) + super_node
    }

    fn relative(&self) -> f64 {
        if self.f > 0.0 {
            self.grad_norm() / self.f
        } else {
            0.0
        }
    }
}

/// Options for [`run_strict_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct StrictOptions {
    /// Stop with [`Termination::IterationCap`] after this many steps.
    pub max_steps: Option<u64>,
}

/// Hard step budget: `SAFETY_FACTOR` times the worst-case bound with unit
/// constant, saturating at `u64::MAX`.
pub fn safety_budget(matrix: &SparseNonnegMatrix, epsilon: f64) -> u64 {
    let bound = SAFETY_FACTOR * worst_case_step_bound(matrix.n(), matrix.dynamic_range(), epsilon);
    if bound.is_finite() && bound < u64::MAX as f64 {
        bound.ceil().max(1.0) as u64
    } else {
        u64::MAX
    }
}

/// Runs strict balancing on a strongly connected matrix with
/// `epsilon` in `(0, 1/2]`.
pub fn run_strict(
    matrix: &SparseNonnegMatrix,
    epsilon: f64,
    sink: &mut dyn TraceSink,
) -> Result<BalanceOutcome> {
    run_strict_with(matrix, epsilon, StrictOptions::default(), sink)
}

pub fn run_strict_with(
    matrix: &SparseNonnegMatrix,
    epsilon: f64,
    options: StrictOptions,
    sink: &mut dyn TraceSink,
) -> Result<BalanceOutcome> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(BalanceError::InvalidEpsilon(epsilon));
    }
    if options.max_steps == Some(0) {
        return Err(BalanceError::InvalidIterationLimit);
    }
    let n = matrix.n();
    if n == 1 {
        return finish_outcome(matrix, ScalingVector::zeros(1), Termination::Balanced, 0.0);
    }
    require_strongly_connected(matrix)?;

    let mut run = StrictRun {
        state: BalanceState::new(matrix)?,
        frozen: FrozenSetState::new(n, epsilon),
        selector: IndexSelector::new(VariantPolicy::new(crate::steps::VariantKind::Strict, 0), n),
        tracker: ContractedTracker::new(n),
        mask: vec![false; n],
        active: vec![true; n],
        budget: safety_budget(matrix, epsilon),
        max_steps: options.max_steps.unwrap_or(u64::MAX),
        productive: 0,
        reactivations: 0,
    };
    let f_initial = run.state.weights().total();
    let mut summaries = Vec::new();
    let mut termination = Termination::Balanced;

    let exit = loop {
        if run.frozen.all_frozen() {
            break Some(StrictExit::AllFrozen);
        }
        run.state.refresh()?;
        let w = run.state.weights();
        if (0..n).all(|i| is_eps_balanced(w.row(i), w.col(i), epsilon)) {
            break Some(StrictExit::AllBalanced);
        }
        match run.phase_loop(sink)? {
            PhaseEnd::Converged(mut summary) => {
                let (tau, added) = run.frozen.freeze_step(summary.f_end, run.state.weights());
                summary.tau_next = tau;
                summary.frozen_after = run.frozen.frozen_count();
                let weights = run.state.weights();
                let event = PhaseEvent::Freeze {
                    phase: run.frozen.phase(),
                    t: run.frozen.t(),
                    tau,
                    frozen: added.iter().map(|&i| (i, weights.weight(i))).collect(),
                };
                sink.on_event(&event, &run.view());
                summaries.push(summary);
            }
            PhaseEnd::Capped => {
                termination = Termination::IterationCap;
                break None;
            }
        }
    };

    let steps = run.state.steps();
    let phases = summaries.len() as u32 + u32::from(termination == Termination::IterationCap);
    let (productive, reactivations) = (run.productive, run.reactivations);
    let mut outcome = finish_outcome(matrix, run.state.into_scaling(), termination, f_initial)?;
    outcome.steps = steps;
    outcome.productive_steps = productive;
    outcome.phases = phases;
    outcome.reactivations = reactivations;
    outcome.strict_exit = exit;
    outcome.phase_summaries = summaries;
    Ok(outcome)
}

enum PhaseEnd {
    Converged(PhaseSummary),
    Capped,
}

struct StrictRun<'a> {
    state: BalanceState<'a>,
    frozen: FrozenSetState,
    selector: IndexSelector,
    tracker: ContractedTracker,
    mask: Vec<bool>,
    active: Vec<bool>,
    budget: u64,
    max_steps: u64,
    productive: u64,
    reactivations: u64,
}

impl<'a> StrictRun<'a> {
    fn view(&self) -> StateView<'_> {
        StateView {
            frozen: Some(&self.frozen),
            ..self.state.view()
        }
    }

    fn sync_membership(&mut self) {
        self.mask = self.frozen.frozen_mask();
        self.active = self.mask.iter().map(|&b| !b).collect();
    }

    fn rebuild(&mut self) {
        let matrix = self.state.matrix();
        self.tracker
            .rebuild(matrix, self.state.weights(), &self.mask);
        self.selector.rebuild(self.state.weights(), &self.active);
    }

    /// Inner loop of one phase: greedy steps over the active indices until the
    /// relative contracted gradient is at most `eps'`, confirmed on freshly
    /// recomputed weights.
    fn phase_loop(&mut self, sink: &mut dyn TraceSink) -> Result<PhaseEnd> {
        let n = self.state.matrix().n();
        let phase = self.frozen.phase();
        let eps_prime = self.frozen.eps_prime();
        self.sync_membership();
        self.rebuild();
        let t_start = self.frozen.t();
        let f_start = self.tracker.f;
        let reactivations_before = self.reactivations;
        let start = PhaseEvent::PhaseStart {
            phase,
            t: t_start,
            f_contracted: f_start,
            grad_norm: self.tracker.grad_norm(),
            frozen_count: self.frozen.frozen_count(),
        };
        sink.on_event(&start, &self.view());

        loop {
            if self.tracker.relative() <= eps_prime {
                self.state.refresh()?;
                self.rebuild();
                if self.tracker.relative() <= eps_prime {
                    break;
                }
            }
            let taken = self.state.steps();
            if taken >= self.max_steps {
                return Ok(PhaseEnd::Capped);
            }
            if taken >= self.budget {
                return Err(BalanceError::StepBudgetExhausted {
                    budget: self.budget,
                    phase,
                    relative_gradient: self.tracker.relative(),
                    frozen: self.frozen.frozen_count(),
                });
            }

            let i = self.selector.select(&self.active)?;
            let f_before = self.tracker.f;
            let grad_before = self.tracker.grad_norm();
            let step = self.state.balance_index(i)?;
            self.frozen.t += 1;
            let is_productive = step.drop >= NOOP_DROP * f_before;
            if is_productive {
                self.productive += 1;
            }
            let touched = self.state.touched().to_vec();
            self.tracker
                .update(self.state.weights(), &self.mask, &touched, step.drop);
            self.selector
                .update(self.state.weights(), &self.active, &touched);

            if is_sampled(n, step.t) {
                let record = StepRecord {
                    t: step.t,
                    phase,
                    index: i,
                    row_before: step.row_before,
                    col_before: step.col_before,
                    predicted_drop: step.predicted_drop,
                    drop: step.drop,
                    f_before,
                    grad_norm: grad_before,
                    active_count: n - self.frozen.frozen_count(),
                    frozen_count: self.frozen.frozen_count(),
                    tau: self.frozen.tau(),
                    productive: is_productive,
                };
                sink.on_step(&record, &self.view());
            }

            let released = self.frozen.reactivate_among(self.state.weights(), &touched);
            if !released.is_empty() {
                self.reactivations += released.len() as u64;
                self.sync_membership();
                self.tracker
                    .rebuild(self.state.matrix(), self.state.weights(), &self.mask);
                self.selector
                    .set_active(self.state.weights(), &self.active, &released);
                let weights = self.state.weights();
                let event = PhaseEvent::Reactivation {
                    phase,
                    t: self.frozen.t(),
                    tau: self.frozen.tau(),
                    released: released.iter().map(|&j| (j, weights.weight(j))).collect(),
                };
                sink.on_event(&event, &self.view());
            }

            if self.state.refresh_if_needed()? {
                self.rebuild();
            }
        }

        let end = PhaseEvent::PhaseEnd {
            phase,
            t: self.frozen.t(),
            f_contracted: self.tracker.f,
            grad_norm: self.tracker.grad_norm(),
        };
        sink.on_event(&end, &self.view());
        Ok(PhaseEnd::Converged(PhaseSummary {
            phase,
            t_start,
            t_end: self.frozen.t(),
            tau: self.frozen.tau(),
            f_start,
            f_end: self.tracker.f,
            grad_end: self.tracker.grad_norm(),
            reactivations: self.reactivations - reactivations_before,
            tau_next: 0.0,
            frozen_after: 0,
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{NullSink, VecSink};

    fn two_by_two() -> SparseNonnegMatrix {
        SparseNonnegMatrix::from_dense(&[vec![0.0, 4.0], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn eps_prime_formula() {
        let state = FrozenSetState::new(4, 0.5);
        assert_eq!(state.eps_prime(), 0.25 / (64.0 * 256.0));
        assert_eq!(state.phase(), 1);
        assert_eq!(state.t(), 1);
        assert_eq!(state.thresholds(), &[0.0]);
        assert_eq!(state.frozen_count(), 0);
    }

    #[test]
    fn freeze_step_threshold_and_members() {
        // f_contracted = 4 n^3 gives tau = 1
        let a = two_by_two();
        let w = ScaledWeights::new(&a, &ScalingVector::zeros(2)).unwrap();
        let mut state = FrozenSetState::new(2, 0.1);
        let (tau, added) = state.freeze_step(32.0, &w);
        assert_eq!(tau, 1.0);
        assert_eq!(added, vec![0, 1]);
        assert!(state.all_frozen());
        assert_eq!(state.phase(), 2);
        assert_eq!(state.frozen_at(0), Some(2));
    }

    #[test]
    fn reactivation_rules() {
        let a = SparseNonnegMatrix::new(3, [(0, 1, 1.0), (1, 0, 1.0), (1, 2, 0.2), (2, 1, 0.2)])
            .unwrap();
        let w = ScaledWeights::new(&a, &ScalingVector::zeros(3)).unwrap();
        let mut state = FrozenSetState::new(3, 0.1);
        assert!(state.reactivation_check(&w).is_empty());

        // weights: 2.0, 2.4, 0.4; freezing at tau = 0.404 takes {0, 1}
        let (tau, added) = state.freeze_step(0.404 * 4.0 * 27.0, &w);
        assert!((tau - 0.404).abs() < 1e-15);
        assert_eq!(added, vec![0, 1]);
        assert!(state.reactivation_check(&w).is_empty());

        // index 2 weight 0.4 = 0.99 * tau once frozen by hand in this phase
        state.frozen_at[2] = Some(state.phase());
        assert_eq!(state.reactivation_check(&w), vec![2]);
        assert!(!state.is_frozen(2));
        assert!(state.is_frozen(0) && state.is_frozen(1));
    }

    #[test]
    fn previous_phase_members_are_never_released() {
        let a = SparseNonnegMatrix::new(2, [(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let w = ScaledWeights::new(&a, &ScalingVector::zeros(2)).unwrap();
        let mut state = FrozenSetState::new(2, 0.1);
        state.freeze_step(2.0 * 32.0 * 0.9, &w); // tau = 1.8, both weights 2
        state.frozen_at[1] = None;
        state.freeze_step(1.0, &w);
        state.tau[2] = 10.0;
        // both weights are below tau_3 but index 0 belongs to B_2
        assert_eq!(state.reactivation_check(&w), vec![1]);
        assert_eq!(state.members(2), vec![0]);
        assert_eq!(state.members(3), vec![0]);
    }

    #[test]
    fn already_balanced_input_takes_no_steps() {
        let a = SparseNonnegMatrix::from_dense(&[vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
        let out = run_strict(&a, 0.1, &mut NullSink).unwrap();
        assert_eq!(out.steps, 0);
        assert_eq!(out.phases, 0);
        assert_eq!(out.strict_exit, Some(StrictExit::AllBalanced));
    }

    #[test]
    fn two_by_two_one_step_then_freeze() {
        let a = two_by_two();
        let mut sink = VecSink::default();
        let out = run_strict(&a, 0.1, &mut sink).unwrap();
        assert_eq!(out.steps, 1);
        assert_eq!(out.phases, 1);
        assert_eq!(out.strict_exit, Some(StrictExit::AllFrozen));
        assert!(out.max_imbalance < 1e-14);
        assert_eq!(sink.steps.len(), 1);
        assert_eq!(sink.steps[0].index, 0);
        let freeze = sink
            .events
            .iter()
            .find_map(|e| match e {
                PhaseEvent::Freeze { frozen, .. } => Some(frozen.len()),
                _ => None,
            })
            .unwrap();
        assert_eq!(freeze, 2);
    }

    #[test]
    fn argument_errors() {
        let a = two_by_two();
        for eps in [0.0, -0.1, 0.51, f64::NAN] {
            assert!(matches!(
                run_strict(&a, eps, &mut NullSink),
                Err(BalanceError::InvalidEpsilon(_))
            ));
        }
        let split = SparseNonnegMatrix::new(3, [(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0)]).unwrap();
        assert_eq!(
            run_strict(&split, 0.1, &mut NullSink),
            Err(BalanceError::NotStronglyConnected { components: 2 })
        );
    }

    #[test]
    fn user_cap_reports_iteration_cap() {
        let a = SparseNonnegMatrix::from_dense(&[
            vec![0.0, 1.0, 5.0],
            vec![2.0, 0.0, 1.0],
            vec![7.0, 3.0, 0.0],
        ])
        .unwrap();
        let out = run_strict_with(
            &a,
            0.01,
            StrictOptions { max_steps: Some(1) },
            &mut NullSink,
        )
        .unwrap();
        assert_eq!(out.termination, Termination::IterationCap);
        assert_eq!(out.steps, 1);
    }
}
