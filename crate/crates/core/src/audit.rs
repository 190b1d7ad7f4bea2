//! Trace sink that re-derives every step from `(A, x)` and checks it against
//! the guarantees of balancing and of the strict phase schedule.
//!
//! All quantities are recomputed by fresh summation; nothing is read from the
//! run's incrementally maintained sums except to cross-check them.

use crate::diagnostics::{heavy_weight_threshold, progress_lower_bound, weight_envelope};
use crate::matrix::SparseNonnegMatrix;
use crate::model::{contracted_f, f_value, scaled_norms, ScalingVector};
use crate::steps::balancing_drop;
use crate::trace::{PhaseEvent, StateView, StepRecord, TraceSink};

/// Relative tolerance for identities and bounds that hold exactly in real
/// arithmetic.
pub const AUDIT_TOL: f64 = 1e-9;

/// Slack on `max/min <= 1 + eps` for arithmetic noise.
pub const BALANCE_SLACK: f64 = 1e-12;

/// Messages kept per audit; further violations are only counted.
const MAX_MESSAGES: usize = 32;

/// Largest observed value of each checked quantity, normalized so that the
/// check passes when the value is at most 1 (ratios) or 0 (margins).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AuditMargins {
    /// `|observed drop - (sqrt c - sqrt r)^2| / f_before`.
    pub drop_identity: f64,
    /// `|recorded f - fresh f^B| / fresh f^B`.
    pub trace_f: f64,
    /// Smallest `b_ij / lower` and largest `b_ij / upper` over the envelope.
    pub envelope_low: f64,
    pub envelope_high: f64,
    /// Largest `(bound - drop) / f_before` for the per-step progress bound.
    pub progress_deficit: f64,
    /// Largest `f^B / ((n - |B|) tau)` in phases after the first.
    pub regime_ratio: f64,
    /// Smallest `weight / (tau_k / 2)` over frozen indices.
    pub floor_ratio: f64,
    /// Largest `max/min - 1` over frozen indices.
    pub frozen_imbalance: f64,
}

#[derive(Debug, Clone)]
pub struct TraceAudit {
    epsilon: f64,
    n: usize,
    lower: f64,
    upper: f64,
    check_progress: bool,
    prev_x: Option<(u64, ScalingVector)>,
    /// Phase at which each index joined the frozen set, per the events seen.
    frozen_phase: Vec<Option<u32>>,
    /// `(phase, reactivations so far, f after the last step)`.
    last_f: Option<(u32, u64, f64)>,
    reactivation_events: u64,
    pub steps_checked: u64,
    pub drop_checks: u64,
    /// Steps checked against the per-step progress bound.
    pub progress_checks: u64,
    /// `(step, frozen index)` pairs checked for weight floor and balance.
    pub frozen_checks: u64,
    pub freeze_events: u64,
    pub phase_ends: u64,
    pub margins: AuditMargins,
    pub violations: u64,
    pub messages: Vec<String>,
}

impl TraceAudit {
    /// Audit for a run on `matrix` at tolerance `epsilon`. Set
    /// `check_progress` for greedy runs, where every step must achieve the
    /// guaranteed fraction of the contracted gradient.
    pub fn new(matrix: &SparseNonnegMatrix, epsilon: f64, check_progress: bool) -> Self {
        let (lower, upper) = weight_envelope(matrix);
        Self {
            epsilon,
            n: matrix.n(),
            lower,
            upper,
            check_progress,
            prev_x: None,
            frozen_phase: vec![None; matrix.n()],
            last_f: None,
            reactivation_events: 0,
            steps_checked: 0,
            drop_checks: 0,
            progress_checks: 0,
            frozen_checks: 0,
            freeze_events: 0,
            phase_ends: 0,
            margins: AuditMargins {
                envelope_low: f64::INFINITY,
                floor_ratio: f64::INFINITY,
                ..AuditMargins::default()
            },
            violations: 0,
            messages: Vec::new(),
        }
    }

    pub fn is_clean(&self) -> bool {
        self.violations == 0
    }

    fn fail(&mut self, message: String) {
        self.violations += 1;
        if self.messages.len() < MAX_MESSAGES {
            self.messages.push(message);
        }
    }

    /// Call before the run with the starting scaling so the first step's drop
    /// can be recomputed.
    pub fn start(&mut self, x: &ScalingVector) {
        self.prev_x = Some((0, x.clone()));
    }

    fn frozen_mask(&self, view: &StateView<'_>) -> Vec<bool> {
        match view.frozen {
            Some(state) => state.frozen_mask(),
            None => vec![false; self.n],
        }
    }

    fn check_drop(&mut self, record: &StepRecord, view: &StateView<'_>) {
        let Some((t_prev, x_prev)) = self.prev_x.take() else {
            return;
        };
        if t_prev + 1 != record.t {
            return;
        }
        let a = view.matrix;
        let (Ok(f_before), Ok(f_after), Ok((rows, cols))) = (
            f_value(a, &x_prev),
            f_value(a, view.x),
            scaled_norms(a, &x_prev),
        ) else {
            self.fail(format!("t={}: scaled weights not finite", record.t));
            return;
        };
        let i = record.index;
        let predicted = balancing_drop(rows[i], cols[i]);
        let err = ((f_before - f_after) - predicted).abs() / f_before;
        self.drop_checks += 1;
        self.margins.drop_identity = self.margins.drop_identity.max(err);
        if err > AUDIT_TOL {
            self.fail(format!(
                "t={}: drop {} differs from (sqrt c - sqrt r)^2 = {}",
                record.t,
                f_before - f_after,
                predicted
            ));
        }

        let mask = self.frozen_mask(view);
        if let Ok(fresh) = contracted_f(a, &x_prev, &mask) {
            let err = (record.f_before - fresh).abs() / fresh.max(f64::MIN_POSITIVE);
            self.margins.trace_f = self.margins.trace_f.max(err);
            if err > AUDIT_TOL {
                self.fail(format!(
                    "t={}: recorded f {} vs fresh {}",
                    record.t, record.f_before, fresh
                ));
            }
        }
    }

    fn check_envelope(&mut self, record: &StepRecord, view: &StateView<'_>) {
        let xs = view.x.as_slice();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for arc in view.matrix.arcs() {
            let b = arc.value * (xs[arc.row] - xs[arc.col]).exp();
            lo = lo.min(b / self.lower);
            hi = hi.max(b / self.upper);
        }
        self.margins.envelope_low = self.margins.envelope_low.min(lo);
        self.margins.envelope_high = self.margins.envelope_high.max(hi);
        if lo < 1.0 - AUDIT_TOL || hi > 1.0 + AUDIT_TOL {
            self.fail(format!(
                "t={}: scaled weight outside envelope (low ratio {lo}, high ratio {hi})",
                record.t
            ));
        }
    }

    fn check_phase_bounds(&mut self, record: &StepRecord, view: &StateView<'_>) {
        if self.check_progress {
            let bound = progress_lower_bound(record.grad_norm, record.f_before, self.n);
            let deficit = (bound - record.drop) / record.f_before;
            self.progress_checks += 1;
            self.margins.progress_deficit = self.margins.progress_deficit.max(deficit);
            if deficit > AUDIT_TOL {
                self.fail(format!(
                    "t={}: drop {} below progress bound {}",
                    record.t, record.drop, bound
                ));
            }
        }

        let key = (record.phase, self.reactivation_events);
        let f_after = record.f_before - record.drop;
        if let Some((phase, reacts, f_prev)) = self.last_f {
            if (phase, reacts) == key && record.f_before > f_prev * (1.0 + AUDIT_TOL) {
                self.fail(format!(
                    "t={}: contracted objective rose from {} to {}",
                    record.t, f_prev, record.f_before
                ));
            }
        }
        self.last_f = Some((key.0, key.1, f_after));

        let Some(state) = view.frozen else {
            return;
        };
        if record.phase > 1 {
            let cap = (self.n - record.frozen_count) as f64 * record.tau;
            let ratio = record.f_before / cap;
            self.margins.regime_ratio = self.margins.regime_ratio.max(ratio);
            if ratio > 1.0 + AUDIT_TOL {
                self.fail(format!(
                    "t={}: f^B = {} exceeds (n - |B|) tau = {}",
                    record.t, record.f_before, cap
                ));
            }
        }

        for i in 0..self.n {
            if let Some(k) = self.frozen_phase[i] {
                if !state.is_frozen(i) {
                    self.fail(format!(
                        "t={}: index {i} frozen in phase {k} left the frozen set",
                        record.t
                    ));
                    self.frozen_phase[i] = None;
                }
            }
        }

        let thresholds = state.thresholds();
        for i in 0..self.n {
            let Some(k) = state.frozen_at(i) else {
                continue;
            };
            let (r, c) = view.weights.exact_sums(view.matrix, i);
            let tau_k = thresholds[k as usize - 1];
            let floor = (r + c) / (0.5 * tau_k);
            self.frozen_checks += 1;
            self.margins.floor_ratio = self.margins.floor_ratio.min(floor);
            if floor < 1.0 - AUDIT_TOL {
                self.fail(format!(
                    "t={}: frozen index {i} has weight {} below tau_{k}/2 = {}",
                    record.t,
                    r + c,
                    0.5 * tau_k
                ));
            }
            let imbalance = r.max(c) / r.min(c) - 1.0;
            self.margins.frozen_imbalance = self.margins.frozen_imbalance.max(imbalance);
            if imbalance > self.epsilon + BALANCE_SLACK {
                self.fail(format!(
                    "t={}: frozen index {i} has imbalance {imbalance} above {}",
                    record.t, self.epsilon
                ));
            }
        }
    }

    fn check_heavy_balanced(&mut self, phase: u32, f_contracted: f64, view: &StateView<'_>) {
        let threshold = heavy_weight_threshold(f_contracted, self.n);
        let mask = self.frozen_mask(view);
        for (i, &frozen) in mask.iter().enumerate() {
            if frozen {
                continue;
            }
            let (r, c) = view.weights.exact_sums(view.matrix, i);
            if r + c >= threshold && r.max(c) > (1.0 + self.epsilon + BALANCE_SLACK) * r.min(c) {
                self.fail(format!(
                    "end of phase {phase}: heavy index {i} (weight {}) is not balanced",
                    r + c
                ));
            }
        }
    }
}

impl TraceSink for TraceAudit {
    fn on_step(&mut self, record: &StepRecord, view: &StateView<'_>) {
        self.steps_checked += 1;
        self.check_drop(record, view);
        self.check_envelope(record, view);
        self.check_phase_bounds(record, view);
        self.prev_x = Some((record.t, view.x.clone()));
    }

    fn on_event(&mut self, event: &PhaseEvent, view: &StateView<'_>) {
        match event {
            PhaseEvent::Freeze { phase, frozen, .. } => {
                self.freeze_events += 1;
                for &(i, _) in frozen {
                    self.frozen_phase[i] = Some(*phase);
                }
            }
            PhaseEvent::Reactivation {
                phase, released, ..
            } => {
                self.reactivation_events += 1;
                for &(i, _) in released {
                    if self.frozen_phase[i] != Some(*phase) {
                        self.fail(format!(
                            "phase {phase}: released index {i} was frozen in phase {:?}",
                            self.frozen_phase[i]
                        ));
                    }
                    self.frozen_phase[i] = None;
                }
            }
            PhaseEvent::PhaseEnd {
                phase,
                f_contracted,
                ..
            } => {
                self.phase_ends += 1;
                self.check_heavy_balanced(*phase, *f_contracted, view);
            }
            PhaseEvent::PhaseStart { .. } => {}
        }
    }
}
