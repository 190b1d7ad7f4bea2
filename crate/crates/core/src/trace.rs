//! Per-step and per-event records emitted by balancing runs.

use crate::matrix::SparseNonnegMatrix;
use crate::model::{ScaledWeights, ScalingVector};
use crate::strict::FrozenSetState;

/// Dimension up to which every step is recorded; above it only every
/// `n`-th step is.
pub const FULL_TRACE_MAX_N: usize = 64;

pub(crate) fn is_sampled(n: usize, t: u64) -> bool {
    n <= FULL_TRACE_MAX_N || t.is_multiple_of(n as u64)
}

/// One balancing step, described at the state the index was chosen from.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// Global step number, starting at 1.
    pub t: u64,
    /// Phase number `s`; classic runs report 1.
    pub phase: u32,
    pub index: usize,
    pub row_before: f64,
    pub col_before: f64,
    /// `(sqrt(c_i) - sqrt(r_i))^2`.
    pub predicted_drop: f64,
    /// Observed decrease of the (contracted) objective.
    pub drop: f64,
    /// Contracted objective before the step.
    pub f_before: f64,
    /// L1 norm of the contracted gradient before the step.
    pub grad_norm: f64,
    pub active_count: usize,
    pub frozen_count: usize,
    /// Current threshold `tau_s` (zero in phase 1 and for classic runs).
    pub tau: f64,
    /// False when the drop is below `1e-15 * f_before`.
    pub productive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhaseEvent {
    PhaseStart {
        phase: u32,
        t: u64,
        f_contracted: f64,
        grad_norm: f64,
        frozen_count: usize,
    },
    PhaseEnd {
        phase: u32,
        t: u64,
        f_contracted: f64,
        grad_norm: f64,
    },
    /// Indices added to the frozen set by a freeze step, with their weights.
    Freeze {
        phase: u32,
        t: u64,
        tau: f64,
        frozen: Vec<(usize, f64)>,
    },
    /// Indices released back to active balancing, with their weights.
    Reactivation {
        phase: u32,
        t: u64,
        tau: f64,
        released: Vec<(usize, f64)>,
    },
}

/// Read-only view of a run's state handed to trace sinks.
#[derive(Clone, Copy)]
pub struct StateView<'a> {
    pub matrix: &'a SparseNonnegMatrix,
    pub x: &'a ScalingVector,
    pub weights: &'a ScaledWeights,
    pub frozen: Option<&'a FrozenSetState>,
}

pub trait TraceSink {
    fn on_step(&mut self, record: &StepRecord, view: &StateView<'_>);

    fn on_event(&mut self, _event: &PhaseEvent, _view: &StateView<'_>) {}
}

/// Discards everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl TraceSink for NullSink {
    fn on_step(&mut self, _record: &StepRecord, _view: &StateView<'_>) {}
}

/// Keeps every record and event in memory.
#[derive(Debug, Default, Clone)]
pub struct VecSink {
    pub steps: Vec<StepRecord>,
    pub events: Vec<PhaseEvent>,
}

impl TraceSink for VecSink {
    fn on_step(&mut self, record: &StepRecord, _view: &StateView<'_>) {
        self.steps.push(record.clone());
    }

    fn on_event(&mut self, event: &PhaseEvent, _view: &StateView<'_>) {
        self.events.push(event.clone());
    }
}
