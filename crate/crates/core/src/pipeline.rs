//! End-to-end balancing of a raw matrix: canonical reduction, component
//! decomposition, one run per nontrivial component, reassembly.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::error::{BalanceError, Result};
use crate::model::{f_value, ScalingVector};
use crate::preprocess::{
    canonical_epsilon, canonicalize, scc_decompose, uncanonicalize_scaling, CanonicalInstance,
    Component, RawMatrix, SccDecomposition,
};
use crate::steps::{
    run_classic, BalanceOutcome, StrictExit, Termination, VariantKind, VariantPolicy,
};
use crate::strict::{run_strict_with, StrictOptions};
use crate::trace::{StateView, StepRecord, TraceSink};

/// Step cap for classic variants when none is given.
pub const DEFAULT_CLASSIC_MAX_ITERS: u64 = 100_000_000;

/// Largest canonical tolerance accepted by the strict variant.
pub const STRICT_MAX_EPSILON: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceConfig {
    /// Norm exponent, `p >= 1`.
    pub p: f64,
    /// Tolerance in the user's L_p norm.
    pub epsilon: f64,
    pub variant: VariantPolicy,
    /// Per-component step cap.
    pub max_iters: Option<u64>,
    /// Components balanced concurrently; 0 is treated as 1.
    pub workers: usize,
    /// Collect sampled step records.
    pub trace: bool,
}

impl Default for BalanceConfig {
    fn default() -> Self {
        Self {
            p: 1.0,
            epsilon: 0.01,
            variant: VariantPolicy::new(VariantKind::Strict, 0),
            max_iters: None,
            workers: 1,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentStatus {
    Balanced,
    IterationCap,
    /// Singleton without cross-component arcs.
    Vacuous,
    /// Singleton with arcs to or from other components: no scaling can
    /// balance it.
    Unbalanceable,
}

impl ComponentStatus {
    pub fn name(self) -> &'static str {
        match self {
            ComponentStatus::Balanced => "balanced",
            ComponentStatus::IterationCap => "iteration_cap",
            ComponentStatus::Vacuous => "vacuous",
            ComponentStatus::Unbalanceable => "unbalanceable: cross-component",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentReport {
    pub id: usize,
    pub nodes: Vec<usize>,
    pub status: ComponentStatus,
    pub steps: u64,
    pub phases: u32,
    pub reactivations: u64,
    pub strict_exit: Option<StrictExit>,
    /// Largest per-index `max/min - 1` in the user's norm.
    pub max_imbalance: f64,
    /// Canonical objective of the component at the start and end.
    pub f_initial: f64,
    pub f_final: f64,
}

/// A step record rewritten to global indices. `t` counts steps across all
/// components in component order.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub component: usize,
    pub record: StepRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalanceResult {
    pub termination: Termination,
    pub canonical_epsilon: f64,
    /// Scaling of the canonical L1 instance.
    pub x_canonical: ScalingVector,
    /// Scaling of the raw matrix in the L_p norm, `x_canonical / p`.
    pub x: ScalingVector,
    pub steps: u64,
    /// Largest phase count over components.
    pub phases: u32,
    pub reactivations: u64,
    /// Largest per-index imbalance over nontrivial components, user's norm.
    pub max_imbalance: f64,
    /// Canonical objective of the whole matrix, cross arcs included.
    pub f_initial: f64,
    pub f_final: f64,
    pub components: Vec<ComponentReport>,
    pub trace: Vec<TraceRow>,
}

struct Collector {
    enabled: bool,
    rows: Vec<StepRecord>,
}

impl TraceSink for Collector {
    fn on_step(&mut self, record: &StepRecord, _view: &StateView<'_>) {
        if self.enabled {
            self.rows.push(record.clone());
        }
    }
}

struct ComponentRun {
    outcome: BalanceOutcome,
    trace: Vec<StepRecord>,
}

/// Converts a canonical-norm ratio `max/min - 1` to the L_p norm.
pub fn user_norm_ratio(canonical_ratio: f64, p: f64) -> f64 {
    (1.0 + canonical_ratio).powf(1.0 / p) - 1.0
}

/// Canonical tolerance actually used for `config`: `(1+eps)^p - 1`, capped
/// at 1/2 for the strict variant.
pub fn effective_epsilon(config: &BalanceConfig) -> f64 {
    let eps = canonical_epsilon(config.epsilon, config.p);
    if config.variant.kind == VariantKind::Strict {
        eps.min(STRICT_MAX_EPSILON)
    } else {
        eps
    }
}

fn validate(config: &BalanceConfig) -> Result<()> {
    if !(config.p.is_finite() && config.p >= 1.0) {
        return Err(BalanceError::InvalidExponent(config.p));
    }
    let upper = if config.variant.kind == VariantKind::Strict {
        STRICT_MAX_EPSILON
    } else {
        f64::INFINITY
    };
    if !(config.epsilon > 0.0 && config.epsilon <= upper) {
        return Err(BalanceError::InvalidEpsilon(config.epsilon));
    }
    if config.max_iters == Some(0) {
        return Err(BalanceError::InvalidIterationLimit);
    }
    Ok(())
}

fn run_component(
    component: &Component,
    config: &BalanceConfig,
    epsilon: f64,
) -> Result<ComponentRun> {
    let mut sink = Collector {
        enabled: config.trace,
        rows: Vec::new(),
    };
    let outcome = match config.variant.kind {
        VariantKind::Strict => run_strict_with(
            &component.matrix,
            epsilon,
            StrictOptions {
                max_steps: config.max_iters,
            },
            &mut sink,
        )?,
        _ => run_classic(
            &component.matrix,
            config.variant,
            epsilon,
            config.max_iters.unwrap_or(DEFAULT_CLASSIC_MAX_ITERS),
            &mut sink,
        )?,
    };
    Ok(ComponentRun {
        outcome,
        trace: sink.rows,
    })
}

fn run_components(
    jobs: &[&Component],
    config: &BalanceConfig,
    epsilon: f64,
) -> Vec<Result<ComponentRun>> {
    let workers = config.workers.clamp(1, jobs.len().max(1));
    if workers == 1 {
        return jobs
            .iter()
            .map(|c| run_component(c, config, epsilon))
            .collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<ComponentRun>>>> =
        jobs.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= jobs.len() {
                    break;
                }
                let result = run_component(jobs[k], config, epsilon);
                *slots[k].lock().expect("result slot poisoned") = Some(result);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| {
            slot.into_inner()
                .expect("result slot poisoned")
                .expect("every job runs")
        })
        .collect()
}

/// Balances `raw` in the L_p norm according to `config`.
pub fn balance_raw(raw: &RawMatrix, config: &BalanceConfig) -> Result<BalanceResult> {
    validate(config)?;
    let instance = canonicalize(raw, config.p)?;
    let scc = scc_decompose(&instance.matrix);
    balance_canonical(&instance, &scc, config)
}

/// As [`balance_raw`] on an instance already reduced and decomposed.
pub fn balance_canonical(
    instance: &CanonicalInstance,
    scc: &SccDecomposition,
    config: &BalanceConfig,
) -> Result<BalanceResult> {
    validate(config)?;
    let n = instance.n();
    let epsilon = effective_epsilon(config);

    let jobs: Vec<&Component> = scc
        .components
        .iter()
        .filter(|c| !c.is_singleton())
        .collect();
    let mut runs = run_components(&jobs, config, epsilon).into_iter();

    let mut x = vec![0.0; n];
    let mut components = Vec::with_capacity(scc.components.len());
    let mut trace = Vec::new();
    let mut steps = 0u64;
    let mut phases = 0u32;
    let mut reactivations = 0u64;
    let mut max_imbalance = 0.0f64;
    let mut termination = Termination::Balanced;

    for (id, component) in scc.components.iter().enumerate() {
        if component.is_singleton() {
            let node = component.nodes[0];
            let status = if scc.touches_cross_arc(node) {
                ComponentStatus::Unbalanceable
            } else {
                ComponentStatus::Vacuous
            };
            components.push(ComponentReport {
                id,
                nodes: component.nodes.clone(),
                status,
                steps: 0,
                phases: 0,
                reactivations: 0,
                strict_exit: None,
                max_imbalance: 0.0,
                f_initial: 0.0,
                f_final: 0.0,
            });
            continue;
        }
        let run = runs.next().expect("one run per nontrivial component")?;
        let outcome = run.outcome;
        for row in run.trace {
            let mut record = row;
            record.t += steps;
            record.index = component.nodes[record.index];
            trace.push(TraceRow {
                component: id,
                record,
            });
        }
        for (local, &global) in component.nodes.iter().enumerate() {
            x[global] = outcome.x.get(local);
        }
        let status = match outcome.termination {
            Termination::Balanced => ComponentStatus::Balanced,
            Termination::IterationCap => {
                termination = Termination::IterationCap;
                ComponentStatus::IterationCap
            }
        };
        let user_ratio = user_norm_ratio(outcome.max_imbalance, config.p);
        max_imbalance = max_imbalance.max(user_ratio);
        steps += outcome.steps;
        phases = phases.max(outcome.phases);
        reactivations += outcome.reactivations;
        components.push(ComponentReport {
            id,
            nodes: component.nodes.clone(),
            status,
            steps: outcome.steps,
            phases: outcome.phases,
            reactivations: outcome.reactivations,
            strict_exit: outcome.strict_exit,
            max_imbalance: user_ratio,
            f_initial: outcome.f_initial,
            f_final: outcome.f_final,
        });
    }

    let x_canonical = ScalingVector::from(x);
    let f_initial = f_value(&instance.matrix, &ScalingVector::zeros(n))?;
    let f_final = f_value(&instance.matrix, &x_canonical)?;
    Ok(BalanceResult {
        termination,
        canonical_epsilon: epsilon,
        x: uncanonicalize_scaling(&x_canonical, config.p)?,
        x_canonical,
        steps,
        phases,
        reactivations,
        max_imbalance,
        f_initial,
        f_final,
        components,
        trace,
    })
}
