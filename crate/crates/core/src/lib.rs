//! Diagonal similarity balancing of sparse nonnegative matrices.
//!
//! A matrix `A` is balanced by `D = diag(e^x)` when every row of `D A D^-1`
//! has the same norm as the matching column. In L1 this is the minimization
//! of `f(x) = sum a_ij e^(x_i - x_j)`; each Osborne step minimizes `f` along
//! one coordinate in closed form. [`run_strict`] adds a phase schedule that
//! freezes heavy indices and guarantees a strictly epsilon-balanced result.
//! L_p balancing reduces to L1 on `|a_ij|^p` (see [`preprocess`]).

pub mod audit;
pub mod diagnostics;
pub mod error;
pub mod generate;
pub mod matrix;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod preprocess;
pub mod steps;
pub mod strict;
pub mod trace;

pub use error::{BalanceError, Result};
pub use matrix::{Arc, SparseNonnegMatrix};
pub use model::{ScaledWeights, ScalingVector};
pub use pipeline::{balance_raw, BalanceConfig, BalanceResult, ComponentStatus};
pub use preprocess::{canonicalize, scc_decompose, RawMatrix};
pub use steps::{run_classic, BalanceOutcome, Termination, VariantKind, VariantPolicy};
pub use strict::{run_strict, run_strict_with, FrozenSetState, StrictOptions};
pub use trace::{NullSink, PhaseEvent, StateView, StepRecord, TraceSink, VecSink};
