//! Command-line front end for the `osborne` balancing library: reads a matrix,
//! balances it, and writes a JSON report and an optional CSV trace.

pub mod error;
pub mod input;
pub mod report;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};
use osborne::pipeline::{BalanceResult, STRICT_MAX_EPSILON};
use osborne::{balance_raw, BalanceConfig, BalanceError, Termination, VariantKind, VariantPolicy};

pub use error::CliError;
pub use input::{parse_matrix, read_matrix, MatrixFormat};
pub use report::{ComponentSummary, RunReport};

/// Exit code when every nontrivial component reached the tolerance.
pub const EXIT_BALANCED: i32 = 0;
/// Exit code for usage, input and output errors.
pub const EXIT_ERROR: i32 = 1;
/// Exit code when a step cap stopped a run.
pub const EXIT_ITERATION_CAP: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    Strict,
    RoundRobin,
    Greedy,
    UniformRandom,
}

impl Variant {
    fn kind(self) -> VariantKind {
        match self {
            Variant::Strict => VariantKind::Strict,
            Variant::RoundRobin => VariantKind::RoundRobin,
            Variant::Greedy => VariantKind::Greedy,
            Variant::UniformRandom => VariantKind::UniformRandom,
        }
    }
}

/// Balance a square matrix by diagonal similarity.
#[derive(Debug, Clone, PartialEq, Parser)]
#[command(name = "osborne", version)]
pub struct RunConfig {
    /// Matrix file (Matrix Market coordinate or dense CSV).
    #[arg(long)]
    pub input: PathBuf,

    /// Input format; inferred from the file extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<MatrixFormat>,

    /// Norm exponent p >= 1.
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,

    /// Target imbalance: every index ends with max/min of its row and
    /// column L_p norms at most 1 + epsilon.
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,

    #[arg(long, value_enum, default_value_t = Variant::Strict)]
    pub variant: Variant,

    /// Step cap per strongly connected component.
    #[arg(long)]
    pub max_iters: Option<u64>,

    /// Seed for the uniform-random variant.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Write the convergence trace as CSV to this path.
    #[arg(long)]
    pub trace: Option<PathBuf>,

    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,

    /// Components balanced concurrently.
    #[arg(long, env = "OSBORNE_WORKERS", default_value_t = 1)]
    pub workers: usize,
}

impl RunConfig {
    /// Config with defaults for everything but the input path.
    pub fn new(input: impl Into<PathBuf>) -> Self {
        Self {
            input: input.into(),
            format: None,
            p: 1.0,
            epsilon: 0.01,
            variant: Variant::Strict,
            max_iters: None,
            seed: 0,
            trace: None,
            report: None,
            workers: 1,
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        if !(self.p.is_finite() && self.p >= 1.0) {
            return Err(CliError::Usage(format!("--p must be >= 1, got {}", self.p)));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= STRICT_MAX_EPSILON) {
            return Err(CliError::Usage(format!(
                "--epsilon must lie in (0, 0.5], got {}",
                self.epsilon
            )));
        }
        if self.max_iters == Some(0) {
            return Err(CliError::Usage("--max-iters must be positive".into()));
        }
        Ok(())
    }

    fn matrix_format(&self) -> Result<MatrixFormat, CliError> {
        self.format
            .or_else(|| MatrixFormat::from_extension(&self.input))
            .ok_or_else(|| {
                CliError::Usage(format!(
                    "cannot infer the format of {}; pass --format",
                    self.input.display()
                ))
            })
    }

    fn balance_config(&self) -> BalanceConfig {
        BalanceConfig {
            p: self.p,
            epsilon: self.epsilon,
            variant: VariantPolicy::new(self.variant.kind(), self.seed),
            max_iters: self.max_iters,
            workers: self.workers.max(1),
            trace: self.trace.is_some(),
        }
    }
}

/// Outcome of [`execute`].
#[derive(Debug, Clone)]
pub struct Execution {
    pub report: RunReport,
    pub result: BalanceResult,
}

impl Execution {
    pub fn exit_code(&self) -> i32 {
        match self.result.termination {
            Termination::Balanced => EXIT_BALANCED,
            Termination::IterationCap => EXIT_ITERATION_CAP,
        }
    }
}

fn build_report(config: &RunConfig, n: usize, result: &BalanceResult, seconds: f64) -> RunReport {
    let strict = config.variant == Variant::Strict;
    let components = result
        .components
        .iter()
        .map(|c| ComponentSummary {
            id: c.id,
            nodes: c.nodes.clone(),
            status: c.status.name().to_string(),
            steps: c.steps,
            phases: strict.then_some(c.phases),
            reactivations: strict.then_some(c.reactivations),
            strict_exit: c.strict_exit.map(|e| e.name().to_string()),
            max_imbalance: c.max_imbalance,
            f_initial: c.f_initial,
            f_final: c.f_final,
        })
        .collect();
    RunReport {
        termination: result.termination.name().to_string(),
        variant: config.variant.kind().name().to_string(),
        n,
        p: config.p,
        epsilon: config.epsilon,
        canonical_epsilon: result.canonical_epsilon,
        seed: config.seed,
        iterations: result.steps,
        phases: strict.then_some(result.phases),
        reactivations: strict.then_some(result.reactivations),
        max_imbalance: result.max_imbalance,
        f_initial: result.f_initial,
        f_final: result.f_final,
        components,
        x: result.x_canonical.as_slice().to_vec(),
        x_over_p: (config.p != 1.0).then(|| result.x.as_slice().to_vec()),
        wall_time_seconds: seconds,
    }
}

/// Reads, balances and builds the report without writing any output.
pub fn execute(config: &RunConfig) -> Result<Execution, CliError> {
    config.validate()?;
    let format = config.matrix_format()?;
    let raw = read_matrix(&config.input, format)?;
    let balance = config.balance_config();
    let start = Instant::now();
    let result = balance_raw(&raw, &balance)?;
    let seconds = start.elapsed().as_secs_f64();
    let report = build_report(config, raw.n, &result, seconds);
    Ok(Execution { report, result })
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

/// Runs `config` end to end and returns the process exit code. Errors are
/// printed to stderr.
pub fn run(config: &RunConfig) -> i32 {
    match run_inner(config) {
        Ok(code) => code,
        Err(CliError::Balance(BalanceError::StepBudgetExhausted { .. })) => {
            eprintln!("osborne: strict run exceeded its step budget");
            EXIT_ITERATION_CAP
        }
        Err(e) => {
            eprintln!("osborne: {e}");
            EXIT_ERROR
        }
    }
}

fn run_inner(config: &RunConfig) -> Result<i32, CliError> {
    let execution = execute(config)?;
    if let Some(path) = &config.trace {
        let mut out = create(path)?;
        report::write_trace(&execution.result.trace, &mut out)?;
        out.flush().map_err(|e| CliError::io(path, e))?;
    }
    match &config.report {
        Some(path) => {
            let mut out = create(path)?;
            report::write_report(&execution.report, &mut out)?;
            out.flush().map_err(|e| CliError::io(path, e))?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            report::write_report(&execution.report, &mut lock)?;
            lock.flush().map_err(|e| CliError::io("<stdout>", e))?;
        }
    }
    Ok(execution.exit_code())
}
