//! Fixed-point solvers for the four regimes, the Duhamel-series
//! certificate for the combined case, and a dense brute-force oracle.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::transport::{InnerOptions, KernelOptions, RadiationField, ScalarField};
use crate::{Error, Result};

mod combined;
mod green;
mod grey;
mod oracle;
mod scattering;
mod spectral;

pub use combined::solve_combined;
pub use green::{compute_h, duhamel_depth, h_bound, GreenReport};
pub use grey::solve_grey;
pub use oracle::{oracle_solve, OracleMode, OracleSolution, ORACLE_LIMIT};
pub use scattering::solve_scattering;
pub use spectral::solve_spectral;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIterExceeded,
}

/// Iteration history and diagnostics of one solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub mode: String,
    pub status: Status,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    /// `residual_{k+1} / residual_k`.
    pub contraction_estimates: Vec<f64>,
    /// Max relative conservation defect of the returned field.
    pub conservation_norm: f64,
    pub wall_time: f64,
    /// Duhamel terms needed for the combined-case certificate.
    pub truncation_terms: Option<usize>,
    /// Inner transport iterations per outer step (combined case).
    pub inner_iterations: Vec<usize>,
    pub notes: Vec<String>,
}

impl SolverReport {
    pub fn new(mode: &str) -> Self {
        SolverReport {
            mode: mode.to_string(),
            status: Status::MaxIterExceeded,
            iterations: 0,
            residual_history: Vec::new(),
            contraction_estimates: Vec::new(),
            conservation_norm: f64::NAN,
            wall_time: 0.0,
            truncation_terms: None,
            inner_iterations: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::NAN)
    }

    pub fn max_contraction(&self) -> f64 {
        self.contraction_estimates.iter().copied().fold(0.0, f64::max)
    }
}

/// Controls shared by all solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub kernel: KernelOptions,
    pub inner: InnerOptions,
    /// A radiance field is materialized only if it has at most this many
    /// values.
    pub field_limit: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-8,
            max_iter: 500,
            kernel: KernelOptions::default(),
            inner: InnerOptions::default(),
            field_limit: 20_000_000,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) || !(self.inner.tol > 0.0) {
            return Err(Error::InvalidInput("tolerances must be > 0".into()));
        }
        if self.max_iter == 0 || self.inner.max_iter == 0 {
            return Err(Error::InvalidInput("iteration limits must be >= 1".into()));
        }
        Ok(())
    }
}

/// Output of the temperature solvers.
#[derive(Debug, Clone)]
pub struct TemperatureSolution {
    /// `σT⁴` (grey) or `f(T)`.
    pub emission: ScalarField,
    pub temperature: ScalarField,
    /// Present when requested and small enough.
    pub field: Option<RadiationField>,
    pub report: SolverReport,
}

/// Residual bookkeeping with the monotone-decay invariant.
pub(crate) struct Monitor {
    pub report: SolverReport,
    start: Instant,
    tol: f64,
}

/// Relative growth tolerated between consecutive residuals before the
/// monotone-decay invariant is considered broken.
const MONOTONE_SLACK: f64 = 1e-6;

/// Residuals below this are rounding noise and exempt from the decay check.
const NOISE_FLOOR: f64 = 1e-13;

impl Monitor {
    pub fn new(mode: &str, tol: f64) -> Self {
        Monitor { report: SolverReport::new(mode), start: Instant::now(), tol }
    }

    /// Records a residual; returns `true` once converged.
    pub fn push(&mut self, residual: f64) -> Result<bool> {
        if !residual.is_finite() {
            return Err(Error::InvariantViolation(format!(
                "{} residual became non-finite at iteration {}",
                self.report.mode,
                self.report.iterations + 1
            )));
        }
        let r = &mut self.report;
        if let Some(&prev) = r.residual_history.last() {
            if prev > 0.0 {
                r.contraction_estimates.push(residual / prev);
            }
            if residual > prev * (1.0 + MONOTONE_SLACK) && residual > NOISE_FLOOR {
                return Err(Error::InvariantViolation(format!(
                    "{} residual increased from {prev:e} to {residual:e} at iteration {}",
                    r.mode,
                    r.iterations + 1
                )));
            }
        }
        r.residual_history.push(residual);
        r.iterations += 1;
        Ok(residual <= self.tol)
    }

    pub fn finish(mut self, converged: bool) -> SolverReport {
        self.report.status = if converged { Status::Converged } else { Status::MaxIterExceeded };
        self.report.wall_time = self.start.elapsed().as_secs_f64();
        self.report
    }
}

/// Relative L¹ change, zero when both iterates vanish.
pub(crate) fn relative_change(next: &[f64], prev: &[f64]) -> f64 {
    let d = crate::transport::l1_diff(next, prev);
    let s = crate::transport::l1(next);
    if s > 0.0 {
        d / s
    } else {
        d
    }
}
