use thiserror::Error;

use crate::solvers::SolverReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {0:?} is not strictly inside the domain")]
    NotInterior([f64; 3]),

    #[error("direction {0:?} is not a unit vector (|n| - 1 = {1:e})")]
    NotUnit([f64; 3], f64),

    #[error("point {0:?} is not on the boundary (shape residual {1:e})")]
    NotOnBoundary([f64; 3], f64),

    #[error("frequency must be positive, got {0}")]
    NonPositiveFrequency(f64),

    #[error("temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),

    #[error("intensity must be non-negative, got {0}")]
    NegativeIntensity(f64),

    #[error("spectral grid is empty")]
    EmptyGrid,

    #[error("emission value {w} exceeds f(T_max) = {f_max} at T_max = {t_max}")]
    NotBracketable { w: f64, t_max: f64, f_max: f64 },

    #[error("inverting the emission map failed at node {node}: {source}")]
    InversionFailure {
        node: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("resolution too coarse: {0}")]
    TooCoarse(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("problem too large for the dense oracle: {unknowns} unknowns (limit {limit})")]
    TooLarge { unknowns: usize, limit: usize },

    #[error("no convergence after {} iterations (last residual {:e})", .0.iterations, .0.final_residual())]
    MaxIterExceeded(Box<SolverReport>),

    #[error("inner transport solve did not converge in outer iteration {outer}: residual {residual:e}")]
    InnerDiverged { outer: usize, residual: f64 },

    #[error("boundary source divergence is negative ({value:e}) at node {node}")]
    NegativeSource { node: usize, value: f64 },

    #[error("iterate {value:e} exceeded the a-priori cap {cap:e} at node {node}")]
    CapExceeded { node: usize, value: f64, cap: f64 },

    #[error("temperature is indeterminate without absorption; use the pure scattering solver")]
    Indeterminate,

    #[error("invariant violated: {0}")]
    InvariantViolation(String),
}
