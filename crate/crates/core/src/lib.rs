//! Stationary temperature of a convex body heated purely by radiation.
//!
//! The body absorbs, emits and scatters radiation, carries no heat by
//! conduction, and sits in local thermodynamic equilibrium. Its temperature
//! is fixed by the requirement that the radiation energy flux is
//! divergence-free everywhere inside. That condition turns the transport
//! equation into a non-local fixed-point problem for the temperature, which
//! this crate discretizes and solves in four regimes:
//!
//! * pure scattering ([`solvers::solve_scattering`]),
//! * grey absorption ([`solvers::solve_grey`]),
//! * frequency-dependent absorption ([`solvers::solve_spectral`]),
//! * combined absorption and scattering ([`solvers::solve_combined`]).
//!
//! All quantities are in natural units `h = k = c = 1`, so the Planck
//! radiance is `2 ν³ / (exp(ν/T) - 1)` and the Stefan–Boltzmann constant is
//! `2π⁴/15`.
//!
//! The [`entropy`] module evaluates radiation entropy density, production and
//! boundary entropy flows on solved fields.

pub mod entropy;
pub mod geometry;
pub mod numeric;
pub mod quadrature;
pub mod solvers;
pub mod spectral;
pub mod transport;

mod error;

pub use error::{Error, Result};
pub use geometry::{ConvexDomain, RayHit, Vec3};
