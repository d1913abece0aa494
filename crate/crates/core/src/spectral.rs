//! Planck function and the monotone emission map `f(T) = ∫ α_ν B_ν(T) dν`.
//!
//! Natural units `h = k = c = 1`: `B_ν(T) = 2ν³ / (exp(ν/T) - 1)` and
//! `∫₀^∞ B_ν(T) dν = σ T⁴` with `σ = 2π⁴/15`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::quadrature::SpectralGrid;
use crate::{Error, Result};

/// Above this ratio `ν/T` the radiance is reported as 0.
pub const WIEN_CUTOFF: f64 = 700.0;

/// Below this ratio `ν/T` the Rayleigh–Jeans series is used.
pub const SERIES_CUTOFF: f64 = 1e-6;

pub fn stefan_sigma() -> f64 {
    2.0 * PI.powi(4) / 15.0
}

/// Planck radiance in natural units.
pub fn planck(nu: f64, t: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::NonPositiveFrequency(nu));
    }
    Ok(planck_unchecked(nu, t))
}

#[inline]
pub(crate) fn planck_unchecked(nu: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let x = nu / t;
    if x > WIEN_CUTOFF {
        0.0
    } else if x < SERIES_CUTOFF {
        2.0 * nu * nu * t * (1.0 - x / 2.0 + x * x / 12.0)
    } else {
        2.0 * nu * nu * nu / x.exp_m1()
    }
}

/// `∂B_ν/∂T`, strictly positive for finite `ν/T`.
pub fn planck_dt(nu: f64, t: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::NonPositiveFrequency(nu));
    }
    if !(t > 0.0) {
        return Err(Error::NonPositiveTemperature(t));
    }
    Ok(planck_dt_unchecked(nu, t))
}

#[inline]
pub(crate) fn planck_dt_unchecked(nu: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let x = nu / t;
    if x > WIEN_CUTOFF {
        return 0.0;
    }
    if x < SERIES_CUTOFF {
        // d/dT of 2ν²T(1 - x/2 + x²/12)
        return 2.0 * nu * nu * (1.0 - x * x / 12.0);
    }
    // e^x / (e^x - 1)² = 1 / (expm1(x) * (1 - e^-x))
    let denom = x.exp_m1() * -(-x).exp_m1();
    2.0 * nu.powi(3) * (x / t) / denom
}

/// Temperature whose Planck radiance at `nu` equals `intensity`.
pub fn brightness_temperature(nu: f64, intensity: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::NonPositiveFrequency(nu));
    }
    if intensity < 0.0 || intensity.is_nan() {
        return Err(Error::NegativeIntensity(intensity));
    }
    if intensity == 0.0 {
        return Ok(0.0);
    }
    Ok(nu / (2.0 * nu.powi(3) / intensity).ln_1p())
}

/// `1/T_ν` for a radiance sample; `+∞` when the radiance is zero.
#[inline]
pub(crate) fn inverse_brightness_temperature(nu: f64, intensity: f64) -> f64 {
    if intensity <= 0.0 {
        f64::INFINITY
    } else {
        (2.0 * nu.powi(3) / intensity).ln_1p() / nu
    }
}

/// How a tabulated coefficient is evaluated between table frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    /// Piecewise linear, held constant outside the table.
    #[default]
    Linear,
    /// Piecewise constant bands: `α(ν) = α_k` on `[ν_k, ν_{k+1})`.
    Step,
}

/// A frequency-dependent, temperature-independent coefficient `α_ν ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AbsorptionProfile {
    Constant(f64),
    Table {
        nu: Vec<f64>,
        alpha: Vec<f64>,
        #[serde(default)]
        interpolation: Interpolation,
    },
}

impl AbsorptionProfile {
    pub fn constant(alpha: f64) -> Result<Self> {
        let p = AbsorptionProfile::Constant(alpha);
        p.validate()?;
        Ok(p)
    }

    pub fn table(nu: Vec<f64>, alpha: Vec<f64>, interpolation: Interpolation) -> Result<Self> {
        let p = AbsorptionProfile::Table { nu, alpha, interpolation };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AbsorptionProfile::Constant(a) => {
                if !(a.is_finite() && *a >= 0.0) {
                    return Err(Error::InvalidInput(format!("coefficient must be finite and >= 0, got {a}")));
                }
            }
            AbsorptionProfile::Table { nu, alpha, .. } => {
                if nu.is_empty() || nu.len() != alpha.len() {
                    return Err(Error::InvalidInput(format!(
                        "coefficient table needs matching non-empty columns ({} frequencies, {} values)",
                        nu.len(),
                        alpha.len()
                    )));
                }
                if !nu.iter().all(|v| v.is_finite() && *v > 0.0) {
                    return Err(Error::InvalidInput("table frequencies must be finite and > 0".into()));
                }
                if nu.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidInput("table frequencies must be strictly increasing".into()));
                }
                if !alpha.iter().all(|a| a.is_finite() && *a >= 0.0) {
                    return Err(Error::InvalidInput("table coefficients must be finite and >= 0".into()));
                }
            }
        }
        Ok(())
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, AbsorptionProfile::Constant(_))
    }

    /// True when the coefficient vanishes at every frequency.
    pub fn is_zero(&self) -> bool {
        match self {
            AbsorptionProfile::Constant(a) => *a == 0.0,
            AbsorptionProfile::Table { alpha, .. } => alpha.iter().all(|a| *a == 0.0),
        }
    }

    pub fn max_value(&self) -> f64 {
        match self {
            AbsorptionProfile::Constant(a) => *a,
            AbsorptionProfile::Table { alpha, .. } => alpha.iter().cloned().fold(0.0, f64::max),
        }
    }

    pub fn at(&self, nu: f64) -> f64 {
        match self {
            AbsorptionProfile::Constant(a) => *a,
            AbsorptionProfile::Table { nu: nodes, alpha, interpolation } => {
                let n = nodes.len();
                if nu <= nodes[0] {
                    return alpha[0];
                }
                if nu >= nodes[n - 1] {
                    return alpha[n - 1];
                }
                // first index with nodes[k] > nu
                let k = nodes.partition_point(|v| *v <= nu);
                match interpolation {
                    Interpolation::Step => alpha[k - 1],
                    Interpolation::Linear => {
                        let t = (nu - nodes[k - 1]) / (nodes[k] - nodes[k - 1]);
                        alpha[k - 1] + t * (alpha[k] - alpha[k - 1])
                    }
                }
            }
        }
    }

    /// Coefficient sampled at every node of a spectral grid.
    pub fn sample(&self, grid: &SpectralGrid) -> Vec<f64> {
        grid.nodes.iter().map(|&nu| self.at(nu)).collect()
    }
}

/// `f(T) = Σ_j q_j α_j B_j(T)` on a spectral grid.
pub fn emission_integral(profile: &AbsorptionProfile, t: f64, grid: &SpectralGrid) -> Result<f64> {
    Ok(EmissionMap::new(profile, grid)?.value(t))
}

/// Inverse of [`emission_integral`] with the default temperature cap.
pub fn invert_emission(profile: &AbsorptionProfile, w: f64, grid: &SpectralGrid) -> Result<f64> {
    EmissionMap::new(profile, grid)?.invert(w)
}

/// The emission map `f` sampled on a spectral grid, with its derivative and
/// inverse. Cheap to evaluate many times.
#[derive(Debug, Clone)]
pub struct EmissionMap {
    nu: Vec<f64>,
    /// `q_j α_j`
    weights: Vec<f64>,
    t_max: f64,
}

impl EmissionMap {
    pub fn new(profile: &AbsorptionProfile, grid: &SpectralGrid) -> Result<Self> {
        if grid.nodes.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let weights = grid
            .nodes
            .iter()
            .zip(&grid.weights)
            .map(|(&nu, &q)| q * profile.at(nu))
            .collect();
        Ok(EmissionMap { nu: grid.nodes.clone(), weights, t_max: grid.t_max })
    }

    pub fn with_t_max(mut self, t_max: f64) -> Self {
        self.t_max = t_max;
        self
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn is_degenerate(&self) -> bool {
        self.weights.iter().all(|w| *w == 0.0)
    }

    pub fn value(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        self.nu.iter().zip(&self.weights).map(|(&nu, &w)| w * planck_unchecked(nu, t)).sum()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.nu.iter().zip(&self.weights).map(|(&nu, &w)| w * planck_dt_unchecked(nu, t)).sum()
    }

    /// Unique `T ≥ 0` with `f(T) = w`: bracketing bisection narrowed by
    /// safeguarded Newton steps. Residual `|f(T) - w| ≤ 1e-10 max(1, w)`.
    pub fn invert(&self, w: f64) -> Result<f64> {
        self.invert_from(w, None)
    }

    /// As [`invert`](Self::invert), starting Newton from a guess (for warm
    /// starts across fixed-point iterations).
    pub fn invert_from(&self, w: f64, guess: Option<f64>) -> Result<f64> {
        if w.is_nan() || w < 0.0 {
            return Err(Error::InvalidInput(format!("emission value must be >= 0, got {w}")));
        }
        if w == 0.0 {
            return Ok(0.0);
        }
        let f_max = self.value(self.t_max);
        if w > f_max {
            return Err(Error::NotBracketable { w, t_max: self.t_max, f_max });
        }
        let tol = 1e-10 * w.max(1.0);
        let (mut lo, mut hi) = (0.0, self.t_max);
        let mut t = match guess {
            Some(g) if g > 0.0 && g < self.t_max => g,
            // f behaves like T⁴ over the bulk of the range
            _ => (self.t_max * (w / f_max).powf(0.25)).clamp(1e-300, self.t_max),
        };
        for _ in 0..200 {
            let r = self.value(t) - w;
            if r.abs() <= tol {
                return Ok(t);
            }
            if r > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let d = self.derivative(t);
            let newton = t - r / d;
            t = if d > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                break;
            }
        }
        let r = self.value(t) - w;
        if r.abs() <= tol {
            Ok(t)
        } else {
            Err(Error::InvalidInput(format!(
                "emission inversion stalled at T = {t} (residual {r:e}, target {w})"
            )))
        }
    }
}

/// Upper bound on the truncated tail `α_max ∫_{ν_max}^∞ 2ν³ e^{-ν/T} dν`.
pub fn tail_bound(alpha_max: f64, nu_max: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let x = nu_max / t;
    alpha_max * 2.0 * t.powi(4) * (-x).exp() * (x.powi(3) + 3.0 * x * x + 6.0 * x + 6.0)
}
