use serde::{Deserialize, Serialize};

use crate::quadrature::{AngularGrid, SpectralGrid};
use crate::spectral::planck_unchecked;
use crate::{Error, Result, Vec3};

/// A collimated-ish incoming beam: `B_ν(T) · max(n·d, 0)^p` where `d` is the
/// propagation direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Beam {
    pub direction: [f64; 3],
    pub temperature: f64,
    #[serde(default = "default_exponent")]
    pub exponent: f64,
}

fn default_exponent() -> f64 {
    4.0
}

/// Incoming radiance `g_ν(n) ≥ 0` prescribed on the boundary for inward
/// directions. Every variant depends on direction and frequency only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundarySource {
    Zero,
    /// Isotropic radiance `g₀`, flat in frequency.
    Constant { value: f64 },
    /// Black body at `temperature`.
    Equilibrium { temperature: f64 },
    Beams { beams: Vec<Beam> },
    /// `values[k][l]` is the radiance at `nu[k]` for `directions[l]`.
    /// Linear in frequency (zero outside the table), nearest direction.
    Tabulated { nu: Vec<f64>, directions: Vec<[f64; 3]>, values: Vec<Vec<f64>> },
    Scaled { factor: f64, source: Box<BoundarySource> },
}

impl BoundarySource {
    pub fn equilibrium(temperature: f64) -> Self {
        BoundarySource::Equilibrium { temperature }
    }

    pub fn scaled(self, factor: f64) -> Self {
        BoundarySource::Scaled { factor, source: Box::new(self) }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        match self {
            BoundarySource::Zero => Ok(()),
            BoundarySource::Constant { value } => {
                if value.is_finite() && *value >= 0.0 {
                    Ok(())
                } else {
                    bad(format!("boundary value must be finite and >= 0, got {value}"))
                }
            }
            BoundarySource::Equilibrium { temperature } => {
                if temperature.is_finite() && *temperature >= 0.0 {
                    Ok(())
                } else {
                    bad(format!("boundary temperature must be finite and >= 0, got {temperature}"))
                }
            }
            BoundarySource::Beams { beams } => {
                for b in beams {
                    let d = Vec3::from(b.direction);
                    if !(d.norm() > 0.0 && d.iter().all(|c| c.is_finite())) {
                        return bad(format!("beam direction {:?} must be a nonzero vector", b.direction));
                    }
                    if !(b.temperature.is_finite() && b.temperature >= 0.0) {
                        return bad(format!("beam temperature must be finite and >= 0, got {}", b.temperature));
                    }
                    if !(b.exponent.is_finite() && b.exponent >= 0.0) {
                        return bad(format!("beam exponent must be finite and >= 0, got {}", b.exponent));
                    }
                }
                Ok(())
            }
            BoundarySource::Tabulated { nu, directions, values } => {
                if nu.is_empty() || nu.windows(2).any(|w| w[0] >= w[1]) || nu[0] <= 0.0 {
                    return bad("tabulated boundary frequencies must be positive and strictly increasing".into());
                }
                if directions.is_empty() || directions.iter().any(|d| !(Vec3::from(*d).norm() > 0.0)) {
                    return bad("tabulated boundary needs nonzero directions".into());
                }
                if values.len() != nu.len() || values.iter().any(|row| row.len() != directions.len()) {
                    return bad(format!(
                        "tabulated boundary values must be {} rows of {} entries",
                        nu.len(),
                        directions.len()
                    ));
                }
                if values.iter().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return bad("tabulated boundary values must be finite and >= 0".into());
                }
                Ok(())
            }
            BoundarySource::Scaled { factor, source } => {
                if !(factor.is_finite() && *factor >= 0.0) {
                    return bad(format!("boundary scale factor must be finite and >= 0, got {factor}"));
                }
                source.validate()
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            BoundarySource::Zero => true,
            BoundarySource::Constant { value } => *value == 0.0,
            BoundarySource::Equilibrium { temperature } => *temperature == 0.0,
            BoundarySource::Beams { beams } => beams.iter().all(|b| b.temperature == 0.0),
            BoundarySource::Tabulated { values, .. } => values.iter().flatten().all(|v| *v == 0.0),
            BoundarySource::Scaled { factor, source } => *factor == 0.0 || source.is_zero(),
        }
    }

    /// Highest temperature that characterizes the source, if any; used to
    /// place the spectral truncation.
    pub fn characteristic_temperature(&self) -> Option<f64> {
        match self {
            BoundarySource::Equilibrium { temperature } => Some(*temperature),
            BoundarySource::Beams { beams } => beams.iter().map(|b| b.temperature).reduce(f64::max),
            BoundarySource::Scaled { source, .. } => source.characteristic_temperature(),
            _ => None,
        }
    }

    /// Radiance travelling in direction `n` (unit) at frequency `nu`.
    pub fn radiance(&self, n: &Vec3, nu: f64) -> f64 {
        match self {
            BoundarySource::Zero => 0.0,
            BoundarySource::Constant { value } => *value,
            BoundarySource::Equilibrium { temperature } => planck_unchecked(nu, *temperature),
            BoundarySource::Beams { beams } => beams
                .iter()
                .map(|b| {
                    let d = Vec3::from(b.direction).normalize();
                    let c = n.dot(&d).max(0.0);
                    if c == 0.0 {
                        0.0
                    } else {
                        planck_unchecked(nu, b.temperature) * c.powf(b.exponent)
                    }
                })
                .sum(),
            BoundarySource::Tabulated { nu: nus, directions, values } => {
                let l = directions
                    .iter()
                    .enumerate()
                    .map(|(l, d)| (l, n.dot(&Vec3::from(*d).normalize())))
                    .max_by(|a, b| a.1.total_cmp(&b.1))
                    .map(|(l, _)| l)
                    .unwrap_or(0);
                if nu < nus[0] || nu > nus[nus.len() - 1] {
                    return 0.0;
                }
                let k = nus.partition_point(|&v| v <= nu);
                if k == 0 || k == nus.len() {
                    return values[k.min(nus.len() - 1)][l];
                }
                let t = (nu - nus[k - 1]) / (nus[k] - nus[k - 1]);
                values[k - 1][l] + t * (values[k][l] - values[k - 1][l])
            }
            BoundarySource::Scaled { factor, source } => factor * source.radiance(n, nu),
        }
    }

    /// `g(n_i, ν_j)` on the grids, row-major `[i][j]`.
    pub fn tabulate(&self, angular: &AngularGrid, spectral: &SpectralGrid) -> BoundaryTable {
        let f = spectral.len();
        let mut values = Vec::with_capacity(angular.len() * f);
        for n in &angular.nodes {
            values.extend(spectral.nodes.iter().map(|&nu| self.radiance(n, nu)));
        }
        BoundaryTable { n_freq: f, values }
    }
}

/// Boundary radiance on the discrete directions and frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTable {
    n_freq: usize,
    values: Vec<f64>,
}

impl BoundaryTable {
    pub fn zeros(n_dirs: usize, n_freq: usize) -> Self {
        BoundaryTable { n_freq, values: vec![0.0; n_dirs * n_freq] }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_freq..(i + 1) * self.n_freq]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{build_angular, build_spectral};
    use crate::spectral::planck;

    #[test]
    fn variants_evaluate_as_documented() {
        let n = Vec3::new(0.0, 0.0, 1.0);
        assert_eq!(BoundarySource::Zero.radiance(&n, 1.0), 0.0);
        assert_eq!(BoundarySource::Constant { value: 3.0 }.radiance(&n, 7.0), 3.0);
        let eq = BoundarySource::equilibrium(1.0);
        assert_eq!(eq.radiance(&n, 2.0), planck(2.0, 1.0).unwrap());
        assert_eq!(eq.clone().scaled(2.0).radiance(&n, 2.0), 2.0 * planck(2.0, 1.0).unwrap());
        let beam = BoundarySource::Beams {
            beams: vec![Beam { direction: [0.0, 0.0, 2.0], temperature: 1.0, exponent: 2.0 }],
        };
        assert_eq!(beam.radiance(&-n, 1.0), 0.0);
        let tilted = Vec3::new(0.6, 0.0, 0.8);
        assert!((beam.radiance(&tilted, 1.0) - 0.64 * planck(1.0, 1.0).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn tabulated_source_interpolates_in_frequency() {
        let src = BoundarySource::Tabulated {
            nu: vec![1.0, 3.0],
            directions: vec![[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]],
            values: vec![vec![1.0, 10.0], vec![3.0, 30.0]],
        };
        src.validate().unwrap();
        let up = Vec3::new(0.0, 0.1, 0.99).normalize();
        assert!((src.radiance(&up, 2.0) - 2.0).abs() < 1e-14);
        assert!((src.radiance(&-up, 2.0) - 20.0).abs() < 1e-14);
        assert_eq!(src.radiance(&up, 5.0), 0.0);
        assert_eq!(src.radiance(&up, 3.0), 3.0);
    }

    #[test]
    fn validation_rejects_negative_data() {
        assert!(BoundarySource::Constant { value: -1.0 }.validate().is_err());
        assert!(BoundarySource::equilibrium(f64::NAN).validate().is_err());
        assert!(BoundarySource::Zero.scaled(-2.0).validate().is_err());
        let ragged = BoundarySource::Tabulated { nu: vec![1.0], directions: vec![[1.0, 0.0, 0.0]], values: vec![vec![]] };
        assert!(ragged.validate().is_err());
    }

    #[test]
    fn table_layout_is_direction_major() {
        let ang = build_angular(2, 4).unwrap();
        let sp = build_spectral(1.0, 8).unwrap();
        let t = BoundarySource::equilibrium(1.0).tabulate(&ang, &sp);
        assert_eq!(t.row(3).len(), 8);
        assert_eq!(t.row(3)[5], planck(sp.nodes[5], 1.0).unwrap());
        assert!(!t.is_zero());
    }
}
