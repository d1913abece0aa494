use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::quadrature::{AngularGrid, SpectralGrid};
use crate::spectral::AbsorptionProfile;
use crate::{Error, Result};

/// Angular redistribution law for scattering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngularKernel {
    /// `K(n, n') = 1/(4π)`.
    Isotropic,
    /// Henyey–Greenstein phase function with asymmetry `g ∈ (-1, 1)`,
    /// tabulated on the angular grid.
    HenyeyGreenstein(f64),
    /// `table[i][i'] = K(n_i, n_i')` on the angular grid in use.
    Table(Vec<Vec<f64>>),
}

/// Absorption and scattering coefficients plus the scattering law. The
/// coefficients depend on frequency only; the scattering law is the same at
/// every frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediumSpec {
    pub absorption: AbsorptionProfile,
    pub scattering: AbsorptionProfile,
    pub kernel: AngularKernel,
}

impl MediumSpec {
    pub fn absorbing(absorption: AbsorptionProfile) -> Self {
        MediumSpec {
            absorption,
            scattering: AbsorptionProfile::Constant(0.0),
            kernel: AngularKernel::Isotropic,
        }
    }

    pub fn scattering(scattering: AbsorptionProfile) -> Self {
        MediumSpec {
            absorption: AbsorptionProfile::Constant(0.0),
            scattering,
            kernel: AngularKernel::Isotropic,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.absorption.validate()?;
        self.scattering.validate()?;
        match &self.kernel {
            AngularKernel::Isotropic => {}
            AngularKernel::HenyeyGreenstein(g) => {
                if !(g.is_finite() && g.abs() < 1.0) {
                    return Err(Error::InvalidInput(format!("Henyey-Greenstein asymmetry must lie in (-1, 1), got {g}")));
                }
            }
            AngularKernel::Table(t) => {
                if t.iter().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::InvalidInput("scattering kernel entries must be finite and >= 0".into()));
                }
            }
        }
        Ok(())
    }

    pub fn is_isotropic(&self) -> bool {
        matches!(self.kernel, AngularKernel::Isotropic)
    }

    /// `(α^a_j, α^s_j)` at every spectral node.
    pub fn sample(&self, spectral: &SpectralGrid) -> SampledMedium {
        SampledMedium {
            absorption: self.absorption.sample(spectral),
            scattering: self.scattering.sample(spectral),
        }
    }
}

/// Coefficients evaluated on the spectral grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledMedium {
    pub absorption: Vec<f64>,
    pub scattering: Vec<f64>,
}

impl SampledMedium {
    pub fn extinction(&self) -> Vec<f64> {
        self.absorption.iter().zip(&self.scattering).map(|(a, s)| a + s).collect()
    }
}

/// Frequencies sharing identical `(α^a, α^s)`; operators that only depend
/// on the coefficients are built once per group.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGroup {
    pub absorption: f64,
    pub scattering: f64,
    pub members: Vec<usize>,
}

impl SpectralGroup {
    pub fn extinction(&self) -> f64 {
        self.absorption + self.scattering
    }
}

pub fn spectral_groups(medium: &SampledMedium) -> Vec<SpectralGroup> {
    let mut groups: Vec<SpectralGroup> = Vec::new();
    for (j, (&a, &s)) in medium.absorption.iter().zip(&medium.scattering).enumerate() {
        match groups.iter_mut().find(|g| g.absorption == a && g.scattering == s) {
            Some(g) => g.members.push(j),
            None => groups.push(SpectralGroup { absorption: a, scattering: s, members: vec![j] }),
        }
    }
    groups
}

const SINKHORN_MAX_ITER: usize = 10_000;

/// Scattering kernel on a specific angular grid, balanced so that
/// `Σ_i w_i K(n_i, n') = 1` for every `n'` and `Σ_i' w_i' K(n, n_i') = 1`
/// for every `n`.
#[derive(Debug, Clone, PartialEq)]
pub enum DiscreteKernel {
    Isotropic,
    /// Row-major `[i][i']`, already multiplied by the weight `w_i'`, so the
    /// scattered radiance is `Σ_i' matrix[i][i'] I(n_i')`.
    Matrix { n: usize, matrix: Vec<f64>, max_correction: f64 },
}

impl DiscreteKernel {
    pub fn new(kernel: &AngularKernel, angular: &AngularGrid) -> Result<Self> {
        let n = angular.len();
        let raw: Vec<f64> = match kernel {
            AngularKernel::Isotropic => return Ok(DiscreteKernel::Isotropic),
            AngularKernel::HenyeyGreenstein(g) => {
                let mut v = Vec::with_capacity(n * n);
                for a in &angular.nodes {
                    for b in &angular.nodes {
                        let mu = a.dot(b);
                        v.push((1.0 - g * g) / (4.0 * PI * (1.0 + g * g - 2.0 * g * mu).powf(1.5)));
                    }
                }
                v
            }
            AngularKernel::Table(t) => {
                if t.len() != n || t.iter().any(|row| row.len() != n) {
                    return Err(Error::InvalidInput(format!(
                        "scattering table must be {n} x {n} to match the angular grid"
                    )));
                }
                t.iter().flatten().copied().collect()
            }
        };
        // balance A = w K w to row and column sums w (Sinkhorn), so the
        // discrete kernel both conserves energy and preserves isotropy
        let w = &angular.weights;
        let mut a: Vec<f64> = (0..n * n).map(|k| w[k / n] * raw[k] * w[k % n]).collect();
        for col in 0..n {
            if !((0..n).any(|i| a[i * n + col] > 0.0)) {
                return Err(Error::InvalidInput(format!(
                    "scattering kernel has zero mass for incoming direction {col}"
                )));
            }
        }
        let original = a.clone();
        for _ in 0..SINKHORN_MAX_ITER {
            for i in 0..n {
                let row: f64 = a[i * n..(i + 1) * n].iter().sum();
                a[i * n..(i + 1) * n].iter_mut().for_each(|v| *v *= w[i] / row);
            }
            let mut defect: f64 = 0.0;
            for col in 0..n {
                let sum: f64 = (0..n).map(|i| a[i * n + col]).sum();
                defect = defect.max((sum / w[col] - 1.0).abs());
                for i in 0..n {
                    a[i * n + col] *= w[col] / sum;
                }
            }
            if defect < 1e-15 {
                break;
            }
        }
        let max_correction = a
            .iter()
            .zip(&original)
            .filter(|(_, o)| **o > 0.0)
            .map(|(v, o)| (v / o - 1.0).abs())
            .fold(0.0, f64::max);
        let matrix: Vec<f64> = (0..n * n).map(|k| a[k] / w[k / n]).collect();
        Ok(DiscreteKernel::Matrix { n, matrix, max_correction })
    }

    /// Largest relative change applied by renormalization (0 if isotropic).
    pub fn correction(&self) -> f64 {
        match self {
            DiscreteKernel::Isotropic => 0.0,
            DiscreteKernel::Matrix { max_correction, .. } => *max_correction,
        }
    }

    /// Largest deviation of either normalization sum from one.
    pub fn normalization_defect(&self, angular: &AngularGrid) -> f64 {
        match self {
            DiscreteKernel::Isotropic => (angular.weights.iter().sum::<f64>() / (4.0 * PI) - 1.0).abs(),
            DiscreteKernel::Matrix { n, matrix, .. } => (0..*n)
                .map(|k| {
                    let mass: f64 =
                        (0..*n).map(|i| angular.weights[i] * matrix[i * n + k] / angular.weights[k]).sum();
                    let row: f64 = matrix[k * n..(k + 1) * n].iter().sum();
                    (mass - 1.0).abs().max((row - 1.0).abs())
                })
                .fold(0.0, f64::max),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{build_angular, build_spectral};
    use crate::spectral::Interpolation;

    #[test]
    fn groups_collect_equal_coefficients() {
        let sp = build_spectral(1.0, 16).unwrap();
        let m = MediumSpec {
            absorption: AbsorptionProfile::table(vec![1.0, 10.0], vec![1.0, 2.0], Interpolation::Step).unwrap(),
            scattering: AbsorptionProfile::Constant(0.5),
            kernel: AngularKernel::Isotropic,
        };
        let groups = spectral_groups(&m.sample(&sp));
        assert_eq!(groups.len(), 2);
        assert_eq!(groups.iter().map(|g| g.members.len()).sum::<usize>(), 16);
        assert!(groups.iter().all(|g| g.scattering == 0.5));
    }

    #[test]
    fn tabulated_kernels_are_renormalized() {
        let ang = build_angular(4, 8).unwrap();
        let hg = DiscreteKernel::new(&AngularKernel::HenyeyGreenstein(0.4), &ang).unwrap();
        assert!(hg.normalization_defect(&ang) < 1e-12);
        assert!(hg.correction() > 0.0);
        let n = ang.len();
        let flat = vec![vec![0.3; n]; n];
        let k = DiscreteKernel::new(&AngularKernel::Table(flat), &ang).unwrap();
        assert!(k.normalization_defect(&ang) < 1e-12);
        let bad = vec![vec![0.3; n]; n - 1];
        assert!(DiscreteKernel::new(&AngularKernel::Table(bad), &ang).is_err());
        let neg = MediumSpec {
            absorption: AbsorptionProfile::Constant(1.0),
            scattering: AbsorptionProfile::Constant(1.0),
            kernel: AngularKernel::Table(vec![vec![-1.0]]),
        };
        assert!(neg.validate().is_err());
    }
}
