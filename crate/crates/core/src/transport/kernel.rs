//! The unit-mass volume kernel `k_κ(r) = κ e^{-κr} / (4π r²)` on the
//! spatial lattice.
//!
//! Off-diagonal entries are point samples `k_κ(|x_m - x_n|) h³`. Since the
//! samples depend only on the lattice offset, the whole operator is a
//! discrete convolution and is applied by FFT on a zero-padded box. The
//! diagonal (self-cell) entry follows a [`SelfCellRule`].

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::numeric::pairwise_sum_by;
use crate::transport::Grids;
use crate::{Error, Result};

/// How the singular self-cell contribution is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelfCellRule {
    /// Diagonal chosen so each row carries the exact kernel mass over the
    /// body, `(1/4π) Σ_i w_i (1 - e^{-κ s(x_m, n_i)})`, computed on the same
    /// angular grid as the boundary term.
    #[default]
    ExactMass,
    /// Integral over the ball of equal volume, `1 - e^{-κρ}`,
    /// `ρ = (3h³/4π)^{1/3}`.
    EquivalentBall,
}

/// Radius of the ball with the volume of one cell.
pub fn equivalent_radius(h: f64) -> f64 {
    (3.0 * h.powi(3) / (4.0 * PI)).cbrt()
}

#[inline]
fn kernel_value(kappa: f64, r2: f64) -> f64 {
    kappa * (-kappa * r2.sqrt()).exp() / (4.0 * PI * r2)
}

/// Smallest `n ≥ min` whose only prime factors are 2, 3 and 5.
fn fast_len(min: usize) -> usize {
    let mut n = min.max(1);
    loop {
        let mut r = n;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return n;
        }
        n += 1;
    }
}

/// In-place 3-D complex FFT on a fixed box.
struct Fft3 {
    dims: [usize; 3],
    forward: [Arc<dyn Fft<f64>>; 3],
    inverse: [Arc<dyn Fft<f64>>; 3],
}

impl std::fmt::Debug for Fft3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft3").field("dims", &self.dims).finish()
    }
}

impl Fft3 {
    fn new(dims: [usize; 3]) -> Self {
        let mut planner = FftPlanner::new();
        let forward = dims.map(|n| planner.plan_fft_forward(n));
        let inverse = dims.map(|n| planner.plan_fft_inverse(n));
        Fft3 { dims, forward, inverse }
    }

    fn len(&self) -> usize {
        self.dims.iter().product()
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let [p0, p1, p2] = self.dims;
        let plans = if inverse { &self.inverse } else { &self.forward };
        // axis 2 is contiguous
        data.par_chunks_mut(p1 * p2).for_each(|slab| plans[2].process(slab));
        // axis 1 within each slab
        data.par_chunks_mut(p1 * p2).for_each(|slab| {
            let mut line = vec![Complex64::default(); p1 * p2];
            for k in 0..p2 {
                for j in 0..p1 {
                    line[k * p1 + j] = slab[j * p2 + k];
                }
            }
            plans[1].process(&mut line);
            for k in 0..p2 {
                for j in 0..p1 {
                    slab[j * p2 + k] = line[k * p1 + j];
                }
            }
        });
        // axis 0, one j-plane at a time
        let mut lines = vec![Complex64::default(); p0 * p2];
        for j in 0..p1 {
            for i in 0..p0 {
                for k in 0..p2 {
                    lines[k * p0 + i] = data[(i * p1 + j) * p2 + k];
                }
            }
            plans[0].process(&mut lines);
            for i in 0..p0 {
                for k in 0..p2 {
                    data[(i * p1 + j) * p2 + k] = lines[k * p0 + i];
                }
            }
        }
    }
}

/// The discretized kernel operator for one extinction value.
#[derive(Debug)]
pub struct VolumeKernel {
    kappa: f64,
    rule: SelfCellRule,
    scale: f64,
    h: f64,
    fft: Fft3,
    /// Real spectrum of the off-diagonal kernel (the kernel is even), or
    /// `None` when it is recomputed on each application.
    spectrum: Option<Vec<f64>>,
    cells: Vec<[usize; 3]>,
    diag: Vec<f64>,
    off_mass: Vec<f64>,
}

impl VolumeKernel {
    /// Builds the operator for extinction `kappa > 0`; the kernel spectrum is
    /// kept in memory when `cache` is set.
    pub fn new(grids: &Grids, kappa: f64, rule: SelfCellRule, cache: bool) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::InvalidInput(format!("kernel extinction must be finite and > 0, got {kappa}")));
        }
        let sp = &grids.spatial;
        let dims = sp.dims.map(|d| fast_len(2 * d - 1));
        let fft = Fft3::new(dims);
        let mut k = VolumeKernel {
            kappa,
            rule,
            scale: 1.0,
            h: sp.h,
            fft,
            spectrum: None,
            cells: sp.cells.clone(),
            diag: Vec::new(),
            off_mass: Vec::new(),
        };
        let spectrum = k.kernel_spectrum();
        let ones = vec![1.0; sp.len()];
        k.off_mass = k.convolve(&ones, &spectrum);
        k.diag = match rule {
            SelfCellRule::EquivalentBall => {
                vec![-(-kappa * equivalent_radius(sp.h)).exp_m1(); sp.len()]
            }
            SelfCellRule::ExactMass => (0..sp.len())
                .map(|m| exact_mass(grids, kappa, m) - k.off_mass[m])
                .collect(),
        };
        if let Some((m, d)) = k.diag.iter().enumerate().find(|(_, d)| **d < 0.0) {
            return Err(Error::TooCoarse(format!(
                "self-cell weight {d:e} at node {m} is negative; refine the spatial grid"
            )));
        }
        if cache {
            k.spectrum = Some(spectrum);
        }
        Ok(k)
    }

    /// Multiplies every weight by `factor` (fault injection for validation).
    pub fn with_scale(mut self, factor: f64) -> Self {
        self.scale = factor;
        self
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn rule(&self) -> SelfCellRule {
        self.rule
    }

    /// Bytes held by a cached spectrum.
    pub fn spectrum_bytes(grids: &Grids) -> usize {
        grids.spatial.dims.iter().map(|&d| fast_len(2 * d - 1)).product::<usize>() * 8
    }

    pub fn is_cached(&self) -> bool {
        self.spectrum.is_some()
    }

    /// `Σ_n K_mn`: total weight of row `m`.
    pub fn row_mass(&self, m: usize) -> f64 {
        self.scale * (self.off_mass[m] + self.diag[m])
    }

    pub fn row_masses(&self) -> Vec<f64> {
        (0..self.diag.len()).map(|m| self.row_mass(m)).collect()
    }

    /// Off-diagonal part of row `m`.
    pub fn off_diagonal_mass(&self, m: usize) -> f64 {
        self.scale * self.off_mass[m]
    }

    pub fn self_weight(&self, m: usize) -> f64 {
        self.scale * self.diag[m]
    }

    /// `(K v)_m` for every node.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let conv = match &self.spectrum {
            Some(s) => self.convolve(v, s),
            None => self.convolve(v, &self.kernel_spectrum()),
        };
        conv.iter()
            .zip(&self.diag)
            .zip(v)
            .map(|((c, d), x)| self.scale * (c + d * x))
            .collect()
    }

    /// `(K v)_m` for a single node by direct summation.
    pub fn apply_at(&self, v: &[f64], m: usize) -> f64 {
        let cm = self.cells[m];
        let h3 = self.h.powi(3);
        let h2 = self.h * self.h;
        let off = pairwise_sum_by(self.cells.len(), |n| {
            if n == m {
                return 0.0;
            }
            let c = self.cells[n];
            let d2 = (0..3).map(|a| (c[a] as f64 - cm[a] as f64).powi(2)).sum::<f64>() * h2;
            kernel_value(self.kappa, d2) * h3 * v[n]
        });
        self.scale * (off + self.diag[m] * v[m])
    }

    fn kernel_spectrum(&self) -> Vec<f64> {
        let [p0, p1, p2] = self.fft.dims;
        let h3 = self.h.powi(3);
        let h2 = self.h * self.h;
        let mut data = vec![Complex64::default(); self.fft.len()];
        // signed offset represented by each padded index
        let signed = |i: usize, p: usize| -> f64 {
            if i <= p / 2 {
                i as f64
            } else {
                i as f64 - p as f64
            }
        };
        data.par_chunks_mut(p1 * p2).enumerate().for_each(|(i, slab)| {
            let di = signed(i, p0);
            for j in 0..p1 {
                let dj = signed(j, p1);
                for k in 0..p2 {
                    let dk = signed(k, p2);
                    let r2 = (di * di + dj * dj + dk * dk) * h2;
                    if r2 > 0.0 {
                        slab[j * p2 + k].re = kernel_value(self.kappa, r2) * h3;
                    }
                }
            }
        });
        self.fft.transform(&mut data, false);
        data.into_iter().map(|c| c.re).collect()
    }

    fn convolve(&self, v: &[f64], spectrum: &[f64]) -> Vec<f64> {
        let [_, p1, p2] = self.fft.dims;
        let mut data = vec![Complex64::default(); self.fft.len()];
        for (c, x) in self.cells.iter().zip(v) {
            data[(c[0] * p1 + c[1]) * p2 + c[2]].re = *x;
        }
        self.fft.transform(&mut data, false);
        data.par_iter_mut().zip(spectrum.par_iter()).for_each(|(d, s)| *d *= *s);
        self.fft.transform(&mut data, true);
        let norm = 1.0 / self.fft.len() as f64;
        self.cells
            .iter()
            .map(|c| data[(c[0] * p1 + c[1]) * p2 + c[2]].re * norm)
            .collect()
    }
}

/// `(1/4π) Σ_i w_i (1 - e^{-κ s(x_m, n_i)})`: the kernel mass over the body
/// seen from node `m`.
pub fn exact_mass(grids: &Grids, kappa: f64, m: usize) -> f64 {
    let s = grids.exits(m);
    grids
        .angular
        .weights
        .iter()
        .zip(s)
        .map(|(w, s)| -w * (-kappa * s).exp_m1())
        .sum::<f64>()
        / (4.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexDomain;
    use crate::quadrature::{build_angular, build_spatial, build_spectral};
    use crate::Vec3;

    fn grids(domain: ConvexDomain, h: f64) -> Grids {
        let sp = build_spatial(&domain, h).unwrap();
        Grids::with_default_ray(domain, sp, build_angular(8, 16).unwrap(), build_spectral(1.0, 8).unwrap())
            .unwrap()
    }

    #[test]
    fn fast_lengths() {
        assert_eq!(fast_len(7), 8);
        assert_eq!(fast_len(81), 81);
        assert_eq!(fast_len(41), 45);
        assert_eq!(fast_len(13), 15);
    }

    #[test]
    fn fft_application_matches_direct_sum() {
        let d = ConvexDomain::ellipsoid([0.1, 0.0, -0.2], [1.0, 0.7, 0.5]).unwrap();
        let g = grids(d, 0.125);
        let v: Vec<f64> = g.spatial.nodes.iter().map(|x| 1.0 + x.x * x.x - 0.5 * x.y + x.z.sin()).collect();
        for rule in [SelfCellRule::ExactMass, SelfCellRule::EquivalentBall] {
            for cache in [true, false] {
                let k = VolumeKernel::new(&g, 1.7, rule, cache).unwrap();
                let all = k.apply(&v);
                for m in (0..g.spatial.len()).step_by(7) {
                    let direct = k.apply_at(&v, m);
                    assert!((all[m] - direct).abs() < 1e-12 * direct.abs().max(1.0), "{} vs {}", all[m], direct);
                }
            }
        }
    }

    #[test]
    fn exact_mass_rows_reproduce_ray_mass() {
        let d = ConvexDomain::unit_ball();
        let g = grids(d, 0.1);
        let k = VolumeKernel::new(&g, 1.0, SelfCellRule::ExactMass, true).unwrap();
        let c = g.node_index(&Vec3::zeros()).unwrap();
        assert!((k.row_mass(c) - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        let ones = vec![1.0; g.spatial.len()];
        let applied = k.apply(&ones);
        for m in 0..g.spatial.len() {
            assert!(k.self_weight(m) >= 0.0);
            assert!(k.row_mass(m) < 1.0);
            assert!((applied[m] - k.row_mass(m)).abs() < 1e-12);
        }
    }

    #[test]
    fn equivalent_ball_rule_is_close_to_the_continuum_mass() {
        // radial oracle: mass at the centre of a ball of radius R is 1 - e^{-κR}
        let d = ConvexDomain::ball([0.0; 3], 5.0).unwrap();
        let g = grids(d, 0.2);
        let k = VolumeKernel::new(&g, 1.0, SelfCellRule::EquivalentBall, false).unwrap();
        let c = g.node_index(&Vec3::zeros()).unwrap();
        let ones = vec![1.0; g.spatial.len()];
        let got = k.apply_at(&ones, c);
        assert!((got - (1.0 - (-5.0f64).exp())).abs() < 2e-2, "{got}");
    }

    #[test]
    fn scale_multiplies_every_weight() {
        let d = ConvexDomain::unit_ball();
        let g = grids(d, 0.2);
        let k = VolumeKernel::new(&g, 1.0, SelfCellRule::ExactMass, true).unwrap();
        let base = k.row_masses();
        let k = k.with_scale(1.01);
        for (m, b) in base.iter().enumerate() {
            assert!((k.row_mass(m) - 1.01 * b).abs() < 1e-15);
        }
    }
}
