//! Radiation entropy: density, local production, boundary entropy and
//! energy flows, and a check that a constant-temperature outgoing profile
//! carries the most entropy for a given outgoing power.
//!
//! With `u = I / 2ν³` the entropy density is
//! `s = 2ν² [(1+u) ln(1+u) - u ln u]` and `∂s/∂I = 1/T_ν`, where `T_ν` is
//! the brightness temperature.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::quadrature::{build_angular, build_spectral, SurfaceGrid};
use crate::spectral::{inverse_brightness_temperature, planck_unchecked};
use crate::transport::{
    sweep, BoundarySource, BoundaryTable, DiscreteKernel, Grids, MarchScratch, MediumSpec, RadiationField,
    SampledMedium, Source,
};
use crate::{Error, Result, Vec3};

/// Entropy density of radiance `i ≥ 0` at frequency `nu > 0`.
pub fn entropy_density(nu: f64, i: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::NonPositiveFrequency(nu));
    }
    if i < 0.0 || i.is_nan() {
        return Err(Error::NegativeIntensity(i));
    }
    Ok(density_unchecked(nu, i))
}

fn density_unchecked(nu: f64, i: f64) -> f64 {
    if i == 0.0 {
        return 0.0;
    }
    let u = i / (2.0 * nu.powi(3));
    2.0 * nu * nu * ((1.0 + u) * u.ln_1p() - u * u.ln())
}

/// `κ (1/T_ν - 1/T)(B_ν(T) - I)`. Exactly non-negative: when rounding gives
/// the two factors opposite signs the true value is below resolution and
/// zero is returned. `+∞` for zero radiance against a positive Planck
/// radiance.
pub fn production_density(nu: f64, t: f64, i: f64, kappa: f64) -> f64 {
    if kappa == 0.0 {
        return 0.0;
    }
    let b = planck_unchecked(nu, t);
    let d = b - i;
    if d == 0.0 {
        return 0.0;
    }
    let inv_t = if t > 0.0 { 1.0 / t } else { f64::INFINITY };
    let e = inverse_brightness_temperature(nu, i) - inv_t;
    if e.is_nan() || (e > 0.0) != (d > 0.0) {
        return 0.0;
    }
    kappa * e * d
}

/// Entropy and energy budget of a solved field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyReport {
    /// `∫_Ω dx ∫dν ∫dn` of the local production, scattering included.
    pub production_volume_integral: f64,
    /// Smallest absorption-emission production density over all samples.
    pub min_pointwise_production: f64,
    /// Contribution of scattering to the volume integral.
    pub scattering_production: f64,
    /// Inward entropy flow, signed (`≤ 0`).
    pub phi_in: f64,
    pub phi_in_abs: f64,
    pub phi_out: f64,
    /// Inward radiation, signed (`≤ 0`).
    pub i_in: f64,
    pub i_out: f64,
    /// `|Φ+ + Φ- - production| / max(|Φ+|, |production|)`.
    pub balance_defect: f64,
}

/// Entropy and energy crossing the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryFlows {
    pub phi_in: f64,
    pub phi_out: f64,
    pub i_in: f64,
    pub i_out: f64,
}

/// Flows through `surface` for directions of the angular grid. Incoming
/// radiance is the boundary data; outgoing radiance is the formal solution
/// with volume source `source` marched back across the body from each
/// boundary point.
pub fn boundary_flows(
    grids: &Grids,
    surface: &SurfaceGrid,
    extinction: &[f64],
    table: &BoundaryTable,
    source: Source,
) -> BoundaryFlows {
    let f = extinction.len();
    let sp = &grids.spectral;
    let parts: Vec<[f64; 4]> = (0..surface.len())
        .into_par_iter()
        .map_init(
            || (MarchScratch::new(f), vec![0.0; f]),
            |(scratch, out), p| {
                let y = surface.points[p];
                let nx = surface.normals[p];
                let mut acc = [0.0; 4];
                for (i, n) in grids.angular.nodes.iter().enumerate() {
                    let mu = n.dot(&nx);
                    if mu == 0.0 {
                        continue;
                    }
                    let radiance: &[f64] = if mu < 0.0 {
                        table.row(i)
                    } else {
                        let s = grids.domain.chord_behind(&y, n);
                        march(grids, extinction, table.row(i), source, &y, n, i, s, scratch, out);
                        out
                    };
                    let w = surface.areas[p] * grids.angular.weights[i] * mu;
                    let (mut e, mut r) = (0.0, 0.0);
                    for j in 0..f {
                        let v = radiance[j].max(0.0);
                        e += sp.weights[j] * density_unchecked(sp.nodes[j], v);
                        r += sp.weights[j] * v;
                    }
                    let k = if mu > 0.0 { 0 } else { 2 };
                    acc[k] += w * e;
                    acc[k + 1] += w * r;
                }
                acc
            },
        )
        .collect();
    let sum = |k: usize| crate::numeric::pairwise_sum_by(parts.len(), |p| parts[p][k]);
    BoundaryFlows { phi_out: sum(0), i_out: sum(1), phi_in: sum(2), i_in: sum(3) }
}

#[allow(clippy::too_many_arguments)]
fn march(
    grids: &Grids,
    extinction: &[f64],
    inflow: &[f64],
    source: Source,
    y: &Vec3,
    n: &Vec3,
    dir: usize,
    s: f64,
    scratch: &mut MarchScratch,
    out: &mut [f64],
) {
    if s > 0.0 {
        crate::transport::march(grids, extinction, inflow, source, y, n, dir, s, scratch, out);
    } else {
        out.copy_from_slice(inflow);
    }
}

/// Volume source `α^a B(T) + α^s K I` for the formal solution, isotropic
/// unless the scattering kernel is anisotropic.
fn volume_source(
    grids: &Grids,
    medium: &SampledMedium,
    kernel: &DiscreteKernel,
    temperature: Option<&[f64]>,
    field: &RadiationField,
) -> (Vec<f64>, bool) {
    let f = grids.spectral.len();
    let nd = grids.angular.len();
    let nn = grids.spatial.len();
    let emission = |m: usize, j: usize| {
        temperature.map_or(0.0, |t| medium.absorption[j] * planck_unchecked(grids.spectral.nodes[j], t[m]))
    };
    let scatters = medium.scattering.iter().any(|s| *s > 0.0);
    match kernel {
        DiscreteKernel::Matrix { matrix, .. } if scatters => {
            let mut s = vec![0.0; nn * nd * f];
            s.par_chunks_mut(nd * f).enumerate().for_each(|(m, node)| {
                let inc = field.node(m);
                for i in 0..nd {
                    for j in 0..f {
                        let ks: f64 = (0..nd).map(|ip| matrix[i * nd + ip] * inc[ip * f + j]).sum();
                        node[i * f + j] = emission(m, j) + medium.scattering[j] * ks;
                    }
                }
            });
            (s, true)
        }
        _ => {
            let mut s = vec![0.0; nn * f];
            s.par_chunks_mut(f).enumerate().for_each(|(m, row)| {
                if scatters {
                    field.angular_integral(&grids.angular, m, row);
                }
                for j in 0..f {
                    let scat = if scatters { medium.scattering[j] * row[j] / (4.0 * PI) } else { 0.0 };
                    row[j] = emission(m, j) + scat;
                }
            });
            (s, false)
        }
    }
}

/// Radiance field of a purely absorbing medium at temperature `temperature`.
pub fn absorbing_field(
    grids: &Grids,
    medium: &MediumSpec,
    boundary: &BoundarySource,
    temperature: &[f64],
) -> Result<RadiationField> {
    if !medium.scattering.is_zero() {
        return Err(Error::InvalidInput("absorbing_field needs a non-scattering medium".into()));
    }
    if temperature.len() != grids.spatial.len() {
        return Err(Error::InvalidInput("temperature field does not match the spatial grid".into()));
    }
    let sampled = medium.sample(&grids.spectral);
    let kernel = DiscreteKernel::Isotropic;
    let empty = RadiationField::zeros(0, grids.angular.len(), grids.spectral.len());
    let (src, _) = volume_source(grids, &sampled, &kernel, Some(temperature), &empty);
    let table = boundary.tabulate(&grids.angular, &grids.spectral);
    Ok(sweep(grids, &sampled.extinction(), &table, Source::Isotropic(&src)))
}

/// Production integral and boundary flows of a solved field. `temperature`
/// is `None` for pure scattering.
pub fn entropy_report(
    grids: &Grids,
    surface: &SurfaceGrid,
    medium: &MediumSpec,
    boundary: &BoundarySource,
    temperature: Option<&[f64]>,
    field: &RadiationField,
) -> Result<EntropyReport> {
    let nn = grids.spatial.len();
    let nd = grids.angular.len();
    let f = grids.spectral.len();
    if field.n_nodes != nn || field.n_dirs != nd || field.n_freq != f {
        return Err(Error::InvalidInput("radiation field does not match the grids".into()));
    }
    if temperature.is_some_and(|t| t.len() != nn) {
        return Err(Error::InvalidInput("temperature field does not match the spatial grid".into()));
    }
    if let Some(v) = field.values.iter().find(|v| **v < 0.0 || v.is_nan()) {
        return Err(Error::NegativeIntensity(*v));
    }
    let sampled = medium.sample(&grids.spectral);
    let kernel = DiscreteKernel::new(&medium.kernel, &grids.angular)?;
    let sp = &grids.spectral;
    let cell = grids.domain.volume() / nn as f64;

    let per_node: Vec<(f64, f64, f64)> = (0..nn)
        .into_par_iter()
        .map(|m| {
            let row = field.node(m);
            let t = temperature.map_or(0.0, |t| t[m]);
            let mut mean = vec![0.0; f];
            field.angular_integral(&grids.angular, m, &mut mean);
            let (mut abs, mut scat, mut min) = (0.0, 0.0, f64::INFINITY);
            for i in 0..nd {
                let w = grids.angular.weights[i];
                for j in 0..f {
                    let nu = sp.nodes[j];
                    let v = row[i * f + j];
                    let p = if temperature.is_some() { production_density(nu, t, v, sampled.absorption[j]) } else { 0.0 };
                    min = min.min(p);
                    abs += w * sp.weights[j] * p;
                    let a_s = sampled.scattering[j];
                    if a_s > 0.0 {
                        let k = match &kernel {
                            DiscreteKernel::Isotropic => mean[j] / (4.0 * PI),
                            DiscreteKernel::Matrix { matrix, .. } => {
                                (0..nd).map(|ip| matrix[i * nd + ip] * row[ip * f + j]).sum()
                            }
                        };
                        let inv = inverse_brightness_temperature(nu, v);
                        if k != v && inv.is_finite() {
                            scat += w * sp.weights[j] * inv * a_s * (k - v);
                        }
                    }
                }
            }
            (abs, scat, min)
        })
        .collect();
    let absorption = cell * crate::numeric::pairwise_sum_by(nn, |m| per_node[m].0);
    let scattering = cell * crate::numeric::pairwise_sum_by(nn, |m| per_node[m].1);
    let min = per_node.iter().map(|p| p.2).fold(f64::INFINITY, f64::min);

    let (src, directional) = volume_source(grids, &sampled, &kernel, temperature, field);
    let source = if directional { Source::Directional(&src) } else { Source::Isotropic(&src) };
    let table = boundary.tabulate(&grids.angular, &grids.spectral);
    let flows = boundary_flows(grids, surface, &sampled.extinction(), &table, source);

    let production = absorption + scattering;
    let scale = flows.phi_out.abs().max(production.abs());
    let balance = flows.phi_out + flows.phi_in - production;
    Ok(EntropyReport {
        production_volume_integral: production,
        min_pointwise_production: if min.is_finite() { min } else { 0.0 },
        scattering_production: scattering,
        phi_in: flows.phi_in,
        phi_in_abs: flows.phi_in.abs(),
        phi_out: flows.phi_out,
        i_in: flows.i_in,
        i_out: flows.i_out,
        balance_defect: if scale > 0.0 { balance.abs() / scale } else { balance.abs() },
    })
}

/// Outcome of [`max_entropy_probe`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeResult {
    pub constant_wins: bool,
    /// Smallest relative deficit `(Φ+_const - Φ+_pert) / Φ+_const`.
    pub margin: f64,
    pub phi_constant: f64,
    /// Temperature of the constant profile.
    pub temperature: f64,
    pub deficits: Vec<f64>,
}

/// Outgoing hemisphere (`μ = n·n_x > 0`) times spectral grid for a unit
/// boundary patch.
struct Hemisphere {
    /// `w_i μ_i`.
    dir_weights: Vec<f64>,
    nu: Vec<f64>,
    q: Vec<f64>,
}

impl Hemisphere {
    fn new(t0: f64) -> Result<Self> {
        let ang = build_angular(8, 16)?;
        let dir_weights = ang
            .nodes
            .iter()
            .zip(&ang.weights)
            .filter(|(n, _)| n.z > 0.0)
            .map(|(n, w)| w * n.z)
            .collect();
        let sp = build_spectral(t0, 48)?;
        Ok(Hemisphere { dir_weights, nu: sp.nodes, q: sp.weights })
    }

    /// `(Φ+, i_out)` of a profile `I[i][j]`.
    fn flows(&self, profile: &[f64]) -> (f64, f64) {
        let f = self.nu.len();
        let (mut phi, mut out) = (0.0, 0.0);
        for (i, wd) in self.dir_weights.iter().enumerate() {
            for j in 0..f {
                let v = profile[i * f + j];
                phi += wd * self.q[j] * density_unchecked(self.nu[j], v);
                out += wd * self.q[j] * v;
            }
        }
        (phi, out)
    }

    fn constant(&self, t: f64) -> Vec<f64> {
        self.dir_weights.iter().flat_map(|_| self.nu.iter().map(move |&nu| planck_unchecked(nu, t))).collect()
    }

    /// Temperature of the constant profile with the given outgoing power.
    fn temperature_for(&self, target: f64, t0: f64) -> f64 {
        let power = |t: f64| self.flows(&self.constant(t)).1;
        let (mut lo, mut hi) = (0.0, t0);
        while power(hi) < target {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if power(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Constant profile with `Y = ν/T` multiplied by `1 + a ξ`, then scaled
    /// in `Z = 1/(e^Y - 1)` back to the outgoing power `target`.
    fn perturbed(&self, t: f64, amplitude: f64, xi: &[f64], target: f64) -> Vec<f64> {
        let f = self.nu.len();
        let mut p: Vec<f64> = xi
            .iter()
            .enumerate()
            .map(|(k, x)| {
                let nu = self.nu[k % f];
                let y = nu / t * (1.0 + amplitude * x);
                2.0 * nu.powi(3) / y.exp_m1()
            })
            .collect();
        let (_, out) = self.flows(&p);
        let c = target / out;
        p.iter_mut().for_each(|v| *v *= c);
        p
    }
}

/// Compares the outgoing entropy of the constant-temperature profile with
/// outgoing power `i_out_target` against `n_perturbations` random profiles
/// of the same power, each perturbing `ν/T_ν` by up to `amplitude`
/// (relative) per direction and frequency.
pub fn max_entropy_probe(
    i_out_target: f64,
    t0: f64,
    n_perturbations: usize,
    amplitude: f64,
    seed: u64,
) -> Result<ProbeResult> {
    if !(i_out_target > 0.0 && i_out_target.is_finite()) {
        return Err(Error::InvalidInput(format!("i_out target must be > 0, got {i_out_target}")));
    }
    if !(t0 > 0.0) {
        return Err(Error::NonPositiveTemperature(t0));
    }
    if !(0.0..1.0).contains(&amplitude) {
        return Err(Error::InvalidInput(format!("perturbation amplitude must lie in [0, 1), got {amplitude}")));
    }
    let hemi = Hemisphere::new(t0)?;
    let t = hemi.temperature_for(i_out_target, t0);
    let (phi_constant, _) = hemi.flows(&hemi.constant(t));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = hemi.dir_weights.len() * hemi.nu.len();
    let mut deficits = Vec::with_capacity(n_perturbations);
    for _ in 0..n_perturbations {
        let xi: Vec<f64> = (0..size).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let (phi, _) = hemi.flows(&hemi.perturbed(t, amplitude, &xi, i_out_target));
        deficits.push((phi_constant - phi) / phi_constant);
    }
    let margin = deficits.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ProbeResult {
        constant_wins: deficits.iter().all(|d| *d > 0.0),
        margin: if deficits.is_empty() { 0.0 } else { margin },
        phi_constant,
        temperature: t,
        deficits,
    })
}

/// Least-squares slope of `ln(deficit)` against `ln(amplitude)` for one fixed
/// random perturbation direction.
pub fn deficit_slope(i_out_target: f64, t0: f64, amplitudes: &[f64], seed: u64) -> Result<f64> {
    if amplitudes.len() < 2 || amplitudes.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
        return Err(Error::InvalidInput("need at least two amplitudes in (0, 1)".into()));
    }
    let hemi = Hemisphere::new(t0)?;
    let t = hemi.temperature_for(i_out_target, t0);
    let (phi_constant, _) = hemi.flows(&hemi.constant(t));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = hemi.dir_weights.len() * hemi.nu.len();
    let xi: Vec<f64> = (0..size).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let pts: Vec<(f64, f64)> = amplitudes
        .iter()
        .map(|&a| {
            let (phi, _) = hemi.flows(&hemi.perturbed(t, a, &xi, i_out_target));
            (a.ln(), ((phi_constant - phi) / phi_constant).ln())
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}
