//! Fixed-point maps of the temperature problem.
//!
//! Each operator maps the current emission field to the emission field
//! implied by the divergence-free flux condition:
//!
//! * grey: `a ↦ K_α[a] + (1/4π) Σ_j q_j Σ_i w_i g_ij e^{-α s}`,
//! * spectral: `w ↦ Σ_g K_{α_g}[u_g] + (1/4π) (-∇·S)` with
//!   `u_g = α_g Σ_{j∈g} q_j B_j(f⁻¹(w))`,
//! * combined: `w ↦ (1/4π) Σ_j q_j α^a_j φ_j` where `φ_j` is the angular
//!   integral of the solution of the linear transport problem at fixed `T`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::numeric::pairwise_sum;
use crate::quadrature::SpectralGrid;
use crate::spectral::{planck_unchecked, EmissionMap};
use crate::transport::{
    attenuated_boundary, spectral_groups, sweep, BoundarySource, BoundaryTable, DiscreteKernel, Grids,
    MediumSpec, RadiationField, SampledMedium, SelfCellRule, Source, SpectralGroup, VolumeKernel,
};
use crate::{Error, Result};

/// How volume kernels are built.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelOptions {
    pub rule: SelfCellRule,
    /// Memory budget for cached kernel spectra; kernels beyond it are
    /// re-transformed on every application.
    pub cache_bytes: usize,
    /// Multiplies every kernel weight. Always 1 outside fault injection.
    pub scale: f64,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions { rule: SelfCellRule::ExactMass, cache_bytes: 512 << 20, scale: 1.0 }
    }
}

fn build_kernels(grids: &Grids, kappas: &[f64], opts: &KernelOptions) -> Result<Vec<Option<VolumeKernel>>> {
    let per = VolumeKernel::spectrum_bytes(grids);
    let mut budget = opts.cache_bytes;
    kappas
        .iter()
        .map(|&k| {
            if k <= 0.0 {
                return Ok(None);
            }
            let cache = budget >= per;
            if cache {
                budget -= per;
            }
            Ok(Some(VolumeKernel::new(grids, k, opts.rule, cache)?.with_scale(opts.scale)))
        })
        .collect()
}

/// L¹(Ω) norm on the lattice (uniform cell volume cancels in ratios).
pub fn l1(v: &[f64]) -> f64 {
    pairwise_sum(&v.iter().map(|x| x.abs()).collect::<Vec<_>>())
}

pub fn l1_diff(a: &[f64], b: &[f64]) -> f64 {
    pairwise_sum(&a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect::<Vec<_>>())
}

/// `Σ_j q_j α_j B_j(T)` restricted to a group, for every node.
fn group_planck(spectral: &SpectralGrid, members: &[usize], t: &[f64]) -> Vec<f64> {
    t.par_iter()
        .map(|&tm| members.iter().map(|&j| spectral.weights[j] * planck_unchecked(spectral.nodes[j], tm)).sum())
        .collect()
}

/// `a ↦ K_α[a] + b` on the lattice.
#[derive(Debug)]
pub struct GreyOperator {
    pub alpha: f64,
    kernel: VolumeKernel,
    source: Vec<f64>,
}

impl GreyOperator {
    pub fn new(grids: &Grids, alpha: f64, boundary: &BoundarySource, opts: &KernelOptions) -> Result<Self> {
        let kernel = VolumeKernel::new(grids, alpha, opts.rule, true)?.with_scale(opts.scale);
        let table = boundary.tabulate(&grids.angular, &grids.spectral);
        let ext = vec![alpha; grids.spectral.len()];
        let att = attenuated_boundary(grids, &table, &ext);
        let f = grids.spectral.len();
        let source = att
            .chunks(f)
            .map(|row| row.iter().zip(&grids.spectral.weights).map(|(a, q)| a * q).sum::<f64>() / (4.0 * PI))
            .collect();
        Ok(GreyOperator { alpha, kernel, source })
    }

    /// `(1/4πα) (-∇·S)` at every node.
    pub fn source(&self) -> &[f64] {
        &self.source
    }

    pub fn kernel(&self) -> &VolumeKernel {
        &self.kernel
    }

    pub fn apply(&self, a: &[f64]) -> Vec<f64> {
        let mut out = self.kernel.apply(a);
        out.iter_mut().zip(&self.source).for_each(|(o, s)| *o += s);
        out
    }
}

/// `w ↦ J[w]` for frequency-dependent absorption without scattering.
#[derive(Debug)]
pub struct SpectralOperator {
    groups: Vec<SpectralGroup>,
    kernels: Vec<Option<VolumeKernel>>,
    emission: EmissionMap,
    spectral: SpectralGrid,
    source: Vec<f64>,
}

impl SpectralOperator {
    pub fn new(grids: &Grids, medium: &MediumSpec, boundary: &BoundarySource, opts: &KernelOptions) -> Result<Self> {
        let sampled = medium.sample(&grids.spectral);
        let emission = EmissionMap::new(&medium.absorption, &grids.spectral)?;
        if emission.is_degenerate() {
            return Err(Error::Indeterminate);
        }
        let sampled = SampledMedium { absorption: sampled.absorption, scattering: vec![0.0; grids.spectral.len()] };
        let groups = spectral_groups(&sampled);
        let kernels = build_kernels(grids, &groups.iter().map(|g| g.absorption).collect::<Vec<_>>(), opts)?;
        let table = boundary.tabulate(&grids.angular, &grids.spectral);
        let att = attenuated_boundary(grids, &table, &sampled.absorption);
        let f = grids.spectral.len();
        let source = att
            .chunks(f)
            .map(|row| {
                (0..f).map(|j| grids.spectral.weights[j] * sampled.absorption[j] * row[j]).sum::<f64>() / (4.0 * PI)
            })
            .collect();
        Ok(SpectralOperator { groups, kernels, emission, spectral: grids.spectral.clone(), source })
    }

    pub fn emission(&self) -> &EmissionMap {
        &self.emission
    }

    /// `(1/4π)(-∇·S)` at every node.
    pub fn source(&self) -> &[f64] {
        &self.source
    }

    /// Largest row mass over all groups and nodes.
    pub fn max_row_mass(&self) -> f64 {
        self.kernels
            .iter()
            .flatten()
            .flat_map(|k| k.row_masses())
            .fold(0.0, f64::max)
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    /// `f⁻¹(w)` node by node, warm-started from `guess`.
    pub fn temperatures(&self, w: &[f64], guess: Option<&[f64]>) -> Result<Vec<f64>> {
        invert_all(&self.emission, w, guess)
    }

    /// `J` evaluated at the temperature field `t`.
    pub fn apply_temperature(&self, t: &[f64]) -> Vec<f64> {
        let mut out = self.source.clone();
        for (g, k) in self.groups.iter().zip(&self.kernels) {
            let Some(k) = k else { continue };
            let mut u = group_planck(&self.spectral, &g.members, t);
            u.iter_mut().for_each(|x| *x *= g.absorption);
            for (o, v) in out.iter_mut().zip(k.apply(&u)) {
                *o += v;
            }
        }
        out
    }

    pub fn apply(&self, w: &[f64]) -> Result<Vec<f64>> {
        Ok(self.apply_temperature(&self.temperatures(w, None)?))
    }
}

pub(crate) fn invert_all(emission: &EmissionMap, w: &[f64], guess: Option<&[f64]>) -> Result<Vec<f64>> {
    w.par_iter()
        .enumerate()
        .map(|(m, &wm)| {
            emission
                .invert_from(wm.max(0.0), guess.map(|g| g[m]))
                .map_err(|e| Error::InversionFailure { node: m, source: Box::new(e) })
        })
        .collect()
}

/// Inner iteration controls for the linear transport solve at fixed `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for InnerOptions {
    fn default() -> Self {
        InnerOptions { tol: 1e-10, max_iter: 500 }
    }
}

/// Combined absorption and isotropic scattering in integral form on the
/// group mean intensity `φ̄_g = Σ_{j∈g} q_j φ_j`:
/// `φ̄ = b + K_κ[(4π α^a/κ) B̄ + (α^s/κ) φ̄]`.
#[derive(Debug)]
pub struct CombinedOperator {
    groups: Vec<SpectralGroup>,
    kernels: Vec<Option<VolumeKernel>>,
    emission: EmissionMap,
    spectral: SpectralGrid,
    /// Per frequency `Σ_i w_i g_ij e^{-κ_j s}`, `[node][freq]`.
    boundary_phi: Vec<f64>,
    group_boundary: Vec<Vec<f64>>,
    inner: InnerOptions,
}

/// Result of one application of a combined operator.
#[derive(Debug, Clone)]
pub struct CombinedStep {
    pub w: Vec<f64>,
    pub inner_iterations: usize,
}

impl CombinedOperator {
    pub fn new(
        grids: &Grids,
        medium: &MediumSpec,
        boundary: &BoundarySource,
        opts: &KernelOptions,
        inner: InnerOptions,
    ) -> Result<Self> {
        if !medium.is_isotropic() {
            return Err(Error::InvalidInput("integral form requires isotropic scattering".into()));
        }
        let sampled = medium.sample(&grids.spectral);
        let emission = EmissionMap::new(&medium.absorption, &grids.spectral)?;
        if emission.is_degenerate() {
            return Err(Error::Indeterminate);
        }
        let groups = spectral_groups(&sampled);
        let kernels = build_kernels(grids, &groups.iter().map(|g| g.extinction()).collect::<Vec<_>>(), opts)?;
        let table = boundary.tabulate(&grids.angular, &grids.spectral);
        let boundary_phi = attenuated_boundary(grids, &table, &sampled.extinction());
        let f = grids.spectral.len();
        let group_boundary = groups
            .iter()
            .map(|g| {
                boundary_phi
                    .chunks(f)
                    .map(|row| g.members.iter().map(|&j| grids.spectral.weights[j] * row[j]).sum())
                    .collect()
            })
            .collect();
        Ok(CombinedOperator {
            groups,
            kernels,
            emission,
            spectral: grids.spectral.clone(),
            boundary_phi,
            group_boundary,
            inner,
        })
    }

    pub fn emission(&self) -> &EmissionMap {
        &self.emission
    }

    pub fn temperatures(&self, w: &[f64], guess: Option<&[f64]>) -> Result<Vec<f64>> {
        invert_all(&self.emission, w, guess)
    }

    /// Fresh warm-start state (`φ̄ = 0` in every group).
    pub fn initial_state(&self) -> Vec<Vec<f64>> {
        vec![vec![0.0; self.group_boundary.first().map_or(0, |b| b.len())]; self.groups.len()]
    }

    /// Solves `φ = b + K[src + c φ]` from the warm start in `phi`.
    fn solve_linear(
        &self,
        kernel: &VolumeKernel,
        b: &[f64],
        src: &[f64],
        c: f64,
        phi: &mut Vec<f64>,
        outer: usize,
    ) -> Result<usize> {
        let rhs = |phi: &[f64]| -> Vec<f64> {
            let v: Vec<f64> = src.iter().zip(phi).map(|(s, p)| s + c * p).collect();
            kernel.apply(&v).iter().zip(b).map(|(k, b)| k + b).collect()
        };
        if c == 0.0 {
            *phi = rhs(phi);
            return Ok(1);
        }
        let mut last = f64::INFINITY;
        for it in 1..=self.inner.max_iter {
            let next = rhs(phi);
            let change = l1_diff(&next, phi);
            let scale = l1(&next);
            *phi = next;
            last = if scale > 0.0 { change / scale } else { 0.0 };
            if last <= self.inner.tol {
                return Ok(it);
            }
        }
        Err(Error::InnerDiverged { outer, residual: last })
    }

    /// `w_{k+1}` from the temperature field `t`; `state` holds the group mean
    /// intensities and is updated in place.
    pub fn apply_temperature(&self, t: &[f64], state: &mut [Vec<f64>], outer: usize) -> Result<CombinedStep> {
        let n = t.len();
        let mut w = vec![0.0; n];
        let mut inner_iterations = 0;
        for (gi, g) in self.groups.iter().enumerate() {
            if g.absorption == 0.0 {
                continue;
            }
            let kernel = self.kernels[gi].as_ref().expect("absorbing group has a kernel");
            let kappa = g.extinction();
            let mut src = group_planck(&self.spectral, &g.members, t);
            src.iter_mut().for_each(|x| *x *= 4.0 * PI * g.absorption / kappa);
            inner_iterations = inner_iterations.max(self.solve_linear(
                kernel,
                &self.group_boundary[gi],
                &src,
                g.scattering / kappa,
                &mut state[gi],
                outer,
            )?);
            for (wm, p) in w.iter_mut().zip(&state[gi]) {
                *wm += g.absorption * p / (4.0 * PI);
            }
        }
        Ok(CombinedStep { w, inner_iterations })
    }

    /// Total volume source `α^a_j B_j(T) + α^s_j φ_j / 4π`, `[node][freq]`,
    /// from a converged temperature field.
    pub fn volume_source(&self, t: &[f64], medium: &SampledMedium) -> Result<Vec<f64>> {
        let f = self.spectral.len();
        let n = t.len();
        let mut s = vec![0.0; n * f];
        for (gi, g) in self.groups.iter().enumerate() {
            let Some(kernel) = self.kernels[gi].as_ref() else { continue };
            let kappa = g.extinction();
            for &j in &g.members {
                let nu = self.spectral.nodes[j];
                let b: Vec<f64> = t.iter().map(|&tm| planck_unchecked(nu, tm)).collect();
                let phi = if g.scattering == 0.0 {
                    None
                } else {
                    let bj: Vec<f64> = (0..n).map(|m| self.boundary_phi[m * f + j]).collect();
                    let src: Vec<f64> = b.iter().map(|x| 4.0 * PI * g.absorption / kappa * x).collect();
                    let mut phi = vec![0.0; n];
                    self.solve_linear(kernel, &bj, &src, g.scattering / kappa, &mut phi, 0)?;
                    Some(phi)
                };
                for m in 0..n {
                    let scat = phi.as_ref().map_or(0.0, |p| medium.scattering[j] * p[m] / (4.0 * PI));
                    s[m * f + j] = medium.absorption[j] * b[m] + scat;
                }
            }
        }
        Ok(s)
    }
}

/// Combined absorption and general scattering by repeated ray sweeps over
/// the full radiance field.
#[derive(Debug)]
pub struct SweepOperator {
    medium: SampledMedium,
    extinction: Vec<f64>,
    kernel: DiscreteKernel,
    table: BoundaryTable,
    emission: Option<EmissionMap>,
    spectral: SpectralGrid,
    inner: InnerOptions,
}

impl SweepOperator {
    pub fn new(grids: &Grids, medium: &MediumSpec, boundary: &BoundarySource, inner: InnerOptions) -> Result<Self> {
        let sampled = medium.sample(&grids.spectral);
        let emission = EmissionMap::new(&medium.absorption, &grids.spectral)?;
        let emission = (!emission.is_degenerate()).then_some(emission);
        Ok(SweepOperator {
            extinction: sampled.extinction(),
            medium: sampled,
            kernel: DiscreteKernel::new(&medium.kernel, &grids.angular)?,
            table: boundary.tabulate(&grids.angular, &grids.spectral),
            emission,
            spectral: grids.spectral.clone(),
            inner,
        })
    }

    pub fn emission(&self) -> Option<&EmissionMap> {
        self.emission.as_ref()
    }

    pub fn kernel(&self) -> &DiscreteKernel {
        &self.kernel
    }

    pub fn extinction(&self) -> &[f64] {
        &self.extinction
    }

    pub fn boundary(&self) -> &BoundaryTable {
        &self.table
    }

    /// `α^a_j B_j(T_m)`, `[node][freq]`.
    pub fn emission_source(&self, t: &[f64]) -> Vec<f64> {
        let f = self.spectral.len();
        let mut out = vec![0.0; t.len() * f];
        out.par_chunks_mut(f).zip(t.par_iter()).for_each(|(row, &tm)| {
            for j in 0..f {
                row[j] = self.medium.absorption[j] * planck_unchecked(self.spectral.nodes[j], tm);
            }
        });
        out
    }

    /// One source-iteration step: sweep with emission plus in-scattering of
    /// `field`.
    pub fn step(&self, grids: &Grids, field: &RadiationField, emission: Option<&[f64]>) -> RadiationField {
        let f = self.spectral.len();
        let nd = grids.angular.len();
        let nn = grids.spatial.len();
        match &self.kernel {
            DiscreteKernel::Isotropic => {
                let mut s = vec![0.0; nn * f];
                s.par_chunks_mut(f).enumerate().for_each(|(m, row)| {
                    field.angular_integral(&grids.angular, m, row);
                    for j in 0..f {
                        row[j] *= self.medium.scattering[j] / (4.0 * PI);
                        if let Some(e) = emission {
                            row[j] += e[m * f + j];
                        }
                    }
                });
                sweep(grids, &self.extinction, &self.table, Source::Isotropic(&s))
            }
            DiscreteKernel::Matrix { matrix, .. } => {
                let mut s = vec![0.0; nn * nd * f];
                s.par_chunks_mut(nd * f).enumerate().for_each(|(m, node)| {
                    let inc = field.node(m);
                    for i in 0..nd {
                        let out = &mut node[i * f..(i + 1) * f];
                        for ip in 0..nd {
                            let k = matrix[i * nd + ip];
                            for (o, v) in out.iter_mut().zip(&inc[ip * f..(ip + 1) * f]) {
                                *o += k * v;
                            }
                        }
                        for j in 0..f {
                            out[j] *= self.medium.scattering[j];
                            if let Some(e) = emission {
                                out[j] += e[m * f + j];
                            }
                        }
                    }
                });
                sweep(grids, &self.extinction, &self.table, Source::Directional(&s))
            }
        }
    }

    /// Boundary-only field (no volume source).
    pub fn uncollided(&self, grids: &Grids) -> RadiationField {
        sweep(grids, &self.extinction, &self.table, Source::None)
    }

    /// Source iteration at fixed emission until the relative change in
    /// `sup_m Σ_i w_i |ΔI|` (max over frequencies) drops below the inner
    /// tolerance. Returns the iteration count and the change history.
    pub fn solve_linear(
        &self,
        grids: &Grids,
        field: &mut RadiationField,
        emission: Option<&[f64]>,
        outer: usize,
    ) -> Result<(usize, Vec<f64>)> {
        let mut history = Vec::new();
        for it in 1..=self.inner.max_iter {
            let next = self.step(grids, field, emission);
            let change = sup_l1_change(grids, &next, field);
            let scale = sup_l1_change(grids, &next, &RadiationField::zeros(0, 0, 0));
            *field = next;
            let rel = if scale > 0.0 { change / scale } else { 0.0 };
            history.push(rel);
            if rel <= self.inner.tol {
                return Ok((it, history));
            }
        }
        Err(Error::InnerDiverged { outer, residual: history.last().copied().unwrap_or(f64::INFINITY) })
    }

    /// `(1/4π) Σ_j q_j α^a_j Σ_i w_i I`.
    pub fn absorbed(&self, grids: &Grids, field: &RadiationField) -> Vec<f64> {
        let f = self.spectral.len();
        (0..field.n_nodes)
            .into_par_iter()
            .map(|m| {
                let mut phi = vec![0.0; f];
                field.angular_integral(&grids.angular, m, &mut phi);
                (0..f).map(|j| self.spectral.weights[j] * self.medium.absorption[j] * phi[j]).sum::<f64>() / (4.0 * PI)
            })
            .collect()
    }
}

/// `sup_m max_j Σ_i w_i |a - b|`; an empty `b` is treated as zero.
pub fn sup_l1_change(grids: &Grids, a: &RadiationField, b: &RadiationField) -> f64 {
    let f = a.n_freq;
    let nd = a.n_dirs;
    (0..a.n_nodes)
        .into_par_iter()
        .map(|m| {
            let ra = a.node(m);
            let rb = (b.n_nodes > 0).then(|| b.node(m));
            let mut acc = vec![0.0; f];
            for i in 0..nd {
                let w = grids.angular.weights[i];
                for j in 0..f {
                    let d = ra[i * f + j] - rb.map_or(0.0, |r| r[i * f + j]);
                    acc[j] += w * d.abs();
                }
            }
            acc.into_iter().fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}
