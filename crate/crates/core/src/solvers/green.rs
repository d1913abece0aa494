use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::transport::{
    spectral_groups, sweep, BoundaryTable, DiscreteKernel, Grids, MediumSpec, RadiationField, Source,
};
use crate::{Error, Result};

/// Duhamel-series evaluation of `H = Σ_j 𝒰^j 𝒯(α^a χ)` per spectral group.
#[derive(Debug, Clone, Serialize)]
pub struct GreenReport {
    /// Number of series terms summed.
    pub terms: usize,
    /// A-priori bound on the neglected tail.
    pub tail_bound: f64,
    /// `sup_ν α^a (1 - e^{-κD}) / (α^a + α^s e^{-κD})`.
    pub theta: f64,
    /// `max_g ∫ H_g(x_m, n) dn` per node.
    pub integrals: Vec<f64>,
    pub max_integral: f64,
    /// Every partial sum of `∫ H dn` was non-decreasing at every node.
    pub monotone: bool,
    /// `max_integral ≤ theta + 1e-3`.
    pub bound_ok: bool,
    /// `H(x_m, n_i)` with the group index on the frequency axis.
    #[serde(skip)]
    pub field: RadiationField,
}

/// Bound on the `j`-th series term:
/// `α^a (α^s)^j (1 - e^{-κD})^{j+1} / κ^{j+1}`.
fn term_bound(alpha_a: f64, alpha_s: f64, d: f64, j: usize) -> f64 {
    let kappa = alpha_a + alpha_s;
    let q = -(-kappa * d).exp_m1() / kappa;
    alpha_a * q * (alpha_s * q).powi(j as i32)
}

/// Smallest `J ≥ 1` for which the neglected tail `Σ_{k≥J} b_k` is at most
/// `eps`.
pub fn duhamel_depth(alpha_a: f64, alpha_s: f64, d: f64, eps: f64) -> usize {
    let kappa = alpha_a + alpha_s;
    if !(kappa > 0.0) || alpha_a == 0.0 {
        return 1;
    }
    let r = alpha_s * -(-kappa * d).exp_m1() / kappa;
    let mut j = 1;
    while term_bound(alpha_a, alpha_s, d, j) / (1.0 - r) > eps {
        j += 1;
    }
    j
}

/// `α^a (1 - e^{-κD}) / (α^a + α^s e^{-κD})`, the sum of all term bounds.
pub fn h_bound(alpha_a: f64, alpha_s: f64, d: f64) -> f64 {
    let e = (-(alpha_a + alpha_s) * d).exp();
    if alpha_a == 0.0 {
        return 0.0;
    }
    alpha_a * (1.0 - e) / (alpha_a + alpha_s * e)
}

/// Sums the Duhamel series for `H` on the grids, one spectral group per
/// distinct `(α^a, α^s)`, until the a-priori tail drops below `eps`.
pub fn compute_h(grids: &Grids, medium: &MediumSpec, eps: f64) -> Result<GreenReport> {
    medium.validate()?;
    if !(eps > 0.0) {
        return Err(Error::InvalidInput("truncation tolerance must be > 0".into()));
    }
    let groups: Vec<_> = spectral_groups(&medium.sample(&grids.spectral))
        .into_iter()
        .filter(|g| g.extinction() > 0.0)
        .collect();
    if groups.is_empty() {
        return Err(Error::InvalidInput("compute_h needs a positive extinction coefficient".into()));
    }
    let kernel = DiscreteKernel::new(&medium.kernel, &grids.angular)?;
    let d = grids.domain.diameter();
    let nn = grids.spatial.len();
    let nd = grids.angular.len();
    let ng = groups.len();
    let extinction: Vec<f64> = groups.iter().map(|g| g.extinction()).collect();
    let scattering: Vec<f64> = groups.iter().map(|g| g.scattering).collect();
    let zero = BoundaryTable::zeros(nd, ng);

    let mut terms = 1;
    let mut theta: f64 = 0.0;
    let mut tail: f64 = 0.0;
    for g in &groups {
        let j = duhamel_depth(g.absorption, g.scattering, d, eps);
        terms = terms.max(j);
        theta = theta.max(h_bound(g.absorption, g.scattering, d));
    }
    for g in &groups {
        let r = g.scattering * -(-g.extinction() * d).exp_m1() / g.extinction();
        if g.absorption > 0.0 {
            tail = tail.max(term_bound(g.absorption, g.scattering, d, terms) / (1.0 - r));
        }
    }

    let direct: Vec<f64> = (0..nn).flat_map(|_| groups.iter().map(|g| g.absorption / (4.0 * PI))).collect();
    let mut term = sweep(grids, &extinction, &zero, Source::Isotropic(&direct));
    let mut total = term.clone();
    let mut previous = node_integrals(grids, &total);
    let mut monotone = true;
    for _ in 1..terms {
        if scattering.iter().all(|s| *s == 0.0) {
            break;
        }
        term = scatter(grids, &kernel, &extinction, &scattering, &zero, &term);
        for (t, v) in total.values.iter_mut().zip(&term.values) {
            *t += v;
        }
        let next = node_integrals(grids, &total);
        monotone &= next.iter().zip(&previous).all(|(a, b)| *a >= b - 1e-14 * b.abs().max(1.0));
        previous = next;
    }
    let integrals: Vec<f64> = previous.chunks(ng).map(|row| row.iter().copied().fold(0.0, f64::max)).collect();
    let max_integral = integrals.iter().copied().fold(0.0, f64::max);
    Ok(GreenReport {
        terms,
        tail_bound: tail,
        theta,
        bound_ok: max_integral <= theta + 1e-3,
        integrals,
        max_integral,
        monotone,
        field: total,
    })
}

/// `𝒰h`: sweep of the scattered source `α^s K h` with zero inflow.
fn scatter(
    grids: &Grids,
    kernel: &DiscreteKernel,
    extinction: &[f64],
    scattering: &[f64],
    zero: &BoundaryTable,
    h: &RadiationField,
) -> RadiationField {
    let f = extinction.len();
    let nd = grids.angular.len();
    match kernel {
        DiscreteKernel::Isotropic => {
            let mut s = vec![0.0; h.n_nodes * f];
            s.par_chunks_mut(f).enumerate().for_each(|(m, row)| {
                h.angular_integral(&grids.angular, m, row);
                for (v, a) in row.iter_mut().zip(scattering) {
                    *v *= a / (4.0 * PI);
                }
            });
            sweep(grids, extinction, zero, Source::Isotropic(&s))
        }
        DiscreteKernel::Matrix { matrix, .. } => {
            let mut s = vec![0.0; h.n_nodes * nd * f];
            s.par_chunks_mut(nd * f).enumerate().for_each(|(m, node)| {
                let inc = h.node(m);
                for i in 0..nd {
                    let out = &mut node[i * f..(i + 1) * f];
                    for ip in 0..nd {
                        let k = matrix[i * nd + ip];
                        for (o, v) in out.iter_mut().zip(&inc[ip * f..(ip + 1) * f]) {
                            *o += k * v;
                        }
                    }
                    for (o, a) in out.iter_mut().zip(scattering) {
                        *o *= a;
                    }
                }
            });
            sweep(grids, extinction, zero, Source::Directional(&s))
        }
    }
}

/// `Σ_i w_i H(x_m, n_i)` per node and group, `[node][group]`.
fn node_integrals(grids: &Grids, field: &RadiationField) -> Vec<f64> {
    let f = field.n_freq;
    let mut out = vec![0.0; field.n_nodes * f];
    out.par_chunks_mut(f).enumerate().for_each(|(m, row)| field.angular_integral(&grids.angular, m, row));
    out
}
