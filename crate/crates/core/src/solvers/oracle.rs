use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::quadrature::ray_nodes;
use crate::spectral::{planck_unchecked, stefan_sigma, AbsorptionProfile, EmissionMap};
use crate::transport::{BoundarySource, DiscreteKernel, Grids, MediumSpec, RadiationField};
use crate::{Error, Result};

/// Largest `nodes × directions × frequencies` the oracle accepts.
pub const ORACLE_LIMIT: usize = 100_000;

const ORACLE_TOL: f64 = 1e-10;
const ORACLE_MAX_ITER: usize = 20_000;
/// Simpson steps per grid spacing along each ray.
const STEPS_PER_CELL: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    Grey,
    Spectral,
    Combined,
    Scattering,
}

#[derive(Debug, Clone)]
pub struct OracleSolution {
    /// `None` in scattering mode.
    pub temperature: Option<Vec<f64>>,
    /// Frequency-integrated (one frequency) in grey mode.
    pub field: RadiationField,
    pub iterations: usize,
}

/// Sparse rows of the ray-integral map `I(x_m, n_i) = Σ_p A[(m,i), p] S(x_p, n_i)`
/// for one extinction coefficient.
struct RayMap {
    rows: Vec<Vec<(u32, f64)>>,
    /// `e^{-κ s(x_m, n_i)}`.
    attenuation: Vec<f64>,
}

impl RayMap {
    fn new(grids: &Grids, kappa: f64) -> Result<Self> {
        let nn = grids.spatial.len();
        let nd = grids.angular.len();
        let h = grids.spatial.h;
        let built: Vec<Result<(Vec<(u32, f64)>, f64)>> = (0..nn * nd)
            .into_par_iter()
            .map(|row| {
                let (m, i) = (row / nd, row % nd);
                let x = grids.spatial.nodes[m];
                let n = grids.angular.nodes[i];
                let hit = grids.domain.backward_exit(&x, &n)?;
                let s = hit.path_length;
                let steps = ((STEPS_PER_CELL * s / h).ceil() as usize).max(2);
                let mut dense: Vec<(u32, f64)> = Vec::new();
                let mut mass = 0.0;
                for (xi, w) in ray_nodes(&hit, steps)? {
                    let p = hit.entry + xi * n;
                    let st = grids.spatial.stencil(&p);
                    let a = w * (-kappa * (s - xi)).exp();
                    mass += a;
                    for k in 0..st.len {
                        dense.push((st.idx[k], a * st.w[k]));
                    }
                }
                // rows integrate constants exactly: Σ a = ∫_0^s e^{-κ(s-ξ)} dξ
                let exact = if kappa > 0.0 { -(-kappa * s).exp_m1() / kappa } else { s };
                if mass > 0.0 {
                    let c = exact / mass;
                    dense.iter_mut().for_each(|e| e.1 *= c);
                }
                dense.sort_unstable_by_key(|e| e.0);
                let mut merged: Vec<(u32, f64)> = Vec::with_capacity(dense.len());
                for (c, v) in dense {
                    match merged.last_mut() {
                        Some(last) if last.0 == c => last.1 += v,
                        _ => merged.push((c, v)),
                    }
                }
                Ok((merged, (-kappa * s).exp()))
            })
            .collect();
        let mut rows = Vec::with_capacity(nn * nd);
        let mut attenuation = Vec::with_capacity(nn * nd);
        for r in built {
            let (row, att) = r?;
            rows.push(row);
            attenuation.push(att);
        }
        Ok(RayMap { rows, attenuation })
    }
}

/// Brute-force reference: sparse ray-quadrature maps for every extinction
/// value, iterated jointly on `(I, T)` until the radiance changes by less
/// than `1e-10` relative. Independent of the kernel and sweep machinery.
pub fn oracle_solve(
    grids: &Grids,
    medium: &MediumSpec,
    boundary: &BoundarySource,
    mode: OracleMode,
) -> Result<OracleSolution> {
    medium.validate()?;
    boundary.validate()?;
    let nn = grids.spatial.len();
    let nd = grids.angular.len();
    let nf = grids.spectral.len();
    let unknowns = nn * nd * nf;
    if unknowns > ORACLE_LIMIT {
        return Err(Error::TooLarge { unknowns, limit: ORACLE_LIMIT });
    }
    let sp = &grids.spectral;
    let absorption = medium.absorption.sample(sp);
    let scattering = medium.scattering.sample(sp);
    match mode {
        OracleMode::Grey => {
            if !matches!(medium.absorption, AbsorptionProfile::Constant(a) if a > 0.0) || !medium.scattering.is_zero() {
                return Err(Error::InvalidInput("grey oracle needs constant absorption and no scattering".into()));
            }
        }
        OracleMode::Spectral => {
            if !medium.scattering.is_zero() {
                return Err(Error::InvalidInput("spectral oracle does not handle scattering".into()));
            }
        }
        OracleMode::Combined => {}
        OracleMode::Scattering => {
            if !medium.absorption.is_zero() {
                return Err(Error::InvalidInput("scattering oracle needs zero absorption".into()));
            }
        }
    }
    let kernel = DiscreteKernel::new(&medium.kernel, &grids.angular)?;

    // grey mode works on the frequency-integrated radiance
    let (nf_eff, kappas, g_table): (usize, Vec<f64>, Vec<f64>) = if mode == OracleMode::Grey {
        let g: Vec<f64> = grids
            .angular
            .nodes
            .iter()
            .map(|n| (0..nf).map(|j| sp.weights[j] * boundary.radiance(n, sp.nodes[j])).sum())
            .collect();
        (1, vec![absorption[0]], g)
    } else {
        let g = grids
            .angular
            .nodes
            .iter()
            .flat_map(|n| sp.nodes.iter().map(move |&nu| boundary.radiance(n, nu)))
            .collect();
        let k = absorption.iter().zip(&scattering).map(|(a, s)| a + s).collect();
        (nf, k, g)
    };

    let mut distinct: Vec<f64> = Vec::new();
    let mut map_of = Vec::with_capacity(nf_eff);
    for &k in &kappas {
        match distinct.iter().position(|d| *d == k) {
            Some(p) => map_of.push(p),
            None => {
                map_of.push(distinct.len());
                distinct.push(k);
            }
        }
    }
    let maps = distinct.iter().map(|&k| RayMap::new(grids, k)).collect::<Result<Vec<_>>>()?;

    let emission = match mode {
        OracleMode::Spectral | OracleMode::Combined => {
            let e = EmissionMap::new(&medium.absorption, sp)?;
            if e.is_degenerate() {
                return Err(Error::Indeterminate);
            }
            Some(e)
        }
        _ => None,
    };
    let sigma = stefan_sigma();
    let mut field = RadiationField::zeros(nn, nd, nf_eff);
    let mut temperature: Vec<f64> = vec![0.0; nn];
    let mut source = vec![0.0; nn * nd * nf_eff];
    let mut iterations = 0;
    loop {
        iterations += 1;
        // volume source S[m][i][j]
        source.par_chunks_mut(nd * nf_eff).enumerate().for_each(|(m, node)| {
            let t = temperature[m];
            let inc = field.node(m);
            let mut mean = vec![0.0; nf_eff];
            field.angular_integral(&grids.angular, m, &mut mean);
            for i in 0..nd {
                for j in 0..nf_eff {
                    let mut s = match mode {
                        OracleMode::Grey => absorption[0] * sigma * t.powi(4),
                        OracleMode::Scattering => 0.0,
                        _ => absorption[j] * planck_unchecked(sp.nodes[j], t),
                    };
                    if mode == OracleMode::Combined || mode == OracleMode::Scattering {
                        let scat = match &kernel {
                            DiscreteKernel::Isotropic => mean[j] / (4.0 * PI),
                            DiscreteKernel::Matrix { matrix, .. } => {
                                (0..nd).map(|ip| matrix[i * nd + ip] * inc[ip * nf_eff + j]).sum()
                            }
                        };
                        s += scattering[j] * scat;
                    }
                    node[i * nf_eff + j] = s;
                }
            }
        });
        let mut next = RadiationField::zeros(nn, nd, nf_eff);
        next.values.par_chunks_mut(nd * nf_eff).enumerate().for_each(|(m, node)| {
            for i in 0..nd {
                let row = m * nd + i;
                for j in 0..nf_eff {
                    let map = &maps[map_of[j]];
                    let mut v = map.attenuation[row] * g_table[i * nf_eff + j];
                    for &(p, a) in &map.rows[row] {
                        v += a * source[(p as usize * nd + i) * nf_eff + j];
                    }
                    node[i * nf_eff + j] = v;
                }
            }
        });
        let scale = next.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let change = next.values.iter().zip(&field.values).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        field = next;
        if mode != OracleMode::Scattering {
            let mut phi = vec![0.0; nf_eff];
            for m in 0..nn {
                field.angular_integral(&grids.angular, m, &mut phi);
                temperature[m] = match mode {
                    OracleMode::Grey => ((phi[0] / (4.0 * PI)) / sigma).powf(0.25),
                    _ => {
                        let w: f64 = (0..nf).map(|j| sp.weights[j] * absorption[j] * phi[j]).sum::<f64>() / (4.0 * PI);
                        let e = emission.as_ref().expect("emission map exists in this mode");
                        e.invert_from(w, Some(temperature[m]))
                            .map_err(|e| Error::InversionFailure { node: m, source: Box::new(e) })?
                    }
                };
            }
        }
        if change <= ORACLE_TOL * scale {
            break;
        }
        if iterations >= ORACLE_MAX_ITER {
            let mut report = super::SolverReport::new("oracle");
            report.iterations = iterations;
            report.residual_history.push(if scale > 0.0 { change / scale } else { change });
            return Err(Error::MaxIterExceeded(Box::new(report)));
        }
    }
    Ok(OracleSolution {
        temperature: (mode != OracleMode::Scattering).then_some(temperature),
        field,
        iterations,
    })
}
