//! Transport operators: formal ray solutions, the boundary source term
//! `-∇·S`, volume kernels, fluxes and conservation residuals.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::numeric::pairwise_sum_by;
use crate::spectral::{planck_unchecked, AbsorptionProfile, EmissionMap};
use crate::{Error, Result, Vec3};

mod boundary;
mod field;
mod kernel;
mod medium;
mod operators;
mod sweep;

pub use boundary::{Beam, BoundarySource, BoundaryTable};
pub use field::{FieldRole, Grids, RadiationField, ScalarField, DEFAULT_RAY_DIVISIONS};
pub use kernel::{equivalent_radius, exact_mass, SelfCellRule, VolumeKernel};
pub use medium::{spectral_groups, AngularKernel, DiscreteKernel, MediumSpec, SampledMedium, SpectralGroup};
pub use operators::{
    l1, l1_diff, sup_l1_change, CombinedOperator, CombinedStep, GreyOperator, InnerOptions, KernelOptions,
    SpectralOperator, SweepOperator,
};
pub use sweep::{formal_solution_absorption, march, sweep, MarchScratch, Source};

pub(crate) use operators::invert_all;

/// `Σ_i w_i g_ij e^{-κ_j s(x_m, n_i)}` for every node and frequency,
/// `[node][freq]`.
pub fn attenuated_boundary(grids: &Grids, table: &BoundaryTable, extinction: &[f64]) -> Vec<f64> {
    let f = extinction.len();
    let mut out = vec![0.0; grids.spatial.len() * f];
    if table.is_zero() {
        return out;
    }
    out.par_chunks_mut(f).enumerate().for_each(|(m, row)| {
        for (i, (&w, &s)) in grids.angular.weights.iter().zip(grids.exits(m)).enumerate() {
            for ((o, g), k) in row.iter_mut().zip(table.row(i)).zip(extinction) {
                if *g != 0.0 {
                    *o += w * g * (-k * s).exp();
                }
            }
        }
    });
    out
}

/// `-∇·S(x) = Σ_j q_j α_j Σ_i w_i g_j(n_i) e^{-α_j s(x, n_i)}` at an
/// arbitrary interior point.
pub fn neg_div_s(x: &Vec3, boundary: &BoundarySource, alpha: &AbsorptionProfile, grids: &Grids) -> Result<f64> {
    if !grids.domain.contains(x) {
        return Err(Error::NotInterior([x.x, x.y, x.z]));
    }
    let sp = &grids.spectral;
    let mut total = 0.0;
    for (i, n) in grids.angular.nodes.iter().enumerate() {
        let s = grids.domain.exit_distance(x, n);
        let mut acc = 0.0;
        for (&nu, &q) in sp.nodes.iter().zip(&sp.weights) {
            let a = alpha.at(nu);
            let g = boundary.radiance(n, nu);
            if a > 0.0 && g > 0.0 {
                acc += q * a * g * (-a * s).exp();
            }
        }
        total += grids.angular.weights[i] * acc;
    }
    Ok(total)
}

/// [`neg_div_s`] at every spatial node.
pub fn neg_div_s_nodes(boundary: &BoundarySource, alpha: &AbsorptionProfile, grids: &Grids) -> Vec<f64> {
    let a = alpha.sample(&grids.spectral);
    let table = boundary.tabulate(&grids.angular, &grids.spectral);
    let att = attenuated_boundary(grids, &table, &a);
    let f = a.len();
    att.chunks(f)
        .map(|row| (0..f).map(|j| grids.spectral.weights[j] * a[j] * row[j]).sum())
        .collect()
}

/// Direct sum of `k_α(|x_m - η|)` against `v` plus the self-cell weight.
fn kernel_row(grids: &Grids, alpha: f64, rule: SelfCellRule, v: &[f64], m: usize) -> f64 {
    let sp = &grids.spatial;
    let h3 = sp.cell_volume();
    let x = sp.nodes[m];
    let k = |n: usize| -> f64 {
        if n == m {
            return 0.0;
        }
        let r2 = (sp.nodes[n] - x).norm_squared();
        alpha * (-alpha * r2.sqrt()).exp() / (4.0 * PI * r2) * h3
    };
    let off = pairwise_sum_by(sp.len(), |n| k(n) * v[n]);
    let diag = match rule {
        SelfCellRule::EquivalentBall => -(-alpha * equivalent_radius(sp.h)).exp_m1(),
        SelfCellRule::ExactMass => exact_mass(grids, alpha, m) - pairwise_sum_by(sp.len(), k),
    };
    off + diag * v[m]
}

/// `Σ_η α e^{-α|x-η|} / (4π|x-η|²) a(η) V` at node `node`, i.e. the grey
/// kernel in coordinates rescaled so that the absorption is one.
pub fn apply_grey_kernel(a: &ScalarField, node: usize, grids: &Grids, alpha: f64, rule: SelfCellRule) -> Result<f64> {
    if node >= grids.spatial.len() || a.len() != grids.spatial.len() {
        return Err(Error::InvalidInput("field and node must match the spatial grid".into()));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidInput(format!("absorption must be > 0, got {alpha}")));
    }
    Ok(kernel_row(grids, alpha, rule, &a.values, node))
}

/// `(1/4π) Σ_η K(x - η, w(η)) V` at node `node`, with
/// `K(r, w) = Σ_j q_j α_j² B_j(f⁻¹(w)) e^{-α_j r} / r²`.
pub fn apply_spectral_kernel(
    w: &ScalarField,
    node: usize,
    alpha: &AbsorptionProfile,
    grids: &Grids,
    rule: SelfCellRule,
) -> Result<f64> {
    if node >= grids.spatial.len() || w.len() != grids.spatial.len() {
        return Err(Error::InvalidInput("field and node must match the spatial grid".into()));
    }
    let emission = EmissionMap::new(alpha, &grids.spectral)?;
    let t = invert_all(&emission, &w.values, None)?;
    let sampled = SampledMedium { absorption: alpha.sample(&grids.spectral), scattering: vec![0.0; grids.spectral.len()] };
    let mut total = 0.0;
    for g in spectral_groups(&sampled) {
        if g.absorption == 0.0 {
            continue;
        }
        let u: Vec<f64> = t
            .iter()
            .map(|&tm| {
                g.absorption
                    * g.members
                        .iter()
                        .map(|&j| grids.spectral.weights[j] * planck_unchecked(grids.spectral.nodes[j], tm))
                        .sum::<f64>()
            })
            .collect();
        total += kernel_row(grids, g.absorption, rule, &u, node);
    }
    Ok(total)
}

/// `F(x_m) = Σ_j q_j Σ_i w_i n_i I[m, i, j]`.
pub fn flux(field: &RadiationField, m: usize, grids: &Grids) -> Vec3 {
    let node = field.node(m);
    let f = field.n_freq;
    let mut out = Vec3::zeros();
    for (i, (n, w)) in grids.angular.nodes.iter().zip(&grids.angular.weights).enumerate() {
        let e: f64 = (0..f).map(|j| grids.spectral.weights[j] * node[i * f + j]).sum();
        out += w * e * n;
    }
    out
}

/// Per-node defect `r = 4π (w - Φ[w])` of the fixed-point equation, in
/// absolute terms and relative to `4π max_m w_m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConservationResidual {
    pub absolute: Vec<f64>,
    pub relative: Vec<f64>,
    pub max_absolute: f64,
    pub max_relative: f64,
}

impl ConservationResidual {
    pub fn from_maps(w: &[f64], image: &[f64]) -> Self {
        let absolute: Vec<f64> = w.iter().zip(image).map(|(a, b)| 4.0 * PI * (a - b)).collect();
        let scale = 4.0 * PI * w.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let relative: Vec<f64> = absolute.iter().map(|r| if scale > 0.0 { r / scale } else { *r }).collect();
        let max_absolute = absolute.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let max_relative = relative.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        ConservationResidual { absolute, relative, max_absolute, max_relative }
    }
}

/// Conservation defect of a temperature field, using the fixed-point map
/// that matches the medium: grey kernel for constant absorption without
/// scattering, the spectral map for frequency-dependent absorption, and the
/// combined map when scattering is present.
pub fn conservation_residual(
    temperature: &ScalarField,
    boundary: &BoundarySource,
    medium: &MediumSpec,
    grids: &Grids,
    opts: &KernelOptions,
) -> Result<ConservationResidual> {
    let t = &temperature.values;
    if t.len() != grids.spatial.len() {
        return Err(Error::InvalidInput("temperature field does not match the spatial grid".into()));
    }
    if medium.scattering.is_zero() {
        if let AbsorptionProfile::Constant(alpha) = medium.absorption {
            let op = GreyOperator::new(grids, alpha, boundary, opts)?;
            let sigma = crate::spectral::stefan_sigma();
            let a: Vec<f64> = t.iter().map(|x| sigma * x.powi(4)).collect();
            return Ok(ConservationResidual::from_maps(&a, &op.apply(&a)));
        }
        let op = SpectralOperator::new(grids, medium, boundary, opts)?;
        let w: Vec<f64> = t.iter().map(|&x| op.emission().value(x)).collect();
        return Ok(ConservationResidual::from_maps(&w, &op.apply_temperature(t)));
    }
    if medium.is_isotropic() {
        let op = CombinedOperator::new(grids, medium, boundary, opts, InnerOptions::default())?;
        let w: Vec<f64> = t.iter().map(|&x| op.emission().value(x)).collect();
        let mut state = op.initial_state();
        let step = op.apply_temperature(t, &mut state, 0)?;
        return Ok(ConservationResidual::from_maps(&w, &step.w));
    }
    let op = SweepOperator::new(grids, medium, boundary, InnerOptions::default())?;
    let emission = op.emission().ok_or(Error::Indeterminate)?;
    let w: Vec<f64> = t.iter().map(|&x| emission.value(x)).collect();
    let src = op.emission_source(t);
    let mut field = op.uncollided(grids);
    op.solve_linear(grids, &mut field, Some(&src), 0)?;
    Ok(ConservationResidual::from_maps(&w, &op.absorbed(grids, &field)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexDomain;
    use crate::quadrature::{build_angular, build_spatial, build_spectral};
    use crate::spectral::{stefan_sigma, Interpolation};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grids(domain: ConvexDomain, h: f64, polar: usize, freq: usize) -> Grids {
        let sp = build_spatial(&domain, h).unwrap();
        Grids::with_default_ray(domain, sp, build_angular(polar, 2 * polar).unwrap(), build_spectral(1.0, freq).unwrap())
            .unwrap()
    }

    #[test]
    fn neg_div_s_at_the_centre_of_the_unit_ball() {
        let g = grids(ConvexDomain::unit_ball(), 0.25, 4, 64);
        let v = neg_div_s(&Vec3::zeros(), &BoundarySource::equilibrium(1.0), &AbsorptionProfile::Constant(1.0), &g)
            .unwrap();
        let want = 4.0 * PI * stefan_sigma() * (-1.0f64).exp();
        assert!((v - want).abs() < 1e-8 * want, "{v} vs {want}");
        assert!((want - 60.041).abs() < 1e-3);
        let zero = neg_div_s(&Vec3::zeros(), &BoundarySource::Zero, &AbsorptionProfile::Constant(1.0), &g).unwrap();
        assert_eq!(zero, 0.0);
        let nodes = neg_div_s_nodes(&BoundarySource::equilibrium(1.0), &AbsorptionProfile::Constant(1.0), &g);
        let c = g.node_index(&Vec3::zeros()).unwrap();
        assert!((nodes[c] - v).abs() < 1e-10 * v);
    }

    #[test]
    fn neg_div_s_is_positive_for_positive_sources() {
        let d = ConvexDomain::ellipsoid([0.0; 3], [1.5, 1.0, 0.7]).unwrap();
        let g = grids(d.clone(), 0.25, 4, 16);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let alpha = AbsorptionProfile::table(vec![1.0, 10.0], vec![0.5, 4.0], Interpolation::Linear).unwrap();
        for _ in 0..1000 {
            let x = Vec3::new(rng.random_range(-1.4..1.4), rng.random_range(-0.9..0.9), rng.random_range(-0.6..0.6));
            if !d.contains(&x) {
                continue;
            }
            let src = BoundarySource::Beams {
                beams: vec![Beam {
                    direction: [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.3],
                    temperature: rng.random_range(0.2..1.0),
                    exponent: 1.0,
                }],
            };
            assert!(neg_div_s(&x, &src, &alpha, &g).unwrap() > 0.0);
        }
    }

    #[test]
    fn grey_kernel_single_node_matches_operator() {
        let g = grids(ConvexDomain::unit_ball(), 0.2, 4, 8);
        let a = ScalarField::new(FieldRole::GreyEmission, g.spatial.nodes.iter().map(|x| 1.0 + x.norm()).collect());
        let k = VolumeKernel::new(&g, 1.3, SelfCellRule::ExactMass, true).unwrap();
        let all = k.apply(&a.values);
        for m in (0..g.spatial.len()).step_by(5) {
            let v = apply_grey_kernel(&a, m, &g, 1.3, SelfCellRule::ExactMass).unwrap();
            assert!((v - all[m]).abs() < 1e-12 * v);
        }
        let zero = ScalarField::zeros(FieldRole::GreyEmission, g.spatial.len());
        assert_eq!(apply_grey_kernel(&zero, 0, &g, 1.0, SelfCellRule::ExactMass).unwrap(), 0.0);
    }

    #[test]
    fn grey_kernel_is_invariant_under_rescaling() {
        // α₀ on the unit ball with spacing h equals α = 1 on the ball of
        // radius α₀ with spacing α₀ h
        let a0 = 2.5;
        let g1 = grids(ConvexDomain::unit_ball(), 0.2, 4, 8);
        let g2 = grids(ConvexDomain::ball([0.0; 3], a0).unwrap(), 0.2 * a0, 4, 8);
        assert_eq!(g1.spatial.len(), g2.spatial.len());
        let v: Vec<f64> = g1.spatial.nodes.iter().map(|x| 2.0 + x.x - x.y * x.z).collect();
        let f1 = ScalarField::new(FieldRole::GreyEmission, v.clone());
        let f2 = ScalarField::new(FieldRole::GreyEmission, v);
        for m in (0..g1.spatial.len()).step_by(9) {
            let a = apply_grey_kernel(&f1, m, &g1, a0, SelfCellRule::ExactMass).unwrap();
            let b = apply_grey_kernel(&f2, m, &g2, 1.0, SelfCellRule::ExactMass).unwrap();
            assert!((a - b).abs() < 1e-12 * a);
        }
    }

    #[test]
    fn spectral_kernel_reduces_to_grey_for_constant_absorption() {
        let g = grids(ConvexDomain::unit_ball(), 0.25, 4, 32);
        let a0 = 1.7;
        let profile = AbsorptionProfile::Constant(a0);
        let em = EmissionMap::new(&profile, &g.spectral).unwrap();
        let t: Vec<f64> = g.spatial.nodes.iter().map(|x| 0.8 + 0.2 * x.x).collect();
        let w = ScalarField::new(FieldRole::Emission, t.iter().map(|&x| em.value(x)).collect());
        for m in (0..g.spatial.len()).step_by(4) {
            let s = apply_spectral_kernel(&w, m, &profile, &g, SelfCellRule::ExactMass).unwrap();
            let grey = apply_grey_kernel(&w, m, &g, a0, SelfCellRule::ExactMass).unwrap();
            assert!((s - grey).abs() < 1e-6 * grey, "{s} vs {grey}");
            assert!(s < w.values[m].max(w.values.iter().cloned().fold(0.0, f64::max)));
        }
        let zero = ScalarField::zeros(FieldRole::Emission, g.spatial.len());
        assert_eq!(apply_spectral_kernel(&zero, 3, &profile, &g, SelfCellRule::ExactMass).unwrap(), 0.0);
    }

    #[test]
    fn spectral_kernel_mass_is_below_the_constant_field() {
        let g = grids(ConvexDomain::unit_ball(), 0.25, 4, 32);
        let profile = AbsorptionProfile::table(vec![1.0, 5.0, 20.0], vec![0.3, 2.0, 8.0], Interpolation::Linear).unwrap();
        let em = EmissionMap::new(&profile, &g.spectral).unwrap();
        let w0 = em.value(1.0);
        let w = ScalarField::new(FieldRole::Emission, vec![w0; g.spatial.len()]);
        for m in 0..g.spatial.len() {
            let v = apply_spectral_kernel(&w, m, &profile, &g, SelfCellRule::ExactMass).unwrap();
            assert!(v > 0.0 && v < w0);
        }
    }

    #[test]
    fn flux_moments() {
        let g = grids(ConvexDomain::unit_ball(), 0.5, 8, 8);
        let nd = g.angular.len();
        let mut iso = RadiationField::zeros(1, nd, 1);
        iso.values.iter_mut().for_each(|v| *v = 2.0);
        let mut g1 = g.clone();
        g1.spectral.weights = vec![1.0];
        g1.spectral.nodes = vec![1.0];
        assert!(flux(&iso, 0, &g1).norm() < 1e-10 * 8.0 * PI);
        let e = Vec3::new(1.0, 2.0, 2.0).normalize();
        // a smooth-ish hemisphere profile needs a finer rule
        let ang = build_angular(64, 128).unwrap();
        let mut g2 = g1.clone();
        g2.angular = ang;
        let mut hemi = RadiationField::zeros(1, g2.angular.len(), 1);
        for (i, n) in g2.angular.nodes.iter().enumerate() {
            hemi.values[i] = 3.0 * n.dot(&e).max(0.0);
        }
        let fl = flux(&hemi, 0, &g2);
        let want = 2.0 * PI / 3.0 * 3.0 * e;
        assert!((fl - want).norm() < 1e-3, "{fl:?}");
        let total: f64 = hemi.values.iter().zip(&g2.angular.weights).map(|(v, w)| v * w).sum();
        assert!(fl.norm() <= total);
    }

    #[test]
    fn equilibrium_is_a_fixed_point_of_every_map() {
        let d = ConvexDomain::unit_ball();
        let g = grids(d, 0.25, 4, 32);
        let t0 = 1.0;
        let temp = ScalarField::new(FieldRole::Temperature, vec![t0; g.spatial.len()]);
        let src = BoundarySource::equilibrium(t0);
        let opts = KernelOptions::default();
        let media = [
            MediumSpec::absorbing(AbsorptionProfile::Constant(1.0)),
            MediumSpec::absorbing(
                AbsorptionProfile::table(vec![1.0, 4.0], vec![0.5, 2.0], Interpolation::Step).unwrap(),
            ),
            MediumSpec {
                absorption: AbsorptionProfile::Constant(1.0),
                scattering: AbsorptionProfile::Constant(1.0),
                kernel: AngularKernel::Isotropic,
            },
            MediumSpec {
                absorption: AbsorptionProfile::Constant(1.0),
                scattering: AbsorptionProfile::Constant(0.5),
                kernel: AngularKernel::HenyeyGreenstein(0.3),
            },
        ];
        for m in &media {
            let r = conservation_residual(&temp, &src, m, &g, &opts).unwrap();
            assert!(r.max_relative <= 1e-6, "{m:?}: {}", r.max_relative);
        }
        let zero = ScalarField::zeros(FieldRole::Temperature, g.spatial.len());
        let r = conservation_residual(&zero, &BoundarySource::Zero, &media[0], &g, &opts).unwrap();
        assert_eq!(r.max_absolute, 0.0);
    }
}
