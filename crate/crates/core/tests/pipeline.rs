//! Cross-module checks on small grids: solve, reconstruct the field, then
//! audit it with the conservation residual, the entropy report and the
//! dense reference solver.

use radtemp::entropy::{absorbing_field, entropy_report};
use radtemp::quadrature::{build_angular, build_spatial, build_spectral, build_surface, AngularGrid};
use radtemp::solvers::{oracle_solve, solve_combined, solve_grey, solve_spectral, OracleMode, SolveOptions};
use radtemp::spectral::{AbsorptionProfile, Interpolation};
use radtemp::transport::{
    conservation_residual, AngularKernel, Beam, BoundarySource, Grids, KernelOptions, MediumSpec,
};
use radtemp::ConvexDomain;

fn ball_grids(h: f64, angular: AngularGrid, n_freq: usize) -> Grids {
    let d = ConvexDomain::unit_ball();
    let sp = build_spatial(&d, h).unwrap();
    Grids::with_default_ray(d, sp, angular, build_spectral(1.0, n_freq).unwrap()).unwrap()
}

fn opposing_beams() -> BoundarySource {
    BoundarySource::Beams {
        beams: vec![
            Beam { direction: [0.0, 0.0, 1.0], temperature: 1.0, exponent: 0.0 },
            Beam { direction: [0.0, 0.0, -1.0], temperature: 0.8, exponent: 0.0 },
        ],
    }
}

#[test]
fn non_equilibrium_grey_solution_produces_entropy() {
    let g = ball_grids(0.25, build_angular(6, 12).unwrap(), 32);
    let medium = MediumSpec::absorbing(AbsorptionProfile::Constant(1.0));
    let src = opposing_beams();
    let sol = solve_grey(&g, 1.0, &src, &SolveOptions::default()).unwrap();
    let field = absorbing_field(&g, &medium, &src, &sol.temperature.values).unwrap();
    let surface = build_surface(&g.domain, 8, 16).unwrap();
    let r = entropy_report(&g, &surface, &medium, &src, Some(&sol.temperature.values), &field).unwrap();
    assert!(r.min_pointwise_production >= -1e-15, "{r:?}");
    assert!(r.production_volume_integral > 0.0);
    assert!(r.phi_out + r.phi_in > 0.0, "{r:?}");
    // energy in equals energy out in a stationary state
    assert!((r.i_out + r.i_in).abs() <= 1e-2 * r.i_out, "{r:?}");
}

#[test]
fn solved_temperatures_have_small_conservation_defects() {
    let g = ball_grids(0.25, build_angular(4, 8).unwrap(), 16);
    let src = opposing_beams();
    let opts = SolveOptions { tol: 1e-10, ..SolveOptions::default() };
    let grey = MediumSpec::absorbing(AbsorptionProfile::Constant(1.5));
    let sol = solve_grey(&g, 1.5, &src, &opts).unwrap();
    let r = conservation_residual(&sol.temperature, &src, &grey, &g, &KernelOptions::default()).unwrap();
    assert!(r.max_relative <= 1e-8, "grey {}", r.max_relative);

    let banded = AbsorptionProfile::table(vec![0.5, 2.0, 6.0], vec![0.5, 2.0, 1.0], Interpolation::Step).unwrap();
    let spectral = MediumSpec::absorbing(banded);
    let sol = solve_spectral(&g, &spectral, &src, &opts).unwrap();
    let r = conservation_residual(&sol.temperature, &src, &spectral, &g, &KernelOptions::default()).unwrap();
    assert!(r.max_relative <= 1e-8, "spectral {}", r.max_relative);
}

#[test]
fn zero_asymmetry_sweep_matches_isotropic_integral_form() {
    let g = ball_grids(0.4, build_angular(4, 8).unwrap(), 8);
    let src = opposing_beams();
    let opts = SolveOptions { tol: 1e-9, ..SolveOptions::default() };
    let medium = |kernel| MediumSpec {
        absorption: AbsorptionProfile::Constant(1.0),
        scattering: AbsorptionProfile::Constant(1.0),
        kernel,
    };
    let iso = solve_combined(&g, &medium(AngularKernel::Isotropic), &src, &opts).unwrap();
    let hg = solve_combined(&g, &medium(AngularKernel::HenyeyGreenstein(0.0)), &src, &opts).unwrap();
    assert!(hg.report.truncation_terms.is_some());
    let worst = iso
        .temperature
        .values
        .iter()
        .zip(&hg.temperature.values)
        .map(|(a, b)| (a - b).abs() / a)
        .fold(0.0, f64::max);
    assert!(worst <= 2e-2, "{worst}");
}

#[test]
fn combined_solver_agrees_with_the_dense_reference() {
    let g = ball_grids(2.0 / 7.0, AngularGrid::lebedev26(), 8);
    let src = opposing_beams();
    let medium = MediumSpec {
        absorption: AbsorptionProfile::Constant(1.0),
        scattering: AbsorptionProfile::Constant(0.5),
        kernel: AngularKernel::Isotropic,
    };
    let sol = solve_combined(&g, &medium, &src, &SolveOptions::default()).unwrap();
    let reference = oracle_solve(&g, &medium, &src, OracleMode::Combined).unwrap();
    let t = reference.temperature.unwrap();
    let worst = sol.temperature.values.iter().zip(&t).map(|(a, b)| (a - b).abs() / b).fold(0.0, f64::max);
    assert!(worst <= 5e-3, "{worst}");
}
