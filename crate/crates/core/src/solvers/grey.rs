use crate::solvers::{relative_change, Monitor, SolveOptions, TemperatureSolution};
use crate::spectral::stefan_sigma;
use crate::transport::{BoundarySource, ConservationResidual, FieldRole, GreyOperator, Grids, ScalarField};
use crate::{Error, Result};

/// Grey absorption `α > 0`: Picard iteration `a ← K_α[a] + b` from `a = 0`
/// on `a = σT⁴`, stopped when `‖a_{k+1} - a_k‖₁ ≤ tol ‖a_{k+1}‖₁`.
pub fn solve_grey(grids: &Grids, alpha: f64, boundary: &BoundarySource, opts: &SolveOptions) -> Result<TemperatureSolution> {
    opts.validate()?;
    boundary.validate()?;
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidInput(format!("grey absorption must be finite and > 0, got {alpha}")));
    }
    let op = GreyOperator::new(grids, alpha, boundary, &opts.kernel)?;
    if let Some((node, &value)) = op.source().iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(Error::NegativeSource { node, value });
    }
    let mut monitor = Monitor::new("grey", opts.tol);
    let mut a = vec![0.0; grids.spatial.len()];
    let mut converged = false;
    for _ in 0..opts.max_iter {
        let next = op.apply(&a);
        let r = relative_change(&next, &a);
        a = next;
        if monitor.push(r)? {
            converged = true;
            break;
        }
    }
    let mut report = monitor.finish(converged);
    report.conservation_norm = ConservationResidual::from_maps(&a, &op.apply(&a)).max_relative;
    if !converged {
        return Err(Error::MaxIterExceeded(Box::new(report)));
    }
    for (m, (&am, &s)) in a.iter().zip(op.source()).enumerate() {
        if am < 0.0 || (s > 0.0 && am <= 0.0) {
            return Err(Error::InvariantViolation(format!(
                "grey solution a = {am:e} at node {m} where the boundary source is {s:e}"
            )));
        }
    }
    let sigma = stefan_sigma();
    let t = a.iter().map(|v| (v / sigma).powf(0.25)).collect();
    Ok(TemperatureSolution {
        emission: ScalarField::new(FieldRole::GreyEmission, a),
        temperature: ScalarField::new(FieldRole::Temperature, t),
        field: None,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexDomain;
    use crate::quadrature::{build_angular, build_spatial, build_spectral};
    use crate::solvers::Status;

    fn grids(h: f64) -> Grids {
        let d = ConvexDomain::unit_ball();
        let sp = build_spatial(&d, h).unwrap();
        Grids::with_default_ray(d, sp, build_angular(6, 12).unwrap(), build_spectral(1.0, 32).unwrap()).unwrap()
    }

    #[test]
    fn zero_source_gives_zero_temperature() {
        let g = grids(0.2);
        let s = solve_grey(&g, 1.0, &BoundarySource::Zero, &SolveOptions::default()).unwrap();
        assert!(s.temperature.values.iter().all(|t| *t == 0.0));
        assert_eq!(s.report.status, Status::Converged);
    }

    #[test]
    fn equilibrium_boundary_gives_uniform_temperature() {
        let g = grids(0.2);
        let s = solve_grey(&g, 1.0, &BoundarySource::equilibrium(1.0), &SolveOptions::default()).unwrap();
        let err = s.temperature.values.iter().map(|t| (t - 1.0).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
        assert!(s.report.max_contraction() < 1.0);
        assert!(s.report.conservation_norm < 1e-7);
    }

    #[test]
    fn solution_is_linear_in_the_source() {
        let g = grids(0.25);
        let src = crate::transport::BoundarySource::Beams {
            beams: vec![crate::transport::Beam { direction: [1.0, 0.0, 0.0], temperature: 1.0, exponent: 2.0 }],
        };
        let base = solve_grey(&g, 2.0, &src, &SolveOptions::default()).unwrap();
        let scaled = solve_grey(&g, 2.0, &src.clone().scaled(10.0), &SolveOptions::default()).unwrap();
        for (a, b) in base.emission.values.iter().zip(&scaled.emission.values) {
            assert!((10.0 * a - b).abs() <= 1e-10 * b);
        }
    }

    #[test]
    fn rejects_bad_inputs_and_reports_slow_convergence() {
        let g = grids(0.25);
        assert!(solve_grey(&g, 0.0, &BoundarySource::Zero, &SolveOptions::default()).is_err());
        let opts = SolveOptions { max_iter: 2, ..SolveOptions::default() };
        match solve_grey(&g, 1.0, &BoundarySource::equilibrium(1.0), &opts) {
            Err(Error::MaxIterExceeded(r)) => assert_eq!(r.iterations, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
