use crate::solvers::{Monitor, SolveOptions, SolverReport};
use crate::transport::{sup_l1_change, BoundarySource, Grids, MediumSpec, RadiationField, SweepOperator};
use crate::{Error, Result};

/// Pure scattering (`α^a ≡ 0`, `α^s > 0`): source iteration
/// `I ← T[α^s K I] + boundary` from the uncollided field. The residual is
/// `sup_m max_j Σ_i w_i |ΔI|` relative to the same norm of the new iterate.
pub fn solve_scattering(
    grids: &Grids,
    medium: &MediumSpec,
    boundary: &BoundarySource,
    opts: &SolveOptions,
) -> Result<(RadiationField, SolverReport)> {
    opts.validate()?;
    medium.validate()?;
    boundary.validate()?;
    if !medium.absorption.is_zero() {
        return Err(Error::InvalidInput("pure scattering requires zero absorption".into()));
    }
    if medium.scattering.is_zero() {
        return Err(Error::InvalidInput("pure scattering requires a nonzero scattering coefficient".into()));
    }
    let values = grids.spatial.len() * grids.angular.len() * grids.spectral.len();
    if values > opts.field_limit {
        return Err(Error::TooLarge { unknowns: values, limit: opts.field_limit });
    }
    let op = SweepOperator::new(grids, medium, boundary, opts.inner)?;
    let mut monitor = Monitor::new("scattering", opts.tol);
    let correction = op.kernel().correction();
    if correction > 0.0 {
        monitor.report.notes.push(format!("scattering kernel renormalized by up to {correction:.3e}"));
    }
    let empty = RadiationField::zeros(0, 0, 0);
    let mut field = op.uncollided(grids);
    let mut converged = false;
    for _ in 0..opts.max_iter {
        let next = op.step(grids, &field, None);
        let change = sup_l1_change(grids, &next, &field);
        let scale = sup_l1_change(grids, &next, &empty);
        field = next;
        let r = if scale > 0.0 { change / scale } else { change };
        if monitor.push(r)? {
            converged = true;
            break;
        }
    }
    let mut report = monitor.finish(converged);
    // relative change of one further sweep measures the fixed-point defect
    let image = op.step(grids, &field, None);
    let scale = sup_l1_change(grids, &image, &empty);
    let defect = sup_l1_change(grids, &image, &field);
    report.conservation_norm = if scale > 0.0 { defect / scale } else { defect };
    if !converged {
        return Err(Error::MaxIterExceeded(Box::new(report)));
    }
    if let Some(v) = field.values.iter().find(|v| **v < 0.0) {
        return Err(Error::InvariantViolation(format!("scattered radiance became negative ({v:e})")));
    }
    Ok((field, report))
}
