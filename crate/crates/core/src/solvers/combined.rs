use crate::solvers::{duhamel_depth, relative_change, Monitor, SolveOptions, TemperatureSolution};
use crate::transport::{
    invert_all, spectral_groups, sweep, BoundarySource, CombinedOperator, ConservationResidual, FieldRole, Grids,
    MediumSpec, ScalarField, Source, SweepOperator,
};
use crate::{Error, Result};

/// Absorption plus scattering. Each outer step solves the linear transport
/// problem at the current temperature (inner iteration, warm-started from
/// the previous outer step) and inverts the absorbed power
/// `w = (1/4π) Σ_j q_j α^a_j Σ_i w_i I_ij` for the next temperature.
///
/// Isotropic scattering uses the integral form on mean intensities; any
/// other kernel carries the full radiance field between sweeps.
pub fn solve_combined(
    grids: &Grids,
    medium: &MediumSpec,
    boundary: &BoundarySource,
    opts: &SolveOptions,
) -> Result<TemperatureSolution> {
    opts.validate()?;
    medium.validate()?;
    boundary.validate()?;
    if medium.absorption.is_zero() {
        return Err(Error::Indeterminate);
    }
    let sampled = medium.sample(&grids.spectral);
    let diameter = grids.domain.diameter();
    let depth = spectral_groups(&sampled)
        .iter()
        .filter(|g| g.absorption > 0.0)
        .map(|g| duhamel_depth(g.absorption, g.scattering, diameter, opts.tol))
        .max()
        .unwrap_or(1);
    let values = grids.spatial.len() * grids.angular.len() * grids.spectral.len();
    let mut solution = if medium.is_isotropic() {
        integral_form(grids, medium, boundary, opts, values)?
    } else {
        if values > opts.field_limit {
            return Err(Error::TooLarge { unknowns: values, limit: opts.field_limit });
        }
        sweep_form(grids, medium, boundary, opts)?
    };
    solution.report.truncation_terms = Some(depth);
    Ok(solution)
}

fn integral_form(
    grids: &Grids,
    medium: &MediumSpec,
    boundary: &BoundarySource,
    opts: &SolveOptions,
    values: usize,
) -> Result<TemperatureSolution> {
    let op = CombinedOperator::new(grids, medium, boundary, &opts.kernel, opts.inner)?;
    let n = grids.spatial.len();
    let mut state = op.initial_state();
    let mut monitor = Monitor::new("combined", opts.tol);
    let mut w = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut converged = false;
    for outer in 0..opts.max_iter {
        let step = op.apply_temperature(&t, &mut state, outer)?;
        monitor.report.inner_iterations.push(step.inner_iterations);
        let r = relative_change(&step.w, &w);
        t = op.temperatures(&step.w, Some(&t))?;
        w = step.w;
        if monitor.push(r)? {
            converged = true;
            break;
        }
    }
    let mut report = monitor.finish(converged);
    let image = op.apply_temperature(&t, &mut state, opts.max_iter)?;
    report.conservation_norm = ConservationResidual::from_maps(&w, &image.w).max_relative;
    if !converged {
        return Err(Error::MaxIterExceeded(Box::new(report)));
    }
    let field = if values <= opts.field_limit {
        let sampled = medium.sample(&grids.spectral);
        let src = op.volume_source(&t, &sampled)?;
        let table = boundary.tabulate(&grids.angular, &grids.spectral);
        Some(sweep(grids, &sampled.extinction(), &table, Source::Isotropic(&src)))
    } else {
        report.notes.push(format!("radiance field not materialized ({values} values)"));
        None
    };
    Ok(TemperatureSolution {
        emission: ScalarField::new(FieldRole::Emission, w),
        temperature: ScalarField::new(FieldRole::Temperature, t),
        field,
        report,
    })
}

fn sweep_form(
    grids: &Grids,
    medium: &MediumSpec,
    boundary: &BoundarySource,
    opts: &SolveOptions,
) -> Result<TemperatureSolution> {
    let op = SweepOperator::new(grids, medium, boundary, opts.inner)?;
    let emission = op.emission().ok_or(Error::Indeterminate)?;
    let n = grids.spatial.len();
    let mut monitor = Monitor::new("combined", opts.tol);
    let correction = op.kernel().correction();
    if correction > 0.0 {
        monitor.report.notes.push(format!("scattering kernel renormalized by up to {correction:.3e}"));
    }
    let mut field = op.uncollided(grids);
    let mut w = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut converged = false;
    for outer in 0..opts.max_iter {
        let src = op.emission_source(&t);
        let (inner, _) = op.solve_linear(grids, &mut field, Some(&src), outer)?;
        monitor.report.inner_iterations.push(inner);
        let next = op.absorbed(grids, &field);
        let r = relative_change(&next, &w);
        t = invert_all(emission, &next, Some(&t))?;
        w = next;
        if monitor.push(r)? {
            converged = true;
            break;
        }
    }
    let mut report = monitor.finish(converged);
    let src = op.emission_source(&t);
    op.solve_linear(grids, &mut field, Some(&src), opts.max_iter)?;
    report.conservation_norm = ConservationResidual::from_maps(&w, &op.absorbed(grids, &field)).max_relative;
    if !converged {
        return Err(Error::MaxIterExceeded(Box::new(report)));
    }
    Ok(TemperatureSolution {
        emission: ScalarField::new(FieldRole::Emission, w),
        temperature: ScalarField::new(FieldRole::Temperature, t),
        field: Some(field),
        report,
    })
}
