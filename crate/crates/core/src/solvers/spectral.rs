use crate::solvers::{relative_change, Monitor, SolveOptions, TemperatureSolution};
use crate::transport::{BoundarySource, ConservationResidual, FieldRole, Grids, MediumSpec, ScalarField, SpectralOperator};
use crate::{Error, Result};

/// Frequency-dependent absorption without scattering: Picard iteration
/// `w ← J[w]` from `w = 0`, with every iterate kept below the a-priori cap
/// `L = sup(-∇·S) / (4π (1 - θ))`, `θ` the largest kernel row mass.
pub fn solve_spectral(
    grids: &Grids,
    medium: &MediumSpec,
    boundary: &BoundarySource,
    opts: &SolveOptions,
) -> Result<TemperatureSolution> {
    opts.validate()?;
    medium.validate()?;
    boundary.validate()?;
    if !medium.scattering.is_zero() {
        return Err(Error::InvalidInput("the spectral solver does not handle scattering".into()));
    }
    let op = SpectralOperator::new(grids, medium, boundary, &opts.kernel)?;
    if let Some((node, &v)) = op.source().iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(Error::NegativeSource { node, value: v });
    }
    let theta = op.max_row_mass();
    if theta >= 1.0 {
        return Err(Error::InvariantViolation(format!("kernel row mass {theta} is not below one")));
    }
    let cap = op.source().iter().copied().fold(0.0, f64::max) / (1.0 - theta) * (1.0 + 1e-9);
    let mut monitor = Monitor::new("spectral", opts.tol);
    monitor.report.notes.push(format!("max kernel row mass {theta:.6}, iterate cap {cap:.6e}"));
    let n = grids.spatial.len();
    let mut w = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut converged = false;
    for _ in 0..opts.max_iter {
        let next = op.apply_temperature(&t);
        if let Some((node, &value)) = next.iter().enumerate().find(|(_, v)| **v > cap) {
            return Err(Error::CapExceeded { node, value, cap });
        }
        let r = relative_change(&next, &w);
        t = op.temperatures(&next, Some(&t))?;
        w = next;
        if monitor.push(r)? {
            converged = true;
            break;
        }
    }
    let mut report = monitor.finish(converged);
    report.conservation_norm = ConservationResidual::from_maps(&w, &op.apply_temperature(&t)).max_relative;
    if !converged {
        return Err(Error::MaxIterExceeded(Box::new(report)));
    }
    Ok(TemperatureSolution {
        emission: ScalarField::new(FieldRole::Emission, w),
        temperature: ScalarField::new(FieldRole::Temperature, t),
        field: None,
        report,
    })
}
