//! The four subcommands. Each returns the process exit code.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::Serialize;

use radtemp::entropy::{absorbing_field, entropy_report, max_entropy_probe, EntropyReport};
use radtemp::quadrature::{build_angular, build_spatial, build_spectral, AngularGrid};
use radtemp::solvers::{
    compute_h, oracle_solve, solve_combined, solve_grey, solve_scattering, solve_spectral, OracleMode, SolveOptions,
    SolverReport, TemperatureSolution,
};
use radtemp::spectral::{planck, stefan_sigma, AbsorptionProfile};
use radtemp::transport::{
    conservation_residual, AngularKernel, ConservationResidual, DiscreteKernel, Grids, MediumSpec, RadiationField,
    SelfCellRule, SweepOperator, VolumeKernel,
};
use radtemp::{ConvexDomain, Vec3};

use crate::config::{ConfigError, Mode, RunConfig};
use crate::io::{
    read_field_dump, read_sidecar, write_field_dump, write_json, write_node_table, ArtifactError, ConservationSummary,
    FieldDump, NodeRow, RunReport, FIELD_DUMP, NODE_TABLE, REPORT,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_NO_CONVERGENCE: u8 = 2;
pub const EXIT_INVARIANT: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("artifact error: {0}")]
    Artifact(#[from] ArtifactError),
    #[error("solver error: {0}")]
    Solver(#[from] radtemp::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use radtemp::Error as E;
        match self {
            CliError::Config(_) | CliError::Artifact(_) => EXIT_CONFIG,
            CliError::Solver(e) => match e {
                E::MaxIterExceeded(_) | E::InnerDiverged { .. } => EXIT_NO_CONVERGENCE,
                E::InvariantViolation(_) | E::CapExceeded { .. } | E::InversionFailure { .. } | E::NotBracketable { .. } => {
                    EXIT_INVARIANT
                }
                _ => EXIT_CONFIG,
            },
        }
    }
}

/// Settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Context {
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: usize,
    pub quiet: bool,
}

impl Context {
    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }
}

fn load(path: &Path, ctx: &Context) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = ctx.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &ctx.output {
        cfg.output.directory = dir.clone();
    }
    Ok(cfg)
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| ArtifactError::Io { path: dir.to_path_buf(), source }.into())
}

/// Result of one production solve, whatever the mode.
struct Solved {
    temperature: Vec<f64>,
    emission: Vec<f64>,
    residual: ConservationResidual,
    field: Option<RadiationField>,
    report: SolverReport,
    notes: Vec<String>,
}

fn temperature_run(
    cfg: &RunConfig,
    grids: &Grids,
    medium: &MediumSpec,
    opts: &SolveOptions,
    sol: TemperatureSolution,
) -> Result<Solved, CliError> {
    let mut notes = Vec::new();
    let residual = conservation_residual(&sol.temperature, &cfg.boundary, medium, grids, &opts.kernel)?;
    let want_field = cfg.output.field || cfg.output.entropy;
    let field = match (cfg.mode, sol.field) {
        (_, Some(f)) => Some(f),
        (Mode::Grey | Mode::Spectral, None) if want_field => {
            Some(absorbing_field(grids, medium, &cfg.boundary, &sol.temperature.values)?)
        }
        (_, None) => {
            if want_field {
                notes.push("radiation field exceeds solver.field_limit and was not materialized".into());
            }
            None
        }
    };
    Ok(Solved {
        temperature: sol.temperature.values,
        emission: sol.emission.values,
        residual,
        field,
        report: sol.report,
        notes,
    })
}

/// Pure scattering has no temperature; the table reports the mean
/// radiation energy `w = Σ_j q_j ∫ I dn / 4π` and `T = (w/σ)^¼`.
fn scattering_run(cfg: &RunConfig, grids: &Grids, medium: &MediumSpec, opts: &SolveOptions) -> Result<Solved, CliError> {
    let (field, report) = solve_scattering(grids, medium, &cfg.boundary, opts)?;
    let op = SweepOperator::new(grids, medium, &cfg.boundary, opts.inner)?;
    let image = op.step(grids, &field, None);
    let energy = |f: &RadiationField| -> Vec<f64> {
        let mut phi = vec![0.0; f.n_freq];
        (0..f.n_nodes)
            .map(|m| {
                f.angular_integral(&grids.angular, m, &mut phi);
                phi.iter().zip(&grids.spectral.weights).map(|(p, q)| p * q).sum::<f64>() / (4.0 * PI)
            })
            .collect()
    };
    let w = energy(&field);
    let residual = ConservationResidual::from_maps(&w, &energy(&image));
    let sigma = stefan_sigma();
    Ok(Solved {
        temperature: w.iter().map(|v| (v / sigma).powf(0.25)).collect(),
        emission: w,
        residual,
        field: Some(field),
        report,
        notes: vec!["pure scattering: T is the radiation temperature (w/sigma)^(1/4) of the mean energy".into()],
    })
}

fn solve_mode(cfg: &RunConfig, grids: &Grids, opts: &SolveOptions) -> Result<Solved, CliError> {
    let medium = cfg.medium_spec();
    match cfg.mode {
        Mode::Grey => {
            let AbsorptionProfile::Constant(alpha) = medium.absorption else {
                unreachable!("validated: grey mode has constant absorption")
            };
            let sol = solve_grey(grids, alpha, &cfg.boundary, opts)?;
            temperature_run(cfg, grids, &medium, opts, sol)
        }
        Mode::Spectral => {
            let sol = solve_spectral(grids, &medium, &cfg.boundary, opts)?;
            temperature_run(cfg, grids, &medium, opts, sol)
        }
        Mode::Combined => {
            let sol = solve_combined(grids, &medium, &cfg.boundary, opts)?;
            temperature_run(cfg, grids, &medium, opts, sol)
        }
        Mode::Scattering => scattering_run(cfg, grids, &medium, opts),
    }
}

fn report_failure(cfg: &RunConfig, ctx: &Context, grids: &Grids, err: &CliError) {
    let CliError::Solver(radtemp::Error::MaxIterExceeded(report)) = err else {
        return;
    };
    let dir = &cfg.output.directory;
    let run = RunReport {
        command: "solve",
        version: env!("CARGO_PKG_VERSION"),
        threads: ctx.threads,
        nodes: grids.spatial.len(),
        solver: report,
        conservation: None,
        entropy: None,
        field_dump: None,
        notes: vec!["no convergence; no node table written".into()],
        config: cfg,
    };
    if create_dir(dir).is_ok() {
        let _ = write_json(&dir.join(REPORT), &run);
    }
}

pub fn cmd_solve(config: &Path, ctx: &Context) -> Result<u8, CliError> {
    let cfg = load(config, ctx)?;
    let grids = cfg.grids()?;
    let opts = cfg.solve_options();
    ctx.say(format!(
        "solving {} on {} nodes x {} directions x {} frequencies",
        cfg.mode.name(),
        grids.spatial.len(),
        grids.angular.len(),
        grids.spectral.len()
    ));
    let solved = match solve_mode(&cfg, &grids, &opts) {
        Ok(s) => s,
        Err(e) => {
            report_failure(&cfg, ctx, &grids, &e);
            return Err(e);
        }
    };
    let dir = &cfg.output.directory;
    create_dir(dir)?;

    let rows: Vec<NodeRow> = (0..grids.spatial.len())
        .map(|m| {
            let x = grids.spatial.nodes[m];
            NodeRow {
                x: [x.x, x.y, x.z],
                temperature: solved.temperature[m],
                emission: solved.emission[m],
                residual: solved.residual.relative[m],
            }
        })
        .collect();
    write_node_table(&dir.join(NODE_TABLE), &rows)?;

    let temperature = (cfg.mode != Mode::Scattering).then_some(solved.temperature.as_slice());
    let entropy = match (&solved.field, cfg.output.entropy) {
        (Some(f), true) => {
            let surface = cfg.surface_grid()?;
            Some(entropy_report(&grids, &surface, &cfg.medium_spec(), &cfg.boundary, temperature, f)?)
        }
        _ => None,
    };
    let mut field_dump = None;
    if let (Some(f), true) = (&solved.field, cfg.output.field) {
        let path = dir.join(FIELD_DUMP);
        let dump = FieldDump::new(&grids, temperature.map(<[f64]>::to_vec), f.clone());
        write_field_dump(&path, &dump, &cfg)?;
        field_dump = Some(path.display().to_string());
    }
    let mut notes = solved.report.notes.clone();
    notes.extend(solved.notes.iter().cloned());
    let run = RunReport {
        command: "solve",
        version: env!("CARGO_PKG_VERSION"),
        threads: ctx.threads,
        nodes: grids.spatial.len(),
        solver: &solved.report,
        conservation: Some(ConservationSummary {
            max_absolute: solved.residual.max_absolute,
            max_relative: solved.residual.max_relative,
        }),
        entropy: entropy.as_ref(),
        field_dump,
        notes,
        config: &cfg,
    };
    write_json(&dir.join(REPORT), &run)?;

    let r = &solved.report;
    let (lo, hi) = solved.temperature.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), t| (a.min(*t), b.max(*t)));
    ctx.say(format!(
        "converged in {} iterations (residual {:.3e}, {:.2}s); T in [{lo:.6}, {hi:.6}]; conservation defect {:.3e}",
        r.iterations,
        r.final_residual(),
        r.wall_time,
        solved.residual.max_relative
    ));
    if let Some(e) = &entropy {
        print_entropy(ctx, e);
    }
    ctx.say(format!("artifacts written to {}", dir.display()));
    Ok(EXIT_OK)
}

fn print_entropy(ctx: &Context, e: &EntropyReport) {
    ctx.say(format!("entropy production     {:.6e}", e.production_volume_integral));
    ctx.say(format!("  of which scattering  {:.6e}", e.scattering_production));
    ctx.say(format!("min pointwise density  {:.6e}", e.min_pointwise_production));
    ctx.say(format!("phi_in  {:.6e}   phi_out {:.6e}", e.phi_in, e.phi_out));
    ctx.say(format!("i_in    {:.6e}   i_out   {:.6e}", e.i_in, e.i_out));
    ctx.say(format!("balance defect         {:.3e}", e.balance_defect));
}

pub fn cmd_entropy(dump_path: &Path, ctx: &Context) -> Result<u8, CliError> {
    let dump = read_field_dump(dump_path)?;
    let sidecar = read_sidecar(dump_path)?;
    let cfg = sidecar.config;
    let grids = cfg.grids()?;
    if !dump.matches(&grids) {
        return Err(ArtifactError::Unreadable {
            path: dump_path.to_path_buf(),
            reason: "grid descriptors differ from the grids rebuilt from the embedded config".into(),
        }
        .into());
    }
    let surface = cfg.surface_grid()?;
    let report = entropy_report(
        &grids,
        &surface,
        &cfg.medium_spec(),
        &cfg.boundary,
        dump.temperature.as_deref(),
        &dump.field,
    )?;
    print_entropy(ctx, &report);
    if let Some(dir) = &ctx.output {
        create_dir(dir)?;
        write_json(&dir.join("entropy.json"), &report)?;
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct OracleComparison {
    mode: &'static str,
    quantity: &'static str,
    max_deviation: f64,
    mean_deviation: f64,
    tolerance: f64,
    pass: bool,
    production_iterations: usize,
    oracle_iterations: usize,
}

/// Max and mean absolute deviation, both relative to the largest reference
/// magnitude.
fn deviation(a: &[f64], b: &[f64]) -> (f64, f64) {
    let scale = b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs() / scale);
    let (max, sum) = diffs.fold((0.0_f64, 0.0), |(m, s), d| (m.max(d), s + d));
    (max, sum / a.len().max(1) as f64)
}

pub fn cmd_oracle(config: &Path, ctx: &Context) -> Result<u8, CliError> {
    let cfg = load(config, ctx)?;
    let grids = cfg.grids()?;
    let medium = cfg.medium_spec();
    let opts = cfg.solve_options();
    let mode = match cfg.mode {
        Mode::Grey => OracleMode::Grey,
        Mode::Spectral => OracleMode::Spectral,
        Mode::Combined => OracleMode::Combined,
        Mode::Scattering => OracleMode::Scattering,
    };
    let reference = oracle_solve(&grids, &medium, &cfg.boundary, mode)?;
    let solved = solve_mode(&cfg, &grids, &opts)?;
    let (quantity, (max, mean)) = match (&reference.temperature, &solved.field) {
        (Some(t), _) => ("temperature", deviation(&solved.temperature, t)),
        (None, Some(f)) => ("radiance", deviation(&f.values, &reference.field.values)),
        (None, None) => unreachable!("pure scattering always returns its field"),
    };
    let tol = cfg.oracle.tolerance;
    let cmp = OracleComparison {
        mode: cfg.mode.name(),
        quantity,
        max_deviation: max,
        mean_deviation: mean,
        tolerance: tol,
        pass: max <= tol,
        production_iterations: solved.report.iterations,
        oracle_iterations: reference.iterations,
    };
    ctx.say(format!(
        "{} {quantity}: max deviation {max:.3e}, mean {mean:.3e} (tolerance {tol:.1e}) -> {}",
        cmp.mode,
        if cmp.pass { "PASS" } else { "FAIL" }
    ));
    if !cmp.pass && ctx.quiet {
        eprintln!("oracle deviation {max:.3e} exceeds tolerance {tol:.1e}");
    }
    let dir = &cfg.output.directory;
    create_dir(dir)?;
    write_json(&dir.join("oracle.json"), &cmp)?;
    Ok(if cmp.pass { EXIT_OK } else { EXIT_INVARIANT })
}

#[derive(Debug, Clone, Serialize)]
pub struct Identity {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

const STEFAN_TOL: f64 = 1e-8;
const KERNEL_MASS_TOL: f64 = 1e-4;
const KERNEL_EXACT_TOL: f64 = 1e-9;
const NORMALIZATION_TOL: f64 = 1e-10;
const MOMENT_TOL: f64 = 1e-12;
const RAY_FD_TOL: f64 = 1e-4;
const H_BOUND_SLACK: f64 = 1e-3;
const DUHAMEL_EPS: f64 = 1e-10;

fn identity(name: &'static str, check: impl FnOnce() -> radtemp::Result<(bool, String)>) -> Identity {
    match check() {
        Ok((pass, detail)) => Identity { name, pass, detail },
        Err(e) => Identity { name, pass: false, detail: format!("error: {e}") },
    }
}

fn stefan_boltzmann() -> radtemp::Result<(bool, String)> {
    let sigma = stefan_sigma();
    let exact = 2.0 * PI.powi(4) / 15.0;
    let mut worst = (sigma / exact - 1.0).abs();
    let mut measured = 0.0;
    for t in [0.5, 1.0, 2.0] {
        let sp = build_spectral(t, 64)?;
        let v = sp.integrate(|nu| planck(nu, t).unwrap_or(f64::NAN));
        if t == 1.0 {
            measured = v;
        }
        worst = worst.max((v / (sigma * t.powi(4)) - 1.0).abs());
    }
    Ok((
        worst <= STEFAN_TOL,
        format!("sigma measured {measured:.12} vs 2pi^4/15 = {exact:.12}, max rel err {worst:.2e} (tol {STEFAN_TOL:.0e})"),
    ))
}

/// Centre row of the volume kernel on a ball of radius `R` carries mass
/// `1 - e^{-αR}`; no row reaches one.
fn kernel_mass(scale: f64) -> radtemp::Result<(bool, String)> {
    let (alpha, r) = (2.0, 3.0);
    let d = ConvexDomain::ball([0.0; 3], r)?;
    let sp = build_spatial(&d, r / 10.0)?;
    let g = Grids::with_default_ray(d, sp, build_angular(8, 16)?, build_spectral(1.0, 8)?)?;
    let c = g.node_index(&Vec3::zeros())?;
    let k = VolumeKernel::new(&g, alpha, SelfCellRule::ExactMass, false)?.with_scale(scale);
    let want = -(-alpha * r).exp_m1();
    let centre = (k.row_mass(c) - want).abs();
    let exact = (0..g.spatial.len())
        .map(|m| (k.row_mass(m) - radtemp::transport::exact_mass(&g, alpha, m)).abs())
        .fold(0.0, f64::max);
    let max = k.row_masses().into_iter().fold(0.0, f64::max);
    Ok((
        centre <= KERNEL_MASS_TOL && exact <= KERNEL_EXACT_TOL && max < 1.0,
        format!(
            "centre mass err {centre:.2e} (tol {KERNEL_MASS_TOL:.0e}), max row vs exact mass {exact:.2e} \
             (tol {KERNEL_EXACT_TOL:.0e}), max row mass {max:.6} (< 1)"
        ),
    ))
}

fn scattering_normalization() -> radtemp::Result<(bool, String)> {
    let angular = build_angular(8, 16)?;
    let mut worst: f64 = 0.0;
    for kernel in [AngularKernel::Isotropic, AngularKernel::HenyeyGreenstein(0.6), AngularKernel::HenyeyGreenstein(-0.3)] {
        worst = worst.max(DiscreteKernel::new(&kernel, &angular)?.normalization_defect(&angular));
    }
    Ok((worst <= NORMALIZATION_TOL, format!("max |row or column mass - 1| {worst:.2e} (tol {NORMALIZATION_TOL:.0e})")))
}

fn sphere_moments() -> radtemp::Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for grid in [build_angular(8, 16)?, build_angular(3, 6)?, AngularGrid::lebedev26()] {
        let total: f64 = grid.weights.iter().sum();
        worst = worst.max((total - 4.0 * PI).abs());
        for a in 0..3 {
            worst = worst.max(grid.integrate(|n| n[a]).abs());
            for b in 0..3 {
                let want = if a == b { 4.0 * PI / 3.0 } else { 0.0 };
                worst = worst.max((grid.integrate(|n| n[a] * n[b]) - want).abs());
            }
        }
    }
    Ok((worst <= MOMENT_TOL, format!("max moment error {worst:.2e} (tol {MOMENT_TOL:.0e})")))
}

/// `n·∇s(x, n) = 1` by central differences on an ellipsoid, over a
/// deterministic low-discrepancy set of points and directions.
fn ray_identity() -> radtemp::Result<(bool, String)> {
    let d = ConvexDomain::ellipsoid([0.1, -0.2, 0.0], [1.5, 1.0, 0.7])?;
    let (lo, hi) = d.bounding_box();
    let eps = 1e-5;
    let golden = [0.819_172_513_396_164_4, 0.671_043_606_703_789_2, 0.549_700_477_901_970_4];
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let mut k = 0u64;
    while count < 1000 && k < 100_000 {
        k += 1;
        let u = golden.map(|g| (0.5 + g * k as f64).fract());
        let x = Vec3::new(
            lo.x + u[0] * (hi.x - lo.x),
            lo.y + u[1] * (hi.y - lo.y),
            lo.z + u[2] * (hi.z - lo.z),
        );
        let z = 1.0 - 2.0 * (k as f64 * 0.618_033_988_749_894_9).fract();
        let phi = 2.0 * PI * (k as f64 * 0.754_877_666_246_692_7).fract();
        let rho = (1.0 - z * z).max(0.0).sqrt();
        let n = Vec3::new(rho * phi.cos(), rho * phi.sin(), z);
        let (xp, xm) = (x + eps * n, x - eps * n);
        if !(d.contains(&x) && d.contains(&xp) && d.contains(&xm)) {
            continue;
        }
        let sp = d.backward_exit(&xp, &n)?.path_length;
        let sm = d.backward_exit(&xm, &n)?.path_length;
        worst = worst.max(((sp - sm) / (2.0 * eps) - 1.0).abs());
        count += 1;
    }
    Ok((
        worst <= RAY_FD_TOL && count == 1000,
        format!("max |n.grad s - 1| {worst:.2e} over {count} points (tol {RAY_FD_TOL:.0e})"),
    ))
}

fn h_bound_check() -> radtemp::Result<(bool, String)> {
    let d = ConvexDomain::unit_ball();
    let sp = build_spatial(&d, 0.4)?;
    let g = Grids::with_default_ray(d, sp, build_angular(4, 8)?, build_spectral(1.0, 8)?)?;
    let mut info = Vec::new();
    let mut ok = true;
    for (label, kernel) in [("isotropic", AngularKernel::Isotropic), ("hg(0.6)", AngularKernel::HenyeyGreenstein(0.6))] {
        let medium = MediumSpec {
            absorption: AbsorptionProfile::Constant(1.0),
            scattering: AbsorptionProfile::Constant(1.0),
            kernel,
        };
        let r = compute_h(&g, &medium, DUHAMEL_EPS)?;
        ok &= r.monotone && r.max_integral <= r.theta + H_BOUND_SLACK && r.tail_bound <= DUHAMEL_EPS;
        info.push(format!(
            "{label}: max int H {:.6} <= {:.6}, {} terms, tail {:.1e}, monotone {}",
            r.max_integral, r.theta, r.terms, r.tail_bound, r.monotone
        ));
    }
    Ok((ok, info.join("; ")))
}

fn entropy_probe(seed: u64) -> radtemp::Result<(bool, String)> {
    let r = max_entropy_probe(2.0, 1.0, 100, 0.1, seed)?;
    Ok((
        r.constant_wins,
        format!("constant outgoing radiance beats 100 perturbations (seed {seed}), margin {:.3e}", r.margin),
    ))
}

/// Runs the identity suite. `kernel_scale` multiplies every volume-kernel
/// weight and is 1 outside fault injection.
pub fn identities(seed: u64, kernel_scale: f64) -> Vec<Identity> {
    vec![
        identity("stefan-boltzmann", stefan_boltzmann),
        identity("kernel mass", || kernel_mass(kernel_scale)),
        identity("scattering kernel normalization", scattering_normalization),
        identity("sphere moments", sphere_moments),
        identity("ray derivative n.grad s = 1", ray_identity),
        identity("H bound", h_bound_check),
        identity("maximum entropy", || entropy_probe(seed)),
    ]
}

/// Fault-injection factor for the kernel weights.
pub const KERNEL_FAULT: f64 = 1.01;

pub fn cmd_validate(ctx: &Context, inject_fault: bool) -> Result<u8, CliError> {
    let seed = ctx.seed.unwrap_or(0);
    let results = identities(seed, if inject_fault { KERNEL_FAULT } else { 1.0 });
    for r in &results {
        ctx.say(format!("{} {}: {}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail));
    }
    let failed = results.iter().filter(|r| !r.pass).count();
    if failed > 0 {
        eprintln!("{failed} of {} identities failed", results.len());
    } else {
        ctx.say(format!("all {} identities pass", results.len()));
    }
    if let Some(dir) = &ctx.output {
        create_dir(dir)?;
        write_json(&dir.join("validate.json"), &results)?;
    }
    Ok(if failed == 0 { EXIT_OK } else { EXIT_INVARIANT })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identities_pass_and_the_fault_is_caught() {
        let ok = identities(3, 1.0);
        assert!(ok.iter().all(|r| r.pass), "{ok:?}");
        let mass = kernel_mass(KERNEL_FAULT).unwrap();
        assert!(!mass.0, "{}", mass.1);
    }

    #[test]
    fn deviation_is_relative_to_the_reference() {
        let (max, mean) = deviation(&[1.0, 2.0, 4.1], &[1.0, 2.0, 4.0]);
        assert!((max - 0.025).abs() < 1e-12);
        assert!((mean - 0.025 / 3.0).abs() < 1e-12);
    }
}
