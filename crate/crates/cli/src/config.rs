//! Run configuration: a TOML file deserialized into [`RunConfig`], with
//! every default expanded so the resolved form can be written back out.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use radtemp::quadrature::{build_angular, build_spatial, build_spectral, build_surface, AngularGrid, SurfaceGrid};
use radtemp::solvers::SolveOptions;
use radtemp::spectral::AbsorptionProfile;
use radtemp::transport::{AngularKernel, BoundarySource, Grids, InnerOptions, KernelOptions, MediumSpec, SelfCellRule};
use radtemp::ConvexDomain;

/// A configuration problem, tied to the key that caused it.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Syntax(String),
    #[error("invalid `{key}`: {message}")]
    Invalid { key: String, message: String },
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Scattering,
    Grey,
    Spectral,
    Combined,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Scattering => "scattering",
            Mode::Grey => "grey",
            Mode::Spectral => "spectral",
            Mode::Combined => "combined",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    pub absorption: AbsorptionProfile,
    #[serde(default = "zero_profile")]
    pub scattering: AbsorptionProfile,
    #[serde(default = "isotropic")]
    pub kernel: AngularKernel,
}

fn zero_profile() -> AbsorptionProfile {
    AbsorptionProfile::Constant(0.0)
}

fn isotropic() -> AngularKernel {
    AngularKernel::Isotropic
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpatialConfig {
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngularRule {
    /// Gauss–Legendre in `cos θ` times uniform azimuth.
    Product,
    Lebedev26,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngularConfig {
    #[serde(default = "product")]
    pub rule: AngularRule,
    #[serde(default = "default_polar")]
    pub n_polar: usize,
    #[serde(default = "default_azimuth")]
    pub n_azimuth: usize,
}

fn product() -> AngularRule {
    AngularRule::Product
}

fn default_polar() -> usize {
    8
}

fn default_azimuth() -> usize {
    16
}

impl Default for AngularConfig {
    fn default() -> Self {
        AngularConfig { rule: AngularRule::Product, n_polar: default_polar(), n_azimuth: default_azimuth() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralConfig {
    #[serde(default = "default_frequencies")]
    pub n_nodes: usize,
    /// Reference temperature of the frequency grid; resolved from the
    /// boundary source when absent.
    pub t_ref: Option<f64>,
}

fn default_frequencies() -> usize {
    32
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig { n_nodes: default_frequencies(), t_ref: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RayConfig {
    /// Step along rays; resolved to `diameter / 128` when absent.
    pub h: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceConfig {
    #[serde(default = "default_surface_polar")]
    pub n_polar: usize,
    #[serde(default = "default_surface_azimuth")]
    pub n_azimuth: usize,
}

fn default_surface_polar() -> usize {
    12
}

fn default_surface_azimuth() -> usize {
    24
}

impl Default for SurfaceConfig {
    fn default() -> Self {
        SurfaceConfig { n_polar: default_surface_polar(), n_azimuth: default_surface_azimuth() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_inner_tol")]
    pub inner_tol: f64,
    #[serde(default = "default_max_iter")]
    pub inner_max_iter: usize,
    #[serde(default)]
    pub self_cell: SelfCellRule,
    #[serde(default = "default_cache_mib")]
    pub kernel_cache_mib: usize,
    #[serde(default = "default_field_limit")]
    pub field_limit: usize,
}

fn default_tol() -> f64 {
    1e-8
}

fn default_max_iter() -> usize {
    500
}

fn default_inner_tol() -> f64 {
    1e-10
}

fn default_cache_mib() -> usize {
    512
}

fn default_field_limit() -> usize {
    20_000_000
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: default_tol(),
            max_iter: default_max_iter(),
            inner_tol: default_inner_tol(),
            inner_max_iter: default_max_iter(),
            self_cell: SelfCellRule::ExactMass,
            kernel_cache_mib: default_cache_mib(),
            field_limit: default_field_limit(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    /// Largest accepted max-norm deviation, relative to the largest value.
    #[serde(default = "default_oracle_tol")]
    pub tolerance: f64,
}

fn default_oracle_tol() -> f64 {
    5e-3
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { tolerance: default_oracle_tol() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    /// Write the radiation field dump.
    #[serde(default = "yes")]
    pub field: bool,
    /// Evaluate the entropy report.
    #[serde(default = "yes")]
    pub entropy: bool,
}

fn default_directory() -> PathBuf {
    PathBuf::from("radtemp-out")
}

fn yes() -> bool {
    true
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { directory: default_directory(), field: true, entropy: true }
    }
}

/// Everything one run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    pub domain: ConvexDomain,
    pub medium: MediumConfig,
    pub boundary: BoundarySource,
    pub spatial: SpatialConfig,
    #[serde(default)]
    pub angular: AngularConfig,
    #[serde(default)]
    pub spectral: SpectralConfig,
    #[serde(default)]
    pub ray: RayConfig,
    #[serde(default)]
    pub surface: SurfaceConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

const MAX_POLAR: usize = 256;
const MAX_AZIMUTH: usize = 512;
const MIN_FREQUENCIES: usize = 8;
const MAX_FREQUENCIES: usize = 1024;
const MAX_ITER_CAP: usize = 1_000_000;

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Unreadable { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    /// Parses, validates and fills in every derived default.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        cfg.resolve();
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve(&mut self) {
        if self.spectral.t_ref.is_none() {
            self.spectral.t_ref = Some(self.boundary.characteristic_temperature().filter(|t| *t > 0.0).unwrap_or(1.0));
        }
        if self.ray.h.is_none() {
            self.ray.h = Some(self.domain.diameter() / radtemp::transport::DEFAULT_RAY_DIVISIONS);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.domain.validate().map_err(|e| invalid("domain", e.to_string()))?;
        let m = &self.medium;
        m.absorption.validate().map_err(|e| invalid("medium.absorption", e.to_string()))?;
        m.scattering.validate().map_err(|e| invalid("medium.scattering", e.to_string()))?;
        self.medium_spec().validate().map_err(|e| invalid("medium.kernel", e.to_string()))?;
        self.boundary.validate().map_err(|e| invalid("boundary", e.to_string()))?;

        let incompatible = |message: &str| invalid("mode", format!("mode compatibility: `{}` {message}", self.mode.name()));
        match self.mode {
            Mode::Grey => {
                if !m.absorption.is_constant() || m.absorption.is_zero() {
                    return Err(incompatible("requires a constant, positive `medium.absorption`"));
                }
                if !m.scattering.is_zero() {
                    return Err(incompatible("requires zero `medium.scattering`"));
                }
            }
            Mode::Spectral => {
                if m.absorption.is_zero() {
                    return Err(incompatible("requires nonzero `medium.absorption`"));
                }
                if !m.scattering.is_zero() {
                    return Err(incompatible("requires zero `medium.scattering`"));
                }
            }
            Mode::Combined => {
                if m.absorption.is_zero() {
                    return Err(incompatible("requires nonzero `medium.absorption`"));
                }
            }
            Mode::Scattering => {
                if !m.absorption.is_zero() {
                    return Err(incompatible("requires zero `medium.absorption`"));
                }
                if m.scattering.is_zero() {
                    return Err(incompatible("requires nonzero `medium.scattering`"));
                }
            }
        }

        let d = self.domain.diameter();
        let h = self.spatial.h;
        if !(h.is_finite() && h > 0.0 && h <= d / 2.0) {
            return Err(invalid("spatial.h", format!("must lie in (0, diameter/2 = {}], got {h}", d / 2.0)));
        }
        let a = &self.angular;
        if a.rule == AngularRule::Product {
            if !(2..=MAX_POLAR).contains(&a.n_polar) {
                return Err(invalid("angular.n_polar", format!("must lie in [2, {MAX_POLAR}], got {}", a.n_polar)));
            }
            if !(4..=MAX_AZIMUTH).contains(&a.n_azimuth) || a.n_azimuth % 2 != 0 {
                return Err(invalid(
                    "angular.n_azimuth",
                    format!("must be even and lie in [4, {MAX_AZIMUTH}], got {}", a.n_azimuth),
                ));
            }
        }
        let n = self.spectral.n_nodes;
        if !(MIN_FREQUENCIES..=MAX_FREQUENCIES).contains(&n) {
            return Err(invalid(
                "spectral.n_nodes",
                format!("must lie in [{MIN_FREQUENCIES}, {MAX_FREQUENCIES}], got {n}"),
            ));
        }
        positive("spectral.t_ref", self.spectral.t_ref)?;
        let ray = positive("ray.h", self.ray.h)?;
        if ray > d {
            return Err(invalid("ray.h", format!("must not exceed the diameter {d}, got {ray}")));
        }
        let s = &self.surface;
        if !(2..=MAX_POLAR).contains(&s.n_polar) {
            return Err(invalid("surface.n_polar", format!("must lie in [2, {MAX_POLAR}], got {}", s.n_polar)));
        }
        if !(4..=MAX_AZIMUTH).contains(&s.n_azimuth) {
            return Err(invalid("surface.n_azimuth", format!("must lie in [4, {MAX_AZIMUTH}], got {}", s.n_azimuth)));
        }
        let sv = &self.solver;
        tolerance("solver.tol", sv.tol)?;
        tolerance("solver.inner_tol", sv.inner_tol)?;
        tolerance("oracle.tolerance", self.oracle.tolerance)?;
        for (key, v) in [("solver.max_iter", sv.max_iter), ("solver.inner_max_iter", sv.inner_max_iter)] {
            if !(1..=MAX_ITER_CAP).contains(&v) {
                return Err(invalid(key, format!("must lie in [1, {MAX_ITER_CAP}], got {v}")));
            }
        }
        if sv.field_limit == 0 {
            return Err(invalid("solver.field_limit", "must be >= 1"));
        }
        Ok(())
    }

    pub fn medium_spec(&self) -> MediumSpec {
        MediumSpec {
            absorption: self.medium.absorption.clone(),
            scattering: self.medium.scattering.clone(),
            kernel: self.medium.kernel.clone(),
        }
    }

    pub fn solve_options(&self) -> SolveOptions {
        let s = &self.solver;
        SolveOptions {
            tol: s.tol,
            max_iter: s.max_iter,
            kernel: KernelOptions { rule: s.self_cell, cache_bytes: s.kernel_cache_mib << 20, scale: 1.0 },
            inner: InnerOptions { tol: s.inner_tol, max_iter: s.inner_max_iter },
            field_limit: s.field_limit,
        }
    }

    pub fn angular_grid(&self) -> Result<AngularGrid, ConfigError> {
        match self.angular.rule {
            AngularRule::Lebedev26 => Ok(AngularGrid::lebedev26()),
            AngularRule::Product => {
                build_angular(self.angular.n_polar, self.angular.n_azimuth).map_err(|e| invalid("angular", e.to_string()))
            }
        }
    }

    /// Builds the discretization; only valid on a resolved config.
    pub fn grids(&self) -> Result<Grids, ConfigError> {
        let spatial = build_spatial(&self.domain, self.spatial.h).map_err(|e| invalid("spatial.h", e.to_string()))?;
        let t_ref = self.spectral.t_ref.unwrap_or(1.0);
        let spectral =
            build_spectral(t_ref, self.spectral.n_nodes).map_err(|e| invalid("spectral", e.to_string()))?;
        let ray = self.ray.h.unwrap_or(self.domain.diameter() / radtemp::transport::DEFAULT_RAY_DIVISIONS);
        Grids::new(self.domain.clone(), spatial, self.angular_grid()?, spectral, ray)
            .map_err(|e| invalid("ray.h", e.to_string()))
    }

    pub fn surface_grid(&self) -> Result<SurfaceGrid, ConfigError> {
        build_surface(&self.domain, self.surface.n_polar, self.surface.n_azimuth)
            .map_err(|e| invalid("surface", e.to_string()))
    }

    /// The resolved config as TOML text.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("a run config always serializes")
    }
}

fn positive(key: &str, v: Option<f64>) -> Result<f64, ConfigError> {
    match v {
        Some(x) if x.is_finite() && x > 0.0 => Ok(x),
        Some(x) => Err(invalid(key, format!("must be finite and > 0, got {x}"))),
        None => Err(invalid(key, "missing")),
    }
}

fn tolerance(key: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(invalid(key, format!("must lie in (0, 1), got {v}")))
    }
}
