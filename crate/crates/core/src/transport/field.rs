use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::ConvexDomain;
use crate::quadrature::{AngularGrid, SpatialGrid, SpectralGrid};
use crate::{Error, Result, Vec3};

/// What a [`ScalarField`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldRole {
    Temperature,
    /// `a = σT⁴` (grey case).
    GreyEmission,
    /// `w = f(T)` (spectral and combined cases).
    Emission,
}

/// One value per spatial node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub role: FieldRole,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(role: FieldRole, values: Vec<f64>) -> Self {
        ScalarField { role, values }
    }

    pub fn zeros(role: FieldRole, n: usize) -> Self {
        ScalarField { role, values: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `I[m, i, j]`: radiance at spatial node `m`, direction `i`, frequency `j`,
/// stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiationField {
    pub n_nodes: usize,
    pub n_dirs: usize,
    pub n_freq: usize,
    pub values: Vec<f64>,
}

impl RadiationField {
    pub fn zeros(n_nodes: usize, n_dirs: usize, n_freq: usize) -> Self {
        RadiationField { n_nodes, n_dirs, n_freq, values: vec![0.0; n_nodes * n_dirs * n_freq] }
    }

    #[inline]
    pub fn index(&self, m: usize, i: usize, j: usize) -> usize {
        (m * self.n_dirs + i) * self.n_freq + j
    }

    #[inline]
    pub fn get(&self, m: usize, i: usize, j: usize) -> f64 {
        self.values[self.index(m, i, j)]
    }

    /// All directions and frequencies at node `m`.
    #[inline]
    pub fn node(&self, m: usize) -> &[f64] {
        let s = self.n_dirs * self.n_freq;
        &self.values[m * s..(m + 1) * s]
    }

    /// `φ_j(m) = Σ_i w_i I[m, i, j]`.
    pub fn angular_integral(&self, angular: &AngularGrid, m: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let node = self.node(m);
        for (i, w) in angular.weights.iter().enumerate() {
            for (o, v) in out.iter_mut().zip(&node[i * self.n_freq..(i + 1) * self.n_freq]) {
                *o += w * v;
            }
        }
    }
}

pub const DEFAULT_RAY_DIVISIONS: f64 = 128.0;

/// Everything a transport operator needs to know about the discretization,
/// plus the exit distances `s(x_m, n_i)` which every operator reuses.
#[derive(Debug, Clone)]
pub struct Grids {
    pub domain: ConvexDomain,
    pub spatial: SpatialGrid,
    pub angular: AngularGrid,
    pub spectral: SpectralGrid,
    /// Target step along rays.
    pub ray_h: f64,
    exits: Vec<f64>,
}

impl Grids {
    pub fn new(
        domain: ConvexDomain,
        spatial: SpatialGrid,
        angular: AngularGrid,
        spectral: SpectralGrid,
        ray_h: f64,
    ) -> Result<Self> {
        if !(ray_h.is_finite() && ray_h > 0.0) {
            return Err(Error::InvalidInput(format!("ray step must be finite and > 0, got {ray_h}")));
        }
        let n = angular.len();
        let mut exits = vec![0.0; spatial.len() * n];
        exits.par_chunks_mut(n).enumerate().for_each(|(m, row)| {
            let x = spatial.nodes[m];
            for (s, dir) in row.iter_mut().zip(&angular.nodes) {
                *s = domain.exit_distance(&x, dir);
            }
        });
        Ok(Grids { domain, spatial, angular, spectral, ray_h, exits })
    }

    /// Ray step `diameter / 128`.
    pub fn with_default_ray(
        domain: ConvexDomain,
        spatial: SpatialGrid,
        angular: AngularGrid,
        spectral: SpectralGrid,
    ) -> Result<Self> {
        let ray_h = domain.diameter() / DEFAULT_RAY_DIVISIONS;
        Grids::new(domain, spatial, angular, spectral, ray_h)
    }

    #[inline]
    pub fn exit(&self, m: usize, i: usize) -> f64 {
        self.exits[m * self.angular.len() + i]
    }

    /// `s(x_m, n_i)` for every direction.
    #[inline]
    pub fn exits(&self, m: usize) -> &[f64] {
        let n = self.angular.len();
        &self.exits[m * n..(m + 1) * n]
    }

    /// Number of segments used on a ray of length `s`.
    #[inline]
    pub fn ray_segments(&self, s: f64) -> usize {
        ((s / self.ray_h).ceil() as usize).max(1)
    }

    pub fn node(&self, m: usize) -> Vec3 {
        self.spatial.nodes[m]
    }

    /// Node index of `x`, or `NotInterior` if `x` is not a lattice node.
    pub fn node_index(&self, x: &Vec3) -> Result<usize> {
        let m = self.spatial.nearest_node(x);
        if (self.spatial.nodes[m] - x).norm() <= 1e-9 * self.spatial.h {
            Ok(m)
        } else {
            Err(Error::NotInterior([x.x, x.y, x.z]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{build_angular, build_spatial, build_spectral};

    #[test]
    fn exits_match_geometry() {
        let d = ConvexDomain::unit_ball();
        let g = Grids::with_default_ray(
            d.clone(),
            build_spatial(&d, 0.25).unwrap(),
            build_angular(2, 4).unwrap(),
            build_spectral(1.0, 8).unwrap(),
        )
        .unwrap();
        let m = g.node_index(&Vec3::zeros()).unwrap();
        assert!(g.exits(m).iter().all(|s| (s - 1.0).abs() < 1e-14));
        for m in 0..g.spatial.len() {
            for i in 0..g.angular.len() {
                let hit = d.backward_exit(&g.node(m), &g.angular.nodes[i]).unwrap();
                assert!((hit.path_length - g.exit(m, i)).abs() < 1e-14);
            }
        }
        assert!(g.node_index(&Vec3::new(0.1, 0.0, 0.0)).is_err());
        assert_eq!(g.ray_segments(1.0), 64);
        assert_eq!(g.ray_segments(1e-9), 1);
    }

    #[test]
    fn angular_integral_sums_weights() {
        let ang = build_angular(2, 4).unwrap();
        let mut f = RadiationField::zeros(1, ang.len(), 2);
        f.values.iter_mut().for_each(|v| *v = 1.0);
        let mut out = [0.0; 2];
        f.angular_integral(&ang, 0, &mut out);
        assert!((out[0] - 4.0 * std::f64::consts::PI).abs() < 1e-12);
    }
}
