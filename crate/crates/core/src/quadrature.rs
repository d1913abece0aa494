//! Discretizations of the direction sphere, the frequency half-line, ray
//! segments, the body volume and its surface. Every integral becomes a
//! weighted sum over one of these grids.

use std::f64::consts::PI;

use crate::geometry::{ConvexDomain, RayHit, Vec3};
use crate::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp;
        loop {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j - 1) as f64 * z * p2 - (j - 1) as f64 * p3) / j as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Directions on the unit sphere with positive weights summing to `4π`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularGrid {
    pub nodes: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl AngularGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(&Vec3) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(n, w)| w * f(n)).sum()
    }

    /// The 26-direction rule built from the octahedron vertices, edge
    /// midpoints and cube corners. Exact for polynomials up to degree 7.
    pub fn lebedev26() -> Self {
        let mut nodes = Vec::with_capacity(26);
        let mut weights = Vec::with_capacity(26);
        let (a1, a2, a3) = (1.0 / 21.0, 4.0 / 105.0, 9.0 / 280.0);
        for i in -1i32..=1 {
            for j in -1i32..=1 {
                for k in -1i32..=1 {
                    let nz = i.abs() + j.abs() + k.abs();
                    if nz == 0 {
                        continue;
                    }
                    let v = Vec3::new(i as f64, j as f64, k as f64).normalize();
                    let a = match nz {
                        1 => a1,
                        2 => a2,
                        _ => a3,
                    };
                    nodes.push(v);
                    weights.push(4.0 * PI * a);
                }
            }
        }
        AngularGrid { nodes, weights }
    }
}

/// Product rule: Gauss–Legendre in `cos θ` times uniform azimuth.
pub fn build_angular(n_polar: usize, n_azimuth: usize) -> Result<AngularGrid> {
    if n_polar < 2 || n_azimuth < 4 {
        return Err(Error::TooCoarse(format!(
            "angular grid needs n_polar >= 2 and n_azimuth >= 4 (got {n_polar} x {n_azimuth})"
        )));
    }
    if n_azimuth % 2 != 0 {
        return Err(Error::InvalidInput(format!(
            "n_azimuth must be even so that the grid is antipodally symmetric (got {n_azimuth})"
        )));
    }
    let (mu, wmu) = gauss_legendre(n_polar);
    let dphi = 2.0 * PI / n_azimuth as f64;
    let mut nodes = Vec::with_capacity(n_polar * n_azimuth);
    let mut weights = Vec::with_capacity(n_polar * n_azimuth);
    for (&m, &wm) in mu.iter().zip(&wmu) {
        let st = (1.0 - m * m).max(0.0).sqrt();
        for l in 0..n_azimuth {
            let phi = dphi * (l as f64 + 0.5);
            nodes.push(Vec3::new(st * phi.cos(), st * phi.sin(), m));
            weights.push(wm * dphi);
        }
    }
    Ok(AngularGrid { nodes, weights })
}

/// Frequency nodes on `[0, ν_max]` with positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub nu_max: f64,
    /// Reference temperature the truncation was chosen for.
    pub t_ref: f64,
    /// Temperature cap for emission inversion; the truncated tail stays
    /// below `1e-8` of the total up to this temperature.
    pub t_max: f64,
}

/// Truncation `ν_max = NU_MAX_FACTOR · T_ref`.
pub const NU_MAX_FACTOR: f64 = 50.0;

/// Default inversion cap `t_max = T_MAX_FACTOR · T_ref`.
pub const T_MAX_FACTOR: f64 = 1.5;

impl SpectralGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&nu, &q)| q * f(nu)).sum()
    }
}

/// Composite Gauss–Legendre on `[0, 50 T_ref]` with panels halving towards 0.
pub fn build_spectral(t_ref: f64, n_nodes: usize) -> Result<SpectralGrid> {
    if !(t_ref.is_finite() && t_ref > 0.0) {
        return Err(Error::InvalidInput(format!("t_ref must be finite and > 0, got {t_ref}")));
    }
    if n_nodes < 8 {
        return Err(Error::TooCoarse(format!("spectral grid needs >= 8 nodes, got {n_nodes}")));
    }
    let nu_max = NU_MAX_FACTOR * t_ref;
    let panels = if n_nodes >= 32 {
        4
    } else if n_nodes >= 16 {
        2
    } else {
        1
    };
    let mut edges = vec![0.0];
    for k in (0..panels).rev() {
        edges.push(nu_max / 2f64.powi(k as i32));
    }
    let mut nodes = Vec::with_capacity(n_nodes);
    let mut weights = Vec::with_capacity(n_nodes);
    for p in 0..panels {
        let count = n_nodes / panels + usize::from(p < n_nodes % panels);
        let (x, w) = gauss_legendre(count);
        let (a, b) = (edges[p], edges[p + 1]);
        let half = 0.5 * (b - a);
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(a + half * (xi + 1.0));
            weights.push(half * wi);
        }
    }
    Ok(SpectralGrid { nodes, weights, nu_max, t_ref, t_max: T_MAX_FACTOR * t_ref })
}

/// Cell-centred Cartesian lattice restricted to the interior of the body.
#[derive(Debug, Clone)]
pub struct SpatialGrid {
    pub h: f64,
    pub nodes: Vec<Vec3>,
    /// Lattice coordinates `(i, j, k)` of each node.
    pub cells: Vec<[usize; 3]>,
    /// Lattice point count per axis.
    pub dims: [usize; 3],
    /// Position of lattice point `(0, 0, 0)`.
    pub origin: Vec3,
    /// Node index of each lattice point, `u32::MAX` where outside.
    lookup: Vec<u32>,
}

const NONE: u32 = u32::MAX;

/// `⌊v⌋` as an integer without a libm call; `v` must be finite and within
/// the `i64` range.
#[inline]
fn floor(v: f64) -> i64 {
    let t = v as i64;
    if (t as f64) > v {
        t - 1
    } else {
        t
    }
}

/// Up to eight `(node, weight)` pairs whose weights sum to one.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    pub idx: [u32; 8],
    pub w: [f64; 8],
    pub len: usize,
}

impl Stencil {
    #[inline]
    pub fn apply(&self, values: &[f64]) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.len {
            acc += self.w[k] * values[self.idx[k] as usize];
        }
        acc
    }

    /// Interpolates a row-major `[node][stride]` array into `out`.
    #[inline]
    pub fn apply_rows(&self, values: &[f64], stride: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for k in 0..self.len {
            let row = &values[self.idx[k] as usize * stride..][..stride];
            let w = self.w[k];
            for (o, v) in out.iter_mut().zip(row) {
                *o += w * v;
            }
        }
    }
}

impl SpatialGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(3)
    }

    pub fn total_volume(&self) -> f64 {
        self.len() as f64 * self.cell_volume()
    }

    #[inline]
    pub fn lattice_index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    /// Node at lattice point `(i, j, k)`, if that point is interior.
    #[inline]
    pub fn node_at(&self, i: usize, j: usize, k: usize) -> Option<usize> {
        let v = self.lookup[self.lattice_index(i, j, k)];
        (v != NONE).then_some(v as usize)
    }

    /// Trilinear interpolation weights at `x`. Corners that are not
    /// interior nodes are dropped and the rest renormalized, so constants
    /// are reproduced exactly and nothing is extrapolated.
    pub fn stencil(&self, x: &Vec3) -> Stencil {
        let u = (x - self.origin) / self.h;
        let u = [u.x, u.y, u.z];
        let base = u.map(floor);
        // per axis: lattice coordinate, weights and validity of the two corners
        let mut lo = [0i64; 3];
        let mut wt = [[0.0; 2]; 3];
        let mut ok = [[false; 2]; 3];
        for a in 0..3 {
            let frac = u[a] - base[a] as f64;
            lo[a] = base[a];
            wt[a] = [1.0 - frac, frac];
            let d = self.dims[a] as i64;
            ok[a] = [base[a] >= 0 && base[a] < d, base[a] + 1 >= 0 && base[a] + 1 < d];
        }
        let (s0, s1) = ((self.dims[1] * self.dims[2]) as i64, self.dims[2] as i64);
        let origin = lo[0] * s0 + lo[1] * s1 + lo[2];
        let mut st = Stencil { idx: [0; 8], w: [0.0; 8], len: 0 };
        let mut total = 0.0;
        for corner in 0..8 {
            let (i, j, k) = (corner >> 2 & 1, corner >> 1 & 1, corner & 1);
            if !(ok[0][i] && ok[1][j] && ok[2][k]) {
                continue;
            }
            let w = wt[0][i] * wt[1][j] * wt[2][k];
            if w <= 0.0 {
                continue;
            }
            let node = self.lookup[(origin + i as i64 * s0 + j as i64 * s1 + k as i64) as usize];
            if node != NONE {
                st.idx[st.len] = node;
                st.w[st.len] = w;
                st.len += 1;
                total += w;
            }
        }
        if st.len == 0 {
            return self.nearest_stencil(x);
        }
        for k in 0..st.len {
            st.w[k] /= total;
        }
        st
    }

    fn nearest_stencil(&self, x: &Vec3) -> Stencil {
        let mut st = Stencil { idx: [0; 8], w: [0.0; 8], len: 1 };
        st.idx[0] = self.nearest_node(x) as u32;
        st.w[0] = 1.0;
        st
    }

    pub fn interpolate(&self, values: &[f64], x: &Vec3) -> f64 {
        self.stencil(x).apply(values)
    }

    pub fn nearest_node(&self, x: &Vec3) -> usize {
        let u = (x - self.origin) / self.h;
        let c = [u.x.round() as i64, u.y.round() as i64, u.z.round() as i64];
        for r in 0..=3i64 {
            let mut best: Option<(f64, usize)> = None;
            for di in -r..=r {
                for dj in -r..=r {
                    for dk in -r..=r {
                        let (i, j, k) = (c[0] + di, c[1] + dj, c[2] + dk);
                        if i < 0 || j < 0 || k < 0 {
                            continue;
                        }
                        let (i, j, k) = (i as usize, j as usize, k as usize);
                        if i >= self.dims[0] || j >= self.dims[1] || k >= self.dims[2] {
                            continue;
                        }
                        if let Some(n) = self.node_at(i, j, k) {
                            let d = (self.nodes[n] - x).norm_squared();
                            if best.is_none_or(|(bd, _)| d < bd) {
                                best = Some((d, n));
                            }
                        }
                    }
                }
            }
            if let Some((_, n)) = best {
                return n;
            }
        }
        (0..self.len())
            .min_by(|&a, &b| {
                (self.nodes[a] - x).norm_squared().total_cmp(&(self.nodes[b] - x).norm_squared())
            })
            .expect("spatial grid is never empty")
    }
}

/// Lattice of spacing `h` through the body center; cells whose centers are
/// strictly interior are kept with volume `h³`.
pub fn build_spatial(domain: &ConvexDomain, h: f64) -> Result<SpatialGrid> {
    domain.validate()?;
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidInput(format!("spacing must be finite and > 0, got {h}")));
    }
    if h > domain.diameter() / 4.0 {
        return Err(Error::TooCoarse(format!(
            "spacing {h} exceeds diameter/4 = {}",
            domain.diameter() / 4.0
        )));
    }
    let c = domain.center();
    let a = domain.semi_axes();
    let half = [(a.x / h).floor() as usize, (a.y / h).floor() as usize, (a.z / h).floor() as usize];
    let dims = [2 * half[0] + 1, 2 * half[1] + 1, 2 * half[2] + 1];
    let origin = c - Vec3::new(half[0] as f64, half[1] as f64, half[2] as f64) * h;
    let mut lookup = vec![NONE; dims[0] * dims[1] * dims[2]];
    let mut nodes = Vec::new();
    let mut cells = Vec::new();
    for i in 0..dims[0] {
        for j in 0..dims[1] {
            for k in 0..dims[2] {
                let x = origin + Vec3::new(i as f64, j as f64, k as f64) * h;
                if domain.contains(&x) {
                    lookup[(i * dims[1] + j) * dims[2] + k] = nodes.len() as u32;
                    nodes.push(x);
                    cells.push([i, j, k]);
                }
            }
        }
    }
    if nodes.is_empty() {
        return Err(Error::TooCoarse("no lattice point falls inside the domain".into()));
    }
    Ok(SpatialGrid { h, nodes, cells, dims, origin, lookup })
}

/// Composite Simpson nodes `(ξ, weight)` on `[0, s]`, `ξ` measured from the
/// entry point along the ray. `n_steps` is rounded up to an even count.
pub fn ray_nodes(hit: &RayHit, n_steps: usize) -> Result<Vec<(f64, f64)>> {
    if n_steps < 2 {
        return Err(Error::TooCoarse(format!("ray rule needs >= 2 steps, got {n_steps}")));
    }
    Ok(simpson_nodes(hit.path_length, n_steps))
}

pub(crate) fn simpson_nodes(length: f64, n_steps: usize) -> Vec<(f64, f64)> {
    let n = n_steps + n_steps % 2;
    let dx = length / n as f64;
    (0..=n)
        .map(|k| {
            let c = if k == 0 || k == n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            (k as f64 * dx, c * dx / 3.0)
        })
        .collect()
}

/// Boundary quadrature: points, outward normals and area weights.
#[derive(Debug, Clone)]
pub struct SurfaceGrid {
    pub points: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    pub areas: Vec<f64>,
}

impl SurfaceGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }
}

/// Gauss–Legendre in `cos θ` times uniform azimuth on the ellipsoid
/// parametrization `c + (a sinθ cosφ, b sinθ sinφ, c cosθ)`.
pub fn build_surface(domain: &ConvexDomain, n_polar: usize, n_azimuth: usize) -> Result<SurfaceGrid> {
    if n_polar < 2 || n_azimuth < 4 {
        return Err(Error::TooCoarse(format!(
            "surface grid needs n_polar >= 2 and n_azimuth >= 4 (got {n_polar} x {n_azimuth})"
        )));
    }
    let c = domain.center();
    let ax = domain.semi_axes();
    let (mu, wmu) = gauss_legendre(n_polar);
    let dphi = 2.0 * PI / n_azimuth as f64;
    let mut points = Vec::new();
    let mut normals = Vec::new();
    let mut areas = Vec::new();
    for (&u, &wu) in mu.iter().zip(&wmu) {
        let st = (1.0 - u * u).max(0.0).sqrt();
        for l in 0..n_azimuth {
            let phi = dphi * (l as f64 + 0.5);
            let (sp, cp) = phi.sin_cos();
            let p = c + Vec3::new(ax.x * st * cp, ax.y * st * sp, ax.z * u);
            let jac = ((ax.y * ax.z * st * cp).powi(2)
                + (ax.x * ax.z * st * sp).powi(2)
                + (ax.x * ax.y * u).powi(2))
            .sqrt();
            points.push(p);
            normals.push(domain.gradient_direction(&p));
            areas.push(wu * dphi * jac);
        }
    }
    Ok(SurfaceGrid { points, normals, areas })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{planck, stefan_sigma};
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_is_exact_to_degree_2n_minus_1() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn angular_examples() {
        let g = build_angular(8, 16).unwrap();
        assert!((g.weights.iter().sum::<f64>() - 4.0 * PI).abs() < 1e-12);
        for e in [Vec3::x(), Vec3::new(1.0, 2.0, -0.5).normalize(), Vec3::z()] {
            let m2 = g.integrate(|n| n.dot(&e).powi(2));
            assert!((m2 - 4.0 * PI / 3.0).abs() < 1e-10);
        }
        let g = build_angular(2, 4).unwrap();
        let first: Vec3 = g.nodes.iter().zip(&g.weights).map(|(n, w)| n * *w).sum();
        assert!(first.norm() < 1e-12);
        assert!(matches!(build_angular(1, 8), Err(Error::TooCoarse(_))));
        assert!(matches!(build_angular(4, 2), Err(Error::TooCoarse(_))));
        assert!(build_angular(4, 5).is_err());
    }

    #[test]
    fn angular_grids_kill_odd_functions() {
        let odd = |n: &Vec3| n.x * n.y * n.y + n.z.powi(3) - 0.3 * n.x + n.x * n.y * n.z;
        for g in [build_angular(3, 6).unwrap(), build_angular(6, 10).unwrap(), AngularGrid::lebedev26()] {
            assert!(g.integrate(odd).abs() < 1e-12);
            assert!(g.weights.iter().all(|w| *w > 0.0));
        }
    }

    #[test]
    fn lebedev26_moments() {
        let g = AngularGrid::lebedev26();
        assert_eq!(g.len(), 26);
        assert!((g.weights.iter().sum::<f64>() - 4.0 * PI).abs() < 1e-12);
        // ∫ x² = 4π/3, ∫ x⁴ = 4π/5, ∫ x²y² = 4π/15, ∫ x²y²z² = 4π/105, ∫ x⁶ = 4π/7
        assert!((g.integrate(|n| n.x * n.x) - 4.0 * PI / 3.0).abs() < 1e-12);
        assert!((g.integrate(|n| n.x.powi(4)) - 4.0 * PI / 5.0).abs() < 1e-12);
        assert!((g.integrate(|n| (n.x * n.y).powi(2)) - 4.0 * PI / 15.0).abs() < 1e-12);
        assert!((g.integrate(|n| (n.x * n.y * n.z).powi(2)) - 4.0 * PI / 105.0).abs() < 1e-12);
        assert!((g.integrate(|n| n.x.powi(6)) - 4.0 * PI / 7.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_examples() {
        let g = build_spectral(1.0, 64).unwrap();
        let sb = g.integrate(|nu| planck(nu, 1.0).unwrap());
        assert_relative_eq!(sb, stefan_sigma(), max_relative = 1e-8);
        assert!((g.integrate(|_| 1.0) - g.nu_max).abs() < 1e-10);
        let fine = build_spectral(1.0, 128).unwrap();
        let sb2 = fine.integrate(|nu| planck(nu, 1.0).unwrap());
        assert!(((sb - sb2) / sb2).abs() <= 1e-9);
        assert!(g.weights.iter().all(|w| *w > 0.0));
        assert!(g.nodes.windows(2).all(|w| w[1] > w[0]));
        assert!(matches!(build_spectral(1.0, 4), Err(Error::TooCoarse(_))));
        for n in 8..20 {
            let g = build_spectral(0.7, n).unwrap();
            assert_eq!(g.len(), n);
            assert!((g.integrate(|_| 1.0) - g.nu_max).abs() < 1e-10);
        }
    }

    #[test]
    fn spatial_volume_convergence() {
        let ball = ConvexDomain::unit_ball();
        let exact = 4.0 * PI / 3.0;
        let coarse = build_spatial(&ball, 0.1).unwrap();
        assert!((coarse.total_volume() - exact).abs() <= 0.05 * exact);
        let fine = build_spatial(&ball, 0.05).unwrap();
        assert!((fine.total_volume() - exact).abs() <= 0.02 * exact);
        let big = ConvexDomain::ball([0.0; 3], 2.0).unwrap();
        let g = build_spatial(&big, 0.2).unwrap();
        assert!(!g.is_empty());
        assert!(g.nodes.iter().all(|x| big.contains(x)));
        assert!(matches!(build_spatial(&ball, 0.6), Err(Error::TooCoarse(_))));
    }

    #[test]
    fn stencil_reproduces_constants_and_linears() {
        let e = ConvexDomain::ellipsoid([0.1, 0.0, -0.2], [1.2, 0.8, 1.0]).unwrap();
        let g = build_spatial(&e, 0.1).unwrap();
        let ones = vec![1.0; g.len()];
        let lin: Vec<f64> = g.nodes.iter().map(|x| 2.0 * x.x - x.y + 0.5 * x.z).collect();
        for p in [Vec3::new(0.13, 0.021, -0.3), Vec3::new(-0.5, 0.2, 0.1), Vec3::new(1.25, 0.0, -0.2)] {
            assert!((g.interpolate(&ones, &p) - 1.0).abs() < 1e-14);
            let st = g.stencil(&p);
            let inner = (0..st.len).all(|k| st.w[k] > 0.0);
            assert!(inner);
        }
        // deep inside, all eight corners exist and linear fields are exact
        let p = Vec3::new(0.137, 0.052, -0.23);
        assert_eq!(g.stencil(&p).len, 8);
        assert!((g.interpolate(&lin, &p) - (2.0 * p.x - p.y + 0.5 * p.z)).abs() < 1e-12);
    }

    #[test]
    fn ray_rule_examples() {
        let hit = RayHit { entry: Vec3::zeros(), path_length: 1.0 };
        let nodes = ray_nodes(&hit, 200).unwrap();
        let q: f64 = nodes.iter().map(|(xi, w)| w * (-(1.0 - xi)).exp()).sum();
        assert!((q - 0.632_120_6).abs() < 1e-6);
        assert!((q - (1.0 - (-1.0f64).exp())).abs() < 1e-10);
        let hit = RayHit { entry: Vec3::zeros(), path_length: 2.5 };
        let c: f64 = ray_nodes(&hit, 7).unwrap().iter().map(|(_, w)| 3.0 * w).sum();
        assert!((c - 7.5).abs() < 1e-10);
        let tiny = RayHit { entry: Vec3::zeros(), path_length: 1e-9 };
        let q: f64 = ray_nodes(&tiny, 4).unwrap().iter().map(|(xi, w)| w * (-(1e-9 - xi)).exp()).sum();
        assert!(q.abs() < 1e-8);
        assert!(ray_nodes(&hit, 1).is_err());
        assert!(ray_nodes(&hit, 6).unwrap().iter().all(|(_, w)| *w > 0.0));
    }

    #[test]
    fn surface_area() {
        let b = build_surface(&ConvexDomain::unit_ball(), 8, 16).unwrap();
        assert_relative_eq!(b.total_area(), 4.0 * PI, max_relative = 1e-12);
        // prolate spheroid a = 2, b = c = 1: 2π(1 + 2·asin(e)/e · a/…)
        let e = ConvexDomain::ellipsoid([0.0; 3], [1.0, 1.0, 2.0]).unwrap();
        let s = build_surface(&e, 24, 32).unwrap();
        let ecc = (1.0f64 - 0.25).sqrt();
        let exact = 2.0 * PI * (1.0 + 2.0 * ecc.asin() / ecc);
        assert_relative_eq!(s.total_area(), exact, max_relative = 1e-10);
        for (p, n) in s.points.iter().zip(&s.normals) {
            assert!(e.shape_fn(p).abs() < 1e-12);
            assert!((n.norm() - 1.0).abs() < 1e-12);
        }
    }
}
