//! Convex domains and backward ray exits.
//!
//! Every formal solution integrates along the backward characteristic
//! `x - t n, t ≥ 0` until it leaves the body. [`ConvexDomain::backward_exit`]
//! returns the entry point `y(x, n)` on the boundary and the travelled
//! distance `s(x, n)`, so that `x = y + s n`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Absolute tolerance, in shape-function units, for boundary membership.
pub const BOUNDARY_TOL: f64 = 1e-8;

/// Tolerance on `|n| - 1` for direction arguments.
pub const UNIT_TOL: f64 = 1e-12;

/// A C¹ convex body: a ball or an axis-aligned ellipsoid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum ConvexDomain {
    Ball { center: [f64; 3], radius: f64 },
    Ellipsoid { center: [f64; 3], semi_axes: [f64; 3] },
}

/// Backward exit of a ray: `x = entry + path_length * n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub entry: Vec3,
    pub path_length: f64,
}

impl ConvexDomain {
    pub fn ball(center: [f64; 3], radius: f64) -> Result<Self> {
        let d = ConvexDomain::Ball { center, radius };
        d.validate()?;
        Ok(d)
    }

    pub fn unit_ball() -> Self {
        ConvexDomain::Ball { center: [0.0; 3], radius: 1.0 }
    }

    pub fn ellipsoid(center: [f64; 3], semi_axes: [f64; 3]) -> Result<Self> {
        let d = ConvexDomain::Ellipsoid { center, semi_axes };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            ConvexDomain::Ball { center, radius } => {
                if !finite(center) || !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "ball needs a finite center and radius > 0 (radius = {radius})"
                    )));
                }
            }
            ConvexDomain::Ellipsoid { center, semi_axes } => {
                if !finite(center) || !semi_axes.iter().all(|a| a.is_finite() && *a > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "ellipsoid needs a finite center and semi-axes > 0 (got {semi_axes:?})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn center(&self) -> Vec3 {
        match self {
            ConvexDomain::Ball { center, .. } | ConvexDomain::Ellipsoid { center, .. } => {
                Vec3::from(*center)
            }
        }
    }

    pub fn semi_axes(&self) -> Vec3 {
        match self {
            ConvexDomain::Ball { radius, .. } => Vec3::repeat(*radius),
            ConvexDomain::Ellipsoid { semi_axes, .. } => Vec3::from(*semi_axes),
        }
    }

    /// `Σ ((x - c)_k / a_k)² - 1`: negative inside, zero on the boundary.
    pub fn shape_fn(&self, x: &Vec3) -> f64 {
        let p = (x - self.center()).component_div(&self.semi_axes());
        p.norm_squared() - 1.0
    }

    /// True iff `x` is strictly inside. Boundary points are not interior.
    pub fn contains(&self, x: &Vec3) -> bool {
        self.shape_fn(x) < 0.0
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.semi_axes().max()
    }

    pub fn volume(&self) -> f64 {
        let a = self.semi_axes();
        4.0 / 3.0 * std::f64::consts::PI * a.x * a.y * a.z
    }

    /// Lower and upper corners of the axis-aligned bounding box.
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let c = self.center();
        let a = self.semi_axes();
        (c - a, c + a)
    }

    /// Entry point and distance of the backward ray from an interior point.
    pub fn backward_exit(&self, x: &Vec3, n: &Vec3) -> Result<RayHit> {
        let dev = n.norm() - 1.0;
        if dev.abs() > UNIT_TOL {
            return Err(Error::NotUnit([n.x, n.y, n.z], dev));
        }
        if !self.contains(x) {
            return Err(Error::NotInterior([x.x, x.y, x.z]));
        }
        let s = self.exit_distance(x, n);
        Ok(RayHit { entry: x - s * n, path_length: s })
    }

    /// Unchecked positive root of `|x - t n|_shape = 1`; `x` must be inside.
    pub(crate) fn exit_distance(&self, x: &Vec3, n: &Vec3) -> f64 {
        let a = self.semi_axes();
        let p = (x - self.center()).component_div(&a);
        let d = n.component_div(&a);
        let dd = d.norm_squared();
        let b = p.dot(&d);
        let c = p.norm_squared() - 1.0;
        let disc = (b * b - dd * c).max(0.0);
        let root = disc.sqrt();
        // t² dd - 2 t b + c = 0 with c < 0: one positive root
        if b >= 0.0 {
            (b + root) / dd
        } else {
            c / (b - root)
        }
    }

    /// Length of the chord behind a boundary point `y` along `n`, i.e. the
    /// distance back to the other boundary crossing of the line `y - t n`.
    /// Zero when `n` does not point into the body from behind.
    pub fn chord_behind(&self, y: &Vec3, n: &Vec3) -> f64 {
        let a = self.semi_axes();
        let p = (y - self.center()).component_div(&a);
        let d = n.component_div(&a);
        let dd = d.norm_squared();
        let b = p.dot(&d);
        let c = p.norm_squared() - 1.0;
        let disc = (b * b - dd * c).max(0.0);
        // larger root of t² dd - 2 t b + c = 0
        let t = (b + disc.sqrt()) / dd;
        t.max(0.0)
    }

    /// Outward unit normal at a boundary point.
    pub fn outward_normal(&self, y: &Vec3) -> Result<Vec3> {
        let residual = self.shape_fn(y);
        if residual.abs() > BOUNDARY_TOL {
            return Err(Error::NotOnBoundary([y.x, y.y, y.z], residual));
        }
        Ok(self.gradient_direction(y))
    }

    pub(crate) fn gradient_direction(&self, y: &Vec3) -> Vec3 {
        let a = self.semi_axes();
        let g = (y - self.center()).component_div(&a.component_mul(&a));
        g.normalize()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
        loop {
            let v = Vec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let n2 = v.norm_squared();
            if n2 > 1e-4 && n2 <= 1.0 {
                return v / n2.sqrt();
            }
        }
    }

    fn random_interior(d: &ConvexDomain, rng: &mut ChaCha8Rng) -> Vec3 {
        let (lo, hi) = d.bounding_box();
        loop {
            let x = Vec3::new(
                rng.random_range(lo.x..hi.x),
                rng.random_range(lo.y..hi.y),
                rng.random_range(lo.z..hi.z),
            );
            if d.shape_fn(&x) < -1e-3 {
                return x;
            }
        }
    }

    #[test]
    fn contains_examples() {
        let b = ConvexDomain::unit_ball();
        assert!(b.contains(&Vec3::zeros()));
        assert!(!b.contains(&Vec3::new(2.0, 0.0, 0.0)));
        assert!(!b.contains(&Vec3::new(1.0, 0.0, 0.0)));
    }

    #[test]
    fn backward_exit_examples() {
        let b = ConvexDomain::unit_ball();
        let hit = b.backward_exit(&Vec3::zeros(), &Vec3::x()).unwrap();
        assert_relative_eq!(hit.entry, Vec3::new(-1.0, 0.0, 0.0), epsilon = 1e-15);
        assert_relative_eq!(hit.path_length, 1.0, epsilon = 1e-15);

        let hit = b.backward_exit(&Vec3::new(0.5, 0.0, 0.0), &Vec3::x()).unwrap();
        assert_relative_eq!(hit.entry, Vec3::new(-1.0, 0.0, 0.0), epsilon = 1e-15);
        assert_relative_eq!(hit.path_length, 1.5, epsilon = 1e-15);

        let e = ConvexDomain::ellipsoid([0.0; 3], [2.0, 1.0, 1.0]).unwrap();
        let hit = e.backward_exit(&Vec3::zeros(), &Vec3::x()).unwrap();
        assert_relative_eq!(hit.path_length, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn backward_exit_errors() {
        let b = ConvexDomain::unit_ball();
        assert!(matches!(
            b.backward_exit(&Vec3::new(2.0, 0.0, 0.0), &Vec3::x()),
            Err(Error::NotInterior(_))
        ));
        assert!(matches!(
            b.backward_exit(&Vec3::new(1.0, 0.0, 0.0), &Vec3::x()),
            Err(Error::NotInterior(_))
        ));
        assert!(matches!(
            b.backward_exit(&Vec3::zeros(), &Vec3::new(1.0, 1e-5, 0.0)),
            Err(Error::NotUnit(..))
        ));
    }

    #[test]
    fn normals() {
        let b = ConvexDomain::unit_ball();
        assert_relative_eq!(b.outward_normal(&Vec3::x()).unwrap(), Vec3::x());
        assert_relative_eq!(b.outward_normal(&-Vec3::y()).unwrap(), -Vec3::y());
        let e = ConvexDomain::ellipsoid([0.0; 3], [2.0, 1.0, 1.0]).unwrap();
        assert_relative_eq!(e.outward_normal(&Vec3::new(2.0, 0.0, 0.0)).unwrap(), Vec3::x());
        assert!(matches!(b.outward_normal(&Vec3::zeros()), Err(Error::NotOnBoundary(..))));
    }

    #[test]
    fn diameters() {
        assert_eq!(ConvexDomain::unit_ball().diameter(), 2.0);
        assert_eq!(ConvexDomain::ball([1.0, 2.0, 3.0], 3.0).unwrap().diameter(), 6.0);
        assert_eq!(ConvexDomain::ellipsoid([0.0; 3], [2.0, 1.0, 1.0]).unwrap().diameter(), 4.0);
    }

    #[test]
    fn rejects_degenerate_shapes() {
        assert!(ConvexDomain::ball([0.0; 3], 0.0).is_err());
        assert!(ConvexDomain::ellipsoid([0.0; 3], [1.0, -1.0, 1.0]).is_err());
    }

    fn domains() -> Vec<ConvexDomain> {
        vec![
            ConvexDomain::unit_ball(),
            ConvexDomain::ball([0.3, -1.0, 2.0], 2.5).unwrap(),
            ConvexDomain::ellipsoid([0.0; 3], [2.0, 1.0, 1.0]).unwrap(),
            ConvexDomain::ellipsoid([1.0, 0.5, -0.2], [0.5, 1.5, 0.8]).unwrap(),
        ]
    }

    #[test]
    fn reconstruction_and_bounds_on_random_rays() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in domains() {
            let scale = d.diameter();
            for _ in 0..2_500 {
                let x = random_interior(&d, &mut rng);
                let n = random_unit(&mut rng);
                let hit = d.backward_exit(&x, &n).unwrap();
                let back = hit.entry + hit.path_length * n;
                assert!((back - x).norm() <= 1e-10 * scale.max(1.0));
                assert!(d.shape_fn(&hit.entry).abs() <= 1e-10);
                assert!(hit.path_length >= 0.0 && hit.path_length <= d.diameter() + 1e-12);
            }
        }
    }

    #[test]
    fn path_length_grows_along_the_ray() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in domains() {
            for _ in 0..500 {
                let x = random_interior(&d, &mut rng);
                let n = random_unit(&mut rng);
                let eps = 1e-4;
                let x2 = x + eps * n;
                if !d.contains(&x2) {
                    continue;
                }
                let s1 = d.backward_exit(&x, &n).unwrap().path_length;
                let s2 = d.backward_exit(&x2, &n).unwrap().path_length;
                assert!((s2 - s1 - eps).abs() <= 1e-10, "{s1} {s2}");
            }
        }
    }

    #[test]
    fn chord_behind_boundary_point() {
        let b = ConvexDomain::unit_ball();
        // leaving through (1,0,0) along +x: the chord spans the diameter
        assert_relative_eq!(b.chord_behind(&Vec3::x(), &Vec3::x()), 2.0, epsilon = 1e-14);
        // entering direction has nothing behind it
        assert_eq!(b.chord_behind(&Vec3::x(), &-Vec3::x()), 0.0);
    }
}
