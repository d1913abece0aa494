//! Formal solutions of `n·∇I = S - κI` along backward rays.
//!
//! Along each ray the source is sampled at equally spaced points by
//! trilinear interpolation of nodal values and integrated against the exact
//! attenuation with a piecewise-linear source, so constant sources are
//! reproduced exactly.

use rayon::prelude::*;

use crate::numeric::exp_segment_coeffs;
use crate::spectral::planck_unchecked;
use crate::transport::{BoundarySource, BoundaryTable, Grids, RadiationField, ScalarField};
use crate::{Error, Result, Vec3};

/// Volume source `S` per unit length.
#[derive(Debug, Clone, Copy)]
pub enum Source<'a> {
    None,
    /// `[node][freq]`, the same in every direction.
    Isotropic(&'a [f64]),
    /// `[node][dir][freq]`.
    Directional(&'a [f64]),
}

/// Per-thread buffers for [`march`].
#[derive(Debug, Clone)]
pub struct MarchScratch {
    near: Vec<f64>,
    far: Vec<f64>,
    c_near: Vec<f64>,
    c_far: Vec<f64>,
    att: Vec<f64>,
    trans: Vec<f64>,
}

impl MarchScratch {
    pub fn new(n_freq: usize) -> Self {
        let z = vec![0.0; n_freq];
        MarchScratch {
            near: z.clone(),
            far: z.clone(),
            c_near: z.clone(),
            c_far: z.clone(),
            att: z.clone(),
            trans: z,
        }
    }
}

fn sample(grids: &Grids, source: Source, dir: usize, p: &Vec3, out: &mut [f64]) {
    let f = out.len();
    match source {
        Source::None => out.iter_mut().for_each(|o| *o = 0.0),
        Source::Isotropic(data) => grids.spatial.stencil(p).apply_rows(data, f, out),
        Source::Directional(data) => {
            let st = grids.spatial.stencil(p);
            let n_dirs = grids.angular.len();
            out.iter_mut().for_each(|o| *o = 0.0);
            for k in 0..st.len {
                let base = (st.idx[k] as usize * n_dirs + dir) * f;
                let w = st.w[k];
                for (o, v) in out.iter_mut().zip(&data[base..base + f]) {
                    *o += w * v;
                }
            }
        }
    }
}

/// Radiance at `x` travelling along `n` for every frequency, where the
/// backward ray has length `s` and enters with radiance `inflow`. `dir`
/// selects the direction slice of a directional source.
#[allow(clippy::too_many_arguments)]
pub fn march(
    grids: &Grids,
    extinction: &[f64],
    inflow: &[f64],
    source: Source,
    x: &Vec3,
    n: &Vec3,
    dir: usize,
    s: f64,
    scratch: &mut MarchScratch,
    out: &mut [f64],
) {
    if let Source::None = source {
        for ((o, g), k) in out.iter_mut().zip(inflow).zip(extinction) {
            *o = if *g == 0.0 { 0.0 } else { g * (-k * s).exp() };
        }
        return;
    }
    let segments = grids.ray_segments(s);
    let delta = s / segments as f64;
    let MarchScratch { near, far, c_near, c_far, att, trans } = scratch;
    for j in 0..extinction.len() {
        let (a, b, e) = exp_segment_coeffs(extinction[j], delta);
        c_near[j] = a;
        c_far[j] = b;
        att[j] = e;
        trans[j] = 1.0;
        out[j] = 0.0;
    }
    sample(grids, source, dir, x, near);
    for k in 1..=segments {
        let p = x - (k as f64 * delta) * n;
        sample(grids, source, dir, &p, far);
        for j in 0..out.len() {
            out[j] += trans[j] * (c_near[j] * near[j] + c_far[j] * far[j]);
            trans[j] *= att[j];
        }
        std::mem::swap(near, far);
    }
    for j in 0..out.len() {
        out[j] += trans[j] * inflow[j];
    }
}

/// Formal solution at every node and direction.
pub fn sweep(grids: &Grids, extinction: &[f64], boundary: &BoundaryTable, source: Source) -> RadiationField {
    let n_dirs = grids.angular.len();
    let n_freq = extinction.len();
    let mut field = RadiationField::zeros(grids.spatial.len(), n_dirs, n_freq);
    field
        .values
        .par_chunks_mut(n_dirs * n_freq)
        .enumerate()
        .for_each_init(
            || MarchScratch::new(n_freq),
            |scratch, (m, row)| {
                let x = grids.spatial.nodes[m];
                for (i, out) in row.chunks_mut(n_freq).enumerate() {
                    let n = grids.angular.nodes[i];
                    march(grids, extinction, boundary.row(i), source, &x, &n, i, grids.exit(m, i), scratch, out);
                }
            },
        );
    field
}

/// Radiance at an arbitrary interior point `x` in direction `n` at frequency
/// `nu` in a purely absorbing medium with temperature field `temperature`
/// (nodal values, interpolated trilinearly along the ray) and absorption
/// `alpha` at that frequency.
pub fn formal_solution_absorption(
    grids: &Grids,
    x: &Vec3,
    n: &Vec3,
    nu: f64,
    temperature: &ScalarField,
    boundary: &BoundarySource,
    alpha: f64,
) -> Result<f64> {
    let hit = grids.domain.backward_exit(x, n)?;
    if !(nu > 0.0) {
        return Err(Error::NonPositiveFrequency(nu));
    }
    if let Some(t) = temperature.values.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::NonPositiveTemperature(*t));
    }
    let s = hit.path_length;
    let g = boundary.radiance(n, nu);
    let segments = grids.ray_segments(s);
    let delta = s / segments as f64;
    let (c_near, c_far, att) = exp_segment_coeffs(alpha, delta);
    let emission = |p: &Vec3| alpha * planck_unchecked(nu, grids.spatial.interpolate(&temperature.values, p));
    let mut near = emission(x);
    let mut trans = 1.0;
    let mut acc = 0.0;
    for k in 1..=segments {
        let far = emission(&(x - (k as f64 * delta) * n));
        acc += trans * (c_near * near + c_far * far);
        trans *= att;
        near = far;
    }
    Ok(acc + trans * g)
}
