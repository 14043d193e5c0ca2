//! Interpolation used by rescaling and by radial-to-cartesian sampling.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::exec;
use crate::grid::{CartesianGrid, RadialGrid};

/// Trigonometric (band-limited) interpolation weights for one axis.
///
/// Row `j` holds the weights producing the interpolant at `targets[j]`.
pub(crate) fn trig_weights(g: &CartesianGrid, targets: &[f64]) -> Vec<f64> {
    let n = g.n();
    let l = g.half_length();
    let mut w = vec![0.0; targets.len() * n];
    for (j, &t) in targets.iter().enumerate() {
        let row = &mut w[j * n..(j + 1) * n];
        for (k, wk) in row.iter_mut().enumerate() {
            let theta = PI * (t - g.coord(k)) / l;
            let half = 0.5 * theta;
            let s = half.sin();
            // a node or one of its periodic images (n even)
            *wk = if s.abs() < 1e-14 {
                1.0
            } else {
                (n as f64 * half).sin() / (n as f64 * half.tan())
            };
        }
    }
    w
}

/// Apply an `n x n` matrix along every axis of a row-major `n^d` array.
pub(crate) fn apply_along_axes(
    g: &CartesianGrid,
    data: &[Complex64],
    weights: &[f64],
) -> Vec<Complex64> {
    let n = g.n();
    let d = g.d();
    let mut cur = data.to_vec();
    for axis in 0..d {
        let inner = n.pow((d - 1 - axis) as u32);
        let src = cur;
        let mut out = vec![Complex64::new(0.0, 0.0); src.len()];
        // each chunk of `inner` outputs shares (outer, j)
        exec::for_each_chunk_mut(&mut out, inner, |c, chunk| {
            let o = c / n;
            let j = c % n;
            let row = &weights[j * n..(j + 1) * n];
            let base = o * n * inner;
            for (i, v) in chunk.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, &wk) in row.iter().enumerate() {
                    if wk != 0.0 {
                        acc += src[base + k * inner + i] * wk;
                    }
                }
                *v = acc;
            }
        });
        cur = out;
    }
    cur
}

const LAGRANGE_POINTS: usize = 8;

/// Eight-point Lagrange interpolation of a radial profile at radius `r`,
/// using even reflection across the origin. Zero beyond `r_max`.
pub fn radial_interpolate(g: &RadialGrid, f: &[Complex64], r: f64) -> Complex64 {
    let r = r.abs();
    let h = g.spacing();
    let n = f.len();
    if r > g.r_max() {
        return Complex64::new(0.0, 0.0);
    }
    let pos = r / h;
    let base = pos.floor() as isize;
    let half = (LAGRANGE_POINTS / 2) as isize;
    let mut lo = base - half + 1;
    // keep the stencil inside [-(n-1), n-1] so reflected indices exist
    if lo + LAGRANGE_POINTS as isize - 1 > n as isize - 1 {
        lo = n as isize - LAGRANGE_POINTS as isize;
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for a in 0..LAGRANGE_POINTS as isize {
        let ia = lo + a;
        let xa = ia as f64;
        if (pos - xa).abs() < 1e-13 {
            return f[ia.unsigned_abs()];
        }
        let mut w = 1.0;
        for b in 0..LAGRANGE_POINTS as isize {
            if b != a {
                let xb = (lo + b) as f64;
                w *= (pos - xb) / (xa - xb);
            }
        }
        acc += f[ia.unsigned_abs()] * w;
    }
    acc
}
