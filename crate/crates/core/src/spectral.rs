//! Multi-dimensional FFTs on periodic boxes and Fourier multipliers.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{NlsError, Result};
use crate::exec;
use crate::field::Field;
use crate::grid::{CartesianGrid, Grid};

/// Forward and inverse 1-D plans of one length.
pub struct FftPlan {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FftPlan {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }
}

/// Lines handed to rustfft per call.
const LINES_PER_BATCH: usize = 16;

fn process_lines(fft: &dyn Fft<f64>, n: usize, buf: &mut [Complex64]) {
    exec::for_each_chunk_mut(buf, n * LINES_PER_BATCH, |_, chunk| {
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(chunk, &mut scratch);
    });
}

/// Unnormalized in-place DFT over all axes of a row-major `n^d` array.
pub(crate) fn fft_nd(grid: &CartesianGrid, data: &mut [Complex64], inverse: bool) {
    let plan = grid.plan();
    let fft: &dyn Fft<f64> = if inverse {
        plan.inverse.as_ref()
    } else {
        plan.forward.as_ref()
    };
    let n = plan.n;
    let d = grid.d();
    debug_assert_eq!(data.len(), n.pow(d as u32));
    let total = data.len();
    let mut buf: Vec<Complex64> = Vec::new();
    for axis in 0..d {
        let inner = n.pow((d - 1 - axis) as u32);
        if inner == 1 {
            process_lines(fft, n, data);
            continue;
        }
        if buf.len() != total {
            buf = vec![Complex64::new(0.0, 0.0); total];
        }
        // gather lines along `axis` contiguously
        {
            let src: &[Complex64] = data;
            exec::for_each_chunk_mut(&mut buf, n, |line, out| {
                let o = line / inner;
                let i = line % inner;
                let base = o * n * inner + i;
                for (k, v) in out.iter_mut().enumerate() {
                    *v = src[base + k * inner];
                }
            });
        }
        process_lines(fft, n, &mut buf);
        let src: &[Complex64] = &buf;
        exec::for_each_chunk_mut(data, inner, |c, out| {
            let o = c / n;
            let k = c % n;
            for (i, v) in out.iter_mut().enumerate() {
                *v = src[(o * inner + i) * n + k];
            }
        });
    }
}

/// Fourier coefficients `c_k = DFT(u)_k / n^d` of a cartesian field.
///
/// Sampled values satisfy `u_j = Σ_k c_k e^{i k·(x_j + L)}`; indices follow
/// FFT order on every axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Arc<Grid>,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn grid(&self) -> &CartesianGrid {
        self.grid.as_cartesian().expect("spectral fields live on cartesian grids")
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// `Σ_k |c_k|^2 (2L)^d`, the spectral side of Parseval.
    pub fn parseval_mass(&self) -> f64 {
        let vol = self.grid().box_volume();
        let c = &self.coeffs;
        exec::sum(c.len(), |i| c[i].norm_sqr()) * vol
    }
}

fn require_cartesian(u: &Field) -> Result<&CartesianGrid> {
    u.grid()
        .as_cartesian()
        .ok_or_else(|| NlsError::GridMismatch("operation requires a cartesian grid".into()))
}

pub fn forward_transform(u: &Field) -> Result<SpectralField> {
    let g = require_cartesian(u)?;
    let mut coeffs = u.values().to_vec();
    fft_nd(g, &mut coeffs, false);
    let scale = 1.0 / g.len() as f64;
    exec::for_each_mut(&mut coeffs, |_, c| *c *= scale);
    Ok(SpectralField {
        grid: u.grid_handle(),
        coeffs,
    })
}

pub fn inverse_transform(s: &SpectralField) -> Field {
    let g = s.grid();
    let mut values = s.coeffs.clone();
    fft_nd(g, &mut values, true);
    Field::from_parts(s.grid.clone(), values, "inverse_transform")
}

/// Multiply the spectrum of `u` by `m(k)` and return to physical space.
pub fn apply_multiplier<F>(u: &Field, m: F) -> Result<Field>
where
    F: Fn([f64; 3]) -> Complex64 + Sync,
{
    let g = require_cartesian(u)?;
    let mut buf = u.values().to_vec();
    fft_nd(g, &mut buf, false);
    let scale = 1.0 / g.len() as f64;
    exec::for_each_mut(&mut buf, |i, c| *c *= m(g.wavevector(i)) * scale);
    fft_nd(g, &mut buf, true);
    Ok(Field::from_parts(u.grid_handle(), buf, u.tag()))
}

/// Spectral partial derivatives `∂_a u` for each axis `a < d`.
pub fn gradient(u: &Field) -> Result<Vec<Vec<Complex64>>> {
    let g = require_cartesian(u)?;
    let mut spec = u.values().to_vec();
    fft_nd(g, &mut spec, false);
    let scale = 1.0 / g.len() as f64;
    let mut out = Vec::with_capacity(g.d());
    for a in 0..g.d() {
        let mut comp = spec.clone();
        exec::for_each_mut(&mut comp, |i, c| {
            let k = g.odd_wavevector(i)[a];
            *c *= Complex64::new(0.0, k * scale);
        });
        fft_nd(g, &mut comp, true);
        out.push(comp);
    }
    Ok(out)
}

/// `∫|∇u|^2 = (2L)^d Σ_k |k|^2 |c_k|^2`.
pub fn spectral_gradient_norm_sq(u: &Field) -> Result<f64> {
    let g = require_cartesian(u)?;
    let s = forward_transform(u)?;
    let c = s.coeffs();
    Ok(exec::sum(c.len(), |i| g.k_squared(i) * c[i].norm_sqr()) * g.box_volume())
}

/// Exact free Schrödinger flow `e^{itΔ}`: multiplier `e^{-it|k|^2}`.
pub fn free_propagate(u: &Field, t: f64) -> Result<Field> {
    if t == 0.0 {
        return Ok(u.clone());
    }
    let g = require_cartesian(u)?;
    let _ = g;
    apply_multiplier(u, |k| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        Complex64::from_polar(1.0, -t * k2)
    })
}

/// Translation `u(x - a)` by a Fourier phase shift.
pub fn translate(u: &Field, shift: [f64; 3]) -> Result<Field> {
    apply_multiplier(u, |k| {
        Complex64::from_polar(1.0, -(k[0] * shift[0] + k[1] * shift[1] + k[2] * shift[2]))
    })
}

/// Zero all modes with `|k_a| > (2/3) k_max` on any axis.
pub fn dealias_two_thirds(u: &mut Field) -> Result<()> {
    let g = require_cartesian(u)?.clone();
    let cut = 2.0 / 3.0 * g.k_max();
    let mut buf = u.values().to_vec();
    fft_nd(&g, &mut buf, false);
    let scale = 1.0 / g.len() as f64;
    exec::for_each_mut(&mut buf, |i, c| {
        let k = g.wavevector(i);
        if k.iter().any(|ka| ka.abs() > cut) {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c *= scale;
        }
    });
    fft_nd(&g, &mut buf, true);
    u.values_mut().copy_from_slice(&buf);
    Ok(())
}

/// Fraction of `Σ|c_k|^2` carried by modes with `|k| > (2/3) k_max`.
pub fn high_mode_fraction(u: &Field) -> Result<f64> {
    let g = require_cartesian(u)?;
    let s = forward_transform(u)?;
    let c = s.coeffs();
    let cut2 = (2.0 / 3.0 * g.k_max()).powi(2);
    let [hi, all] = exec::sum_n::<2, _>(c.len(), |i| {
        let e = c[i].norm_sqr();
        [if g.k_squared(i) > cut2 { e } else { 0.0 }, e]
    });
    Ok(if all > 0.0 { hi / all } else { 0.0 })
}
