//! Grid quadrature and derivative norms.

use num_complex::Complex64;

use crate::error::{NlsError, Result};
use crate::exec;
use crate::field::Field;
use crate::grid::{Grid, RadialGrid};
use crate::spectral;

/// `∫ |u|^q dx`.
pub fn quadrature_lq(u: &Field, q: f64) -> f64 {
    let v = u.values();
    match u.grid() {
        Grid::Cartesian(g) => exec::sum(v.len(), |i| abs_pow(v[i], q)) * g.cell_volume(),
        Grid::Radial(g) => {
            let w = g.weights();
            exec::sum(v.len(), |i| w[i] * abs_pow(v[i], q))
        }
    }
}

#[inline]
pub(crate) fn abs_pow(z: Complex64, q: f64) -> f64 {
    pow_from_sq(z.norm_sqr(), q)
}

/// `∫ |∇u|^2 dx`: spectral on cartesian grids, fourth-order differences on
/// radial grids.
pub fn gradient_norm_sq(u: &Field) -> f64 {
    match u.grid() {
        Grid::Cartesian(_) => spectral::spectral_gradient_norm_sq(u).expect("cartesian"),
        Grid::Radial(g) => {
            let du = radial_derivative(g, u.values());
            let w = g.weights();
            exec::sum(du.len(), |i| w[i] * du[i].norm_sqr())
        }
    }
}

/// Fourth-order `∂_r` on a radial grid: even reflection at `r = 0`,
/// one-sided closure at `r_max`.
pub fn radial_derivative(g: &RadialGrid, f: &[Complex64]) -> Vec<Complex64> {
    let n = f.len();
    let h = g.spacing();
    let at = |j: isize| -> Complex64 { f[j.unsigned_abs()] };
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (i, o) in out.iter_mut().enumerate().take(n - 2) {
        let i = i as isize;
        *o = (at(i - 2) - 8.0 * at(i - 1) + 8.0 * at(i + 1) - at(i + 2)) / (12.0 * h);
    }
    let e = |k: usize| f[n - 1 - k];
    out[n - 2] = (3.0 * e(0) + 10.0 * e(1) - 18.0 * e(2) + 6.0 * e(3) - e(4)) / (12.0 * h);
    out[n - 1] =
        (25.0 * e(0) - 48.0 * e(1) + 36.0 * e(2) - 16.0 * e(3) + 3.0 * e(4)) / (12.0 * h);
    out
}

/// Fourth-order `∂_r^2`, same boundary treatment as [`radial_derivative`].
pub fn radial_second_derivative(g: &RadialGrid, f: &[Complex64]) -> Vec<Complex64> {
    let n = f.len();
    let h2 = g.spacing() * g.spacing();
    let at = |j: isize| -> Complex64 { f[j.unsigned_abs()] };
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (i, o) in out.iter_mut().enumerate().take(n - 2) {
        let i = i as isize;
        *o = (-at(i - 2) + 16.0 * at(i - 1) - 30.0 * at(i) + 16.0 * at(i + 1) - at(i + 2))
            / (12.0 * h2);
    }
    let e = |k: usize| f[n - 1 - k];
    out[n - 2] = (10.0 * e(0) - 15.0 * e(1) - 4.0 * e(2) + 14.0 * e(3) - 6.0 * e(4) + e(5))
        / (12.0 * h2);
    out[n - 1] = (45.0 * e(0) - 154.0 * e(1) + 214.0 * e(2) - 156.0 * e(3) + 61.0 * e(4)
        - 10.0 * e(5))
        / (12.0 * h2);
    out
}

/// Radial Laplacian `f'' + (d-1) f'/r`, with `d f''(0)` at the origin.
pub fn radial_laplacian(g: &RadialGrid, f: &[Complex64]) -> Vec<Complex64> {
    let d1 = g.d() as f64 - 1.0;
    let du = radial_derivative(g, f);
    let d2u = radial_second_derivative(g, f);
    g.nodes()
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            if r == 0.0 {
                d2u[i] * g.d() as f64
            } else {
                d2u[i] + du[i] * (d1 / r)
            }
        })
        .collect()
}

/// The four integrals every functional is built from.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Integrals {
    /// `∫|u|^2`
    pub mass: f64,
    /// `∫|∇u|^2`
    pub grad: f64,
    /// `∫|u|^{p+1}`
    pub lp1: f64,
    /// `∫|u|^{2(d+2)/d}`
    pub lmc: f64,
}

/// Mass and the two potential integrals in one pass, plus the gradient norm.
pub fn integrals(u: &Field, p: f64) -> Result<Integrals> {
    let d = u.grid().d() as f64;
    let qmc = 2.0 * (d + 2.0) / d;
    let v = u.values();
    let [mass, lp1, lmc] = match u.grid() {
        Grid::Cartesian(g) => {
            let dv = g.cell_volume();
            let s = exec::sum_n::<3, _>(v.len(), |i| {
                let a2 = v[i].norm_sqr();
                [a2, pow_from_sq(a2, p + 1.0), pow_from_sq(a2, qmc)]
            });
            [s[0] * dv, s[1] * dv, s[2] * dv]
        }
        Grid::Radial(g) => {
            let w = g.weights();
            exec::sum_n::<3, _>(v.len(), |i| {
                let a2 = v[i].norm_sqr();
                [
                    w[i] * a2,
                    w[i] * pow_from_sq(a2, p + 1.0),
                    w[i] * pow_from_sq(a2, qmc),
                ]
            })
        }
    };
    let grad = gradient_norm_sq(u);
    let out = Integrals {
        mass,
        grad,
        lp1,
        lmc,
    };
    if [mass, grad, lp1, lmc].iter().all(|x| x.is_finite()) {
        Ok(out)
    } else {
        Err(NlsError::NonFinite)
    }
}

#[inline]
pub(crate) fn pow_from_sq(a2: f64, q: f64) -> f64 {
    if a2 == 0.0 {
        return 0.0;
    }
    // integer and half-integer powers avoid powf in the hot loops
    let twice = q;
    if twice == twice.trunc() && twice.abs() <= 32.0 {
        let k = twice as i32;
        if k % 2 == 0 {
            a2.powi(k / 2)
        } else {
            a2.sqrt().powi(k)
        }
    } else {
        a2.powf(0.5 * q)
    }
}
