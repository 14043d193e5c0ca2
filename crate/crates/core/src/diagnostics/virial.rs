use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{NlsError, Result};
use crate::exec;
use crate::field::Field;
use crate::grid::{CartesianGrid, Grid};
use crate::params::Params;
use crate::quadrature::{pow_from_sq, radial_derivative, radial_laplacian};
use crate::spectral;

use super::cutoff::CutoffWeight;

/// `V_R`, `V_R'` and `V_R''` at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VirialSample {
    pub v: f64,
    pub vp: f64,
    pub vpp: f64,
}

fn check(u: &Field, w: &CutoffWeight) -> Result<()> {
    if u.len() != w.len() || u.grid().d() != w.d {
        return Err(NlsError::GridMismatch(format!(
            "field has {} points in d = {}, weight has {} in d = {}",
            u.len(),
            u.grid().d(),
            w.len(),
            w.d
        )));
    }
    Ok(())
}

fn node_weights(grid: &Grid) -> impl Fn(usize) -> f64 + Sync + '_ {
    move |i| match grid {
        Grid::Cartesian(g) => g.cell_volume(),
        Grid::Radial(g) => g.weights()[i],
    }
}

/// `∫ φ_R |u|²`.
pub fn virial(u: &Field, w: &CutoffWeight) -> Result<f64> {
    check(u, w)?;
    let v = u.values();
    let dv = node_weights(u.grid());
    Ok(exec::sum(v.len(), |i| dv(i) * w.phi[i] * v[i].norm_sqr()))
}

/// First and second spatial derivatives needed by the virial identities.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDerivatives {
    /// `d` components on cartesian grids, the single radial component `∂_r u`
    /// on radial grids
    pub gradient: Vec<Vec<Complex64>>,
    pub laplacian: Vec<Complex64>,
}

/// Spectral derivatives on cartesian grids, fourth-order differences on radial grids.
pub fn field_derivatives(u: &Field) -> Result<FieldDerivatives> {
    match u.grid() {
        Grid::Cartesian(g) => {
            let mut spec = u.values().to_vec();
            spectral::fft_nd(g, &mut spec, false);
            Ok(derivatives_from_spectrum(g, &spec))
        }
        Grid::Radial(g) => Ok(FieldDerivatives {
            gradient: vec![radial_derivative(g, u.values())],
            laplacian: radial_laplacian(g, u.values()),
        }),
    }
}

/// Derivatives from an unnormalized forward transform.
pub(crate) fn derivatives_from_spectrum(g: &CartesianGrid, spec: &[Complex64]) -> FieldDerivatives {
    let scale = 1.0 / g.len() as f64;
    let back = |f: &(dyn Fn(usize) -> Complex64 + Sync)| {
        let mut comp = spec.to_vec();
        exec::for_each_mut(&mut comp, |i, c| *c *= f(i));
        spectral::fft_nd(g, &mut comp, true);
        comp
    };
    let gradient = (0..g.d())
        .map(|a| back(&|i| Complex64::new(0.0, g.odd_wavevector(i)[a] * scale)))
        .collect();
    let laplacian = back(&|i| Complex64::new(-g.k_squared(i) * scale, 0.0));
    FieldDerivatives { gradient, laplacian }
}

/// `(V_R', V_R'')` of `u`.
pub fn virial_derivatives(u: &Field, w: &CutoffWeight, params: &Params) -> Result<(f64, f64)> {
    let s = virial_sample(u, &field_derivatives(u)?, w, params)?;
    Ok((s.vp, s.vpp))
}

/// All three virial quantities from precomputed derivatives.
///
/// The `Δ²φ_R |u|²` term is integrated as `Δφ_R Δ|u|²`, which needs only a C²
/// weight and keeps every integrand continuous.
pub fn virial_sample(
    u: &Field,
    der: &FieldDerivatives,
    w: &CutoffWeight,
    params: &Params,
) -> Result<VirialSample> {
    check(u, w)?;
    let grid = u.grid();
    let v = u.values();
    let grads = &der.gradient;
    let lap_u = &der.laplacian;
    let dv = node_weights(grid);
    let p = params.p();
    let d = params.d() as f64;
    let qmc = 2.0 * (d + 2.0) / d;
    let c_p = 2.0 * (p - 1.0) / (p + 1.0);
    let c_mc = 4.0 / (d + 2.0);
    let radial = matches!(grid, Grid::Radial(_));
    let [vv, vp, vpp] = exec::sum_n::<3, _>(v.len(), |i| {
        let a2 = v[i].norm_sqr();
        let r = grid.radius(i);
        // x·∇u and |∇u|²
        let (x_grad, grad2) = if radial {
            (grads[0][i] * r, grads[0][i].norm_sqr())
        } else {
            let x = grid.as_cartesian().unwrap().point(i);
            let mut xg = Complex64::new(0.0, 0.0);
            let mut g2 = 0.0;
            for (a, ga) in grads.iter().enumerate() {
                xg += ga[i] * x[a];
                g2 += ga[i].norm_sqr();
            }
            (xg, g2)
        };
        let (ha, hb) = w.hessian_parts(i, r);
        let hess = ha * grad2 + hb * x_grad.norm_sqr();
        let vp = 2.0 * (v[i].conj() * x_grad).im * w.slope_over_r[i];
        let lap_mod2 = 2.0 * (v[i].conj() * lap_u[i]).re + 2.0 * grad2;
        let vpp = 4.0 * hess - w.laplacian[i] * lap_mod2
            - c_p * w.laplacian[i] * pow_from_sq(a2, p + 1.0)
            + c_mc * w.laplacian[i] * pow_from_sq(a2, qmc);
        let c = dv(i);
        [c * w.phi[i] * a2, c * vp, c * vpp]
    });
    Ok(VirialSample { v: vv, vp, vpp })
}
