//! Mass, energy, action, the scaling derivative K and their relatives.

mod decoupling;

pub use decoupling::{decoupling_check, DecouplingReport, DecouplingScenario, FunctionalDefects};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{NlsError, Result};
use crate::exec;
use crate::field::Field;
use crate::grid::Grid;
use crate::interp;
use crate::params::Params;
pub use crate::profiles::ScalingMode;
use crate::quadrature::{self, Integrals};

/// Every variational quantity of a single field.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FunctionalBundle {
    pub mass: f64,
    pub energy: f64,
    pub s_omega: f64,
    pub k: f64,
    /// `∫|∇u|²`
    pub k_quadratic: f64,
    /// `-(d(p-1)/(2(p+1)))∫|u|^{p+1} + (d/(d+2))∫|u|^{2(d+2)/d}`
    pub k_nonlinear: f64,
    pub h_omega: f64,
    /// `‖u‖_{p+1}^{p+1}`
    pub lp1: f64,
    /// `‖u‖_{2(d+2)/d}^{2(d+2)/d}`
    pub l_mass_crit: f64,
}

impl FunctionalBundle {
    pub fn from_integrals(i: &Integrals, params: &Params) -> Self {
        let d = params.d() as f64;
        let p = params.p();
        let omega = params.omega();
        let energy = 0.5 * i.grad - i.lp1 / (p + 1.0) + d / (2.0 * (d + 2.0)) * i.lmc;
        let s_omega = energy + 0.5 * omega * i.mass;
        let k_quadratic = i.grad;
        let k_nonlinear = -params.k_focusing_coeff() * i.lp1 + params.k_mass_critical_coeff() * i.lmc;
        let k = k_quadratic + k_nonlinear;
        let h_omega = 0.5 * omega * i.mass + (d * (p - 1.0) - 4.0) / (4.0 * (p + 1.0)) * i.lp1;
        Self {
            mass: i.mass,
            energy,
            s_omega,
            k,
            k_quadratic,
            k_nonlinear,
            h_omega,
            lp1: i.lp1,
            l_mass_crit: i.lmc,
        }
    }

    /// `∫ ½|∇u|² + (d/(2(d+2)))|u|^{2(d+2)/d}`, the upper envelope in energy
    /// trapping.
    pub fn trapping_envelope(&self, params: &Params) -> f64 {
        let d = params.d() as f64;
        0.5 * self.k_quadratic + d / (2.0 * (d + 2.0)) * self.l_mass_crit
    }

    /// Scale of the terms making up K; used to normalize K residuals.
    pub fn k_scale(&self) -> f64 {
        self.k_quadratic.abs() + self.k_nonlinear.abs()
    }
}

fn check_dimension(u: &Field, params: &Params) -> Result<()> {
    if u.grid().d() != params.d() {
        return Err(NlsError::GridMismatch(format!(
            "field is {}-dimensional, parameters are for d = {}",
            u.grid().d(),
            params.d()
        )));
    }
    Ok(())
}

pub fn integrals(u: &Field, params: &Params) -> Result<Integrals> {
    check_dimension(u, params)?;
    u.ensure_finite()?;
    quadrature::integrals(u, params.p())
}

pub fn evaluate(u: &Field, params: &Params) -> Result<FunctionalBundle> {
    Ok(FunctionalBundle::from_integrals(&integrals(u, params)?, params))
}

/// Functionals of the pure energy-critical problem (d = 3).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CriticalBundle {
    pub k0: f64,
    pub h0: f64,
    pub e0: f64,
    /// `‖∇u‖_{L²} / ‖u‖_{L^{2d/(d-2)}}`
    pub sobolev_ratio: f64,
}

pub fn evaluate_critical(u: &Field, params: &Params) -> Result<CriticalBundle> {
    let d = params.d();
    if d != 3 {
        return Err(NlsError::UnsupportedDimension(d));
    }
    check_dimension(u, params)?;
    u.ensure_finite()?;
    let df = d as f64;
    let q = 2.0 * df / (df - 2.0);
    let grad = quadrature::gradient_norm_sq(u);
    let crit = quadrature::quadrature_lq(u, q);
    let sobolev_ratio = if crit > 0.0 {
        grad.sqrt() / crit.powf(1.0 / q)
    } else {
        0.0
    };
    Ok(CriticalBundle {
        k0: grad - crit,
        h0: crit / df,
        e0: 0.5 * grad - (df - 2.0) / (2.0 * df) * crit,
        sobolev_ratio,
    })
}

/// Functionals of `T_λ u` from the integrals of `u`, without re-gridding.
#[derive(Debug, Clone, Copy)]
pub struct ScalingCurve {
    integrals: Integrals,
    params: Params,
}

impl ScalingCurve {
    pub fn new(integrals: Integrals, params: Params) -> Self {
        Self { integrals, params }
    }

    pub fn from_field(u: &Field, params: &Params) -> Result<Self> {
        Ok(Self::new(integrals(u, params)?, *params))
    }

    /// Integrals of `T_λ u`.
    pub fn integrals_at(&self, lambda: f64) -> Integrals {
        let a = self.params.focusing_scaling_degree();
        let l2 = lambda * lambda;
        Integrals {
            mass: self.integrals.mass,
            grad: l2 * self.integrals.grad,
            lp1: lambda.powf(a) * self.integrals.lp1,
            lmc: l2 * self.integrals.lmc,
        }
    }

    pub fn bundle_at(&self, lambda: f64) -> FunctionalBundle {
        FunctionalBundle::from_integrals(&self.integrals_at(lambda), &self.params)
    }

    pub fn k_at(&self, lambda: f64) -> f64 {
        self.bundle_at(lambda).k
    }

    /// `λ^{-2} K(T_λ u)`, strictly decreasing in λ.
    pub fn reduced_k(&self, lambda: f64) -> f64 {
        let i = &self.integrals;
        let a = self.params.focusing_scaling_degree();
        i.grad + self.params.k_mass_critical_coeff() * i.lmc
            - self.params.k_focusing_coeff() * lambda.powf(a - 2.0) * i.lp1
    }

    /// `d/dλ|_{λ=1} K(T_λ u)`.
    pub fn k_scaling_derivative(&self) -> f64 {
        let i = &self.integrals;
        let a = self.params.focusing_scaling_degree();
        2.0 * i.grad + 2.0 * self.params.k_mass_critical_coeff() * i.lmc
            - a * self.params.k_focusing_coeff() * i.lp1
    }
}

const LAMBDA_BRACKET: (f64, f64) = (1e-3, 1e3);
const LAMBDA_LIMITS: (f64, f64) = (1e-150, 1e150);

/// The unique λ₀ > 0 with `K(T_λ₀ u) = 0`; K(T_λ u) is positive below and
/// negative above it.
pub fn find_lambda_zero(u: &Field, params: &Params) -> Result<f64> {
    if u.is_zero() {
        return Err(NlsError::ZeroField);
    }
    let curve = ScalingCurve::from_field(u, params)?;
    lambda_zero_of_curve(&curve)
}

pub fn lambda_zero_of_curve(curve: &ScalingCurve) -> Result<f64> {
    if curve.integrals.lp1 <= 0.0 {
        return Err(NlsError::ZeroField);
    }
    let g = |l: f64| curve.reduced_k(l);
    let (mut lo, mut hi) = LAMBDA_BRACKET;
    while g(lo) <= 0.0 {
        lo /= 10.0;
        if lo < LAMBDA_LIMITS.0 {
            return Err(NlsError::ScalingRange);
        }
    }
    while g(hi) >= 0.0 {
        hi *= 10.0;
        if hi > LAMBDA_LIMITS.1 {
            return Err(NlsError::ScalingRange);
        }
    }
    // bisect in log λ down to adjacent doubles
    for _ in 0..400 {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * lo {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `T_λ u` (mass-invariant) or `T̃_λ u` (energy-invariant), resampled on the
/// same grid.
pub fn rescale(u: &Field, lambda: f64, mode: ScalingMode) -> Result<Field> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(NlsError::Argument(format!("scaling factor must be > 0, got {lambda}")));
    }
    if lambda == 1.0 {
        return Ok(u.clone());
    }
    let d = u.grid().d();
    let amp = lambda.powf(mode.amplitude_power(d));
    let values = match u.grid() {
        Grid::Cartesian(g) => {
            if lambda < 1.0 {
                check_overflow(u, lambda * g.half_length(), |i| {
                    let x = g.point(i);
                    x[..d].iter().fold(0.0f64, |m, v| m.max(v.abs()))
                })?;
            }
            let l = g.half_length();
            let targets: Vec<f64> = (0..g.n()).map(|j| lambda * g.coord(j)).collect();
            let mut w = interp::trig_weights(g, &targets);
            for (j, t) in targets.iter().enumerate() {
                if *t < -l || *t >= l {
                    w[j * g.n()..(j + 1) * g.n()].iter_mut().for_each(|x| *x = 0.0);
                }
            }
            interp::apply_along_axes(g, u.values(), &w)
        }
        Grid::Radial(g) => {
            if lambda < 1.0 {
                check_overflow(u, lambda * g.r_max(), |i| g.nodes()[i])?;
            }
            g.nodes()
                .iter()
                .map(|&r| interp::radial_interpolate(g, u.values(), lambda * r))
                .collect()
        }
    };
    let mut out = Field::new(u.grid_handle(), values, format!("rescaled({lambda})"))?;
    exec::for_each_mut(out.values_mut(), |_, v| *v *= amp);
    Ok(out)
}

/// Mass fraction allowed outside the region that survives a dilation.
const OVERFLOW_TOLERANCE: f64 = 1e-10;

fn check_overflow<F>(u: &Field, keep_radius: f64, extent: F) -> Result<()>
where
    F: Fn(usize) -> f64 + Sync,
{
    let v = u.values();
    let w: Vec<f64> = match u.grid() {
        Grid::Cartesian(_) => vec![1.0; v.len()],
        Grid::Radial(g) => g.weights().to_vec(),
    };
    let [outside, total] = exec::sum_n::<2, _>(v.len(), |i| {
        let m = w[i] * v[i].norm_sqr();
        [if extent(i) >= keep_radius { m } else { 0.0 }, m]
    });
    let frac = if total > 0.0 { outside / total } else { 0.0 };
    if frac > OVERFLOW_TOLERANCE {
        Err(NlsError::SupportOverflow(frac))
    } else {
        Ok(())
    }
}

/// Residuals of the scaling identities for a single field.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ScalingIdentityReport {
    /// `|2S - K - ωM - ((d(p-1)-4)/(2(p+1)))‖u‖_{p+1}^{p+1}|`
    pub first_identity_residual: f64,
    /// `|L(2-L)S - (d(p-1)(d(p-1)-4)/(4(p+1)))‖u‖_{p+1}^{p+1}|`
    pub second_identity_residual: f64,
    /// Central difference of `S(T_λ u)` at λ = 1 on resampled fields.
    pub fd_derivative: f64,
    pub k: f64,
    /// `|fd - K| / (|K^Q| + |K^N|)`
    pub fd_relative_error: f64,
}

/// Step for central differences in λ.
pub const FD_STEP: f64 = 1e-4;

pub fn scaling_identities_check(u: &Field, params: &Params) -> Result<ScalingIdentityReport> {
    let b = evaluate(u, params)?;
    if u.is_zero() {
        return Ok(ScalingIdentityReport::default());
    }
    let d = params.d() as f64;
    let p = params.p();
    let omega = params.omega();
    let c1 = (d * (p - 1.0) - 4.0) / (2.0 * (p + 1.0));
    let first = (2.0 * b.s_omega - b.k - omega * b.mass - c1 * b.lp1).abs();

    let curve = ScalingCurve::from_field(u, params)?;
    let l_two_minus_l = 2.0 * b.k - curve.k_scaling_derivative();
    let c2 = d * (p - 1.0) * (d * (p - 1.0) - 4.0) / (4.0 * (p + 1.0));
    let second = (l_two_minus_l - c2 * b.lp1).abs();

    let plus = evaluate(&rescale(u, 1.0 + FD_STEP, ScalingMode::MassInvariant)?, params)?;
    let minus = evaluate(&rescale(u, 1.0 - FD_STEP, ScalingMode::MassInvariant)?, params)?;
    let fd = (plus.s_omega - minus.s_omega) / (2.0 * FD_STEP);
    let scale = b.k_scale();
    Ok(ScalingIdentityReport {
        first_identity_residual: first,
        second_identity_residual: second,
        fd_derivative: fd,
        k: b.k,
        fd_relative_error: if scale > 0.0 { (fd - b.k).abs() / scale } else { 0.0 },
    })
}

/// `e^{iθ} u`.
pub fn with_phase(u: &Field, theta: f64) -> Field {
    u.scaled(Complex64::from_polar(1.0, theta))
}
