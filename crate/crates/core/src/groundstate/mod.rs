//! Radial ground states, the Aubin–Talenti function, the threshold `m_ω`
//! and membership of initial data in `A_{ω,±}`.

mod io;
mod ode;
mod talenti;

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{NlsError, Result};
use crate::field::Field;
use crate::functionals::{self, FunctionalBundle};
use crate::grid::{Grid, RadialGrid};
use crate::interp::radial_interpolate;
use crate::params::{Params, Regime};
use crate::quadrature::radial_laplacian;
use crate::special::bessel_k_scaled;

pub use io::{read_profile, write_profile, ProfileFile};
pub use ode::{Dopri5, Rhs, StepError};
pub use talenti::{
    aubin_talenti_value, default_grid as default_aubin_talenti_grid, explicit_aubin_talenti,
    AubinTalenti, DEFAULT_W_EXTENT, TRUNCATION_RADIUS,
};

/// Nodes per core length `(ω + Q(0)^{p-1})^{-1/2}` on the default grid.
pub const NODES_PER_CORE: f64 = 150.0;
/// Default `r_max` times `√ω`.
pub const DEFAULT_EXTENT: f64 = 40.0;
const MAX_DEFAULT_NODES: usize = 400_001;

/// A positive radial solution of the stationary equation.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub params: Params,
    pub profile: Field,
    pub omega: f64,
    pub residual_sup: f64,
    pub k_of_q: f64,
    pub m_omega: f64,
    pub q0: f64,
    pub decay_rate: f64,
    /// Final shooting bracket width on `Q(0)`.
    pub bracket_width: f64,
    /// Radius beyond which the profile is the linear tail.
    pub matching_radius: f64,
    pub bundle: FunctionalBundle,
}

impl GroundState {
    pub fn grid(&self) -> &RadialGrid {
        self.profile.grid().as_radial().expect("radial profile")
    }

    /// Values of `Q` as reals.
    pub fn values(&self) -> Vec<f64> {
        self.profile.values().iter().map(|z| z.re).collect()
    }

    /// `Q` sampled on another grid of the same dimension.
    pub fn sample_on(&self, target: Arc<Grid>) -> Result<Field> {
        radial_to_grid(&self.profile, target)
    }
}

/// Radial grid resolving the core of `Q`: a coarse shot fixes `Q(0)`, which
/// sets the spacing.
pub fn default_radial_grid(params: &Params) -> Result<RadialGrid> {
    let s = params.omega().sqrt();
    let r_max = DEFAULT_EXTENT / s;
    let coarse = RadialGrid::with_spacing(params.d(), 0.02 / s, r_max)?;
    let q0 = shoot_amplitude(params, &coarse)?.0;
    let core = (params.omega() + q0.powf(params.p() - 1.0)).sqrt().recip();
    let h = (core / NODES_PER_CORE).max(r_max / (MAX_DEFAULT_NODES - 1) as f64);
    RadialGrid::with_spacing(params.d(), h, r_max)
}

/// Sample a radial profile on any grid of the same dimension.
pub fn radial_to_grid(profile: &Field, target: Arc<Grid>) -> Result<Field> {
    let g = profile
        .grid()
        .as_radial()
        .ok_or_else(|| NlsError::Argument("profile must live on a radial grid".into()))?;
    if g.d() != target.d() {
        return Err(NlsError::GridMismatch(format!(
            "profile dimension {} vs target {}",
            g.d(),
            target.d()
        )));
    }
    let vals: Vec<Complex64> = (0..target.len())
        .map(|i| radial_interpolate(g, profile.values(), target.radius(i)))
        .collect();
    Field::new(target, vals, profile.tag())
}

/// Nonlinearity `g(Q) = ωQ - |Q|^{p-1}Q + |Q|^{4/d}Q`, so that `ΔQ = g(Q)`.
fn nonlinearity(params: &Params, q: f64) -> f64 {
    let a = q.abs();
    let d = params.d() as f64;
    q * (params.omega() - a.powf(params.p() - 1.0) + a.powf(4.0 / d))
}

fn nonlinearity_derivative(params: &Params, q: f64) -> f64 {
    let a = q.abs();
    let d = params.d() as f64;
    params.omega() - params.p() * a.powf(params.p() - 1.0) + (1.0 + 4.0 / d) * a.powf(4.0 / d)
}

/// Root of `ω - Q^{p-1} + Q^{4/d}`: the amplitude above which `g < 0`.
fn turning_amplitude(params: &Params) -> f64 {
    let d = params.d() as f64;
    let h = |x: f64| params.omega() - x.powf(params.p() - 1.0) + x.powf(4.0 / d);
    let mut hi = 1.0;
    while h(hi) > 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    Overshoot,
    Undershoot,
}

struct Trial {
    kind: Shot,
    /// Values at grid nodes up to the node where the shot was classified.
    q: Vec<f64>,
}

fn shoot(params: &Params, grid: &RadialGrid, q0: f64) -> Result<Trial> {
    let d = params.d();
    let d1 = d as f64 - 1.0;
    let h = grid.spacing();
    let rhs = |r: f64, y: &[f64; 2]| [y[1], nonlinearity(params, y[0]) - d1 / r * y[1]];
    // Q = Q0 + a r² + b r⁴ + O(r⁶) near the origin
    let df = d as f64;
    let a = nonlinearity(params, q0) / (2.0 * df);
    let b = nonlinearity_derivative(params, q0) * a / (4.0 * (df + 2.0));
    let rs = (1e-4f64).min(0.1 * h);
    let r2 = rs * rs;
    let mut y = [q0 + r2 * (a + b * r2), rs * (2.0 * a + 4.0 * b * r2)];
    let mut q = Vec::with_capacity(grid.len());
    q.push(q0);
    let mut solver = Dopri5::new(1e-13, 1e-300, 0.1 * h);
    let mut from = rs;
    for &r in &grid.nodes()[1..] {
        solver
            .integrate(&rhs, from, r, &mut y)
            .map_err(|e| NlsError::Shooting(format!("integration failed: {e:?}")))?;
        from = r;
        q.push(y[0]);
        if y[0] < 0.0 {
            return Ok(Trial {
                kind: Shot::Overshoot,
                q,
            });
        }
        if y[1] > 0.0 {
            return Ok(Trial {
                kind: Shot::Undershoot,
                q,
            });
        }
    }
    Ok(Trial {
        kind: Shot::Undershoot,
        q,
    })
}

/// `r^{-ν} K_ν(√ω r)` with `ν = (d-2)/2`, as `(e^{√ω r} T, T'/T)`.
fn linear_tail(d: usize, omega: f64, r: f64) -> (f64, f64) {
    let nu = 0.5 * (d as f64 - 2.0);
    let s = omega.sqrt();
    let z = s * r;
    let k = bessel_k_scaled(nu, z);
    // K_ν' = -(K_{ν-1} + K_{ν+1}) / 2
    let dk = -0.5 * (bessel_k_scaled(nu - 1.0, z) + bessel_k_scaled(nu + 1.0, z));
    (r.powf(-nu) * k, -nu / r + s * dk / k)
}

/// Integrate the full equation inward from `r_max` along the decaying
/// branch, down to node `ic`, with amplitude tuned so that `Q(r_ic) = qc`.
fn inward_tail(params: &Params, grid: &RadialGrid, ic: usize, qc: f64) -> Result<Vec<f64>> {
    let nodes = grid.nodes();
    let n = nodes.len();
    let d1 = params.d() as f64 - 1.0;
    let s = params.omega().sqrt();
    let (tm, lm) = linear_tail(params.d(), params.omega(), nodes[n - 1]);
    let (tc, _) = linear_tail(params.d(), params.omega(), nodes[ic]);
    // in the variable ρ = -r the integration runs forward
    let rhs = |rho: f64, y: &[f64; 2]| {
        let r = -rho;
        [-y[1], -(nonlinearity(params, y[0]) - d1 / r * y[1])]
    };
    let run = |amp: f64| -> Result<Vec<f64>> {
        let mut y = [amp, amp * lm];
        let mut out = vec![0.0; n - ic];
        out[n - 1 - ic] = amp;
        let mut solver = Dopri5::new(1e-13, 1e-300, 0.1 * grid.spacing());
        for i in (ic..n - 1).rev() {
            solver
                .integrate(&rhs, -nodes[i + 1], -nodes[i], &mut y)
                .map_err(|e| NlsError::Shooting(format!("tail integration failed: {e:?}")))?;
            out[i - ic] = y[0];
        }
        Ok(out)
    };
    // the linear tail fixes the amplitude up to the tiny nonlinear correction
    let mut amp = qc * tm / tc * (-s * (nodes[n - 1] - nodes[ic])).exp();
    let mut tail = run(amp)?;
    for _ in 0..6 {
        let ratio = qc / tail[0];
        if (ratio - 1.0).abs() < 1e-15 {
            break;
        }
        amp *= ratio;
        tail = run(amp)?;
    }
    Ok(tail)
}

/// `Q(0)` of the ground state and the final bracket width.
pub fn shoot_amplitude(params: &Params, grid: &RadialGrid) -> Result<(f64, f64)> {
    let (lo, hi, _, _) = bisect_amplitude(params, grid)?;
    Ok((lo, hi - lo))
}

fn bisect_amplitude(params: &Params, grid: &RadialGrid) -> Result<(f64, f64, Trial, Trial)> {
    let mut lo = turning_amplitude(params) * (1.0 + 1e-3);
    let mut lo_trial = shoot(params, grid, lo)?;
    if lo_trial.kind != Shot::Undershoot {
        return Err(NlsError::Shooting(format!("Q(0) = {lo} does not undershoot")));
    }
    let mut hi = 2.0 * lo;
    let mut hi_trial = shoot(params, grid, hi)?;
    let mut doublings = 0;
    while hi_trial.kind != Shot::Overshoot {
        doublings += 1;
        if doublings > 60 {
            return Err(NlsError::Shooting("no overshooting Q(0) found".into()));
        }
        lo = hi;
        lo_trial = hi_trial;
        hi *= 2.0;
        hi_trial = shoot(params, grid, hi)?;
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let t = shoot(params, grid, mid)?;
        match t.kind {
            Shot::Undershoot => {
                lo = mid;
                lo_trial = t;
            }
            Shot::Overshoot => {
                hi = mid;
                hi_trial = t;
            }
        }
    }
    Ok((lo, hi, lo_trial, hi_trial))
}

/// Pointwise `ΔQ - ωQ + Q^p - Q^{1+4/d}` with sixth-order central differences
/// (even reflection at the origin, fourth-order one-sided near `r_max`).
pub fn ode_residual(params: &Params, grid: &RadialGrid, q: &[f64]) -> Vec<f64> {
    let n = q.len();
    let h = grid.spacing();
    let d = params.d() as f64;
    let at = |j: isize| q[j.unsigned_abs()];
    let qc: Vec<Complex64> = q.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let edge = radial_laplacian(grid, &qc);
    grid.nodes()
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let lap = if i + 3 >= n {
                edge[i].re
            } else {
                let i = i as isize;
                let d2 = (2.0 * (at(i - 3) + at(i + 3)) - 27.0 * (at(i - 2) + at(i + 2))
                    + 270.0 * (at(i - 1) + at(i + 1))
                    - 490.0 * at(i))
                    / (180.0 * h * h);
                if r == 0.0 {
                    d * d2
                } else {
                    let d1 = (at(i + 3) - at(i - 3) - 9.0 * (at(i + 2) - at(i - 2))
                        + 45.0 * (at(i + 1) - at(i - 1)))
                        / (60.0 * h);
                    d2 + (d - 1.0) * d1 / r
                }
            };
            lap - nonlinearity(params, q[i])
        })
        .collect()
}

/// Solve the radial ground-state equation by shooting on `Q(0)`.
pub fn solve_ground_state(params: &Params, grid: &RadialGrid) -> Result<GroundState> {
    if params.regime() == Regime::EnergyCritical {
        return Err(NlsError::Params(
            "energy-critical case has no ground state with ω > 0; use the Aubin–Talenti function"
                .into(),
        ));
    }
    if grid.d() != params.d() {
        return Err(NlsError::GridMismatch(format!(
            "grid dimension {} vs params {}",
            grid.d(),
            params.d()
        )));
    }
    let (lo, hi, lo_trial, hi_trial) = bisect_amplitude(params, grid)?;
    log::debug!("shooting bracket [{lo:.17e}, {hi:.17e}]");

    let common = lo_trial.q.len().min(hi_trial.q.len());
    let mut ic = 0;
    for i in 0..common {
        let (a, b) = (lo_trial.q[i], hi_trial.q[i]);
        if a <= 0.0 || (a - b).abs() > 1e-9 * a {
            break;
        }
        ic = i;
    }
    if ic < 8 {
        return Err(NlsError::Shooting("shots separate immediately".into()));
    }
    let nodes = grid.nodes();
    let rc = nodes[ic];
    let mut q: Vec<f64> = lo_trial.q[..=ic].to_vec();
    q.extend_from_slice(&inward_tail(params, grid, ic, q[ic])?[1..]);
    if q.windows(2).any(|w| !(w[1] < w[0])) || q.iter().any(|&x| !(x > 0.0)) {
        return Err(NlsError::Shooting(
            "candidate is not positive and strictly decreasing".into(),
        ));
    }

    let residual_sup = ode_residual(params, grid, &q)
        .into_iter()
        .fold(0.0f64, |m, x| m.max(x.abs()));
    let decay_rate = fit_decay_rate(params.d(), nodes, &q, ic);
    let grid_arc = Arc::new(Grid::Radial(grid.clone()));
    let profile = Field::new(
        grid_arc,
        q.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        "Q",
    )?;
    let bundle = functionals::evaluate(&profile, params)?;
    Ok(GroundState {
        params: *params,
        omega: params.omega(),
        residual_sup,
        k_of_q: bundle.k,
        m_omega: bundle.s_omega,
        q0: q[0],
        decay_rate,
        bracket_width: hi - lo,
        matching_radius: rc,
        bundle,
        profile,
    })
}

/// Slope of `-log(Q r^{(d-1)/2})` over the last decade of the shot profile.
fn fit_decay_rate(d: usize, r: &[f64], q: &[f64], end: usize) -> f64 {
    let target = q[end] * 10.0;
    let mut start = end;
    while start > 0 && q[start] < target {
        start -= 1;
    }
    let half = 0.5 * (d as f64 - 1.0);
    let pts: Vec<(f64, f64)> = (start..=end)
        .map(|i| (r[i], (q[i] * r[i].powf(half)).ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    -sxy / sxx
}

/// `m_ω`: `S_ω(Q)` below the energy-critical exponent, `E⁰(W)` at it.
pub fn threshold(params: &Params) -> Result<f64> {
    match params.regime() {
        Regime::Subcritical => {
            let grid = default_radial_grid(params)?;
            Ok(solve_ground_state(params, &grid)?.m_omega)
        }
        Regime::EnergyCritical => {
            let grid = talenti::default_grid(params.d())?;
            Ok(explicit_aubin_talenti(params.d(), &grid)?.e0_of_w)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MembershipSet {
    APlus,
    AMinus,
    AboveThreshold,
}

/// Which side of the threshold the data sit on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub s_omega_value: f64,
    pub m_omega: f64,
    pub k_value: f64,
    pub set: MembershipSet,
    /// `m_ω - S_ω(u₀)`
    pub margin: f64,
}

impl Membership {
    pub fn from_values(s_omega: f64, k: f64, m_omega: f64) -> Self {
        let margin = m_omega - s_omega;
        let set = if margin <= 0.0 {
            MembershipSet::AboveThreshold
        } else if k >= 0.0 {
            MembershipSet::APlus
        } else {
            MembershipSet::AMinus
        };
        Self {
            s_omega_value: s_omega,
            m_omega,
            k_value: k,
            set,
            margin,
        }
    }
}

/// Membership of `u0` given a precomputed threshold.
pub fn classify_data(u0: &Field, params: &Params, m_omega: f64) -> Result<Membership> {
    let b = functionals::evaluate(u0, params)?;
    Ok(Membership::from_values(b.s_omega, b.k, m_omega))
}
