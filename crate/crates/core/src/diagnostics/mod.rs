//! Virial identities, radial Sobolev bounds, sign monitors along runs and the
//! Scatter/Blowup verdict.

mod cutoff;
mod poly;
mod virial;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{NlsError, Result};
use crate::evolution::{RunStatus, Trajectory};
use crate::field::Field;
use crate::grid::{unit_sphere_area, Grid};
use crate::groundstate::{Membership, MembershipSet};
use crate::params::Params;
use crate::quadrature::{abs_pow, radial_derivative};

pub use cutoff::{CutoffKind, CutoffProfile, CutoffWeight};
pub use poly::Poly;
pub(crate) use virial::derivatives_from_spectrum;
pub use virial::{
    field_derivatives, virial, virial_derivatives, virial_sample, FieldDerivatives, VirialSample,
};

/// Floor added to denominators of relative residuals.
pub const EPS_ABS: f64 = 1e-12;

/// Virial quantities along a run, with finite-difference derivatives of `V`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct VirialSeries {
    pub times: Vec<f64>,
    pub v: Vec<f64>,
    pub vp: Vec<f64>,
    pub vpp: Vec<f64>,
    /// Second difference of `V` (NaN at the two end points).
    pub vpp_fd: Vec<f64>,
    /// Central first difference of `V` (NaN at the two end points).
    pub vp_fd: Vec<f64>,
}

impl VirialSeries {
    pub fn from_samples(times: Vec<f64>, samples: &[VirialSample]) -> Self {
        let n = times.len();
        let v: Vec<f64> = samples.iter().map(|s| s.v).collect();
        let mut vpp_fd = vec![f64::NAN; n];
        let mut vp_fd = vec![f64::NAN; n];
        for i in 1..n.saturating_sub(1) {
            let h1 = times[i] - times[i - 1];
            let h2 = times[i + 1] - times[i];
            let d1 = (v[i] - v[i - 1]) / h1;
            let d2 = (v[i + 1] - v[i]) / h2;
            vpp_fd[i] = 2.0 * (d2 - d1) / (h1 + h2);
            // exact for quadratics on uneven spacing
            vp_fd[i] = (h1 * d2 + h2 * d1) / (h1 + h2);
        }
        Self {
            times,
            vp: samples.iter().map(|s| s.vp).collect(),
            vpp: samples.iter().map(|s| s.vpp).collect(),
            v,
            vpp_fd,
            vp_fd,
        }
    }
}

/// Virial series of a trajectory: the recorded per-step values when the run
/// carried the same weight, otherwise recomputed from snapshots.
pub fn virial_series(tr: &Trajectory, w: &CutoffWeight, params: &Params) -> Result<VirialSeries> {
    if let Some(rw) = &tr.virial_weight {
        if rw.kind == w.kind && rw.radius == w.radius && rw.len() == w.len() {
            let samples: Vec<VirialSample> = tr.series.iter().filter_map(|r| r.virial).collect();
            if samples.len() == tr.series.len() {
                return Ok(VirialSeries::from_samples(tr.times.clone(), &samples));
            }
        }
    }
    let samples = tr
        .snapshots
        .iter()
        .map(|u| {
            let der = field_derivatives(u)?;
            virial_sample(u, &der, w, params)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VirialSeries::from_samples(tr.snapshot_times.clone(), &samples))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VirialIdentityReport {
    /// `max |Vpp_fd - Vpp| / (|Vpp| + ε_abs)` over interior times
    pub second_derivative_residual: f64,
    /// `max |Vp_fd - Vp| / (|Vp| + ε_abs)` over interior times
    pub first_derivative_residual: f64,
    pub samples: usize,
}

pub fn virial_identity_check(
    tr: &Trajectory,
    w: &CutoffWeight,
    params: &Params,
) -> Result<VirialIdentityReport> {
    let s = virial_series(tr, w, params)?;
    identity_report(&s)
}

pub fn identity_report(s: &VirialSeries) -> Result<VirialIdentityReport> {
    let n = s.times.len();
    if n < 5 {
        return Err(NlsError::Argument(format!(
            "virial identity check needs at least 5 samples, got {n}"
        )));
    }
    let mut out = VirialIdentityReport {
        samples: n,
        ..Default::default()
    };
    for i in 1..n - 1 {
        out.second_derivative_residual = out
            .second_derivative_residual
            .max((s.vpp_fd[i] - s.vpp[i]).abs() / (s.vpp[i].abs() + EPS_ABS));
        out.first_derivative_residual = out
            .first_derivative_residual
            .max((s.vp_fd[i] - s.vp[i]).abs() / (s.vp[i].abs() + EPS_ABS));
    }
    Ok(out)
}

/// Implied constants of the exterior radial Sobolev bounds at one radius.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RadialSobolevReport {
    pub radius: f64,
    pub lhs_focusing: f64,
    pub rhs_focusing: f64,
    /// `lhs / rhs`, 0 when both vanish
    pub c_focusing: f64,
    pub lhs_mass_critical: f64,
    pub rhs_mass_critical: f64,
    pub c_mass_critical: f64,
    /// `(2/|S^{d-1}|)^{(q-1)/2}` from the Strauss bound, for each inequality
    pub strauss_bound_focusing: f64,
    pub strauss_bound_mass_critical: f64,
}

/// Check `∫_{|x|≥R}|u|^{q+1} ≤ C R^{-(d-1)(q-1)/2} ‖u‖^{(q+3)/2}_{L²(|x|≥R)} ‖∇u‖^{(q-1)/2}_{L²(|x|≥R)}`
/// for `q = p` and `q = 1 + 4/d`.
pub fn radial_sobolev_check(u: &Field, radius: f64, params: &Params) -> Result<RadialSobolevReport> {
    let g = match u.grid() {
        Grid::Radial(g) => g,
        Grid::Cartesian(_) => {
            return Err(NlsError::Argument("radial Sobolev check needs a radial field".into()))
        }
    };
    let d = g.d();
    if d < 2 {
        return Err(NlsError::UnsupportedDimension(d));
    }
    if !(radius > 0.0) {
        return Err(NlsError::Argument(format!("radius must be positive, got {radius}")));
    }
    let w = g.exterior_weights(g.index_at_or_above(radius));
    let v = u.values();
    let du = radial_derivative(g, v);
    let ext = |f: &dyn Fn(usize) -> f64| -> f64 { (0..v.len()).map(|i| w[i] * f(i)).sum() };
    let mass = ext(&|i| v[i].norm_sqr());
    let grad = ext(&|i| du[i].norm_sqr());
    let df = d as f64;
    let area = unit_sphere_area(d);
    let side = |q: f64| {
        let lhs = ext(&|i| abs_pow(v[i], q + 1.0));
        let rhs = radius.powf(-(df - 1.0) * (q - 1.0) / 2.0)
            * mass.powf((q + 3.0) / 4.0)
            * grad.powf((q - 1.0) / 4.0);
        let c = if lhs == 0.0 { 0.0 } else { lhs / rhs };
        (lhs, rhs, c, (2.0 / area).powf((q - 1.0) / 2.0))
    };
    let (lf, rf, cf, bf) = side(params.p());
    let (lm, rm, cm, bm) = side(1.0 + 4.0 / df);
    Ok(RadialSobolevReport {
        radius,
        lhs_focusing: lf,
        rhs_focusing: rf,
        c_focusing: cf,
        lhs_mass_critical: lm,
        rhs_mass_critical: rm,
        c_mass_critical: cm,
        strauss_bound_focusing: bf,
        strauss_bound_mass_critical: bm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Scatter,
    Blowup,
    Undecided,
}

/// Finite-horizon scattering proxy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScatterCriteria {
    /// Trailing fraction of the run examined.
    pub tail_fraction: f64,
    /// Largest share of each spacetime integral allowed in the tail.
    pub increment_share: f64,
    /// Largest allowed `‖u(T)‖_{p+1} / ‖u(0)‖_{p+1}`.
    pub amplitude_ratio: f64,
}

impl Default for ScatterCriteria {
    fn default() -> Self {
        Self {
            tail_fraction: 0.2,
            increment_share: 0.01,
            amplitude_ratio: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub membership: Membership,
    pub outcome: Outcome,
    pub evidence: BTreeMap<String, f64>,
    pub theory_consistent: bool,
}

pub fn classify_outcome(
    tr: &Trajectory,
    membership: &Membership,
    params: &Params,
    criteria: &ScatterCriteria,
) -> Verdict {
    let mut ev = BTreeMap::new();
    let first = tr.initial();
    let last = tr.last();
    let p = params.p();
    ev.insert("t_final".into(), last.t);
    ev.insert(
        "gradient_growth".into(),
        if first.grad_norm_sq > 0.0 {
            last.grad_norm_sq / first.grad_norm_sq
        } else {
            0.0
        },
    );
    let lp = |r: &crate::evolution::StepRecord| r.bundle.lp1.powf(1.0 / (p + 1.0));
    let amp_ratio = if lp(first) > 0.0 { lp(last) / lp(first) } else { 0.0 };
    ev.insert("lp1_ratio".into(), amp_ratio);
    let t_cut = (1.0 - criteria.tail_fraction) * last.t;
    let before = tr
        .series
        .iter()
        .take_while(|r| r.t <= t_cut)
        .last()
        .map(|r| r.spacetime)
        .unwrap_or([0.0, 0.0]);
    let mut shares = [0.0; 2];
    for k in 0..2 {
        let total = last.spacetime[k];
        shares[k] = if total > 0.0 {
            (total - before[k]) / total
        } else {
            0.0
        };
    }
    ev.insert("tail_share_mass_critical".into(), shares[0]);
    ev.insert("tail_share_strichartz".into(), shares[1]);
    ev.insert("spacetime_mass_critical".into(), last.spacetime[0]);
    ev.insert("spacetime_strichartz".into(), last.spacetime[1]);
    let outcome = match tr.status {
        RunStatus::BlowupTerminated => Outcome::Blowup,
        RunStatus::Completed
            if shares.iter().all(|&s| s < criteria.increment_share)
                && amp_ratio < criteria.amplitude_ratio =>
        {
            Outcome::Scatter
        }
        _ => Outcome::Undecided,
    };
    let theory_consistent = matches!(
        (membership.set, outcome),
        (MembershipSet::APlus, Outcome::Scatter) | (MembershipSet::AMinus, Outcome::Blowup)
    );
    Verdict {
        membership: *membership,
        outcome,
        evidence: ev,
        theory_consistent,
    }
}

/// Result of a pointwise-in-time sign check.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MonitorReport {
    pub checked: usize,
    pub violations: usize,
    /// Smallest slack over the run (negative when violated).
    pub min_slack: f64,
}

fn monitor<I: Iterator<Item = f64>>(slacks: I, strict: bool) -> MonitorReport {
    let mut r = MonitorReport {
        min_slack: f64::INFINITY,
        ..Default::default()
    };
    for s in slacks {
        r.checked += 1;
        let ok = if strict { s > 0.0 } else { s >= 0.0 };
        if !ok {
            r.violations += 1;
        }
        r.min_slack = r.min_slack.min(s);
    }
    r
}

/// Sign persistence of `K` along a run: `K ≥ 0` for `A_{ω,+}` data and
/// `K < 0` for `A_{ω,-}` data. Nothing is asserted above threshold.
pub fn k_sign_monitor(tr: &Trajectory, set: MembershipSet) -> MonitorReport {
    match set {
        MembershipSet::APlus => monitor(tr.series.iter().map(|r| r.bundle.k), false),
        MembershipSet::AMinus => monitor(tr.series.iter().map(|r| -r.bundle.k), true),
        MembershipSet::AboveThreshold => MonitorReport::default(),
    }
}

/// Along an `A_{ω,-}` run: `K(u(t)) < -(m_ω - S_ω(u(t)))` at every step.
pub fn negative_k_monitor(tr: &Trajectory, m_omega: f64) -> MonitorReport {
    monitor(
        tr.series
            .iter()
            .map(|r| -(m_omega - r.bundle.s_omega) - r.bundle.k),
        true,
    )
}

/// Lower bound `min{trap·(‖∇u‖² + (d/(d+2))‖u‖^{2(d+2)/d}), δ(m_ω - S_ω)}` for `K`.
pub fn trapping_lower_bound(
    params: &Params,
    m_omega: f64,
    delta: f64,
    b: &crate::functionals::FunctionalBundle,
) -> f64 {
    let a = params.trapping_factor() * (b.k_quadratic + params.k_mass_critical_coeff() * b.l_mass_crit);
    a.min(delta * (m_omega - b.s_omega))
}

/// Along an `A_{ω,+}` run: `K(u(t)) ≥` [`trapping_lower_bound`] at every step.
pub fn positive_k_monitor(tr: &Trajectory, params: &Params, m_omega: f64, delta: f64) -> MonitorReport {
    monitor(
        tr.series
            .iter()
            .map(|r| r.bundle.k - trapping_lower_bound(params, m_omega, delta, &r.bundle)),
        false,
    )
}

/// Largest `δ` for which the `A_{ω,+}` lower bound holds on every sample,
/// `+∞` if the first branch always suffices; `None` if no `δ > 0` works.
pub fn calibrate_trapping_delta<'b, I>(params: &Params, m_omega: f64, bundles: I) -> Option<f64>
where
    I: IntoIterator<Item = &'b crate::functionals::FunctionalBundle>,
{
    let mut delta = f64::INFINITY;
    for b in bundles {
        let a = params.trapping_factor() * (b.k_quadratic + params.k_mass_critical_coeff() * b.l_mass_crit);
        if b.k >= a {
            continue;
        }
        let gap = m_omega - b.s_omega;
        if b.k <= 0.0 || gap <= 0.0 {
            return None;
        }
        delta = delta.min(b.k / gap);
    }
    Some(delta)
}

/// `δ₁` with `S_ω(u₀) = (1 - δ₁) m_ω`.
pub fn delta_one(s_omega0: f64, m_omega: f64) -> f64 {
    1.0 - s_omega0 / m_omega
}

/// Longest run of consecutive samples with `V_R'' ≤ -4 δ₁ m_ω`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ConcavityWindow {
    pub bound: f64,
    pub longest: usize,
    pub start_time: f64,
    pub end_time: f64,
    pub satisfied: usize,
    pub samples: usize,
}

pub fn concavity_window(s: &VirialSeries, delta1: f64, m_omega: f64) -> ConcavityWindow {
    let bound = -4.0 * delta1 * m_omega;
    let mut out = ConcavityWindow {
        bound,
        samples: s.vpp.len(),
        ..Default::default()
    };
    let mut run = 0;
    for (i, &v) in s.vpp.iter().enumerate() {
        if v <= bound {
            out.satisfied += 1;
            run += 1;
            if run > out.longest {
                out.longest = run;
                out.start_time = s.times[i + 1 - run];
                out.end_time = s.times[i];
            }
        } else {
            run = 0;
        }
    }
    out
}
