//! Strang split-step Fourier integration with adaptive steps.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{derivatives_from_spectrum, virial_sample, CutoffWeight, VirialSample};
use crate::error::{NlsError, Result};
use crate::exec;
use crate::field::Field;
use crate::functionals::FunctionalBundle;
use crate::grid::{CartesianGrid, Grid};
use crate::params::Params;
use crate::quadrature::{pow_from_sq, Integrals};
use crate::spectral;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdaptRule {
    Fixed,
    /// `dt = min(dt0, c / ‖∇u‖²)` with `c = dt0 ‖∇u0‖²`
    GradientNorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupRule {
    /// Gradient growth or step floor, whichever comes first.
    Either,
    /// Gradient growth and step floor together.
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveControls {
    pub dt0: f64,
    pub t_end: f64,
    pub dt_floor: f64,
    pub blowup_gradient_factor: f64,
    pub adapt: AdaptRule,
    pub blowup_rule: BlowupRule,
    pub snapshot_stride: usize,
    pub drift_budget: f64,
    /// Apply the 2/3-rule filter after every step.
    pub dealias: bool,
}

impl Default for EvolveControls {
    fn default() -> Self {
        Self {
            dt0: 1e-3,
            t_end: 1.0,
            dt_floor: 1e-7,
            blowup_gradient_factor: 1e4,
            adapt: AdaptRule::GradientNorm,
            blowup_rule: BlowupRule::Either,
            snapshot_stride: 10,
            drift_budget: 1e-6,
            dealias: false,
        }
    }
}

impl EvolveControls {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(NlsError::Argument(m));
        if !(self.dt_floor > 0.0 && self.dt0 > self.dt_floor && self.dt0.is_finite()) {
            return bad(format!(
                "need dt0 > dt_floor > 0, got dt0 = {}, dt_floor = {}",
                self.dt0, self.dt_floor
            ));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.blowup_gradient_factor > 1.0) {
            return bad(format!(
                "blowup_gradient_factor must exceed 1, got {}",
                self.blowup_gradient_factor
            ));
        }
        if self.snapshot_stride == 0 {
            return bad("snapshot_stride must be at least 1".into());
        }
        if !(self.drift_budget > 0.0) {
            return bad(format!("drift_budget must be positive, got {}", self.drift_budget));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    BlowupTerminated,
    StepFloorHit,
    DriftExceeded,
}

/// Everything measured at one time level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    /// Step that led here; 0 at the initial time.
    pub dt: f64,
    pub bundle: FunctionalBundle,
    pub grad_norm_sq: f64,
    /// `Im ∫ ū ∇u`
    pub momentum: [f64; 3],
    /// `∫|u|^{(d+2)(p-1)/2}`
    pub l_strichartz: f64,
    /// Running trapezoid integrals of `∫|u|^{2(d+2)/d}` and `∫|u|^{(d+2)(p-1)/2}` in time.
    pub spacetime: [f64; 2],
    pub virial: Option<VirialSample>,
    pub max_abs: f64,
    pub boundary_amplitude: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: Params,
    pub controls: EvolveControls,
    pub times: Vec<f64>,
    pub series: Vec<StepRecord>,
    pub snapshot_times: Vec<f64>,
    pub snapshots: Vec<Field>,
    pub status: RunStatus,
    /// Final values of the two accumulated spacetime integrals.
    pub spacetime_k_norm: [f64; 2],
    /// Weight used for the recorded virial values, if any.
    pub virial_weight: Option<Arc<CutoffWeight>>,
}

impl Trajectory {
    pub fn initial(&self) -> &StepRecord {
        &self.series[0]
    }

    pub fn last(&self) -> &StepRecord {
        self.series.last().expect("trajectory has an initial record")
    }

    pub fn final_field(&self) -> &Field {
        self.snapshots.last().expect("trajectory keeps its final state")
    }
}

/// Strang stepper bound to one grid and one nonlinearity.
#[derive(Debug, Clone)]
pub struct Propagator {
    grid: CartesianGrid,
    params: Params,
    k2: Vec<f64>,
}

impl Propagator {
    pub fn new(grid: &Grid, params: &Params) -> Result<Self> {
        let g = grid
            .as_cartesian()
            .ok_or_else(|| NlsError::GridMismatch("evolution requires a cartesian grid".into()))?;
        if g.d() != params.d() {
            return Err(NlsError::GridMismatch(format!(
                "grid dimension {} vs params {}",
                g.d(),
                params.d()
            )));
        }
        let k2 = (0..g.len()).map(|i| g.k_squared(i)).collect();
        Ok(Self {
            grid: g.clone(),
            params: *params,
            k2,
        })
    }

    /// Exact flow of `i u_t = (|u|^{4/d} - |u|^{p-1}) u` for time `tau` (any sign).
    pub fn nonlinear(&self, u: &mut [Complex64], tau: f64) {
        let p = self.params.p();
        let qmc = 4.0 / self.params.d() as f64;
        exec::for_each_mut(u, |_, z| {
            let a2 = z.norm_sqr();
            if a2 > 0.0 {
                let phase = -tau * (pow_from_sq(a2, qmc) - pow_from_sq(a2, p - 1.0));
                *z *= Complex64::from_polar(1.0, phase);
            }
        });
    }

    /// Exact free flow `e^{iτΔ}` (any sign of τ).
    pub fn linear(&self, u: &mut [Complex64], tau: f64) {
        spectral::fft_nd(&self.grid, u, false);
        let scale = 1.0 / self.grid.len() as f64;
        let k2 = &self.k2;
        exec::for_each_mut(u, |i, c| *c *= Complex64::from_polar(scale, -tau * k2[i]));
        spectral::fft_nd(&self.grid, u, true);
    }

    /// `N(dt/2) L(dt) N(dt/2)`; negative `dt` runs the scheme backward exactly.
    pub fn step(&self, u: &mut [Complex64], dt: f64) {
        self.nonlinear(u, 0.5 * dt);
        self.linear(u, dt);
        self.nonlinear(u, 0.5 * dt);
    }
}

/// One Strang step of `u`.
pub fn strang_step(u: &Field, dt: f64, params: &Params) -> Result<Field> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(NlsError::Argument(format!("dt must be positive, got {dt}")));
    }
    let prop = Propagator::new(u.grid(), params)?;
    let mut v = u.values().to_vec();
    prop.step(&mut v, dt);
    let out = Field::from_parts(u.grid_handle(), v, u.tag());
    out.ensure_finite()?;
    Ok(out)
}

/// Functionals, momentum and Strichartz-type integrals of one state,
/// sharing a single forward transform.
pub fn measure(
    u: &Field,
    params: &Params,
    weight: Option<&CutoffWeight>,
) -> Result<StepRecord> {
    let g = u
        .grid()
        .as_cartesian()
        .ok_or_else(|| NlsError::GridMismatch("evolution requires a cartesian grid".into()))?;
    let v = u.values();
    let d = params.d() as f64;
    let p = params.p();
    let qmc = 2.0 * (d + 2.0) / d;
    let qs = (d + 2.0) * (p - 1.0) / 2.0;
    let dv = g.cell_volume();
    let [mass, lp1, lmc, ls] = exec::sum_n::<4, _>(v.len(), |i| {
        let a2 = v[i].norm_sqr();
        [a2, pow_from_sq(a2, p + 1.0), pow_from_sq(a2, qmc), pow_from_sq(a2, qs)]
    });
    let mut spec = v.to_vec();
    spectral::fft_nd(g, &mut spec, false);
    let n = g.len() as f64;
    let vol = g.box_volume();
    let [grad, p0, p1, p2] = exec::sum_n::<4, _>(spec.len(), |i| {
        let e = spec[i].norm_sqr();
        let k = g.odd_wavevector(i);
        [g.k_squared(i) * e, k[0] * e, k[1] * e, k[2] * e]
    });
    let norm = vol / (n * n);
    let integrals = Integrals {
        mass: mass * dv,
        grad: grad * norm,
        lp1: lp1 * dv,
        lmc: lmc * dv,
    };
    if ![integrals.mass, integrals.grad, integrals.lp1, integrals.lmc]
        .iter()
        .all(|x| x.is_finite())
    {
        return Err(NlsError::NonFinite);
    }
    let bundle = FunctionalBundle::from_integrals(&integrals, params);
    let virial = match weight {
        Some(w) => Some(virial_sample(u, &derivatives_from_spectrum(g, &spec), w, params)?),
        None => None,
    };
    let rec = StepRecord {
        t: 0.0,
        dt: 0.0,
        bundle,
        grad_norm_sq: integrals.grad,
        momentum: [p0 * norm, p1 * norm, p2 * norm],
        l_strichartz: ls * dv,
        spacetime: [0.0, 0.0],
        virial,
        max_abs: u.max_abs(),
        boundary_amplitude: u.boundary_amplitude(),
    };
    Ok(rec)
}

/// Time integrator with optional virial recording and a per-step sink.
pub struct Evolver<'a> {
    params: Params,
    controls: EvolveControls,
    weight: Option<Arc<CutoffWeight>>,
    sink: Option<Box<dyn FnMut(&StepRecord) + 'a>>,
}

impl<'a> Evolver<'a> {
    pub fn new(params: &Params, controls: &EvolveControls) -> Self {
        Self {
            params: *params,
            controls: controls.clone(),
            weight: None,
            sink: None,
        }
    }

    pub fn with_virial(mut self, weight: Arc<CutoffWeight>) -> Self {
        self.weight = Some(weight);
        self
    }

    pub fn with_sink(mut self, sink: impl FnMut(&StepRecord) + 'a) -> Self {
        self.sink = Some(Box::new(sink));
        self
    }

    pub fn run(mut self, u0: &Field) -> Result<Trajectory> {
        self.controls.validate()?;
        u0.ensure_finite()?;
        let c = &self.controls;
        let prop = Propagator::new(u0.grid(), &self.params)?;
        let weight = self.weight.clone();
        let mut u = u0.clone();
        let mut rec = measure(&u, &self.params, weight.as_deref())?;
        let g0 = rec.grad_norm_sq;
        let budget_c = c.dt0 * g0;
        let mut series = vec![rec];
        let mut snapshots = vec![u.clone()];
        let mut snapshot_times = vec![0.0];
        if let Some(s) = self.sink.as_mut() {
            s(&rec);
        }
        let mut t = 0.0;
        let mut steps = 0usize;
        let mut status = RunStatus::Completed;
        while t < c.t_end {
            let g = rec.grad_norm_sq;
            let mut dt = match c.adapt {
                AdaptRule::GradientNorm if g > 0.0 && g0 > 0.0 => c.dt0.min(budget_c / g),
                _ => c.dt0,
            };
            let at_floor = dt < c.dt_floor;
            let grown = g0 > 0.0 && g > c.blowup_gradient_factor * g0;
            let stop = match c.blowup_rule {
                BlowupRule::Either => grown || at_floor,
                BlowupRule::Both => grown && at_floor,
            };
            if stop {
                status = if grown {
                    RunStatus::BlowupTerminated
                } else {
                    RunStatus::StepFloorHit
                };
                break;
            }
            if at_floor {
                // AND rule with only one condition met: keep going at the floor
                dt = c.dt_floor;
            }
            // absorb a rounding-sized remainder into this step
            let last = t + dt >= c.t_end - 1e-9 * dt;
            if last {
                dt = c.t_end - t;
            }
            let vals = u.values_mut();
            prop.step(vals, dt);
            if c.dealias {
                spectral::dealias_two_thirds(&mut u)?;
            }
            t = if last { c.t_end } else { t + dt };
            steps += 1;
            if !u.is_finite() {
                log::warn!("non-finite field at t = {t}");
                status = RunStatus::BlowupTerminated;
                break;
            }
            let prev = rec;
            rec = match measure(&u, &self.params, weight.as_deref()) {
                Ok(r) => r,
                Err(NlsError::NonFinite) => {
                    status = RunStatus::BlowupTerminated;
                    break;
                }
                Err(e) => return Err(e),
            };
            rec.t = t;
            rec.dt = dt;
            rec.spacetime = [
                prev.spacetime[0] + 0.5 * dt * (prev.bundle.l_mass_crit + rec.bundle.l_mass_crit),
                prev.spacetime[1] + 0.5 * dt * (prev.l_strichartz + rec.l_strichartz),
            ];
            series.push(rec);
            if let Some(s) = self.sink.as_mut() {
                s(&rec);
            }
            if steps % c.snapshot_stride == 0 || last {
                snapshots.push(u.clone());
                snapshot_times.push(t);
            }
        }
        if *snapshot_times.last().unwrap() != rec.t {
            snapshots.push(u.clone());
            snapshot_times.push(rec.t);
        }
        if status == RunStatus::Completed {
            let r = drifts(&series);
            if r.mass > c.drift_budget || r.energy > c.drift_budget {
                status = RunStatus::DriftExceeded;
            }
        }
        log::info!("evolution finished: {status:?} at t = {} after {steps} steps", rec.t);
        Ok(Trajectory {
            params: self.params,
            controls: self.controls.clone(),
            times: series.iter().map(|r| r.t).collect(),
            spacetime_k_norm: rec.spacetime,
            series,
            snapshot_times,
            snapshots,
            status,
            virial_weight: weight,
        })
    }
}

/// Evolve without virial recording.
pub fn evolve(u0: &Field, params: &Params, controls: &EvolveControls) -> Result<Trajectory> {
    Evolver::new(params, controls).run(u0)
}

/// Maximum drifts of the conserved quantities along a run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ConservationReport {
    /// `max |M(t) - M(0)| / M(0)`
    pub mass: f64,
    /// relative to `|E(0)|`, or to the sum of the absolute energy terms when `E(0) = 0`
    pub energy: f64,
    pub s_omega: f64,
    /// `max |P(t) - P(0)|` normalized by `√(M(0)‖∇u(0)‖²)`
    pub momentum: f64,
    /// `max_t |P(t)|`
    pub momentum_max: f64,
}

fn rel(x: f64, x0: f64, fallback: f64) -> f64 {
    let s = if x0 != 0.0 { x0.abs() } else { fallback };
    if s > 0.0 {
        (x - x0).abs() / s
    } else {
        (x - x0).abs()
    }
}

fn drifts(series: &[StepRecord]) -> ConservationReport {
    let r0 = &series[0];
    let b0 = &r0.bundle;
    let p = |r: &StepRecord| (r.momentum.iter().map(|x| x * x).sum::<f64>()).sqrt();
    let e_scale = 0.5 * b0.k_quadratic + b0.lp1 + b0.l_mass_crit;
    let p_scale = (b0.mass * r0.grad_norm_sq).sqrt();
    let mut out = ConservationReport::default();
    for r in series {
        let b = &r.bundle;
        out.mass = out.mass.max(rel(b.mass, b0.mass, 0.0));
        out.energy = out.energy.max(rel(b.energy, b0.energy, e_scale));
        out.s_omega = out.s_omega.max(rel(b.s_omega, b0.s_omega, e_scale));
        let dp = (0..3)
            .map(|a| (r.momentum[a] - r0.momentum[a]).powi(2))
            .sum::<f64>()
            .sqrt();
        out.momentum = out.momentum.max(if p_scale > 0.0 { dp / p_scale } else { dp });
        out.momentum_max = out.momentum_max.max(p(r));
    }
    out
}

pub fn conservation_report(tr: &Trajectory) -> ConservationReport {
    drifts(&tr.series)
}

/// Amplitude reaching the edge of the box, where periodic wraparound starts.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundaryReport {
    /// `max_t |u|_boundary / max_t max|u|`
    pub ratio: f64,
    /// First time the ratio passes `limit`, if it does.
    pub first_exceeded: Option<f64>,
    pub limit: f64,
}

pub fn boundary_report(tr: &Trajectory, limit: f64) -> BoundaryReport {
    let peak = tr.series.iter().fold(0.0f64, |m, r| m.max(r.max_abs));
    let edge = tr.series.iter().fold(0.0f64, |m, r| m.max(r.boundary_amplitude));
    BoundaryReport {
        ratio: if peak > 0.0 { edge / peak } else { 0.0 },
        first_exceeded: tr
            .series
            .iter()
            .find(|r| r.boundary_amplitude > limit * peak)
            .map(|r| r.t),
        limit,
    }
}
