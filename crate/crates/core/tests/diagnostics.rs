use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nls_core::diagnostics::*;
use nls_core::evolution::*;
use nls_core::functionals::{self, FunctionalBundle};
use nls_core::groundstate::{Membership, MembershipSet};
use nls_core::profiles::{random_bump, Profile};
use nls_core::quadrature::{gradient_norm_sq, quadrature_lq};
use nls_core::{CartesianGrid, Field, Grid, NlsError, Params, RadialGrid};

fn cart(d: usize, n: usize, l: f64) -> Arc<Grid> {
    Arc::new(CartesianGrid::new(d, n, l).unwrap().into())
}

fn radial(d: usize, n: usize, r_max: f64) -> Arc<Grid> {
    Arc::new(RadialGrid::new(d, n, r_max).unwrap().into())
}

fn weight(kind: CutoffKind, r: f64, g: &Grid) -> CutoffWeight {
    CutoffWeight::new(kind, r, g).unwrap()
}

#[test]
fn virial_of_zero_is_zero() {
    let g = cart(2, 32, 5.0);
    let w = weight(CutoffKind::Scattering, 2.0, &g);
    assert_eq!(virial(&Field::zeros(g), &w).unwrap(), 0.0);
}

#[test]
fn gaussian_second_moment() {
    // ∫ x² e^{-2x²} dx = ¼√(π/2)
    let g = cart(1, 256, 10.0);
    let u = Profile::gaussian(1.0, 1.0).sample(g.clone());
    for kind in [CutoffKind::Scattering, CutoffKind::Blowup] {
        let w = weight(kind, 5.0, &g);
        let v = virial(&u, &w).unwrap();
        assert!((v - 0.25 * (PI / 2.0).sqrt()).abs() < 1e-12, "{v}");
    }
    assert!((0.25 * (PI / 2.0).sqrt() - 0.31333).abs() < 1e-5);
}

#[test]
fn virial_is_quadratic() {
    let g = cart(2, 64, 6.0);
    let u = Profile::gaussian(0.7, 1.5).sample(g.clone());
    let w = weight(CutoffKind::Blowup, 1.5, &g);
    let v1 = virial(&u, &w).unwrap();
    let v2 = virial(&u.scaled_re(2.0), &w).unwrap();
    assert!((v2 - 4.0 * v1).abs() < 1e-13 * v2);
}

#[test]
fn grid_mismatch_is_rejected() {
    let g = cart(2, 32, 5.0);
    let w = weight(CutoffKind::Scattering, 2.0, &g);
    let other = Field::zeros(cart(2, 64, 5.0));
    assert!(matches!(virial(&other, &w), Err(NlsError::GridMismatch(_))));
    assert!(CutoffWeight::new(CutoffKind::Blowup, 0.0, &g).is_err());
}

#[test]
fn cutoff_profiles_meet_their_constraints() {
    for kind in [CutoffKind::Scattering, CutoffKind::Blowup] {
        let prof = CutoffProfile::new(kind);
        for i in 0..=40_000 {
            let s = i as f64 * 1e-4;
            let v = prof.eval(s);
            if s <= 1.0 {
                assert_eq!(v[0], s * s);
            }
            if kind == CutoffKind::Blowup {
                assert!(v[2] <= 2.0 + 1e-12, "φ'' = {} at {s}", v[2]);
                assert!(v[1] >= 0.0);
            }
            if kind == CutoffKind::Scattering && s >= 2.0 {
                assert_eq!(v, [0.0; 5]);
            }
            if kind == CutoffKind::Blowup && s >= 3.0 {
                assert_eq!(&v[1..], &[0.0; 4]);
            }
        }
        // C² across the breakpoints
        for knot in [1.0, prof.outer()] {
            let a = prof.eval(knot - 1e-12);
            let b = prof.eval(knot + 1e-12);
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() < 1e-9, "{kind:?} knot {knot} derivative {k}");
            }
        }
    }
}

#[test]
fn cutoff_derivatives_match_differences() {
    let h = 1e-5;
    for kind in [CutoffKind::Scattering, CutoffKind::Blowup] {
        let prof = CutoffProfile::new(kind);
        for i in 1..40 {
            let s = 1.0 + (prof.outer() - 1.0) * i as f64 / 40.0;
            let (a, b, c) = (prof.eval(s - h), prof.eval(s), prof.eval(s + h));
            for k in 0..4 {
                let fd = (c[k] - a[k]) / (2.0 * h);
                assert!((fd - b[k + 1]).abs() < 1e-6 * (1.0 + b[k + 1].abs()), "{kind:?} s={s} k={k}");
            }
        }
    }
}

#[test]
fn weight_is_exactly_quadratic_inside_radius() {
    let g = cart(3, 16, 4.0);
    let r = 2.5;
    let w = weight(CutoffKind::Scattering, r, &g);
    for i in 0..g.len() {
        let x = g.radius(i);
        if x <= r {
            assert_eq!(w.laplacian[i], 6.0);
            assert_eq!(w.bilaplacian[i], 0.0);
            let (a, b) = w.hessian_parts(i, x);
            assert_eq!((a, b), (2.0, 0.0));
        }
        if x >= 2.0 * r {
            assert_eq!(w.phi[i], 0.0);
        }
    }
}

#[test]
fn bilaplacian_matches_radial_differences() {
    // Δ²φ_R against a finite-difference radial Laplacian of Δφ_R
    for d in [1usize, 2, 3] {
        for kind in [CutoffKind::Scattering, CutoffKind::Blowup] {
            let r_cut = 2.0;
            let h = 1e-3;
            let prof = CutoffProfile::new(kind);
            let lap = |r: f64| {
                let v = prof.eval(r / r_cut);
                let d1 = r_cut * v[1];
                v[2] + (d as f64 - 1.0) * d1 / r
            };
            let g = radial(d, 2001, 2.0 * r_cut * prof.outer() / 2.0);
            let w = weight(kind, r_cut, &g);
            for (i, &r) in g.as_radial().unwrap().nodes().iter().enumerate() {
                let s = r / r_cut;
                if s < 1.05 || s > prof.outer() - 0.05 || (s - 1.0).abs() < 0.05 {
                    continue;
                }
                let l2 = (lap(r + h) - 2.0 * lap(r) + lap(r - h)) / (h * h);
                let l1 = (lap(r + h) - lap(r - h)) / (2.0 * h);
                let fd = l2 + (d as f64 - 1.0) * l1 / r;
                assert!(
                    (fd - w.bilaplacian[i]).abs() < 1e-4 * (10.0 + fd.abs()),
                    "d={d} {kind:?} r={r}: {fd} vs {}",
                    w.bilaplacian[i]
                );
                assert!((lap(r) - w.laplacian[i]).abs() < 1e-12 * (1.0 + lap(r).abs()));
            }
        }
    }
}

#[test]
fn vpp_equals_8k_inside_the_radius() {
    let cases: Vec<(Params, Arc<Grid>)> = vec![
        (Params::new(1, 7.0, 1.0).unwrap(), cart(1, 512, 12.0)),
        (Params::new(2, 5.0, 1.0).unwrap(), cart(2, 128, 10.0)),
        (Params::new(3, 4.0, 1.0).unwrap(), cart(3, 64, 10.0)),
        (Params::new(3, 4.0, 1.0).unwrap(), radial(3, 4001, 12.0)),
    ];
    for (params, g) in cases {
        let u = Profile::Gaussian {
            amplitude: 1.1,
            width: 0.9,
            center: [0.0; 3],
            momentum: [0.0; 3],
            chirp: 0.3,
            phase: 0.2,
        }
        .sample(g.clone());
        let k = functionals::evaluate(&u, &params).unwrap().k;
        for kind in [CutoffKind::Scattering, CutoffKind::Blowup] {
            let w = weight(kind, 6.0, &g);
            let (_, vpp) = virial_derivatives(&u, &w, &params).unwrap();
            assert!((vpp - 8.0 * k).abs() < 1e-8 * (8.0 * k).abs(), "{vpp} vs {}", 8.0 * k);
        }
    }
}

#[test]
fn real_fields_have_zero_vp() {
    let params = Params::new(2, 5.0, 1.0).unwrap();
    let g = cart(2, 64, 8.0);
    let u = Profile::gaussian(1.0, 2.0).sample(g.clone());
    let w = weight(CutoffKind::Scattering, 2.0, &g);
    let (vp, _) = virial_derivatives(&u, &w, &params).unwrap();
    assert!(vp.abs() < 1e-14, "{vp:e}");
}

#[test]
fn vp_bounded_by_cauchy_schwarz() {
    // |V'| ≤ 2 sup|∇φ_R| √(M ‖∇u‖²) with sup|∇φ_R| = R sup|φ'|
    let params = Params::new(2, 5.0, 1.0).unwrap();
    let g = cart(2, 64, 8.0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let u0 = random_bump(&mut rng, 2, false).sample(g.clone());
    for kind in [CutoffKind::Scattering, CutoffKind::Blowup] {
        let prof = CutoffProfile::new(kind);
        let slope = (0..=30_000).map(|i| prof.eval(i as f64 * 1e-4)[1].abs()).fold(0.0, f64::max);
        let r = 2.0;
        let w = Arc::new(weight(kind, r, &g));
        let c = EvolveControls {
            dt0: 1e-3,
            t_end: 0.2,
            ..Default::default()
        };
        let tr = Evolver::new(&params, &c).with_virial(w).run(&u0).unwrap();
        for rec in &tr.series {
            let bound = 2.0 * r * slope * (rec.bundle.mass * rec.grad_norm_sq).sqrt();
            assert!(rec.virial.unwrap().vp.abs() <= bound);
        }
    }
}

fn smooth_run(params: &Params, g: Arc<Grid>, w: Arc<CutoffWeight>, stride: usize) -> Trajectory {
    let u0 = Profile::Gaussian {
        amplitude: 0.8,
        width: 1.2,
        center: [0.0; 3],
        momentum: [0.0; 3],
        chirp: 0.2,
        phase: 0.0,
    }
    .sample(g);
    let c = EvolveControls {
        dt0: 2e-3,
        t_end: 0.5,
        adapt: AdaptRule::Fixed,
        snapshot_stride: stride,
        ..Default::default()
    };
    Evolver::new(params, &c).with_virial(w).run(&u0).unwrap()
}

#[test]
fn virial_identity_along_a_nonlinear_run() {
    let params = Params::new(2, 5.0, 1.0).unwrap();
    let g = cart(2, 128, 12.0);
    let w = Arc::new(weight(CutoffKind::Scattering, 3.0, &g));
    let tr = smooth_run(&params, g, w.clone(), 1);
    let rep = virial_identity_check(&tr, &w, &params).unwrap();
    assert!(rep.second_derivative_residual < 1e-3, "{rep:?}");
    assert!(rep.first_derivative_residual < 1e-3, "{rep:?}");
    assert_eq!(rep.samples, tr.series.len());
}

#[test]
fn snapshots_reproduce_recorded_virial() {
    let params = Params::new(2, 5.0, 1.0).unwrap();
    let g = cart(2, 64, 12.0);
    let w = Arc::new(weight(CutoffKind::Blowup, 3.0, &g));
    let tr = smooth_run(&params, g.clone(), w.clone(), 1);
    let recorded = virial_series(&tr, &w, &params).unwrap();
    let other = weight(CutoffKind::Blowup, 3.0000001, &g);
    let rebuilt = virial_series(&tr, &other, &params).unwrap();
    assert_eq!(recorded.times, rebuilt.times);
    for i in 0..recorded.v.len() {
        assert!((recorded.v[i] - rebuilt.v[i]).abs() < 1e-6 * recorded.v[i].abs());
    }
}

#[test]
fn identity_check_needs_five_samples() {
    let params = Params::new(1, 7.0, 1.0).unwrap();
    let g = cart(1, 64, 8.0);
    let w = weight(CutoffKind::Scattering, 2.0, &g);
    let u = Profile::gaussian(0.5, 1.0).sample(g);
    let c = EvolveControls {
        dt0: 0.01,
        t_end: 0.03,
        adapt: AdaptRule::Fixed,
        snapshot_stride: 1,
        ..Default::default()
    };
    let tr = evolve(&u, &params, &c).unwrap();
    assert!(matches!(virial_identity_check(&tr, &w, &params), Err(NlsError::Argument(_))));
}

#[test]
fn free_gaussian_virial_is_exact_parabola() {
    // tiny amplitude: V'' = 8‖∇u‖² is constant and the second difference is exact
    let params = Params::new(1, 7.0, 1.0).unwrap();
    let g = cart(1, 1024, 40.0);
    let w = Arc::new(weight(CutoffKind::Scattering, 15.0, &g));
    let u0 = Profile::gaussian(1e-4, 1.0).sample(g);
    let c = EvolveControls {
        dt0: 0.01,
        t_end: 1.0,
        adapt: AdaptRule::Fixed,
        ..Default::default()
    };
    let tr = Evolver::new(&params, &c).with_virial(w.clone()).run(&u0).unwrap();
    let rep = virial_identity_check(&tr, &w, &params).unwrap();
    assert!(rep.second_derivative_residual < 1e-3, "{rep:?}");
    let g0 = tr.initial().grad_norm_sq;
    let vpp = tr.last().virial.unwrap().vpp;
    assert!((vpp - 8.0 * g0).abs() < 1e-8 * vpp);
}

#[test]
fn radial_sobolev_vanishes_for_inner_support() {
    let params = Params::new(3, 4.0, 1.0).unwrap();
    let g = radial(3, 2001, 10.0);
    let u = Field::from_fn(g, |x| {
        let r = x[0];
        Complex64::new(if r < 1.5 { (1.0 - (r / 1.5).powi(2)).powi(3) } else { 0.0 }, 0.0)
    });
    let rep = radial_sobolev_check(&u, 2.0, &params).unwrap();
    assert_eq!(rep.lhs_focusing, 0.0);
    assert_eq!(rep.rhs_focusing, 0.0);
    assert_eq!(rep.c_mass_critical, 0.0);
}

#[test]
fn radial_sobolev_constants_on_gaussian_tails() {
    for (d, p) in [(2usize, 5.0), (3, 4.0)] {
        let params = Params::new(d, p, 1.0).unwrap();
        let g = radial(d, 8001, 40.0);
        let c = |width: f64, r: f64| {
            let u = Profile::gaussian(1.0, width).sample(g.clone());
            radial_sobolev_check(&u, r, &params).unwrap()
        };
        for width in [2.0, 4.0] {
            // C(R) increases in R towards a finite limit below the Strauss bound
            let mut prev = 0.0;
            for r in [1.0, 2.0, 4.0, 8.0, 16.0] {
                let rep = c(width, r);
                assert!(rep.c_focusing > prev, "d={d} w={width} R={r}");
                assert!(rep.c_focusing <= rep.strauss_bound_focusing, "{rep:?}");
                assert!(rep.c_mass_critical <= rep.strauss_bound_mass_critical, "{rep:?}");
                prev = rep.c_focusing;
            }
        }
        // dilation invariance: C depends on R/w only
        for r in [1.0, 2.0, 4.0] {
            let (a, b) = (c(2.0, r), c(4.0, 2.0 * r));
            assert!((a.c_focusing / b.c_focusing - 1.0).abs() < 1e-4, "d={d} R={r}");
            assert!((a.c_mass_critical / b.c_mass_critical - 1.0).abs() < 1e-4, "d={d} R={r}");
        }
        let u = Profile::gaussian(1.0, 3.0).sample(g.clone());
        let rep = radial_sobolev_check(&u, 3.0, &params).unwrap();
        let twice = radial_sobolev_check(&u.scaled_re(2.0), 3.0, &params).unwrap();
        assert!((twice.c_focusing / rep.c_focusing - 1.0).abs() < 1e-12);
        assert!((twice.c_mass_critical / rep.c_mass_critical - 1.0).abs() < 1e-12);
    }
}

#[test]
fn radial_sobolev_requires_radial_fields() {
    let params = Params::new(2, 5.0, 1.0).unwrap();
    let u = Field::zeros(cart(2, 16, 4.0));
    assert!(radial_sobolev_check(&u, 1.0, &params).is_err());
    let p1 = Params::new(1, 7.0, 1.0).unwrap();
    let u1 = Field::zeros(radial(1, 64, 4.0));
    assert!(matches!(radial_sobolev_check(&u1, 1.0, &p1), Err(NlsError::UnsupportedDimension(1))));
}

fn record(t: f64, dt: f64, lp1: f64, spacetime: [f64; 2]) -> StepRecord {
    StepRecord {
        t,
        dt,
        bundle: FunctionalBundle {
            lp1,
            mass: 1.0,
            ..Default::default()
        },
        grad_norm_sq: 1.0,
        momentum: [0.0; 3],
        l_strichartz: 0.0,
        spacetime,
        virial: None,
        max_abs: 1.0,
        boundary_amplitude: 0.0,
    }
}

fn synthetic(status: RunStatus, lp1_end: f64, late_growth: f64) -> Trajectory {
    let params = Params::new(1, 7.0, 1.0).unwrap();
    let series: Vec<StepRecord> = (0..=100)
        .map(|i| {
            let t = i as f64;
            let s = 1.0 - (-t / 5.0).exp() + late_growth * t / 100.0;
            let lp1 = 1.0 + (lp1_end - 1.0) * t / 100.0;
            record(t, if i == 0 { 0.0 } else { 1.0 }, lp1, [s, s])
        })
        .collect();
    Trajectory {
        params,
        controls: EvolveControls::default(),
        times: series.iter().map(|r| r.t).collect(),
        spacetime_k_norm: series.last().unwrap().spacetime,
        series,
        snapshot_times: vec![],
        snapshots: vec![],
        status,
        virial_weight: None,
    }
}

#[test]
fn verdict_rules() {
    let params = Params::new(1, 7.0, 1.0).unwrap();
    let plus = Membership::from_values(0.5, 0.1, 1.0);
    let minus = Membership::from_values(0.5, -0.1, 1.0);
    let crit = ScatterCriteria::default();
    // ‖u‖_{p+1} ratio = lp1_end^{1/(p+1)}
    let small = 1e-9;

    let v = classify_outcome(&synthetic(RunStatus::Completed, small, 0.0), &plus, &params, &crit);
    assert_eq!(v.outcome, Outcome::Scatter);
    assert!(v.theory_consistent);

    let v = classify_outcome(&synthetic(RunStatus::Completed, small, 0.0), &minus, &params, &crit);
    assert_eq!(v.outcome, Outcome::Scatter);
    assert!(!v.theory_consistent);

    let v = classify_outcome(&synthetic(RunStatus::BlowupTerminated, 1.0, 0.0), &minus, &params, &crit);
    assert_eq!(v.outcome, Outcome::Blowup);
    assert!(v.theory_consistent);

    // spacetime norm still growing at the end
    let v = classify_outcome(&synthetic(RunStatus::Completed, small, 0.5), &plus, &params, &crit);
    assert_eq!(v.outcome, Outcome::Undecided);
    assert!(v.evidence["tail_share_mass_critical"] > 0.01);

    // no decay of the potential norm
    let v = classify_outcome(&synthetic(RunStatus::Completed, 0.5, 0.0), &plus, &params, &crit);
    assert_eq!(v.outcome, Outcome::Undecided);

    for status in [RunStatus::StepFloorHit, RunStatus::DriftExceeded] {
        let v = classify_outcome(&synthetic(status, small, 0.0), &plus, &params, &crit);
        assert_eq!(v.outcome, Outcome::Undecided);
    }

    let above = Membership::from_values(2.0, 1.0, 1.0);
    let v = classify_outcome(&synthetic(RunStatus::Completed, small, 0.0), &above, &params, &crit);
    assert_eq!(above.set, MembershipSet::AboveThreshold);
    assert!(!v.theory_consistent);
}

#[test]
fn scatter_criteria_reject_unknown_keys() {
    let c: ScatterCriteria = serde_json::from_str(r#"{"amplitude_ratio": 0.2}"#).unwrap();
    assert_eq!(c.amplitude_ratio, 0.2);
    assert_eq!(c.increment_share, 0.01);
    assert!(serde_json::from_str::<ScatterCriteria>(r#"{"ratio": 0.2}"#).is_err());
}

#[test]
fn concavity_window_finds_longest_run() {
    let vpp = vec![0.0, -5.0, -5.0, 1.0, -5.0, -5.0, -5.0, 0.0];
    let s = VirialSeries {
        times: (0..vpp.len()).map(|i| i as f64).collect(),
        v: vec![0.0; vpp.len()],
        vp: vec![0.0; vpp.len()],
        vpp_fd: vec![f64::NAN; vpp.len()],
        vp_fd: vec![f64::NAN; vpp.len()],
        vpp,
    };
    let w = concavity_window(&s, 0.5, 2.0);
    assert_eq!(w.bound, -4.0);
    assert_eq!(w.longest, 3);
    assert_eq!((w.start_time, w.end_time), (4.0, 6.0));
    assert_eq!(w.satisfied, 5);
    assert_eq!(delta_one(0.75, 1.0), 0.25);
}

#[test]
fn trapping_delta_calibration() {
    let params = Params::new(1, 7.0, 1.0).unwrap();
    let g = cart(1, 256, 12.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = 2.0013980426;
    let mut bundles = Vec::new();
    while bundles.len() < 30 {
        let u = random_bump(&mut rng, 1, false).sample(g.clone()).scaled_re(0.5);
        let b = functionals::evaluate(&u, &params).unwrap();
        if b.k >= 0.0 && b.s_omega < m {
            bundles.push(b);
        }
    }
    let delta = calibrate_trapping_delta(&params, m, &bundles).unwrap();
    assert!(delta > 0.0);
    for b in &bundles {
        assert!(b.k >= trapping_lower_bound(&params, m, delta, b) - 1e-15);
    }
    let mut neg = bundles[0];
    neg.k = -1.0;
    assert_eq!(calibrate_trapping_delta(&params, m, &[neg]), None);
}

#[test]
fn monitors_on_a_short_subthreshold_run() {
    let params = Params::new(1, 7.0, 1.0).unwrap();
    let g = cart(1, 512, 20.0);
    let u = Profile::gaussian(0.6, 1.0).sample(g);
    let c = EvolveControls {
        dt0: 1e-3,
        t_end: 0.5,
        ..Default::default()
    };
    let tr = evolve(&u, &params, &c).unwrap();
    let m = 2.0013980426;
    assert!(tr.initial().bundle.k > 0.0 && tr.initial().bundle.s_omega < m);
    let rep = k_sign_monitor(&tr, MembershipSet::APlus);
    assert_eq!(rep.violations, 0);
    assert_eq!(rep.checked, tr.series.len());
    let bundles: Vec<FunctionalBundle> = tr.series.iter().map(|r| r.bundle).collect();
    let delta = calibrate_trapping_delta(&params, m, &bundles).unwrap();
    let rep = positive_k_monitor(&tr, &params, m, delta.min(1e6));
    assert_eq!(rep.violations, 0);
    // the A_minus bound fails on positive-K data
    assert_eq!(negative_k_monitor(&tr, m).violations, tr.series.len());
    assert_eq!(k_sign_monitor(&tr, MembershipSet::AMinus).violations, tr.series.len());
}

#[test]
fn gradient_components_match_closed_form() {
    let g = cart(2, 64, 6.0);
    let u = Profile::gaussian(1.0, 1.0).sample(g.clone());
    let grads = field_derivatives(&u).unwrap();
    assert_eq!(grads.gradient.len(), 2);
    let total: f64 = grads
        .gradient
        .iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>())
        .sum::<f64>()
        * g.as_cartesian().unwrap().cell_volume();
    assert!((total - gradient_norm_sq(&u)).abs() < 1e-12 * total);
    // ∫ ū Δu = -∫|∇u|²
    let cv = g.as_cartesian().unwrap().cell_volume();
    let pairing: f64 = u.values().iter().zip(&grads.laplacian).map(|(a, b)| (a.conj() * b).re).sum::<f64>() * cv;
    assert!((pairing + total).abs() < 1e-12 * total);
    assert!(quadrature_lq(&u, 2.0) > 0.0);
}
