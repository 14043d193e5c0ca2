//! Acceptance criteria, one line per criterion with its runtime.
//!
//! Runs with a plain `main` so the criteria execute one after another and
//! the timings are not disturbed by each other.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nls_core::diagnostics::{
    classify_outcome, concavity_window, delta_one, k_sign_monitor, negative_k_monitor, radial_sobolev_check,
    virial_derivatives, virial_identity_check, virial_series, CutoffKind, CutoffWeight, Outcome, ScatterCriteria,
};
use nls_core::evolution::{conservation_report, evolve, AdaptRule, EvolveControls, Evolver, RunStatus};
use nls_core::functionals::{
    self, decoupling_check, find_lambda_zero, scaling_identities_check, with_phase, DecouplingScenario, ScalingCurve,
};
use nls_core::groundstate::{
    classify_data, default_aubin_talenti_grid, default_radial_grid, explicit_aubin_talenti, radial_to_grid,
    solve_ground_state, threshold, MembershipSet,
};
use nls_core::profiles::{random_bump, Profile, ScalingMode};
use nls_core::{CartesianGrid, Field, Grid, NlsError, Params, RadialGrid};

type Checked = Result<(bool, String), NlsError>;

const PAIRS: [(usize, f64); 3] = [(1, 7.0), (2, 5.0), (3, 4.0)];

fn cart(d: usize, n: usize, l: f64) -> Arc<Grid> {
    Arc::new(CartesianGrid::new(d, n, l).unwrap().into())
}

fn radial(d: usize, n: usize, r_max: f64) -> Arc<Grid> {
    Arc::new(RadialGrid::new(d, n, r_max).unwrap().into())
}

/// Cartesian in one dimension, radial above.
fn bump_grid(d: usize) -> (Arc<Grid>, bool) {
    if d == 1 {
        (cart(1, 1024, 16.0), false)
    } else {
        (radial(d, 2001, 10.0), true)
    }
}

fn params(d: usize, p: f64) -> Params {
    Params::new(d, p, 1.0).unwrap()
}

fn ground_state(d: usize, p: f64) -> Checked {
    let params = params(d, p);
    let gs = solve_ground_state(&params, &default_radial_grid(&params)?)?;
    let k_rel = gs.k_of_q.abs() / gs.bundle.k_scale();
    let l0 = find_lambda_zero(&gs.profile, &params)?;
    let root = params.omega().sqrt();
    let rate = (gs.decay_rate - root).abs() / root;
    let ok = gs.residual_sup < 1e-8 && k_rel < 1e-6 && (l0 - 1.0).abs() < 1e-6 && rate < 0.05;
    Ok((
        ok,
        format!(
            "residual {:.1e}, |K|/scale {k_rel:.1e}, lambda0 - 1 {:.1e}, tail rate error {rate:.1e}",
            gs.residual_sup,
            l0 - 1.0
        ),
    ))
}

fn energy_critical() -> Checked {
    let p = params(3, 5.0);
    let w = explicit_aubin_talenti(3, &default_aubin_talenti_grid(3)?)?;
    let m_lo = threshold(&p.with_omega(0.5)?)?;
    let m_hi = threshold(&p.with_omega(2.0)?)?;
    let spread = (m_lo - m_hi).abs() / m_lo;
    let consistency = (w.e0_of_w - w.sobolev_constant.powi(-3) / 3.0).abs() / w.e0_of_w;
    let matches = (m_lo - w.e0_of_w).abs() / w.e0_of_w;
    Ok((
        w.residual_sup < 1e-10 && spread < 1e-12 && consistency < 1e-8 && matches < 1e-12,
        format!(
            "residual {:.1e}, omega spread {spread:.1e}, m vs E0(W) {matches:.1e}, E0 vs C^-3/3 {consistency:.1e}",
            w.residual_sup
        ),
    ))
}

fn scaling_identities() -> Checked {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut first, mut second, mut fd) = (0.0f64, 0.0f64, 0.0f64);
    let mut count = 0;
    for (d, p) in PAIRS {
        let params = params(d, p);
        let (g, radial) = bump_grid(d);
        for _ in 0..20 {
            let u = random_bump(&mut rng, d, radial).sample(g.clone());
            let r = scaling_identities_check(&u, &params)?;
            first = first.max(r.first_identity_residual);
            second = second.max(r.second_identity_residual);
            fd = fd.max(r.fd_relative_error);
            count += 1;
        }
    }
    Ok((
        first < 1e-10 && second < 1e-10 && fd < 1e-6,
        format!("{count} bumps, identity residuals {first:.1e} {second:.1e}, dS/dlambda vs K {fd:.1e}"),
    ))
}

fn lambda_zero() -> Checked {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut sign_failures = 0;
    let mut dilation = 0.0f64;
    let mut count = 0;
    for (d, p) in PAIRS {
        let params = params(d, p);
        let (g, radial) = bump_grid(d);
        for _ in 0..10 {
            // amplitude chosen so that lambda_0 lies in [1, 2] and the fields
            // at lambda_0 / 2 and 2 lambda_0 stay resolved on the grid
            let raw = random_bump(&mut rng, d, radial);
            let mut c = 1.0;
            let mut bump = raw.clone();
            let mut l0 = find_lambda_zero(&bump.sample(g.clone()), &params)?;
            for _ in 0..200 {
                if (1.0..=2.0).contains(&l0) {
                    break;
                }
                c *= if l0 > 2.0 { 1.1 } else { 1.0 / 1.1 };
                bump = raw.scaled_amplitude(c);
                l0 = find_lambda_zero(&bump.sample(g.clone()), &params)?;
            }
            let u = bump.sample(g.clone());
            let k = |lambda: f64| -> Result<f64, NlsError> {
                let v = bump.rescaled(lambda, ScalingMode::MassInvariant, d).sample(g.clone());
                Ok(functionals::evaluate(&v, &params)?.k)
            };
            let curve = ScalingCurve::from_field(&u, &params)?;
            let ok = k(0.5 * l0)? > 0.0
                && k(2.0 * l0)? < 0.0
                && curve.k_at(0.5 * l0) > 0.0
                && curve.k_at(2.0 * l0) < 0.0;
            if !ok {
                sign_failures += 1;
            }
            let v = bump.rescaled(2.0, ScalingMode::MassInvariant, d).sample(g.clone());
            let l0v = find_lambda_zero(&v, &params)?;
            dilation = dilation.max((l0v - 0.5 * l0).abs() / (0.5 * l0));
            count += 1;
        }
    }
    Ok((
        sign_failures == 0 && dilation < 1e-6,
        format!("{count} bumps, {sign_failures} sign failures, dilation covariance {dilation:.1e}"),
    ))
}

fn energy_trapping() -> Checked {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut found, mut violations, mut tries) = (0, 0, 0);
    for (d, p) in PAIRS {
        let params = params(d, p);
        let (g, radial) = bump_grid(d);
        let mut here = 0;
        while here < 50 && tries < 100_000 {
            tries += 1;
            let u = random_bump(&mut rng, d, radial).sample(g.clone());
            let b = functionals::evaluate(&u, &params)?;
            if b.k < 0.0 {
                continue;
            }
            here += 1;
            let env = b.trapping_envelope(&params);
            if !(params.trapping_factor() * env <= b.energy && b.energy <= env) {
                violations += 1;
            }
        }
        found += here;
    }
    Ok((
        violations == 0 && found == 150,
        format!("{found} fields with K >= 0, {violations} violations"),
    ))
}

fn l2_rel(a: &Field, b: &Field) -> f64 {
    let num: f64 = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.values().iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

fn conservation() -> Checked {
    let params = params(1, 7.0);
    let gs = solve_ground_state(&params, &default_radial_grid(&params)?)?;
    let u0 = gs.sample_on(cart(1, 1024, 60.0))?.scaled_re(0.3);
    let c = EvolveControls {
        dt0: 2.5e-4,
        t_end: 10.0,
        snapshot_stride: 4000,
        ..Default::default()
    };
    let tr = evolve(&u0, &params, &c)?;
    let rep = conservation_report(&tr);

    let g = cart(1, 256, 16.0);
    let v0 = Profile::gaussian(0.9, 1.5).sample(g);
    let run = |dt: f64| -> Result<Field, NlsError> {
        let c = EvolveControls {
            dt0: dt,
            t_end: 1.0,
            dt_floor: dt / 10.0,
            adapt: AdaptRule::Fixed,
            snapshot_stride: 1_000_000,
            ..Default::default()
        };
        Ok(evolve(&v0, &params, &c)?.final_field().clone())
    };
    let dt = 0.02;
    let reference = run(dt / 8.0)?;
    let ratio = l2_rel(&run(dt)?, &reference) / l2_rel(&run(dt / 2.0)?, &reference);
    Ok((
        tr.status == RunStatus::Completed && rep.mass < 1e-10 && rep.energy < 1e-8 && (3.6..=4.4).contains(&ratio),
        format!("mass drift {:.1e}, energy drift {:.1e}, self-convergence ratio {ratio:.3}", rep.mass, rep.energy),
    ))
}

/// Chirped `exp(1 - 1/(1 - (r/a)²))`, zero for `r ≥ a`.
fn compact_bump(g: Arc<Grid>, a: f64) -> Result<Field, NlsError> {
    let cg = g.as_cartesian().expect("cartesian grid").clone();
    let values = (0..cg.len())
        .map(|i| {
            let x = cg.point(i);
            let r2: f64 = x[..cg.d()].iter().map(|c| c * c).sum();
            let s = r2 / (a * a);
            if s >= 1.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::from_polar(1.2 * (1.0 - 1.0 / (1.0 - s)).exp(), 0.25 * r2 + 0.3 * x[0])
            }
        })
        .collect();
    Field::new(g, values, "compact bump")
}

fn virial() -> Checked {
    let mut worst_static = 0.0f64;
    for (d, p) in PAIRS {
        let params = params(d, p);
        let g = match d {
            1 => cart(1, 1024, 12.0),
            2 => cart(2, 256, 10.0),
            _ => cart(3, 128, 8.0),
        };
        let u = compact_bump(g.clone(), 5.0)?;
        let k = functionals::evaluate(&u, &params)?.k;
        for kind in [CutoffKind::Scattering, CutoffKind::Blowup] {
            let w = CutoffWeight::new(kind, 5.5, &g)?;
            let (_, vpp) = virial_derivatives(&u, &w, &params)?;
            worst_static = worst_static.max((vpp - 8.0 * k).abs() / (8.0 * k).abs());
        }
    }

    let params = params(2, 5.0);
    let g = cart(2, 128, 12.0);
    let u0 = Profile::Gaussian {
        amplitude: 0.8,
        width: 1.2,
        center: [0.0; 3],
        momentum: [0.0; 3],
        chirp: 0.2,
        phase: 0.0,
    }
    .sample(g.clone());
    let c = EvolveControls {
        dt0: 2e-3,
        t_end: 0.5,
        adapt: AdaptRule::Fixed,
        snapshot_stride: 1,
        ..Default::default()
    };
    let mut worst_run = 0.0f64;
    for kind in [CutoffKind::Scattering, CutoffKind::Blowup] {
        let w = Arc::new(CutoffWeight::new(kind, 3.0, &g)?);
        let tr = Evolver::new(&params, &c).with_virial(w.clone()).run(&u0)?;
        let rep = virial_identity_check(&tr, &w, &params)?;
        worst_run = worst_run.max(rep.second_derivative_residual);
    }
    Ok((
        worst_run < 1e-3 && worst_static < 1e-8,
        format!("d=2 run: FD V'' vs identity {worst_run:.1e}; compact data: Vpp vs 8K {worst_static:.1e}"),
    ))
}

fn scatter_demo() -> Checked {
    let params = params(1, 7.0);
    let m_omega = threshold(&params)?;
    let gs = solve_ground_state(&params, &default_radial_grid(&params)?)?;
    let u0 = gs.sample_on(cart(1, 16384, 2000.0))?.scaled_re(0.3);
    let m = classify_data(&u0, &params, m_omega)?;
    let c = EvolveControls {
        dt0: 7e-3,
        t_end: 250.0,
        adapt: AdaptRule::Fixed,
        snapshot_stride: 5000,
        drift_budget: 1e-5,
        ..Default::default()
    };
    let tr = evolve(&u0, &params, &c)?;
    let v = classify_outcome(&tr, &m, &params, &ScatterCriteria::default());
    let mon = k_sign_monitor(&tr, m.set);
    Ok((
        m.set == MembershipSet::APlus && v.outcome == Outcome::Scatter && v.theory_consistent && mon.violations == 0,
        format!(
            "(a) {:?}, {:?}, theory_consistent {}, K >= 0 at all {} steps {}",
            m.set,
            v.outcome,
            v.theory_consistent,
            mon.checked,
            mon.violations == 0
        ),
    ))
}

fn blowup_demo() -> Checked {
    let params = params(2, 5.0);
    let m_omega = threshold(&params)?;
    let gs = solve_ground_state(&params, &default_radial_grid(&params)?)?;
    let g = cart(2, 512, 8.0);
    let q = radial_to_grid(&gs.profile, g.clone())?;
    let u0 = functionals::rescale(&q, 1.0 / 0.9, ScalingMode::MassInvariant)?;
    let m = classify_data(&u0, &params, m_omega)?;
    let w = Arc::new(CutoffWeight::new(CutoffKind::Blowup, 3.0, &g)?);
    let c = EvolveControls {
        dt0: 1e-4,
        t_end: 20.0,
        dt_floor: 5e-6,
        blowup_gradient_factor: 20.0,
        snapshot_stride: 100,
        ..Default::default()
    };
    let tr = Evolver::new(&params, &c).with_virial(w.clone()).run(&u0)?;
    let v = classify_outcome(&tr, &m, &params, &ScatterCriteria::default());
    let mon = negative_k_monitor(&tr, m_omega);
    let s = virial_series(&tr, &w, &params)?;
    let win = concavity_window(&s, delta_one(m.s_omega_value, m_omega), m_omega);
    let t_final = tr.last().t;
    Ok((
        m.set == MembershipSet::AMinus
            && v.outcome == Outcome::Blowup
            && t_final < 20.0
            && mon.violations == 0
            && mon.checked == tr.series.len()
            && win.longest > 0,
        format!(
            "(b) {:?}, {:?} at t = {t_final:.4}, K < -(m - S) at {}/{} steps, concavity window {} samples on [{:.4}, {:.4}]",
            m.set,
            v.outcome,
            mon.checked - mon.violations,
            tr.series.len(),
            win.longest,
            win.start_time,
            win.end_time
        ),
    ))
}

fn dichotomy() -> Checked {
    let (a_ok, a) = scatter_demo()?;
    let (b_ok, b) = blowup_demo()?;
    Ok((a_ok && b_ok, format!("{a}; {b}")))
}

fn decoupling() -> Checked {
    let mut notes = Vec::new();
    let mut ok = true;
    for (d, p, g) in [(1, 7.0, cart(1, 1024, 64.0)), (2, 5.0, cart(2, 256, 32.0))] {
        let params = params(d, p);
        // exponential tails, so the overlap is visible above rounding at the
        // smaller separations
        let base = Profile::sech(1.0, 1.0, [0.0; 3]).sample(g.clone());
        let other = with_phase(&base, 0.7);
        let unit = 1.0 / (d as f64).sqrt();
        let mut prev: Option<[f64; 6]> = None;
        let mut maxima = Vec::new();
        for sep in [10.0, 20.0, 40.0] {
            let mut a = [0.0; 3];
            let mut b = [0.0; 3];
            for k in 0..d {
                a[k] = -0.5 * sep * unit;
                b[k] = 0.5 * sep * unit;
            }
            let sc = DecouplingScenario {
                profiles: vec![base.clone(), other.clone()],
                translations: vec![a, b],
                phases: vec![0.0, 0.0],
                time_shifts: vec![0.0, 0.0],
                remainder: None,
            };
            let r = decoupling_check(&sc, &params)?;
            let now = r.defects.as_array().map(|(_, v)| v);
            if let Some(p) = prev {
                // below 1e-13 the defects are rounding noise
                ok &= now.iter().zip(&p).all(|(n, p)| *n < *p || (*n < 1e-13 && *p < 1e-13));
            }
            maxima.push(r.defects.max());
            prev = Some(now);
        }
        ok &= maxima[2] < 1e-8;
        notes.push(format!(
            "d={d}: max defect {:.1e} {:.1e} {:.1e}",
            maxima[0], maxima[1], maxima[2]
        ));
    }
    Ok((ok, notes.join("; ")))
}

fn radial_sobolev() -> Checked {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst_ratio = 0.0f64;
    let mut homogeneity = 0.0f64;
    for (d, p) in [(2, 5.0), (3, 4.0)] {
        let params = params(d, p);
        let g = radial(d, 8001, 40.0);
        for _ in 0..10 {
            let u = Profile::gaussian(rng.gen_range(0.5..2.0), rng.gen_range(1.5..4.0)).sample(g.clone());
            let scaled = u.scaled_re(rng.gen_range(0.1..10.0));
            for r in [2.0, 4.0, 8.0] {
                let a = radial_sobolev_check(&u, r, &params)?;
                let b = radial_sobolev_check(&scaled, r, &params)?;
                worst_ratio = worst_ratio
                    .max(a.c_focusing / a.strauss_bound_focusing)
                    .max(a.c_mass_critical / a.strauss_bound_mass_critical);
                for (x, y) in [(a.c_focusing, b.c_focusing), (a.c_mass_critical, b.c_mass_critical)] {
                    let dev = if x > 0.0 { (y / x - 1.0).abs() } else { f64::INFINITY };
                    homogeneity = homogeneity.max(dev);
                }
            }
        }
    }
    Ok((
        worst_ratio.is_finite() && worst_ratio <= 1.0 && homogeneity < 1e-12,
        format!("largest constant over Strauss bound {worst_ratio:.3}, homogeneity {homogeneity:.1e}"),
    ))
}

fn main() -> ExitCode {
    let criteria: Vec<(&str, Duration, Box<dyn Fn() -> Checked>)> = vec![
        ("1 ground state d=1 p=7", Duration::from_secs(10), Box::new(|| ground_state(1, 7.0))),
        ("1 ground state d=2 p=5", Duration::from_secs(10), Box::new(|| ground_state(2, 5.0))),
        ("2 energy-critical threshold", Duration::from_secs(5), Box::new(energy_critical)),
        ("3 scaling identities", Duration::from_secs(30), Box::new(scaling_identities)),
        ("4 lambda_0 structure", Duration::from_secs(30), Box::new(lambda_zero)),
        ("5 energy trapping", Duration::from_secs(30), Box::new(energy_trapping)),
        ("6 conservation and scheme order", Duration::from_secs(60), Box::new(conservation)),
        ("7 virial identity", Duration::from_secs(120), Box::new(virial)),
        ("8 dichotomy", Duration::from_secs(300), Box::new(dichotomy)),
        ("9 decoupling", Duration::from_secs(30), Box::new(decoupling)),
        ("10 radial Sobolev", Duration::from_secs(10), Box::new(radial_sobolev)),
    ];
    // optional name filters, e.g. `cargo test --test acceptance -- virial`
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: Vec<_> = criteria
        .into_iter()
        .filter(|(name, _, _)| filters.is_empty() || filters.iter().any(|f| name.contains(f.as_str())))
        .collect();
    let mut failed = 0;
    for (name, budget, f) in &criteria {
        let start = Instant::now();
        let result = f();
        let elapsed = start.elapsed();
        let (ok, detail) = match result {
            Ok((ok, detail)) => (ok, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let in_time = elapsed <= *budget;
        let pass = ok && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {name}: {:.2} s (budget {} s{}) {detail}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs(),
            if in_time { "" } else { ", exceeded" },
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
