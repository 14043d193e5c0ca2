//! The five subcommands. Each one validates everything it needs before it
//! creates the output directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};

use nls_core::diagnostics::{
    classify_outcome, concavity_window, delta_one, identity_report, k_sign_monitor,
    negative_k_monitor, virial_series, CutoffWeight,
};
use nls_core::evolution::{boundary_report, conservation_report, Evolver, Trajectory};
use nls_core::functionals;
use nls_core::groundstate::{
    default_aubin_talenti_grid, default_radial_grid, explicit_aubin_talenti,
    solve_ground_state, threshold, write_profile, Membership, MembershipSet, ProfileFile,
};
use nls_core::{Field, Grid, Params, RadialGrid, Regime};

use crate::config::{ExperimentConfig, GridSpec, SweepCommand};
use crate::data;
use crate::error::{io, solver, CliError};
use crate::output::{write_json, Plot, SeriesWriter};
use crate::verify;

fn prepare(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(io)?;
    fs::write(out.join("config.toml"), cfg.to_toml()).map_err(io)
}

fn set_name(set: MembershipSet) -> &'static str {
    match set {
        MembershipSet::APlus => "A_plus",
        MembershipSet::AMinus => "A_minus",
        MembershipSet::AboveThreshold => "above_threshold",
    }
}

/// Relative size below which `K` and the margin count as numerically zero in
/// the `boundary_case` flag; the set itself always follows the exact sign.
const BOUNDARY_TOLERANCE: f64 = 1e-6;

fn membership_json(m: &Membership, k_scale: f64) -> Value {
    let k_relative = if k_scale > 0.0 { m.k_value / k_scale } else { 0.0 };
    let boundary = k_relative.abs() < BOUNDARY_TOLERANCE && m.margin.abs() < BOUNDARY_TOLERANCE * m.m_omega;
    json!({
        "S_omega": m.s_omega_value,
        "m_omega": m.m_omega,
        "K": m.k_value,
        "k_relative": k_relative,
        "set": set_name(m.set),
        "margin": m.margin,
        "boundary_case": boundary,
    })
}

fn header(params: &Params) -> Value {
    json!({"d": params.d(), "p": params.p(), "omega": params.omega()})
}

fn merge(mut a: Value, b: Value) -> Value {
    if let (Value::Object(x), Value::Object(y)) = (&mut a, b) {
        x.extend(y);
    }
    a
}

pub fn ground_state(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let (params, grid) = cfg.validate()?;
    let user_grid = match cfg.grid {
        GridSpec::Radial { .. } => Some(grid.as_radial().cloned().expect("radial spec")),
        GridSpec::Cartesian { .. } => None,
    };
    let summary = match params.regime() {
        Regime::Subcritical => {
            let g = match user_grid {
                Some(g) => g,
                None => default_radial_grid(&params).map_err(solver)?,
            };
            let gs = solve_ground_state(&params, &g).map_err(solver)?;
            prepare(cfg, out)?;
            write_profile_file(out, &ProfileFile::from_ground_state(&gs))?;
            json!({
                "m_omega": gs.m_omega,
                "Q0": gs.q0,
                "residual_sup": gs.residual_sup,
                "K_of_Q": gs.k_of_q,
                "decay_rate": gs.decay_rate,
                "bracket_width": gs.bracket_width,
                "matching_radius": gs.matching_radius,
                "nodes": g.len(),
            })
        }
        Regime::EnergyCritical => {
            let g: RadialGrid = match user_grid {
                Some(g) => g,
                None => default_aubin_talenti_grid(params.d()).map_err(solver)?,
            };
            let w = explicit_aubin_talenti(params.d(), &g).map_err(solver)?;
            let lo = threshold(&params.with_omega(0.5)?).map_err(solver)?;
            let hi = threshold(&params.with_omega(2.0)?).map_err(solver)?;
            prepare(cfg, out)?;
            write_profile_file(out, &ProfileFile::from_aubin_talenti(&w))?;
            json!({
                "E0_of_W": w.e0_of_w,
                "m_omega": w.e0_of_w,
                "omega_independent": lo == hi && lo == w.e0_of_w,
                "Q0": w.profile.values()[0].re,
                "residual_sup": w.residual_sup,
                "sobolev_constant": w.sobolev_constant,
                "nodes": g.len(),
            })
        }
    };
    write_json(&out.join("ground_state.json"), &merge(header(&params), summary))
}

fn write_profile_file(out: &Path, pf: &ProfileFile) -> Result<(), CliError> {
    let mut f = std::io::BufWriter::new(fs::File::create(out.join("ground_state.dat")).map_err(io)?);
    write_profile(&mut f, pf).map_err(solver)
}

struct InitialState {
    u0: Field,
    m_omega: f64,
    membership: Membership,
    k_scale: f64,
}

/// Initial data and its membership; shared by classify and evolve.
fn initial_state(cfg: &ExperimentConfig, params: &Params, grid: Arc<Grid>) -> Result<InitialState, CliError> {
    let spec = cfg.data("this subcommand")?;
    let reference = data::reference(params)?;
    let u0 = data::resolve(spec, params, grid, &reference)?;
    let b = functionals::evaluate(&u0, params).map_err(solver)?;
    Ok(InitialState {
        u0,
        m_omega: reference.m_omega,
        membership: Membership::from_values(b.s_omega, b.k, reference.m_omega),
        k_scale: b.k_scale(),
    })
}

pub fn classify(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let (params, grid) = cfg.validate()?;
    cfg.data("classify")?;
    let st = initial_state(cfg, &params, grid)?;
    prepare(cfg, out)?;
    let m = membership_json(&st.membership, st.k_scale);
    write_json(&out.join("classify.json"), &merge(header(&params), m))
}

/// Edge amplitude, relative to the peak, above which wraparound is reported.
const BOUNDARY_AMPLITUDE_LIMIT: f64 = 1e-8;

pub fn evolve(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let (params, grid) = cfg.validate()?;
    cfg.data("evolve")?;
    if grid.as_cartesian().is_none() {
        return Err(CliError::Validation("evolve needs a cartesian grid".into()));
    }
    let weight = match cfg.diagnostics.virial_cutoff {
        Some(kind) => Some(Arc::new(CutoffWeight::new(kind, cfg.diagnostics.virial_radius, &grid)?)),
        None => None,
    };
    let st = initial_state(cfg, &params, grid)?;
    let m = st.membership;
    prepare(cfg, out)?;

    let mut csv = SeriesWriter::create(&out.join("series.csv"), &params)?;
    let mut write_err = None;
    let mut ev = Evolver::new(&params, &cfg.controls).with_sink(|r| {
        if write_err.is_none() {
            write_err = csv.row(r).err();
        }
    });
    if let Some(w) = &weight {
        ev = ev.with_virial(w.clone());
    }
    let tr = ev.run(&st.u0).map_err(solver)?;
    if let Some(e) = write_err {
        return Err(io(e));
    }
    csv.finish()?;

    let verdict = classify_outcome(&tr, &m, &params, &cfg.diagnostics.scatter);
    let mut summary = json!({
        "status": tr.status,
        "steps": tr.series.len() - 1,
        "t_final": tr.last().t,
        "membership": membership_json(&m, st.k_scale),
        "drifts": conservation_report(&tr),
        "boundary": boundary_report(&tr, BOUNDARY_AMPLITUDE_LIMIT),
        "verdict": verdict.outcome,
        "evidence": verdict.evidence,
        "theory_consistent": verdict.theory_consistent,
        "k_sign_monitor": k_sign_monitor(&tr, m.set),
    });
    let extra = summary.as_object_mut().expect("object");
    if m.set == MembershipSet::AMinus {
        extra.insert("negative_k_monitor".into(), json!(negative_k_monitor(&tr, st.m_omega)));
    }
    if let Some(w) = &weight {
        let s = virial_series(&tr, w, &params).map_err(solver)?;
        let d1 = delta_one(m.s_omega_value, st.m_omega);
        extra.insert("delta_one".into(), json!(d1));
        extra.insert("concavity_window".into(), json!(concavity_window(&s, d1, st.m_omega)));
        if let Ok(r) = identity_report(&s) {
            extra.insert("virial_identity".into(), json!(r));
        }
    }
    write_json(&out.join("evolve.json"), &merge(header(&params), summary))?;
    if cfg.diagnostics.plots {
        plots(&tr, out)?;
    }
    Ok(())
}

/// `(x, |u|)` along the first axis through the origin.
fn axis_profile(u: &Field) -> Vec<(f64, f64)> {
    match u.grid() {
        Grid::Cartesian(g) => (0..g.len())
            .filter_map(|i| {
                let x = g.point(i);
                x[1..g.d()].iter().all(|c| *c == 0.0).then(|| (x[0], u.values()[i].norm()))
            })
            .collect(),
        Grid::Radial(g) => g.nodes().iter().zip(u.values()).map(|(r, z)| (*r, z.norm())).collect(),
    }
}

fn plots(tr: &Trajectory, out: &Path) -> Result<(), CliError> {
    let dir = out.join("plots");
    fs::create_dir_all(&dir).map_err(io)?;
    let n = tr.snapshots.len();
    let picks: Vec<usize> = if n <= 6 { (0..n).collect() } else { (0..6).map(|k| k * (n - 1) / 5).collect() };
    Plot {
        title: "|u| along the first axis",
        x_label: "x",
        curves: picks
            .iter()
            .map(|&k| (format!("t = {:.3}", tr.snapshot_times[k]), axis_profile(&tr.snapshots[k])))
            .collect(),
    }
    .write(&dir.join("amplitude.svg"))?;
    let series = |f: &dyn Fn(&nls_core::evolution::StepRecord) -> f64| -> Vec<(f64, f64)> {
        tr.series.iter().map(|r| (r.t, f(r))).collect()
    };
    Plot {
        title: "gradient norm squared",
        x_label: "t",
        curves: vec![("grad_norm_sq".into(), series(&|r| r.grad_norm_sq))],
    }
    .write(&dir.join("grad_norm_sq.svg"))?;
    Plot {
        title: "action and scaling derivative",
        x_label: "t",
        curves: vec![
            ("S_omega".into(), series(&|r| r.bundle.s_omega)),
            ("K".into(), series(&|r| r.bundle.k)),
        ],
    }
    .write(&dir.join("functionals.svg"))?;
    if tr.virial_weight.is_some() {
        Plot {
            title: "localized virial",
            x_label: "t",
            curves: vec![
                ("V_R".into(), series(&|r| r.virial.map_or(f64::NAN, |v| v.v))),
                ("V_R_second".into(), series(&|r| r.virial.map_or(f64::NAN, |v| v.vpp))),
            ],
        }
        .write(&dir.join("virial.svg"))?;
    }
    Ok(())
}

pub fn verify(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let (params, _) = cfg.validate()?;
    prepare(cfg, out)?;
    let report = verify::run(&params, &cfg.verify, cfg.seed);
    write_json(&out.join("verify.json"), &report)?;
    if report.all_pass {
        Ok(())
    } else {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        Err(CliError::Verification(failed.join(", ")))
    }
}

#[derive(Debug, Serialize)]
struct SweepPoint {
    index: usize,
    value: toml::Value,
    dir: PathBuf,
    exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn run_point(cmd: SweepCommand, cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    match cmd {
        SweepCommand::GroundState => ground_state(cfg, out),
        SweepCommand::Classify => classify(cfg, out),
        SweepCommand::Evolve => evolve(cfg, out),
    }
}

pub fn sweep(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    cfg.validate()?;
    let spec = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Validation("sweep needs a [sweep] section".into()))?;
    if spec.values.is_empty() {
        return Err(CliError::Validation("sweep.values is empty".into()));
    }
    let mut points = Vec::with_capacity(spec.values.len());
    for (i, v) in spec.values.iter().enumerate() {
        let mut p = cfg.with_override(&spec.parameter, v)?;
        let dir = out.join(format!("point_{i:03}"));
        p.out_dir = dir.clone();
        p.validate()?;
        if spec.command != SweepCommand::GroundState {
            p.data("sweep")?;
        }
        points.push((i, v.clone(), dir, p));
    }
    prepare(cfg, out)?;
    let run = |(i, v, dir, p): &(usize, toml::Value, PathBuf, ExperimentConfig)| {
        let r = run_point(spec.command, p, dir);
        if let Err(e) = &r {
            log::warn!("sweep point {i}: {e}");
        }
        SweepPoint {
            index: *i,
            value: v.clone(),
            dir: PathBuf::from(dir.file_name().expect("point dir")),
            exit_code: r.as_ref().map_or_else(|e| e.exit_code(), |_| 0),
            error: r.err().map(|e| e.to_string()),
        }
    };
    #[cfg(feature = "parallel")]
    let results: Vec<SweepPoint> = {
        use rayon::prelude::*;
        points.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<SweepPoint> = points.iter().map(run).collect();
    let failed = results.iter().filter(|p| p.exit_code != 0).count();
    write_json(
        &out.join("sweep.json"),
        &json!({
            "command": spec.command,
            "parameter": spec.parameter,
            "points": results,
        }),
    )?;
    if failed > 0 {
        return Err(CliError::Solver(format!("{failed} of {} sweep points failed", results.len())));
    }
    Ok(())
}
