//! Turning an initial-data spec into a field on the experiment grid.

use std::fs::File;
use std::io::BufReader;
use std::sync::Arc;

use nls_core::functionals::{self, ScalingMode};
use nls_core::groundstate::{
    default_aubin_talenti_grid, default_radial_grid, explicit_aubin_talenti, radial_to_grid,
    read_profile, solve_ground_state, TRUNCATION_RADIUS,
};
use nls_core::profiles::Profile;
use nls_core::{Field, Grid, Params, Regime};

use crate::config::InitialData;
use crate::error::{solver, CliError};

/// Radial `Q`, or truncated `W` at the energy-critical exponent, with `m_ω`.
pub struct Reference {
    pub profile: Field,
    pub m_omega: f64,
}

pub fn reference(params: &Params) -> Result<Reference, CliError> {
    match params.regime() {
        Regime::Subcritical => {
            let grid = default_radial_grid(params).map_err(solver)?;
            let gs = solve_ground_state(params, &grid).map_err(solver)?;
            Ok(Reference {
                profile: gs.profile,
                m_omega: gs.m_omega,
            })
        }
        Regime::EnergyCritical => {
            let grid = default_aubin_talenti_grid(params.d()).map_err(solver)?;
            let w = explicit_aubin_talenti(params.d(), &grid).map_err(solver)?;
            Ok(Reference {
                profile: w.truncated(TRUNCATION_RADIUS),
                m_omega: w.e0_of_w,
            })
        }
    }
}

/// Read a radial profile file written by the ground-state subcommand.
pub fn read_profile_field(path: &std::path::Path, params: &Params) -> Result<Field, CliError> {
    let f = File::open(path)
        .map_err(|e| CliError::Validation(format!("cannot open {}: {e}", path.display())))?;
    let pf = read_profile(BufReader::new(f))?;
    if pf.d != params.d() {
        return Err(CliError::Validation(format!(
            "profile file is for d = {}, config has d = {}",
            pf.d,
            params.d()
        )));
    }
    Ok(pf.to_field()?)
}

pub fn resolve(
    data: &InitialData,
    params: &Params,
    grid: Arc<Grid>,
    reference: &Reference,
) -> Result<Field, CliError> {
    let on_grid = |f: &Field| radial_to_grid(f, grid.clone()).map_err(solver);
    let u = match data {
        InitialData::GroundStateMultiple { c } => on_grid(&reference.profile)?.scaled_re(*c),
        InitialData::DilatedGroundState { eps } => {
            let q = on_grid(&reference.profile)?;
            functionals::rescale(&q, 1.0 / eps, ScalingMode::MassInvariant).map_err(solver)?
        }
        InitialData::Gaussian { amplitude, width } => {
            Profile::gaussian(*amplitude, *width).sample(grid.clone())
        }
        InitialData::File { path } => on_grid(&read_profile_field(path, params)?)?,
    };
    Ok(u)
}
