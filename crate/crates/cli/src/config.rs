//! Experiment configuration, read from TOML.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use nls_core::diagnostics::{CutoffKind, ScatterCriteria};
use nls_core::evolution::EvolveControls;
use nls_core::{CartesianGrid, Grid, Params, RadialGrid};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: ParamsSpec,
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_data: Option<InitialData>,
    #[serde(default)]
    pub controls: EvolveControls,
    #[serde(default)]
    pub diagnostics: DiagnosticsSpec,
    #[serde(default)]
    pub verify: VerifySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub d: usize,
    pub p: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSpec {
    /// `n^d` points on the periodic box `[-half_length, half_length)^d`
    Cartesian { n: usize, half_length: f64 },
    /// `n` nodes on `[0, r_max]`
    Radial { n: usize, r_max: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// `c Q`; for the energy-critical case the truncated `W` replaces `Q`.
    GroundStateMultiple { c: f64 },
    /// `ε^{-d/2} Q(x/ε)`
    DilatedGroundState { eps: f64 },
    Gaussian { amplitude: f64, width: f64 },
    /// Radial profile in the ground-state file format; relative paths are
    /// resolved against the config file.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsSpec {
    /// Record the localized virial with this cutoff.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub virial_cutoff: Option<CutoffKind>,
    pub virial_radius: f64,
    pub plots: bool,
    pub scatter: ScatterCriteria,
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        Self {
            virial_cutoff: None,
            virial_radius: 3.0,
            plots: false,
            scatter: ScatterCriteria::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySpec {
    pub random_bumps: usize,
    pub lambda_fields: usize,
    pub trapping_samples: usize,
    /// Separations in units of the profile width.
    pub decoupling_separations: Vec<f64>,
    pub sobolev_fields: usize,
    pub sobolev_radii: Vec<f64>,
    pub virial_run: bool,
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self {
            random_bumps: 20,
            lambda_fields: 10,
            trapping_samples: 50,
            decoupling_separations: vec![10.0, 20.0, 40.0],
            sobolev_fields: 10,
            sobolev_radii: vec![2.0, 4.0, 8.0],
            virial_run: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepCommand {
    GroundState,
    Classify,
    Evolve,
}

/// One config per value of a dotted key, e.g. `initial_data.c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub command: SweepCommand,
    pub parameter: String,
    pub values: Vec<toml::Value>,
}

impl GridSpec {
    pub fn build(&self, d: usize) -> Result<Arc<Grid>, CliError> {
        let g: Grid = match *self {
            GridSpec::Cartesian { n, half_length } => CartesianGrid::new(d, n, half_length)?.into(),
            GridSpec::Radial { n, r_max } => RadialGrid::new(d, n, r_max)?.into(),
        };
        Ok(Arc::new(g))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(InitialData::File { path: p }) = &mut cfg.initial_data {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn params(&self) -> Result<Params, CliError> {
        Ok(Params::new(self.params.d, self.params.p, self.params.omega)?)
    }

    /// Checks shared by every subcommand.
    pub fn validate(&self) -> Result<(Params, Arc<Grid>), CliError> {
        let params = self.params()?;
        let grid = self.grid.build(params.d())?;
        self.controls.validate()?;
        let dg = &self.diagnostics;
        if !(dg.virial_radius > 0.0 && dg.virial_radius.is_finite()) {
            return Err(CliError::Validation(format!(
                "virial_radius must be positive, got {}",
                dg.virial_radius
            )));
        }
        let sc = &dg.scatter;
        for (name, v) in [
            ("tail_fraction", sc.tail_fraction),
            ("increment_share", sc.increment_share),
            ("amplitude_ratio", sc.amplitude_ratio),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(CliError::Validation(format!("scatter.{name} must lie in (0, 1), got {v}")));
            }
        }
        if let Some(data) = &self.initial_data {
            data.validate()?;
        }
        let vs = &self.verify;
        if vs.decoupling_separations.iter().any(|s| !(*s > 0.0 && *s < 60.0)) {
            return Err(CliError::Validation("decoupling separations must lie in (0, 60)".into()));
        }
        if vs.sobolev_radii.iter().any(|r| !(*r > 0.0 && *r < 20.0)) {
            return Err(CliError::Validation("sobolev radii must lie in (0, 20)".into()));
        }
        Ok((params, grid))
    }

    /// The initial data, or a validation error naming the subcommand.
    pub fn data(&self, cmd: &str) -> Result<&InitialData, CliError> {
        self.initial_data
            .as_ref()
            .ok_or_else(|| CliError::Validation(format!("{cmd} needs an [initial_data] section")))
    }

    /// Config with `key` (dotted path) set to `value`.
    pub fn with_override(&self, key: &str, value: &toml::Value) -> Result<Self, CliError> {
        let mut root = toml::Value::try_from(self)
            .map_err(|e| CliError::Validation(format!("config: {e}")))?;
        let mut node = &mut root;
        let parts: Vec<&str> = key.split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            let table = node
                .as_table_mut()
                .ok_or_else(|| CliError::Validation(format!("sweep key {key}: {part} is not a table")))?;
            if i + 1 == parts.len() {
                table.insert(part.to_string(), value.clone());
                break;
            }
            node = table.entry(part.to_string()).or_insert_with(|| toml::Value::Table(Default::default()));
        }
        let mut cfg: Self = root
            .try_into()
            .map_err(|e| CliError::Validation(format!("sweep value {value} for {key}: {e}")))?;
        cfg.sweep = None;
        Ok(cfg)
    }
}

impl InitialData {
    fn validate(&self) -> Result<(), CliError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CliError::Validation(format!("initial_data.{name} must be positive, got {v}")))
            }
        };
        match self {
            InitialData::GroundStateMultiple { c } => {
                if c.is_finite() {
                    Ok(())
                } else {
                    Err(CliError::Validation(format!("initial_data.c must be finite, got {c}")))
                }
            }
            InitialData::DilatedGroundState { eps } => positive("eps", *eps),
            InitialData::Gaussian { amplitude, width } => {
                positive("width", *width)?;
                if amplitude.is_finite() {
                    Ok(())
                } else {
                    Err(CliError::Validation("initial_data.amplitude must be finite".into()))
                }
            }
            InitialData::File { path } => {
                if path.is_file() {
                    Ok(())
                } else {
                    Err(CliError::Validation(format!("initial data file {} not found", path.display())))
                }
            }
        }
    }
}
