//! Columnar text format for radial profiles.

use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{NlsError, Result};
use crate::field::Field;
use crate::grid::{Grid, RadialGrid};

use super::{AubinTalenti, GroundState};

/// Header values and columns of a profile file.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileFile {
    pub d: usize,
    pub p: f64,
    pub omega: f64,
    pub m_omega: f64,
    pub q0: f64,
    pub residual_sup: f64,
    pub r: Vec<f64>,
    pub q: Vec<f64>,
}

impl ProfileFile {
    pub fn from_ground_state(gs: &GroundState) -> Self {
        Self {
            d: gs.params.d(),
            p: gs.params.p(),
            omega: gs.omega,
            m_omega: gs.m_omega,
            q0: gs.q0,
            residual_sup: gs.residual_sup,
            r: gs.grid().nodes().to_vec(),
            q: gs.values(),
        }
    }

    /// `W` is written with `p = 5` and `ω = 0`.
    pub fn from_aubin_talenti(w: &AubinTalenti) -> Self {
        Self {
            d: w.d,
            p: 5.0,
            omega: 0.0,
            m_omega: w.e0_of_w,
            q0: w.profile.values()[0].re,
            residual_sup: w.residual_sup,
            r: w.grid().nodes().to_vec(),
            q: w.profile.values().iter().map(|z| z.re).collect(),
        }
    }

    /// Rebuild the radial field; the nodes must be those of a uniform grid.
    pub fn to_field(&self) -> Result<Field> {
        let n = self.r.len();
        let r_max = *self
            .r
            .last()
            .ok_or_else(|| NlsError::Io("empty profile".into()))?;
        let g = RadialGrid::new(self.d, n, r_max)?;
        if g.nodes() != self.r.as_slice() {
            return Err(NlsError::Io("profile nodes are not a uniform grid from 0".into()));
        }
        let vals = self.q.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Field::new(Arc::new(Grid::Radial(g)), vals, "Q")
    }
}

fn io_err(e: std::io::Error) -> NlsError {
    NlsError::Io(e.to_string())
}

pub fn write_profile<W: Write>(out: &mut W, f: &ProfileFile) -> Result<()> {
    writeln!(out, "# d = {}", f.d).map_err(io_err)?;
    for (k, v) in [
        ("p", f.p),
        ("omega", f.omega),
        ("m_omega", f.m_omega),
        ("Q0", f.q0),
        ("residual_sup", f.residual_sup),
    ] {
        writeln!(out, "# {k} = {v:.16e}").map_err(io_err)?;
    }
    writeln!(out, "# r, Q(r)").map_err(io_err)?;
    for (r, q) in f.r.iter().zip(&f.q) {
        writeln!(out, "{r:.16e}, {q:.16e}").map_err(io_err)?;
    }
    Ok(())
}

pub fn read_profile<R: BufRead>(input: R) -> Result<ProfileFile> {
    let mut f = ProfileFile {
        d: 0,
        p: f64::NAN,
        omega: f64::NAN,
        m_omega: f64::NAN,
        q0: f64::NAN,
        residual_sup: f64::NAN,
        r: Vec::new(),
        q: Vec::new(),
    };
    let num = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|e| NlsError::Io(format!("bad number {s:?}: {e}")))
    };
    for line in input.lines() {
        let line = line.map_err(io_err)?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(h) = line.strip_prefix('#') {
            let Some((k, v)) = h.split_once('=') else {
                continue;
            };
            match k.trim() {
                "d" => {
                    f.d = v
                        .trim()
                        .parse()
                        .map_err(|e| NlsError::Io(format!("bad dimension: {e}")))?
                }
                "p" => f.p = num(v)?,
                "omega" => f.omega = num(v)?,
                "m_omega" => f.m_omega = num(v)?,
                "Q0" => f.q0 = num(v)?,
                "residual_sup" => f.residual_sup = num(v)?,
                other => return Err(NlsError::Io(format!("unknown header key {other:?}"))),
            }
            continue;
        }
        let (a, b) = line
            .split_once(',')
            .ok_or_else(|| NlsError::Io(format!("expected 'r, Q' row, got {line:?}")))?;
        f.r.push(num(a)?);
        f.q.push(num(b)?);
    }
    if f.d == 0 {
        return Err(NlsError::Io("missing dimension header".into()));
    }
    Ok(f)
}
