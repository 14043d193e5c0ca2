use serde::{Deserialize, Serialize};

use super::{evaluate, with_phase, FunctionalBundle};
use crate::error::{NlsError, Result};
use crate::field::Field;
use crate::params::Params;
use crate::spectral;

/// Profiles placed at translations `x_j`, phases `θ_j` and time shifts `t_j`,
/// plus a remainder.
#[derive(Debug, Clone)]
pub struct DecouplingScenario {
    pub profiles: Vec<Field>,
    pub translations: Vec<[f64; 3]>,
    pub phases: Vec<f64>,
    pub time_shifts: Vec<f64>,
    pub remainder: Option<Field>,
}

impl DecouplingScenario {
    /// `|x_j - x_m| + |t_j - t_m|` for every pair `j < m`.
    pub fn separations(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for j in 0..self.profiles.len() {
            for m in j + 1..self.profiles.len() {
                let dx: f64 = (0..3)
                    .map(|a| (self.translations[j][a] - self.translations[m][a]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                out.push((j, m, dx + (self.time_shifts[j] - self.time_shifts[m]).abs()));
            }
        }
        out
    }

    fn validate(&self) -> Result<()> {
        let k = self.profiles.len();
        if k == 0 {
            return Err(NlsError::Argument("scenario has no profiles".into()));
        }
        if self.translations.len() != k || self.phases.len() != k || self.time_shifts.len() != k {
            return Err(NlsError::Argument(
                "translations, phases and time shifts must match the profile count".into(),
            ));
        }
        let first = &self.profiles[0];
        for f in self.profiles.iter().skip(1).chain(self.remainder.iter()) {
            first.same_grid(f)?;
        }
        let g = first
            .grid()
            .as_cartesian()
            .ok_or_else(|| NlsError::GridMismatch("decoupling needs a cartesian grid".into()))?;
        for x in &self.translations {
            if x[..g.d()].iter().any(|v| v.abs() >= g.half_length()) {
                return Err(NlsError::SupportOverflow(1.0));
            }
        }
        Ok(())
    }

    /// The placed profile `e^{iθ_j} e^{-it_jΔ} φ^j(· - x_j)`.
    pub fn component(&self, j: usize) -> Result<Field> {
        let shifted = spectral::translate(&self.profiles[j], self.translations[j])?;
        let moved = spectral::free_propagate(&shifted, -self.time_shifts[j])?;
        Ok(with_phase(&moved, self.phases[j]))
    }

    /// `Σ_j component_j + w`.
    pub fn assemble(&self) -> Result<Field> {
        self.validate()?;
        let mut total = self.component(0)?;
        for j in 1..self.profiles.len() {
            total = total.add(&self.component(j)?)?;
        }
        if let Some(w) = &self.remainder {
            total = total.add(w)?;
        }
        Ok(total.with_tag("decoupling"))
    }
}

/// Additivity defect of each decoupled quantity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FunctionalDefects {
    pub mass: f64,
    pub gradient: f64,
    pub energy: f64,
    pub s_omega: f64,
    pub k: f64,
    pub h_omega: f64,
}

impl FunctionalDefects {
    pub fn as_array(&self) -> [(&'static str, f64); 6] {
        [
            ("mass", self.mass),
            ("gradient", self.gradient),
            ("energy", self.energy),
            ("s_omega", self.s_omega),
            ("k", self.k),
            ("h_omega", self.h_omega),
        ]
    }

    pub fn max(&self) -> f64 {
        self.as_array().iter().fold(0.0, |m, (_, v)| m.max(*v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecouplingReport {
    pub defects: FunctionalDefects,
    pub whole: FunctionalBundle,
    pub separations: Vec<(usize, usize, f64)>,
}

pub fn decoupling_check(s: &DecouplingScenario, params: &Params) -> Result<DecouplingReport> {
    let whole_field = s.assemble()?;
    let whole = evaluate(&whole_field, params)?;
    let mut parts = Vec::with_capacity(s.profiles.len() + 1);
    for j in 0..s.profiles.len() {
        parts.push(evaluate(&s.component(j)?, params)?);
    }
    if let Some(w) = &s.remainder {
        parts.push(evaluate(w, params)?);
    }
    let defect = |f: fn(&FunctionalBundle) -> f64| {
        (f(&whole) - parts.iter().map(f).sum::<f64>()).abs()
    };
    Ok(DecouplingReport {
        defects: FunctionalDefects {
            mass: defect(|b| b.mass),
            gradient: defect(|b| b.k_quadratic),
            energy: defect(|b| b.energy),
            s_omega: defect(|b| b.s_omega),
            k: defect(|b| b.k),
            h_omega: defect(|b| b.h_omega),
        },
        whole,
        separations: s.separations(),
    })
}
