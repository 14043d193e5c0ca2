use serde::{Deserialize, Serialize};

use crate::error::{NlsError, Result};

/// Which variational threshold applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Subcritical,
    EnergyCritical,
}

/// Physical parameters `(d, p, omega)` of
/// `i u_t + Δu = |u|^{4/d} u - |u|^{p-1} u` with frequency `omega`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    d: usize,
    p: f64,
    omega: f64,
}

impl Params {
    pub fn new(d: usize, p: f64, omega: f64) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(NlsError::Params(format!("dimension {d} not in {{1,2,3}}")));
        }
        if !(omega.is_finite() && omega > 0.0) {
            return Err(NlsError::Params(format!("omega = {omega} must be > 0")));
        }
        let df = d as f64;
        let lower = 1.0 + 4.0 / df;
        if !(p.is_finite() && p > lower) {
            return Err(NlsError::Params(format!(
                "p = {p} must exceed the mass-critical exponent 1 + 4/d = {lower}"
            )));
        }
        if d == 3 && p > 1.0 + 4.0 / (df - 2.0) {
            return Err(NlsError::Params(format!(
                "p = {p} exceeds the energy-critical exponent 5 for d = 3"
            )));
        }
        Ok(Self { d, p, omega })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Same `(d, p)`, different frequency.
    pub fn with_omega(&self, omega: f64) -> Result<Self> {
        Self::new(self.d, self.p, omega)
    }

    pub fn regime(&self) -> Regime {
        if self.d >= 3 && self.p == 1.0 + 4.0 / (self.d as f64 - 2.0) {
            Regime::EnergyCritical
        } else {
            Regime::Subcritical
        }
    }

    /// Exponent of the defocusing mass-critical term, `2(d+2)/d`.
    pub fn mass_critical_exponent(&self) -> f64 {
        2.0 * (self.d as f64 + 2.0) / self.d as f64
    }

    /// `d(p-1)/2`, the degree of `‖T_λ u‖_{p+1}^{p+1}` in λ.
    pub fn focusing_scaling_degree(&self) -> f64 {
        self.d as f64 * (self.p - 1.0) / 2.0
    }

    /// `d(p-1)/(2(p+1))`, the coefficient of `∫|u|^{p+1}` in K.
    pub fn k_focusing_coeff(&self) -> f64 {
        self.d as f64 * (self.p - 1.0) / (2.0 * (self.p + 1.0))
    }

    /// `d/(d+2)`, the coefficient of the mass-critical integral in K.
    pub fn k_mass_critical_coeff(&self) -> f64 {
        self.d as f64 / (self.d as f64 + 2.0)
    }

    /// `(d(p-1)-4)/(d(p-1))`, the energy-trapping factor.
    pub fn trapping_factor(&self) -> f64 {
        let a = self.d as f64 * (self.p - 1.0);
        (a - 4.0) / a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn admissibility() {
        assert!(Params::new(1, 5.0, 1.0).is_err());
        assert!(Params::new(1, 5.0000001, 1.0).is_ok());
        assert!(Params::new(2, 3.0, 1.0).is_err());
        assert!(Params::new(3, 1.0 + 4.0 / 3.0, 1.0).is_err());
        assert!(Params::new(3, 5.1, 1.0).is_err());
        assert!(Params::new(4, 3.0, 1.0).is_err());
        assert!(Params::new(1, 7.0, 0.0).is_err());
        assert_eq!(Params::new(3, 5.0, 1.0).unwrap().regime(), Regime::EnergyCritical);
        assert_eq!(Params::new(3, 4.0, 1.0).unwrap().regime(), Regime::Subcritical);
        assert_eq!(Params::new(2, 50.0, 1.0).unwrap().regime(), Regime::Subcritical);
    }
}
