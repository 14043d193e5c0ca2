//! Closed-form test profiles that can be sampled on any grid and rescaled
//! exactly.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::field::Field;
use crate::grid::Grid;

/// Which power of λ multiplies `φ(λx)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingMode {
    /// `λ^{d/2} φ(λx)`, preserves the L² norm.
    MassInvariant,
    /// `λ^{(d-2)/2} φ(λx)`, preserves the Ḣ¹ norm.
    EnergyInvariant,
}

impl ScalingMode {
    pub fn amplitude_power(self, d: usize) -> f64 {
        match self {
            ScalingMode::MassInvariant => d as f64 / 2.0,
            ScalingMode::EnergyInvariant => (d as f64 - 2.0) / 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `A exp(-|x-c|²/w²) exp(i(ξ·x + β|x-c|² + θ))`
    Gaussian {
        amplitude: f64,
        width: f64,
        center: [f64; 3],
        momentum: [f64; 3],
        chirp: f64,
        phase: f64,
    },
    /// `A sech(|x-c|/w) e^{iθ}`
    Sech {
        amplitude: f64,
        width: f64,
        center: [f64; 3],
        phase: f64,
    },
    Sum(Vec<Profile>),
}

impl Profile {
    pub fn gaussian(amplitude: f64, width: f64) -> Self {
        Profile::Gaussian {
            amplitude,
            width,
            center: [0.0; 3],
            momentum: [0.0; 3],
            chirp: 0.0,
            phase: 0.0,
        }
    }

    pub fn sech(amplitude: f64, width: f64, center: [f64; 3]) -> Self {
        Profile::Sech {
            amplitude,
            width,
            center,
            phase: 0.0,
        }
    }

    pub fn eval(&self, x: [f64; 3]) -> Complex64 {
        match self {
            Profile::Gaussian {
                amplitude,
                width,
                center,
                momentum,
                chirp,
                phase,
            } => {
                let r2: f64 = (0..3).map(|a| (x[a] - center[a]).powi(2)).sum();
                let kx: f64 = (0..3).map(|a| momentum[a] * x[a]).sum();
                Complex64::from_polar(amplitude * (-r2 / (width * width)).exp(), kx + chirp * r2 + phase)
            }
            Profile::Sech {
                amplitude,
                width,
                center,
                phase,
            } => {
                let r: f64 = (0..3).map(|a| (x[a] - center[a]).powi(2)).sum::<f64>().sqrt();
                Complex64::from_polar(amplitude / (r / width).cosh(), *phase)
            }
            Profile::Sum(parts) => parts.iter().map(|p| p.eval(x)).sum(),
        }
    }

    pub fn sample(&self, grid: Arc<Grid>) -> Field {
        Field::from_fn(grid, |x| self.eval(x)).with_tag("profile")
    }

    /// Exact `λ^a φ(λx)` in closed form.
    pub fn rescaled(&self, lambda: f64, mode: ScalingMode, d: usize) -> Profile {
        let amp = lambda.powf(mode.amplitude_power(d));
        match self {
            Profile::Gaussian {
                amplitude,
                width,
                center,
                momentum,
                chirp,
                phase,
            } => Profile::Gaussian {
                amplitude: amplitude * amp,
                width: width / lambda,
                center: center.map(|c| c / lambda),
                momentum: momentum.map(|k| k * lambda),
                chirp: chirp * lambda * lambda,
                phase: *phase,
            },
            Profile::Sech {
                amplitude,
                width,
                center,
                phase,
            } => Profile::Sech {
                amplitude: amplitude * amp,
                width: width / lambda,
                center: center.map(|c| c / lambda),
                phase: *phase,
            },
            Profile::Sum(parts) => {
                Profile::Sum(parts.iter().map(|p| p.rescaled(lambda, mode, d)).collect())
            }
        }
    }

    pub fn scaled_amplitude(&self, c: f64) -> Profile {
        let mut out = self.clone();
        out.scale_in_place(c);
        out
    }

    fn scale_in_place(&mut self, c: f64) {
        match self {
            Profile::Gaussian { amplitude, .. } | Profile::Sech { amplitude, .. } => *amplitude *= c,
            Profile::Sum(parts) => parts.iter_mut().for_each(|p| p.scale_in_place(c)),
        }
    }
}

/// Random smooth bump: one to three chirped Gaussians. Radial bumps are
/// centered at the origin with no momentum.
pub fn random_bump<R: Rng + ?Sized>(rng: &mut R, d: usize, radial: bool) -> Profile {
    let count = rng.gen_range(1..=3);
    let parts = (0..count)
        .map(|_| {
            let mut center = [0.0; 3];
            let mut momentum = [0.0; 3];
            if !radial {
                for a in 0..d {
                    center[a] = rng.gen_range(-1.0..1.0);
                    momentum[a] = rng.gen_range(-0.5..0.5);
                }
            }
            Profile::Gaussian {
                amplitude: rng.gen_range(0.2..1.5),
                width: rng.gen_range(0.6..1.6),
                center,
                momentum,
                chirp: rng.gen_range(-0.2..0.2),
                phase: rng.gen_range(0.0..std::f64::consts::TAU),
            }
        })
        .collect();
    Profile::Sum(parts)
}
