use serde::{Deserialize, Serialize};

use crate::error::{NlsError, Result};
use crate::grid::Grid;

use super::poly::Poly;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffKind {
    /// `|x|²` on the unit ball, blended to 0 over `1 ≤ |x| ≤ 2`.
    Scattering,
    /// `r²` for `r ≤ 1`, slope blended from `2r` to 0 over `[1, 3]`, constant after.
    Blowup,
}

/// Radial profile `φ(s)` with its first four derivatives, piecewise polynomial.
#[derive(Debug, Clone)]
pub struct CutoffProfile {
    kind: CutoffKind,
    /// derivatives 0..=4 on the transition interval
    blend: Vec<Poly>,
    outer: f64,
    plateau: f64,
}

fn smoothstep_poly() -> Poly {
    Poly(vec![0.0, 0.0, 0.0, 10.0, -15.0, 6.0])
}

impl CutoffProfile {
    pub fn new(kind: CutoffKind) -> Self {
        let s = smoothstep_poly();
        let one = Poly::constant(1.0);
        match kind {
            CutoffKind::Scattering => {
                let blend = Poly(vec![0.0, 0.0, 1.0])
                    .mul(&one.add(&s.compose(&Poly::linear(-1.0, 1.0)).scale(-1.0)));
                Self {
                    kind,
                    blend: blend.derivatives(5),
                    outer: 2.0,
                    plateau: 0.0,
                }
            }
            CutoffKind::Blowup => {
                let slope = Poly::linear(0.0, 2.0)
                    .mul(&one.add(&s.compose(&Poly::linear(-0.5, 0.5)).scale(-1.0)));
                let blend = slope.integral_from(1.0).add(&one);
                let plateau = blend.eval(3.0);
                Self {
                    kind,
                    blend: blend.derivatives(5),
                    outer: 3.0,
                    plateau,
                }
            }
        }
    }

    pub fn kind(&self) -> CutoffKind {
        self.kind
    }

    /// Radius beyond which `φ` is constant.
    pub fn outer(&self) -> f64 {
        self.outer
    }

    /// `[φ, φ', φ'', φ''', φ'''']` at `s ≥ 0`.
    pub fn eval(&self, s: f64) -> [f64; 5] {
        if s <= 1.0 {
            [s * s, 2.0 * s, 2.0, 0.0, 0.0]
        } else if s >= self.outer {
            [self.plateau, 0.0, 0.0, 0.0, 0.0]
        } else {
            let mut out = [0.0; 5];
            for (o, p) in out.iter_mut().zip(&self.blend) {
                *o = p.eval(s);
            }
            out
        }
    }
}

/// `φ_R(x) = R² φ(|x|/R)` and the derived quantities needed by the virial
/// identities, sampled on a grid.
#[derive(Debug, Clone)]
pub struct CutoffWeight {
    pub kind: CutoffKind,
    pub radius: f64,
    pub d: usize,
    pub phi: Vec<f64>,
    /// `φ_R'(r) / r`, so that `∇φ_R = (φ_R'/r) x`
    pub slope_over_r: Vec<f64>,
    /// `φ_R''`
    pub second: Vec<f64>,
    pub laplacian: Vec<f64>,
    /// Pointwise `Δ²φ_R`. The quintic blend makes `φ` only C², so this misses
    /// surface terms at the knots and the virial identity integrates
    /// `Δφ_R Δ|u|²` instead.
    pub bilaplacian: Vec<f64>,
}

impl CutoffWeight {
    pub fn new(kind: CutoffKind, radius: f64, grid: &Grid) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(NlsError::Argument(format!("cutoff radius must be > 0, got {radius}")));
        }
        let prof = CutoffProfile::new(kind);
        let d = grid.d();
        let dm = d as f64 - 1.0;
        let n = grid.len();
        let mut w = Self {
            kind,
            radius,
            d,
            phi: Vec::with_capacity(n),
            slope_over_r: Vec::with_capacity(n),
            second: Vec::with_capacity(n),
            laplacian: Vec::with_capacity(n),
            bilaplacian: Vec::with_capacity(n),
        };
        for i in 0..n {
            let r = grid.radius(i);
            let s = r / radius;
            let [f0, f1, f2, f3, f4] = prof.eval(s);
            let phi = radius * radius * f0;
            let d1 = radius * f1;
            let d2 = f2;
            let d3 = f3 / radius;
            let d4 = f4 / (radius * radius);
            let (sor, lap, bilap) = if s <= 1.0 {
                (2.0, 2.0 * d as f64, 0.0)
            } else {
                (
                    d1 / r,
                    d2 + dm * d1 / r,
                    d4 + 2.0 * dm * d3 / r + dm * (dm - 2.0) * (d2 / (r * r) - d1 / (r * r * r)),
                )
            };
            w.phi.push(phi);
            w.slope_over_r.push(sor);
            w.second.push(d2);
            w.laplacian.push(lap);
            w.bilaplacian.push(bilap);
        }
        Ok(w)
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    /// Hessian `∂_j∂_k φ_R = a δ_jk + b x_j x_k` as `(a, b)` at node `i`
    /// located at `x`.
    pub fn hessian_parts(&self, i: usize, r: f64) -> (f64, f64) {
        let a = self.slope_over_r[i];
        let b = if r > 0.0 {
            (self.second[i] - a) / (r * r)
        } else {
            0.0
        };
        (a, b)
    }
}
