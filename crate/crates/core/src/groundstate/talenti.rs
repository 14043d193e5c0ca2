use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{NlsError, Result};
use crate::field::Field;
use crate::grid::{Grid, RadialGrid};
use crate::special::{sharp_sobolev_constant, smoothstep};

/// Outer radius of the default grid for `W`.
pub const DEFAULT_W_EXTENT: f64 = 120.0;
/// Inner radius of the smooth truncation used when an H¹ representative is needed.
pub const TRUNCATION_RADIUS: f64 = 50.0;

/// Grid used for `W` unless the caller supplies one.
pub fn default_grid(d: usize) -> Result<RadialGrid> {
    RadialGrid::with_spacing(d, 0.01, DEFAULT_W_EXTENT)
}

/// `W(r) = (1 + r²/3)^{-1/2}` and its first two derivatives.
pub fn aubin_talenti_value(r: f64) -> (f64, f64, f64) {
    let s = 1.0 + r * r / 3.0;
    let w = s.powf(-0.5);
    let w1 = -(r / 3.0) * s.powf(-1.5);
    let w2 = -(1.0 / 3.0) * s.powf(-1.5) + (r * r / 3.0) * s.powf(-2.5);
    (w, w1, w2)
}

/// The explicit extremal of the sharp Sobolev inequality in d = 3.
#[derive(Debug, Clone)]
pub struct AubinTalenti {
    pub profile: Field,
    pub d: usize,
    pub e0_of_w: f64,
    pub sobolev_constant: f64,
    /// `sup |ΔW + W⁵|` from the closed-form derivatives.
    pub residual_sup: f64,
    /// `∫|∇W|²` over all of ℝ³, grid part plus closed-form tail.
    pub grad_norm_sq: f64,
    /// `∫W⁶` over all of ℝ³.
    pub crit_norm: f64,
}

impl AubinTalenti {
    pub fn grid(&self) -> &RadialGrid {
        self.profile.grid().as_radial().expect("radial profile")
    }

    /// `(∫_{|x|>R}|∇W|², ∫_{|x|>R}W⁶)` in closed form.
    pub fn tail_integrals(r: f64) -> (f64, f64) {
        // r = √3 tan θ turns both integrands into trigonometric polynomials
        let th = (r / 3f64.sqrt()).atan();
        let g = |t: f64| 3.0 * t / 8.0 - (2.0 * t).sin() / 4.0 + (4.0 * t).sin() / 32.0;
        let c = |t: f64| t / 8.0 - (4.0 * t).sin() / 32.0;
        let h = 0.5 * PI;
        let s3 = 3f64.sqrt();
        (
            4.0 * PI * s3 * (g(h) - g(th)),
            4.0 * PI * 3.0 * s3 * (c(h) - c(th)),
        )
    }

    /// `W` multiplied by a C² cutoff equal to 1 on `[0, r1]` and 0 beyond `2 r1`.
    pub fn truncated(&self, r1: f64) -> Field {
        let nodes = self.grid().nodes();
        let vals = self
            .profile
            .values()
            .iter()
            .zip(nodes)
            .map(|(w, &r)| w * (1.0 - smoothstep(r / r1 - 1.0)))
            .collect();
        Field::from_parts(self.profile.grid_handle(), vals, "W_trunc")
    }
}

/// Build `W` on `grid` and verify the stationary equation and the Sobolev identity.
pub fn explicit_aubin_talenti(d: usize, grid: &RadialGrid) -> Result<AubinTalenti> {
    if d != 3 {
        return Err(NlsError::UnsupportedDimension(d));
    }
    if grid.d() != 3 {
        return Err(NlsError::GridMismatch(format!("grid dimension {}", grid.d())));
    }
    let nodes = grid.nodes();
    let w = grid.weights();
    let mut vals = Vec::with_capacity(nodes.len());
    let (mut grad, mut crit, mut residual) = (0.0, 0.0, 0.0f64);
    for (i, &r) in nodes.iter().enumerate() {
        let (w0, w1, w2) = aubin_talenti_value(r);
        let lap = if r == 0.0 { 3.0 * w2 } else { w2 + 2.0 * w1 / r };
        residual = residual.max((lap + w0.powi(5)).abs());
        grad += w[i] * w1 * w1;
        crit += w[i] * w0.powi(6);
        vals.push(Complex64::new(w0, 0.0));
    }
    let (tg, tc) = AubinTalenti::tail_integrals(grid.r_max());
    let grad = grad + tg;
    let crit = crit + tc;
    let e0 = 0.5 * grad - crit / 6.0;
    let c = sharp_sobolev_constant(3);
    let expected = c.powi(-3) / 3.0;
    if residual > 1e-10 {
        return Err(NlsError::Argument(format!("W residual {residual:e} too large")));
    }
    if ((e0 - expected) / expected).abs() > 1e-8 {
        return Err(NlsError::Argument(format!(
            "E0(W) = {e0} disagrees with (1/3)C^-3 = {expected}"
        )));
    }
    let profile = Field::new(Arc::new(Grid::Radial(grid.clone())), vals, "W")?;
    Ok(AubinTalenti {
        profile,
        d,
        e0_of_w: e0,
        sobolev_constant: c,
        residual_sup: residual,
        grad_norm_sq: grad,
        crit_norm: crit,
    })
}
