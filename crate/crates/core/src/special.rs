//! Small special-function helpers.

use std::f64::consts::PI;

/// `Γ(k/2)` for positive integer `k`.
pub fn gamma_half_integer(k: usize) -> f64 {
    assert!(k > 0, "Γ(0) is undefined");
    let mut g = if k % 2 == 0 { 1.0 } else { PI.sqrt() };
    // Γ(1) = 1, Γ(1/2) = √π; step up by Γ(x+1) = x Γ(x)
    let mut x = if k % 2 == 0 { 1.0 } else { 0.5 };
    while 2.0 * x < k as f64 - 0.5 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Best constant `C_d*` in `‖φ‖_{L^{2d/(d-2)}} <= C_d* ‖∇φ‖_{L^2}` (d >= 3).
pub fn sharp_sobolev_constant(d: usize) -> f64 {
    assert!(d >= 3);
    let df = d as f64;
    let ratio = gamma_half_integer(2 * d) / gamma_half_integer(d);
    (PI * df * (df - 2.0)).sqrt().recip() * ratio.powf(1.0 / df)
}

/// `e^z K_ν(z)` for `z > 0`, from `K_ν(z) = ∫_0^∞ e^{-z cosh t} cosh(νt) dt`.
///
/// The trapezoid rule on this integrand converges geometrically in the step.
pub fn bessel_k_scaled(nu: f64, z: f64) -> f64 {
    assert!(z > 0.0);
    let dt = 0.02;
    let mut sum = 0.5;
    let mut k = 1;
    loop {
        let t = k as f64 * dt;
        let v = (-z * (t.cosh() - 1.0)).exp() * (nu * t).cosh();
        sum += v;
        if v < 1e-18 * sum {
            break;
        }
        k += 1;
    }
    sum * dt
}

/// Quintic smoothstep `6θ⁵ - 15θ⁴ + 10θ³` clamped to `[0, 1]`; C² at both ends.
pub fn smoothstep(theta: f64) -> f64 {
    let t = theta.clamp(0.0, 1.0);
    t * t * t * (t * (6.0 * t - 15.0) + 10.0)
}
