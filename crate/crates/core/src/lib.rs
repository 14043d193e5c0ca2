//! Variational machinery and split-step dynamics for
//! `i u_t + Δu = |u|^{4/d} u - |u|^{p-1} u` on ℝ^d, d ≤ 3.

pub mod error;
pub mod exec;
pub mod field;
pub mod grid;
pub mod params;
pub mod quadrature;
pub mod special;
pub mod spectral;

pub use error::{NlsError, Result};
pub use field::Field;
pub use grid::{CartesianGrid, Grid, RadialGrid};
pub use params::{Params, Regime};
pub mod functionals;
pub mod interp;
pub mod profiles;
pub mod groundstate;
pub mod diagnostics;
pub mod evolution;
