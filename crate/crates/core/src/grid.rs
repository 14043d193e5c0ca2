//! Periodic cartesian boxes and radial half-lines.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{NlsError, Result};
use crate::spectral::FftPlan;

/// Periodic box `[-L, L)^d` with `n` points per axis.
pub struct CartesianGrid {
    d: usize,
    n: usize,
    half_length: f64,
    plan: OnceLock<Arc<FftPlan>>,
}

impl CartesianGrid {
    pub fn new(d: usize, n: usize, half_length: f64) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(NlsError::UnsupportedDimension(d));
        }
        if n < 16 || !n.is_power_of_two() {
            return Err(NlsError::Grid(format!(
                "points per axis must be a power of two >= 16, got {n}"
            )));
        }
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(NlsError::Grid(format!(
                "box half-length must be positive, got {half_length}"
            )));
        }
        Ok(Self {
            d,
            n,
            half_length,
            plan: OnceLock::new(),
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.n as f64
    }

    /// Total number of points, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.d as i32)
    }

    /// Volume of the periodic box, `(2L)^d`.
    pub fn box_volume(&self) -> f64 {
        (2.0 * self.half_length).powi(self.d as i32)
    }

    /// Coordinate of index `j` along any axis.
    #[inline]
    pub fn coord(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.spacing()
    }

    /// Per-axis indices of flat index `i` (row-major, last axis fastest).
    #[inline]
    pub fn multi_index(&self, i: usize) -> [usize; 3] {
        let b = self.n.trailing_zeros();
        let mask = self.n - 1;
        match self.d {
            1 => [i, 0, 0],
            2 => [i >> b, i & mask, 0],
            _ => [i >> (2 * b), (i >> b) & mask, i & mask],
        }
    }

    /// Position of flat index `i`; unused components are zero.
    #[inline]
    pub fn point(&self, i: usize) -> [f64; 3] {
        let m = self.multi_index(i);
        let mut x = [0.0; 3];
        for (a, xa) in x.iter_mut().enumerate().take(self.d) {
            *xa = self.coord(m[a]);
        }
        x
    }

    #[inline]
    pub fn radius(&self, i: usize) -> f64 {
        let x = self.point(i);
        (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
    }

    /// Wavenumber `(π/L) m` of FFT-ordered index `j`, `m ∈ {-n/2, …, n/2-1}`.
    #[inline]
    pub fn wavenumber(&self, j: usize) -> f64 {
        let m = if j < self.n / 2 {
            j as f64
        } else {
            j as f64 - self.n as f64
        };
        PI / self.half_length * m
    }

    /// Wave vector of flat spectral index `i`.
    #[inline]
    pub fn wavevector(&self, i: usize) -> [f64; 3] {
        let m = self.multi_index(i);
        let mut k = [0.0; 3];
        for (a, ka) in k.iter_mut().enumerate().take(self.d) {
            *ka = self.wavenumber(m[a]);
        }
        k
    }

    /// Wave vector for odd-order derivatives: the unpaired Nyquist component
    /// is set to zero so real fields keep real derivatives.
    #[inline]
    pub fn odd_wavevector(&self, i: usize) -> [f64; 3] {
        let m = self.multi_index(i);
        let mut k = [0.0; 3];
        for (a, ka) in k.iter_mut().enumerate().take(self.d) {
            if m[a] != self.n / 2 {
                *ka = self.wavenumber(m[a]);
            }
        }
        k
    }

    #[inline]
    pub fn k_squared(&self, i: usize) -> f64 {
        let k = self.wavevector(i);
        k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
    }

    /// Largest representable wavenumber, `π n / (2L)`.
    pub fn k_max(&self) -> f64 {
        PI / self.half_length * (self.n / 2) as f64
    }

    pub(crate) fn plan(&self) -> Arc<FftPlan> {
        self.plan
            .get_or_init(|| Arc::new(FftPlan::new(self.n)))
            .clone()
    }
}

impl Clone for CartesianGrid {
    fn clone(&self) -> Self {
        Self {
            d: self.d,
            n: self.n,
            half_length: self.half_length,
            plan: self.plan.clone(),
        }
    }
}

impl PartialEq for CartesianGrid {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d && self.n == other.n && self.half_length == other.half_length
    }
}

impl fmt::Debug for CartesianGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CartesianGrid")
            .field("d", &self.d)
            .field("n", &self.n)
            .field("half_length", &self.half_length)
            .finish()
    }
}

/// Surface area of the unit sphere `S^{d-1}`.
pub fn unit_sphere_area(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        4 => 2.0 * PI * PI,
        _ => {
            // 2 π^{d/2} / Γ(d/2)
            2.0 * PI.powf(d as f64 / 2.0) / crate::special::gamma_half_integer(d)
        }
    }
}

/// Gregory end corrections to the trapezoid rule (exact for cubics).
const GREGORY: [f64; 3] = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];

fn gregory_weights(count: usize) -> Vec<f64> {
    let mut g = vec![1.0; count];
    if count >= 6 {
        for (k, &c) in GREGORY.iter().enumerate() {
            g[k] = c;
            g[count - 1 - k] = c;
        }
    } else if count >= 2 {
        g[0] = 0.5;
        g[count - 1] = 0.5;
    } else if count == 1 {
        g[0] = 0.0;
    }
    g
}

/// Uniform nodes `r_i = i h` on `[0, r_max]` for radial functions on ℝ^d.
///
/// Weights integrate `∫_{ℝ^d} f(|x|) dx = |S^{d-1}| ∫_0^∞ f(r) r^{d-1} dr`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    d: usize,
    h: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl RadialGrid {
    pub fn new(d: usize, n: usize, r_max: f64) -> Result<Self> {
        if !(1..=4).contains(&d) {
            return Err(NlsError::UnsupportedDimension(d));
        }
        if n < 16 {
            return Err(NlsError::Grid(format!("radial grid needs >= 16 nodes, got {n}")));
        }
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(NlsError::Grid(format!("r_max must be positive, got {r_max}")));
        }
        let h = r_max / (n - 1) as f64;
        let nodes: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        let weights = Self::build_weights(d, h, &nodes, 0);
        Ok(Self {
            d,
            h,
            nodes,
            weights,
        })
    }

    /// Grid with spacing as close to `h` as possible reaching exactly `r_max`.
    pub fn with_spacing(d: usize, h: f64, r_max: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(NlsError::Grid(format!("spacing must be positive, got {h}")));
        }
        let n = (r_max / h).round() as usize + 1;
        Self::new(d, n, r_max)
    }

    fn build_weights(d: usize, h: f64, nodes: &[f64], start: usize) -> Vec<f64> {
        let area = unit_sphere_area(d);
        let g = gregory_weights(nodes.len() - start);
        let mut w = vec![0.0; nodes.len()];
        for (k, gk) in g.into_iter().enumerate() {
            let r = nodes[start + k];
            w[start + k] = area * r.powi(d as i32 - 1) * h * gk;
        }
        w
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Index of the first node with `r_i >= r` (within rounding).
    pub fn index_at_or_above(&self, r: f64) -> usize {
        let i = ((r / self.h) - 1e-9).ceil().max(0.0) as usize;
        i.min(self.len() - 1)
    }

    /// Weights for `∫_{|x| >= r_i0}`, zero below node `i0`.
    pub fn exterior_weights(&self, i0: usize) -> Vec<f64> {
        Self::build_weights(self.d, self.h, &self.nodes, i0)
    }

    /// Same nodes, different ambient dimension.
    pub fn with_dimension(&self, d: usize) -> Result<Self> {
        Self::new(d, self.len(), self.r_max())
    }
}

/// Either kind of spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Cartesian(CartesianGrid),
    Radial(RadialGrid),
}

impl Grid {
    pub fn d(&self) -> usize {
        match self {
            Grid::Cartesian(g) => g.d(),
            Grid::Radial(g) => g.d(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Grid::Cartesian(g) => g.len(),
            Grid::Radial(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Distance from the origin of point `i`.
    pub fn radius(&self, i: usize) -> f64 {
        match self {
            Grid::Cartesian(g) => g.radius(i),
            Grid::Radial(g) => g.nodes[i],
        }
    }

    pub fn as_cartesian(&self) -> Option<&CartesianGrid> {
        match self {
            Grid::Cartesian(g) => Some(g),
            Grid::Radial(_) => None,
        }
    }

    pub fn as_radial(&self) -> Option<&RadialGrid> {
        match self {
            Grid::Radial(g) => Some(g),
            Grid::Cartesian(_) => None,
        }
    }
}

impl From<CartesianGrid> for Grid {
    fn from(g: CartesianGrid) -> Self {
        Grid::Cartesian(g)
    }
}

impl From<RadialGrid> for Grid {
    fn from(g: RadialGrid) -> Self {
        Grid::Radial(g)
    }
}
