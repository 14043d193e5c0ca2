use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{NlsError, Result};
use crate::exec;
use crate::grid::Grid;

/// Complex samples aligned with a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
    tag: String,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<Complex64>, tag: impl Into<String>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(NlsError::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self::from_parts(grid, values, tag))
    }

    pub(crate) fn from_parts(grid: Arc<Grid>, values: Vec<Complex64>, tag: impl Into<String>) -> Self {
        Self {
            grid,
            values,
            tag: tag.into(),
        }
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        Self::from_parts(grid, vec![Complex64::new(0.0, 0.0); n], "zero")
    }

    /// Sample `f` at every grid point. Radial grids pass `[r, 0, 0]`.
    pub fn from_fn<F>(grid: Arc<Grid>, f: F) -> Self
    where
        F: Fn([f64; 3]) -> Complex64 + Sync,
    {
        let values = match grid.as_ref() {
            Grid::Cartesian(g) => exec::map_range(g.len(), |i| f(g.point(i))),
            Grid::Radial(g) => g.nodes().iter().map(|&r| f([r, 0.0, 0.0])).collect(),
        };
        Self::from_parts(grid, values, "sampled")
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn grid_handle(&self) -> Arc<Grid> {
        self.grid.clone()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = tag.into();
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn ensure_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(NlsError::NonFinite)
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    pub fn same_grid(&self, other: &Field) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid {
            Ok(())
        } else {
            Err(NlsError::GridMismatch("fields live on different grids".into()))
        }
    }

    pub fn scaled(&self, c: Complex64) -> Field {
        let mut out = self.clone();
        exec::for_each_mut(&mut out.values, |_, v| *v *= c);
        out
    }

    pub fn scaled_re(&self, c: f64) -> Field {
        self.scaled(Complex64::new(c, 0.0))
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.same_grid(other)?;
        let mut out = self.clone();
        exec::for_each_mut(&mut out.values, |i, v| *v += other.values[i]);
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.norm_sqr())).sqrt()
    }

    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).norm_sqr()))
            .sqrt()
    }

    /// Largest `|u|` on the outermost layer of the box, or at the last radial node.
    pub fn boundary_amplitude(&self) -> f64 {
        match self.grid.as_ref() {
            Grid::Cartesian(g) => {
                let n = g.n();
                (0..g.len())
                    .filter(|&i| {
                        let m = g.multi_index(i);
                        m[..g.d()].iter().any(|&j| j == 0 || j == n - 1)
                    })
                    .fold(0.0f64, |acc, i| acc.max(self.values[i].norm_sqr()))
                    .sqrt()
            }
            Grid::Radial(_) => self.values.last().map_or(0.0, |v| v.norm()),
        }
    }
}
