//! Non-uniform time grids and delta calculus on them.
//!
//! A grid is the finite strictly increasing sequence `t_0 < t_1 < ... < t_{n+2}`.
//! Step sizes `h_i = t_{i+1} - t_i` are computed once at construction and every
//! downstream routine reads the cached values, so repeated evaluations of the
//! same difference quotient are bit-identical.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    points: Vec<f64>,
    steps: Vec<f64>,
    h_min: f64,
    h_max: f64,
}

impl Grid {
    /// Builds a grid from explicit points. At least three points are required so
    /// that the difference equation has one interior row.
    pub fn new(points: Vec<f64>) -> Result<Grid> {
        if points.len() < 3 {
            return Err(Error::TooShort { len: points.len() });
        }
        if let Some((index, &value)) = points.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        let mut steps = Vec::with_capacity(points.len() - 1);
        for i in 0..points.len() - 1 {
            // exact comparison: a repeated point is a user error
            if points[i + 1] <= points[i] {
                return Err(Error::NonMonotonic { index: i + 1, prev: points[i], next: points[i + 1] });
            }
            let h = points[i + 1] - points[i];
            if !h.is_finite() {
                return Err(Error::NonFinite { index: i, value: h });
            }
            steps.push(h);
        }
        let h_min = steps.iter().copied().fold(f64::INFINITY, f64::min);
        let h_max = steps.iter().copied().fold(0.0, f64::max);
        Ok(Grid { points, steps, h_min, h_max })
    }

    /// `n + 3` equally spaced points from `a` to `b`.
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Grid> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::BadInterval { a, b });
        }
        let intervals = n + 2;
        let width = b - a;
        let mut points: Vec<f64> = (0..=intervals).map(|k| a + width * (k as f64) / (intervals as f64)).collect();
        points[intervals] = b;
        Grid::new(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    #[inline]
    pub fn t(&self, i: usize) -> f64 {
        self.points[i]
    }

    #[inline]
    pub fn h(&self, i: usize) -> f64 {
        self.steps[i]
    }

    pub fn h_min(&self) -> f64 {
        self.h_min
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    /// The `n` of `t_0 ... t_{n+2}`.
    pub fn n(&self) -> usize {
        self.points.len() - 3
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the right endpoint, `n + 2`.
    pub fn last(&self) -> usize {
        self.points.len() - 1
    }

    /// `t_{n+2} - t_0`.
    pub fn span(&self) -> f64 {
        self.points[self.last()] - self.points[0]
    }
}

/// Forward difference quotient on raw storage. Callers guarantee `i + 1 < values.len()`.
#[inline]
pub(crate) fn delta_raw(values: &[f64], steps: &[f64], i: usize) -> f64 {
    (values[i + 1] - values[i]) / steps[i]
}

/// Second delta on raw storage: the difference of two forward quotients over `h_i`.
#[inline]
pub(crate) fn delta2_raw(values: &[f64], steps: &[f64], i: usize) -> f64 {
    (delta_raw(values, steps, i + 1) - delta_raw(values, steps, i)) / steps[i]
}

/// A real value at every grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<GridFunction> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(GridFunction { grid, values })
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Result<GridFunction> {
        let values = vec![c; grid.len()];
        GridFunction::new(grid, values)
    }

    pub fn from_fn(grid: Arc<Grid>, mut f: impl FnMut(f64) -> f64) -> Result<GridFunction> {
        let values = grid.points().iter().map(|&t| f(t)).collect();
        GridFunction::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    /// `(u(t_{i+1}) - u(t_i)) / h_i` for `i` in `0..=n+1`.
    pub fn delta(&self, i: usize) -> Result<f64> {
        let max = self.grid.last() - 1;
        if i > max {
            return Err(Error::IndexOutOfRange { index: i, min: 0, max });
        }
        Ok(delta_raw(&self.values, self.grid.steps(), i))
    }

    /// `(delta(i+1) - delta(i)) / h_i` for `i` in `0..=n`.
    pub fn delta2(&self, i: usize) -> Result<f64> {
        let max = self.grid.n();
        if i > max {
            return Err(Error::IndexOutOfRange { index: i, min: 0, max });
        }
        Ok(delta2_raw(&self.values, self.grid.steps(), i))
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.values)
    }

    /// `a * self + b * other`, pointwise.
    pub fn lin_comb(&self, a: f64, other: &GridFunction, b: f64) -> Result<GridFunction> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        GridFunction::new(self.grid.clone(), values)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| x - y).collect();
        GridFunction::new(self.grid.clone(), values)
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| x + y).collect();
        GridFunction::new(self.grid.clone(), values)
    }

    pub fn scaled(&self, a: f64) -> Result<GridFunction> {
        GridFunction::new(self.grid.clone(), self.values.iter().map(|x| a * x).collect())
    }
}

/// Maximum absolute value.
pub fn sup_norm(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}
