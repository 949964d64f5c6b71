//! The explicit solution operator
//!
//! ```text
//! (Tu)(t_k) = g(t_{n+2}) + Σ_{j=k}^{n+1} h_j Σ_{i=1}^{j} h_{i-1} f̃(t_i, u(t_i), u(t_{i-1}))
//! ```
//!
//! Fixed points of `T` are exactly the solutions of the auxiliary problem.
//! `T` is evaluated with one ascending pass for the inner sums and one
//! descending pass for the outer sum, so the cost is linear in the grid size
//! and the summation order is fixed.

use std::sync::Arc;

use crate::auxiliary::AuxProblem;
use crate::error::Result;
use crate::exec::Execution;
use crate::grid::{sup_norm, Grid, GridFunction};

/// Above this many interior rows the running sums switch to compensated
/// (Neumaier) accumulation.
pub const COMPENSATED_ABOVE: usize = 1000;

#[derive(Debug, Clone, Copy)]
struct Accumulator {
    sum: f64,
    comp: f64,
    compensated: bool,
}

impl Accumulator {
    fn new(compensated: bool) -> Self {
        Accumulator { sum: 0.0, comp: 0.0, compensated }
    }

    #[inline]
    fn add(&mut self, x: f64) {
        if !self.compensated {
            self.sum += x;
            return;
        }
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    fn value(&self) -> f64 {
        if self.compensated {
            self.sum + self.comp
        } else {
            self.sum
        }
    }
}

/// `f̃_i` at `u` for `i = 1..=n+1` (offset `i - 1`).
fn aux_f_values(ap: &AuxProblem, v: &[f64]) -> Result<Vec<f64>> {
    let n = ap.base().grid().n();
    (1..=n + 1).map(|i| ap.aux_f_unchecked(i, v[i], v[i - 1])).collect()
}

/// Inner sums `S_j = Σ_{i=1}^{j} h_{i-1} f̃_i` for `j = 0..=n+1` (`S_0 = 0`).
fn inner_sums(grid: &Grid, fvals: &[f64]) -> Vec<f64> {
    let n = grid.n();
    let mut acc = Accumulator::new(n > COMPENSATED_ABOVE);
    let mut s = Vec::with_capacity(n + 2);
    s.push(0.0);
    for i in 1..=n + 1 {
        acc.add(grid.h(i - 1) * fvals[i - 1]);
        s.push(acc.value());
    }
    s
}

/// `d_k = -Σ_{i=1}^{k} h_{i-1} f̃_i` for `k = 1..=n+1` (offset `k - 1`); the
/// delta of `Tu` at `t_k`.
pub fn delta_from_f(ap: &AuxProblem, u: &GridFunction) -> Result<Vec<f64>> {
    let fvals = aux_f_values(ap, u.values())?;
    let s = inner_sums(ap.base().grid(), &fvals);
    Ok(s[1..].iter().map(|x| -x).collect())
}

pub(crate) fn apply_t_raw(ap: &AuxProblem, v: &[f64]) -> Result<Vec<f64>> {
    let grid = ap.base().grid();
    let n = grid.n();
    let g = ap.base().g_right();
    let fvals = aux_f_values(ap, v)?;
    let s = inner_sums(grid, &fvals);
    let mut out = vec![0.0; n + 3];
    out[n + 2] = g;
    let mut outer = Accumulator::new(n > COMPENSATED_ABOVE);
    for k in (0..=n + 1).rev() {
        outer.add(grid.h(k) * s[k]);
        out[k] = g + outer.value();
    }
    Ok(out)
}

pub fn apply_t(ap: &AuxProblem, u: &GridFunction) -> Result<GridFunction> {
    let values = apply_t_raw(ap, u.values())?;
    GridFunction::new(u.grid().clone(), values)
}

/// Applies `T` to many inputs; results are in input order.
pub fn apply_t_batch(ap: &AuxProblem, inputs: &[GridFunction], exec: Execution) -> Vec<Result<GridFunction>> {
    exec.map_slice(inputs, |u| apply_t(ap, u))
}

pub(crate) fn fixed_point_residual_raw(ap: &AuxProblem, v: &[f64]) -> Result<(f64, Vec<f64>)> {
    let tv = apply_t_raw(ap, v)?;
    let r = tv.iter().zip(v).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    Ok((r, tv))
}

/// `‖Tu - u‖_∞`.
pub fn fixed_point_residual(ap: &AuxProblem, u: &GridFunction) -> Result<f64> {
    Ok(fixed_point_residual_raw(ap, u.values())?.0)
}

/// Radius of a closed ball that `T` maps into itself: `|g(t_{n+2})| + M (t_{n+2} - t_0)^2`.
pub fn invariance_radius(ap: &AuxProblem) -> f64 {
    let span = ap.base().grid().span();
    ap.base().g_right().abs() + ap.m() * span * span
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorDiagnostics {
    pub fp_residual: f64,
    /// `(|(Tu)^Δ(t_0)|, |(Tu)(t_{n+2}) - g|)`.
    pub boundary_defects: (f64, f64),
    pub radius: f64,
    /// Whether `‖u‖_∞ ≤ r`.
    pub inside_ball: bool,
}

pub fn diagnostics(ap: &AuxProblem, u: &GridFunction) -> Result<OperatorDiagnostics> {
    let (fp, tv) = fixed_point_residual_raw(ap, u.values())?;
    let grid = ap.base().grid();
    let left = ((tv[1] - tv[0]) / grid.h(0)).abs();
    let right = (tv[grid.last()] - ap.base().g_right()).abs();
    let radius = invariance_radius(ap);
    Ok(OperatorDiagnostics {
        fp_residual: fp,
        boundary_defects: (left, right),
        radius,
        inside_ball: sup_norm(u.values()) <= radius,
    })
}

/// Free coordinates `(u(t_1), ..., u(t_{n+1}))` of a function in `E`.
pub fn pack(u: &GridFunction) -> Vec<f64> {
    let last = u.grid().last();
    u.values()[1..last].to_vec()
}

/// The function in `E` with the given free coordinates: `u(t_0) = u(t_1)`,
/// `u(t_{n+2}) = g`.
pub fn unpack(grid: &Arc<Grid>, coords: &[f64], g_right: f64) -> Result<GridFunction> {
    GridFunction::new(grid.clone(), unpack_raw(coords, g_right))
}

pub(crate) fn unpack_raw(coords: &[f64], g_right: f64) -> Vec<f64> {
    let mut v = Vec::with_capacity(coords.len() + 2);
    v.push(coords[0]);
    v.extend_from_slice(coords);
    v.push(g_right);
    v
}
