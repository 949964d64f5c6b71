//! The boundary value problem
//!
//! ```text
//! u^ΔΔ(t_{i-1}) + f(t_i, u(t_i), u^Δ(t_{i-1})) = 0,   i = 1..=n+1
//! u^Δ(t_0) = 0,   u(t_{n+2}) = g(t_{n+2})
//! ```
//!
//! together with the affine solution space `E` (both boundary conditions), the
//! linear space `E_0` (homogeneous boundary conditions) and the constant
//! particular solution that shifts one onto the other.

use std::sync::Arc;

use crate::bounds::BoundsPair;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::expr::{sample_nonincreasing_in_y, Expr, MonotoneReport};
use crate::grid::{delta2_raw, delta_raw, Grid, GridFunction};

/// Variable order of the nonlinearity: `t`, `x = u(t_i)`, `y = u^Δ(t_{i-1})`.
pub const F_VARS: [&str; 3] = ["t", "x", "y"];
/// Variable list for `g`, `alpha`, `beta`.
pub const T_VARS: [&str; 1] = ["t"];

pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct BVProblem {
    grid: Arc<Grid>,
    f: Expr,
    g_right: f64,
    g_expr: Option<Expr>,
}

impl BVProblem {
    pub fn new(grid: Arc<Grid>, f: Expr, g_right: f64) -> Result<BVProblem> {
        if f.vars() != F_VARS {
            return Err(Error::InvalidOption(format!(
                "nonlinearity must be declared over (t, x, y), got {:?}",
                f.vars()
            )));
        }
        if !g_right.is_finite() {
            return Err(Error::NonFinite { index: grid.last(), value: g_right });
        }
        Ok(BVProblem { grid, f, g_right, g_expr: None })
    }

    /// Takes a full `g` over `t`; only its value at `t_{n+2}` enters the problem.
    pub fn with_g_expr(grid: Arc<Grid>, f: Expr, g: Expr) -> Result<BVProblem> {
        if g.vars() != T_VARS {
            return Err(Error::InvalidOption(format!("g must be declared over (t), got {:?}", g.vars())));
        }
        let g_right = g.eval(&[grid.t(grid.last())])?;
        let mut p = BVProblem::new(grid, f, g_right)?;
        p.g_expr = Some(g);
        Ok(p)
    }

    /// Convenience: parses `f` over `(t, x, y)`.
    pub fn from_source(grid: Arc<Grid>, f: &str, g_right: f64) -> Result<BVProblem> {
        BVProblem::new(grid, Expr::parse(f, &F_VARS)?, g_right)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn f(&self) -> &Expr {
        &self.f
    }

    pub fn g_right(&self) -> f64 {
        self.g_right
    }

    pub fn g_expr(&self) -> Option<&Expr> {
        self.g_expr.as_ref()
    }

    /// `f(t_i, x, y)` with the grid index attached to any evaluation failure.
    #[inline]
    pub fn eval_f(&self, i: usize, x: f64, y: f64) -> Result<f64> {
        let t = self.grid.t(i);
        self.f.eval(&[t, x, y]).map_err(|source| Error::FEval { index: i, t, x, y, source })
    }

    /// The constant function `w_p ≡ g(t_{n+2})`.
    pub fn particular_solution(&self) -> GridFunction {
        GridFunction::constant(self.grid.clone(), self.g_right).expect("g_right is finite")
    }

    pub fn membership(&self, u: &GridFunction, tol: f64) -> SpaceMembership {
        let v = u.values();
        let left = delta_raw(v, self.grid.steps(), 0).abs();
        let end = v[self.grid.last()];
        let right = (end - self.g_right).abs();
        SpaceMembership {
            in_e: left <= tol && right <= tol,
            in_e0: left <= tol && end.abs() <= tol,
            boundary_defects: (left, right),
        }
    }

    /// Splits `u ∈ E` into `v ∈ E_0` and the particular solution.
    pub fn decompose(&self, u: &GridFunction, tol: f64) -> Result<(GridFunction, GridFunction)> {
        if !u.same_grid(&self.particular_solution()) {
            return Err(Error::GridMismatch);
        }
        let m = self.membership(u, tol);
        if !m.in_e {
            return Err(Error::NotInE { left_defect: m.boundary_defects.0, right_defect: m.boundary_defects.1 });
        }
        let wp = self.particular_solution();
        let v = u.sub(&wp)?;
        Ok((v, wp))
    }

    /// `v + w_p`.
    pub fn recompose(&self, v: &GridFunction) -> Result<GridFunction> {
        v.add(&self.particular_solution())
    }

    /// `R_i = u^ΔΔ(t_{i-1}) + f(t_i, u(t_i), u^Δ(t_{i-1}))` for `i = 1..=n+1`,
    /// stored at offset `i - 1`.
    pub fn equation_residual(&self, u: &GridFunction) -> Result<Vec<f64>> {
        let v = u.values();
        let h = self.grid.steps();
        (1..=self.grid.n() + 1)
            .map(|i| {
                let y = delta_raw(v, h, i - 1);
                Ok(delta2_raw(v, h, i - 1) + self.eval_f(i, v[i], y)?)
            })
            .collect()
    }

    /// Whether `u` satisfies the difference equation and both boundary conditions within `tol`.
    pub fn is_solution(&self, u: &GridFunction, tol: f64) -> Result<bool> {
        let m = self.membership(u, tol);
        let r = self.equation_residual(u)?;
        Ok(m.in_e && r.iter().all(|x| x.abs() <= tol))
    }

    /// (A1)–(A3). Sampling ranges for the monotonicity check come from `bounds`
    /// when given, otherwise from `sampling`.
    pub fn check_assumptions(
        &self,
        bounds: Option<&BoundsPair>,
        sampling: &MonotoneSamplingSpec,
    ) -> Result<AssumptionReport> {
        let (x_range, y_range) = match bounds {
            Some(b) => sampling_box(&self.grid, b),
            None => (sampling.x_range, sampling.y_range),
        };
        let ts: Vec<f64> = self.grid.points()[1..=self.grid.n() + 1].to_vec();
        let a2 = sample_nonincreasing_in_y(&self.f, &ts, x_range, y_range, sampling.samples, sampling.exec)?;
        let a3_positive = self.g_right > 0.0;
        let mut notes = vec!["(A1) holds for any expression-defined f on a finite grid".to_string()];
        if self.g_expr.is_some() {
            notes.push("only g(t_{n+2}) enters the problem; interior values of g are not used".to_string());
        }
        let mut warnings = Vec::new();
        if !a2.passed() {
            warnings.push(format!("(A2) f is not non-increasing in y: {} sampled violations", a2.violation_count));
        }
        if !a3_positive {
            warnings.push(format!("(A3) g(t_{{n+2}}) = {} is not positive", self.g_right));
        }
        Ok(AssumptionReport { a1_holds: true, a2, x_range, y_range, a3_positive, notes, warnings })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceMembership {
    pub in_e: bool,
    pub in_e0: bool,
    /// `(|u^Δ(t_0)|, |u(t_{n+2}) - g|)`.
    pub boundary_defects: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotoneSamplingSpec {
    pub samples: usize,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub exec: Execution,
}

impl Default for MonotoneSamplingSpec {
    fn default() -> Self {
        MonotoneSamplingSpec { samples: 16, x_range: (-10.0, 10.0), y_range: (-10.0, 10.0), exec: Execution::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub a1_holds: bool,
    pub a2: MonotoneReport,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub a3_positive: bool,
    pub notes: Vec<String>,
    pub warnings: Vec<String>,
}

impl AssumptionReport {
    pub fn a2_holds(&self) -> bool {
        self.a2.passed()
    }
}

/// Value and slope box spanned by the bounds: `x ∈ [min α, max β]`, `|y| ≤ (max β - min α) / h_min`.
fn sampling_box(grid: &Grid, b: &BoundsPair) -> ((f64, f64), (f64, f64)) {
    let lo = b.alpha().values().iter().copied().fold(f64::INFINITY, f64::min);
    let hi = b.beta().values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo.min(hi) - 0.5, lo.max(hi) + 0.5) };
    let slope = (hi - lo) / grid.h_min();
    ((lo, hi), (-slope, slope))
}
