//! Fixed-point solvers for the auxiliary problem and post-solve verification.
//!
//! Existence of a fixed point inside the bounds is guaranteed, but finding one
//! is heuristic. Two finders are provided:
//!
//! * a damped (Krasnoselskii–Mann) iteration `u ← (1-λ)u + λTu`, which also
//!   tries the undamped step each iteration and keeps whichever candidate has
//!   the smaller fixed-point residual;
//! * a Newton iteration on the residual rows of the auxiliary equation, whose
//!   Jacobian is tridiagonal.
//!
//! Both iterate on the free coordinates `u(t_1), ..., u(t_{n+1})`, with
//! `u(t_0) = u(t_1)` and `u(t_{n+2}) = g`, so every iterate satisfies the
//! boundary conditions exactly. Non-convergence is a report state.

use serde::{Deserialize, Serialize};

use crate::auxiliary::AuxProblem;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::expr::Expr;
use crate::grid::{delta2_raw, delta_raw, sup_norm, Grid, GridFunction};
use crate::linalg::Tridiagonal;
use crate::operator::{fixed_point_residual_raw, invariance_radius, unpack_raw};

/// Tolerance for the boundary conditions of a verified solution.
pub const BOUNDARY_TOL: f64 = 1e-12;
const DAMPING_FLOOR: f64 = 1.0 / 64.0;
const MAX_HALVINGS: usize = 30;
/// Two converged solutions closer than this in sup norm count as the same fixed point.
const DISTINCT_SOLUTIONS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Auto,
    Newton,
    Damped,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        match s.trim() {
            "auto" => Ok(Method::Auto),
            "newton" => Ok(Method::Newton),
            "damped" => Ok(Method::Damped),
            other => Err(Error::InvalidOption(format!("unknown method `{other}` (auto | newton | damped)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Start {
    /// `(α + β) / 2`
    Midpoint,
    Alpha,
    Beta,
    /// Explicit values at every grid point; only the free coordinates are used.
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub method: Method,
    /// Target for `‖Tu - u‖_∞`.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial relaxation `λ ∈ (0, 1]` for the damped iteration.
    pub damping: f64,
    /// Relative finite-difference step for the Newton Jacobian.
    pub jacobian_step: f64,
    pub starts: Vec<Start>,
    pub exec: Execution,
    pub trace: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            method: Method::Auto,
            tol: 1e-10,
            max_iter: 10_000,
            damping: 0.5,
            jacobian_step: 1e-7,
            starts: vec![Start::Midpoint, Start::Alpha, Start::Beta],
            exec: Execution::default(),
            trace: false,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidOption(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidOption(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.jacobian_step > 0.0) {
            return Err(Error::InvalidOption(format!("jacobian_step must be positive, got {}", self.jacobian_step)));
        }
        if self.starts.is_empty() {
            return Err(Error::InvalidOption("at least one start is required".into()));
        }
        Ok(())
    }

    /// Auxiliary-residual bound accepted alongside `tol` on the fixed-point residual.
    pub fn aux_tol(&self) -> f64 {
        10.0 * self.tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodUsed {
    Newton,
    Damped,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: GridFunction,
    pub fp_residual: f64,
    pub aux_residual_max: f64,
    /// Residual against the original nonlinearity; `None` if `f` cannot be evaluated there.
    pub eq_residual_max: Option<f64>,
    pub iterations: usize,
    pub method_used: MethodUsed,
    pub start: Start,
    pub converged: bool,
    /// `α(t_i) - tol ≤ u(t_i) ≤ β(t_i) + tol` per grid point.
    pub bound_inclusion: Vec<bool>,
    /// `max_i max(α(t_i) - u(t_i), u(t_i) - β(t_i))`; non-positive when inside the band.
    pub worst_violation: f64,
    pub radius: f64,
    pub within_ball: bool,
    pub trace: Option<Vec<f64>>,
    pub verification: Option<VerificationReport>,
    /// Further converged fixed points found by other starts.
    pub alternates: Vec<GridFunction>,
    /// Why an attempted Newton solve was abandoned, if it was.
    pub newton_failure: Option<String>,
}

#[derive(Debug, Clone)]
struct Run {
    values: Vec<f64>,
    fp: f64,
    aux_max: f64,
    iterations: usize,
    converged: bool,
    trace: Option<Vec<f64>>,
    method: MethodUsed,
    start_index: usize,
}

fn start_values(ap: &AuxProblem, start: &Start) -> Result<Vec<f64>> {
    let a = ap.bounds().alpha().values();
    let b = ap.bounds().beta().values();
    Ok(match start {
        Start::Midpoint => a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect(),
        Start::Alpha => a.to_vec(),
        Start::Beta => b.to_vec(),
        Start::Custom(v) => {
            if v.len() != a.len() {
                return Err(Error::LengthMismatch { expected: a.len(), got: v.len() });
            }
            v.clone()
        }
    })
}

fn free_coords(v: &[f64]) -> Vec<f64> {
    v[1..v.len() - 1].to_vec()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn is_converged(opts: &SolveOptions, fp: f64, aux_max: f64) -> bool {
    fp <= opts.tol && aux_max <= opts.aux_tol()
}

fn damped_run(ap: &AuxProblem, opts: &SolveOptions, start_index: usize) -> Result<Run> {
    let g = ap.base().g_right();
    let mut v = unpack_raw(&free_coords(&start_values(ap, &opts.starts[start_index])?), g);
    let (mut fp, mut tv) = fixed_point_residual_raw(ap, &v)?;
    let mut trace = opts.trace.then(|| vec![fp]);
    let mut lambda = opts.damping;
    let mut iterations = 0;
    let mut aux_max = f64::INFINITY;
    loop {
        if fp <= opts.tol {
            aux_max = max_abs(&ap.aux_residual_raw(&v)?);
            if aux_max <= opts.aux_tol() {
                break;
            }
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;
        let damped: Vec<f64> = {
            let x: Vec<f64> = v[1..v.len() - 1]
                .iter()
                .zip(&tv[1..tv.len() - 1])
                .map(|(a, b)| (1.0 - lambda) * a + lambda * b)
                .collect();
            unpack_raw(&x, g)
        };
        let (fp_damped, t_damped) = fixed_point_residual_raw(ap, &damped)?;
        // Tu already lies in E: (Tu)(t_0) = (Tu)(t_1) and (Tu)(t_{n+2}) = g
        let picard = tv;
        let (fp_picard, t_picard) = fixed_point_residual_raw(ap, &picard)?;
        let (next, next_fp, next_t) =
            if fp_picard < fp_damped { (picard, fp_picard, t_picard) } else { (damped, fp_damped, t_damped) };
        if next_fp > fp {
            lambda = (lambda * 0.5).max(DAMPING_FLOOR);
        }
        v = next;
        fp = next_fp;
        tv = next_t;
        aux_max = f64::INFINITY;
        if let Some(t) = trace.as_mut() {
            t.push(fp);
        }
    }
    if !aux_max.is_finite() {
        aux_max = max_abs(&ap.aux_residual_raw(&v)?);
    }
    Ok(Run {
        converged: is_converged(opts, fp, aux_max),
        values: v,
        fp,
        aux_max,
        iterations,
        trace,
        method: MethodUsed::Damped,
        start_index,
    })
}

/// Residual rows `F_i = u^ΔΔ(t_{i-1}) + f̃(t_i, u(t_i), u(t_{i-1}))`, `i = 1..=n+1`.
fn newton_rows(ap: &AuxProblem, v: &[f64]) -> Result<Vec<f64>> {
    ap.aux_residual_raw(v)
}

fn newton_jacobian(ap: &AuxProblem, v: &[f64], rel_step: f64) -> Result<Tridiagonal> {
    let grid: &Grid = ap.base().grid();
    let m = grid.n() + 1;
    let mut jac = Tridiagonal::zeros(m);
    for i in 1..=m {
        let hp = grid.h(i - 1);
        let hi = grid.h(i);
        let (x, z) = (v[i], v[i - 1]);
        let ex = rel_step * x.abs().max(1.0);
        let ez = rel_step * z.abs().max(1.0);
        let dfx = (ap.aux_f_unchecked(i, x + ex, z)? - ap.aux_f_unchecked(i, x - ex, z)?) / (2.0 * ex);
        let dfz = (ap.aux_f_unchecked(i, x, z + ez)? - ap.aux_f_unchecked(i, x, z - ez)?) / (2.0 * ez);
        let row = i - 1;
        // u_{i+1}; u_{n+2} is pinned to g
        if i < m {
            jac.upper[row] += 1.0 / (hi * hp);
        }
        jac.diag[row] += -1.0 / (hi * hp) - 1.0 / (hp * hp) + dfx;
        // u_{i-1}; u_0 is tied to u_1
        let c = 1.0 / (hp * hp) + dfz;
        if i == 1 {
            jac.diag[row] += c;
        } else {
            jac.lower[row - 1] += c;
        }
    }
    Ok(jac)
}

fn newton_run(ap: &AuxProblem, opts: &SolveOptions, start_index: usize) -> Result<Run> {
    let g = ap.base().g_right();
    let mut x = free_coords(&start_values(ap, &opts.starts[start_index])?);
    let mut v = unpack_raw(&x, g);
    let mut rows = newton_rows(ap, &v)?;
    let mut norm = max_abs(&rows);
    let mut fp = fixed_point_residual_raw(ap, &v)?.0;
    let mut trace = opts.trace.then(|| vec![fp]);
    let mut iterations = 0;
    while !is_converged(opts, fp, norm) && iterations < opts.max_iter {
        iterations += 1;
        let jac = newton_jacobian(ap, &v, opts.jacobian_step)?;
        let neg: Vec<f64> = rows.iter().map(|r| -r).collect();
        let step = jac.solve(&neg)?;
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(a, d)| a + scale * d).collect();
            let tv = unpack_raw(&trial, g);
            let trial_rows = newton_rows(ap, &tv)?;
            let trial_norm = max_abs(&trial_rows);
            if trial_norm < norm {
                accepted = Some((trial, tv, trial_rows, trial_norm));
                break;
            }
            scale *= 0.5;
        }
        let Some((nx, nv, nrows, nnorm)) = accepted else {
            break;
        };
        x = nx;
        v = nv;
        rows = nrows;
        norm = nnorm;
        fp = fixed_point_residual_raw(ap, &v)?.0;
        if let Some(t) = trace.as_mut() {
            t.push(fp);
        }
    }
    Ok(Run {
        converged: is_converged(opts, fp, norm),
        values: v,
        fp,
        aux_max: norm,
        iterations,
        trace,
        method: MethodUsed::Newton,
        start_index,
    })
}

/// Orders runs by (converged first, smaller residual, earlier start).
fn rank(runs: &mut [Run]) {
    runs.sort_by(|a, b| {
        b.converged.cmp(&a.converged).then(a.fp.total_cmp(&b.fp)).then(a.start_index.cmp(&b.start_index))
    });
}

fn finish(
    ap: &AuxProblem,
    opts: &SolveOptions,
    mut runs: Vec<Run>,
    newton_failure: Option<String>,
) -> Result<SolveReport> {
    rank(&mut runs);
    let grid = ap.base().grid().clone();
    let best = runs.remove(0);
    let mut alternates: Vec<Vec<f64>> = Vec::new();
    for r in runs.iter().filter(|r| r.converged) {
        let distinct_from = |w: &Vec<f64>| r.values.iter().zip(w).any(|(a, b)| (a - b).abs() > DISTINCT_SOLUTIONS);
        if best.converged && distinct_from(&best.values) && alternates.iter().all(distinct_from) {
            alternates.push(r.values.clone());
        }
    }
    let solution = GridFunction::new(grid.clone(), best.values)?;
    let (bound_inclusion, worst_violation) = inclusion(ap, &solution, opts.aux_tol());
    let radius = invariance_radius(ap);
    let eq_residual_max = ap.base().equation_residual(&solution).ok().map(|r| max_abs(&r));
    let verification = if best.converged { Some(verify_solution(ap, &solution, opts.aux_tol())?) } else { None };
    Ok(SolveReport {
        within_ball: solution.sup_norm() <= radius,
        fp_residual: best.fp,
        aux_residual_max: best.aux_max,
        eq_residual_max,
        iterations: best.iterations,
        method_used: best.method,
        start: opts.starts[best.start_index].clone(),
        converged: best.converged,
        bound_inclusion,
        worst_violation,
        radius,
        trace: best.trace,
        verification,
        alternates: alternates.into_iter().map(|v| GridFunction::new(grid.clone(), v)).collect::<Result<_>>()?,
        newton_failure,
        solution,
    })
}

/// Damped iteration from every start in `opts.starts`; starts run concurrently
/// under [`Execution::Parallel`] and are merged deterministically.
pub fn solve_damped(ap: &AuxProblem, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    let runs = damped_runs(ap, opts)?;
    finish(ap, opts, runs, None)
}

fn damped_runs(ap: &AuxProblem, opts: &SolveOptions) -> Result<Vec<Run>> {
    opts.exec.map_range(opts.starts.len(), |k| damped_run(ap, opts, k)).into_iter().collect()
}

/// Newton from the first start.
pub fn solve_newton(ap: &AuxProblem, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    let run = newton_run(ap, opts, 0)?;
    finish(ap, opts, vec![run], None)
}

/// `Auto` tries Newton from the first start and falls back to the damped
/// multistart iteration when Newton fails or stalls.
pub fn solve(ap: &AuxProblem, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    match opts.method {
        Method::Newton => solve_newton(ap, opts),
        Method::Damped => solve_damped(ap, opts),
        Method::Auto => {
            let (newton, failure) = match newton_run(ap, opts, 0) {
                Ok(run) if run.converged => return finish(ap, opts, vec![run], None),
                Ok(run) => {
                    let why = format!("no convergence after {} iterations (residual {:e})", run.iterations, run.fp);
                    (Some(run), Some(why))
                }
                Err(Error::SingularJacobian) => (None, Some(Error::SingularJacobian.to_string())),
                Err(e) => return Err(e),
            };
            let mut runs = damped_runs(ap, opts)?;
            runs.extend(newton);
            finish(ap, opts, runs, failure)
        }
    }
}

fn inclusion(ap: &AuxProblem, u: &GridFunction, tol: f64) -> (Vec<bool>, f64) {
    let a = ap.bounds().alpha().values();
    let b = ap.bounds().beta().values();
    let mut worst = f64::NEG_INFINITY;
    let flags = u
        .values()
        .iter()
        .zip(a.iter().zip(b))
        .map(|(&x, (&lo, &hi))| {
            worst = worst.max(lo - x).max(x - hi);
            lo - tol <= x && x <= hi + tol
        })
        .collect();
    (flags, worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundSide {
    Lower,
    Upper,
}

/// Diagnostics at the worst interior bound violation: the violation
/// `w = u - β` (or `α - u`) attains its maximum there, so `w^ΔΔ(t_{ℓ-1}) ≤ 0`,
/// whereas a solution of the auxiliary problem would force
/// `w^ΔΔ(t_{ℓ-1}) ≥ d / (d + 1) > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationWitness {
    pub index: usize,
    pub side: BoundSide,
    /// `d`, the size of the maximal violation.
    pub violation: f64,
    /// `w^ΔΔ(t_{ℓ-1})`, present for interior indices.
    pub violation_delta2: Option<f64>,
    /// `d / (d + 1)`.
    pub push_back: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub tol: f64,
    /// `|u^Δ(t_0)|`, `|u(t_{n+2}) - g|`.
    pub left_defect: f64,
    pub right_defect: f64,
    pub boundary_ok: bool,
    pub aux_residual_max: f64,
    /// Row `i` (1-based) of the largest auxiliary residual.
    pub aux_residual_argmax: usize,
    pub aux_ok: bool,
    pub inclusion: Vec<bool>,
    pub worst_violation: f64,
    pub inclusion_ok: bool,
    pub violation_witness: Option<ViolationWitness>,
    /// Residual against the original `f`; evaluated only when the bounds are respected.
    pub eq_residual_max: Option<f64>,
    pub equivalence_ok: bool,
    pub radius: f64,
    pub within_ball: bool,
}

impl VerificationReport {
    pub fn pass(&self) -> bool {
        self.boundary_ok && self.aux_ok && self.inclusion_ok && self.equivalence_ok && self.within_ball
    }
}

/// Checks boundary conditions, the auxiliary residual, bound inclusion, the
/// residual against the original `f`, and membership in the invariant ball.
pub fn verify_solution(ap: &AuxProblem, u: &GridFunction, tol: f64) -> Result<VerificationReport> {
    let grid = ap.base().grid();
    if !u.same_grid(ap.bounds().alpha()) {
        return Err(Error::GridMismatch);
    }
    let v = u.values();
    let last = grid.last();
    let left = delta_raw(v, grid.steps(), 0).abs();
    let right = (v[last] - ap.base().g_right()).abs();
    let aux = ap.aux_residual(u)?;
    let (argmax, aux_max) =
        aux.iter().enumerate().fold((0, 0.0_f64), |(k, m), (j, r)| if r.abs() > m { (j, r.abs()) } else { (k, m) });
    let (flags, worst) = inclusion(ap, u, tol);
    let inclusion_ok = flags.iter().all(|&b| b);
    let eq_residual_max = if inclusion_ok { Some(max_abs(&ap.base().equation_residual(u)?)) } else { None };
    let radius = invariance_radius(ap);
    Ok(VerificationReport {
        tol,
        left_defect: left,
        right_defect: right,
        boundary_ok: left <= BOUNDARY_TOL && right <= BOUNDARY_TOL,
        aux_residual_max: aux_max,
        aux_residual_argmax: argmax + 1,
        aux_ok: aux_max <= tol,
        violation_witness: if inclusion_ok { None } else { violation_witness(ap, u) },
        inclusion: flags,
        worst_violation: worst,
        inclusion_ok,
        equivalence_ok: eq_residual_max.is_some_and(|r| r <= tol),
        eq_residual_max,
        radius,
        within_ball: sup_norm(v) <= radius,
    })
}

fn violation_witness(ap: &AuxProblem, u: &GridFunction) -> Option<ViolationWitness> {
    let a = ap.bounds().alpha().values();
    let b = ap.bounds().beta().values();
    let v = u.values();
    let above: Vec<f64> = v.iter().zip(b).map(|(x, hi)| x - hi).collect();
    let below: Vec<f64> = a.iter().zip(v).map(|(lo, x)| lo - x).collect();
    let argmax = |w: &[f64]| {
        w.iter().enumerate().fold((0, f64::NEG_INFINITY), |(k, m), (j, &x)| if x > m { (j, x) } else { (k, m) })
    };
    let (iu, du) = argmax(&above);
    let (il, dl) = argmax(&below);
    let (side, index, d, w) =
        if du >= dl { (BoundSide::Upper, iu, du, above) } else { (BoundSide::Lower, il, dl, below) };
    if d <= 0.0 {
        return None;
    }
    let grid = ap.base().grid();
    let interior = index >= 1 && index <= grid.n() + 1;
    Some(ViolationWitness {
        index,
        side,
        violation: d,
        violation_delta2: interior.then(|| delta2_raw(&w, grid.steps(), index - 1)),
        push_back: d / (d + 1.0),
    })
}

/// Fixed point of a continuous self-map of `[0, 1]` by bisection on
/// `fn(x) - x`. `map` must be declared over the single variable `x`.
pub fn brouwer_1d(map: &Expr, tol: f64) -> Result<f64> {
    if map.vars() != ["x"] {
        return Err(Error::InvalidOption(format!("fixed-point map must be declared over (x), got {:?}", map.vars())));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidOption(format!("tol must be positive, got {tol}")));
    }
    const RANGE_SAMPLES: usize = 1000;
    for k in 0..=RANGE_SAMPLES {
        let x = k as f64 / RANGE_SAMPLES as f64;
        let value = map.eval(&[x])?;
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::RangeViolation { x, value });
        }
    }
    let g = |x: f64| -> Result<f64> { Ok(map.eval(&[x])? - x) };
    if g(0.0)? == 0.0 {
        return Ok(0.0);
    }
    if g(1.0)? == 0.0 {
        return Ok(1.0);
    }
    // g(lo) > 0 > g(hi)
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid)?;
        if gm == 0.0 {
            return Ok(mid);
        }
        if gm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
