//! Solution CSV and the JSON run report.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use tsbvp::solver::VerificationReport;
use tsbvp::{AssumptionReport, BVProblem, BoundsCertificate, GridFunction, Method, SolveOptions, SolveReport};

/// Seventeen significant digits: enough for any double to round-trip.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn cell(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// `i,t,u,u_delta,residual`; `u_delta` is blank at the last point and
/// `residual` outside `1..=n+1` or where `f` cannot be evaluated.
pub fn solution_csv(problem: &BVProblem, u: &GridFunction) -> String {
    let grid = problem.grid();
    let residual = problem.equation_residual(u).ok();
    let mut out = String::from("i,t,u,u_delta,residual\n");
    for i in 0..grid.len() {
        let delta = (i <= grid.n() + 1).then(|| u.delta(i).ok()).flatten();
        let r = match &residual {
            Some(r) if (1..=grid.n() + 1).contains(&i) => Some(r[i - 1]),
            _ => None,
        };
        let _ = writeln!(out, "{i},{},{},{},{}", num(grid.t(i)), num(u.at(i)), cell(delta), cell(r));
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemEcho {
    pub points: Vec<f64>,
    pub f: String,
    pub g_right: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub g: Option<String>,
    pub alpha: String,
    pub beta: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssumptionEcho {
    pub a1: bool,
    pub a2: bool,
    pub a2_pairs_checked: usize,
    pub a2_violations: usize,
    pub a2_strict: bool,
    pub a3_positive: bool,
    pub sampled_x_range: (f64, f64),
    pub sampled_y_range: (f64, f64),
    pub notes: Vec<String>,
    pub warnings: Vec<String>,
}

impl AssumptionEcho {
    pub fn new(a: &AssumptionReport, strict: bool) -> AssumptionEcho {
        AssumptionEcho {
            a1: a.a1_holds,
            a2: a.a2_holds(),
            a2_pairs_checked: a.a2.pairs_checked,
            a2_violations: a.a2.violation_count,
            a2_strict: strict,
            a3_positive: a.a3_positive,
            sampled_x_range: a.x_range,
            sampled_y_range: a.y_range,
            notes: a.notes.clone(),
            warnings: a.warnings.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Settings {
    pub method: Method,
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub seed: u64,
}

impl Settings {
    pub fn new(opts: &SolveOptions, seed: u64) -> Settings {
        Settings { method: opts.method, tol: opts.tol, max_iter: opts.max_iter, damping: opts.damping, seed }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub problem: ProblemEcho,
    pub settings: Settings,
    pub assumptions: AssumptionEcho,
    pub certificate: BoundsCertificate,
    #[serde(rename = "M")]
    pub m: f64,
    pub r: f64,
    pub method_used: tsbvp::solver::MethodUsed,
    pub start: tsbvp::Start,
    pub iterations: usize,
    pub converged: bool,
    pub fp_residual: f64,
    pub aux_residual_max: f64,
    pub eq_residual_max: Option<f64>,
    pub bound_inclusion: Vec<bool>,
    pub worst_violation: f64,
    pub within_ball: bool,
    pub solution: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub newton_failure: Option<String>,
    pub alternates: Vec<Vec<f64>>,
    pub verification: Option<VerificationReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trace: Option<Vec<f64>>,
}

impl RunReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        problem: ProblemEcho,
        settings: Settings,
        assumptions: AssumptionEcho,
        certificate: BoundsCertificate,
        m: f64,
        report: &SolveReport,
    ) -> RunReport {
        RunReport {
            problem,
            settings,
            assumptions,
            certificate,
            m,
            r: report.radius,
            method_used: report.method_used,
            start: report.start.clone(),
            iterations: report.iterations,
            converged: report.converged,
            fp_residual: report.fp_residual,
            aux_residual_max: report.aux_residual_max,
            eq_residual_max: report.eq_residual_max,
            bound_inclusion: report.bound_inclusion.clone(),
            worst_violation: report.worst_violation,
            within_ball: report.within_ball,
            solution: report.solution.values().to_vec(),
            newton_failure: report.newton_failure.clone(),
            alternates: report.alternates.iter().map(|a| a.values().to_vec()).collect(),
            verification: report.verification.clone(),
            trace: report.trace.clone(),
        }
    }
}

/// `x,f,f_tilde` rows for a sweep at one interior index.
pub struct AuxRow {
    pub x: f64,
    pub f: Option<f64>,
    pub f_tilde: Option<f64>,
}

pub fn aux_csv(rows: &[AuxRow]) -> String {
    let mut out = String::from("x,f,f_tilde\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", num(r.x), cell(r.f), cell(r.f_tilde));
    }
    out
}
