//! Fixed-point solution of second-order boundary value problems on time scales.
//!
//! A problem `u^ΔΔ(t_{i-1}) + f(t_i, u(t_i), u^Δ(t_{i-1})) = 0` on a finite
//! grid, with `u^Δ(t_0) = 0` and `u(t_{n+2}) = g`, is bracketed by certified
//! lower and upper solutions. The nonlinearity is clipped to the band between
//! them, the clipped problem is recast as a fixed point of a summation
//! operator `T`, and any fixed point found is verified to lie in the band and
//! to solve the original problem.
//!
//! ```
//! use std::sync::Arc;
//! use tsbvp::{AuxProblem, BVProblem, BoundsPair, Grid, GridFunction, MEstimation, SolveOptions};
//!
//! let grid = Arc::new(Grid::new(vec![0.0, 1.0, 2.0]).unwrap());
//! let problem = BVProblem::from_source(grid.clone(), "2", 5.0).unwrap();
//! let bounds = BoundsPair::new(
//!     GridFunction::constant(grid.clone(), 0.0).unwrap(),
//!     GridFunction::from_fn(grid, |t| 9.0 - t * t).unwrap(),
//! )
//! .unwrap();
//! let aux = AuxProblem::new(problem, bounds, &MEstimation::default(), 1e-12).unwrap();
//! let report = tsbvp::solve(&aux, &SolveOptions::default()).unwrap();
//! assert!(report.converged);
//! assert_eq!(report.solution.values(), &[7.0, 7.0, 5.0]);
//! ```

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod auxiliary;
pub mod bounds;
pub mod error;
pub mod exec;
pub mod expr;
pub mod grid;
pub mod linalg;
pub mod operator;
pub mod problem;
pub mod solver;

pub use auxiliary::{estimate_m, AuxProblem, MEstimation};
pub use bounds::{
    certify, check_lower, check_ordering, check_upper, BoundsCertificate, BoundsPair, CertificateKind,
    CertificateReport, OrderingReport,
};
pub use error::{Error, Result};
pub use exec::Execution;
pub use expr::{EvalError, Expr, ParseError};
pub use grid::{Grid, GridFunction};
pub use operator::{apply_t, apply_t_batch, fixed_point_residual, invariance_radius};
pub use problem::{AssumptionReport, BVProblem, MonotoneSamplingSpec, F_VARS, T_VARS};
pub use solver::{
    brouwer_1d, solve, solve_damped, solve_newton, verify_solution, Method, SolveOptions, SolveReport, Start,
    VerificationReport,
};
