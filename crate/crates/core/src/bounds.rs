//! Lower and upper solution certificates and their ordering.
//!
//! Every check reports signed left-hand sides rather than a bare verdict:
//!
//! | condition | lower (α) passes when | upper (β) passes when |
//! |-----------|-----------------------|-----------------------|
//! | interior `w^ΔΔ(t_{i-1}) + f(t_i, w(t_i), w^Δ(t_{i-1}))` | `≥ -tol` | `≤ tol` |
//! | left `w^Δ(t_0)` | `≥ -tol` | `≤ tol` |
//! | right `w(t_{n+2}) - g` | `≤ tol` | `≥ -tol` |

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{delta_raw, GridFunction};
use crate::problem::BVProblem;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsPair {
    alpha: GridFunction,
    beta: GridFunction,
    ordered_through: Option<usize>,
}

impl BoundsPair {
    pub fn new(alpha: GridFunction, beta: GridFunction) -> Result<BoundsPair> {
        if !alpha.same_grid(&beta) {
            return Err(Error::GridMismatch);
        }
        let first_bad = alpha.values().iter().zip(beta.values()).position(|(a, b)| a > b);
        let ordered_through = match first_bad {
            Some(0) => None,
            Some(k) => Some(k - 1),
            None => Some(alpha.values().len() - 1),
        };
        Ok(BoundsPair { alpha, beta, ordered_through })
    }

    pub fn alpha(&self) -> &GridFunction {
        &self.alpha
    }

    pub fn beta(&self) -> &GridFunction {
        &self.beta
    }

    /// Largest `k` with `α(t_i) ≤ β(t_i)` for every `i ≤ k`; `None` if the
    /// ordering already fails at `t_0`.
    pub fn ordered_through(&self) -> Option<usize> {
        self.ordered_through
    }

    /// Projection of `z` onto `[α(t_{i-1}), β(t_{i-1})]`, for `i` in `1..=n+1`.
    pub fn sigma(&self, i: usize, z: f64) -> Result<f64> {
        let n = self.alpha.grid().n();
        if i == 0 || i > n + 1 {
            return Err(Error::IndexOutOfRange { index: i, min: 1, max: n + 1 });
        }
        Ok(self.clamp_at(i - 1, z))
    }

    /// Closed-band clamp at grid index `j`; ties stay on the middle branch.
    #[inline]
    pub(crate) fn clamp_at(&self, j: usize, z: f64) -> f64 {
        let (lo, hi) = (self.alpha.at(j), self.beta.at(j));
        if z > hi {
            hi
        } else if z < lo {
            lo
        } else {
            z
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertificateKind {
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub kind: CertificateKind,
    /// Signed left-hand side of the interior inequality for `i = 1..=n+1` (offset `i - 1`).
    pub interior_defects: Vec<f64>,
    /// `w^Δ(t_0)`.
    pub left_defect: f64,
    /// `w(t_{n+2}) - g(t_{n+2})`.
    pub right_defect: f64,
    pub tol: f64,
    pub pass: bool,
}

impl CertificateReport {
    /// Human-readable list of the violated conditions.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        type Check = fn(f64, f64) -> bool;
        let (name, interior_ok, left_ok, right_ok): (_, Check, Check, Check) = match self.kind {
            CertificateKind::Lower => ("lower", |d, t| d >= -t, |d, t| d >= -t, |d, t| d <= t),
            CertificateKind::Upper => ("upper", |d, t| d <= t, |d, t| d <= t, |d, t| d >= -t),
        };
        for (k, &d) in self.interior_defects.iter().enumerate() {
            if !interior_ok(d, self.tol) {
                out.push(format!("{name}: interior condition fails at i = {} (lhs = {d:e})", k + 1));
            }
        }
        if !left_ok(self.left_defect, self.tol) {
            out.push(format!("{name}: left condition fails (delta(t0) = {:e})", self.left_defect));
        }
        if !right_ok(self.right_defect, self.tol) {
            out.push(format!("{name}: right condition fails (w(t_end) - g = {:e})", self.right_defect));
        }
        out
    }
}

fn interior_lhs(p: &BVProblem, w: &GridFunction) -> Result<Vec<f64>> {
    p.equation_residual(w)
}

fn check_grid(p: &BVProblem, w: &GridFunction) -> Result<()> {
    if !w.same_grid(&p.particular_solution()) {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

pub fn check_lower(p: &BVProblem, alpha: &GridFunction, tol: f64) -> Result<CertificateReport> {
    check_grid(p, alpha)?;
    let interior = interior_lhs(p, alpha)?;
    let left = delta_raw(alpha.values(), p.grid().steps(), 0);
    let right = alpha.at(p.grid().last()) - p.g_right();
    let pass = interior.iter().all(|&d| d >= -tol) && left >= -tol && right <= tol;
    Ok(CertificateReport {
        kind: CertificateKind::Lower,
        interior_defects: interior,
        left_defect: left,
        right_defect: right,
        tol,
        pass,
    })
}

pub fn check_upper(p: &BVProblem, beta: &GridFunction, tol: f64) -> Result<CertificateReport> {
    check_grid(p, beta)?;
    let interior = interior_lhs(p, beta)?;
    let left = delta_raw(beta.values(), p.grid().steps(), 0);
    let right = beta.at(p.grid().last()) - p.g_right();
    let pass = interior.iter().all(|&d| d <= tol) && left <= tol && right >= -tol;
    Ok(CertificateReport {
        kind: CertificateKind::Upper,
        interior_defects: interior,
        left_defect: left,
        right_defect: right,
        tol,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingReport {
    /// `α ≤ β + tol` on `0..=n+1`, the range the existence theorem requires.
    pub ordered: bool,
    pub first_violation: Option<usize>,
    /// `max_i (α(t_i) - β(t_i))` over `0..=n+1`.
    pub worst_gap: f64,
    /// Status at `t_{n+2}`; reported, not enforced.
    pub terminal_ordered: bool,
}

pub fn check_ordering(bp: &BoundsPair, tol: f64) -> Result<OrderingReport> {
    let a = bp.alpha().values();
    let b = bp.beta().values();
    if a.len() != b.len() {
        return Err(Error::GridMismatch);
    }
    let last = a.len() - 1;
    let mut first_violation = None;
    let mut worst_gap = f64::NEG_INFINITY;
    for i in 0..last {
        let gap = a[i] - b[i];
        worst_gap = worst_gap.max(gap);
        if gap > tol && first_violation.is_none() {
            first_violation = Some(i);
        }
    }
    Ok(OrderingReport {
        ordered: first_violation.is_none(),
        first_violation,
        worst_gap,
        terminal_ordered: a[last] <= b[last] + tol,
    })
}

/// All three certificates for a bounds pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsCertificate {
    pub lower: CertificateReport,
    pub upper: CertificateReport,
    pub ordering: OrderingReport,
}

impl BoundsCertificate {
    pub fn pass(&self) -> bool {
        self.lower.pass && self.upper.pass && self.ordering.ordered
    }

    pub fn summary(&self) -> String {
        let mut v = self.lower.violations();
        v.extend(self.upper.violations());
        if let Some(i) = self.ordering.first_violation {
            v.push(format!("ordering: alpha > beta at i = {i}"));
        }
        v.join("; ")
    }
}

pub fn certify(p: &BVProblem, bp: &BoundsPair, tol: f64) -> Result<BoundsCertificate> {
    Ok(BoundsCertificate {
        lower: check_lower(p, bp.alpha(), tol)?,
        upper: check_upper(p, bp.beta(), tol)?,
        ordering: check_ordering(bp, tol)?,
    })
}
