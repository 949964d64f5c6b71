//! Tridiagonal solves for the Newton step.

use crate::error::{Error, Result};

/// Pivot magnitude below which the Thomas sweep hands over to pivoted elimination.
pub const PIVOT_FLOOR: f64 = 1e-13;

/// A tridiagonal matrix: `lower[k]` sits at `(k+1, k)`, `upper[k]` at `(k, k+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(m: usize) -> Tridiagonal {
        Tridiagonal { lower: vec![0.0; m.saturating_sub(1)], diag: vec![0.0; m], upper: vec![0.0; m.saturating_sub(1)] }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// `A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let m = self.dim();
        (0..m)
            .map(|k| {
                let mut s = self.diag[k] * x[k];
                if k > 0 {
                    s += self.lower[k - 1] * x[k - 1];
                }
                if k + 1 < m {
                    s += self.upper[k] * x[k + 1];
                }
                s
            })
            .collect()
    }

    /// Solves `A x = rhs`: Thomas algorithm, falling back to Gaussian
    /// elimination with partial pivoting when a pivot drops below [`PIVOT_FLOOR`].
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        match self.thomas(rhs) {
            Some(x) => Ok(x),
            None => self.solve_pivoted(rhs),
        }
    }

    fn thomas(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        let m = self.dim();
        let mut c = vec![0.0; m];
        let mut d = vec![0.0; m];
        let mut pivot = self.diag[0];
        if pivot.abs() < PIVOT_FLOOR {
            return None;
        }
        if m > 1 {
            c[0] = self.upper[0] / pivot;
        }
        d[0] = rhs[0] / pivot;
        for k in 1..m {
            pivot = self.diag[k] - self.lower[k - 1] * c[k - 1];
            if pivot.abs() < PIVOT_FLOOR || !pivot.is_finite() {
                return None;
            }
            if k + 1 < m {
                c[k] = self.upper[k] / pivot;
            }
            d[k] = (rhs[k] - self.lower[k - 1] * d[k - 1]) / pivot;
        }
        for k in (0..m - 1).rev() {
            d[k] -= c[k] * d[k + 1];
        }
        Some(d)
    }

    fn solve_pivoted(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let m = self.dim();
        let mut a = vec![vec![0.0; m]; m];
        for k in 0..m {
            a[k][k] = self.diag[k];
            if k > 0 {
                a[k][k - 1] = self.lower[k - 1];
            }
            if k + 1 < m {
                a[k][k + 1] = self.upper[k];
            }
        }
        let scale = a.iter().flatten().fold(0.0_f64, |s, v| s.max(v.abs()));
        let mut b = rhs.to_vec();
        for col in 0..m {
            let piv = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).expect("non-empty range");
            if a[piv][col].abs() <= scale * 1e-15 || a[piv][col] == 0.0 {
                return Err(Error::SingularJacobian);
            }
            a.swap(col, piv);
            b.swap(col, piv);
            for row in col + 1..m {
                let factor = a[row][col] / a[col][col];
                if factor != 0.0 {
                    let (upper, lower) = a.split_at_mut(row);
                    for (dst, src) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                        *dst -= factor * src;
                    }
                    b[row] -= factor * b[col];
                }
            }
        }
        let mut x = vec![0.0; m];
        for row in (0..m).rev() {
            let mut s = b[row];
            for k in row + 1..m {
                s -= a[row][k] * x[k];
            }
            x[row] = s / a[row][row];
        }
        Ok(x)
    }
}
