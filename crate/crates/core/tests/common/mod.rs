//! Independent oracles shared by the integration suites. Nothing here calls
//! into the solver or operator code paths it is used to check.

#![allow(dead_code)]

pub mod reference;

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tsbvp::{AuxProblem, BVProblem, BoundsPair, Grid, GridFunction, MEstimation};

/// Dense Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let m = b.len();
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        assert!(a[piv][col] != 0.0, "oracle system is singular");
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..m {
            let factor = a[row][col] / a[col][col];
            let (upper, lower) = a.split_at_mut(row);
            for (dst, src) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *dst -= factor * src;
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let s: f64 = (row + 1..m).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Solves `u^ΔΔ(t_{i-1}) + a_i u(t_i) + b_i u^Δ(t_{i-1}) + c_i = 0` with
/// `u^Δ(t_0) = 0`, `u(t_{n+2}) = g` as one dense system over all `n + 3` values.
pub fn linear_oracle(points: &[f64], a: &[f64], b: &[f64], c: &[f64], g: f64) -> Vec<f64> {
    let len = points.len();
    let h: Vec<f64> = points.windows(2).map(|w| w[1] - w[0]).collect();
    let mut mat = vec![vec![0.0; len]; len];
    let mut rhs = vec![0.0; len];
    mat[0][0] = -1.0;
    mat[0][1] = 1.0;
    for i in 1..len - 1 {
        let (hp, hi) = (h[i - 1], h[i]);
        // ((u_{i+1} - u_i)/h_i - (u_i - u_{i-1})/h_{i-1}) / h_{i-1}
        mat[i][i + 1] += 1.0 / (hi * hp);
        mat[i][i] += -1.0 / (hi * hp) - 1.0 / (hp * hp);
        mat[i][i - 1] += 1.0 / (hp * hp);
        mat[i][i] += a[i] + b[i] / hp;
        mat[i][i - 1] -= b[i] / hp;
        rhs[i] = -c[i];
    }
    mat[len - 1][len - 1] = 1.0;
    rhs[len - 1] = g;
    dense_solve(mat, rhs)
}

/// Grid with `n + 2` steps drawn log-uniformly from `[lo, hi]`, starting at 0.
pub fn random_grid(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Arc<Grid> {
    let mut t = 0.0;
    let mut points = vec![t];
    for _ in 0..n + 2 {
        t += (rng.gen_range(lo.ln()..=hi.ln())).exp();
        points.push(t);
    }
    Arc::new(Grid::new(points).unwrap())
}

pub fn constant_bounds(grid: &Arc<Grid>, lo: f64, hi: f64) -> BoundsPair {
    BoundsPair::new(
        GridFunction::constant(grid.clone(), lo).unwrap(),
        GridFunction::constant(grid.clone(), hi).unwrap(),
    )
    .unwrap()
}

pub fn certified(grid: &Arc<Grid>, f: &str, g: f64, lo: f64, hi: f64) -> AuxProblem {
    let base = BVProblem::from_source(grid.clone(), f, g).unwrap();
    AuxProblem::new(base, constant_bounds(grid, lo, hi), &MEstimation::default(), 1e-12).unwrap()
}

/// Full-precision decimal literal for embedding a coefficient in an expression.
pub fn lit(v: f64) -> String {
    format!("({v:.16e})")
}

/// Central second difference as written out by hand, for cross-checks.
pub fn second_delta(values: &[f64], points: &[f64], i: usize) -> f64 {
    let h0 = points[i + 1] - points[i];
    let h1 = points[i + 2] - points[i + 1];
    ((values[i + 2] - values[i + 1]) / h1 - (values[i + 1] - values[i]) / h0) / h0
}

/// Random linear instance `f = a(t) x + b(t) y + c(t)` with `a < 0`, `b ≤ 0`,
/// its certified constant bounds, and the dense-solve oracle values.
pub struct LinearCase {
    pub aux: AuxProblem,
    pub expected: Vec<f64>,
    pub source: String,
}

pub fn linear_case(seed: u64, max_n: usize) -> LinearCase {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(0..=max_n);
    let grid = random_grid(&mut rng, n, 0.01, 1.0);
    let p = rng.gen_range(0.5..3.0);
    let q = rng.gen_range(0.0..0.45) * p;
    let w = rng.gen_range(0.0..3.0);
    let r = rng.gen_range(0.0..2.0);
    let s = rng.gen_range(0.0..1.0);
    let v = rng.gen_range(0.0..3.0);
    let c0 = rng.gen_range(-2.0..2.0);
    let c1 = rng.gen_range(-1.0..1.0);
    let u = rng.gen_range(0.0..3.0);
    let g = rng.gen_range(-2.0..2.0);

    let a_of = |t: f64| -(p + q * (w * t).cos());
    let b_of = |t: f64| -(r + s * (v * t).sin().powi(2));
    let c_of = |t: f64| c0 + c1 * (u * t).sin();
    let source = format!(
        "-({} + {}*cos({}*t))*x - ({} + {}*sin({}*t)^2)*y + ({} + {}*sin({}*t))",
        lit(p),
        lit(q),
        lit(w),
        lit(r),
        lit(s),
        lit(v),
        lit(c0),
        lit(c1),
        lit(u)
    );
    let pts = grid.points();
    let a: Vec<f64> = pts.iter().map(|&t| a_of(t)).collect();
    let b: Vec<f64> = pts.iter().map(|&t| b_of(t)).collect();
    let c: Vec<f64> = pts.iter().map(|&t| c_of(t)).collect();
    let expected = linear_oracle(pts, &a, &b, &c, g);

    // ±K bracket the solution once K |a| ≥ |c| and K ≥ |g|
    let k = a.iter().zip(&c).map(|(a, c)| c.abs() / a.abs()).fold(g.abs(), f64::max) * 1.25 + 0.5;
    LinearCase { aux: certified(&grid, &source, g, -k, k), expected, source }
}
