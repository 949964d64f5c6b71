//! The clipped nonlinearity `f̃` and the auxiliary problem built on it.
//!
//! Inside the band `α(t_i) ≤ x ≤ β(t_i)` the auxiliary nonlinearity is `f`
//! evaluated at the clamped previous value `σ(t_i, z)`. Outside it, `f` is frozen
//! at the violated bound and a saturating correction `d / (d + 1)` (with `d` the
//! distance to the band) pushes back toward it. `f̃` is therefore bounded by
//! the band maximum of `|f|` plus one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::{certify, BoundsCertificate, BoundsPair};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::grid::{delta2_raw, GridFunction};
use crate::problem::BVProblem;

/// Sampling density for the bound `M ≥ |f̃|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MEstimation {
    /// Lattice points per axis for each interior index.
    pub lattice: usize,
    /// Zoom passes around the running maximum.
    pub refinements: usize,
    /// Relative safety margin applied to the sampled maximum.
    pub margin: f64,
    /// Extra uniformly random probes per interior index.
    pub random_probes: usize,
    pub seed: u64,
    pub exec: Execution,
}

impl Default for MEstimation {
    fn default() -> Self {
        MEstimation {
            lattice: 64,
            refinements: 3,
            margin: 0.05,
            random_probes: 256,
            seed: 0,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AuxProblem {
    base: BVProblem,
    bounds: BoundsPair,
    m: f64,
    certificate: Option<BoundsCertificate>,
}

impl AuxProblem {
    /// Certifies `bounds` against `base` at tolerance `cert_tol` and estimates `M`.
    pub fn new(base: BVProblem, bounds: BoundsPair, est: &MEstimation, cert_tol: f64) -> Result<AuxProblem> {
        let cert = certify(&base, &bounds, cert_tol)?;
        if !cert.pass() {
            return Err(Error::Uncertified(cert.summary()));
        }
        let m = estimate_m(&base, &bounds, est)?;
        Ok(AuxProblem { base, bounds, m, certificate: Some(cert) })
    }

    /// Assembles an auxiliary problem without certifying the bounds. Used for
    /// diagnostics such as tabulating `f̃` for arbitrary bands.
    pub fn from_parts(base: BVProblem, bounds: BoundsPair, m: f64) -> Result<AuxProblem> {
        if !bounds.alpha().same_grid(&base.particular_solution()) {
            return Err(Error::GridMismatch);
        }
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::InvalidOption(format!("M must be positive and finite, got {m}")));
        }
        Ok(AuxProblem { base, bounds, m, certificate: None })
    }

    pub fn base(&self) -> &BVProblem {
        &self.base
    }

    pub fn bounds(&self) -> &BoundsPair {
        &self.bounds
    }

    /// Upper bound on `|f̃|`.
    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn certificate(&self) -> Option<&BoundsCertificate> {
        self.certificate.as_ref()
    }

    pub fn sigma(&self, i: usize, z: f64) -> Result<f64> {
        self.bounds.sigma(i, z)
    }

    /// `f̃(t_i, x, ·)` with `x = u(t_i)` and `z = u(t_{i-1})`, for `i` in `1..=n+1`.
    pub fn aux_f(&self, i: usize, x: f64, z: f64) -> Result<f64> {
        let n = self.base.grid().n();
        if i == 0 || i > n + 1 {
            return Err(Error::IndexOutOfRange { index: i, min: 1, max: n + 1 });
        }
        self.aux_f_unchecked(i, x, z)
    }

    #[inline]
    pub(crate) fn aux_f_unchecked(&self, i: usize, x: f64, z: f64) -> Result<f64> {
        let s = self.bounds.clamp_at(i - 1, z);
        let h = self.base.grid().h(i - 1);
        let lo = self.bounds.alpha().at(i);
        let hi = self.bounds.beta().at(i);
        if x > hi {
            let d = x - hi;
            Ok(self.base.eval_f(i, hi, (hi - s) / h)? - d / (d + 1.0))
        } else if x < lo {
            let d = lo - x;
            Ok(self.base.eval_f(i, lo, (lo - s) / h)? + d / (d + 1.0))
        } else {
            self.base.eval_f(i, x, (x - s) / h)
        }
    }

    /// `R̃_i = u^ΔΔ(t_{i-1}) + f̃(t_i, u(t_i), u(t_{i-1}))` for `i = 1..=n+1`.
    pub fn aux_residual(&self, u: &GridFunction) -> Result<Vec<f64>> {
        self.aux_residual_raw(u.values())
    }

    pub(crate) fn aux_residual_raw(&self, v: &[f64]) -> Result<Vec<f64>> {
        let h = self.base.grid().steps();
        (1..=self.base.grid().n() + 1)
            .map(|i| Ok(delta2_raw(v, h, i - 1) + self.aux_f_unchecked(i, v[i], v[i - 1])?))
            .collect()
    }
}

fn linspace(lo: f64, hi: f64, count: usize) -> impl Iterator<Item = f64> {
    let denom = (count.max(2) - 1) as f64;
    (0..count).map(move |k| if k + 1 == count { hi } else { lo + (hi - lo) * (k as f64) / denom })
}

/// Sampled `max |f(t_i, x, (x - s)/h_{i-1})|` over the band at index `i`.
fn band_max(base: &BVProblem, bounds: &BoundsPair, i: usize, est: &MEstimation) -> Result<f64> {
    let h = base.grid().h(i - 1);
    let (x_lo, x_hi) = (bounds.alpha().at(i), bounds.beta().at(i));
    let (s_lo, s_hi) = (bounds.alpha().at(i - 1), bounds.beta().at(i - 1));
    let eval = |x: f64, s: f64| -> Result<f64> { Ok(base.eval_f(i, x, (x - s) / h)?.abs()) };

    let lattice = est.lattice.max(2);
    let mut best = (f64::NEG_INFINITY, x_lo, s_lo);
    let mut window = (x_lo, x_hi, s_lo, s_hi);
    for _pass in 0..=est.refinements {
        let (wx0, wx1, ws0, ws1) = window;
        for x in linspace(wx0, wx1, lattice) {
            for s in linspace(ws0, ws1, lattice) {
                let v = eval(x, s)?;
                if v > best.0 {
                    best = (v, x, s);
                }
            }
        }
        let dx = (wx1 - wx0) / (lattice - 1) as f64;
        let ds = (ws1 - ws0) / (lattice - 1) as f64;
        window = ((best.1 - dx).max(x_lo), (best.1 + dx).min(x_hi), (best.2 - ds).max(s_lo), (best.2 + ds).min(s_hi));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(est.seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    for _ in 0..est.random_probes {
        let x = if x_hi > x_lo { rng.gen_range(x_lo..=x_hi) } else { x_lo };
        let s = if s_hi > s_lo { rng.gen_range(s_lo..=s_hi) } else { s_lo };
        best.0 = best.0.max(eval(x, s)?);
    }
    Ok(best.0)
}

/// `M = (1 + margin) · max_band |f| + 1`. The `+ 1` covers the correction
/// fractions, which are strictly below one in magnitude.
pub fn estimate_m(base: &BVProblem, bounds: &BoundsPair, est: &MEstimation) -> Result<f64> {
    if !(est.margin >= 0.0) {
        return Err(Error::InvalidOption(format!("M margin must be non-negative, got {}", est.margin)));
    }
    let n = base.grid().n();
    let per_index = est.exec.map_range(n + 1, |k| band_max(base, bounds, k + 1, est));
    let mut max = 0.0_f64;
    for v in per_index {
        max = max.max(v?);
    }
    Ok((1.0 + est.margin) * max + 1.0)
}
