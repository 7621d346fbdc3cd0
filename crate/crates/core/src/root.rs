//! Root finding for the F_b threshold equation.
//!
//! Every threshold in this crate is the root of
//!
//! ```text
//!     r(θ) = b²·θ·Σ wᵢvᵢ − Σ wᵢ(vᵢ − θ)₊
//! ```
//!
//! for some weighted finite set of scores `vᵢ ∈ [0, 1]` (η at the atoms of a
//! discrete law, or η̂ on an unlabeled sample). `r` is continuous, piecewise
//! linear with kinks at the scores, and strictly increasing whenever
//! `Σ wᵢvᵢ > 0`, so the root is unique and can be read off exactly after
//! sorting the scores. Bisection is kept as a fallback and as an explicit
//! alternative.

use crate::error::{FbetaError, Result};

/// Outcome of a bracketing solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bisection {
    pub root: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Bisection on `[lo, hi]` for a function with `f(lo) <= 0 <= f(hi)` (or the
/// reverse sign pattern). Stops once `|f(mid)| < tol` or the bracket is
/// narrower than `tol`.
pub fn bisect<F>(f: F, lo: f64, hi: f64, tol: f64, max_iter: usize) -> Result<Bisection>
where
    F: Fn(f64) -> f64,
{
    if !(tol > 0.0) {
        return Err(FbetaError::Argument(format!("tolerance must be positive, got {tol}")));
    }
    let (mut lo, mut hi) = (lo.min(hi), lo.max(hi));
    let f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(Bisection { root: lo, iterations: 0, residual: 0.0 });
    }
    if f_hi == 0.0 {
        return Ok(Bisection { root: hi, iterations: 0, residual: 0.0 });
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(FbetaError::Numeric(format!(
            "root not bracketed on [{lo}, {hi}]: f(lo)={f_lo}, f(hi)={f_hi}"
        )));
    }
    let increasing = f_lo < 0.0;
    for iteration in 1..=max_iter {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid.abs() < tol || 0.5 * (hi - lo) < tol || mid == lo || mid == hi {
            return Ok(Bisection { root: mid, iterations: iteration, residual: f_mid });
        }
        if (f_mid < 0.0) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(FbetaError::Numeric(format!("bisection did not converge in {max_iter} iterations")))
}

/// Weighted scores; `weights == None` means every score has weight one.
#[derive(Debug, Clone, Copy)]
pub struct WeightedScores<'a> {
    pub values: &'a [f64],
    pub weights: Option<&'a [f64]>,
}

impl<'a> WeightedScores<'a> {
    pub fn uniform(values: &'a [f64]) -> Self {
        WeightedScores { values, weights: None }
    }

    pub fn weighted(values: &'a [f64], weights: &'a [f64]) -> Self {
        debug_assert_eq!(values.len(), weights.len());
        WeightedScores { values, weights: Some(weights) }
    }

    fn weight(&self, i: usize) -> f64 {
        self.weights.map_or(1.0, |w| w[i])
    }

    pub fn total_weight(&self) -> f64 {
        match self.weights {
            Some(w) => w.iter().sum(),
            None => self.values.len() as f64,
        }
    }

    /// Weighted mean of the scores (the plug-in for P(Y = 1)).
    pub fn mean(&self) -> f64 {
        let total = self.total_weight();
        if total <= 0.0 {
            return 0.0;
        }
        let s: f64 = (0..self.values.len()).map(|i| self.weight(i) * self.values[i]).sum();
        s / total
    }

    /// Residual of the threshold equation, normalized by the total weight.
    pub fn residual(&self, b2: f64, theta: f64) -> f64 {
        let total = self.total_weight();
        let mut mean = 0.0;
        let mut excess = 0.0;
        for (i, &v) in self.values.iter().enumerate() {
            let w = self.weight(i);
            mean += w * v;
            excess += w * (v - theta).max(0.0);
        }
        (b2 * theta * mean - excess) / total
    }
}

/// Exact root of the threshold equation by sorting the scores.
///
/// Returns `None` when the weighted mean is zero (every θ is a root) or when
/// rounding leaves no consistent linear piece, in which case callers fall
/// back to bisection.
pub fn solve_sorted(scores: WeightedScores<'_>, b2: f64) -> Option<f64> {
    let k = scores.values.len();
    let mut pairs: Vec<(f64, f64)> =
        (0..k).map(|i| (scores.values[i], scores.weight(i))).filter(|p| p.1 > 0.0).collect();
    let mass: f64 = pairs.iter().map(|p| p.0 * p.1).sum();
    if !(mass > 0.0) {
        return None;
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let upper_range = 1.0 / (1.0 + b2);
    let slack = 1e-14;
    let mut active_mass = 0.0;
    let mut active_weight = 0.0;
    for j in 0..=pairs.len() {
        // Active set: the j largest scores, all strictly above θ.
        let candidate = active_mass / (b2 * mass + active_weight);
        let upper = if j == 0 { f64::INFINITY } else { pairs[j - 1].0 };
        let lower = if j == pairs.len() { 0.0 } else { pairs[j].0 };
        if candidate >= lower - slack && candidate <= upper + slack {
            return Some(candidate.clamp(0.0, upper_range));
        }
        if j < pairs.len() {
            active_mass += pairs[j].0 * pairs[j].1;
            active_weight += pairs[j].1;
        }
    }
    None
}

/// Bisection solve of the threshold equation on `[0, 1/(1+b²)]`.
pub fn solve_bisection(scores: WeightedScores<'_>, b2: f64, tol: f64) -> Result<Bisection> {
    let hi = 1.0 / (1.0 + b2);
    let f = |theta: f64| scores.residual(b2, theta);
    if f(hi) < 0.0 {
        // Only reachable through rounding; the map is nonnegative at 1/(1+b²).
        return Ok(Bisection { root: hi, iterations: 0, residual: f(hi) });
    }
    bisect(f, 0.0, hi, tol, 200)
}
