//! Population-level F_b machinery on finite-support distributions.
//!
//! For a classifier `g` and a joint law of `(X, Y)` the (normalized) score is
//!
//! ```text
//!     F_b(g) = P(Y = 1, g(X) = 1) / (b²·P(Y = 1) + P(g(X) = 1))
//! ```
//!
//! which lies in `[0, 1/(1+b²)]`. The maximizer thresholds η at the unique
//! root θ* of `b²·θ·P(Y=1) = E(η(X) − θ)₊`, and `F_b(g*) = θ*`.

use serde::{Deserialize, Serialize};

use crate::error::{FbetaError, Result};
use crate::numeric::compensated_sum;
use crate::root::{solve_bisection, solve_sorted, WeightedScores};

/// Trade-off parameter `b` and the normalization convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FBetaParams {
    pub b: f64,
    /// When true the score is divided by `1 + b²`.
    #[serde(default = "default_true")]
    pub normalized: bool,
}

fn default_true() -> bool {
    true
}

impl Default for FBetaParams {
    fn default() -> Self {
        FBetaParams { b: 1.0, normalized: true }
    }
}

impl FBetaParams {
    pub fn new(b: f64) -> Result<Self> {
        if !(b > 0.0) || !b.is_finite() {
            return Err(FbetaError::Argument(format!("b must be a positive finite number, got {b}")));
        }
        Ok(FBetaParams { b, normalized: true })
    }

    pub fn unnormalized(self) -> Self {
        FBetaParams { normalized: false, ..self }
    }

    pub fn b2(&self) -> f64 {
        self.b * self.b
    }

    /// Upper end of the range of the normalized score, `1/(1+b²)`.
    pub fn max_score(&self) -> f64 {
        1.0 / (1.0 + self.b2())
    }

    /// Factor applied to normalized scores when reporting.
    pub fn scale(&self) -> f64 {
        if self.normalized {
            1.0
        } else {
            1.0 + self.b2()
        }
    }
}

/// A threshold on the η scale, always in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Threshold(pub f64);

impl Threshold {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Finite-support joint law of `(X, Y)`: support points, their masses, and
/// η = P(Y = 1 | X) at each point.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    dim: usize,
    /// Row-major `len × dim` support coordinates.
    points: Vec<f64>,
    mass: Vec<f64>,
    eta: Vec<f64>,
}

impl DiscreteDistribution {
    /// Builds and validates a distribution from flattened row-major points.
    pub fn new(dim: usize, points: Vec<f64>, mass: Vec<f64>, eta: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(FbetaError::Invalid("dimension must be at least 1".into()));
        }
        let k = mass.len();
        if k == 0 {
            return Err(FbetaError::Invalid("support must be nonempty".into()));
        }
        if eta.len() != k || points.len() != k * dim {
            return Err(FbetaError::Invalid(format!(
                "support ({} coordinates for dim {dim}), mass ({k}) and eta ({}) lengths disagree",
                points.len(),
                eta.len()
            )));
        }
        if let Some(i) = mass.iter().position(|m| !(*m >= 0.0) || !m.is_finite()) {
            return Err(FbetaError::Invalid(format!("mass[{i}] = {} is not a nonnegative number", mass[i])));
        }
        if let Some(i) = eta.iter().position(|e| !(0.0..=1.0).contains(e)) {
            return Err(FbetaError::Invalid(format!("eta[{i}] = {} lies outside [0, 1]", eta[i])));
        }
        if let Some(i) = points.iter().position(|x| !x.is_finite()) {
            return Err(FbetaError::Invalid(format!("support coordinate {i} is not finite")));
        }
        let total = compensated_sum(mass.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return Err(FbetaError::Invalid(format!("masses sum to {total}, not 1")));
        }
        let dist = DiscreteDistribution { dim, points, mass, eta };
        if !(dist.p_y1() > 0.0) {
            return Err(FbetaError::Invalid("P(Y = 1) must be positive".into()));
        }
        Ok(dist)
    }

    /// One-dimensional support `0, 1, …, K−1`; handy when only the law of η matters.
    pub fn from_masses(mass: Vec<f64>, eta: Vec<f64>) -> Result<Self> {
        let points = (0..mass.len()).map(|i| i as f64).collect();
        Self::new(1, points, mass, eta)
    }

    /// Builds from one coordinate vector per support point.
    pub fn from_rows(rows: &[Vec<f64>], mass: Vec<f64>, eta: Vec<f64>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(FbetaError::Invalid("support points have inconsistent dimension".into()));
        }
        Self::new(dim, rows.concat(), mass, eta)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    /// `P(Y = 1) = Σ massᵢ·ηᵢ`.
    pub fn p_y1(&self) -> f64 {
        compensated_sum(self.mass.iter().zip(&self.eta).map(|(m, e)| m * e))
    }

    /// Residual of the optimal-threshold equation at `theta`:
    /// `b²·θ·P(Y=1) − E(η − θ)₊`.
    pub fn threshold_residual(&self, params: &FBetaParams, theta: f64) -> f64 {
        let excess = compensated_sum(self.mass.iter().zip(&self.eta).map(|(m, e)| m * (e - theta).max(0.0)));
        params.b2() * theta * self.p_y1() - excess
    }

    /// Evaluates a predicate at every support point.
    pub fn tabulate<F: Fn(&[f64]) -> bool>(&self, g: F) -> Vec<bool> {
        (0..self.len()).map(|i| g(self.point(i))).collect()
    }
}

/// How `excess_fbeta` evaluates the optimality gap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExcessMode {
    /// `F_b(g*) − F_b(g)`.
    Direct,
    /// `E|η − θ*|·1{g* ≠ g} / (b²P(Y=1) + P(g = 1))`.
    Disagreement,
}

fn check_classifier(dist: &DiscreteDistribution, g: &[bool]) -> Result<()> {
    if g.len() != dist.len() {
        return Err(FbetaError::Contract(format!(
            "classifier covers {} points but the support has {}",
            g.len(),
            dist.len()
        )));
    }
    Ok(())
}

/// Population F_b score of the bit-vector classifier `g` over the support.
pub fn population_fbeta(dist: &DiscreteDistribution, g: &[bool], params: &FBetaParams) -> Result<f64> {
    check_classifier(dist, g)?;
    let mut tp = 0.0;
    let mut predicted = 0.0;
    for i in 0..dist.len() {
        if g[i] {
            tp += dist.mass[i] * dist.eta[i];
            predicted += dist.mass[i];
        }
    }
    let denom = params.b2() * dist.p_y1() + predicted;
    Ok(params.scale() * (tp / denom))
}

/// Optimal threshold θ*, the unique root of `b²θP(Y=1) = E(η − θ)₊`.
pub fn bayes_threshold(dist: &DiscreteDistribution, params: &FBetaParams) -> Result<Threshold> {
    let p = dist.p_y1();
    if !(p > 0.0) {
        return Err(FbetaError::Domain("optimal threshold undefined when P(Y = 1) = 0".into()));
    }
    let scores = WeightedScores::weighted(&dist.eta, &dist.mass);
    let b2 = params.b2();
    let theta = match solve_sorted(scores, b2) {
        Some(t) => t,
        None => solve_bisection(scores, b2, 1e-12)?.root,
    };
    let residual = dist.threshold_residual(params, theta);
    if residual.abs() >= 1e-10 {
        let refined = solve_bisection(scores, b2, 1e-14)?.root;
        let r2 = dist.threshold_residual(params, refined);
        if r2.abs() >= 1e-10 {
            return Err(FbetaError::Numeric(format!("threshold residual {r2} exceeds 1e-10")));
        }
        return Ok(Threshold(refined));
    }
    Ok(Threshold(theta))
}

/// Bayes classifier `1{η > θ*}` as a bit-vector over the support.
pub fn bayes_classifier(dist: &DiscreteDistribution, params: &FBetaParams) -> Result<Vec<bool>> {
    let theta = bayes_threshold(dist, params)?.0;
    Ok(dist.eta.iter().map(|&e| e > theta).collect())
}

/// Optimality gap `F_b(g*) − F_b(g)`, in either evaluation mode.
pub fn excess_fbeta(
    dist: &DiscreteDistribution,
    g: &[bool],
    params: &FBetaParams,
    mode: ExcessMode,
) -> Result<f64> {
    check_classifier(dist, g)?;
    let theta = bayes_threshold(dist, params)?.0;
    match mode {
        ExcessMode::Direct => {
            let star: Vec<bool> = dist.eta.iter().map(|&e| e > theta).collect();
            Ok(population_fbeta(dist, &star, params)? - population_fbeta(dist, g, params)?)
        }
        ExcessMode::Disagreement => Ok(params.scale() * disagreement_excess(dist, g, theta, params.b2())),
    }
}

/// Weighted-disagreement form of the excess score for a known θ*, normalized convention.
pub fn disagreement_excess(dist: &DiscreteDistribution, g: &[bool], theta: f64, b2: f64) -> f64 {
    let mut gap = 0.0;
    let mut predicted = 0.0;
    for i in 0..dist.len() {
        let star = dist.eta[i] > theta;
        if star != g[i] {
            gap += dist.mass[i] * (dist.eta[i] - theta).abs();
        }
        if g[i] {
            predicted += dist.mass[i];
        }
    }
    gap / (b2 * dist.p_y1() + predicted)
}
