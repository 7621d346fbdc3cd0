//! Empirical threshold estimation from scores on an unlabeled sample.
//!
//! Given η̂ evaluated at the unlabeled points, θ̂ is the unique root of
//! `b²·θ·mean(η̂) = mean((η̂ − θ)₊)`. The distance to the population
//! threshold is controlled by the L1 distance between the CDF of η(X) and the
//! empirical CDF of the scores; [`cdf_gap_bound`] evaluates that bound.

use serde::{Deserialize, Serialize};

use crate::error::{FbetaError, Result};
use crate::fbeta::{DiscreteDistribution, FBetaParams, Threshold};
use crate::numeric::adaptive_simpson;
use crate::regression::SmoothnessSpec;
use crate::root::{solve_bisection, solve_sorted, WeightedScores};

/// Scores `η̂(Xᵢ)` on an unlabeled sample, optionally with integer-valued
/// multiplicities (a histogram of the sample).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSample {
    values: Vec<f64>,
    weights: Option<Vec<f64>>,
    /// Size of the labeled set used to fit η̂, if known.
    pub n_source: Option<usize>,
}

impl ScoreSample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(FbetaError::Invalid("score sample must be nonempty".into()));
        }
        if let Some(i) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(FbetaError::Invalid(format!("score[{i}] = {} lies outside [0, 1]", values[i])));
        }
        Ok(ScoreSample { values, weights: None, n_source: None })
    }

    /// Distinct scores with their counts in the sample.
    pub fn from_counts(values: Vec<f64>, counts: Vec<u64>) -> Result<Self> {
        if values.len() != counts.len() {
            return Err(FbetaError::Invalid("values and counts differ in length".into()));
        }
        let (values, counts): (Vec<f64>, Vec<u64>) =
            values.into_iter().zip(counts).filter(|(_, c)| *c > 0).unzip();
        let mut s = Self::new(values)?;
        s.weights = Some(counts.into_iter().map(|c| c as f64).collect());
        Ok(s)
    }

    pub fn with_source(mut self, n_source: usize) -> Self {
        self.n_source = Some(n_source);
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of sample points represented (sum of counts).
    pub fn sample_size(&self) -> f64 {
        self.scores().total_weight()
    }

    pub fn mean(&self) -> f64 {
        self.scores().mean()
    }

    pub(crate) fn scores(&self) -> WeightedScores<'_> {
        match &self.weights {
            Some(w) => WeightedScores::weighted(&self.values, w),
            None => WeightedScores::uniform(&self.values),
        }
    }

    /// Empirical CDF `(1/N)·#{i : η̂(Xᵢ) ≤ t}`.
    pub fn ecdf(&self) -> StepCdf {
        let w = self.weights.clone().unwrap_or_else(|| vec![1.0; self.values.len()]);
        StepCdf::new(&self.values, &w)
    }
}

/// Which algorithm solves the threshold equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdSolver {
    /// Sort the scores and solve the active linear piece.
    #[default]
    Exact,
    /// Bisection on `[0, 1/(1+b²)]`.
    Bisection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub threshold: Threshold,
    /// Residual of the threshold equation (normalized by sample size).
    pub residual: f64,
    /// Every score is zero, so every θ solves the equation; θ̂ = 0 by convention.
    pub degenerate: bool,
    pub solver: ThresholdSolver,
}

/// Tolerance `n^{-β/(2β+d)}` when the source size and smoothness are known,
/// `1e-10` otherwise.
pub fn default_tolerance(n_source: Option<usize>, smoothness: Option<(&SmoothnessSpec, usize)>) -> f64 {
    match (n_source, smoothness) {
        (Some(n), Some((spec, d))) if n > 0 => (n as f64).powf(-spec.beta / (2.0 * spec.beta + d as f64)),
        _ => 1e-10,
    }
}

/// Exact empirical threshold θ̂.
pub fn empirical_threshold(s: &ScoreSample, params: &FBetaParams, tol: f64) -> Result<ThresholdEstimate> {
    empirical_threshold_with(s, params, tol, ThresholdSolver::Exact)
}

pub fn empirical_threshold_with(
    s: &ScoreSample,
    params: &FBetaParams,
    tol: f64,
    solver: ThresholdSolver,
) -> Result<ThresholdEstimate> {
    if !(tol > 0.0) {
        return Err(FbetaError::Argument(format!("tolerance must be positive, got {tol}")));
    }
    let scores = s.scores();
    let b2 = params.b2();
    if !(scores.mean() > 0.0) {
        return Ok(ThresholdEstimate {
            threshold: Threshold(0.0),
            residual: 0.0,
            degenerate: true,
            solver,
        });
    }
    let theta = match solver {
        ThresholdSolver::Exact => match solve_sorted(scores, b2) {
            Some(t) if scores.residual(b2, t).abs() < tol => t,
            _ => solve_bisection(scores, b2, tol.min(1e-12))?.root,
        },
        ThresholdSolver::Bisection => solve_bisection(scores, b2, tol)?.root,
    };
    let theta = theta.clamp(0.0, params.max_score());
    Ok(ThresholdEstimate {
        threshold: Threshold(theta),
        residual: scores.residual(b2, theta),
        degenerate: false,
        solver,
    })
}

/// A CDF on `[0, 1]`, the law of η(X) under `P_X`.
pub trait EtaCdf {
    /// `P(η(X) ≤ t)`.
    fn cdf(&self, t: f64) -> f64;

    /// Jump locations when the law is discrete; `None` for continuous laws.
    fn atoms(&self) -> Option<Vec<f64>> {
        None
    }
}

/// Right-continuous step CDF of a weighted finite set of values.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCdf {
    sorted: Vec<f64>,
    cumulative: Vec<f64>,
}

impl StepCdf {
    pub fn new(values: &[f64], weights: &[f64]) -> Self {
        let mut pairs: Vec<(f64, f64)> = values.iter().copied().zip(weights.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        let mut acc = 0.0;
        let mut sorted = Vec::with_capacity(pairs.len());
        let mut cumulative = Vec::with_capacity(pairs.len());
        for (v, w) in pairs {
            acc += w;
            if sorted.last() == Some(&v) {
                *cumulative.last_mut().unwrap() = acc / total;
            } else {
                sorted.push(v);
                cumulative.push(acc / total);
            }
        }
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        StepCdf { sorted, cumulative }
    }

    /// Law of η(X) for a discrete distribution.
    pub fn of_distribution(dist: &DiscreteDistribution) -> Self {
        Self::new(dist.eta(), dist.mass())
    }
}

impl EtaCdf for StepCdf {
    fn cdf(&self, t: f64) -> f64 {
        let k = self.sorted.partition_point(|&v| v <= t);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    fn atoms(&self) -> Option<Vec<f64>> {
        Some(self.sorted.clone())
    }
}

/// Wraps a closure as a continuous CDF.
pub struct ContinuousCdf<F: Fn(f64) -> f64>(pub F);

impl<F: Fn(f64) -> f64> EtaCdf for ContinuousCdf<F> {
    fn cdf(&self, t: f64) -> f64 {
        (self.0)(t)
    }
}

/// `∫₀¹ |P(η(X) ≤ t) − F̂_N(t)| dt`, evaluated exactly for discrete laws and by
/// adaptive quadrature (absolute tolerance 1e-8) otherwise.
pub fn cdf_l1_distance<C: EtaCdf + ?Sized>(law: &C, s: &ScoreSample) -> Result<f64> {
    let ecdf = s.ecdf();
    let mut knots: Vec<f64> = vec![0.0, 1.0];
    knots.extend(ecdf.sorted.iter().copied());
    let atoms = law.atoms();
    if let Some(a) = &atoms {
        knots.extend(a.iter().copied().filter(|t| (0.0..=1.0).contains(t)));
    }
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let segments = knots.len() - 1;
    let mut total = 0.0;
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let c = ecdf.cdf(a);
        if atoms.is_some() {
            total += (law.cdf(a) - c).abs() * (b - a);
        } else {
            let f = |t: f64| (law.cdf(t) - c).abs();
            total += adaptive_simpson(&f, a, b, 1e-8 / segments as f64)?;
        }
    }
    Ok(total)
}

/// Upper bound on `|θ̂ − θ*|` for `b = 1`: the CDF L1 gap divided by `P(Y = 1)`.
pub fn cdf_gap_bound<C: EtaCdf + ?Sized>(law: &C, s: &ScoreSample, p_y1: f64) -> Result<f64> {
    cdf_gap_bound_for(law, s, p_y1, &FBetaParams::default())
}

/// Same bound for general `b`: `∫|F − F̂| / (b²·P(Y = 1))`.
pub fn cdf_gap_bound_for<C: EtaCdf + ?Sized>(
    law: &C,
    s: &ScoreSample,
    p_y1: f64,
    params: &FBetaParams,
) -> Result<f64> {
    if !(p_y1 > 0.0) {
        return Err(FbetaError::Domain(format!("P(Y = 1) must be positive, got {p_y1}")));
    }
    Ok(cdf_l1_distance(law, s)? / (params.b2() * p_y1))
}
