//! Monte Carlo rate experiments.
//!
//! For every `n` in the grid and every replication `r`, the labeled sample is
//! drawn from `stream(seed, [LABELED, i, r])` and the unlabeled sample from
//! `stream(seed, [UNLABELED, i, r])`, where `i` is the index of `n` in the
//! grid. The labeled stream ignores the N rule, so runs that differ only in
//! their N rule share labeled samples.

use fbeta_core::fbeta::disagreement_excess;
use fbeta_core::numeric::{fit_line, pairwise_sum};
use fbeta_core::plugin::{train_plugin_with, TrainOptions};
use fbeta_core::regression::{fit, PiecewiseConstant};
use fbeta_core::rng::stream;
use fbeta_core::synthetic::AnalyticDistribution;
use fbeta_core::{bayes_threshold, empirical_threshold, DiscreteDistribution, FBetaParams, FbetaError, Result};
use fbeta_core::{LabeledDataset, ScoreSample, UnlabeledDataset};
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Scoring};

const LABELED: u64 = 1;
const UNLABELED: u64 = 2;

/// Normal 97.5% quantile used for slope half-widths.
pub const Z_975: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    /// `F_b(g*) − F_b(ĝ)`
    Excess,
    /// `|θ̂ − θ*|`
    ThresholdError,
}

/// Outcome of one replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Replicate {
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: u64,
    pub replication: usize,
    pub theta_hat: f64,
    pub excess: f64,
    pub threshold_error: f64,
    pub histogram: bool,
}

/// Per-`n` summary of one statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: u64,
    pub mean: f64,
    pub se: f64,
    pub median: f64,
    pub zero_fraction: f64,
}

/// Log-log fit of a statistic against `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateFitResult {
    pub schema: String,
    pub statistic: Statistic,
    pub family: String,
    pub replications: usize,
    pub seed: u64,
    pub cells: Vec<CellSummary>,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    /// Delta-method standard error of the slope from the per-cell standard errors.
    pub slope_se: Option<f64>,
    /// Standard error of the slope from the fit residuals.
    pub residual_slope_se: Option<f64>,
    /// `Z_975 · slope_se`
    pub half_width: Option<f64>,
    pub theoretical_exponent: Option<f64>,
    /// Cells with zero mean, left out of the fit.
    pub excluded_cells: usize,
    /// Every cell has zero mean.
    pub infinite_rate: bool,
}

pub const RATE_FIT_SCHEMA: &str = "fbeta-rate-fit/1";

/// Both statistics of one run plus the raw replications.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub excess: RateFitResult,
    pub threshold: RateFitResult,
    pub replicates: Vec<Replicate>,
}

struct Context {
    dist: AnalyticDistribution,
    eval: DiscreteDistribution,
    eval_theta: f64,
    params: FBetaParams,
}

pub fn run_rate_experiment(cfg: &ExperimentConfig) -> Result<RateFitResult> {
    Ok(run_experiment(cfg)?.excess)
}

pub fn run_threshold_experiment(cfg: &ExperimentConfig) -> Result<RateFitResult> {
    Ok(run_experiment(cfg)?.threshold)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let params = cfg.params()?;
    let dist = cfg.family.build(&params)?;
    if cfg.scoring == Scoring::Histogram && dist.dim() != 1 {
        return Err(FbetaError::Argument("histogram scoring needs a one-dimensional family".into()));
    }
    let eval = dist.discretize(cfg.eval_atoms)?;
    let eval_theta = bayes_threshold(&eval, &params)?.0;
    let ctx = Context { dist, eval, eval_theta, params };

    let tasks: Vec<(usize, usize)> =
        (0..cfg.n_grid.len()).flat_map(|i| (0..cfg.replications).map(move |r| (i, r))).collect();
    let run = |&(i, r): &(usize, usize)| replicate(&ctx, cfg, i, r);
    let replicates: Vec<Replicate> = if cfg.parallel {
        tasks.par_iter().map(run).collect::<Result<_>>()?
    } else {
        tasks.iter().map(run).collect::<Result<_>>()?
    };

    let (alpha, beta, d) = (ctx.dist.margin.alpha, ctx.dist.smoothness.beta, ctx.dist.dim() as f64);
    let excess_exp = alpha.map(|a| -(1.0 + a) * beta / (2.0 * beta + d));
    let threshold_exp = Some(-beta / (2.0 * beta + d));
    let summarize = |stat: Statistic, exponent: Option<f64>| {
        let cells = cfg
            .n_grid
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let rows = &replicates[i * cfg.replications..(i + 1) * cfg.replications];
                let values: Vec<f64> = rows
                    .iter()
                    .map(|r| match stat {
                        Statistic::Excess => r.excess,
                        Statistic::ThresholdError => r.threshold_error,
                    })
                    .collect();
                summarize_cell(n, cfg.n_rule.size(n), &values)
            })
            .collect();
        fit_rate(stat, &ctx.dist.name, cfg, cells, exponent)
    };
    Ok(ExperimentOutput {
        excess: summarize(Statistic::Excess, excess_exp),
        threshold: summarize(Statistic::ThresholdError, threshold_exp),
        replicates,
    })
}

fn replicate(ctx: &Context, cfg: &ExperimentConfig, i: usize, r: usize) -> Result<Replicate> {
    let n = cfg.n_grid[i];
    let big_n = cfg.n_rule.size(n);
    let d = ctx.dist.dim();
    let data = ctx.dist.sample_labeled_with(n, &mut stream(cfg.seed, &[LABELED, i as u64, r as u64]))?;
    if data.positives() == 0 {
        return Err(FbetaError::TrainingDegenerate(format!(
            "all labels are 0 at n = {n}, replication {r}; increase n"
        )));
    }
    let mut rng = stream(cfg.seed, &[UNLABELED, i as u64, r as u64]);
    let eta_hat = fit(&data, cfg.estimator.resolve(n, d)?)?;
    let piecewise = eta_hat.piecewise();
    let histogram = match cfg.scoring {
        Scoring::Literal => false,
        Scoring::Histogram => true,
        Scoring::Auto => piecewise.is_some() && d == 1 && big_n > 16 * n as u64,
    };

    let (theta_hat, classify): (f64, Vec<f64>) = if histogram {
        let pw = piecewise.as_ref().ok_or_else(|| {
            FbetaError::Argument(format!("histogram scoring needs a piecewise-constant estimate, got {:?}", eta_hat.method()))
        })?;
        let sample = histogram_sample(&ctx.dist, pw, &data, big_n, &mut rng)?;
        let theta = empirical_threshold(&sample, &ctx.params, 1e-10)?.threshold.0;
        (theta, pw_scores(pw, &ctx.eval))
    } else {
        let big_n = usize::try_from(big_n).map_err(|_| FbetaError::Size(format!("N = {big_n} is too large")))?;
        let unlabeled = UnlabeledDataset::new(d, ctx.dist.sample_points_with(big_n, &mut rng))?;
        let clf = train_plugin_with(&data, &unlabeled, &cfg.estimator, &ctx.params, TrainOptions::default())?;
        let scores = match &piecewise {
            Some(pw) => pw_scores(pw, &ctx.eval),
            None => clf.eta_hat.evaluate_batch(ctx.eval.points())?,
        };
        (clf.theta_hat.0, scores)
    };

    let g: Vec<bool> = classify.iter().map(|&s| s > theta_hat).collect();
    let excess = ctx.params.scale() * disagreement_excess(&ctx.eval, &g, ctx.eval_theta, ctx.params.b2());
    Ok(Replicate {
        n,
        big_n,
        replication: r,
        theta_hat,
        excess,
        threshold_error: (theta_hat - ctx.dist.theta_star()).abs(),
        histogram,
    })
}

fn pw_scores(pw: &PiecewiseConstant, eval: &DiscreteDistribution) -> Vec<f64> {
    eval.points().iter().map(|&x| pw.evaluate(x)).collect()
}

/// Scores of `N` marginal draws under a piecewise-constant η̂, as multinomial
/// counts over its pieces. Labeled features are appended when `N < n`.
pub fn histogram_sample<R: Rng + ?Sized>(
    dist: &AnalyticDistribution,
    pw: &PiecewiseConstant,
    labeled: &LabeledDataset,
    big_n: u64,
    rng: &mut R,
) -> Result<ScoreSample> {
    let cdf = |x: f64| dist.cdf_1d(x).ok_or_else(|| FbetaError::Argument("histogram scoring needs d = 1".into()));
    let mut edges = Vec::with_capacity(pw.breaks.len() + 2);
    edges.push(0.0);
    for &b in &pw.breaks {
        edges.push(cdf(b)?);
    }
    edges.push(1.0);
    let mut counts = Vec::with_capacity(pw.values.len());
    let mut remaining = big_n;
    let mut left = 1.0;
    for j in 0..pw.values.len() {
        let prob = (edges[j + 1] - edges[j]).max(0.0);
        let c = if remaining == 0 || prob <= 0.0 {
            0
        } else if j + 1 == pw.values.len() || prob >= left {
            remaining
        } else {
            Binomial::new(remaining, (prob / left).clamp(0.0, 1.0))
                .map_err(|e| FbetaError::Numeric(e.to_string()))?
                .sample(rng)
        };
        counts.push(c);
        remaining -= c;
        left -= prob;
    }
    let mut values = pw.values.clone();
    if big_n < labeled.len() as u64 {
        for &x in labeled.points() {
            values.push(pw.evaluate(x));
            counts.push(1);
        }
    }
    Ok(ScoreSample::from_counts(values, counts)?.with_source(labeled.len()))
}

fn summarize_cell(n: usize, big_n: u64, values: &[f64]) -> CellSummary {
    let r = values.len() as f64;
    let mean = pairwise_sum(values) / r;
    let se = if values.len() > 1 {
        let dev: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
        (pairwise_sum(&dev) / (r - 1.0) / r).sqrt()
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = sorted.len();
    let median = if k % 2 == 1 { sorted[k / 2] } else { 0.5 * (sorted[k / 2 - 1] + sorted[k / 2]) };
    let zero_fraction = values.iter().filter(|&&v| v == 0.0).count() as f64 / r;
    CellSummary { n, big_n, mean, se, median, zero_fraction }
}

/// Least squares of `log mean` on `log n` over cells with positive mean.
pub fn fit_cells(cells: &[CellSummary]) -> (Option<(f64, f64, f64, f64)>, usize) {
    let used: Vec<&CellSummary> = cells.iter().filter(|c| c.mean > 0.0).collect();
    let excluded = cells.len() - used.len();
    let xs: Vec<f64> = used.iter().map(|c| (c.n as f64).ln()).collect();
    let ys: Vec<f64> = used.iter().map(|c| c.mean.ln()).collect();
    let Some(line) = fit_line(&xs, &ys) else {
        return (None, excluded);
    };
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let var: f64 = xs
        .iter()
        .zip(&used)
        .map(|(x, c)| ((x - mx) / sxx).powi(2) * (c.se / c.mean).powi(2))
        .sum();
    (Some((line.slope, line.intercept, var.sqrt(), line.residual_slope_se)), excluded)
}

fn fit_rate(
    statistic: Statistic,
    family: &str,
    cfg: &ExperimentConfig,
    cells: Vec<CellSummary>,
    theoretical_exponent: Option<f64>,
) -> RateFitResult {
    let (fit, excluded_cells) = fit_cells(&cells);
    let infinite_rate = excluded_cells == cells.len();
    let finite = |v: f64| v.is_finite().then_some(v);
    RateFitResult {
        schema: RATE_FIT_SCHEMA.into(),
        statistic,
        family: family.into(),
        replications: cfg.replications,
        seed: cfg.seed,
        slope: fit.map(|f| f.0),
        intercept: fit.map(|f| f.1),
        slope_se: fit.map(|f| f.2),
        residual_slope_se: fit.and_then(|f| finite(f.3)),
        half_width: fit.map(|f| Z_975 * f.2),
        theoretical_exponent,
        excluded_cells,
        infinite_rate,
        cells,
    }
}
