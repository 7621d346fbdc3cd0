//! Distribution families with known η, θ*, margin behavior and smoothness.
//!
//! Every family has a marginal that is a finite mixture of uniform
//! distributions on disjoint Euclidean balls (intervals when `d = 1`). The
//! optimal threshold is computed on a fine discretization of the marginal and
//! checked at two resolutions.

pub mod bumps;
pub mod hard;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{FbetaError, Result};
use crate::fbeta::{bayes_threshold, DiscreteDistribution, FBetaParams};
use crate::numeric::{adaptive_simpson, compensated_sum, fit_line};
use crate::plugin::UnlabeledDataset;
use crate::regression::{LabeledDataset, SmoothnessSpec};
use crate::root::bisect;

pub use hard::{build_hard_family, compute_bprime, compute_bprime_with, minimax_parameters, HardFamily, HardFamilyParams};

/// Atoms used for the reference discretization of a family.
pub const REFERENCE_ATOMS: usize = 1_000_000;

/// Default δ grid `{2⁻³, …, 2⁻⁹}` for margin checks.
pub fn default_delta_grid() -> Vec<f64> {
    (3..=9).map(|k| 2f64.powi(-k)).collect()
}

/// Margin condition `P(0 < |η(X) − θ*| ≤ δ) ≤ C₀·δ^α` for `δ ≤ δ₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginSpec {
    /// `None` means no mass near θ* at all (α = ∞).
    pub alpha: Option<f64>,
    #[serde(rename = "C0")]
    pub c0: f64,
    pub delta0: f64,
}

impl MarginSpec {
    pub fn new(alpha: Option<f64>, c0: f64, delta0: f64) -> Result<Self> {
        if !(c0 > 0.0) || !(delta0 > 0.0 && delta0 <= 1.0 / 12.0) || alpha.is_some_and(|a| !(a > 0.0)) {
            return Err(FbetaError::Argument(format!(
                "margin needs alpha > 0, C0 > 0 and delta0 in (0, 1/12]; got {alpha:?}, {c0}, {delta0}"
            )));
        }
        Ok(MarginSpec { alpha, c0, delta0 })
    }

    /// `c₀ = C₀ ∨ δ₀^{−α}`, the constant valid for every δ.
    pub fn global_constant(&self) -> f64 {
        match self.alpha {
            Some(a) => self.c0.max(self.delta0.powf(-a)),
            None => self.c0,
        }
    }
}

/// Strong density constants of a marginal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensitySpec {
    pub mu_min: f64,
    pub mu_max: f64,
    pub c0_reg: f64,
    pub r0_reg: f64,
}

/// Uniform distribution on a Euclidean ball, with a mixture weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
    pub weight: f64,
}

/// Lebesgue measure of the unit ball in `ℝ^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * std::f64::consts::PI / d as f64,
    }
}

impl Ball {
    pub fn volume(&self) -> f64 {
        unit_ball_volume(self.center.len()) * self.radius.powi(self.center.len() as i32)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        sq_norm_diff(x, &self.center) <= self.radius * self.radius
    }

    pub fn density(&self) -> f64 {
        self.weight / self.volume()
    }
}

fn sq_norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// Closed-form regression functions.
#[derive(Debug, Clone)]
pub enum EtaModel {
    /// `clip(θ_c + s·sign(x − x₀)·|x − x₀|^e, 0, 1)`.
    Smooth1d { theta_c: f64, amplitude: f64, exponent: f64, x0: f64 },
    Constant { value: f64 },
    /// `low + (high − low)·v((x − gap_start)/(gap_end − gap_start))`.
    Separated { low: f64, high: f64, gap_start: f64, gap_end: f64 },
    Hard(Box<HardFamily>),
}

impl EtaModel {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            EtaModel::Smooth1d { theta_c, amplitude, exponent, x0 } => {
                let t = x[0] - x0;
                (theta_c + amplitude * t.signum() * t.abs().powf(*exponent)).clamp(0.0, 1.0)
            }
            EtaModel::Constant { value } => *value,
            EtaModel::Separated { low, high, gap_start, gap_end } => {
                low + (high - low) * bumps::v((x[0] - gap_start) / (gap_end - gap_start))
            }
            EtaModel::Hard(h) => h.eta(x),
        }
    }
}

/// A joint law with closed-form η and a ball-mixture marginal.
#[derive(Debug, Clone)]
pub struct AnalyticDistribution {
    pub name: String,
    dim: usize,
    model: EtaModel,
    components: Vec<Ball>,
    cumulative: Vec<f64>,
    params: FBetaParams,
    theta_star: f64,
    p_y1: f64,
    pub margin: MarginSpec,
    pub smoothness: SmoothnessSpec,
    reference: Arc<DiscreteDistribution>,
}

impl AnalyticDistribution {
    /// Validates the marginal, discretizes it at two resolutions and solves for θ*.
    pub fn build(
        name: &str,
        model: EtaModel,
        components: Vec<Ball>,
        params: FBetaParams,
        margin: MarginSpec,
        smoothness: SmoothnessSpec,
    ) -> Result<Self> {
        let dim = components.first().map_or(0, |c| c.center.len());
        if dim == 0 || components.iter().any(|c| c.center.len() != dim || !(c.radius > 0.0) || !(c.weight >= 0.0)) {
            return Err(FbetaError::Construction("marginal components must be balls of positive radius in a common dimension".into()));
        }
        for (i, a) in components.iter().enumerate() {
            for b in &components[i + 1..] {
                if sq_norm_diff(&a.center, &b.center).sqrt() < a.radius + b.radius {
                    return Err(FbetaError::Construction("marginal components overlap".into()));
                }
            }
        }
        let total = compensated_sum(components.iter().map(|c| c.weight));
        if (total - 1.0).abs() > 1e-12 {
            return Err(FbetaError::Construction(format!("component weights sum to {total}")));
        }
        let mut acc = 0.0;
        let cumulative = components
            .iter()
            .map(|c| {
                acc += c.weight;
                acc
            })
            .collect();
        let mut dist = AnalyticDistribution {
            name: name.to_string(),
            dim,
            model,
            components,
            cumulative,
            params,
            theta_star: f64::NAN,
            p_y1: f64::NAN,
            margin,
            smoothness,
            reference: Arc::new(DiscreteDistribution::from_masses(vec![1.0], vec![1.0])?),
        };
        let integral = dist.density_integral()?;
        if (integral - 1.0).abs() > 1e-6 {
            return Err(FbetaError::Construction(format!("density integrates to {integral}")));
        }
        let fine = dist.discretize(REFERENCE_ATOMS)?;
        let coarse = dist.discretize(REFERENCE_ATOMS / 2)?;
        let theta = bayes_threshold(&fine, &params)?.0;
        let theta_coarse = bayes_threshold(&coarse, &params)?.0;
        if (theta - theta_coarse).abs() > 1e-6 {
            return Err(FbetaError::Construction(format!(
                "threshold not resolved by discretization: {theta} vs {theta_coarse}"
            )));
        }
        dist.theta_star = theta;
        dist.p_y1 = fine.p_y1();
        dist.reference = Arc::new(fine);
        let density = verify_strong_density(&dist);
        if !density.violations.is_empty() {
            return Err(FbetaError::Construction(density.violations.join("; ")));
        }
        Ok(dist)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn model(&self) -> &EtaModel {
        &self.model
    }

    pub fn components(&self) -> &[Ball] {
        &self.components
    }

    pub fn params(&self) -> &FBetaParams {
        &self.params
    }

    pub fn theta_star(&self) -> f64 {
        self.theta_star
    }

    pub fn p_y1(&self) -> f64 {
        self.p_y1
    }

    /// Discretization at [`REFERENCE_ATOMS`] used for θ*.
    pub fn reference_atoms(&self) -> &DiscreteDistribution {
        &self.reference
    }

    pub fn eta(&self, x: &[f64]) -> f64 {
        self.model.eval(x)
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        self.components.iter().filter(|c| c.contains(x)).map(Ball::density).sum()
    }

    fn density_integral(&self) -> Result<f64> {
        if self.dim != 1 {
            return Ok(compensated_sum(self.components.iter().map(|c| c.density() * c.volume())));
        }
        let mut total = 0.0;
        for c in &self.components {
            let (a, b) = (c.center[0] - c.radius, c.center[0] + c.radius);
            let f = |x: f64| self.density(&[x]);
            total += adaptive_simpson(&f, a + 1e-12 * c.radius, b - 1e-12 * c.radius, 1e-10)?;
        }
        Ok(total)
    }

    /// Marginal CDF; `None` unless `d = 1`.
    pub fn cdf_1d(&self, x: f64) -> Option<f64> {
        if self.dim != 1 {
            return None;
        }
        Some(
            self.components
                .iter()
                .map(|c| c.weight * ((x - (c.center[0] - c.radius)) / (2.0 * c.radius)).clamp(0.0, 1.0))
                .sum(),
        )
    }

    /// Finite-support approximation with about `atoms` support points:
    /// midpoint rule on each interval when `d = 1`, lattice points inside
    /// each ball otherwise. Each component keeps its exact mass.
    pub fn discretize(&self, atoms: usize) -> Result<DiscreteDistribution> {
        let per = (atoms / self.components.len()).max(1);
        let mut points = Vec::new();
        let mut mass = Vec::new();
        for c in &self.components {
            let cell_points = ball_lattice(c, per);
            let k = cell_points.len() / self.dim;
            for p in cell_points.chunks(self.dim) {
                points.extend_from_slice(p);
                mass.push(c.weight / k as f64);
            }
        }
        let eta = points.chunks(self.dim).map(|p| self.eta(p)).collect();
        DiscreteDistribution::new(self.dim, points, mass, eta)
    }

    fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) {
        let r: f64 = rng.random();
        let j = self.cumulative.partition_point(|&c| c <= r).min(self.components.len() - 1);
        let c = &self.components[j];
        if self.dim == 1 {
            out.push(c.center[0] + c.radius * (2.0 * rng.random::<f64>() - 1.0));
            return;
        }
        let dir: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dir.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
        let radius = c.radius * rng.random::<f64>().powf(1.0 / self.dim as f64);
        out.extend(dir.iter().zip(&c.center).map(|(v, z)| z + radius * v / norm));
    }

    /// `n` feature vectors from the marginal, row-major.
    pub fn sample_points_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let mut out = Vec::with_capacity(n * self.dim);
        for _ in 0..n {
            self.sample_point(rng, &mut out);
        }
        out
    }

    pub fn sample_labeled_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<LabeledDataset> {
        let mut points = Vec::with_capacity(n * self.dim);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            self.sample_point(rng, &mut points);
            let eta = self.eta(&points[i * self.dim..]);
            labels.push(u8::from(rng.random::<f64>() < eta));
        }
        LabeledDataset::new(self.dim, points, labels)
    }

    pub fn sample_labeled(&self, n: usize, seed: u64) -> Result<LabeledDataset> {
        self.sample_labeled_with(n, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn sample_unlabeled(&self, n: usize, seed: u64) -> Result<UnlabeledDataset> {
        UnlabeledDataset::new(self.dim, self.sample_points_with(n, &mut ChaCha8Rng::seed_from_u64(seed)))
    }
}

/// Lattice points inside a ball, about `target` of them.
fn ball_lattice(c: &Ball, target: usize) -> Vec<f64> {
    let d = c.center.len();
    if d == 1 {
        return (0..target)
            .map(|i| c.center[0] - c.radius + c.radius * (2.0 * i as f64 + 1.0) / target as f64)
            .collect();
    }
    let fill = unit_ball_volume(d) / 2f64.powi(d as i32);
    let per_axis = ((target as f64 / fill).powf(1.0 / d as f64).floor() as usize).max(1);
    let step = 2.0 * c.radius / per_axis as f64;
    let mut out = Vec::new();
    let mut idx = vec![0usize; d];
    let mut p = vec![0.0; d];
    loop {
        for (j, pj) in p.iter_mut().enumerate() {
            *pj = c.center[j] - c.radius + step * (idx[j] as f64 + 0.5);
        }
        if c.contains(&p) {
            out.extend_from_slice(&p);
        }
        let mut j = 0;
        while j < d {
            idx[j] += 1;
            if idx[j] < per_axis {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
        if j == d {
            break;
        }
    }
    if out.is_empty() {
        out.extend_from_slice(&c.center);
    }
    out
}

/// Outcome of a margin check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    pub deltas: Vec<f64>,
    /// `P(0 < |η(X) − θ*| ≤ δ)` per δ, by quadrature on the reference atoms.
    pub probabilities: Vec<f64>,
    /// Zero: the probabilities are computed by quadrature, not sampled.
    pub standard_errors: Vec<f64>,
    /// Slope of log-probability against log δ over the positive entries.
    pub exponent: Option<f64>,
    /// Every probability is zero.
    pub infinite: bool,
}

pub fn verify_margin(dist: &AnalyticDistribution, deltas: &[f64]) -> MarginReport {
    let atoms = dist.reference_atoms();
    let theta = dist.theta_star;
    let gaps: Vec<(f64, f64)> = atoms
        .eta()
        .iter()
        .zip(atoms.mass())
        .map(|(&e, &m)| ((e - theta).abs(), m))
        .filter(|&(g, _)| g > 0.0)
        .collect();
    let probabilities: Vec<f64> = deltas
        .iter()
        .map(|&delta| compensated_sum(gaps.iter().filter(|&&(g, _)| g <= delta).map(|&(_, m)| m)))
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = deltas
        .iter()
        .zip(&probabilities)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&d, &p)| (d.ln(), p.ln()))
        .unzip();
    let infinite = xs.is_empty();
    MarginReport {
        deltas: deltas.to_vec(),
        standard_errors: vec![0.0; deltas.len()],
        exponent: fit_line(&xs, &ys).map(|f| f.slope),
        infinite,
        probabilities,
    }
}

/// Outcome of a strong density check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub spec: DensitySpec,
    /// Distinct density values taken on the support, ascending.
    pub levels: Vec<f64>,
    /// Smallest `λ(A ∩ B(x, r)) / λ(B(x, r))` seen in the spot checks.
    pub min_regularity_ratio: f64,
    /// Probes between and beyond the components all had zero density.
    pub outside_support_zero: bool,
    pub violations: Vec<String>,
}

pub fn verify_strong_density(dist: &AnalyticDistribution) -> DensityReport {
    let d = dist.dim;
    let mut violations = Vec::new();
    let mut levels: Vec<f64> = dist.components.iter().filter(|c| c.weight > 0.0).map(Ball::density).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    // Grid scan on lattice points of the support.
    let (mut mu_min, mut mu_max) = (f64::INFINITY, 0.0f64);
    for c in dist.components.iter().filter(|c| c.weight > 0.0) {
        for p in ball_lattice(c, 64).chunks(d) {
            let mu = dist.density(p);
            mu_min = mu_min.min(mu);
            mu_max = mu_max.max(mu);
        }
    }
    if !(mu_min > 0.0) {
        violations.push(format!("density lower bound {mu_min} is not positive"));
    }
    let r0 = dist.components.iter().filter(|c| c.weight > 0.0).map(|c| c.radius).fold(f64::INFINITY, f64::min);
    let c0 = 0.5f64.powi(d as i32);
    // Probes just outside each component, offset along the first axis.
    let mut outside_support_zero = true;
    for c in &dist.components {
        for sign in [-1.0, 1.0] {
            let mut p = c.center.clone();
            p[0] += sign * c.radius * (1.0 + 1e-9);
            if dist.components.iter().all(|o| !o.contains(&p)) && dist.density(&p) != 0.0 {
                outside_support_zero = false;
            }
        }
    }
    if !outside_support_zero {
        violations.push("density is nonzero outside the support".into());
    }
    let min_regularity_ratio = regularity_spot_check(dist, r0);
    if min_regularity_ratio < c0 - 0.05 {
        violations.push(format!("regularity ratio {min_regularity_ratio} below {c0}"));
    }
    DensityReport {
        spec: DensitySpec { mu_min, mu_max, c0_reg: c0, r0_reg: r0 },
        levels,
        min_regularity_ratio,
        outside_support_zero,
        violations,
    }
}

/// `λ(A ∩ B(x, r)) / λ(B(x, r))` at points of the support for `r ≤ r0`:
/// exact for intervals, Monte Carlo (4000 points) for balls.
fn regularity_spot_check(dist: &AnalyticDistribution, r0: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst = f64::INFINITY;
    for c in dist.components.iter().filter(|c| c.weight > 0.0) {
        for trial in 0..8 {
            let mut x = Vec::new();
            // Boundary points are the worst case.
            if trial < 2 {
                x = c.center.clone();
                x[0] += if trial == 0 { -c.radius } else { c.radius };
            } else {
                sample_in(c, &mut rng, &mut x);
            }
            let r = r0 * (0.25 + 0.75 * rng.random::<f64>());
            let ratio = if dist.dim == 1 {
                let overlap: f64 = dist
                    .components
                    .iter()
                    .map(|o| {
                        let lo = (o.center[0] - o.radius).max(x[0] - r);
                        let hi = (o.center[0] + o.radius).min(x[0] + r);
                        (hi - lo).max(0.0)
                    })
                    .sum();
                overlap / (2.0 * r)
            } else {
                let probe = Ball { center: x.clone(), radius: r, weight: 1.0 };
                let mut hits = 0usize;
                let mut y = Vec::with_capacity(dist.dim);
                for _ in 0..4000 {
                    y.clear();
                    sample_in(&probe, &mut rng, &mut y);
                    if dist.components.iter().any(|o| o.weight > 0.0 && o.contains(&y)) {
                        hits += 1;
                    }
                }
                hits as f64 / 4000.0
            };
            worst = worst.min(ratio);
        }
    }
    worst
}

fn sample_in<R: Rng + ?Sized>(c: &Ball, rng: &mut R, out: &mut Vec<f64>) {
    let d = c.center.len();
    if d == 1 {
        out.push(c.center[0] + c.radius * (2.0 * rng.random::<f64>() - 1.0));
        return;
    }
    let dir: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let norm = dir.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
    let radius = c.radius * rng.random::<f64>().powf(1.0 / d as f64);
    out.extend(dir.iter().zip(&c.center).map(|(v, z)| z + radius * v / norm));
}

fn unit_interval() -> Vec<Ball> {
    vec![Ball { center: vec![0.5], radius: 0.5, weight: 1.0 }]
}

/// `X ~ U[0, 1]` and `η(x) = clip(θ_c + s·sign(x − ½)·|x − ½|^{1/α})`, with
/// `θ_c` solved so that it is the optimal threshold. The margin exponent is α
/// and η is β-Hölder whenever `αβ ≤ 1`.
pub fn make_smooth_1d_family(beta: f64, alpha: f64, params: &FBetaParams) -> Result<AnalyticDistribution> {
    make_smooth_1d_family_with(beta, alpha, 0.5, params)
}

pub fn make_smooth_1d_family_with(
    beta: f64,
    alpha: f64,
    amplitude: f64,
    params: &FBetaParams,
) -> Result<AnalyticDistribution> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(FbetaError::Construction(format!("beta must lie in (0, 1], got {beta}")));
    }
    if !(alpha > 0.0) || alpha * beta > 1.0 + 1e-12 {
        return Err(FbetaError::Construction(format!(
            "need alpha > 0 and alpha*beta <= 1, got alpha={alpha}, beta={beta}"
        )));
    }
    if !(amplitude > 0.0 && amplitude <= 1.0) {
        return Err(FbetaError::Construction(format!("amplitude must lie in (0, 1], got {amplitude}")));
    }
    let exponent = 1.0 / alpha;
    let b2 = params.b2();
    let eta_at = |theta: f64, x: f64| {
        let t = x - 0.5;
        (theta + amplitude * t.signum() * t.abs().powf(exponent)).clamp(0.0, 1.0)
    };
    let expect = |f: &dyn Fn(f64) -> f64| -> f64 {
        adaptive_simpson(f, 0.0, 0.5, 1e-13).unwrap_or(f64::NAN) + adaptive_simpson(f, 0.5, 1.0, 1e-13).unwrap_or(f64::NAN)
    };
    let balance = |theta: f64| {
        let mean = expect(&|x| eta_at(theta, x));
        let excess = expect(&|x| (eta_at(theta, x) - theta).max(0.0));
        b2 * theta * mean - excess
    };
    let theta_c = bisect(balance, 0.0, params.max_score(), 1e-14, 200)?.root;
    let model = EtaModel::Smooth1d { theta_c, amplitude, exponent, x0: 0.5 };
    let lipschitz = bumps::holder_seminorm(|x| model.eval(&[x]), 0.0, 1.0, beta, 1201).max(f64::MIN_POSITIVE);
    let margin = MarginSpec::new(Some(alpha), 2.0 * amplitude.powf(-alpha), 1.0 / 12.0)?;
    let dist = AnalyticDistribution::build(
        "smooth_1d",
        model,
        unit_interval(),
        *params,
        margin,
        SmoothnessSpec::new(beta, lipschitz)?,
    )?;
    if (dist.theta_star - theta_c).abs() > 1e-6 {
        return Err(FbetaError::Construction(format!(
            "discretized threshold {} departs from the calibrated {theta_c}",
            dist.theta_star
        )));
    }
    let report = verify_margin(&dist, &default_delta_grid());
    match report.exponent {
        Some(e) if (e - alpha).abs() <= 0.2 => Ok(dist),
        other => Err(FbetaError::Construction(format!(
            "measured margin exponent {other:?} is not within 0.2 of {alpha}"
        ))),
    }
}

/// `X ~ U[0, 1]` with constant η.
pub fn make_constant_family(value: f64, params: &FBetaParams) -> Result<AnalyticDistribution> {
    if !(value > 0.0 && value <= 1.0) {
        return Err(FbetaError::Construction(format!("constant eta must lie in (0, 1], got {value}")));
    }
    AnalyticDistribution::build(
        "constant",
        EtaModel::Constant { value },
        unit_interval(),
        *params,
        MarginSpec::new(None, 1.0, 1.0 / 12.0)?,
        SmoothnessSpec::new(1.0, 1.0)?,
    )
}

/// Two intervals `[0, 0.4] ∪ [0.6, 1]` with equal mass, η = 0.1 on the first
/// and 0.8 on the second, joined smoothly across the empty gap. η stays at
/// least 0.3 away from θ*, so the margin exponent is infinite.
pub fn make_separated_family(params: &FBetaParams) -> Result<AnalyticDistribution> {
    let model = EtaModel::Separated { low: 0.1, high: 0.8, gap_start: 0.4, gap_end: 0.6 };
    let lipschitz = bumps::holder_seminorm(|x| model.eval(&[x]), 0.35, 0.65, 1.0, 1201);
    AnalyticDistribution::build(
        "separated",
        model,
        vec![
            Ball { center: vec![0.2], radius: 0.2, weight: 0.5 },
            Ball { center: vec![0.8], radius: 0.2, weight: 0.5 },
        ],
        *params,
        MarginSpec::new(None, 1.0, 1.0 / 12.0)?,
        SmoothnessSpec::new(1.0, lipschitz)?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_ball_volumes() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn linear_smooth_family() {
        let dist = make_smooth_1d_family(1.0, 1.0, &FBetaParams::default()).unwrap();
        // η(x) = x/2 and θ* = 1/4.
        assert!((dist.theta_star() - 0.25).abs() < 1e-9);
        assert!((dist.eta(&[0.3]) - 0.15).abs() < 1e-15);
        assert!((dist.p_y1() - 0.25).abs() < 1e-9);
        let m = verify_margin(&dist, &default_delta_grid());
        let e = m.exponent.unwrap();
        assert!((0.8..=1.2).contains(&e), "{e}");
        // P(|x/2 − 1/4| ≤ δ) = 4δ
        for (d, p) in m.deltas.iter().zip(&m.probabilities) {
            assert!((p - 4.0 * d).abs() < 1e-5);
        }
        assert!((dist.smoothness.lipschitz - 0.5).abs() < 1e-9);
    }

    #[test]
    fn other_margin_exponents_calibrate() {
        for (beta, alpha) in [(0.5, 2.0), (1.0, 0.5)] {
            let dist = make_smooth_1d_family(beta, alpha, &FBetaParams::default()).unwrap();
            let e = verify_margin(&dist, &default_delta_grid()).exponent.unwrap();
            assert!((e - alpha).abs() < 0.2, "alpha={alpha}: {e}");
        }
        assert!(make_smooth_1d_family(1.0, 2.0, &FBetaParams::default()).is_err());
        assert!(make_smooth_1d_family(1.5, 0.5, &FBetaParams::default()).is_err());
    }

    #[test]
    fn smooth_family_for_other_b() {
        let params = FBetaParams::new(2.0).unwrap();
        let dist = make_smooth_1d_family(1.0, 1.0, &params).unwrap();
        let resid = dist.reference_atoms().threshold_residual(&params, dist.theta_star());
        assert!(resid.abs() < 1e-10);
    }

    #[test]
    fn constant_family() {
        let dist = make_constant_family(0.5, &FBetaParams::default()).unwrap();
        assert!((dist.theta_star() - 1.0 / 3.0).abs() < 1e-12);
        let m = verify_margin(&dist, &default_delta_grid());
        assert!(m.infinite && m.probabilities.iter().all(|&p| p == 0.0));
        let dens = verify_strong_density(&dist);
        assert_eq!(dens.spec.mu_min, 1.0);
        assert_eq!(dens.spec.mu_max, 1.0);
    }

    #[test]
    fn separated_family() {
        let dist = make_separated_family(&FBetaParams::default()).unwrap();
        assert!((dist.theta_star() - 0.4 / 0.95).abs() < 1e-10, "{}", dist.theta_star());
        assert!(verify_margin(&dist, &default_delta_grid()).infinite);
        assert_eq!(dist.density(&[0.5]), 0.0);
        let dens = verify_strong_density(&dist);
        assert!(dens.outside_support_zero);
        assert_eq!(dens.levels, vec![1.25]);
        assert_eq!(dist.cdf_1d(0.5), Some(0.5));
        assert_eq!(dist.cdf_1d(0.8), Some(0.75));
    }

    #[test]
    fn sampling_is_seeded_and_matches_masses() {
        let dist = make_separated_family(&FBetaParams::default()).unwrap();
        let a = dist.sample_labeled(1000, 7).unwrap();
        assert_eq!(a, dist.sample_labeled(1000, 7).unwrap());
        assert_ne!(a, dist.sample_labeled(1000, 8).unwrap());
        let n = 100_000;
        let xs = dist.sample_unlabeled(n, 3).unwrap();
        let left = xs.points().iter().filter(|&&x| x < 0.5).count() as f64 / n as f64;
        assert!((left - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt());
        assert!(xs.points().iter().all(|&x| (0.0..=0.4).contains(&x) || (0.6..=1.0).contains(&x)));
    }
}
