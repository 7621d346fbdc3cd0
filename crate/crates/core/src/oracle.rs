//! Brute-force ground truth for small discrete instances.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FbetaError, Result};
use crate::fbeta::{
    bayes_classifier, bayes_threshold, excess_fbeta, population_fbeta, DiscreteDistribution, ExcessMode, FBetaParams,
    Threshold,
};
use crate::io::write_distribution_csv;
use crate::rng::stream;
use crate::root::bisect;
use crate::threshold::{cdf_gap_bound_for, empirical_threshold, ScoreSample, StepCdf};

/// Largest support size [`brute_force_optimum`] enumerates.
pub const MAX_ENUMERATION: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForce {
    pub score: f64,
    pub classifier: Vec<bool>,
}

fn mask_bits(mask: u32, k: usize) -> Vec<bool> {
    (0..k).map(|i| (mask >> (k - 1 - i)) & 1 == 1).collect()
}

/// Maximum of the population score over all `2^K` classifiers on the support.
/// Among tied maximizers the lexicographically smallest bit-vector is returned.
pub fn brute_force_optimum(dist: &DiscreteDistribution, params: &FBetaParams) -> Result<BruteForce> {
    let k = dist.len();
    if k > MAX_ENUMERATION {
        return Err(FbetaError::Size(format!("support of size {k} exceeds the enumeration cap {MAX_ENUMERATION}")));
    }
    let tp: Vec<f64> = dist.mass().iter().zip(dist.eta()).map(|(m, e)| m * e).collect();
    let base = params.b2() * dist.p_y1();
    let score = |mask: u32| {
        let (mut a, mut p) = (0.0, 0.0);
        for i in 0..k {
            if (mask >> (k - 1 - i)) & 1 == 1 {
                a += tp[i];
                p += dist.mass()[i];
            }
        }
        params.scale() * (a / (base + p))
    };
    let better = |a: (f64, u32), b: (f64, u32)| {
        if a.0 > b.0 || (a.0 == b.0 && a.1 < b.1) {
            a
        } else {
            b
        }
    };
    let (best, mask) = (0..1u32 << k)
        .into_par_iter()
        .map(|m| (score(m), m))
        .reduce(|| (f64::NEG_INFINITY, u32::MAX), better);
    Ok(BruteForce { score: best, classifier: mask_bits(mask, k) })
}

/// Threshold located by a sign change of the defining map on the grid
/// `{i / grid_size}` of `[0, 1]`, then refined by bisection.
pub fn scan_threshold(dist: &DiscreteDistribution, params: &FBetaParams, grid_size: usize) -> Result<Threshold> {
    if grid_size < 1000 {
        return Err(FbetaError::Argument(format!("grid_size must be at least 1000, got {grid_size}")));
    }
    let f = |t: f64| dist.threshold_residual(params, t);
    let mut prev = 0.0;
    if f(prev) >= 0.0 {
        return Ok(Threshold(0.0));
    }
    for i in 1..=grid_size {
        let t = i as f64 / grid_size as f64;
        let r = f(t);
        if r == 0.0 {
            return Ok(Threshold(t));
        }
        if r > 0.0 {
            return Ok(Threshold(bisect(f, prev, t, 1e-15, 200)?.root));
        }
        prev = t;
    }
    Err(FbetaError::Numeric("no sign change of the threshold map on [0, 1]".into()))
}

/// A random instance of the identity suite.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub dist: DiscreteDistribution,
    pub params: FBetaParams,
    pub classifier: Vec<bool>,
}

/// Instance `trial` of the suite seeded by `seed`: `K ≤ 12` atoms, flat
/// Dirichlet masses, uniform η with `P(Y = 1) > 1e-3`, `b ∈ {1/2, 1, 2}`.
pub fn random_instance(seed: u64, trial: u64) -> Instance {
    let mut rng = stream(seed, &[0x0a, trial]);
    loop {
        let k = rng.random_range(1..=12);
        let raw: Vec<f64> = (0..k).map(|_| Exp1.sample(&mut rng)).collect();
        let total: f64 = raw.iter().sum();
        let mass: Vec<f64> = raw.iter().map(|m| m / total).collect();
        let eta: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let b = [0.5, 1.0, 2.0][rng.random_range(0..3)];
        let classifier = (0..k).map(|_| rng.random::<bool>()).collect();
        if let Ok(dist) = DiscreteDistribution::from_masses(mass, eta) {
            if dist.p_y1() > 1e-3 {
                return Instance { dist, params: FBetaParams::new(b).unwrap(), classifier };
            }
        }
    }
}

/// Draws `n` scores from the η-law of `dist`.
pub fn sample_eta_scores<R: Rng + ?Sized>(dist: &DiscreteDistribution, n: usize, rng: &mut R) -> Vec<f64> {
    let mut cumulative = Vec::with_capacity(dist.len());
    let mut acc = 0.0;
    for &m in dist.mass() {
        acc += m;
        cumulative.push(acc);
    }
    (0..n)
        .map(|_| {
            let r = rng.random::<f64>() * acc;
            dist.eta()[cumulative.partition_point(|&c| c <= r).min(dist.len() - 1)]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub trial: u64,
    pub seed: u64,
    pub check: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub trials: u64,
    /// Brute-force maximum equals the score of the thresholded classifier.
    pub optimality_passes: u64,
    /// Direct excess equals the weighted-disagreement formula.
    pub identity_passes: u64,
    /// The CDF-gap bound dominates `|θ̂ − θ*|` at every sample size.
    pub sample_bound_passes: u64,
    /// The grid scan agrees with the exact solver.
    pub scan_passes: u64,
    /// Sample sizes and mean `|θ̂ − θ*|` across trials.
    pub sample_sizes: Vec<usize>,
    pub mean_threshold_error: Vec<f64>,
    pub failures: Vec<TrialFailure>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.failures.is_empty()
    }
}

struct TrialOutcome {
    failures: Vec<TrialFailure>,
    checks: [bool; 4],
    errors: Vec<f64>,
}

const SAMPLE_SIZES: [usize; 3] = [100, 1000, 10_000];

fn run_trial(seed: u64, trial: u64) -> Result<TrialOutcome> {
    let inst = random_instance(seed, trial);
    let (dist, params) = (&inst.dist, &inst.params);
    let mut failures = Vec::new();
    let mut fail = |check: &str, detail: String| {
        failures.push(TrialFailure { trial, seed, check: check.into(), detail });
    };
    let theta = bayes_threshold(dist, params)?.0;
    let star = bayes_classifier(dist, params)?;
    let brute = brute_force_optimum(dist, params)?;
    let f_star = population_fbeta(dist, &star, params)?;
    let optimal = (brute.score - f_star).abs() <= 1e-12 && (f_star - params.scale() * theta).abs() <= 1e-10;
    if !optimal {
        fail("optimality", format!("brute force {} vs thresholded {f_star}, theta {theta}", brute.score));
    }
    let direct = excess_fbeta(dist, &inst.classifier, params, ExcessMode::Direct)?;
    let weighted = excess_fbeta(dist, &inst.classifier, params, ExcessMode::Disagreement)?;
    let identity = (direct - weighted).abs() <= 1e-12 && direct >= -1e-12;
    if !identity {
        fail("identity", format!("direct {direct} vs weighted disagreement {weighted}"));
    }
    let mut rng = stream(seed, &[0x0b, trial]);
    let law = StepCdf::of_distribution(dist);
    let mut sample_ok = true;
    let mut errors = Vec::new();
    for &n in &SAMPLE_SIZES {
        let s = ScoreSample::new(sample_eta_scores(dist, n, &mut rng))?;
        let est = empirical_threshold(&s, params, 1e-12)?.threshold.0;
        let bound = cdf_gap_bound_for(&law, &s, dist.p_y1(), params)?;
        let err = (est - theta).abs();
        errors.push(err);
        if bound < err - 1e-10 {
            sample_ok = false;
            fail("sample_bound", format!("n={n}: bound {bound} < error {err}"));
        }
    }
    let grid = 10_000;
    let scanned = scan_threshold(dist, params, grid)?.0;
    let scan_ok = (scanned - theta).abs() <= 2.0 / grid as f64;
    if !scan_ok {
        fail("scan", format!("scan {scanned} vs exact {theta}"));
    }
    Ok(TrialOutcome { failures, checks: [optimal, identity, sample_ok, scan_ok], errors })
}

/// Runs `trials` random instances. Failing instances are written to
/// `artifact_dir` (distribution CSV plus JSON record) when given.
pub fn randomized_identity_suite(trials: u64, seed: u64, artifact_dir: Option<&Path>) -> Result<SuiteReport> {
    if trials == 0 {
        return Err(FbetaError::Argument("trials must be at least 1".into()));
    }
    let outcomes: Vec<TrialOutcome> = (0..trials).into_par_iter().map(|t| run_trial(seed, t)).collect::<Result<_>>()?;
    let count = |i: usize| outcomes.iter().filter(|o| o.checks[i]).count() as u64;
    let mean_threshold_error = (0..SAMPLE_SIZES.len())
        .map(|j| outcomes.iter().map(|o| o.errors[j]).sum::<f64>() / trials as f64)
        .collect();
    let failures: Vec<TrialFailure> = outcomes.iter().flat_map(|o| o.failures.clone()).collect();
    if let Some(dir) = artifact_dir {
        if !failures.is_empty() {
            std::fs::create_dir_all(dir)?;
        }
        for f in &failures {
            let inst = random_instance(f.seed, f.trial);
            write_distribution_csv(&dir.join(format!("trial_{}.csv", f.trial)), &inst.dist)?;
            let record = serde_json::json!({
                "failure": f,
                "b": inst.params.b,
                "classifier": inst.classifier,
            });
            std::fs::write(dir.join(format!("trial_{}.json", f.trial)), serde_json::to_string_pretty(&record)?)?;
        }
    }
    Ok(SuiteReport {
        trials,
        optimality_passes: count(0),
        identity_passes: count(1),
        sample_bound_passes: count(2),
        scan_passes: count(3),
        sample_sizes: SAMPLE_SIZES.to_vec(),
        mean_threshold_error,
        failures,
    })
}

/// Outcome of the randomized CDF-gap bound check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub trials: u64,
    pub passes: u64,
    /// Largest `|θ̂ − θ*| − bound` seen (negative when every trial passed).
    pub worst_margin: f64,
    pub failures: Vec<TrialFailure>,
}

/// Random six-point η-laws against perturbed score samples: scores drawn
/// from the law, moved by uniform noise of random width up to 0.2 and
/// clipped to `[0, 1]`, as an estimate η̂ would. Checks
/// `cdf_gap_bound ≥ |θ̂ − θ*| − 1e-10` on each pair.
pub fn cdf_gap_bound_suite(trials: u64, seed: u64) -> Result<BoundReport> {
    let outcomes: Vec<(f64, Option<TrialFailure>)> = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<(f64, Option<TrialFailure>)> {
            let mut rng = stream(seed, &[0x0c, trial]);
            let (dist, params) = loop {
                let raw: Vec<f64> = (0..6).map(|_| Exp1.sample(&mut rng)).collect();
                let total: f64 = raw.iter().sum();
                let eta: Vec<f64> = (0..6).map(|_| rng.random::<f64>()).collect();
                let b = [0.5, 1.0, 2.0][rng.random_range(0..3)];
                let dist = DiscreteDistribution::from_masses(raw.iter().map(|m| m / total).collect(), eta);
                if let Ok(d) = dist {
                    if d.p_y1() > 1e-3 {
                        break (d, FBetaParams::new(b)?);
                    }
                }
            };
            let n = rng.random_range(5..=500);
            let width = rng.random_range(0.0..0.2);
            let scores: Vec<f64> = sample_eta_scores(&dist, n, &mut rng)
                .into_iter()
                .map(|s| (s + width * (2.0 * rng.random::<f64>() - 1.0)).clamp(0.0, 1.0))
                .collect();
            let s = ScoreSample::new(scores)?;
            let theta = bayes_threshold(&dist, &params)?.0;
            let est = empirical_threshold(&s, &params, 1e-12)?.threshold.0;
            let bound = cdf_gap_bound_for(&StepCdf::of_distribution(&dist), &s, dist.p_y1(), &params)?;
            let margin = (est - theta).abs() - bound;
            let failure = (margin > 1e-10).then(|| TrialFailure {
                trial,
                seed,
                check: "cdf_gap_bound".into(),
                detail: format!("bound {bound} < error {}", (est - theta).abs()),
            });
            Ok((margin, failure))
        })
        .collect::<Result<_>>()?;
    let failures: Vec<TrialFailure> = outcomes.iter().filter_map(|o| o.1.clone()).collect();
    Ok(BoundReport {
        trials,
        passes: trials - failures.len() as u64,
        worst_margin: outcomes.iter().map(|o| o.0).fold(f64::NEG_INFINITY, f64::max),
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point() -> DiscreteDistribution {
        DiscreteDistribution::from_masses(vec![0.5, 0.5], vec![0.9, 0.1]).unwrap()
    }

    #[test]
    fn brute_force_examples() {
        let one = FBetaParams::default();
        let r = brute_force_optimum(&two_point(), &one).unwrap();
        assert!((r.score - 0.45).abs() < 1e-15);
        assert_eq!(r.classifier, vec![true, false]);
        let half = DiscreteDistribution::from_masses(vec![0.2, 0.3, 0.5], vec![0.5; 3]).unwrap();
        let r = brute_force_optimum(&half, &one).unwrap();
        assert!((r.score - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.classifier, vec![true; 3]);
        let single = DiscreteDistribution::from_masses(vec![1.0], vec![1.0]).unwrap();
        let r = brute_force_optimum(&single, &one).unwrap();
        assert_eq!((r.score, r.classifier), (0.5, vec![true]));
    }

    #[test]
    fn brute_force_tie_break_is_lexicographic() {
        // The zero-mass atom does not affect the score, so (0, 1) and (1, 1) tie.
        let d = DiscreteDistribution::from_masses(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let r = brute_force_optimum(&d, &FBetaParams::default()).unwrap();
        assert_eq!(r.classifier, vec![false, true]);
    }

    #[test]
    fn brute_force_size_cap() {
        let k = 21;
        let d = DiscreteDistribution::from_masses(vec![1.0 / k as f64; k], vec![0.5; k]).unwrap();
        assert!(matches!(brute_force_optimum(&d, &FBetaParams::default()), Err(FbetaError::Size(_))));
    }

    #[test]
    fn scan_examples() {
        let one = FBetaParams::default();
        let half = DiscreteDistribution::from_masses(vec![0.25; 4], vec![0.5; 4]).unwrap();
        assert!((scan_threshold(&half, &one, 1_000_000).unwrap().0 - 1.0 / 3.0).abs() < 2e-6);
        let k = 100_000;
        let grid = DiscreteDistribution::from_masses(
            vec![1.0 / k as f64; k],
            (0..k).map(|i| (i as f64 + 0.5) / k as f64).collect(),
        )
        .unwrap();
        let golden = (3.0 - 5f64.sqrt()) / 2.0;
        assert!((scan_threshold(&grid, &one, 10_000).unwrap().0 - golden).abs() < 1e-4);
        let ones = DiscreteDistribution::from_masses(vec![1.0], vec![1.0]).unwrap();
        assert_eq!(scan_threshold(&ones, &one, 1000).unwrap().0, 0.5);
        let b2 = FBetaParams::new(2.0).unwrap();
        assert!((scan_threshold(&ones, &b2, 1000).unwrap().0 - 0.2).abs() < 1e-12);
        assert!(scan_threshold(&ones, &one, 999).is_err());
    }

    #[test]
    fn eta_exactly_at_threshold_is_harmless() {
        // With masses (0.4, 0.4, 0.2) and η = (0.9, 0.1, t), t is the optimal
        // threshold exactly when t² + 4t − 1.8 = 0.
        let t = (23.2f64.sqrt() - 4.0) / 2.0;
        let d = DiscreteDistribution::from_masses(vec![0.4, 0.4, 0.2], vec![0.9, 0.1, t]).unwrap();
        let p = FBetaParams::default();
        let theta = bayes_threshold(&d, &p).unwrap().0;
        assert!((theta - t).abs() < 1e-15);
        let star = bayes_classifier(&d, &p).unwrap();
        let mut other = star.clone();
        other[2] = !other[2];
        let e = excess_fbeta(&d, &other, &p, ExcessMode::Direct).unwrap();
        assert!(e.abs() < 1e-12, "theta {theta}, excess {e}");
        let brute = brute_force_optimum(&d, &p).unwrap();
        assert!((brute.score - population_fbeta(&d, &star, &p).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn identities_hold_for_tiny_positive_rate() {
        let d = DiscreteDistribution::from_masses(vec![0.001, 0.499, 0.5], vec![1.0, 0.0, 0.0]).unwrap();
        let p = FBetaParams::default();
        assert!((d.p_y1() - 1e-3).abs() < 1e-15);
        let brute = brute_force_optimum(&d, &p).unwrap();
        let star = bayes_classifier(&d, &p).unwrap();
        assert!((brute.score - population_fbeta(&d, &star, &p).unwrap()).abs() < 1e-12);
        for g in [[true, true, false], [false, true, true], [true, false, true]] {
            let a = excess_fbeta(&d, &g, &p, ExcessMode::Direct).unwrap();
            let b = excess_fbeta(&d, &g, &p, ExcessMode::Disagreement).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn small_suite_passes_and_is_reproducible() {
        let a = randomized_identity_suite(50, 3, None).unwrap();
        assert!(a.all_passed(), "{:?}", a.failures);
        assert_eq!(a, randomized_identity_suite(50, 3, None).unwrap());
        assert!(a.mean_threshold_error[2] < a.mean_threshold_error[0]);
        assert_eq!(random_instance(3, 7), random_instance(3, 7));
    }

    #[test]
    fn bound_suite_small() {
        let r = cdf_gap_bound_suite(100, 5).unwrap();
        assert_eq!(r.passes, 100, "{:?}", r.failures);
    }
}
