//! Acceptance criteria 1-9. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Reference values are computed here, independently of
//! the library code under test.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use fbeta_core::fbeta::{excess_fbeta, population_fbeta, ExcessMode};
use fbeta_core::oracle::random_instance;
use fbeta_core::rng::stream;
use fbeta_core::threshold::{cdf_gap_bound_for, StepCdf};
use fbeta_core::{
    bayes_classifier, bayes_threshold, build_hard_family, empirical_threshold, DiscreteDistribution, FBetaParams,
    HardFamilyParams, ScoreSample,
};
use fbeta_harness::{run_dkw_check, run_experiment, ExperimentConfig, NRule};
use rand::Rng;
use rand_distr::{Distribution, Exp1};

const SEED: u64 = 1;
const TRIALS: u64 = 1000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Root of `b²θ Σ wη = Σ w(η − θ)₊` by bisection on `[0, 1]`.
fn reference_threshold(eta: &[f64], w: &[f64], b2: f64) -> f64 {
    let p: f64 = eta.iter().zip(w).map(|(e, m)| e * m).sum();
    let f = |t: f64| b2 * t * p - eta.iter().zip(w).map(|(e, m)| m * (e - t).max(0.0)).sum::<f64>();
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Normalized F_b of the subset `mask`.
fn reference_score(eta: &[f64], w: &[f64], b2: f64, mask: &[bool]) -> f64 {
    let p: f64 = eta.iter().zip(w).map(|(e, m)| e * m).sum();
    let tp: f64 = (0..eta.len()).filter(|&i| mask[i]).map(|i| w[i] * eta[i]).sum();
    let pg: f64 = (0..eta.len()).filter(|&i| mask[i]).map(|i| w[i]).sum();
    tp / (b2 * p + pg)
}

/// `∫₀¹ |F_a − F_b|` for two weighted step CDFs.
fn reference_l1(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let cdf = |pts: &[(f64, f64)], t: f64| -> f64 {
        let total: f64 = pts.iter().map(|p| p.1).sum();
        pts.iter().filter(|p| p.0 <= t).map(|p| p.1).sum::<f64>() / total
    };
    let mut knots: Vec<f64> = a.iter().chain(b).map(|p| p.0).chain([0.0, 1.0]).collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    knots.windows(2).map(|k| (k[1] - k[0]) * (cdf(a, 0.5 * (k[0] + k[1])) - cdf(b, 0.5 * (k[0] + k[1]))).abs()).sum()
}

fn criterion_1() -> Outcome {
    let half = DiscreteDistribution::from_masses(vec![1.0], vec![0.5]).unwrap();
    let t_half = bayes_threshold(&half, &FBetaParams::default()).unwrap().0;
    let k = 1_000_000;
    let xs: Vec<f64> = (0..k).map(|i| (i as f64 + 0.5) / k as f64).collect();
    let uniform = DiscreteDistribution::from_masses(vec![1.0 / k as f64; k], xs).unwrap();
    let t_unif = bayes_threshold(&uniform, &FBetaParams::default()).unwrap().0;
    // θ/2 = (1 − θ)²/2
    let exact = (3.0 - 5f64.sqrt()) / 2.0;
    let (e1, e2) = ((t_half - 1.0 / 3.0).abs(), (t_unif - exact).abs());
    outcome(e1 <= 1e-10 && e2 <= 1e-4, format!("|θ*(η≡1/2) − 1/3| = {e1:.1e} (tol 1e-10), |θ*(U) − (3−√5)/2| = {e2:.1e} (tol 1e-4)"))
}

fn criterion_2() -> Outcome {
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for trial in 0..TRIALS {
        let inst = random_instance(SEED, trial);
        let (eta, w, b2) = (inst.dist.eta(), inst.dist.mass(), inst.params.b2());
        let k = eta.len();
        let best = (0u32..1 << k)
            .map(|mask| {
                let bits: Vec<bool> = (0..k).map(|i| (mask >> i) & 1 == 1).collect();
                reference_score(eta, w, b2, &bits)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let g = bayes_classifier(&inst.dist, &inst.params).unwrap();
        let got = population_fbeta(&inst.dist, &g, &inst.params).unwrap();
        let gap = (best - got).abs();
        worst = worst.max(gap);
        if gap > 1e-12 {
            failures += 1;
        }
    }
    outcome(failures == 0, format!("{TRIALS} instances, {failures} failures, worst |max F − F(g*)| = {worst:.1e} (tol 1e-12)"))
}

fn criterion_3() -> Outcome {
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for trial in 0..TRIALS {
        let inst = random_instance(SEED, trial);
        let direct = excess_fbeta(&inst.dist, &inst.classifier, &inst.params, ExcessMode::Direct).unwrap();
        let weighted = excess_fbeta(&inst.dist, &inst.classifier, &inst.params, ExcessMode::Disagreement).unwrap();
        let (eta, w, b2) = (inst.dist.eta(), inst.dist.mass(), inst.params.b2());
        let theta = reference_threshold(eta, w, b2);
        let star: Vec<bool> = eta.iter().map(|&e| e > theta).collect();
        let reference = reference_score(eta, w, b2, &star) - reference_score(eta, w, b2, &inst.classifier);
        let gap = (direct - weighted).abs().max((direct - reference).abs());
        worst = worst.max(gap);
        if gap > 1e-12 {
            failures += 1;
        }
    }
    outcome(failures == 0, format!("{TRIALS} instances, {failures} failures, worst gap = {worst:.1e} (tol 1e-12)"))
}

fn criterion_4() -> Outcome {
    let mut failures = 0;
    let mut worst = f64::NEG_INFINITY;
    for trial in 0..TRIALS {
        let mut rng = stream(SEED, &[0x4c, trial]);
        let k = rng.random_range(2..=10);
        let raw: Vec<f64> = (0..k).map(|_| Exp1.sample(&mut rng)).collect();
        let total: f64 = raw.iter().sum();
        let mass: Vec<f64> = raw.iter().map(|m| m / total).collect();
        let eta: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let b = [0.5, 1.0, 2.0][rng.random_range(0..3)];
        let params = FBetaParams::new(b).unwrap();
        let Ok(dist) = DiscreteDistribution::from_masses(mass.clone(), eta.clone()) else { continue };
        let n = rng.random_range(5..=400);
        let width = rng.random_range(0.0..0.3);
        let cumulative: Vec<f64> = mass.iter().scan(0.0, |a, m| Some(*a + m)).collect();
        let scores: Vec<f64> = (0..n)
            .map(|_| {
                let r = rng.random::<f64>() * cumulative[k - 1];
                let e = eta[cumulative.partition_point(|&c| c <= r).min(k - 1)];
                (e + width * (2.0 * rng.random::<f64>() - 1.0)).clamp(0.0, 1.0)
            })
            .collect();
        let p: f64 = mass.iter().zip(&eta).map(|(m, e)| m * e).sum();
        let theta = reference_threshold(&eta, &mass, params.b2());
        let theta_hat = empirical_threshold(&ScoreSample::new(scores.clone()).unwrap(), &params, 1e-12)
            .unwrap()
            .threshold
            .0;
        let bound = cdf_gap_bound_for(&StepCdf::of_distribution(&dist), &ScoreSample::new(scores.clone()).unwrap(), p, &params)
            .unwrap();
        let law: Vec<(f64, f64)> = eta.iter().copied().zip(mass.iter().copied()).collect();
        let emp: Vec<(f64, f64)> = scores.iter().map(|&s| (s, 1.0)).collect();
        let reference_bound = reference_l1(&law, &emp) / (params.b2() * p);
        let margin = (theta_hat - theta).abs() - bound;
        worst = worst.max(margin);
        if margin > 1e-10 || (bound - reference_bound).abs() > 1e-9 * reference_bound.max(1.0) {
            failures += 1;
        }
    }
    outcome(failures == 0, format!("{TRIALS} pairs, {failures} failures, worst |θ̂ − θ*| − bound = {worst:.3e} (tol 1e-10)"))
}

fn criterion_5() -> Outcome {
    let mut rng = stream(SEED, &[0x55]);
    let mut worst_theta: f64 = 0.0;
    let mut worst_balance: f64 = 0.0;
    let mut margin_ok = true;
    let mut problems = Vec::new();
    for draw in 0..8 {
        let sigma: Vec<i8> = (0..4).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
        let params = HardFamilyParams {
            d: 2,
            beta: 1.0,
            lipschitz: 1.0,
            alpha: 1.0,
            q: 4,
            m: 4,
            w: 1.0 / 32.0,
            c_phi: None,
            rho: None,
            sigma,
        };
        let family = match params.resolve() {
            Ok(f) => f,
            Err(e) => {
                problems.push(format!("draw {draw}: {e}"));
                continue;
            }
        };
        worst_balance = worst_balance.max(family.balance_residual().abs());
        let dist = match build_hard_family(&params) {
            Ok(d) => d,
            Err(e) => {
                problems.push(format!("draw {draw}: {e}"));
                continue;
            }
        };
        let atoms = dist.discretize(1 << 18).unwrap();
        let theta = reference_threshold(atoms.eta(), atoms.mass(), 1.0);
        worst_theta = worst_theta.max((theta - 0.25).abs());
        let step_at = family.c_phi * (family.params.q as f64).powf(-family.params.beta);
        for k in 1..=12 {
            let delta = 2f64.powi(-k);
            let prob: f64 = atoms
                .eta()
                .iter()
                .zip(atoms.mass())
                .filter(|(e, _)| {
                    let g = (**e - theta).abs();
                    g > 0.0 && g <= delta
                })
                .map(|(_, m)| m)
                .sum();
            let bound = if delta >= step_at { 2.0 * family.mw() } else { 0.0 } + (12.0 * delta).powf(family.params.alpha);
            if prob > bound + 1e-12 {
                margin_ok = false;
                problems.push(format!("draw {draw}: P = {prob} > {bound} at δ = {delta}"));
            }
        }
    }
    let pass = problems.is_empty() && worst_theta <= 2e-3 && worst_balance < 1e-10 && margin_ok;
    let mut detail =
        format!("8 σ draws, worst |θ* − 1/4| = {worst_theta:.1e} (tol 2e-3), worst balance residual = {worst_balance:.1e} (tol 1e-10), margin bound held = {margin_ok}");
    if let Some(p) = problems.first() {
        detail += &format!("; {p}");
    }
    outcome(pass, detail)
}

fn criterion_6_config() -> ExperimentConfig {
    ExperimentConfig { seed: SEED, ..ExperimentConfig::default() }
}

fn criterion_6() -> Outcome {
    let out = run_experiment(&criterion_6_config()).unwrap();
    let es = out.excess.slope.unwrap_or(f64::NAN);
    let ts = out.threshold.slope.unwrap_or(f64::NAN);
    let pass = (es + 2.0 / 3.0).abs() <= 0.25 && (ts + 1.0 / 3.0).abs() <= 0.2;
    outcome(pass, format!("excess slope {es:.3} (target −0.667 ± 0.25), threshold slope {ts:.3} (target −0.333 ± 0.2)"))
}

fn criterion_7() -> Outcome {
    let same = run_experiment(&criterion_6_config()).unwrap();
    let square = run_experiment(&ExperimentConfig { n_rule: NRule::Square, ..criterion_6_config() }).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, a, b) in [("excess", &same.excess, &square.excess), ("threshold", &same.threshold, &square.threshold)] {
        let (sa, sb) = (a.slope.unwrap_or(f64::NAN), b.slope.unwrap_or(f64::NAN));
        let hw = a.half_width.unwrap_or(0.0) + b.half_width.unwrap_or(0.0);
        let ok = (sa - sb).abs() <= hw;
        pass &= ok;
        parts.push(format!("{name}: N=n {sa:.3} vs N=n² {sb:.3}, |Δ| = {:.3} ≤ {hw:.3}", (sa - sb).abs()));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_8() -> Outcome {
    let table = run_dkw_check(&[100, 1000, 10_000], &[0.01, 0.05, 0.1], 2000, SEED).unwrap();
    let failing: Vec<String> = table
        .rows
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("N={} t={} freq={}", r.big_n, r.t, r.frequency))
        .collect();
    let reference_ok = table.rows.iter().all(|r| {
        let bound = 2.0 * (-2.0 * r.big_n as f64 * r.t * r.t).exp();
        let p = bound.min(1.0);
        r.frequency <= bound + 3.0 * (p * (1.0 - p) / 2000.0).sqrt()
    });
    outcome(
        failing.is_empty() && reference_ok,
        format!("{} cells, {} above bound + 3 SE {:?}", table.rows.len(), failing.len(), failing),
    )
}

fn run_cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_fbeta")).args(args).output().map(|o| o.status.success()).unwrap_or(false)
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_file())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap()))
        .collect();
    files.sort();
    files
}

fn criterion_9() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let mut compared = 0;
    let mut pass = true;
    for run in ["a", "b"] {
        let out = root.path().join(run);
        let out = out.to_str().unwrap();
        pass &= run_cli(&["rate", "--n-grid", "200,400,800", "--reps", "8", "--seed", "5", "--out", out]);
        pass &= run_cli(&["threshold", "--n-grid", "200,400,800", "--reps", "8", "--seed", "5", "--n-rule", "square", "--out", out]);
        pass &= run_cli(&["dkw", "--n-values", "100,1000", "--reps", "200", "--seed", "5", "--out", out]);
        pass &= run_cli(&["oracle-suite", "--trials", "50", "--seed", "5", "--out", out]);
    }
    let (a, b) = (read_tree(&root.path().join("a")), read_tree(&root.path().join("b")));
    pass &= a.len() >= 9 && a == b;
    compared += a.len();
    outcome(pass, format!("{compared} report files from rate, threshold, dkw and oracle-suite runs compared byte for byte"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Option<Duration>); 9] = [
        ("oracle exactness", criterion_1, Some(Duration::from_secs(1))),
        ("optimality of the thresholded classifier", criterion_2, Some(Duration::from_secs(30))),
        ("excess-score identity", criterion_3, None),
        ("CDF-gap threshold bound", criterion_4, None),
        ("hard family construction", criterion_5, Some(Duration::from_secs(120))),
        ("rate reproduction", criterion_6, Some(Duration::from_secs(900))),
        ("N-independence of slopes", criterion_7, None),
        ("DKW table", criterion_8, Some(Duration::from_secs(60))),
        ("determinism of CLI reports", criterion_9, None),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|l| elapsed <= l);
        let pass = result.pass && in_time;
        if !pass {
            failed += 1;
        }
        let budget = limit.map(|l| format!(" of {} s", l.as_secs())).unwrap_or_default();
        println!(
            "{} criterion {}: {name}: {} [{:.2} s{budget}]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            result.detail,
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
