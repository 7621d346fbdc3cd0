//! Empirical check of the DKW inequality `P(sup|F_N − F| > t) ≤ 2 exp(−2Nt²)`.

use fbeta_core::rng::stream;
use fbeta_core::{FbetaError, Result};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const DKW: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DkwRow {
    #[serde(rename = "N")]
    pub big_n: usize,
    pub t: f64,
    pub reps: usize,
    pub exceedances: usize,
    pub frequency: f64,
    pub bound: f64,
    /// `sqrt(p(1 − p)/reps)` with `p = min(bound, 1)`.
    pub standard_error: f64,
    /// `frequency ≤ bound + 3 · standard_error`
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DkwTable {
    pub seed: u64,
    pub rows: Vec<DkwRow>,
}

impl DkwTable {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// `sup_x |F_N(x) − x|` for a sorted uniform sample.
pub fn uniform_sup_deviation(sorted: &[f64]) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &u)| ((i + 1) as f64 / n - u).max(u - i as f64 / n))
        .fold(0.0, f64::max)
}

/// Exceedance frequencies of the uniform empirical CDF deviation.
///
/// Replication `r` at the `i`-th sample size draws from `stream(seed, [3, i, r])`.
pub fn run_dkw_check(n_values: &[usize], t_values: &[f64], reps: usize, seed: u64) -> Result<DkwTable> {
    if reps < 100 {
        return Err(FbetaError::Argument(format!("reps must be at least 100, got {reps}")));
    }
    if n_values.contains(&0) {
        return Err(FbetaError::Argument("every N must be positive".into()));
    }
    if t_values.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
        return Err(FbetaError::Argument("every t must be positive and finite".into()));
    }
    let mut rows = Vec::with_capacity(n_values.len() * t_values.len());
    for (i, &n) in n_values.iter().enumerate() {
        let deviations: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let mut rng = stream(seed, &[DKW, i as u64, r as u64]);
                let mut u: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
                u.sort_by(f64::total_cmp);
                uniform_sup_deviation(&u)
            })
            .collect();
        for &t in t_values {
            let exceedances = deviations.iter().filter(|&&d| d > t).count();
            let frequency = exceedances as f64 / reps as f64;
            let bound = 2.0 * (-2.0 * n as f64 * t * t).exp();
            let p = bound.min(1.0);
            let standard_error = (p * (1.0 - p) / reps as f64).sqrt();
            rows.push(DkwRow {
                big_n: n,
                t,
                reps,
                exceedances,
                frequency,
                bound,
                standard_error,
                pass: frequency <= bound + 3.0 * standard_error,
            });
        }
    }
    Ok(DkwTable { seed, rows })
}
