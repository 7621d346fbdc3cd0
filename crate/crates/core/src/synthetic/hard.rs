//! The σ-indexed hard family used in minimax lower bounds.
//!
//! The unit cube is split into `q^d` cells with centers on the grid
//! `G_q = {(2k + 1)/(2q)}`. The first `m` cells in lexicographic order, and
//! their mirror images through the origin, carry a small ball of mass `w`
//! each, on which `η = 1/4 ± σ_j·φ` with `φ = C_φ q^{−β} u(q‖x − n_q(x)‖)`.
//! The rest of the mass sits on a far ball `A₀` where `η = τ`, and τ is chosen
//! so that θ* = 1/4 for every σ (with `b = 1`). Between `B(0, √d)` and
//! `B(0, √d + ρ)` η rises smoothly from 1/4 to τ.

use serde::{Deserialize, Serialize};

use super::bumps::{holder_seminorm, u, v};
use super::{default_delta_grid, unit_ball_volume, verify_margin, AnalyticDistribution, Ball, EtaModel, MarginSpec};
use crate::error::{FbetaError, Result};
use crate::fbeta::FBetaParams;
use crate::numeric::adaptive_simpson;
use crate::regression::SmoothnessSpec;

/// Construction inputs. `c_phi` and `rho` are derived when absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardFamilyParams {
    pub d: usize,
    pub beta: f64,
    #[serde(rename = "L")]
    pub lipschitz: f64,
    /// Margin exponent the family is checked against.
    pub alpha: f64,
    pub q: usize,
    pub m: usize,
    pub w: f64,
    #[serde(default)]
    pub c_phi: Option<f64>,
    #[serde(default)]
    pub rho: Option<f64>,
    pub sigma: Vec<i8>,
}

/// Resolved construction with every derived constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardFamily {
    pub params: HardFamilyParams,
    pub c_phi: f64,
    pub rho: f64,
    pub b_prime: f64,
    pub tau: f64,
    pub cell_radius: f64,
    pub a0_center: Vec<f64>,
    pub a0_radius: f64,
}

fn fail(msg: impl Into<String>) -> FbetaError {
    FbetaError::Construction(msg.into())
}

/// `[u]_β` (or `[u']_{β−1}` for β > 1) on the transition region.
fn u_seminorm(beta: f64) -> f64 {
    holder_seminorm(u, 0.2, 0.55, beta, 1400)
}

fn v_seminorm(beta: f64) -> f64 {
    holder_seminorm(v, -0.1, 1.1, beta, 1400)
}

/// Average of φ over the support ball of one cell, by radial quadrature at
/// relative tolerance 1e-8, with a caller-supplied profile `u`.
pub fn compute_bprime_with(d: usize, q: usize, beta: f64, c_phi: f64, profile: &dyn Fn(f64) -> f64) -> Result<f64> {
    // The ball has radius 1/(4q); in s = q·r it is s ∈ [0, 1/4].
    let denom = 0.25f64.powi(d as i32) / d as f64;
    let f = |s: f64| profile(s) * s.powi(d as i32 - 1);
    let num = adaptive_simpson(&f, 0.0, 0.25, 1e-8 * denom)?;
    if !num.is_finite() {
        return Err(FbetaError::Numeric("b' quadrature produced a non-finite value".into()));
    }
    Ok(c_phi * (q as f64).powf(-beta) * num / denom)
}

/// `b′ = ∫_{X₁} φ dμ / ∫_{X₁} dμ`.
pub fn compute_bprime(f: &HardFamily) -> Result<f64> {
    compute_bprime_with(f.params.d, f.params.q, f.params.beta, f.c_phi, &u)
}

impl HardFamilyParams {
    /// Validates the inputs and derives `C_φ`, `b′`, τ, ρ and `A₀`.
    pub fn resolve(&self) -> Result<HardFamily> {
        let p = self;
        if p.d == 0 {
            return Err(fail("dimension must be at least 1"));
        }
        if !(p.beta > 0.0 && p.beta <= 2.0) {
            return Err(fail(format!("beta must lie in (0, 2], got {}", p.beta)));
        }
        if !(p.lipschitz > 0.0) || !(p.alpha > 0.0) {
            return Err(fail("L and alpha must be positive"));
        }
        let cells = (p.q as f64).powi(p.d as i32);
        if p.q == 0 || p.m == 0 || p.m as f64 >= cells {
            return Err(fail(format!("need 1 <= m < q^d, got m={}, q^d={cells}", p.m)));
        }
        if !(p.w > 0.0 && p.w * p.m as f64 <= 1.0) {
            return Err(fail(format!("need 0 < w <= 1/m, got w={}", p.w)));
        }
        let two_mw = 2.0 * p.m as f64 * p.w;
        if two_mw >= 1.0 {
            return Err(fail(format!("need m*w < 1/2 so that A0 carries mass, got m*w={}", two_mw / 2.0)));
        }
        if p.sigma.len() != p.m || p.sigma.iter().any(|&s| s != 1 && s != -1) {
            return Err(fail("sigma must have m entries in {-1, +1}"));
        }
        let q_beta = (p.q as f64).powf(-p.beta);
        let u_norm = u_seminorm(p.beta);
        let c_phi = p.c_phi.unwrap_or_else(|| (p.lipschitz / (2.0 * u_norm)).min(0.125 / q_beta));
        if !(c_phi > 0.0) {
            return Err(fail("C_phi must be positive"));
        }
        if c_phi * u_norm > p.lipschitz * (1.0 + 1e-9) {
            return Err(fail(format!(
                "phi is not ({}, {})-Holder: C_phi [u] = {}",
                p.beta,
                p.lipschitz,
                c_phi * u_norm
            )));
        }
        let mut family = HardFamily {
            params: p.clone(),
            c_phi,
            rho: 0.0,
            b_prime: 0.0,
            tau: 0.0,
            cell_radius: 0.25 / p.q as f64,
            a0_center: vec![],
            a0_radius: 0.0,
        };
        family.b_prime = compute_bprime(&family)?;
        if family.b_prime > 0.125 {
            return Err(fail(format!("b' = {} violates b' <= 1/8", family.b_prime)));
        }
        let tau = 1.0 / 3.0 + (1.0 / 12.0 - 2.0 * family.b_prime / 3.0) * (two_mw / (1.0 - two_mw));
        if !(tau > 0.25 && tau <= 1.0) {
            return Err(fail(format!("tau = {tau} violates 1/4 < tau <= 1; decrease m*w")));
        }
        family.tau = tau;
        let v_norm = v_seminorm(p.beta);
        family.rho = match p.rho {
            Some(r) if r > 0.0 => r,
            Some(r) => return Err(fail(format!("rho must be positive, got {r}"))),
            None => {
                let mut rho = 1.0f64;
                while (tau - 0.25) * v_norm * rho.powf(-p.beta) > p.lipschitz {
                    rho *= 2.0;
                    if rho > 1e12 {
                        return Err(fail("no annulus width satisfies the Holder bound"));
                    }
                }
                rho
            }
        };
        let vol = 1.0 - p.m as f64 / cells;
        family.a0_radius = (vol / unit_ball_volume(p.d)).powf(1.0 / p.d as f64);
        let mut center = vec![0.0; p.d];
        center[0] = (p.d as f64).sqrt() + family.rho + 2.0 * family.a0_radius;
        family.a0_center = center;
        Ok(family)
    }
}

impl HardFamily {
    /// Grid center of cell `j` (lexicographic, first coordinate slowest).
    pub fn cell_center(&self, j: usize) -> Vec<f64> {
        let (q, d) = (self.params.q, self.params.d);
        (0..d)
            .map(|i| {
                let k = (j / q.pow((d - 1 - i) as u32)) % q;
                (2 * k + 1) as f64 / (2 * q) as f64
            })
            .collect()
    }

    /// Active cell containing `x` and φ there.
    fn active_cell(&self, x: &[f64]) -> Option<(usize, f64)> {
        let (q, d) = (self.params.q, self.params.d);
        if x.iter().any(|&t| !(0.0..=1.0).contains(&t)) {
            return None;
        }
        let mut j = 0usize;
        let mut dist2 = 0.0;
        for &t in x.iter().take(d) {
            let k = ((t * q as f64).floor() as usize).min(q - 1);
            j = j * q + k;
            let c = (2 * k + 1) as f64 / (2 * q) as f64;
            dist2 += (t - c) * (t - c);
        }
        if j >= self.params.m {
            return None;
        }
        let phi = self.c_phi * (q as f64).powf(-self.params.beta) * u(q as f64 * dist2.sqrt());
        Some((j, phi))
    }

    pub fn eta(&self, x: &[f64]) -> f64 {
        let r = x.iter().map(|t| t * t).sum::<f64>().sqrt();
        let inner = (self.params.d as f64).sqrt();
        if r >= inner + self.rho {
            return self.tau;
        }
        if r > inner {
            return 0.25 + (self.tau - 0.25) * v((r - inner) / self.rho);
        }
        if let Some((j, phi)) = self.active_cell(x) {
            return 0.25 + self.params.sigma[j] as f64 * phi;
        }
        let neg: Vec<f64> = x.iter().map(|t| -t).collect();
        if let Some((j, phi)) = self.active_cell(&neg) {
            return 0.25 - self.params.sigma[j] as f64 * phi;
        }
        0.25
    }

    pub fn mw(&self) -> f64 {
        self.params.m as f64 * self.params.w
    }

    /// `E η(X) = mw/2 + τ(1 − 2mw)`.
    pub fn expected_eta(&self) -> f64 {
        self.mw() / 2.0 + self.tau * (1.0 - 2.0 * self.mw())
    }

    /// Residual of `(1/4)(mw/2 + τ(1 − 2mw)) = mw·b′ + (τ − 1/4)(1 − 2mw)`.
    pub fn balance_residual(&self) -> f64 {
        let mw = self.mw();
        0.25 * self.expected_eta() - (mw * self.b_prime + (self.tau - 0.25) * (1.0 - 2.0 * mw))
    }

    /// Two-term margin bound `2mw·1{δ ≥ C_φ q^{−β}} + 12^α δ^α`.
    pub fn margin_bound(&self, delta: f64) -> f64 {
        let step = if delta >= self.c_phi * (self.params.q as f64).powf(-self.params.beta) { 2.0 * self.mw() } else { 0.0 };
        step + (12.0 * delta).powf(self.params.alpha)
    }

    pub fn components(&self) -> Vec<Ball> {
        let mut out = Vec::with_capacity(2 * self.params.m + 1);
        for j in 0..self.params.m {
            let z = self.cell_center(j);
            out.push(Ball { center: z.iter().map(|t| -t).collect(), radius: self.cell_radius, weight: self.params.w });
            out.push(Ball { center: z, radius: self.cell_radius, weight: self.params.w });
        }
        out.push(Ball { center: self.a0_center.clone(), radius: self.a0_radius, weight: 1.0 - 2.0 * self.mw() });
        out
    }

    /// Density values `w/λ(B(0, 1/(4q)))` and `(1 − 2mw)/λ(A₀)`.
    pub fn density_levels(&self) -> (f64, f64) {
        let d = self.params.d;
        let small = unit_ball_volume(d) * self.cell_radius.powi(d as i32);
        let big = 1.0 - self.params.m as f64 / (self.params.q as f64).powi(d as i32);
        (self.params.w / small, (1.0 - 2.0 * self.mw()) / big)
    }
}

/// Builds the family as an [`AnalyticDistribution`] with `b = 1`; rejects it
/// if θ* departs from 1/4 by more than 2e-3 or the two-term margin bound fails.
pub fn build_hard_family(p: &HardFamilyParams) -> Result<AnalyticDistribution> {
    let family = p.resolve()?;
    let components = family.components();
    let c0 = 2.0 * family.c_phi.powf(-p.alpha) + 12f64.powf(p.alpha);
    let margin = MarginSpec::new(Some(p.alpha), c0, 1.0 / 12.0)?;
    let smoothness = SmoothnessSpec::new(p.beta, p.lipschitz)?;
    let dist = AnalyticDistribution::build(
        "hard",
        EtaModel::Hard(Box::new(family.clone())),
        components,
        FBetaParams::default(),
        margin,
        smoothness,
    )?;
    if (dist.theta_star() - 0.25).abs() > 2e-3 {
        return Err(fail(format!("threshold {} is not 1/4", dist.theta_star())));
    }
    let mut deltas = default_delta_grid();
    deltas.extend((1..=3).map(|k| 2f64.powi(-k)));
    let report = verify_margin(&dist, &deltas);
    for (&delta, &prob) in report.deltas.iter().zip(&report.probabilities) {
        if prob > family.margin_bound(delta) + 1e-12 {
            return Err(fail(format!("margin bound fails at delta={delta}: {prob}")));
        }
    }
    Ok(dist)
}

/// `q = ⌊C̄ n^{1/(2β+d)}⌋`, `w = C′ q^{−d}`, `m = ⌊C″ q^{d−αβ}⌋`.
pub fn minimax_parameters(
    n: usize,
    beta: f64,
    alpha: f64,
    d: usize,
    constants: (f64, f64, f64),
) -> Result<(usize, usize, f64)> {
    if alpha * beta > d as f64 {
        return Err(FbetaError::Argument(format!("need alpha*beta <= d, got {}", alpha * beta)));
    }
    let (c_bar, c_prime, c_dprime) = constants;
    let q = (c_bar * (n as f64).powf(1.0 / (2.0 * beta + d as f64))).floor() as usize;
    if q == 0 {
        return Err(FbetaError::Argument("grid resolution q rounds to zero".into()));
    }
    let qf = q as f64;
    let w = c_prime * qf.powi(-(d as i32));
    let m = (c_dprime * qf.powf(d as f64 - alpha * beta)).floor() as usize;
    Ok((q, m, w))
}
