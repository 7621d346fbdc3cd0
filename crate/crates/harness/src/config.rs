//! Experiment configuration, read from TOML.
//!
//! ```toml
//! family = { kind = "smooth_1d", beta = 1.0, alpha = 1.0 }
//! estimator = { method = "knn", k = { rate = { beta = 1.0 } } }
//! b = 1.0
//! n_grid = [500, 1000, 2000, 4000, 8000]
//! n_rule = "same"            # or "square", or { fixed = 1000 }
//! replications = 50
//! seed = 1
//! output_dir = "out"
//! scoring = "auto"           # or "literal", "histogram"
//! eval_atoms = 131072
//! parallel = true
//! ```

use std::path::{Path, PathBuf};

use fbeta_core::plugin::{EstimatorConfig, NeighborRule};
use fbeta_core::synthetic::{
    build_hard_family, make_constant_family, make_separated_family, make_smooth_1d_family, AnalyticDistribution,
    HardFamilyParams,
};
use fbeta_core::{FBetaParams, FbetaError, Result};
use serde::{Deserialize, Serialize};

/// Which synthetic family to sample from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilySpec {
    #[serde(rename = "smooth_1d")]
    Smooth1d { beta: f64, alpha: f64 },
    Constant { value: f64 },
    Separated,
    Hard(HardFamilyParams),
}

impl FamilySpec {
    pub fn build(&self, params: &FBetaParams) -> Result<AnalyticDistribution> {
        match self {
            FamilySpec::Smooth1d { beta, alpha } => make_smooth_1d_family(*beta, *alpha, params),
            FamilySpec::Constant { value } => make_constant_family(*value, params),
            FamilySpec::Separated => make_separated_family(params),
            FamilySpec::Hard(p) => {
                if params.b != 1.0 {
                    return Err(FbetaError::Argument("the hard family is defined for b = 1".into()));
                }
                build_hard_family(p)
            }
        }
    }

    /// Default parameters for a family named on the command line.
    pub fn named(name: &str) -> Result<Self> {
        Ok(match name {
            "smooth_1d" => FamilySpec::Smooth1d { beta: 1.0, alpha: 1.0 },
            "constant" => FamilySpec::Constant { value: 0.5 },
            "separated" => FamilySpec::Separated,
            "hard" => FamilySpec::Hard(HardFamilyParams {
                d: 1,
                beta: 1.0,
                lipschitz: 1.0,
                alpha: 1.0,
                q: 4,
                m: 1,
                w: 0.25,
                c_phi: None,
                rho: None,
                sigma: vec![1],
            }),
            other => return Err(FbetaError::Argument(format!("unknown family {other:?}"))),
        })
    }
}

/// Size of the unlabeled sample as a function of `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NRule {
    Same,
    Square,
    Fixed(u64),
}

impl NRule {
    pub fn size(&self, n: usize) -> u64 {
        match *self {
            NRule::Same => n as u64,
            NRule::Square => (n as u64) * (n as u64),
            NRule::Fixed(m) => m,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "same" => Ok(NRule::Same),
            "square" => Ok(NRule::Square),
            _ => s
                .strip_prefix("fixed:")
                .and_then(|v| v.parse().ok())
                .map(NRule::Fixed)
                .ok_or_else(|| FbetaError::Argument(format!("unknown N rule {s:?}; use same, square or fixed:<N>"))),
        }
    }
}

/// How θ̂ is computed from the unlabeled sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scoring {
    /// Draw every unlabeled point and evaluate η̂ on it.
    Literal,
    /// Draw the multinomial counts of the unlabeled sample over the pieces of
    /// a piecewise-constant η̂; the same law as the literal path.
    Histogram,
    /// Histogram when available and `N > 16n`, literal otherwise.
    #[default]
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub family: FamilySpec,
    pub estimator: EstimatorConfig,
    #[serde(default = "one")]
    pub b: f64,
    pub n_grid: Vec<usize>,
    #[serde(default = "same")]
    pub n_rule: NRule,
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "out")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub scoring: Scoring,
    #[serde(default = "atoms")]
    pub eval_atoms: usize,
    #[serde(default = "yes")]
    pub parallel: bool,
}

fn one() -> f64 {
    1.0
}
fn same() -> NRule {
    NRule::Same
}
fn out() -> PathBuf {
    PathBuf::from("out")
}
fn atoms() -> usize {
    1 << 17
}
fn yes() -> bool {
    true
}

/// kNN with `k = ⌈n^{2β/(2β+d)}⌉`.
pub fn default_estimator(beta: f64) -> EstimatorConfig {
    EstimatorConfig::Knn { k: NeighborRule::Rate { beta } }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            family: FamilySpec::Smooth1d { beta: 1.0, alpha: 1.0 },
            estimator: default_estimator(1.0),
            b: 1.0,
            n_grid: vec![500, 1000, 2000, 4000, 8000],
            n_rule: NRule::Same,
            replications: 50,
            seed: 1,
            output_dir: out(),
            scoring: Scoring::Auto,
            eval_atoms: atoms(),
            parallel: true,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| FbetaError::Invalid(format!("config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[0] >= w[1]) || self.n_grid[0] == 0 {
            return Err(FbetaError::Invalid("n_grid must be nonempty, positive and strictly increasing".into()));
        }
        if self.replications == 0 {
            return Err(FbetaError::Invalid("replications must be at least 1".into()));
        }
        if self.eval_atoms == 0 {
            return Err(FbetaError::Invalid("eval_atoms must be positive".into()));
        }
        FBetaParams::new(self.b)?;
        Ok(())
    }

    pub fn params(&self) -> Result<FBetaParams> {
        FBetaParams::new(self.b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_example() {
        let text = r#"
            family = { kind = "smooth_1d", beta = 1.0, alpha = 1.0 }
            estimator = { method = "knn", k = { rate = { beta = 1.0 } } }
            b = 1.0
            n_grid = [500, 1000]
            n_rule = "square"
            replications = 5
            seed = 9
        "#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.n_rule, NRule::Square);
        assert_eq!(cfg.estimator, default_estimator(1.0));
        assert_eq!(cfg.eval_atoms, 1 << 17);
        let fixed = ExperimentConfig::from_toml(&text.replace("\"square\"", "{ fixed = 100 }")).unwrap();
        assert_eq!(fixed.n_rule, NRule::Fixed(100));
    }

    #[test]
    fn parses_hard_family() {
        let text = r#"
            family = { kind = "hard", d = 1, beta = 1.0, L = 1.0, alpha = 1.0, q = 4, m = 1, w = 0.25, sigma = [1] }
            estimator = { method = "local_poly", degree = 1, h = { rate = { beta = 1.0 } } }
            n_grid = [100]
            replications = 1
        "#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert!(matches!(cfg.family, FamilySpec::Hard(_)));
    }

    #[test]
    fn parses_kernel_and_two_dimensional_forms() {
        let text = r#"
            family = { kind = "hard", d = 2, beta = 1.0, L = 1.0, alpha = 1.0, q = 4, m = 4, w = 0.03125, sigma = [1, -1, 1, 1] }
            estimator = { method = "kernel", kernel = "epanechnikov", h = { fixed = 0.1 } }
            n_grid = [100]
            replications = 1
        "#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(
            cfg.estimator,
            EstimatorConfig::Kernel {
                h: fbeta_core::plugin::BandwidthRule::Fixed(0.1),
                kernel: fbeta_core::KernelKind::Epanechnikov
            }
        );
        assert_eq!(cfg.family.build(&cfg.params().unwrap()).unwrap().dim(), 2);
    }

    #[test]
    fn rejects_bad_grids() {
        let mut cfg = ExperimentConfig::default();
        cfg.n_grid = vec![10, 10];
        assert!(cfg.validate().is_err());
        cfg.n_grid = vec![10];
        cfg.replications = 0;
        assert!(cfg.validate().is_err());
        assert_eq!(NRule::parse("fixed:7").unwrap(), NRule::Fixed(7));
        assert!(NRule::parse("double").is_err());
    }
}
