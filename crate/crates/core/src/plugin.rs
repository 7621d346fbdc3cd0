//! The two-step plug-in classifier.
//!
//! 1. Fit η̂ on the labeled sample `D_n`.
//! 2. Solve the empirical threshold equation for θ̂ on η̂ evaluated over the
//!    unlabeled sample `D_N`.
//!
//! Prediction is `ĝ(x) = 1{η̂(x) > θ̂}`. When `N < n` the unlabeled sample is
//! augmented with every labeled feature vector, labels erased.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{FbetaError, Result};
use crate::fbeta::{FBetaParams, Threshold};
use crate::io::{read_labeled_csv, write_labeled_csv};
use crate::regression::{default_bandwidth, fit, KernelKind, LabeledDataset, RegressionEstimate, RegressionMethod, SmoothnessSpec};
use crate::threshold::{empirical_threshold_with, ScoreSample, ThresholdSolver};

/// Unlabeled sample `D_N` stored row-major. May be empty before augmentation.
#[derive(Debug, Clone, PartialEq)]
pub struct UnlabeledDataset {
    dim: usize,
    points: Vec<f64>,
}

impl UnlabeledDataset {
    pub fn new(dim: usize, points: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(FbetaError::Invalid("dimension must be at least 1".into()));
        }
        if points.len() % dim != 0 {
            return Err(FbetaError::Invalid(format!("{} coordinates do not form points of dimension {dim}", points.len())));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(FbetaError::Invalid("points must be finite".into()));
        }
        Ok(UnlabeledDataset { dim, points })
    }

    pub fn empty(dim: usize) -> Result<Self> {
        Self::new(dim, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }
}

/// Rule turning the labeled sample size into a neighbor count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborRule {
    Fixed(usize),
    /// `⌈√n⌉`
    Sqrt,
    /// `⌈a_n⌉ = ⌈n^{2β/(2β+d)}⌉`
    Rate { beta: f64 },
}

/// Rule turning the labeled sample size into a bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthRule {
    Fixed(f64),
    /// `n^{-1/(2β+d)}`, optionally scaled.
    Rate {
        beta: f64,
        #[serde(default = "unit")]
        scale: f64,
    },
}

fn unit() -> f64 {
    1.0
}

/// Estimator family with size-dependent hyperparameter rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum EstimatorConfig {
    Knn { k: NeighborRule },
    Kernel { h: BandwidthRule, kernel: KernelKind },
    LocalPoly { degree: usize, h: BandwidthRule },
}

impl EstimatorConfig {
    /// Hyperparameters for a labeled sample of size `n` in dimension `d`.
    pub fn resolve(&self, n: usize, d: usize) -> Result<RegressionMethod> {
        let bandwidth = |rule: &BandwidthRule| -> Result<f64> {
            match *rule {
                BandwidthRule::Fixed(h) => Ok(h),
                BandwidthRule::Rate { beta, scale } => {
                    let spec = SmoothnessSpec::new(beta, 1.0)?;
                    Ok(scale * default_bandwidth(n, &spec, d).0)
                }
            }
        };
        Ok(match self {
            EstimatorConfig::Knn { k } => {
                let k = match *k {
                    NeighborRule::Fixed(k) => k,
                    NeighborRule::Sqrt => (n as f64).sqrt().ceil() as usize,
                    NeighborRule::Rate { beta } => {
                        let spec = SmoothnessSpec::new(beta, 1.0)?;
                        (default_bandwidth(n, &spec, d).1.ceil() as usize).clamp(1, n.max(1))
                    }
                };
                RegressionMethod::Knn { k }
            }
            EstimatorConfig::Kernel { h, kernel } => RegressionMethod::Kernel { h: bandwidth(h)?, kernel: *kernel },
            EstimatorConfig::LocalPoly { degree, h } => RegressionMethod::LocalPoly { degree: *degree, h: bandwidth(h)? },
        })
    }
}

/// How a classifier was trained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Labeled sample size.
    pub n: usize,
    /// Unlabeled sample size as supplied.
    pub n_unlabeled: usize,
    /// Size of the sample the threshold was solved on.
    pub n_threshold_sample: usize,
    /// Labeled features were appended to the unlabeled sample.
    pub augmented: bool,
    pub estimator: RegressionMethod,
    pub solver: ThresholdSolver,
    /// Every score on the threshold sample was zero; θ̂ = 0 by convention.
    pub degenerate_scores: bool,
}

/// Options for [`train_plugin_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub solver: ThresholdSolver,
    pub tol: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions { solver: ThresholdSolver::Exact, tol: 1e-10 }
    }
}

/// `ĝ(x) = 1{η̂(x) > θ̂}`.
#[derive(Debug, Clone)]
pub struct PluginClassifier {
    pub eta_hat: RegressionEstimate,
    pub theta_hat: Threshold,
    pub params: FBetaParams,
    pub provenance: Provenance,
}

pub fn train_plugin(
    labeled: &LabeledDataset,
    unlabeled: &UnlabeledDataset,
    config: &EstimatorConfig,
    params: &FBetaParams,
) -> Result<PluginClassifier> {
    train_plugin_with(labeled, unlabeled, config, params, TrainOptions::default())
}

pub fn train_plugin_with(
    labeled: &LabeledDataset,
    unlabeled: &UnlabeledDataset,
    config: &EstimatorConfig,
    params: &FBetaParams,
    options: TrainOptions,
) -> Result<PluginClassifier> {
    if unlabeled.dim() != labeled.dim() {
        return Err(FbetaError::Argument(format!(
            "unlabeled dimension {} differs from labeled dimension {}",
            unlabeled.dim(),
            labeled.dim()
        )));
    }
    if labeled.positives() == 0 {
        return Err(FbetaError::TrainingDegenerate(format!(
            "all {} labels are 0, so the threshold equation is vacuous",
            labeled.len()
        )));
    }
    let method = config.resolve(labeled.len(), labeled.dim())?;
    let eta_hat = fit(labeled, method)?;
    let augmented = unlabeled.len() < labeled.len();
    let scores = if augmented {
        let mut pts = unlabeled.points().to_vec();
        pts.extend_from_slice(labeled.points());
        eta_hat.evaluate_batch(&pts)?
    } else {
        eta_hat.evaluate_batch(unlabeled.points())?
    };
    let n_threshold_sample = scores.len();
    let sample = ScoreSample::new(scores)?.with_source(labeled.len());
    let estimate = empirical_threshold_with(&sample, params, options.tol, options.solver)?;
    Ok(PluginClassifier {
        eta_hat,
        theta_hat: estimate.threshold,
        params: *params,
        provenance: Provenance {
            n: labeled.len(),
            n_unlabeled: unlabeled.len(),
            n_threshold_sample,
            augmented,
            estimator: method,
            solver: options.solver,
            degenerate_scores: estimate.degenerate,
        },
    })
}

/// On-disk JSON record; the training sample lives in a CSV next to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ClassifierRecord {
    format: String,
    params: FBetaParams,
    theta_hat: f64,
    estimator: RegressionMethod,
    provenance: Provenance,
    training_data: String,
}

const FORMAT: &str = "fbeta-plugin-classifier/1";

impl PluginClassifier {
    pub fn dim(&self) -> usize {
        self.eta_hat.dim()
    }

    pub fn score(&self, x: &[f64]) -> Result<f64> {
        self.eta_hat.evaluate(x)
    }

    pub fn predict(&self, x: &[f64]) -> Result<bool> {
        Ok(self.score(x)? > self.theta_hat.0)
    }

    /// Scores and predictions for every point of `data`.
    pub fn predict_batch(&self, data: &UnlabeledDataset) -> Result<(Vec<f64>, Vec<bool>)> {
        if data.dim() != self.dim() {
            return Err(FbetaError::Argument(format!(
                "data has dimension {}, classifier expects {}",
                data.dim(),
                self.dim()
            )));
        }
        let scores = self.eta_hat.evaluate_batch(data.points())?;
        let predictions = scores.iter().map(|&s| s > self.theta_hat.0).collect();
        Ok((scores, predictions))
    }

    /// Writes `path` (JSON) and `<stem>.training.csv` beside it.
    pub fn save(&self, path: &Path) -> Result<()> {
        let sidecar = sidecar_path(path);
        write_labeled_csv(&sidecar, self.eta_hat.data())?;
        let record = ClassifierRecord {
            format: FORMAT.into(),
            params: self.params,
            theta_hat: self.theta_hat.0,
            estimator: self.eta_hat.method(),
            provenance: self.provenance.clone(),
            training_data: sidecar.file_name().unwrap().to_string_lossy().into_owned(),
        };
        std::fs::write(path, serde_json::to_string_pretty(&record)? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let record: ClassifierRecord = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if record.format != FORMAT {
            return Err(FbetaError::Invalid(format!("unknown classifier format {:?}", record.format)));
        }
        let data_path = path.parent().unwrap_or(Path::new(".")).join(&record.training_data);
        let data = read_labeled_csv(&data_path)?;
        let eta_hat = fit(&data, record.estimator)?;
        Ok(PluginClassifier {
            eta_hat,
            theta_hat: Threshold(record.theta_hat),
            params: record.params,
            provenance: record.provenance,
        })
    }
}

fn sidecar_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map_or("classifier".into(), |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}.training.csv"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_point_sample(n: usize, rng: &mut ChaCha8Rng) -> (LabeledDataset, Vec<f64>) {
        let xs: Vec<f64> = (0..n).map(|_| if rng.random::<bool>() { 0.0 } else { 1.0 }).collect();
        let ys = xs.iter().map(|&x| u8::from(rng.random::<f64>() < if x == 0.0 { 0.9 } else { 0.1 })).collect();
        (LabeledDataset::new(1, xs, ys).unwrap(), (0..n).map(|_| if rng.random::<bool>() { 0.0 } else { 1.0 }).collect())
    }

    #[test]
    fn constant_one_labels() {
        let data = LabeledDataset::new(1, vec![0.1, 0.5, 0.9], vec![1, 1, 1]).unwrap();
        let un = UnlabeledDataset::new(1, vec![0.2, 0.3, 0.4, 0.8]).unwrap();
        let clf = train_plugin(&data, &un, &EstimatorConfig::Knn { k: NeighborRule::Fixed(3) }, &FBetaParams::default()).unwrap();
        assert!((clf.theta_hat.0 - 0.5).abs() < 1e-15);
        assert!(clf.predict(&[7.0]).unwrap());
        assert!(!clf.provenance.augmented);
    }

    #[test]
    fn empty_unlabeled_set_is_augmented() {
        let data = LabeledDataset::new(1, vec![0.0, 1.0, 2.0, 3.0], vec![1, 0, 1, 0]).unwrap();
        let un = UnlabeledDataset::empty(1).unwrap();
        let clf = train_plugin(&data, &un, &EstimatorConfig::Knn { k: NeighborRule::Fixed(1) }, &FBetaParams::default()).unwrap();
        assert!(clf.provenance.augmented);
        assert_eq!(clf.provenance.n_threshold_sample, 4);
        // Scores on the labeled points are the labels: θ/2 = 2(1 − θ)/4.
        assert!((clf.theta_hat.0 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn all_zero_labels_rejected() {
        let data = LabeledDataset::new(1, vec![0.0, 1.0], vec![0, 0]).unwrap();
        let un = UnlabeledDataset::empty(1).unwrap();
        let err = train_plugin(&data, &un, &EstimatorConfig::Knn { k: NeighborRule::Sqrt }, &FBetaParams::default());
        assert!(matches!(err, Err(FbetaError::TrainingDegenerate(_))));
    }

    #[test]
    fn strict_inequality_and_dimension_check() {
        let data = LabeledDataset::new(1, vec![0.0, 1.0], vec![1, 0]).unwrap();
        let un = UnlabeledDataset::new(1, vec![0.0, 1.0]).unwrap();
        let mut clf = train_plugin(&data, &un, &EstimatorConfig::Knn { k: NeighborRule::Fixed(2) }, &FBetaParams::default()).unwrap();
        clf.theta_hat = Threshold(0.5);
        assert!(!clf.predict(&[0.3]).unwrap());
        assert!(matches!(clf.predict(&[0.3, 0.1]), Err(FbetaError::Argument(_))));
    }

    #[test]
    fn two_point_threshold_converges() {
        let mut total = 0.0;
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (data, un) = two_point_sample(4000, &mut rng);
            let un = UnlabeledDataset::new(1, un).unwrap();
            let clf = train_plugin(&data, &un, &EstimatorConfig::Knn { k: NeighborRule::Sqrt }, &FBetaParams::default()).unwrap();
            total += (clf.theta_hat.0 - 0.45).abs();
        }
        assert!(total / 50.0 < 0.05, "mean error {}", total / 50.0);
    }

    #[test]
    fn save_and_load_reproduce_predictions() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let xs: Vec<f64> = (0..200).map(|_| rng.random()).collect();
        let ys = xs.iter().map(|&x| u8::from(rng.random::<f64>() < x)).collect();
        let data = LabeledDataset::new(1, xs, ys).unwrap();
        let un = UnlabeledDataset::new(1, (0..300).map(|_| rng.random()).collect()).unwrap();
        let config = EstimatorConfig::LocalPoly { degree: 1, h: BandwidthRule::Rate { beta: 1.0, scale: 1.0 } };
        let clf = train_plugin(&data, &un, &config, &FBetaParams::new(2.0).unwrap()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        clf.save(&path).unwrap();
        assert!(dir.path().join("model.training.csv").exists());
        let back = PluginClassifier::load(&path).unwrap();
        assert_eq!(back.theta_hat, clf.theta_hat);
        assert_eq!(back.provenance, clf.provenance);
        assert_eq!(back.predict_batch(&un).unwrap(), clf.predict_batch(&un).unwrap());
    }

    #[test]
    fn config_serde_shape() {
        let c = EstimatorConfig::Knn { k: NeighborRule::Rate { beta: 1.0 } };
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json, r#"{"method":"knn","k":{"rate":{"beta":1.0}}}"#);
        assert_eq!(c.resolve(1000, 1).unwrap(), RegressionMethod::Knn { k: 100 });
    }
}
