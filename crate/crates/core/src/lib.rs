//! F_b-score optimal classification by plug-in rules.
//!
//! The crate is organized bottom-up:
//!
//! * [`fbeta`]: exact population F_b scores, the optimal threshold θ* and the
//!   Bayes classifier on finite-support distributions.
//! * [`threshold`]: the empirical threshold θ̂ computed from scores on an
//!   unlabeled sample, and the CDF-gap bound on `|θ̂ − θ*|`.
//! * [`regression`]: kNN, kernel and local polynomial estimates of η.
//! * [`plugin`]: the two-step classifier `ĝ(x) = 1{η̂(x) > θ̂}`.
//! * [`synthetic`]: distribution families with known η, θ*, margin and
//!   smoothness, including a minimax hard family.
//! * [`oracle`]: brute-force ground truth for small instances.

pub mod error;
pub mod fbeta;
pub mod io;
pub mod numeric;
pub mod oracle;
pub mod plugin;
pub mod regression;
pub mod rng;
pub mod root;
pub mod synthetic;
pub mod threshold;

pub use error::{FbetaError, Result};
pub use fbeta::{
    bayes_classifier, bayes_threshold, excess_fbeta, population_fbeta, DiscreteDistribution, ExcessMode,
    FBetaParams, Threshold,
};
pub use regression::{
    default_bandwidth, fit_kernel, fit_knn, fit_local_poly, KernelKind, LabeledDataset, RegressionEstimate,
    RegressionMethod, SmoothnessSpec,
};
pub use threshold::{cdf_gap_bound, empirical_threshold, ScoreSample, ThresholdEstimate};
pub use plugin::{train_plugin, EstimatorConfig, PluginClassifier, UnlabeledDataset};
pub use synthetic::{build_hard_family, AnalyticDistribution, HardFamilyParams, MarginSpec};
