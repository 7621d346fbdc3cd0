use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fbeta_core::io::{read_labeled_csv, read_unlabeled_csv, write_predictions_csv};
use fbeta_core::oracle::{cdf_gap_bound_suite, randomized_identity_suite};
use fbeta_core::plugin::{BandwidthRule, NeighborRule};
use fbeta_core::{train_plugin, EstimatorConfig, FBetaParams, FbetaError, KernelKind, PluginClassifier, Result};
use fbeta_core::{SmoothnessSpec, UnlabeledDataset};
use fbeta_harness::config::{default_estimator, ExperimentConfig, FamilySpec, NRule, Scoring};
use fbeta_harness::report::{emit_dkw_report, emit_report, ALL_FORMATS};
use fbeta_harness::{run_dkw_check, run_experiment, RateFitResult};
use serde_json::json;

#[derive(Parser)]
#[command(name = "fbeta", version, about = "F_b-optimal plug-in classification: experiments, training and prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the convergence rate of the excess F_b score.
    Rate(ExperimentArgs),
    /// Fit the convergence rate of the threshold error |θ̂ − θ*|.
    Threshold(ExperimentArgs),
    /// Tabulate DKW exceedance frequencies of the uniform empirical CDF.
    Dkw(DkwArgs),
    /// Randomized checks of the threshold oracles on small discrete laws.
    OracleSuite(SuiteArgs),
    /// Train a plug-in classifier from CSV data.
    Train(TrainArgs),
    /// Score and classify CSV features with a saved classifier.
    Predict(PredictArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML experiment file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated labeled sample sizes.
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// smooth_1d, constant, separated or hard.
    #[arg(long)]
    family: Option<String>,
    /// knn, kernel or local_poly, with rate-optimal hyperparameters.
    #[arg(long)]
    estimator: Option<String>,
    #[arg(long)]
    b: Option<f64>,
    /// same, square or fixed:<N>.
    #[arg(long)]
    n_rule: Option<String>,
    /// auto, literal or histogram.
    #[arg(long)]
    scoring: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DkwArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![100usize, 1000, 10000])]
    n_values: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.01f64, 0.05, 0.1])]
    t_values: Vec<f64>,
    #[arg(long, default_value_t = 2000)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SuiteArgs {
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// CSV with columns x_1..x_d, y.
    #[arg(long)]
    labeled: PathBuf,
    /// CSV with columns x_1..x_d; defaults to no unlabeled data.
    #[arg(long)]
    unlabeled: Option<PathBuf>,
    /// knn, kernel or local_poly.
    #[arg(long, default_value = "knn")]
    estimator: String,
    /// Neighbor count; defaults to the rate rule.
    #[arg(long)]
    k: Option<usize>,
    /// Bandwidth; defaults to the rate rule.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    degree: Option<usize>,
    /// Smoothness used by the rate rules.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    /// Output JSON path; the training data is written beside it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// CSV with columns x_1..x_d.
    #[arg(long)]
    data: PathBuf,
    /// Output CSV with columns x_1..x_d, score, prediction.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            emit_error("usage", &e.to_string());
            return ExitCode::from(2);
        }
    };
    let outcome = match cli.command {
        Command::Rate(a) => experiment(a, true),
        Command::Threshold(a) => experiment(a, false),
        Command::Dkw(a) => dkw(a),
        Command::OracleSuite(a) => oracle_suite(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
    };
    match outcome {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            emit_error(e.kind(), &e.to_string());
            ExitCode::FAILURE
        }
    }
}

fn emit_error(kind: &str, message: &str) {
    eprintln!("{}", json!({ "error": { "kind": kind, "message": message.trim() } }));
}

fn family_beta(family: &FamilySpec) -> f64 {
    match family {
        FamilySpec::Smooth1d { beta, .. } => *beta,
        FamilySpec::Hard(p) => p.beta,
        FamilySpec::Constant { .. } | FamilySpec::Separated => 1.0,
    }
}

fn named_estimator(name: &str, beta: f64) -> Result<EstimatorConfig> {
    let h = BandwidthRule::Rate { beta, scale: 1.0 };
    Ok(match name {
        "knn" => default_estimator(beta),
        "kernel" => EstimatorConfig::Kernel { h, kernel: KernelKind::Epanechnikov },
        "local_poly" => EstimatorConfig::LocalPoly { degree: SmoothnessSpec::new(beta, 1.0)?.poly_degree(), h },
        other => return Err(FbetaError::Argument(format!("unknown estimator {other:?}; use knn, kernel or local_poly"))),
    })
}

fn build_config(a: &ExperimentArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &a.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(name) = &a.family {
        cfg.family = FamilySpec::named(name)?;
        if a.estimator.is_none() {
            cfg.estimator = default_estimator(family_beta(&cfg.family));
        }
    }
    if let Some(name) = &a.estimator {
        cfg.estimator = named_estimator(name, family_beta(&cfg.family))?;
    }
    if let Some(grid) = &a.n_grid {
        cfg.n_grid = grid.clone();
    }
    if let Some(r) = a.reps {
        cfg.replications = r;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(b) = a.b {
        cfg.b = b;
    }
    if let Some(rule) = &a.n_rule {
        cfg.n_rule = NRule::parse(rule)?;
    }
    if let Some(s) = &a.scoring {
        cfg.scoring = match s.as_str() {
            "auto" => Scoring::Auto,
            "literal" => Scoring::Literal,
            "histogram" => Scoring::Histogram,
            other => return Err(FbetaError::Argument(format!("unknown scoring {other:?}"))),
        };
    }
    if let Some(out) = &a.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn fit_summary(r: &RateFitResult) -> serde_json::Value {
    json!({
        "statistic": r.statistic,
        "slope": r.slope,
        "half_width": r.half_width,
        "theoretical_exponent": r.theoretical_exponent,
        "excluded_cells": r.excluded_cells,
        "infinite_rate": r.infinite_rate,
    })
}

fn paths(files: &[PathBuf]) -> Vec<String> {
    files.iter().map(|p| p.display().to_string()).collect()
}

fn experiment(a: ExperimentArgs, excess: bool) -> Result<String> {
    let cfg = build_config(&a)?;
    let out = run_experiment(&cfg)?;
    let (result, stem) = if excess { (&out.excess, "rate") } else { (&out.threshold, "threshold") };
    let files = emit_report(result, &cfg.output_dir, stem, &ALL_FORMATS)?;
    let mut summary = fit_summary(result);
    summary["files"] = json!(paths(&files));
    Ok(summary.to_string())
}

fn dkw(a: DkwArgs) -> Result<String> {
    let table = run_dkw_check(&a.n_values, &a.t_values, a.reps, a.seed)?;
    let files = emit_dkw_report(&table, &a.out, "dkw")?;
    Ok(json!({ "all_passed": table.all_passed(), "files": paths(&files) }).to_string())
}

fn oracle_suite(a: SuiteArgs) -> Result<String> {
    let identity = randomized_identity_suite(a.trials, a.seed, Some(&a.out.join("oracle_failures")))?;
    let bound = cdf_gap_bound_suite(a.trials, a.seed)?;
    std::fs::create_dir_all(&a.out)?;
    let path = a.out.join("oracle_suite.json");
    let record = json!({ "identity": identity, "cdf_gap_bound": bound });
    std::fs::write(&path, serde_json::to_string_pretty(&record)? + "\n")?;
    let passed = identity.all_passed() && bound.failures.is_empty();
    if !passed {
        return Err(FbetaError::Contract(format!(
            "{} identity failures and {} bound failures; see {}",
            identity.failures.len(),
            bound.failures.len(),
            path.display()
        )));
    }
    Ok(json!({ "all_passed": true, "files": [path.display().to_string()] }).to_string())
}

fn train(a: TrainArgs) -> Result<String> {
    let labeled = read_labeled_csv(&a.labeled)?;
    let unlabeled = match &a.unlabeled {
        Some(p) => read_unlabeled_csv(p)?,
        None => UnlabeledDataset::empty(labeled.dim())?,
    };
    let h = match a.h {
        Some(h) => BandwidthRule::Fixed(h),
        None => BandwidthRule::Rate { beta: a.beta, scale: 1.0 },
    };
    let config = match a.estimator.as_str() {
        "knn" => EstimatorConfig::Knn { k: a.k.map_or(NeighborRule::Rate { beta: a.beta }, NeighborRule::Fixed) },
        "kernel" => EstimatorConfig::Kernel { h, kernel: KernelKind::Epanechnikov },
        "local_poly" => EstimatorConfig::LocalPoly {
            degree: match a.degree {
                Some(d) => d,
                None => SmoothnessSpec::new(a.beta, 1.0)?.poly_degree(),
            },
            h,
        },
        other => return Err(FbetaError::Argument(format!("unknown estimator {other:?}; use knn, kernel or local_poly"))),
    };
    let clf = train_plugin(&labeled, &unlabeled, &config, &FBetaParams::new(a.b)?)?;
    clf.save(&a.out)?;
    Ok(json!({ "theta_hat": clf.theta_hat.0, "model": a.out.display().to_string() }).to_string())
}

fn predict(a: PredictArgs) -> Result<String> {
    let clf = PluginClassifier::load(Path::new(&a.model))?;
    let data = read_unlabeled_csv(&a.data)?;
    let (scores, predictions) = clf.predict_batch(&data)?;
    write_predictions_csv(&a.out, &data, &scores, &predictions)?;
    let positives = predictions.iter().filter(|&&p| p).count();
    Ok(json!({ "rows": predictions.len(), "positives": positives, "out": a.out.display().to_string() }).to_string())
}
