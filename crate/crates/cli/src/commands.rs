//! Subcommand implementations. Each command reads and writes only the
//! files named in its arguments and is deterministic given its flags, so
//! reruns produce byte-identical outputs.

use std::io::Write;
use std::path::{Path, PathBuf};

use splitz_core::certify::{
    calibration_mean_lipschitz, certify_splitz, GammaMode, GammaSearchConfig,
};
use splitz_core::data::{gen_blobs, Dataset};
use splitz_core::lipschitz::{global_lipschitz_bound, local_lipschitz_bound, per_layer_norms};
use splitz_core::rng::RngStream;
use splitz_core::smoothing::smooth_predict;
use splitz_core::train::{train, TrainConfig};
use splitz_core::Network;

use crate::config::load_train_config;
use crate::csv_io::{load_csv, save_csv};
use crate::error::CliError;
use crate::idx::load_idx;
use crate::model_io::{load_model, save_model};
use crate::report::{
    average_certified_radius, average_certified_radius_correct_only, certified_accuracy,
    default_epsilon_grid, read_report, write_report, ReportRow,
};

/// Load a dataset CSV using the house convention: header row present, the
/// label column found by its header name (falling back to the last column).
pub fn load_dataset(path: &Path) -> Result<Dataset, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(path.display().to_string(), e))?;
    let header = text
        .lines()
        .next()
        .ok_or_else(|| CliError::format(path.display().to_string(), "empty file"))?;
    let columns: Vec<&str> = header.split(',').collect();
    let label_column = columns
        .iter()
        .position(|c| c.trim() == "label")
        .unwrap_or(columns.len().saturating_sub(1));
    load_csv(path, true, label_column)
}

fn check_dataset_matches(net: &Network, ds: &Dataset, path: &Path) -> Result<(), CliError> {
    if ds.dim() != net.input_dim() {
        return Err(CliError::format(
            path.display().to_string(),
            format!(
                "dataset dimension {} does not match the model input {}",
                ds.dim(),
                net.input_dim()
            ),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct GenDataArgs {
    pub kind: String,
    pub n: usize,
    pub classes: usize,
    pub dim: usize,
    pub separation: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub images: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    /// When set, carve stratified validation/test splits out of the same
    /// generated set and write them next to `out`.
    pub out_val: Option<PathBuf>,
    pub out_test: Option<PathBuf>,
    pub val_fraction: f64,
    pub test_fraction: f64,
}

pub fn cmd_gen_data(args: &GenDataArgs) -> Result<(), CliError> {
    let ds = match args.kind.as_str() {
        "blobs" => gen_blobs(args.n, args.classes, args.dim, args.separation, args.seed)?,
        "idx" => {
            let images = args
                .images
                .as_ref()
                .ok_or_else(|| CliError::Flag("--images is required for --kind idx".into()))?;
            let labels = args
                .labels
                .as_ref()
                .ok_or_else(|| CliError::Flag("--labels is required for --kind idx".into()))?;
            load_idx(images, labels)?
        }
        other => return Err(CliError::Flag(format!("unknown data kind '{other}'"))),
    };
    let hold_out = args.val_fraction + args.test_fraction;
    if (args.out_val.is_some() || args.out_test.is_some()) != (hold_out > 0.0) {
        return Err(CliError::Flag(
            "split outputs and positive val/test fractions go together".into(),
        ));
    }
    if hold_out == 0.0 {
        return save_csv(&ds, &args.out);
    }
    if hold_out >= 1.0 {
        return Err(CliError::Flag("val and test fractions must leave training data".into()));
    }
    let mut fractions = vec![1.0 - hold_out];
    let mut paths: Vec<&PathBuf> = vec![&args.out];
    if args.val_fraction > 0.0 {
        fractions.push(args.val_fraction);
        paths.push(args.out_val.as_ref().ok_or_else(|| {
            CliError::Flag("--out-val is required with --val-fraction".into())
        })?);
    }
    if args.test_fraction > 0.0 {
        fractions.push(args.test_fraction);
        paths.push(args.out_test.as_ref().ok_or_else(|| {
            CliError::Flag("--out-test is required with --test-fraction".into())
        })?);
    }
    let parts = splitz_core::data::split(&ds, &fractions, args.seed)?;
    for (part, path) in parts.iter().zip(paths) {
        save_csv(part, path)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Default)]
pub struct TrainOverrides {
    pub sigma: Option<f64>,
    pub epochs: Option<usize>,
    pub seed: Option<u64>,
    pub split_index: Option<usize>,
    pub lambda_start: Option<f64>,
    pub lambda_end: Option<f64>,
}

impl TrainOverrides {
    fn apply(&self, cfg: &mut TrainConfig) {
        if let Some(v) = self.sigma {
            cfg.sigma = v;
        }
        if let Some(v) = self.epochs {
            cfg.epochs = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.split_index {
            cfg.split_index = v;
        }
        if let Some(v) = self.lambda_start {
            cfg.lambda_start = v;
        }
        if let Some(v) = self.lambda_end {
            cfg.lambda_end = v;
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainArgs {
    pub config: PathBuf,
    pub data: PathBuf,
    pub val: PathBuf,
    pub out_model: PathBuf,
    pub report: Option<PathBuf>,
    pub overrides: TrainOverrides,
}

pub fn cmd_train(args: &TrainArgs) -> Result<(), CliError> {
    let mut cfg = load_train_config(&args.config)?;
    args.overrides.apply(&mut cfg);
    let train_data = load_dataset(&args.data)?;
    let val_data = load_dataset(&args.val)?;
    let (net, report) = train(&cfg, &train_data, &val_data)?;
    save_model(&net, &args.out_model)?;
    if let Some(report_path) = &args.report {
        let mut out = String::from(
            "epoch,lambda,learning_rate,theta_lip,mean_loss,mean_regularizer,mean_lipschitz,val_accuracy\n",
        );
        for e in &report.epochs {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                e.epoch,
                e.lambda,
                e.learning_rate,
                e.theta_lip,
                e.mean_loss,
                e.mean_regularizer,
                e.mean_lipschitz,
                e.val_accuracy
            ));
        }
        std::fs::write(report_path, out)
            .map_err(|e| CliError::io(report_path.display().to_string(), e))?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct PredictArgs {
    pub model: PathBuf,
    pub data: PathBuf,
    pub sigma: f64,
    pub n0: usize,
    pub seed: u64,
}

/// Writes `index,prediction` CSV lines to the given sink (stdout in the
/// binary).
pub fn cmd_predict(args: &PredictArgs, sink: &mut dyn Write) -> Result<(), CliError> {
    if args.sigma < 0.0 {
        return Err(CliError::Flag("sigma must be nonnegative".into()));
    }
    if args.n0 == 0 {
        return Err(CliError::Flag("n0 must be at least 1".into()));
    }
    let net = load_model(&args.model)?;
    let ds = load_dataset(&args.data)?;
    check_dataset_matches(&net, &ds, &args.data)?;
    let mut out = String::from("index,prediction\n");
    for i in 0..ds.len() {
        let (x, _) = ds.example(i);
        let mut rng = RngStream::new(args.seed, i as u64);
        let pred = smooth_predict(&net, x, args.n0, args.sigma, &mut rng)?;
        out.push_str(&format!("{i},{pred}\n"));
    }
    sink.write_all(out.as_bytes())
        .map_err(|e| CliError::io("<stdout>", e))?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct CertifyArgs {
    pub model: PathBuf,
    pub data: PathBuf,
    pub sigma: f64,
    pub n0: usize,
    pub n1: usize,
    pub alpha: f64,
    pub gamma_mode: GammaMode,
    pub gamma_lo: f64,
    pub gamma_hi: f64,
    pub seed: u64,
    pub out: PathBuf,
}

impl CertifyArgs {
    fn validate(&self) -> Result<(), CliError> {
        if self.sigma < 0.0 {
            return Err(CliError::Flag("sigma must be nonnegative".into()));
        }
        if self.n0 == 0 || self.n1 == 0 {
            return Err(CliError::Flag("n0 and n1 must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CliError::Flag("alpha must lie in (0, 1)".into()));
        }
        if !(self.gamma_lo >= 0.0 && self.gamma_lo < self.gamma_hi) {
            return Err(CliError::Flag("gamma bracket must satisfy 0 <= lo < hi".into()));
        }
        Ok(())
    }
}

/// Number of leading inputs averaged into the one-step calibration, and the
/// ball radius they are evaluated at.
pub const CALIBRATION_INPUTS: usize = 100;
pub const CALIBRATION_GAMMA: f64 = 1.0;

pub fn certify_rows(args: &CertifyArgs, net: &Network, ds: &Dataset) -> Result<Vec<ReportRow>, CliError> {
    args.validate()?;
    let mut cfg = GammaSearchConfig {
        mode: args.gamma_mode,
        gamma_lo: args.gamma_lo,
        gamma_hi: args.gamma_hi,
        ..GammaSearchConfig::binary()
    };
    if args.gamma_mode == GammaMode::OneStep {
        let calibration: Vec<Vec<f64>> = (0..ds.len().min(CALIBRATION_INPUTS))
            .map(|i| ds.example(i).0.to_vec())
            .collect();
        cfg.calibration_mean_lipschitz =
            Some(calibration_mean_lipschitz(net, &calibration, CALIBRATION_GAMMA)?);
    }
    let mut rows = Vec::with_capacity(ds.len());
    for i in 0..ds.len() {
        let (x, label) = ds.example(i);
        let mut rng = RngStream::new(args.seed, i as u64);
        let cert = certify_splitz(
            net, x, args.sigma, args.n0, args.n1, args.alpha, &cfg, &mut rng,
        )?;
        rows.push(ReportRow::from_certificate(i, label, &cert));
    }
    Ok(rows)
}

pub fn cmd_certify(args: &CertifyArgs) -> Result<(), CliError> {
    let net = load_model(&args.model)?;
    let ds = load_dataset(&args.data)?;
    check_dataset_matches(&net, &ds, &args.data)?;
    let rows = certify_rows(args, &net, &ds)?;
    write_report(&rows, &args.out)
}

#[derive(Debug, Clone)]
pub struct LipschitzArgs {
    pub model: PathBuf,
    pub data: PathBuf,
    pub gamma: f64,
    pub per_layer: bool,
    pub out: PathBuf,
}

/// Per-input local-bound certificates; with `per_layer` also a
/// `<out>.layers.csv` table of full-network layer norms.
pub fn cmd_lipschitz(args: &LipschitzArgs) -> Result<(), CliError> {
    if args.gamma < 0.0 {
        return Err(CliError::Flag("gamma must be nonnegative".into()));
    }
    let net = load_model(&args.model)?;
    let ds = load_dataset(&args.data)?;
    check_dataset_matches(&net, &ds, &args.data)?;

    let split = net.split_index();
    let mut out = String::from("index,gamma,global_bound,lipschitz_bound");
    for k in 1..=split {
        out.push_str(&format!(",factor_{k}"));
    }
    out.push('\n');
    let global = global_lipschitz_bound(&net);
    for i in 0..ds.len() {
        let (x, _) = ds.example(i);
        let cert = local_lipschitz_bound(&net, x, args.gamma)?;
        out.push_str(&format!("{i},{},{global},{}", args.gamma, cert.bound));
        for norm in &cert.factor_norms {
            out.push_str(&format!(",{norm}"));
        }
        out.push('\n');
    }
    std::fs::write(&args.out, out).map_err(|e| CliError::io(args.out.display().to_string(), e))?;

    if args.per_layer {
        let mut table = String::from("layer,spectral_norm\n");
        for (k, norm) in per_layer_norms(&net).iter().enumerate() {
            table.push_str(&format!("{},{norm}\n", k + 1));
        }
        let path = layers_table_path(&args.out);
        std::fs::write(&path, table).map_err(|e| CliError::io(path.display().to_string(), e))?;
    }
    Ok(())
}

pub fn layers_table_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".layers.csv");
    PathBuf::from(name)
}

#[derive(Debug, Clone)]
pub struct ReportArgs {
    pub input: PathBuf,
    pub epsilons: Option<Vec<f64>>,
    pub out: PathBuf,
}

pub fn cmd_report(args: &ReportArgs) -> Result<(), CliError> {
    let rows = read_report(&args.input)?;
    let epsilons = args.epsilons.clone().unwrap_or_else(default_epsilon_grid);
    if epsilons.is_empty() {
        return Err(CliError::Flag("at least one epsilon required".into()));
    }
    let acr = average_certified_radius(&rows);
    let acr_correct = average_certified_radius_correct_only(&rows);
    let mut out = String::from("epsilon,certified_accuracy,acr,acr_correct_only\n");
    for eps in &epsilons {
        out.push_str(&format!(
            "{eps},{},{acr},{acr_correct}\n",
            certified_accuracy(&rows, *eps)
        ));
    }
    std::fs::write(&args.out, out).map_err(|e| CliError::io(args.out.display().to_string(), e))
}

#[derive(Debug, Clone)]
pub struct SweepSplitArgs {
    pub config: PathBuf,
    pub splits: Vec<usize>,
    pub data: PathBuf,
    pub val: PathBuf,
    pub test: PathBuf,
    pub n0: usize,
    pub n1: usize,
    pub alpha: f64,
    pub gamma_mode: GammaMode,
    pub epsilons: Option<Vec<f64>>,
    pub seed: u64,
    pub out: PathBuf,
}

/// Train and certify one model per split value with identical seeds and
/// budgets, then tabulate certified accuracy per (split, epsilon).
///
/// Split 0 has an identity left half, so its Lipschitz regularizer is
/// vacuous; that run uses lambda = 0, making the column an exact plain
/// randomized-smoothing baseline with Gaussian-augmentation training.
pub fn cmd_sweep_split(args: &SweepSplitArgs, warn: &mut dyn Write) -> Result<(), CliError> {
    let base = load_train_config(&args.config)?;
    let train_data = load_dataset(&args.data)?;
    let val_data = load_dataset(&args.val)?;
    let test_data = load_dataset(&args.test)?;
    let epsilons = args.epsilons.clone().unwrap_or_else(default_epsilon_grid);
    if epsilons.is_empty() {
        return Err(CliError::Flag("at least one epsilon required".into()));
    }

    let mut splits = Vec::new();
    for &s in &args.splits {
        if splits.contains(&s) {
            writeln!(warn, "warning: duplicate split {s} ignored")
                .map_err(|e| CliError::io("<stderr>", e))?;
        } else {
            splits.push(s);
        }
    }
    if splits.is_empty() {
        return Err(CliError::Flag("at least one split required".into()));
    }

    let mut out = String::from("split,epsilon,certified_accuracy,acr,acr_correct_only\n");
    for &split in &splits {
        let mut cfg = base.clone();
        cfg.split_index = split;
        if split == 0 {
            cfg.lambda_start = 0.0;
            cfg.lambda_end = 0.0;
        }
        let (net, _) = train(&cfg, &train_data, &val_data)?;
        let certify_args = CertifyArgs {
            model: PathBuf::new(),
            data: PathBuf::new(),
            sigma: cfg.sigma,
            n0: args.n0,
            n1: args.n1,
            alpha: args.alpha,
            gamma_mode: args.gamma_mode,
            gamma_lo: 1e-3,
            gamma_hi: 10.0,
            seed: args.seed,
            out: PathBuf::new(),
        };
        check_dataset_matches(&net, &test_data, &args.test)?;
        let rows = certify_rows(&certify_args, &net, &test_data)?;
        let acr = average_certified_radius(&rows);
        let acr_correct = average_certified_radius_correct_only(&rows);
        for eps in &epsilons {
            out.push_str(&format!(
                "{split},{eps},{},{acr},{acr_correct}\n",
                certified_accuracy(&rows, *eps)
            ));
        }
    }
    std::fs::write(&args.out, out).map_err(|e| CliError::io(args.out.display().to_string(), e))
}

/// Parse a comma-separated list of floats (for epsilon grids).
pub fn parse_float_list(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Flag(format!("'{s}' is not a number")))
        })
        .collect()
}

/// Parse a comma-separated list of nonnegative integers (for split lists).
pub fn parse_usize_list(text: &str) -> Result<Vec<usize>, CliError> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Flag(format!("'{s}' is not a nonnegative integer")))
        })
        .collect()
}
