use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use splitz_core::certify::GammaMode;

use splitz_cli::commands::{
    cmd_certify, cmd_gen_data, cmd_lipschitz, cmd_predict, cmd_report, cmd_sweep_split, cmd_train,
    parse_float_list, parse_usize_list, CertifyArgs, GenDataArgs, LipschitzArgs, PredictArgs,
    ReportArgs, SweepSplitArgs, TrainArgs, TrainOverrides,
};

/// Train and certify split classifiers: a Lipschitz-constrained left half
/// composed with a noise-smoothed right half.
#[derive(Parser)]
#[command(name = "splitz", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GammaModeArg {
    /// Bisection on the fixed point of gamma = radius / L(gamma).
    Binary,
    /// Calibrated two-evaluation search.
    #[value(name = "one_step")]
    OneStep,
}

impl From<GammaModeArg> for GammaMode {
    fn from(v: GammaModeArg) -> Self {
        match v {
            GammaModeArg::Binary => GammaMode::Binary,
            GammaModeArg::OneStep => GammaMode::OneStep,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate or import a dataset as CSV.
    GenData {
        /// Data source: synthetic Gaussian blobs or an IDX image/label pair.
        #[arg(long, default_value = "blobs")]
        kind: String,
        /// Number of examples (blobs).
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        classes: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Minimum pairwise distance between cluster centers.
        #[arg(long, default_value_t = 6.0)]
        separation: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// IDX image file (kind = idx).
        #[arg(long)]
        images: Option<PathBuf>,
        /// IDX label file (kind = idx).
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Also carve a stratified validation split into this file.
        #[arg(long)]
        out_val: Option<PathBuf>,
        /// Also carve a stratified test split into this file.
        #[arg(long)]
        out_test: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        val_fraction: f64,
        #[arg(long, default_value_t = 0.0)]
        test_fraction: f64,
    },
    /// Train a model from a config file.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        val: PathBuf,
        #[arg(long)]
        out_model: PathBuf,
        /// Optional per-epoch training report CSV.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Overrides of the corresponding config keys.
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        split_index: Option<usize>,
        #[arg(long)]
        lambda_start: Option<f64>,
        #[arg(long)]
        lambda_end: Option<f64>,
    },
    /// Smoothed predictions to stdout.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 100)]
        n0: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Certify every input and write a report CSV.
    Certify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 100)]
        n0: usize,
        #[arg(long, default_value_t = 10000)]
        n1: usize,
        #[arg(long, default_value_t = 0.001)]
        alpha: f64,
        #[arg(long, value_enum, default_value = "one_step")]
        gamma_mode: GammaModeArg,
        #[arg(long, default_value_t = 1e-3)]
        gamma_lo: f64,
        #[arg(long, default_value_t = 10.0)]
        gamma_hi: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-input local Lipschitz certificates (and per-layer norms).
    Lipschitz {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Also write a `<out>.layers.csv` table of full-network norms.
        #[arg(long, default_value_t = false)]
        per_layer: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate a certification report into a certified-accuracy table.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        /// Comma-separated epsilon grid; defaults to 0.25..2.5.
        #[arg(long)]
        epsilons: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train and certify one model per split value.
    SweepSplit {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated split indices, e.g. 0,1,2.
        #[arg(long)]
        splits: String,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        val: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, default_value_t = 100)]
        n0: usize,
        #[arg(long, default_value_t = 10000)]
        n1: usize,
        #[arg(long, default_value_t = 0.001)]
        alpha: f64,
        #[arg(long, value_enum, default_value = "one_step")]
        gamma_mode: GammaModeArg,
        #[arg(long)]
        epsilons: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), splitz_cli::CliError> {
    match cli.command {
        Command::GenData {
            kind,
            n,
            classes,
            dim,
            separation,
            seed,
            out,
            images,
            labels,
            out_val,
            out_test,
            val_fraction,
            test_fraction,
        } => cmd_gen_data(&GenDataArgs {
            kind,
            n,
            classes,
            dim,
            separation,
            seed,
            out,
            images,
            labels,
            out_val,
            out_test,
            val_fraction,
            test_fraction,
        }),
        Command::Train {
            config,
            data,
            val,
            out_model,
            report,
            sigma,
            epochs,
            seed,
            split_index,
            lambda_start,
            lambda_end,
        } => cmd_train(&TrainArgs {
            config,
            data,
            val,
            out_model,
            report,
            overrides: TrainOverrides {
                sigma,
                epochs,
                seed,
                split_index,
                lambda_start,
                lambda_end,
            },
        }),
        Command::Predict {
            model,
            data,
            sigma,
            n0,
            seed,
        } => cmd_predict(
            &PredictArgs {
                model,
                data,
                sigma,
                n0,
                seed,
            },
            &mut std::io::stdout(),
        ),
        Command::Certify {
            model,
            data,
            sigma,
            n0,
            n1,
            alpha,
            gamma_mode,
            gamma_lo,
            gamma_hi,
            seed,
            out,
        } => cmd_certify(&CertifyArgs {
            model,
            data,
            sigma,
            n0,
            n1,
            alpha,
            gamma_mode: gamma_mode.into(),
            gamma_lo,
            gamma_hi,
            seed,
            out,
        }),
        Command::Lipschitz {
            model,
            data,
            gamma,
            per_layer,
            out,
        } => cmd_lipschitz(&LipschitzArgs {
            model,
            data,
            gamma,
            per_layer,
            out,
        }),
        Command::Report { input, epsilons, out } => {
            let epsilons = epsilons.as_deref().map(parse_float_list).transpose()?;
            cmd_report(&ReportArgs { input, epsilons, out })
        }
        Command::SweepSplit {
            config,
            splits,
            data,
            val,
            test,
            n0,
            n1,
            alpha,
            gamma_mode,
            epsilons,
            seed,
            out,
        } => {
            let splits = parse_usize_list(&splits)?;
            let epsilons = epsilons.as_deref().map(parse_float_list).transpose()?;
            cmd_sweep_split(
                &SweepSplitArgs {
                    config,
                    splits,
                    data,
                    val,
                    test,
                    n0,
                    n1,
                    alpha,
                    gamma_mode: gamma_mode.into(),
                    epsilons,
                    seed,
                    out,
                },
                &mut std::io::stderr(),
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
