use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

#[derive(Debug, Parser)]
#[command(name = "slda", version, about = "Sparse linear discriminant analysis by thresholding")]
struct Cli {
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "SLDA_THREADS")]
    threads: Option<usize>,

    /// TOML file with default parameter values; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct Thresholds {
    #[arg(long)]
    m1: Option<f64>,
    #[arg(long)]
    m2: Option<f64>,
    /// Exponent of the mean-difference threshold, in (0, 1/2).
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a two-class SLDA rule and write a model file.
    Fit {
        #[arg(long)]
        train: PathBuf,
        #[command(flatten)]
        thresholds: Thresholds,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict labels for the rows of a CSV file.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Also write the score wᵀx − c.
        #[arg(long)]
        score: bool,
        /// Output CSV (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Leave-one-out grid search over (M1, M2).
    Cv {
        #[arg(long)]
        train: PathBuf,
        #[arg(long, value_delimiter = ',')]
        grid_m1: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        grid_m2: Option<Vec<f64>>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Surface CSV with columns M1, M2, loocv_rate.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a preset or file-defined simulation scenario.
    Simulate {
        /// Preset name.
        #[arg(long, conflicts_with = "scenario_file")]
        scenario: Option<String>,
        #[arg(long)]
        scenario_file: Option<PathBuf>,
        /// List the preset catalog and exit.
        #[arg(long)]
        list: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        n_mc: Option<usize>,
        /// Output prefix; writes PREFIX_replicates.csv and PREFIX_summary.toml.
        #[arg(long, required_unless_present = "list")]
        out: Option<PathBuf>,
    },
    /// Sparsity and rate diagnostics for data or a known population.
    Diagnose {
        #[arg(long, conflicts_with = "population", required_unless_present = "population")]
        train: Option<PathBuf>,
        #[arg(long)]
        population: Option<PathBuf>,
        /// Sample size for a population file.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        g: Option<f64>,
        #[arg(long)]
        r: Option<f64>,
        /// Bound for the eigenvalue / signal condition check (population only).
        #[arg(long)]
        c0: Option<f64>,
        #[command(flatten)]
        thresholds: Thresholds,
        /// Cumulative-proportion CSV with columns l, cumulative_proportion.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure with the stage it happened in and the process exit code.
#[derive(Debug)]
pub struct CliError {
    pub stage: String,
    pub message: String,
    pub code: u8,
}

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

impl CliError {
    pub fn input(stage: &str, message: impl Into<String>) -> Self {
        CliError {
            stage: stage.into(),
            message: message.into(),
            code: EXIT_INPUT,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.stage, self.message)
    }
}

/// Attaches a stage name to core errors.
pub trait AtStage<T> {
    fn at(self, stage: &str) -> Result<T, CliError>;
}

impl<T> AtStage<T> for slda_core::Result<T> {
    fn at(self, stage: &str) -> Result<T, CliError> {
        self.map_err(|e| CliError {
            stage: stage.into(),
            code: if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_INPUT },
            message: e.to_string(),
        })
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = config::RunConfig::load(cli.config.as_deref())?;
    let threads = config::pick(cli.threads, &cfg.threads).unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::input("thread pool", e.to_string()))?;
    match cli.command {
        Command::Fit { train, thresholds, out } => commands::fit(&cfg, &train, &thresholds, &out),
        Command::Predict { model, test, score, out } => commands::predict(&model, &test, score, out.as_deref()),
        Command::Cv {
            train,
            grid_m1,
            grid_m2,
            alpha,
            out,
        } => commands::cv(&cfg, &train, grid_m1, grid_m2, alpha, &out),
        Command::Simulate {
            scenario,
            scenario_file,
            list,
            seed,
            reps,
            n_mc,
            out,
        } => {
            if list {
                commands::list_presets();
                return Ok(());
            }
            let overrides = commands::SimOverrides {
                seed: config::pick(seed, &cfg.seed),
                reps: config::pick(reps, &cfg.reps),
                n_mc: config::pick(n_mc, &cfg.n_mc),
            };
            commands::simulate(
                scenario.as_deref(),
                scenario_file.as_deref(),
                &overrides,
                out.as_deref().expect("clap enforces --out"),
            )
        }
        Command::Diagnose {
            train,
            population,
            n,
            h,
            g,
            r,
            c0,
            thresholds,
            out,
        } => {
            let opts = commands::DiagnoseOptions {
                n: config::pick(n, &cfg.n),
                h: config::pick(h, &cfg.h),
                g: config::pick(g, &cfg.g),
                r: config::pick(r, &cfg.r),
                c0: config::pick(c0, &cfg.c0),
            };
            commands::diagnose(&cfg, train.as_deref(), population.as_deref(), &opts, &thresholds, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("slda: {e}");
            ExitCode::from(e.code)
        }
    }
}
