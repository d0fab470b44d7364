//! Command-line front end. Flags override config-file values, which
//! override built-in defaults. Progress goes to stderr; results go to files.

mod commands;
pub mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::RunConfig;

use crate::optimizers::Method;

#[derive(Debug, Parser)]
#[command(
    name = "coverart",
    version,
    about = "Audio-feature-conditioned cover art by latent search"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Run directory (default: runs/<unix-time>-seed<seed>).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub latent_dim: Option<usize>,
    #[arg(long, global = true)]
    pub image_size: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Ga,
    Adam,
    Rmsprop,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Ga => Method::Ga,
            MethodArg::Adam => Method::Adam,
            MethodArg::Rmsprop => Method::RmsProp,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a balanced synthetic dataset and write it as a manifest.
    SynthData {
        #[arg(long)]
        n_per_genre: Option<usize>,
    },
    /// Train the feature predictor with adversarial regularization.
    TrainFitness {
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Weight of the adversarial term.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        batch_size: Option<usize>,
    },
    /// Search the latent space for a cover matching target features.
    Optimize {
        #[arg(long)]
        predictor: Option<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Nine comma-separated values in [0, 1].
        #[arg(long, conflicts_with = "row")]
        features: Option<String>,
        /// Take the target from this 1-based manifest row.
        #[arg(long)]
        row: Option<usize>,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        /// Learning rate for gradient methods.
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        genre: Option<String>,
        /// Also write the cover as PNG.
        #[arg(long)]
        png: bool,
    },
    /// Run the optimizer roster on test-split targets and write the tables.
    Benchmark {
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        predictor: Option<PathBuf>,
        /// Existing classifier weights; trained and saved when absent.
        #[arg(long)]
        classifier: Option<PathBuf>,
        #[arg(long)]
        targets_per_genre: Option<usize>,
    },
    /// Sweep one feature over [0, 1] and optimize a cover per step.
    Sweep {
        #[arg(long)]
        predictor: Option<PathBuf>,
        #[arg(long)]
        feature: Option<String>,
        #[arg(long)]
        steps: Option<usize>,
        /// Base feature vector (nine values); defaults to 0.5 everywhere.
        #[arg(long)]
        base: Option<String>,
        #[arg(long)]
        genre: Option<String>,
    },
    /// Optimize one cover per track of an album.
    Album {
        #[arg(long)]
        predictor: Option<PathBuf>,
        /// CSV of tracks with the nine feature columns.
        #[arg(long)]
        tracks: Option<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        genre: Option<String>,
        #[arg(long)]
        count: Option<usize>,
    },
}

/// A mistake in how the tool was invoked (exit code 2).
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Applies config file and flags on top of the defaults.
pub fn resolve(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    let c = &cli.common;
    set(&mut cfg.seed, c.seed);
    set(&mut cfg.latent_dim, c.latent_dim);
    set(&mut cfg.image_size, c.image_size);
    if c.out.is_some() {
        cfg.out = c.out.clone();
    }
    if c.threads.is_some() {
        cfg.threads = c.threads;
    }
    match &cli.command {
        Command::SynthData { n_per_genre } => set(&mut cfg.world.n_per_genre, *n_per_genre),
        Command::TrainFitness {
            manifest,
            lambda,
            epochs,
            learning_rate,
            batch_size,
        } => {
            if manifest.is_some() {
                cfg.paths.manifest = manifest.clone();
            }
            set(&mut cfg.fitness.lambda, *lambda);
            set(&mut cfg.fitness.epochs, *epochs);
            set(&mut cfg.fitness.learning_rate, *learning_rate);
            set(&mut cfg.fitness.batch_size, *batch_size);
        }
        Command::Optimize {
            predictor,
            manifest,
            features,
            row,
            method,
            lr,
            iterations,
            genre,
            png,
        } => {
            set(&mut cfg.paths.predictor, predictor.clone());
            if manifest.is_some() {
                cfg.paths.manifest = manifest.clone();
            }
            if features.is_some() {
                cfg.optimize.features = features.clone();
                cfg.optimize.row = None;
            }
            if row.is_some() {
                cfg.optimize.row = *row;
                cfg.optimize.features = None;
            }
            set(&mut cfg.optimize.method, method.map(Method::from));
            set(&mut cfg.optimize.learning_rate, *lr);
            if let Some(n) = iterations {
                match cfg.optimize.method {
                    Method::Ga => cfg.ga.iterations = *n,
                    _ => cfg.gd.iterations = *n,
                }
            }
            if genre.is_some() {
                cfg.optimize.genre = genre.clone();
            }
            cfg.optimize.png |= *png;
        }
        Command::Benchmark {
            manifest,
            predictor,
            classifier,
            targets_per_genre,
        } => {
            if manifest.is_some() {
                cfg.paths.manifest = manifest.clone();
            }
            set(&mut cfg.paths.predictor, predictor.clone());
            if classifier.is_some() {
                cfg.paths.classifier = classifier.clone();
            }
            set(&mut cfg.benchmark.targets_per_genre, *targets_per_genre);
        }
        Command::Sweep {
            predictor,
            feature,
            steps,
            base,
            genre,
        } => {
            set(&mut cfg.paths.predictor, predictor.clone());
            set(&mut cfg.sweep.feature, feature.clone());
            set(&mut cfg.sweep.steps, *steps);
            if base.is_some() {
                cfg.sweep.base = base.clone();
            }
            if genre.is_some() {
                cfg.sweep.genre = genre.clone();
            }
        }
        Command::Album {
            predictor,
            tracks,
            manifest,
            genre,
            count,
        } => {
            set(&mut cfg.paths.predictor, predictor.clone());
            if tracks.is_some() {
                cfg.album.tracks = tracks.clone();
            }
            if manifest.is_some() {
                cfg.paths.manifest = manifest.clone();
            }
            if genre.is_some() {
                cfg.album.genre = genre.clone();
            }
            set(&mut cfg.album.count, *count);
        }
    }
    cfg.propagate();
    cfg.out = Some(cfg.out_dir());
    Ok(cfg)
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = resolve(&cli)?;
    let threads = cfg.threads.unwrap_or(0);
    // a second initialization (e.g. in tests) keeps the existing pool
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    match cli.command {
        Command::SynthData { .. } => commands::synth_data(&cfg),
        Command::TrainFitness { .. } => commands::train_fitness(&cfg),
        Command::Optimize { .. } => commands::optimize(&cfg),
        Command::Benchmark { .. } => commands::benchmark(&cfg),
        Command::Sweep { .. } => commands::sweep(&cfg),
        Command::Album { .. } => commands::album(&cfg),
    }
}

/// Entry point for the binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
