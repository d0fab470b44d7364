//! Evaluations: feature MSE, the Fréchet distance between Gaussian
//! summaries, a genre classifier, the optimizer benchmark, feature sweeps
//! and album batches.

mod benchmark;
mod classifier;
mod frechet;
mod sweep;

use crate::fitness::{AudioFeatures, FeatureError, FitnessError, FEATURE_COUNT};
use crate::generator::GeneratorError;
use crate::numerics::NumericsError;
use crate::optimizers::OptimizeError;

pub use benchmark::{
    benchmark_optimizers, default_roster, pick_targets, roster, BenchmarkCell, BenchmarkResult,
    BenchmarkTarget, CellOutcome, Procedure,
};
pub use classifier::{
    genre_accuracy, softmax, train_genre_classifier, ClassifierConfig, GenreClassifier,
};
pub use frechet::{frechet_distance, GaussianSummary, PSD_TOLERANCE};
pub use sweep::{album_batch, feature_sweep, grid, spearman, SweepStep};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{0} is empty")]
    Empty(&'static str),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("covariance is not positive semidefinite (eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("covariance is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("{0}")]
    Config(String),
    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Fitness(#[from] FitnessError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
}

/// Mean squared residual over the nine features. Equals `−fitness / 9`.
pub fn mse(predicted: &AudioFeatures, target: &AudioFeatures) -> f64 {
    crate::fitness::squared_distance(predicted.values(), target) / FEATURE_COUNT as f64
}
