//! Audio-feature fitness: the image → features predictor, its adversarial
//! training, and the negative squared L2 fitness of a latent code together
//! with its gradient.

mod features;
mod train;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::generator::{Generator, GeneratorError, Genre, LatentCode};
use crate::image::CoverImage;
use crate::numerics::weights::{load_weights, save_weights};
use crate::numerics::{Activation, DenseLayer, DenseNet, NumericsError};
use crate::rng;

pub use features::{
    feature_index, squared_distance, AudioFeatures, FeatureError, FEATURE_COUNT, FEATURE_NAMES,
};
pub use train::{
    train_fitness, train_fitness_with_validation, EpochLog, FitnessTrainConfig, TrainedFitness,
    TrainingLog,
};

/// Rows per forward pass when scoring a population. Fixed so results do not
/// depend on the number of worker threads.
pub const EVAL_CHUNK: usize = 64;

/// A randomly initialized logistic discriminator separates the predictor's
/// initial near-constant outputs at once, and the λ-weighted push that
/// follows drives the sigmoid head into saturation it cannot leave.
pub const DISCRIMINATOR_INIT_SCALE: f64 = 0.01;

#[derive(Debug, thiserror::Error)]
pub enum FitnessError {
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("image has {found} pixels but the predictor expects {expected}")]
    ImageSize { expected: usize, found: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("{0}")]
    Dataset(String),
    #[error("{0}")]
    Config(String),
    #[error("training diverged at epoch {epoch}, batch {batch}: {reason}")]
    Diverged {
        epoch: usize,
        batch: usize,
        reason: String,
    },
    #[error("weights file: {0}")]
    Weights(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictorConfig {
    pub image_size: usize,
    pub hidden: Vec<usize>,
    pub seed: u64,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            image_size: 32,
            hidden: vec![256, 64],
            seed: 0,
        }
    }
}

/// `f_θ`: flattened RGB pixels → nine sigmoid outputs.
#[derive(Debug, Clone)]
pub struct FeaturePredictor {
    net: DenseNet,
    config: PredictorConfig,
    epochs_seen: usize,
    lambda: f64,
}

impl FeaturePredictor {
    pub fn new(config: PredictorConfig) -> Result<Self, FitnessError> {
        if config.image_size == 0 || config.hidden.contains(&0) {
            return Err(FitnessError::Config(format!(
                "invalid predictor shape: image_size {}, hidden {:?}",
                config.image_size, config.hidden
            )));
        }
        let mut dims = vec![config.image_size * config.image_size * 3];
        dims.extend(&config.hidden);
        dims.push(FEATURE_COUNT);
        let mut acts = vec![Activation::Relu; config.hidden.len()];
        acts.push(Activation::Sigmoid);
        let mut r = rng::derived(config.seed, &[rng::stream::PREDICTOR]);
        let net = DenseNet::init(&dims, &acts, &mut r)?;
        Ok(Self {
            net,
            config,
            epochs_seen: 0,
            lambda: 0.0,
        })
    }

    /// Wraps an existing net; it must map `3·size²` inputs to nine sigmoid
    /// outputs.
    pub fn from_net(net: DenseNet, image_size: usize) -> Result<Self, FitnessError> {
        let last = net.layers().last().expect("nonempty");
        if net.input_dim() != image_size * image_size * 3
            || net.output_dim() != FEATURE_COUNT
            || last.activation() != Activation::Sigmoid
        {
            return Err(FitnessError::Config(
                "predictor net must map 3·size² pixels to 9 sigmoid outputs".into(),
            ));
        }
        let hidden = net.layers()[1..].iter().map(|l| l.input_dim()).collect();
        Ok(Self {
            net,
            config: PredictorConfig {
                image_size,
                hidden,
                seed: 0,
            },
            epochs_seen: 0,
            lambda: 0.0,
        })
    }

    pub fn net(&self) -> &DenseNet {
        &self.net
    }

    pub fn config(&self) -> &PredictorConfig {
        &self.config
    }

    pub fn image_size(&self) -> usize {
        self.config.image_size
    }

    pub fn epochs_seen(&self) -> usize {
        self.epochs_seen
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub(crate) fn record_training(&mut self, epochs: usize, lambda: f64) {
        self.epochs_seen += epochs;
        self.lambda = lambda;
    }

    fn check_pixels(&self, len: usize) -> Result<(), FitnessError> {
        let expected = self.net.input_dim();
        if len != expected {
            return Err(FitnessError::ImageSize {
                expected,
                found: len,
            });
        }
        Ok(())
    }

    pub fn predict_features(&self, image: &CoverImage) -> Result<AudioFeatures, FitnessError> {
        self.check_pixels(image.pixels().len())?;
        let out = self.net.forward_rows(image.pixels(), 1)?;
        Ok(AudioFeatures::from_slice(&out)?)
    }

    /// Predictions for `rows` flattened images, `rows × 9` row-major.
    pub fn predict_rows(&self, pixels: &[f64], rows: usize) -> Result<Vec<f64>, FitnessError> {
        Ok(self.net.forward_rows(pixels, rows)?)
    }

    pub fn predict_batch(&self, images: &[CoverImage]) -> Result<Vec<AudioFeatures>, FitnessError> {
        images
            .par_chunks(EVAL_CHUNK)
            .map(|chunk| {
                let mut pixels = Vec::with_capacity(chunk.len() * self.net.input_dim());
                for img in chunk {
                    self.check_pixels(img.pixels().len())?;
                    pixels.extend_from_slice(img.pixels());
                }
                let out = self.net.forward_rows(&pixels, chunk.len())?;
                out.chunks_exact(FEATURE_COUNT)
                    .map(|r| AudioFeatures::from_slice(r).map_err(FitnessError::from))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()
            .map(|v| v.into_iter().flatten().collect())
    }

    /// Penultimate-layer activations, the embedding used for Fréchet
    /// distances between image sets.
    pub fn embed(&self, images: &[CoverImage]) -> Result<Vec<Vec<f64>>, FitnessError> {
        let layers = self.net.layers().len();
        let width = self.net.layers()[layers - 1].input_dim();
        let mut out = Vec::with_capacity(images.len());
        for chunk in images.chunks(EVAL_CHUNK) {
            let mut pixels = Vec::with_capacity(chunk.len() * self.net.input_dim());
            for img in chunk {
                self.check_pixels(img.pixels().len())?;
                pixels.extend_from_slice(img.pixels());
            }
            let cache = self.net.forward_cached(&pixels, chunk.len())?;
            let penultimate = if layers >= 2 {
                cache.layer_output(layers - 2)
            } else {
                &pixels
            };
            out.extend(penultimate.chunks_exact(width).map(<[f64]>::to_vec));
        }
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<(), FitnessError> {
        let meta = serde_json::json!({
            "role": "feature_predictor",
            "config": self.config,
            "epochs_seen": self.epochs_seen,
            "lambda": self.lambda,
        });
        Ok(save_weights(&self.net, meta, path)?)
    }

    pub fn load(path: &Path) -> Result<Self, FitnessError> {
        let (net, header) = load_weights(path)?;
        let config: PredictorConfig = serde_json::from_value(header.metadata["config"].clone())
            .map_err(|e| FitnessError::Weights(format!("{}: {e}", path.display())))?;
        let mut pred = Self::from_net(net, config.image_size)?;
        pred.config = config;
        pred.epochs_seen = header.metadata["epochs_seen"].as_u64().unwrap_or(0) as usize;
        pred.lambda = header.metadata["lambda"].as_f64().unwrap_or(0.0);
        Ok(pred)
    }
}

/// `D_φ`: logistic regression over the nine feature values.
#[derive(Debug, Clone)]
pub struct FeatureDiscriminator {
    net: DenseNet,
}

impl FeatureDiscriminator {
    /// Near-zero seeded weights (Xavier scaled by [`DISCRIMINATOR_INIT_SCALE`])
    /// and zero bias, so training starts from an undecided `D ≈ 0.5`.
    pub fn new(seed: u64) -> Self {
        let mut r = rng::derived(seed, &[rng::stream::DISCRIMINATOR]);
        let layer = DenseLayer::init(FEATURE_COUNT, 1, Activation::Sigmoid, &mut r)
            .expect("fixed valid shape");
        let weights = layer
            .weights()
            .iter()
            .map(|w| w * DISCRIMINATOR_INIT_SCALE)
            .collect();
        let layer = DenseLayer::new(FEATURE_COUNT, 1, weights, vec![0.0], Activation::Sigmoid)
            .expect("fixed valid shape");
        let net = DenseNet::new(vec![layer]).expect("one layer");
        Self { net }
    }

    pub fn net(&self) -> &DenseNet {
        &self.net
    }

    /// Probability that `features` comes from the data.
    pub fn score(&self, features: &AudioFeatures) -> Result<f64, FitnessError> {
        Ok(self.net.forward_rows(features.values(), 1)?[0])
    }

    pub fn save(&self, path: &Path) -> Result<(), FitnessError> {
        Ok(save_weights(
            &self.net,
            serde_json::json!({ "role": "feature_discriminator" }),
            path,
        )?)
    }

    pub fn load(path: &Path) -> Result<Self, FitnessError> {
        let (net, _) = load_weights(path)?;
        if net.input_dim() != FEATURE_COUNT || net.output_dim() != 1 || net.layers().len() != 1 {
            return Err(FitnessError::Weights(format!(
                "{}: not a 9 → 1 discriminator",
                path.display()
            )));
        }
        Ok(Self { net })
    }
}

/// `fitness_a(z) = −‖f_θ(G(z)) − a‖²` for a fixed generator, predictor,
/// genre and target.
#[derive(Debug, Clone, Copy)]
pub struct FitnessFunction<'a> {
    generator: &'a Generator,
    predictor: &'a FeaturePredictor,
    genre: Option<Genre>,
    target: AudioFeatures,
}

impl<'a> FitnessFunction<'a> {
    pub fn new(
        generator: &'a Generator,
        predictor: &'a FeaturePredictor,
        genre: Option<Genre>,
        target: AudioFeatures,
    ) -> Result<Self, FitnessError> {
        if generator.pixel_count() != predictor.net.input_dim() {
            return Err(FitnessError::ImageSize {
                expected: predictor.net.input_dim(),
                found: generator.pixel_count(),
            });
        }
        if genre.is_some() != generator.is_conditional() {
            return Err(GeneratorError::GenreMismatch {
                conditional: generator.is_conditional(),
            }
            .into());
        }
        Ok(Self {
            generator,
            predictor,
            genre,
            target,
        })
    }

    pub fn generator(&self) -> &'a Generator {
        self.generator
    }

    pub fn predictor(&self) -> &'a FeaturePredictor {
        self.predictor
    }

    pub fn genre(&self) -> Option<Genre> {
        self.genre
    }

    pub fn target(&self) -> &AudioFeatures {
        &self.target
    }

    pub fn latent_dim(&self) -> usize {
        self.generator.latent_dim()
    }

    pub fn value(&self, z: &LatentCode) -> Result<f64, FitnessError> {
        Ok(self.values(std::slice::from_ref(z))?[0])
    }

    fn values_serial(&self, zs: &[LatentCode]) -> Result<Vec<f64>, FitnessError> {
        let images = self.generator.generate_rows(zs, self.genre)?;
        let predicted = self.predictor.net.forward_rows(&images, zs.len())?;
        Ok(predicted
            .chunks_exact(FEATURE_COUNT)
            .map(|p| -squared_distance(p, &self.target))
            .collect())
    }

    /// Scores a batch in fixed-size chunks evaluated in parallel.
    pub fn values(&self, zs: &[LatentCode]) -> Result<Vec<f64>, FitnessError> {
        if zs.len() <= EVAL_CHUNK {
            return self.values_serial(zs);
        }
        let parts = zs
            .par_chunks(EVAL_CHUNK)
            .map(|chunk| self.values_serial(chunk))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(parts.into_iter().flatten().collect())
    }

    /// Fitness and its analytic gradient with respect to `z`, chained
    /// through the frozen predictor and generator.
    pub fn value_and_gradient(&self, z: &LatentCode) -> Result<(f64, Vec<f64>), FitnessError> {
        let gen_cache = self.generator.forward_cached(z, self.genre)?;
        let pred_cache = self.predictor.net.forward_cached(gen_cache.output(), 1)?;
        let predicted = pred_cache.output();
        let value = -squared_distance(predicted, &self.target);
        let feature_grad: Vec<f64> = predicted
            .iter()
            .zip(self.target.values())
            .map(|(p, t)| -2.0 * (p - t))
            .collect();
        let image_grad = self
            .predictor
            .net
            .input_gradient(&pred_cache, &feature_grad)?;
        let grad = self.generator.latent_gradient(&gen_cache, &image_grad)?;
        Ok((value, grad))
    }

    pub fn gradient(&self, z: &LatentCode) -> Result<Vec<f64>, FitnessError> {
        Ok(self.value_and_gradient(z)?.1)
    }
}

pub fn fitness(
    predictor: &FeaturePredictor,
    generator: &Generator,
    z: &LatentCode,
    genre: Option<Genre>,
    target: &AudioFeatures,
) -> Result<f64, FitnessError> {
    FitnessFunction::new(generator, predictor, genre, *target)?.value(z)
}

pub fn fitness_grad(
    predictor: &FeaturePredictor,
    generator: &Generator,
    z: &LatentCode,
    genre: Option<Genre>,
    target: &AudioFeatures,
) -> Result<Vec<f64>, FitnessError> {
    FitnessFunction::new(generator, predictor, genre, *target)?.gradient(z)
}
