use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{FeatureDiscriminator, FeaturePredictor, FitnessError, PredictorConfig, FEATURE_COUNT};
use crate::dataset::{split, PairedExample};
use crate::numerics::OptimizerState;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitnessTrainConfig {
    /// Weight of the adversarial term.
    pub lambda: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub validation_fraction: f64,
    pub hidden: Vec<usize>,
    /// Overrides the discriminator's initialization seed (defaults to `seed`).
    pub discriminator_seed: Option<u64>,
}

impl Default for FitnessTrainConfig {
    fn default() -> Self {
        Self {
            lambda: 9.0,
            epochs: 100,
            learning_rate: 0.001,
            batch_size: 64,
            seed: 0,
            validation_fraction: 0.15,
            hidden: vec![256, 64],
            discriminator_seed: None,
        }
    }
}

impl FitnessTrainConfig {
    fn validate(&self) -> Result<(), FitnessError> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(FitnessError::Config(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if !(self.learning_rate > 0.0) || self.batch_size == 0 {
            return Err(FitnessError::Config(
                "learning rate and batch size must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean over batches of the per-example squared L2 error.
    pub regression_loss: f64,
    /// Mean over batches of `−log D(t) − log(1 − D(f(c)))`.
    pub disc_loss: f64,
    /// Per-dimension MSE on the validation split after the epoch.
    pub val_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingLog {
    /// Validation MSE of the freshly initialized predictor.
    pub initial_val_mse: f64,
    pub epochs: Vec<EpochLog>,
}

impl TrainingLog {
    pub fn final_val_mse(&self) -> f64 {
        self.epochs
            .last()
            .map_or(self.initial_val_mse, |e| e.val_mse)
    }

    /// CSV with header `epoch,regression_loss,disc_loss,val_mse`, one row
    /// per epoch.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["epoch", "regression_loss", "disc_loss", "val_mse"])?;
        for e in &self.epochs {
            w.write_record([
                e.epoch.to_string(),
                e.regression_loss.to_string(),
                e.disc_loss.to_string(),
                e.val_mse.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), csv::Error> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

#[derive(Debug, Clone)]
pub struct TrainedFitness {
    pub predictor: FeaturePredictor,
    pub discriminator: FeatureDiscriminator,
    pub log: TrainingLog,
}

/// Splits off `validation_fraction` of the covers and trains on the rest.
pub fn train_fitness(
    dataset: Vec<PairedExample>,
    config: &FitnessTrainConfig,
) -> Result<TrainedFitness, FitnessError> {
    if dataset.is_empty() {
        return Err(FitnessError::EmptyDataset);
    }
    let (train, val) = split(dataset, config.validation_fraction, config.seed)
        .map_err(|e| FitnessError::Dataset(e.to_string()))?;
    train_fitness_with_validation(&train, &val, config)
}

struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    fn gather(&self, indices: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            out.extend_from_slice(&self.data[i * self.cols..(i + 1) * self.cols]);
        }
        out
    }
}

fn stack(examples: &[PairedExample]) -> (Matrix, Matrix) {
    let cols = examples.first().map_or(0, |e| e.cover.pixels().len());
    let mut pixels = Vec::with_capacity(examples.len() * cols);
    let mut targets = Vec::with_capacity(examples.len() * FEATURE_COUNT);
    for e in examples {
        pixels.extend_from_slice(e.cover.pixels());
        targets.extend_from_slice(e.features.values());
    }
    (
        Matrix {
            rows: examples.len(),
            cols,
            data: pixels,
        },
        Matrix {
            rows: examples.len(),
            cols: FEATURE_COUNT,
            data: targets,
        },
    )
}

fn validation_mse(
    predictor: &FeaturePredictor,
    pixels: &Matrix,
    targets: &Matrix,
) -> Result<f64, FitnessError> {
    if pixels.rows == 0 {
        return Ok(f64::NAN);
    }
    let mut total = 0.0;
    for start in (0..pixels.rows).step_by(super::EVAL_CHUNK) {
        let end = (start + super::EVAL_CHUNK).min(pixels.rows);
        let idx: Vec<usize> = (start..end).collect();
        let pred = predictor.predict_rows(&pixels.gather(&idx), idx.len())?;
        let tgt = targets.gather(&idx);
        total += pred
            .iter()
            .zip(&tgt)
            .map(|(p, t)| (p - t) * (p - t))
            .sum::<f64>();
    }
    Ok(total / (pixels.rows * FEATURE_COUNT) as f64)
}

/// Alternating adversarial training. Per batch: one Adam ascent step for the
/// discriminator on `log D(t) + log(1 − D(f(c)))`, then one Adam descent step
/// for the predictor on `‖f(c) − t‖² + λ·log(1 − D(f(c)))`, both averaged
/// over the batch.
pub fn train_fitness_with_validation(
    train: &[PairedExample],
    val: &[PairedExample],
    config: &FitnessTrainConfig,
) -> Result<TrainedFitness, FitnessError> {
    config.validate()?;
    let first = train.first().ok_or(FitnessError::EmptyDataset)?;
    let image_size = first.cover.size();
    if let Some(bad) = train
        .iter()
        .chain(val)
        .find(|e| e.cover.size() != image_size)
    {
        return Err(FitnessError::ImageSize {
            expected: image_size * image_size * 3,
            found: bad.cover.pixels().len(),
        });
    }

    let mut predictor = FeaturePredictor::new(PredictorConfig {
        image_size,
        hidden: config.hidden.clone(),
        seed: config.seed,
    })?;
    let mut discriminator =
        FeatureDiscriminator::new(config.discriminator_seed.unwrap_or(config.seed));
    let mut pred_opt = OptimizerState::adam(config.learning_rate)?;
    let mut disc_opt = OptimizerState::adam(config.learning_rate)?;

    let (train_px, train_t) = stack(train);
    let (val_px, val_t) = stack(val);
    let mut log = TrainingLog {
        initial_val_mse: validation_mse(&predictor, &val_px, &val_t)?,
        epochs: Vec::with_capacity(config.epochs),
    };

    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng::derived(
            config.seed,
            &[rng::stream::SHUFFLE, epoch as u64],
        ));
        let mut reg_sum = 0.0;
        let mut disc_sum = 0.0;
        let mut batches = 0usize;
        for (batch, idx) in order.chunks(config.batch_size).enumerate() {
            let diverged = |reason: String| FitnessError::Diverged {
                epoch,
                batch,
                reason,
            };
            let b = idx.len();
            let inv_b = 1.0 / b as f64;
            let x = train_px.gather(idx);
            let t = train_t.gather(idx);

            let pred_cache = predictor.net.forward_cached(&x, b)?;
            let p = pred_cache.output().to_vec();

            // discriminator ascent (descent on the negated objective)
            let d_net = &discriminator.net;
            let real = d_net.forward_cached(&t, b)?;
            let fake = d_net.forward_cached(&p, b)?;
            let mut disc_loss = 0.0;
            let real_grad: Vec<f64> = real
                .output()
                .iter()
                .map(|&d| {
                    disc_loss -= d.ln() * inv_b;
                    -inv_b / d
                })
                .collect();
            let fake_grad: Vec<f64> = fake
                .output()
                .iter()
                .map(|&d| {
                    disc_loss -= (1.0 - d).ln() * inv_b;
                    inv_b / (1.0 - d)
                })
                .collect();
            if !disc_loss.is_finite() {
                return Err(diverged(format!("discriminator loss {disc_loss}")));
            }
            let mut d_grads = d_net.param_gradients(&real, &real_grad)?;
            let fake_params = d_net.param_gradients(&fake, &fake_grad)?;
            for (acc, g) in d_grads.layers.iter_mut().zip(&fake_params.layers) {
                for (a, v) in acc.weights.iter_mut().zip(&g.weights) {
                    *a += v;
                }
                for (a, v) in acc.bias.iter_mut().zip(&g.bias) {
                    *a += v;
                }
            }
            discriminator.net.apply_gradients(&mut disc_opt, &d_grads)?;

            // predictor descent against the updated discriminator
            let fake = discriminator.net.forward_cached(&p, b)?;
            let mut adversarial = 0.0;
            let d_out_grad: Vec<f64> = fake
                .output()
                .iter()
                .map(|&d| {
                    adversarial += (1.0 - d).ln() * inv_b;
                    -config.lambda * inv_b / (1.0 - d)
                })
                .collect();
            if !adversarial.is_finite() {
                return Err(diverged(format!("adversarial term {adversarial}")));
            }
            let adv_grad = discriminator.net.input_gradient(&fake, &d_out_grad)?;
            let mut reg_loss = 0.0;
            let p_grad: Vec<f64> = p
                .iter()
                .zip(&t)
                .zip(&adv_grad)
                .map(|((pi, ti), a)| {
                    let r = pi - ti;
                    reg_loss += r * r * inv_b;
                    2.0 * r * inv_b + a
                })
                .collect();
            if !reg_loss.is_finite() {
                return Err(diverged(format!("regression loss {reg_loss}")));
            }
            let grads = predictor.net.param_gradients(&pred_cache, &p_grad)?;
            predictor
                .net
                .apply_gradients(&mut pred_opt, &grads)
                .map_err(|e| diverged(e.to_string()))?;

            reg_sum += reg_loss;
            disc_sum += disc_loss;
            batches += 1;
        }
        let val_mse = validation_mse(&predictor, &val_px, &val_t)?;
        log::debug!(
            "epoch {epoch}: regression {:.5} disc {:.5} val_mse {val_mse:.5}",
            reg_sum / batches as f64,
            disc_sum / batches as f64
        );
        log.epochs.push(EpochLog {
            epoch,
            regression_loss: reg_sum / batches as f64,
            disc_loss: disc_sum / batches as f64,
            val_mse,
        });
    }
    predictor.record_training(config.epochs, config.lambda);
    Ok(TrainedFitness {
        predictor,
        discriminator,
        log,
    })
}
