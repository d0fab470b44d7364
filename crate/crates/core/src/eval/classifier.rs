use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::dataset::PairedExample;
use crate::generator::Genre;
use crate::image::CoverImage;
use crate::numerics::weights::{load_weights, save_weights};
use crate::numerics::{Activation, DenseNet, OptimizerState};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            hidden: vec![128],
            epochs: 100,
            learning_rate: 0.001,
            batch_size: 64,
            seed: 0,
        }
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Pixels rescaled from [0, 1] to [-1, 1]. Uncentered inputs let one Adam
/// step shift every first-layer unit the same way, which can kill all relus.
fn centered(pixels: &[f64]) -> impl Iterator<Item = f64> + '_ {
    pixels.iter().map(|p| 2.0 * p - 1.0)
}

/// Image → genre logits.
#[derive(Debug, Clone, PartialEq)]
pub struct GenreClassifier {
    net: DenseNet,
    image_size: usize,
}

impl GenreClassifier {
    pub fn new(image_size: usize, hidden: &[usize], seed: u64) -> Result<Self, EvalError> {
        let mut dims = vec![image_size * image_size * 3];
        dims.extend(hidden);
        dims.push(Genre::COUNT);
        let mut acts = vec![Activation::Relu; hidden.len()];
        acts.push(Activation::Identity);
        let mut r = rng::derived(seed, &[rng::stream::CLASSIFIER]);
        Ok(Self {
            net: DenseNet::init(&dims, &acts, &mut r)?,
            image_size,
        })
    }

    pub fn net(&self) -> &DenseNet {
        &self.net
    }

    pub fn image_size(&self) -> usize {
        self.image_size
    }

    fn check(&self, image: &CoverImage) -> Result<(), EvalError> {
        if image.size() != self.image_size {
            return Err(EvalError::DimensionMismatch(image.size(), self.image_size));
        }
        Ok(())
    }

    fn logits(&self, image: &CoverImage) -> Result<Vec<f64>, EvalError> {
        let x: Vec<f64> = centered(image.pixels()).collect();
        Ok(self.net.forward_rows(&x, 1)?)
    }

    pub fn probabilities(&self, image: &CoverImage) -> Result<Vec<f64>, EvalError> {
        self.check(image)?;
        Ok(softmax(&self.logits(image)?))
    }

    /// Most likely genre; ties go to the lowest class index.
    pub fn predict(&self, image: &CoverImage) -> Result<Genre, EvalError> {
        self.check(image)?;
        let logits = self.logits(image)?;
        let mut best = 0;
        for (i, &l) in logits.iter().enumerate() {
            if l > logits[best] {
                best = i;
            }
        }
        Ok(Genre::from_index(best).expect("five outputs"))
    }

    pub fn save(&self, path: &Path) -> Result<(), EvalError> {
        let meta = serde_json::json!({ "role": "classifier", "image_size": self.image_size });
        save_weights(&self.net, meta, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let (net, header) = load_weights(path)?;
        let image_size = header
            .metadata
            .get("image_size")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| EvalError::Config(format!("{}: not a classifier", path.display())))?
            as usize;
        if net.output_dim() != Genre::COUNT || net.input_dim() != image_size * image_size * 3 {
            return Err(EvalError::Config(format!(
                "{}: not a classifier",
                path.display()
            )));
        }
        Ok(Self { net, image_size })
    }
}

/// Fraction of covers whose predicted genre matches the label.
pub fn genre_accuracy(
    classifier: &GenreClassifier,
    labeled: &[(CoverImage, Genre)],
) -> Result<f64, EvalError> {
    if labeled.is_empty() {
        return Err(EvalError::Empty("labeled cover set"));
    }
    let mut hits = 0usize;
    for (img, genre) in labeled {
        if classifier.predict(img)? == *genre {
            hits += 1;
        }
    }
    Ok(hits as f64 / labeled.len() as f64)
}

/// Softmax cross-entropy training with Adam. Returns the classifier and the
/// mean training loss per epoch.
pub fn train_genre_classifier(
    train: &[PairedExample],
    config: &ClassifierConfig,
) -> Result<(GenreClassifier, Vec<f64>), EvalError> {
    let first = train.first().ok_or(EvalError::Empty("training set"))?;
    if config.batch_size == 0 {
        return Err(EvalError::Config("batch_size must be at least 1".into()));
    }
    let size = first.cover.size();
    let mut clf = GenreClassifier::new(size, &config.hidden, config.seed)?;
    let mut opt = OptimizerState::adam(config.learning_rate)?;
    let cols = size * size * 3;
    let mut pixels = Vec::with_capacity(train.len() * cols);
    for e in train {
        if e.cover.size() != size {
            return Err(EvalError::DimensionMismatch(e.cover.size(), size));
        }
        pixels.extend(centered(e.cover.pixels()));
    }
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut losses = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng::derived(
            config.seed,
            &[rng::stream::CLASSIFIER, epoch as u64],
        ));
        let mut total = 0.0;
        for idx in order.chunks(config.batch_size) {
            let b = idx.len();
            let mut x = Vec::with_capacity(b * cols);
            for &i in idx {
                x.extend_from_slice(&pixels[i * cols..(i + 1) * cols]);
            }
            let cache = clf.net.forward_cached(&x, b)?;
            let mut grad = Vec::with_capacity(b * Genre::COUNT);
            for (row, &i) in cache.output().chunks_exact(Genre::COUNT).zip(idx) {
                let p = softmax(row);
                let label = train[i].genre.index();
                total -= p[label].max(f64::MIN_POSITIVE).ln();
                for (k, pk) in p.iter().enumerate() {
                    let y = if k == label { 1.0 } else { 0.0 };
                    grad.push((pk - y) / b as f64);
                }
            }
            let g = clf.net.param_gradients(&cache, &grad)?;
            clf.net.apply_gradients(&mut opt, &g)?;
        }
        let mean = total / train.len() as f64;
        if !mean.is_finite() {
            return Err(EvalError::NonFiniteLoss { epoch });
        }
        log::debug!("classifier epoch {epoch}: loss {mean:.5}");
        losses.push(mean);
    }
    Ok((clf, losses))
}
