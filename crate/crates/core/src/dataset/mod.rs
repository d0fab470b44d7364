//! Paired (cover, audio features, genre) data: the synthetic world used
//! for desk-scale experiments, CSV manifests for real covers, feature
//! rescaling and cover-level train/test splits.

mod manifest;
mod synth;

use std::collections::HashMap;
use std::path::PathBuf;

use rand::seq::SliceRandom;

use crate::fitness::{AudioFeatures, FeatureError, FEATURE_COUNT, FEATURE_NAMES};
use crate::generator::{GeneratorError, Genre};
use crate::image::{CoverImage, ImageError};
use crate::rng;

pub use manifest::{load_manifest, write_manifest, MANIFEST_HEADER};
pub use synth::{image_statistics, SyntheticWorld, WorldConfig, STAT_COUNT};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("manifest row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("manifest header is missing column '{0}'")]
    MissingColumn(String),
    #[error("manifest: {0}")]
    Csv(#[from] csv::Error),
    #[error("image: {0}")]
    Image(#[from] ImageError),
    #[error("feature bounds for '{name}' are inverted or empty: [{min}, {max}]")]
    InvertedBounds {
        name: &'static str,
        min: f64,
        max: f64,
    },
    #[error("split leaves one side empty ({train} train / {test} test covers)")]
    DegenerateSplit { train: usize, test: usize },
    #[error("genre '{0}' still has too few examples after the resample budget")]
    UnreachableGenre(Genre),
    #[error("{0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
}

/// One training pair plus its genre label.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedExample {
    pub cover: CoverImage,
    pub features: AudioFeatures,
    pub genre: Genre,
    pub cover_id: String,
}

/// Per-feature `[min, max]` of the raw values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureBounds(pub [(f64, f64); FEATURE_COUNT]);

impl Default for FeatureBounds {
    /// Tempo in BPM over `[0, 250]`, loudness in dB over `[-60, 0]`, the
    /// other seven already unit-ranged.
    fn default() -> Self {
        let mut b = [(0.0, 1.0); FEATURE_COUNT];
        b[3] = (0.0, 250.0);
        b[4] = (-60.0, 0.0);
        Self(b)
    }
}

impl FeatureBounds {
    pub fn validate(&self) -> Result<(), DatasetError> {
        for (i, &(min, max)) in self.0.iter().enumerate() {
            if !(min < max) || !min.is_finite() || !max.is_finite() {
                return Err(DatasetError::InvertedBounds {
                    name: FEATURE_NAMES[i],
                    min,
                    max,
                });
            }
        }
        Ok(())
    }

    /// Inverse of [`rescale_features`] for in-range values.
    pub fn to_raw(&self, features: &AudioFeatures) -> [f64; FEATURE_COUNT] {
        let mut raw = [0.0; FEATURE_COUNT];
        for (i, r) in raw.iter_mut().enumerate() {
            let (min, max) = self.0[i];
            *r = min + features.get(i) * (max - min);
        }
        raw
    }
}

/// `(x − min)/(max − min)` clamped to `[0, 1]`; clamped values are logged.
pub fn rescale_features(
    raw: &[f64; FEATURE_COUNT],
    bounds: &FeatureBounds,
) -> Result<AudioFeatures, DatasetError> {
    bounds.validate()?;
    let mut out = [0.0; FEATURE_COUNT];
    for (i, (o, &x)) in out.iter_mut().zip(raw).enumerate() {
        if !x.is_finite() {
            return Err(DatasetError::InvalidArgument(format!(
                "feature '{}' is not finite",
                FEATURE_NAMES[i]
            )));
        }
        let (min, max) = bounds.0[i];
        let scaled = (x - min) / (max - min);
        if !(0.0..=1.0).contains(&scaled) {
            log::warn!(
                "feature '{}' = {x} outside [{min}, {max}], clamped",
                FEATURE_NAMES[i]
            );
        }
        *o = scaled.clamp(0.0, 1.0);
    }
    Ok(AudioFeatures::new(out)?)
}

/// Splits at the cover level: every example sharing a `cover_id` lands on
/// the same side. `round(test_fraction · covers)` covers go to the test
/// side; input order is preserved within each side.
pub fn split(
    dataset: Vec<PairedExample>,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<PairedExample>, Vec<PairedExample>), DatasetError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DatasetError::InvalidArgument(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let mut covers: Vec<&str> = Vec::new();
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for ex in &dataset {
        if !seen.contains_key(ex.cover_id.as_str()) {
            seen.insert(ex.cover_id.as_str(), covers.len());
            covers.push(ex.cover_id.as_str());
        }
    }
    let n_test = (test_fraction * covers.len() as f64).round() as usize;
    if n_test == 0 || n_test >= covers.len() {
        return Err(DatasetError::DegenerateSplit {
            train: covers.len().saturating_sub(n_test),
            test: n_test,
        });
    }
    let mut order: Vec<usize> = (0..covers.len()).collect();
    order.shuffle(&mut rng::derived(seed, &[rng::stream::SPLIT]));
    let mut is_test = vec![false; covers.len()];
    for &i in &order[..n_test] {
        is_test[i] = true;
    }
    let flags: Vec<bool> = dataset
        .iter()
        .map(|ex| is_test[seen[ex.cover_id.as_str()]])
        .collect();
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (ex, t) in dataset.into_iter().zip(flags) {
        if t {
            test.push(ex);
        } else {
            train.push(ex);
        }
    }
    Ok((train, test))
}
