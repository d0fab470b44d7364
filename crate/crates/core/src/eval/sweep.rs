use super::EvalError;
use crate::fitness::{feature_index, AudioFeatures, FeaturePredictor, FitnessFunction};
use crate::generator::{Generator, Genre};
use crate::image::CoverImage;
use crate::optimizers::{run_ga, GaConfig};
use crate::rng;

/// `steps` evenly spaced values from 0 to 1 inclusive.
pub fn grid(steps: usize) -> Result<Vec<f64>, EvalError> {
    if steps < 2 {
        return Err(EvalError::Config(format!(
            "a sweep needs at least 2 steps, got {steps}"
        )));
    }
    let last = (steps - 1) as f64;
    Ok((0..steps).map(|i| i as f64 / last).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepStep {
    pub value: f64,
    pub cover: CoverImage,
    /// Predicted features of the optimized cover.
    pub predicted: AudioFeatures,
    pub fitness: f64,
}

/// Optimizes one cover per grid value of `feature`, all other features held
/// at `base`. Every step uses the same GA seed so differences between covers
/// come from the target alone.
pub fn feature_sweep(
    generator: &Generator,
    predictor: &FeaturePredictor,
    base: &AudioFeatures,
    feature: &str,
    steps: usize,
    genre: Option<Genre>,
    ga: &GaConfig,
) -> Result<Vec<SweepStep>, EvalError> {
    let dim = feature_index(feature)?;
    grid(steps)?
        .into_iter()
        .map(|value| {
            let target = base.with(dim, value)?;
            let f = FitnessFunction::new(generator, predictor, genre, target)?;
            let (best, trace) = run_ga(&f, ga).map_err(|e| e.error)?;
            let cover = generator.generate(&best, genre)?;
            let predicted = predictor.predict_features(&cover)?;
            Ok(SweepStep {
                value,
                cover,
                predicted,
                fitness: trace.best_fitness().expect("successful run"),
            })
        })
        .collect()
}

/// One GA run per track, each with its own seed derived from `master_seed`
/// and the track position.
pub fn album_batch(
    generator: &Generator,
    predictor: &FeaturePredictor,
    tracks: &[AudioFeatures],
    genre: Option<Genre>,
    ga: &GaConfig,
    master_seed: u64,
) -> Result<Vec<CoverImage>, EvalError> {
    if tracks.is_empty() {
        return Err(EvalError::Empty("track list"));
    }
    tracks
        .iter()
        .enumerate()
        .map(|(i, track)| {
            let config = GaConfig {
                seed: rng::derive_seed(master_seed, &[rng::stream::ALBUM, i as u64]),
                ..ga.clone()
            };
            let f = FitnessFunction::new(generator, predictor, genre, *track)?;
            let (best, _) = run_ga(&f, &config).map_err(|e| e.error)?;
            Ok(generator.generate(&best, genre)?)
        })
        .collect()
}

/// Ranks starting at 1, ties sharing their average rank.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation (Pearson correlation of average ranks).
/// `None` when either side is constant or the lengths differ.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}
