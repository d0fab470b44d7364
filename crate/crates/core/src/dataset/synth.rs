use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{DatasetError, PairedExample};
use crate::fitness::{AudioFeatures, FEATURE_COUNT};
use crate::generator::{sample_latent, Generator, GeneratorConfig, Genre};
use crate::image::CoverImage;
use crate::numerics::sigmoid;
use crate::rng;

/// Per-channel mean (3), per-channel standard deviation (3), and mean
/// absolute finite-difference gradient (1).
pub const STAT_COUNT: usize = 7;

const RESAMPLE_BUDGET_PER_EXAMPLE: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldConfig {
    pub seed: u64,
    pub latent_dim: usize,
    pub image_size: usize,
    pub hidden: Vec<usize>,
    /// Scale of the standardized-statistic → logit map.
    pub feature_gain: f64,
    pub calibration_samples: usize,
    /// When set, the data decoder is a jittered sibling of this search
    /// generator rather than an independent random decoder, so the search
    /// generator's covers share the corpus distribution.
    pub base_generator: Option<GeneratorConfig>,
    /// Relative weight jitter for the sibling decoder.
    pub decoder_jitter: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            latent_dim: 32,
            image_size: 32,
            hidden: vec![128, 256],
            feature_gain: 2.0,
            calibration_samples: 512,
            base_generator: None,
            decoder_jitter: 0.1,
        }
    }
}

/// Image statistics feeding the world's feature law.
pub fn image_statistics(image: &CoverImage) -> [f64; STAT_COUNT] {
    let size = image.size();
    let px = image.pixels();
    let n = (size * size) as f64;
    let mut mean = [0.0; 3];
    for p in px.chunks_exact(3) {
        for c in 0..3 {
            mean[c] += p[c];
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = [0.0; 3];
    for p in px.chunks_exact(3) {
        for c in 0..3 {
            var[c] += (p[c] - mean[c]) * (p[c] - mean[c]);
        }
    }
    let mut grad_x = 0.0;
    let mut grad_y = 0.0;
    if size > 1 {
        for y in 0..size {
            for x in 0..size {
                for c in 0..3 {
                    let v = px[(y * size + x) * 3 + c];
                    if x + 1 < size {
                        grad_x += (px[(y * size + x + 1) * 3 + c] - v).abs();
                    }
                    if y + 1 < size {
                        grad_y += (px[((y + 1) * size + x) * 3 + c] - v).abs();
                    }
                }
            }
        }
        let count = (size * (size - 1) * 3) as f64;
        grad_x /= count;
        grad_y /= count;
    }
    [
        mean[0],
        mean[1],
        mean[2],
        (var[0] / n).sqrt(),
        (var[1] / n).sqrt(),
        (var[2] / n).sqrt(),
        grad_x + grad_y,
    ]
}

/// A self-contained data source with a known image → features law:
/// a frozen decoder produces covers, a fixed affine map of standardized
/// image statistics followed by a sigmoid gives the nine features, and a
/// fixed linear projection of the features picks the genre.
#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    config: WorldConfig,
    decoder: Generator,
    pub(crate) stat_mean: [f64; STAT_COUNT],
    pub(crate) stat_std: [f64; STAT_COUNT],
    pub(crate) feature_weights: [[f64; STAT_COUNT]; FEATURE_COUNT],
    pub(crate) feature_bias: [f64; FEATURE_COUNT],
    genre_weights: [[f64; FEATURE_COUNT]; Genre::COUNT],
    genre_bias: [f64; Genre::COUNT],
}

impl SyntheticWorld {
    pub fn build(config: WorldConfig) -> Result<Self, DatasetError> {
        if config.calibration_samples < 2 {
            return Err(DatasetError::InvalidArgument(
                "world calibration needs at least 2 samples".into(),
            ));
        }
        let decoder_seed = Self::decoder_seed_for(config.seed);
        let decoder = match &config.base_generator {
            None => Generator::build(GeneratorConfig {
                latent_dim: config.latent_dim,
                image_size: config.image_size,
                hidden: config.hidden.clone(),
                conditional: false,
                seed: decoder_seed,
            })?,
            Some(base) => {
                if base.latent_dim != config.latent_dim
                    || base.image_size != config.image_size
                    || base.hidden != config.hidden
                {
                    return Err(DatasetError::InvalidArgument(
                        "base generator shape differs from the world's decoder shape".into(),
                    ));
                }
                if base.seed == decoder_seed {
                    return Err(DatasetError::InvalidArgument(
                        "world decoder seed collides with the search generator seed".into(),
                    ));
                }
                Generator::build(base.clone())?.perturbed(config.decoder_jitter, decoder_seed)?
            }
        };
        let mut r = rng::derived(config.seed, &[rng::stream::WORLD]);

        // standardize statistics over a calibration sample of decoder covers
        let latents: Vec<_> = (0..config.calibration_samples)
            .map(|_| sample_latent(&mut r, config.latent_dim))
            .collect();
        let stats: Vec<[f64; STAT_COUNT]> = decoder
            .generate_batch(&latents, None)?
            .iter()
            .map(image_statistics)
            .collect();
        let n = stats.len() as f64;
        let mut stat_mean = [0.0; STAT_COUNT];
        let mut stat_std = [0.0; STAT_COUNT];
        for s in &stats {
            for k in 0..STAT_COUNT {
                stat_mean[k] += s[k] / n;
            }
        }
        for s in &stats {
            for k in 0..STAT_COUNT {
                stat_std[k] += (s[k] - stat_mean[k]).powi(2) / (n - 1.0);
            }
        }
        for sd in &mut stat_std {
            *sd = sd.sqrt().max(1e-12);
        }

        let unit = Normal::new(0.0, 1.0).expect("valid");
        let scale = config.feature_gain / (STAT_COUNT as f64).sqrt();
        let mut feature_weights = [[0.0; STAT_COUNT]; FEATURE_COUNT];
        let mut feature_bias = [0.0; FEATURE_COUNT];
        for (row, b) in feature_weights.iter_mut().zip(&mut feature_bias) {
            for w in row.iter_mut() {
                *w = scale * unit.sample(&mut r);
            }
            *b = 0.5 * unit.sample(&mut r);
        }
        let mut genre_weights = [[0.0; FEATURE_COUNT]; Genre::COUNT];
        for row in &mut genre_weights {
            for w in row.iter_mut() {
                *w = unit.sample(&mut r);
            }
        }

        let mut world = Self {
            config,
            decoder,
            stat_mean,
            stat_std,
            feature_weights,
            feature_bias,
            genre_weights,
            genre_bias: [0.0; Genre::COUNT],
        };
        // center genre logits over the calibration sample so no class is
        // starved
        let mut logit_mean = [0.0; Genre::COUNT];
        for s in &stats {
            let f = world.features_from_stats(s);
            let logits = world.genre_logits(&f);
            for k in 0..Genre::COUNT {
                logit_mean[k] += logits[k] / n;
            }
        }
        for (b, m) in world.genre_bias.iter_mut().zip(logit_mean) {
            *b = -m;
        }
        Ok(world)
    }

    pub fn decoder_seed_for(world_seed: u64) -> u64 {
        rng::derive_seed(world_seed, &[rng::stream::WORLD])
    }

    pub fn config(&self) -> &WorldConfig {
        &self.config
    }

    pub fn decoder(&self) -> &Generator {
        &self.decoder
    }

    pub fn decoder_seed(&self) -> u64 {
        self.decoder.config().seed
    }

    fn features_from_stats(&self, stats: &[f64; STAT_COUNT]) -> [f64; FEATURE_COUNT] {
        let mut z = [0.0; STAT_COUNT];
        for k in 0..STAT_COUNT {
            z[k] = (stats[k] - self.stat_mean[k]) / self.stat_std[k];
        }
        let mut out = [0.0; FEATURE_COUNT];
        for (o, (row, b)) in out
            .iter_mut()
            .zip(self.feature_weights.iter().zip(&self.feature_bias))
        {
            let logit: f64 = row.iter().zip(&z).map(|(w, x)| w * x).sum::<f64>() + b;
            *o = sigmoid(logit);
        }
        out
    }

    fn genre_logits(&self, features: &[f64; FEATURE_COUNT]) -> [f64; Genre::COUNT] {
        let mut out = [0.0; Genre::COUNT];
        for (o, (row, b)) in out
            .iter_mut()
            .zip(self.genre_weights.iter().zip(&self.genre_bias))
        {
            *o = row.iter().zip(features).map(|(w, f)| w * f).sum::<f64>() + b;
        }
        out
    }

    /// The world's ground-truth feature law applied to any cover.
    pub fn features_of(&self, image: &CoverImage) -> AudioFeatures {
        let f = self.features_from_stats(&image_statistics(image));
        AudioFeatures::new(f).expect("sigmoid outputs are in [0, 1]")
    }

    /// Argmax of the genre projection, ties to the lowest index.
    pub fn genre_of(&self, features: &AudioFeatures) -> Genre {
        let logits = self.genre_logits(features.values());
        let mut best = 0;
        for k in 1..Genre::COUNT {
            if logits[k] > logits[best] {
                best = k;
            }
        }
        Genre::from_index(best).expect("in range")
    }

    /// Exactly `n_per_genre` examples of each genre, by rejection sampling
    /// decoder covers in latent-draw order.
    pub fn synth_dataset<R: Rng + ?Sized>(
        &self,
        n_per_genre: usize,
        rng: &mut R,
    ) -> Result<Vec<PairedExample>, DatasetError> {
        if n_per_genre == 0 {
            return Err(DatasetError::InvalidArgument(
                "n_per_genre must be at least 1".into(),
            ));
        }
        let total = n_per_genre * Genre::COUNT;
        let budget = total * RESAMPLE_BUDGET_PER_EXAMPLE;
        let mut counts = [0usize; Genre::COUNT];
        let mut out = Vec::with_capacity(total);
        let mut drawn = 0;
        while out.len() < total {
            if drawn >= budget {
                let starved = (0..Genre::COUNT)
                    .find(|&k| counts[k] < n_per_genre)
                    .and_then(Genre::from_index)
                    .expect("some genre is short");
                return Err(DatasetError::UnreachableGenre(starved));
            }
            let batch = 64.min(budget - drawn);
            let latents: Vec<_> = (0..batch)
                .map(|_| sample_latent(rng, self.config.latent_dim))
                .collect();
            drawn += batch;
            for cover in self.decoder.generate_batch(&latents, None)? {
                let features = self.features_of(&cover);
                let genre = self.genre_of(&features);
                if counts[genre.index()] >= n_per_genre {
                    continue;
                }
                counts[genre.index()] += 1;
                out.push(PairedExample {
                    cover,
                    features,
                    genre,
                    cover_id: format!("cover-{:06}", out.len()),
                });
                if out.len() == total {
                    break;
                }
            }
        }
        Ok(out)
    }
}
