//! The resolved run configuration: defaults, then a TOML file, then flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{FeatureBounds, WorldConfig};
use crate::eval::ClassifierConfig;
use crate::fitness::{feature_index, FitnessTrainConfig};
use crate::generator::GeneratorConfig;
use crate::optimizers::{GaConfig, Method};

pub const RESOLVED_CONFIG: &str = "run_config.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; every component seed is set from it.
    pub seed: u64,
    pub latent_dim: usize,
    pub image_size: usize,
    /// Run directory. Defaults to `runs/<unix-time>-seed<seed>`.
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub generator: GeneratorSection,
    pub world: WorldSection,
    pub bounds: BoundsSection,
    pub fitness: FitnessTrainConfig,
    pub classifier: ClassifierConfig,
    pub ga: GaConfig,
    pub gd: GdSection,
    pub optimize: OptimizeSection,
    pub benchmark: BenchmarkSection,
    pub sweep: SweepSection,
    pub album: AlbumSection,
    pub paths: PathsSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            latent_dim: 32,
            image_size: 32,
            out: None,
            threads: None,
            generator: GeneratorSection::default(),
            world: WorldSection::default(),
            bounds: BoundsSection::default(),
            fitness: FitnessTrainConfig::default(),
            classifier: ClassifierConfig::default(),
            ga: GaConfig::default(),
            gd: GdSection::default(),
            optimize: OptimizeSection::default(),
            benchmark: BenchmarkSection::default(),
            sweep: SweepSection::default(),
            album: AlbumSection::default(),
            paths: PathsSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSection {
    pub hidden: Vec<usize>,
    pub conditional: bool,
}

impl Default for GeneratorSection {
    fn default() -> Self {
        Self {
            hidden: vec![128, 256],
            conditional: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldSection {
    pub n_per_genre: usize,
    pub decoder: DecoderMode,
    pub decoder_jitter: f64,
    /// Decoder widths when `decoder = "independent"`.
    pub hidden: Vec<usize>,
    pub feature_gain: f64,
    pub calibration_samples: usize,
}

/// How the synthetic world's data decoder relates to the search generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderMode {
    /// Jittered copy of the search generator, seeded separately.
    Sibling,
    /// Unrelated random decoder; generator covers are off the corpus.
    Independent,
}

impl Default for WorldSection {
    fn default() -> Self {
        let w = WorldConfig::default();
        Self {
            n_per_genre: 1000,
            decoder: DecoderMode::Sibling,
            decoder_jitter: w.decoder_jitter,
            hidden: w.hidden,
            feature_gain: w.feature_gain,
            calibration_samples: w.calibration_samples,
        }
    }
}

/// Raw-unit ranges for the two features not already in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsSection {
    pub tempo: (f64, f64),
    pub loudness: (f64, f64),
}

impl Default for BoundsSection {
    fn default() -> Self {
        let b = FeatureBounds::default();
        Self {
            tempo: b.0[feature_index("tempo").expect("known")],
            loudness: b.0[feature_index("loudness").expect("known")],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GdSection {
    pub iterations: usize,
    pub learning_rates: Vec<f64>,
    pub restarts: usize,
}

impl Default for GdSection {
    fn default() -> Self {
        Self {
            iterations: 400,
            learning_rates: vec![0.15, 0.001],
            restarts: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeSection {
    pub method: Method,
    pub learning_rate: f64,
    /// Nine comma-separated target values in [0, 1].
    pub features: Option<String>,
    /// 1-based data row of the manifest to take the target from.
    pub row: Option<usize>,
    pub genre: Option<String>,
    pub png: bool,
}

impl Default for OptimizeSection {
    fn default() -> Self {
        Self {
            method: Method::Ga,
            learning_rate: 0.15,
            features: None,
            row: None,
            genre: None,
            png: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkSection {
    pub targets_per_genre: usize,
}

impl Default for BenchmarkSection {
    fn default() -> Self {
        Self {
            targets_per_genre: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub feature: String,
    pub steps: usize,
    /// Base feature vector; defaults to 0.5 everywhere.
    pub base: Option<String>,
    pub genre: Option<String>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            feature: "danceability".into(),
            steps: 11,
            base: None,
            genre: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlbumSection {
    /// CSV with the nine feature columns (values in [0, 1]).
    pub tracks: Option<PathBuf>,
    /// When no track file is given, take this many tracks of `genre` from
    /// the manifest.
    pub count: usize,
    pub genre: Option<String>,
}

impl Default for AlbumSection {
    fn default() -> Self {
        Self {
            tracks: None,
            count: 14,
            genre: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    pub manifest: Option<PathBuf>,
    pub predictor: PathBuf,
    pub discriminator: Option<PathBuf>,
    pub classifier: Option<PathBuf>,
    /// Frozen generator weights; built from the seed when absent.
    pub generator: Option<PathBuf>,
}

impl Default for PathsSection {
    fn default() -> Self {
        Self {
            manifest: None,
            predictor: PathBuf::from("predictor.bin"),
            discriminator: None,
            classifier: None,
            generator: None,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("reading config {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| anyhow::anyhow!("parsing config {}: {e}", path.display()))
    }

    /// Copies the master seed and shared sizes into every component config.
    pub fn propagate(&mut self) {
        self.fitness.seed = self.seed;
        self.classifier.seed = self.seed;
        self.ga.seed = self.seed;
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| {
            let secs = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs());
            PathBuf::from("runs").join(format!("{secs}-seed{}", self.seed))
        })
    }

    pub fn generator_config(&self) -> GeneratorConfig {
        GeneratorConfig {
            latent_dim: self.latent_dim,
            image_size: self.image_size,
            hidden: self.generator.hidden.clone(),
            conditional: self.generator.conditional,
            seed: self.seed,
        }
    }

    pub fn world_config(&self) -> WorldConfig {
        let (hidden, base_generator) = match self.world.decoder {
            DecoderMode::Sibling => (self.generator.hidden.clone(), Some(self.generator_config())),
            DecoderMode::Independent => (self.world.hidden.clone(), None),
        };
        WorldConfig {
            seed: self.seed,
            latent_dim: self.latent_dim,
            image_size: self.image_size,
            hidden,
            feature_gain: self.world.feature_gain,
            calibration_samples: self.world.calibration_samples,
            base_generator,
            decoder_jitter: self.world.decoder_jitter,
        }
    }

    pub fn feature_bounds(&self) -> FeatureBounds {
        let mut b = FeatureBounds::default();
        b.0[feature_index("tempo").expect("known")] = self.bounds.tempo;
        b.0[feature_index("loudness").expect("known")] = self.bounds.loudness;
        b
    }
}
