//! The frozen cover generator: a seeded dense decoder from latent codes
//! (optionally concatenated with a genre one-hot) to RGB images.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::image::CoverImage;
use crate::numerics::weights::{load_weights, save_weights};
use crate::numerics::{Activation, DenseLayer, DenseNet, ForwardCache, NumericsError};
use crate::rng;

#[derive(Debug, thiserror::Error)]
pub enum GeneratorError {
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error("generator is {} but genre was {}", if *.conditional { "conditional" } else { "unconditional" }, if *.conditional { "omitted" } else { "given" })]
    GenreMismatch { conditional: bool },
    #[error("latent code has dimension {found}, generator expects {expected}")]
    LatentDim { expected: usize, found: usize },
    #[error("image gradient has {found} values, expected {expected}")]
    ImageGrad { expected: usize, found: usize },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, thiserror::Error)]
#[error("non-finite latent value")]
pub struct NonFiniteLatent;

/// The search variable: a real vector fed to the generator.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentCode(Vec<f64>);

impl LatentCode {
    pub fn new(values: Vec<f64>) -> Result<Self, NonFiniteLatent> {
        if values.iter().all(|v| v.is_finite()) {
            Ok(Self(values))
        } else {
            Err(NonFiniteLatent)
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// i.i.d. standard normal latent code.
pub fn sample_latent<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> LatentCode {
    LatentCode((0..dim).map(|_| rng.sample(StandardNormal)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Genre {
    Country,
    Dance,
    Kids,
    Metal,
    Rap,
}

impl Genre {
    pub const ALL: [Genre; 5] = [
        Genre::Country,
        Genre::Dance,
        Genre::Kids,
        Genre::Metal,
        Genre::Rap,
    ];
    pub const COUNT: usize = 5;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Genre> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Genre::Country => "country",
            Genre::Dance => "dance",
            Genre::Kids => "kids",
            Genre::Metal => "metal",
            Genre::Rap => "rap",
        }
    }

    pub fn one_hot(self) -> [f64; 5] {
        let mut v = [0.0; 5];
        v[self.index()] = 1.0;
        v
    }
}

impl fmt::Display for Genre {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown genre '{0}' (expected one of: country, dance, kids, metal, rap)")]
pub struct UnknownGenre(pub String);

impl FromStr for Genre {
    type Err = UnknownGenre;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Genre::ALL
            .into_iter()
            .find(|g| g.name() == lower)
            .ok_or_else(|| UnknownGenre(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub latent_dim: usize,
    pub image_size: usize,
    pub hidden: Vec<usize>,
    pub conditional: bool,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            latent_dim: 32,
            image_size: 32,
            hidden: vec![128, 256],
            conditional: false,
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn input_dim(&self) -> usize {
        self.latent_dim + if self.conditional { Genre::COUNT } else { 0 }
    }

    pub fn output_dim(&self) -> usize {
        self.image_size * self.image_size * 3
    }

    fn validate(&self) -> Result<(), GeneratorError> {
        if self.latent_dim == 0 {
            return Err(GeneratorError::Config("latent_dim must be positive".into()));
        }
        if self.image_size == 0 || self.image_size > 128 {
            return Err(GeneratorError::Config(format!(
                "image_size must be in 1..=128, got {}",
                self.image_size
            )));
        }
        if self.hidden.contains(&0) {
            return Err(GeneratorError::Config(
                "hidden widths must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Frozen decoder `G`. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Generator {
    config: GeneratorConfig,
    net: DenseNet,
}

impl Generator {
    /// Builds the decoder deterministically from `config.seed`: relu hidden
    /// layers and a sigmoid output of `image_size² · 3` pixels.
    pub fn build(config: GeneratorConfig) -> Result<Self, GeneratorError> {
        config.validate()?;
        let mut dims = vec![config.input_dim()];
        dims.extend(&config.hidden);
        dims.push(config.output_dim());
        let mut acts = vec![Activation::Relu; config.hidden.len()];
        acts.push(Activation::Sigmoid);
        let mut rng = rng::derived(config.seed, &[rng::stream::GENERATOR]);
        let net = DenseNet::init(&dims, &acts, &mut rng)?.frozen();
        Ok(Self { config, net })
    }

    pub fn config(&self) -> &GeneratorConfig {
        &self.config
    }

    pub fn net(&self) -> &DenseNet {
        &self.net
    }

    pub fn latent_dim(&self) -> usize {
        self.config.latent_dim
    }

    pub fn image_size(&self) -> usize {
        self.config.image_size
    }

    pub fn pixel_count(&self) -> usize {
        self.config.output_dim()
    }

    pub fn is_conditional(&self) -> bool {
        self.config.conditional
    }

    pub fn fingerprint(&self) -> u64 {
        self.net.fingerprint()
    }

    fn check_genre(&self, genre: Option<Genre>) -> Result<(), GeneratorError> {
        if genre.is_some() != self.config.conditional {
            return Err(GeneratorError::GenreMismatch {
                conditional: self.config.conditional,
            });
        }
        Ok(())
    }

    /// Row-major generator inputs for a batch of codes.
    fn inputs(&self, zs: &[LatentCode], genre: Option<Genre>) -> Result<Vec<f64>, GeneratorError> {
        self.check_genre(genre)?;
        let mut input = Vec::with_capacity(zs.len() * self.config.input_dim());
        for z in zs {
            if z.dim() != self.config.latent_dim {
                return Err(GeneratorError::LatentDim {
                    expected: self.config.latent_dim,
                    found: z.dim(),
                });
            }
            input.extend_from_slice(z.as_slice());
            if let Some(g) = genre {
                input.extend_from_slice(&g.one_hot());
            }
        }
        Ok(input)
    }

    pub fn generate(
        &self,
        z: &LatentCode,
        genre: Option<Genre>,
    ) -> Result<CoverImage, GeneratorError> {
        let pixels = self.generate_rows(std::slice::from_ref(z), genre)?;
        Ok(CoverImage::from_trusted(self.config.image_size, pixels))
    }

    pub fn generate_batch(
        &self,
        zs: &[LatentCode],
        genre: Option<Genre>,
    ) -> Result<Vec<CoverImage>, GeneratorError> {
        let pixels = self.generate_rows(zs, genre)?;
        Ok(pixels
            .chunks_exact(self.pixel_count())
            .map(|p| CoverImage::from_trusted(self.config.image_size, p.to_vec()))
            .collect())
    }

    /// Flat `zs.len() × pixel_count` buffer.
    pub(crate) fn generate_rows(
        &self,
        zs: &[LatentCode],
        genre: Option<Genre>,
    ) -> Result<Vec<f64>, GeneratorError> {
        let input = self.inputs(zs, genre)?;
        Ok(self.net.forward_rows(&input, zs.len())?)
    }

    pub(crate) fn forward_cached(
        &self,
        z: &LatentCode,
        genre: Option<Genre>,
    ) -> Result<ForwardCache, GeneratorError> {
        let input = self.inputs(std::slice::from_ref(z), genre)?;
        Ok(self.net.forward_cached(&input, 1)?)
    }

    /// Latent gradient from a cached forward pass; the genre part of the
    /// input gradient is discarded.
    pub(crate) fn latent_gradient(
        &self,
        cache: &ForwardCache,
        image_grad: &[f64],
    ) -> Result<Vec<f64>, GeneratorError> {
        if image_grad.len() != self.pixel_count() {
            return Err(GeneratorError::ImageGrad {
                expected: self.pixel_count(),
                found: image_grad.len(),
            });
        }
        let mut grad = self.net.input_gradient(cache, image_grad)?;
        grad.truncate(self.config.latent_dim);
        Ok(grad)
    }

    /// `∂(image_grad · G(z))/∂z`.
    pub fn generate_backward(
        &self,
        z: &LatentCode,
        genre: Option<Genre>,
        image_grad: &[f64],
    ) -> Result<Vec<f64>, GeneratorError> {
        let cache = self.forward_cached(z, genre)?;
        self.latent_gradient(&cache, image_grad)
    }

    /// An unconditional sibling decoder: this generator's latent pathway with
    /// every weight matrix jittered by `jitter` times its own RMS, drawn from
    /// `seed`. Genre input rows are dropped. Biases are kept.
    pub fn perturbed(&self, jitter: f64, seed: u64) -> Result<Generator, GeneratorError> {
        if !(jitter.is_finite() && jitter >= 0.0) {
            return Err(GeneratorError::Config(format!(
                "jitter must be finite and non-negative, got {jitter}"
            )));
        }
        let mut rng = rng::derived(seed, &[rng::stream::GENERATOR]);
        let mut layers = Vec::with_capacity(self.net.layers().len());
        for (i, layer) in self.net.layers().iter().enumerate() {
            let input_dim = if i == 0 {
                self.config.latent_dim
            } else {
                layer.input_dim()
            };
            let mut weights = layer.weights()[..input_dim * layer.output_dim()].to_vec();
            let rms = (weights.iter().map(|w| w * w).sum::<f64>() / weights.len() as f64).sqrt();
            for w in &mut weights {
                let e: f64 = rng.sample(StandardNormal);
                *w += jitter * rms * e;
            }
            layers.push(DenseLayer::new(
                input_dim,
                layer.output_dim(),
                weights,
                layer.bias().to_vec(),
                layer.activation(),
            )?);
        }
        let config = GeneratorConfig {
            conditional: false,
            seed,
            ..self.config.clone()
        };
        Ok(Generator {
            config,
            net: DenseNet::new(layers)?.frozen(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), GeneratorError> {
        let meta = serde_json::json!({ "role": "generator", "config": self.config });
        Ok(save_weights(&self.net, meta, path)?)
    }

    pub fn load(path: &Path) -> Result<Self, GeneratorError> {
        let (net, header) = load_weights(path)?;
        let config: GeneratorConfig = serde_json::from_value(header.metadata["config"].clone())
            .map_err(|e| GeneratorError::Config(format!("weights metadata: {e}")))?;
        if net.input_dim() != config.input_dim() || net.output_dim() != config.output_dim() {
            return Err(GeneratorError::Config(
                "weights do not match the stored generator config".into(),
            ));
        }
        Ok(Self {
            config,
            net: net.frozen(),
        })
    }
}
