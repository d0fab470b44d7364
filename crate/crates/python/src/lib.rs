//! Python bindings: build or load the frozen generator and the feature
//! predictor, score latent codes, and run the GA or gradient searches.
//! Images cross the boundary as flat row-major RGB lists in [0, 1].

use std::fmt::Display;
use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use coverart::dataset::{PairedExample, SyntheticWorld, WorldConfig};
use coverart::eval::{frechet_distance as frechet, GaussianSummary};
use coverart::fitness::{
    train_fitness, AudioFeatures, FeaturePredictor, FitnessFunction, FitnessTrainConfig,
    PredictorConfig, FEATURE_NAMES,
};
use coverart::generator::{Generator, GeneratorConfig, Genre, LatentCode};
use coverart::image::CoverImage;
use coverart::numerics::OptimizerKind;
use coverart::optimizers::{run_ga, run_gd_sampled, GaConfig, GdConfig};
use coverart::rng;

fn value_err(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn genre_arg(genre: Option<&str>) -> PyResult<Option<Genre>> {
    genre.map(|g| g.parse().map_err(value_err)).transpose()
}

fn features_arg(values: &[f64]) -> PyResult<AudioFeatures> {
    AudioFeatures::from_slice(values).map_err(value_err)
}

fn latent_arg(values: Vec<f64>) -> PyResult<LatentCode> {
    LatentCode::new(values).map_err(value_err)
}

#[pyclass(name = "Generator", frozen)]
struct PyGenerator {
    inner: Generator,
}

#[pymethods]
impl PyGenerator {
    #[new]
    #[pyo3(signature = (seed = 0, latent_dim = 32, image_size = 32, conditional = false))]
    fn new(seed: u64, latent_dim: usize, image_size: usize, conditional: bool) -> PyResult<Self> {
        let inner = Generator::build(GeneratorConfig {
            latent_dim,
            image_size,
            conditional,
            seed,
            ..Default::default()
        })
        .map_err(value_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: Generator::load(&path).map_err(value_err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(value_err)
    }

    #[getter]
    fn latent_dim(&self) -> usize {
        self.inner.latent_dim()
    }

    #[getter]
    fn image_size(&self) -> usize {
        self.inner.image_size()
    }

    #[getter]
    fn conditional(&self) -> bool {
        self.inner.is_conditional()
    }

    #[pyo3(signature = (z, genre = None))]
    fn generate(&self, z: Vec<f64>, genre: Option<&str>) -> PyResult<Vec<f64>> {
        let img = self
            .inner
            .generate(&latent_arg(z)?, genre_arg(genre)?)
            .map_err(value_err)?;
        Ok(img.into_pixels())
    }
}

#[pyclass(name = "Predictor", frozen)]
struct PyPredictor {
    inner: FeaturePredictor,
}

#[pymethods]
impl PyPredictor {
    /// An untrained predictor; use `load` or `train_predictor` for a useful one.
    #[new]
    #[pyo3(signature = (image_size = 32, seed = 0))]
    fn new(image_size: usize, seed: u64) -> PyResult<Self> {
        let inner = FeaturePredictor::new(PredictorConfig {
            image_size,
            seed,
            ..Default::default()
        })
        .map_err(value_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: FeaturePredictor::load(&path).map_err(value_err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(value_err)
    }

    #[getter]
    fn image_size(&self) -> usize {
        self.inner.image_size()
    }

    fn predict(&self, pixels: Vec<f64>) -> PyResult<Vec<f64>> {
        let img = CoverImage::new(self.inner.image_size(), pixels).map_err(value_err)?;
        let f = self.inner.predict_features(&img).map_err(value_err)?;
        Ok(f.values().to_vec())
    }
}

fn fitness_fn<'a>(
    generator: &'a PyGenerator,
    predictor: &'a PyPredictor,
    target: &[f64],
    genre: Option<&str>,
) -> PyResult<FitnessFunction<'a>> {
    FitnessFunction::new(
        &generator.inner,
        &predictor.inner,
        genre_arg(genre)?,
        features_arg(target)?,
    )
    .map_err(value_err)
}

/// `-||f(G(z)) - target||^2`.
#[pyfunction]
#[pyo3(signature = (generator, predictor, z, target, genre = None))]
fn fitness(
    generator: &PyGenerator,
    predictor: &PyPredictor,
    z: Vec<f64>,
    target: Vec<f64>,
    genre: Option<&str>,
) -> PyResult<f64> {
    fitness_fn(generator, predictor, &target, genre)?
        .value(&latent_arg(z)?)
        .map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (generator, predictor, z, target, genre = None))]
fn fitness_grad(
    generator: &PyGenerator,
    predictor: &PyPredictor,
    z: Vec<f64>,
    target: Vec<f64>,
    genre: Option<&str>,
) -> PyResult<Vec<f64>> {
    fitness_fn(generator, predictor, &target, genre)?
        .gradient(&latent_arg(z)?)
        .map_err(value_err)
}

/// Searches for the latent code whose cover best matches `target`.
/// Returns `(z, best_fitness, best_fitness_per_iteration)`.
#[pyfunction]
#[pyo3(signature = (
    generator, predictor, target, method = "ga", seed = 0, iterations = None,
    population_size = 250, learning_rate = 0.15, genre = None
))]
#[allow(clippy::too_many_arguments)]
fn optimize(
    py: Python<'_>,
    generator: &PyGenerator,
    predictor: &PyPredictor,
    target: Vec<f64>,
    method: &str,
    seed: u64,
    iterations: Option<usize>,
    population_size: usize,
    learning_rate: f64,
    genre: Option<&str>,
) -> PyResult<(Vec<f64>, f64, Vec<f64>)> {
    let f = fitness_fn(generator, predictor, &target, genre)?;
    let kind = match method.to_ascii_lowercase().as_str() {
        "ga" => None,
        "adam" => Some(OptimizerKind::Adam),
        "rmsprop" => Some(OptimizerKind::RmsProp),
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown method '{other}' (expected ga, adam or rmsprop)"
            )))
        }
    };
    let result = py.detach(|| match kind {
        None => run_ga(
            &f,
            &GaConfig {
                population_size,
                iterations: iterations.unwrap_or(200),
                seed,
                ..Default::default()
            },
        ),
        Some(kind) => run_gd_sampled(
            &f,
            &GdConfig {
                kind,
                learning_rate,
                iterations: iterations.unwrap_or(400),
                seed,
                ..Default::default()
            },
        ),
    });
    let (best, trace) = result.map_err(|e| value_err(e.error))?;
    let curve = trace.rows().iter().map(|r| r.best_fitness).collect();
    Ok((
        best.into_vec(),
        trace.best_fitness().unwrap_or(f64::NAN),
        curve,
    ))
}

/// Synthetic (pixels, features, genre) triples whose covers come from a
/// jittered sibling of `Generator(seed, latent_dim, image_size)`.
#[pyfunction]
#[pyo3(signature = (seed = 0, n_per_genre = 100, latent_dim = 32, image_size = 32))]
fn synth_dataset(
    seed: u64,
    n_per_genre: usize,
    latent_dim: usize,
    image_size: usize,
) -> PyResult<Vec<(Vec<f64>, Vec<f64>, String)>> {
    let base = GeneratorConfig {
        latent_dim,
        image_size,
        seed,
        ..Default::default()
    };
    let world = SyntheticWorld::build(WorldConfig {
        seed,
        latent_dim,
        image_size,
        hidden: base.hidden.clone(),
        base_generator: Some(base),
        ..Default::default()
    })
    .map_err(value_err)?;
    let data = world
        .synth_dataset(n_per_genre, &mut rng::derived(seed, &[rng::stream::DATASET]))
        .map_err(value_err)?;
    Ok(data
        .into_iter()
        .map(|e| {
            (
                e.cover.into_pixels(),
                e.features.values().to_vec(),
                e.genre.name().to_string(),
            )
        })
        .collect())
}

/// Adversarially regularized training on `(pixels, features, genre)` triples.
/// Returns the predictor and the final validation MSE.
#[pyfunction]
#[pyo3(signature = (examples, image_size = 32, epochs = 100, lam = 9.0, seed = 0))]
fn train_predictor(
    py: Python<'_>,
    examples: Vec<(Vec<f64>, Vec<f64>, String)>,
    image_size: usize,
    epochs: usize,
    lam: f64,
    seed: u64,
) -> PyResult<(PyPredictor, f64)> {
    let data = examples
        .into_iter()
        .enumerate()
        .map(|(i, (pixels, features, genre))| {
            Ok(PairedExample {
                cover: CoverImage::new(image_size, pixels).map_err(value_err)?,
                features: features_arg(&features)?,
                genre: genre.parse().map_err(value_err)?,
                cover_id: format!("py-{i:06}"),
            })
        })
        .collect::<PyResult<Vec<_>>>()?;
    let cfg = FitnessTrainConfig {
        lambda: lam,
        epochs,
        seed,
        ..Default::default()
    };
    let trained = py.detach(|| train_fitness(data, &cfg)).map_err(value_err)?;
    let mse = trained.log.final_val_mse();
    Ok((
        PyPredictor {
            inner: trained.predictor,
        },
        mse,
    ))
}

/// Fréchet distance between two Gaussians given as means and row-major
/// covariance matrices.
#[pyfunction]
fn frechet_distance(
    mean1: Vec<f64>,
    cov1: Vec<Vec<f64>>,
    mean2: Vec<f64>,
    cov2: Vec<Vec<f64>>,
) -> PyResult<f64> {
    let summary = |m: Vec<f64>, c: Vec<Vec<f64>>| {
        GaussianSummary::new(m, c.into_iter().flatten().collect()).map_err(value_err)
    };
    frechet(&summary(mean1, cov1)?, &summary(mean2, cov2)?).map_err(value_err)
}

#[pyfunction]
fn feature_names() -> Vec<&'static str> {
    FEATURE_NAMES.to_vec()
}

#[pymodule]
pub fn coverart_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGenerator>()?;
    m.add_class::<PyPredictor>()?;
    m.add_function(wrap_pyfunction!(fitness, m)?)?;
    m.add_function(wrap_pyfunction!(fitness_grad, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(synth_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(train_predictor, m)?)?;
    m.add_function(wrap_pyfunction!(frechet_distance, m)?)?;
    m.add_function(wrap_pyfunction!(feature_names, m)?)?;
    Ok(())
}
