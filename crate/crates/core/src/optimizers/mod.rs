//! Latent-space search: a genetic algorithm and gradient-ascent baselines
//! sharing one trace format.

mod ga;
mod gd;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::fitness::{FitnessError, FitnessFunction};
use crate::generator::LatentCode;
use crate::numerics::NumericsError;

pub use ga::{crossover, mutate, run_ga, select_top_k, GaConfig, NoiseScale, Population};
pub use gd::{run_gd, run_gd_sampled, GdConfig};

#[derive(Debug, thiserror::Error)]
pub enum OptimizeError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Fitness(#[from] FitnessError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("non-finite fitness at iteration {iteration}")]
    NonFiniteFitness { iteration: usize },
    #[error("non-finite gradient at iteration {iteration}")]
    NonFiniteGradient { iteration: usize },
    #[error("crossover cut {cut} outside 1..={max}")]
    CutOutOfRange { cut: usize, max: usize },
    #[error("latent dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("population has unevaluated individuals")]
    Unevaluated,
}

/// A failed run together with everything recorded before the failure.
#[derive(Debug, thiserror::Error)]
#[error("optimization aborted after {} iterations: {error}", trace.rows().len())]
pub struct Aborted {
    #[source]
    pub error: OptimizeError,
    pub trace: OptimizationTrace,
}

/// Something to maximize over latent codes.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    /// Scores a batch; must not depend on how the batch is split.
    fn evaluate(&self, zs: &[LatentCode]) -> Result<Vec<f64>, OptimizeError>;
}

pub trait DifferentiableObjective: Objective {
    fn value_and_gradient(&self, z: &LatentCode) -> Result<(f64, Vec<f64>), OptimizeError>;
}

impl Objective for FitnessFunction<'_> {
    fn dim(&self) -> usize {
        self.latent_dim()
    }

    fn evaluate(&self, zs: &[LatentCode]) -> Result<Vec<f64>, OptimizeError> {
        Ok(self.values(zs)?)
    }
}

impl DifferentiableObjective for FitnessFunction<'_> {
    fn value_and_gradient(&self, z: &LatentCode) -> Result<(f64, Vec<f64>), OptimizeError> {
        Ok(FitnessFunction::value_and_gradient(self, z)?)
    }
}

/// `−‖z − center‖²`, a convex test objective with a known optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    center: Vec<f64>,
}

impl Quadratic {
    pub fn new(center: Vec<f64>) -> Self {
        Self { center }
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn value(&self, z: &[f64]) -> f64 {
        -z.iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
    }

    fn check(&self, z: &LatentCode) -> Result<(), OptimizeError> {
        if z.dim() != self.center.len() {
            return Err(OptimizeError::DimensionMismatch(z.dim(), self.center.len()));
        }
        Ok(())
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn evaluate(&self, zs: &[LatentCode]) -> Result<Vec<f64>, OptimizeError> {
        zs.iter()
            .map(|z| {
                self.check(z)?;
                Ok(self.value(z.as_slice()))
            })
            .collect()
    }
}

impl DifferentiableObjective for Quadratic {
    fn value_and_gradient(&self, z: &LatentCode) -> Result<(f64, Vec<f64>), OptimizeError> {
        self.check(z)?;
        let grad = z
            .as_slice()
            .iter()
            .zip(&self.center)
            .map(|(a, b)| -2.0 * (a - b))
            .collect();
        Ok((self.value(z.as_slice()), grad))
    }
}

/// Which search procedure produced a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ga,
    Adam,
    #[serde(rename = "rmsprop")]
    RmsProp,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    /// Best fitness seen so far in the run.
    pub best_fitness: f64,
    /// Mean fitness of the points evaluated this iteration; for gradient
    /// methods that is the single current iterate.
    pub mean_fitness: f64,
    /// Cumulative fitness evaluations.
    pub evaluations: u64,
    pub population: usize,
    pub mutated: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationTrace {
    method: Method,
    rows: Vec<TraceRow>,
    best: Option<(LatentCode, f64)>,
}

impl OptimizationTrace {
    pub(crate) fn new(method: Method) -> Self {
        Self {
            method,
            rows: Vec::new(),
            best: None,
        }
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn iterations(&self) -> usize {
        self.rows.len()
    }

    pub fn evaluations(&self) -> u64 {
        self.rows.last().map_or(0, |r| r.evaluations)
    }

    pub fn best(&self) -> Option<(&LatentCode, f64)> {
        self.best.as_ref().map(|(z, f)| (z, *f))
    }

    pub fn best_fitness(&self) -> Option<f64> {
        self.best.as_ref().map(|b| b.1)
    }

    /// Offers a candidate; only a strictly better one replaces the incumbent,
    /// so the earliest of equal candidates wins.
    pub(crate) fn offer(&mut self, z: &LatentCode, value: f64) {
        if self.best.as_ref().is_none_or(|b| value > b.1) {
            self.best = Some((z.clone(), value));
        }
    }

    pub(crate) fn push(&mut self, mut row: TraceRow) {
        row.best_fitness = self.best_fitness().unwrap_or(f64::NEG_INFINITY);
        self.rows.push(row);
    }

    pub(crate) fn into_result(self) -> (LatentCode, OptimizationTrace) {
        let z = self
            .best
            .as_ref()
            .expect("at least one evaluation")
            .0
            .clone();
        (z, self)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iteration", "best_fitness", "mean_fitness", "evaluations"])?;
        for r in &self.rows {
            w.write_record([
                r.iteration.to_string(),
                r.best_fitness.to_string(),
                r.mean_fitness.to_string(),
                r.evaluations.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), csv::Error> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// `⌈fraction · n⌉`, computed so exact products do not round up spuriously.
pub fn ceil_count(fraction: f64, n: usize) -> usize {
    let x = fraction * n as f64;
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as usize
    } else {
        x.ceil() as usize
    }
}
