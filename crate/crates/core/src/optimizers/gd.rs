use serde::{Deserialize, Serialize};

use super::{Aborted, DifferentiableObjective, Method, OptimizationTrace, OptimizeError, TraceRow};
use crate::generator::{sample_latent, LatentCode};
use crate::numerics::{OptimizerKind, OptimizerState};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GdConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Independent starts from fresh latent samples; the best run wins.
    pub restarts: usize,
}

impl Default for GdConfig {
    fn default() -> Self {
        Self {
            kind: OptimizerKind::Adam,
            learning_rate: 0.15,
            iterations: 400,
            seed: 0,
            restarts: 1,
        }
    }
}

impl GdConfig {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(OptimizeError::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.iterations == 0 {
            return Err(OptimizeError::Config(
                "iterations must be at least 1".into(),
            ));
        }
        if self.restarts == 0 {
            return Err(OptimizeError::Config("restarts must be at least 1".into()));
        }
        Ok(())
    }
}

fn method_of(kind: OptimizerKind) -> Method {
    match kind {
        OptimizerKind::Adam => Method::Adam,
        OptimizerKind::RmsProp => Method::RmsProp,
    }
}

fn ascend<O: DifferentiableObjective + ?Sized>(
    objective: &O,
    config: &GdConfig,
    z0: LatentCode,
    trace: &mut OptimizationTrace,
) -> Result<(), OptimizeError> {
    let mut state = OptimizerState::new(config.kind, config.learning_rate)?;
    let mut z = z0.into_vec();
    let start = trace.iterations();
    for it in 0..config.iterations {
        let code = LatentCode::new(z.clone()).map_err(|_| OptimizeError::NonFiniteFitness {
            iteration: start + it,
        })?;
        let (value, grad) = objective.value_and_gradient(&code)?;
        if !value.is_finite() {
            return Err(OptimizeError::NonFiniteFitness {
                iteration: start + it,
            });
        }
        trace.offer(&code, value);
        trace.push(TraceRow {
            iteration: start + it,
            best_fitness: 0.0,
            mean_fitness: value,
            evaluations: trace.evaluations() + 1,
            population: 1,
            mutated: 0,
        });
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(OptimizeError::NonFiniteGradient {
                iteration: start + it,
            });
        }
        // the optimizer descends; ascend on fitness by negating
        let descent: Vec<f64> = grad.iter().map(|g| -g).collect();
        state.step(&mut z, &descent)?;
    }
    Ok(())
}

/// Gradient ascent from `z0`. Returns the best iterate seen, which need not
/// be the last one.
pub fn run_gd<O: DifferentiableObjective + ?Sized>(
    objective: &O,
    config: &GdConfig,
    z0: LatentCode,
) -> Result<(LatentCode, OptimizationTrace), Aborted> {
    let mut trace = OptimizationTrace::new(method_of(config.kind));
    if let Err(error) = config.validate() {
        return Err(Aborted { error, trace });
    }
    match ascend(objective, config, z0, &mut trace) {
        Ok(()) => Ok(trace.into_result()),
        Err(error) => Err(Aborted { error, trace }),
    }
}

/// Gradient ascent from `restarts` latent samples drawn from the config
/// seed; traces of all starts are concatenated.
pub fn run_gd_sampled<O: DifferentiableObjective + ?Sized>(
    objective: &O,
    config: &GdConfig,
) -> Result<(LatentCode, OptimizationTrace), Aborted> {
    let mut trace = OptimizationTrace::new(method_of(config.kind));
    if let Err(error) = config.validate() {
        return Err(Aborted { error, trace });
    }
    for restart in 0..config.restarts {
        let mut r = rng::derived(config.seed, &[rng::stream::GD, restart as u64]);
        let z0 = sample_latent(&mut r, objective.dim());
        if let Err(error) = ascend(objective, config, z0, &mut trace) {
            return Err(Aborted { error, trace });
        }
    }
    Ok(trace.into_result())
}
