use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{ceil_count, Aborted, Method, Objective, OptimizationTrace, OptimizeError, TraceRow};
use crate::generator::{sample_latent, LatentCode};
use crate::rng;

/// How the configured mutation scale is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseScale {
    /// `mutation_std` is the standard deviation.
    #[default]
    Std,
    /// `mutation_std` is the variance; the noise std is its square root.
    Variance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population_size: usize,
    pub mutation_rate: f64,
    pub selection_fraction: f64,
    pub mutation_std: f64,
    pub noise_scale: NoiseScale,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 250,
            mutation_rate: 0.05,
            selection_fraction: 0.20,
            mutation_std: 0.1,
            noise_scale: NoiseScale::Std,
            iterations: 200,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        let bad = |msg: String| Err(OptimizeError::Config(msg));
        if self.population_size < 2 {
            return bad(format!(
                "population_size must be at least 2, got {}",
                self.population_size
            ));
        }
        if !(self.selection_fraction > 0.0 && self.selection_fraction <= 1.0) {
            return bad(format!(
                "selection_fraction must be in (0, 1], got {}",
                self.selection_fraction
            ));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad(format!(
                "mutation_rate must be in [0, 1], got {}",
                self.mutation_rate
            ));
        }
        if !(self.mutation_std > 0.0 && self.mutation_std.is_finite()) {
            return bad(format!(
                "mutation_std must be positive, got {}",
                self.mutation_std
            ));
        }
        Ok(())
    }

    pub fn survivors(&self) -> usize {
        ceil_count(self.selection_fraction, self.population_size).max(1)
    }

    pub fn mutations(&self) -> usize {
        ceil_count(self.mutation_rate, self.population_size)
    }

    pub fn noise_std(&self) -> f64 {
        match self.noise_scale {
            NoiseScale::Std => self.mutation_std,
            NoiseScale::Variance => self.mutation_std.sqrt(),
        }
    }
}

/// Individuals with parallel, possibly missing, scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    individuals: Vec<LatentCode>,
    scores: Vec<Option<f64>>,
}

impl Population {
    pub fn new(individuals: Vec<LatentCode>) -> Self {
        let scores = vec![None; individuals.len()];
        Self {
            individuals,
            scores,
        }
    }

    pub fn evaluated(
        individuals: Vec<LatentCode>,
        scores: Vec<f64>,
    ) -> Result<Self, OptimizeError> {
        if individuals.len() != scores.len() {
            return Err(OptimizeError::Config(format!(
                "{} individuals but {} scores",
                individuals.len(),
                scores.len()
            )));
        }
        Ok(Self {
            individuals,
            scores: scores.into_iter().map(Some).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    pub fn individuals(&self) -> &[LatentCode] {
        &self.individuals
    }

    pub fn scores(&self) -> &[Option<f64>] {
        &self.scores
    }
}

/// One-point crossover: `a[..cut] ++ b[cut..]` and `b[..cut] ++ a[cut..]`.
pub fn crossover(
    a: &LatentCode,
    b: &LatentCode,
    cut: usize,
) -> Result<(LatentCode, LatentCode), OptimizeError> {
    let d = a.dim();
    if b.dim() != d {
        return Err(OptimizeError::DimensionMismatch(d, b.dim()));
    }
    if cut == 0 || cut >= d {
        return Err(OptimizeError::CutOutOfRange {
            cut,
            max: d.saturating_sub(1),
        });
    }
    let (a, b) = (a.as_slice(), b.as_slice());
    let child_a = [&a[..cut], &b[cut..]].concat();
    let child_b = [&b[..cut], &a[cut..]].concat();
    Ok((
        LatentCode::new(child_a).expect("copied from finite codes"),
        LatentCode::new(child_b).expect("copied from finite codes"),
    ))
}

/// Adds i.i.d. `N(0, std²)` noise to every coordinate.
pub fn mutate<R: Rng + ?Sized>(z: &LatentCode, std: f64, rng: &mut R) -> LatentCode {
    let noise = Normal::new(0.0, std).expect("std validated positive");
    let v = z.as_slice().iter().map(|x| x + noise.sample(rng)).collect();
    LatentCode::new(v).expect("finite code plus finite noise")
}

/// Indices of the `⌈fraction · N⌉` fittest individuals, best first; ties go
/// to the lower index.
pub fn select_top_k(pop: &Population, fraction: f64) -> Result<Vec<usize>, OptimizeError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(OptimizeError::Config(format!(
            "selection fraction must be in (0, 1], got {fraction}"
        )));
    }
    let scores = pop
        .scores
        .iter()
        .map(|s| s.ok_or(OptimizeError::Unevaluated))
        .collect::<Result<Vec<_>, _>>()?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // stable sort keeps index order among equal scores
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]));
    order.truncate(ceil_count(fraction, scores.len()).max(1).min(scores.len()));
    Ok(order)
}

fn refill<R: Rng + ?Sized>(survivors: Vec<LatentCode>, n: usize, rng: &mut R) -> Vec<LatentCode> {
    let d = survivors[0].dim();
    let s = survivors.len();
    let mut pool = survivors;
    while pool.len() < n {
        let i = rng.random_range(0..s);
        let j = if s > 1 {
            // a distinct partner, uniform over the rest
            let j = rng.random_range(0..s - 1);
            if j >= i {
                j + 1
            } else {
                j
            }
        } else {
            i
        };
        if d < 2 {
            pool.push(pool[i].clone());
            continue;
        }
        let cut = rng.random_range(1..d);
        let (a, b) = crossover(&pool[i], &pool[j], cut).expect("cut in range");
        pool.push(a);
        if pool.len() < n {
            pool.push(b);
        }
    }
    pool
}

/// Genetic search maximizing `objective`. Returns the best individual ever
/// evaluated and the per-generation trace.
pub fn run_ga<O: Objective + ?Sized>(
    objective: &O,
    config: &GaConfig,
) -> Result<(LatentCode, OptimizationTrace), Aborted> {
    let mut trace = OptimizationTrace::new(Method::Ga);
    let fail = |error, trace| Aborted { error, trace };
    if let Err(e) = config.validate() {
        return Err(fail(e, trace));
    }
    let n = config.population_size;
    let d = objective.dim();
    let std = config.noise_std();
    let mut evaluations = 0u64;
    let mut pool: Vec<LatentCode> = Vec::new();
    let mut scores: Vec<f64> = Vec::new();

    for generation in 0..config.iterations {
        let mut r = rng::derived(config.seed, &[rng::stream::GA, generation as u64]);
        pool = if generation == 0 {
            (0..n).map(|_| sample_latent(&mut r, d)).collect()
        } else {
            let prev =
                Population::evaluated(std::mem::take(&mut pool), std::mem::take(&mut scores))
                    .expect("parallel lists");
            let keep = select_top_k(&prev, config.selection_fraction).expect("evaluated");
            let survivors = keep.iter().map(|&i| prev.individuals[i].clone()).collect();
            refill(survivors, n, &mut r)
        };

        let mutated = config.mutations();
        for i in index::sample(&mut r, n, mutated).into_vec() {
            pool[i] = mutate(&pool[i], std, &mut r);
        }

        scores = match objective.evaluate(&pool) {
            Ok(s) => s,
            Err(e) => return Err(fail(e, trace)),
        };
        evaluations += n as u64;
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(fail(
                OptimizeError::NonFiniteFitness {
                    iteration: generation,
                },
                trace,
            ));
        }
        for (z, &s) in pool.iter().zip(&scores) {
            trace.offer(z, s);
        }
        trace.push(TraceRow {
            iteration: generation,
            best_fitness: 0.0,
            mean_fitness: scores.iter().sum::<f64>() / n as f64,
            evaluations,
            population: pool.len(),
            mutated,
        });
    }
    if trace.best.is_none() {
        return Err(fail(
            OptimizeError::Config("iterations must be at least 1".into()),
            trace,
        ));
    }
    Ok(trace.into_result())
}
