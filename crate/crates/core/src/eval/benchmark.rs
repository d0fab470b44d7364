use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classifier::{genre_accuracy, GenreClassifier};
use super::{mse, EvalError};
use crate::dataset::PairedExample;
use crate::fitness::{AudioFeatures, FeaturePredictor, FitnessFunction};
use crate::generator::{Generator, Genre, LatentCode};
use crate::image::CoverImage;
use crate::numerics::OptimizerKind;
use crate::optimizers::{run_ga, run_gd_sampled, GaConfig, GdConfig, OptimizationTrace};
use crate::rng;

/// One search procedure in the benchmark roster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Procedure {
    Ga(GaConfig),
    Gd(GdConfig),
}

impl Procedure {
    /// Table label, e.g. `GA` or `Adam (0.15)`.
    pub fn label(&self) -> String {
        match self {
            Procedure::Ga(_) => "GA".to_string(),
            Procedure::Gd(c) => {
                let name = match c.kind {
                    OptimizerKind::Adam => "Adam",
                    OptimizerKind::RmsProp => "RMSprop",
                };
                format!("{name} ({})", c.learning_rate)
            }
        }
    }

    fn with_seed(&self, seed: u64) -> Procedure {
        match self {
            Procedure::Ga(c) => Procedure::Ga(GaConfig { seed, ..c.clone() }),
            Procedure::Gd(c) => Procedure::Gd(GdConfig { seed, ..c.clone() }),
        }
    }

    fn run(
        &self,
        f: &FitnessFunction,
    ) -> Result<(LatentCode, OptimizationTrace), crate::optimizers::Aborted> {
        match self {
            Procedure::Ga(c) => run_ga(f, c),
            Procedure::Gd(c) => run_gd_sampled(f, c),
        }
    }
}

/// GA, then Adam and RMSprop at learning rates 0.15 and 0.001.
pub fn default_roster(ga: &GaConfig, gd_iterations: usize) -> Vec<Procedure> {
    roster(ga, gd_iterations, &[0.15, 0.001], 1)
}

/// GA followed by Adam and RMSprop at each learning rate.
pub fn roster(
    ga: &GaConfig,
    gd_iterations: usize,
    learning_rates: &[f64],
    restarts: usize,
) -> Vec<Procedure> {
    let mut out = vec![Procedure::Ga(ga.clone())];
    for &lr in learning_rates {
        for kind in [OptimizerKind::Adam, OptimizerKind::RmsProp] {
            out.push(Procedure::Gd(GdConfig {
                kind,
                learning_rate: lr,
                iterations: gd_iterations,
                restarts,
                ..Default::default()
            }));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkTarget {
    pub id: String,
    pub features: AudioFeatures,
    pub genre: Genre,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkCell {
    pub procedure: String,
    pub target: usize,
    pub genre: Genre,
    pub seed: u64,
    /// MSE between the predicted features of the best cover and the target,
    /// or the error that stopped the run.
    pub outcome: Result<CellOutcome, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub mse: f64,
    pub fitness: f64,
    pub evaluations: u64,
    pub best: LatentCode,
    pub cover: CoverImage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkResult {
    pub master_seed: u64,
    pub procedures: Vec<String>,
    pub targets: Vec<BenchmarkTarget>,
    /// Target-major: all procedures for target 0, then target 1, ...
    pub cells: Vec<BenchmarkCell>,
}

impl BenchmarkResult {
    pub fn cells_for<'a>(&'a self, procedure: &'a str) -> impl Iterator<Item = &'a BenchmarkCell> {
        self.cells.iter().filter(move |c| c.procedure == procedure)
    }

    /// Mean MSE over successful cells; `None` if every cell failed.
    pub fn average_mse(&self, procedure: &str) -> Option<f64> {
        let ok: Vec<f64> = self
            .cells_for(procedure)
            .filter_map(|c| c.outcome.as_ref().ok().map(|o| o.mse))
            .collect();
        (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64)
    }

    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.outcome.is_err()).count()
    }

    /// Genre accuracy of each procedure's best covers against the target
    /// genres.
    pub fn genre_accuracies(
        &self,
        classifier: &GenreClassifier,
    ) -> Result<Vec<(String, Option<f64>)>, EvalError> {
        self.procedures
            .iter()
            .map(|p| {
                let labeled: Vec<(CoverImage, Genre)> = self
                    .cells_for(p)
                    .filter_map(|c| c.outcome.as_ref().ok().map(|o| (o.cover.clone(), c.genre)))
                    .collect();
                let acc = if labeled.is_empty() {
                    None
                } else {
                    Some(genre_accuracy(classifier, &labeled)?)
                };
                Ok((p.clone(), acc))
            })
            .collect()
    }

    /// Per-cell rows: `procedure,target,genre,seed,mse,fitness,evaluations,status`.
    pub fn write_cells_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "procedure",
            "target",
            "genre",
            "seed",
            "mse",
            "fitness",
            "evaluations",
            "status",
        ])?;
        for c in &self.cells {
            let id = &self.targets[c.target].id;
            match &c.outcome {
                Ok(o) => w.write_record([
                    c.procedure.as_str(),
                    id,
                    c.genre.name(),
                    &c.seed.to_string(),
                    &o.mse.to_string(),
                    &o.fitness.to_string(),
                    &o.evaluations.to_string(),
                    "ok",
                ])?,
                Err(e) => w.write_record([
                    c.procedure.as_str(),
                    id,
                    c.genre.name(),
                    &c.seed.to_string(),
                    "",
                    "",
                    "",
                    &format!("error: {e}"),
                ])?,
            }
        }
        w.flush()?;
        Ok(())
    }

    /// One row per procedure: `procedure,average_mse_x1e3,evaluations_per_run,failures`.
    pub fn write_mse_table<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "procedure",
            "average_mse_x1e3",
            "evaluations_per_run",
            "failures",
        ])?;
        for p in &self.procedures {
            let avg = self
                .average_mse(p)
                .map_or("error".to_string(), |m| (m * 1e3).to_string());
            let evals = self
                .cells_for(p)
                .find_map(|c| c.outcome.as_ref().ok().map(|o| o.evaluations.to_string()))
                .unwrap_or_default();
            let failed = self.cells_for(p).filter(|c| c.outcome.is_err()).count();
            w.write_record([p.as_str(), &avg, &evals, &failed.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// One row per procedure: `procedure,genre_accuracy`.
    pub fn write_genre_table<W: Write>(
        &self,
        classifier: &GenreClassifier,
        out: W,
    ) -> Result<(), EvalError> {
        let rows = self.genre_accuracies(classifier)?;
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| EvalError::Config(e.to_string());
        w.write_record(["procedure", "genre_accuracy"])
            .map_err(io)?;
        for (p, acc) in rows {
            let acc = acc.map_or("error".to_string(), |a| a.to_string());
            w.write_record([p.as_str(), &acc]).map_err(io)?;
        }
        w.flush().map_err(|e| EvalError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn save_tables(
        &self,
        dir: &Path,
        classifier: Option<&GenreClassifier>,
    ) -> Result<(), EvalError> {
        let create = |name: &str| {
            std::fs::File::create(dir.join(name))
                .map(std::io::BufWriter::new)
                .map_err(|e| EvalError::Config(format!("{}: {e}", dir.join(name).display())))
        };
        let csv_err = |e: csv::Error| EvalError::Config(e.to_string());
        self.write_cells_csv(create("benchmark_runs.csv")?)
            .map_err(csv_err)?;
        self.write_mse_table(create("table_mse.csv")?)
            .map_err(csv_err)?;
        if let Some(c) = classifier {
            self.write_genre_table(c, create("table_genre.csv")?)?;
        }
        Ok(())
    }
}

/// The first `per_genre` test examples of each genre, in genre order.
pub fn pick_targets(test: &[PairedExample], per_genre: usize) -> Vec<BenchmarkTarget> {
    let mut targets = Vec::new();
    for genre in Genre::ALL {
        let picked: Vec<_> = test
            .iter()
            .filter(|e| e.genre == genre)
            .take(per_genre)
            .collect();
        if picked.len() < per_genre {
            log::warn!("only {} test targets for {genre}", picked.len());
        }
        targets.extend(picked.into_iter().map(|e| BenchmarkTarget {
            id: e.cover_id.clone(),
            features: e.features,
            genre,
        }));
    }
    targets
}

/// Runs every procedure on every target. All procedures for one target share
/// that target's seed, so gradient methods start from the same latent code.
/// A failing run is recorded in its cell and does not stop the table.
pub fn benchmark_optimizers(
    generator: &Generator,
    predictor: &FeaturePredictor,
    targets: &[BenchmarkTarget],
    roster: &[Procedure],
    master_seed: u64,
) -> Result<BenchmarkResult, EvalError> {
    if targets.is_empty() {
        return Err(EvalError::Empty("target list"));
    }
    if roster.is_empty() {
        return Err(EvalError::Empty("procedure roster"));
    }
    let jobs: Vec<(usize, usize)> = (0..targets.len())
        .flat_map(|t| (0..roster.len()).map(move |p| (t, p)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(t, p)| {
            let target = &targets[t];
            let seed = rng::derive_seed(master_seed, &[rng::stream::BENCHMARK, t as u64]);
            let procedure = roster[p].with_seed(seed);
            let genre = generator.is_conditional().then_some(target.genre);
            let outcome = run_cell(generator, predictor, genre, target, &procedure);
            if let Err(e) = &outcome {
                log::warn!("{} on target {}: {e}", procedure.label(), target.id);
            }
            BenchmarkCell {
                procedure: procedure.label(),
                target: t,
                genre: target.genre,
                seed,
                outcome,
            }
        })
        .collect();
    Ok(BenchmarkResult {
        master_seed,
        procedures: roster.iter().map(Procedure::label).collect(),
        targets: targets.to_vec(),
        cells,
    })
}

fn run_cell(
    generator: &Generator,
    predictor: &FeaturePredictor,
    genre: Option<Genre>,
    target: &BenchmarkTarget,
    procedure: &Procedure,
) -> Result<CellOutcome, String> {
    let f = FitnessFunction::new(generator, predictor, genre, target.features)
        .map_err(|e| e.to_string())?;
    let (best, trace) = procedure.run(&f).map_err(|e| e.to_string())?;
    let cover = generator
        .generate(&best, genre)
        .map_err(|e| e.to_string())?;
    let predicted = predictor
        .predict_features(&cover)
        .map_err(|e| e.to_string())?;
    Ok(CellOutcome {
        mse: mse(&predicted, &target.features),
        fitness: trace.best_fitness().expect("successful run"),
        evaluations: trace.evaluations(),
        best,
        cover,
    })
}
