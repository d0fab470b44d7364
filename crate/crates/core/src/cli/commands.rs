use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};

use super::config::{RunConfig, RESOLVED_CONFIG};
use super::UsageError;
use crate::dataset::{load_manifest, split, write_manifest, PairedExample, SyntheticWorld};
use crate::eval::{
    album_batch, benchmark_optimizers, feature_sweep, genre_accuracy, mse, pick_targets, roster,
    spearman, train_genre_classifier, GenreClassifier,
};
use crate::fitness::{
    feature_index, AudioFeatures, FeaturePredictor, FitnessFunction, FEATURE_COUNT, FEATURE_NAMES,
};
use crate::generator::{Generator, Genre};
use crate::image::{montage, CoverImage};
use crate::numerics::OptimizerKind;
use crate::optimizers::{run_ga, run_gd_sampled, GdConfig, Method};
use crate::rng;

/// Creates the run directory and records the resolved config in it.
fn prepare_out(cfg: &RunConfig) -> anyhow::Result<PathBuf> {
    let out = cfg.out_dir();
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join(RESOLVED_CONFIG);
    fs::write(&path, cfg.to_toml()?).with_context(|| format!("writing {}", path.display()))?;
    log::info!("run directory {}", out.display());
    Ok(out)
}

fn parse_genre(text: Option<&str>) -> anyhow::Result<Option<Genre>> {
    text.map(|t| {
        t.parse::<Genre>()
            .map_err(|e| UsageError(e.to_string()).into())
    })
    .transpose()
}

fn parse_features(text: &str) -> anyhow::Result<AudioFeatures> {
    AudioFeatures::parse_list(text).map_err(|e| UsageError(e.to_string()).into())
}

fn load_predictor(cfg: &RunConfig) -> anyhow::Result<FeaturePredictor> {
    let path = &cfg.paths.predictor;
    if !path.exists() {
        bail!(
            "predictor weights not found at {}; run `coverart train-fitness` first or pass --predictor <path>",
            path.display()
        );
    }
    FeaturePredictor::load(path).with_context(|| format!("loading predictor {}", path.display()))
}

fn load_generator(cfg: &RunConfig, predictor: &FeaturePredictor) -> anyhow::Result<Generator> {
    let generator = match &cfg.paths.generator {
        Some(path) => Generator::load(path)
            .with_context(|| format!("loading generator {}", path.display()))?,
        None => Generator::build(cfg.generator_config())?,
    };
    if generator.image_size() != predictor.image_size() {
        bail!(
            "generator makes {0}x{0} images but the predictor expects {1}x{1}; set --image-size {1}",
            generator.image_size(),
            predictor.image_size()
        );
    }
    Ok(generator)
}

fn load_examples(cfg: &RunConfig) -> anyhow::Result<Vec<PairedExample>> {
    let Some(path) = &cfg.paths.manifest else {
        return Err(UsageError("no manifest given; pass --manifest <path>".into()).into());
    };
    let data = load_manifest(path, cfg.image_size, &cfg.feature_bounds())
        .with_context(|| format!("loading manifest {}", path.display()))?;
    log::info!("loaded {} examples from {}", data.len(), path.display());
    Ok(data)
}

/// The genre to condition on: required by a conditional generator, ignored
/// otherwise.
fn search_genre(generator: &Generator, genre: Option<Genre>) -> anyhow::Result<Option<Genre>> {
    match (generator.is_conditional(), genre) {
        (true, None) => Err(UsageError(format!(
            "the generator is genre-conditional; pass --genre (one of: {})",
            Genre::ALL.map(Genre::name).join(", ")
        ))
        .into()),
        (true, g) => Ok(g),
        (false, _) => Ok(None),
    }
}

fn slug(label: &str) -> String {
    label
        .chars()
        .filter_map(|c| match c {
            c if c.is_ascii_alphanumeric() => Some(c.to_ascii_lowercase()),
            '.' | ' ' => Some('_'),
            _ => None,
        })
        .collect()
}

pub fn synth_data(cfg: &RunConfig) -> anyhow::Result<()> {
    let out = prepare_out(cfg)?;
    let world = SyntheticWorld::build(cfg.world_config())?;
    let mut r = rng::derived(cfg.seed, &[rng::stream::DATASET]);
    let data = world.synth_dataset(cfg.world.n_per_genre, &mut r)?;
    let manifest = write_manifest(&out, &data, &cfg.feature_bounds())?;
    log::info!(
        "wrote {} examples ({} per genre) to {}",
        data.len(),
        cfg.world.n_per_genre,
        manifest.display()
    );
    Ok(())
}

pub fn train_fitness(cfg: &RunConfig) -> anyhow::Result<()> {
    let data = load_examples(cfg)?;
    let out = prepare_out(cfg)?;
    if cfg.fitness.epochs == 0 {
        log::warn!("epochs = 0: saving the initialized predictor untrained");
    }
    let trained = crate::fitness::train_fitness(data, &cfg.fitness)?;
    trained.predictor.save(&out.join("predictor.bin"))?;
    trained.discriminator.save(&out.join("discriminator.bin"))?;
    trained.log.save_csv(&out.join("training_log.csv"))?;
    log::info!(
        "validation MSE {:.6} (initial {:.6})",
        trained.log.final_val_mse(),
        trained.log.initial_val_mse
    );
    Ok(())
}

pub fn optimize(cfg: &RunConfig) -> anyhow::Result<()> {
    let o = &cfg.optimize;
    let (target, row_genre) = match (&o.features, o.row) {
        (Some(text), _) => (parse_features(text)?, None),
        (None, Some(row)) => {
            let data = load_examples(cfg)?;
            let ex = row
                .checked_sub(1)
                .and_then(|i| data.get(i))
                .ok_or_else(|| UsageError(format!("row {row} is outside 1..={}", data.len())))?;
            (ex.features, Some(ex.genre))
        }
        (None, None) => {
            return Err(UsageError(format!(
                "give a target with --features <{}> or --row <n>",
                FEATURE_NAMES.join(",")
            ))
            .into())
        }
    };
    let predictor = load_predictor(cfg)?;
    let generator = load_generator(cfg, &predictor)?;
    let genre = search_genre(&generator, parse_genre(o.genre.as_deref())?.or(row_genre))?;
    let out = prepare_out(cfg)?;

    let f = FitnessFunction::new(&generator, &predictor, genre, target)?;
    let result = match o.method {
        Method::Ga => run_ga(&f, &cfg.ga),
        Method::Adam | Method::RmsProp => {
            let kind = if o.method == Method::Adam {
                OptimizerKind::Adam
            } else {
                OptimizerKind::RmsProp
            };
            let gd = GdConfig {
                kind,
                learning_rate: o.learning_rate,
                iterations: cfg.gd.iterations,
                seed: cfg.seed,
                restarts: cfg.gd.restarts,
            };
            run_gd_sampled(&f, &gd)
        }
    };
    let (best, trace) = match result {
        Ok(r) => r,
        Err(aborted) => {
            aborted.trace.save_csv(&out.join("trace.csv"))?;
            return Err(aborted.into());
        }
    };
    trace.save_csv(&out.join("trace.csv"))?;
    let cover = generator.generate(&best, genre)?;
    cover.save(&out.join("cover.ppm"))?;
    if o.png {
        cover.save(&out.join("cover.png"))?;
    }
    let predicted = predictor.predict_features(&cover)?;
    log::info!(
        "best fitness {:.6}, MSE {:.6} after {} evaluations",
        trace.best_fitness().expect("successful run"),
        mse(&predicted, &target),
        trace.evaluations()
    );
    Ok(())
}

fn classifier_for(
    cfg: &RunConfig,
    train: &[PairedExample],
    test: &[PairedExample],
    out: &Path,
) -> anyhow::Result<GenreClassifier> {
    let clf = match &cfg.paths.classifier {
        Some(path) if path.exists() => GenreClassifier::load(path)
            .with_context(|| format!("loading classifier {}", path.display()))?,
        _ => {
            log::info!("training genre classifier on {} covers", train.len());
            let (clf, _) = train_genre_classifier(train, &cfg.classifier)?;
            clf.save(&out.join("classifier.bin"))?;
            clf
        }
    };
    let labeled: Vec<(CoverImage, Genre)> =
        test.iter().map(|e| (e.cover.clone(), e.genre)).collect();
    let acc = genre_accuracy(&clf, &labeled)?;
    log::info!("classifier held-out accuracy {acc:.4}");
    fs::write(
        out.join("classifier_accuracy.csv"),
        format!("split,examples,accuracy\ntest,{},{acc}\n", labeled.len()),
    )?;
    Ok(clf)
}

pub fn benchmark(cfg: &RunConfig) -> anyhow::Result<()> {
    let data = load_examples(cfg)?;
    let predictor = load_predictor(cfg)?;
    let generator = load_generator(cfg, &predictor)?;
    let out = prepare_out(cfg)?;
    let (train, test) = split(data, cfg.fitness.validation_fraction, cfg.seed)?;
    let targets = pick_targets(&test, cfg.benchmark.targets_per_genre);
    if targets.is_empty() {
        bail!("the test split has no targets");
    }
    let clf = classifier_for(cfg, &train, &test, &out)?;
    let procedures = roster(
        &cfg.ga,
        cfg.gd.iterations,
        &cfg.gd.learning_rates,
        cfg.gd.restarts,
    );
    log::info!(
        "benchmarking {} procedures on {} targets",
        procedures.len(),
        targets.len()
    );
    let result = benchmark_optimizers(&generator, &predictor, &targets, &procedures, cfg.seed)?;
    result.save_tables(&out, Some(&clf))?;
    let covers = out.join("covers");
    fs::create_dir_all(&covers)?;
    for cell in &result.cells {
        if let Ok(o) = &cell.outcome {
            let name = format!("target{:02}_{}.ppm", cell.target, slug(&cell.procedure));
            o.cover.save(&covers.join(name))?;
        }
    }
    for p in &result.procedures {
        match result.average_mse(p) {
            Some(m) => log::info!("{p}: average MSE {:.4} x1e-3", m * 1e3),
            None => log::info!("{p}: every run failed"),
        }
    }
    if result.failures() > 0 {
        bail!(
            "{} of {} runs failed; see benchmark_runs.csv",
            result.failures(),
            result.cells.len()
        );
    }
    Ok(())
}

pub fn sweep(cfg: &RunConfig) -> anyhow::Result<()> {
    let s = &cfg.sweep;
    let dim = feature_index(&s.feature).map_err(|e| UsageError(e.to_string()))?;
    let base = match &s.base {
        Some(text) => parse_features(text)?,
        None => AudioFeatures::uniform(0.5)?,
    };
    let predictor = load_predictor(cfg)?;
    let generator = load_generator(cfg, &predictor)?;
    let genre = search_genre(&generator, parse_genre(s.genre.as_deref())?)?;
    let out = prepare_out(cfg)?;
    let steps = feature_sweep(
        &generator, &predictor, &base, &s.feature, s.steps, genre, &cfg.ga,
    )?;

    let mut w = csv::Writer::from_path(out.join("sweep.csv"))?;
    let mut header = vec![s.feature.clone(), "fitness".to_string()];
    header.extend(FEATURE_NAMES.iter().map(|n| format!("predicted_{n}")));
    w.write_record(&header)?;
    for (i, step) in steps.iter().enumerate() {
        let mut row = vec![step.value.to_string(), step.fitness.to_string()];
        row.extend(step.predicted.values().iter().map(f64::to_string));
        w.write_record(&row)?;
        step.cover.save(&out.join(format!("step_{i:02}.ppm")))?;
    }
    w.flush()?;
    let covers: Vec<CoverImage> = steps.iter().map(|s| s.cover.clone()).collect();
    if let Some(strip) = montage(&covers, covers.len(), 2) {
        strip.save(&out.join("sweep.ppm"))?;
    }
    let xs: Vec<f64> = steps.iter().map(|s| s.value).collect();
    let ys: Vec<f64> = steps.iter().map(|s| s.predicted.get(dim)).collect();
    match spearman(&xs, &ys) {
        Some(rho) => log::info!("Spearman({}) = {rho:.3}", s.feature),
        None => log::info!("Spearman({}) undefined: constant predictions", s.feature),
    }
    Ok(())
}

fn read_tracks(path: &Path) -> anyhow::Result<Vec<AudioFeatures>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading tracks {}", path.display()))?;
    let headers = r.headers()?.clone();
    let columns = FEATURE_NAMES
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h == *name)
                .ok_or_else(|| UsageError(format!("{}: missing column '{name}'", path.display())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut tracks = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let mut v = [0.0; FEATURE_COUNT];
        for (slot, &c) in v.iter_mut().zip(&columns) {
            *slot = rec.get(c).unwrap_or("").parse().map_err(|_| {
                UsageError(format!("{}: row {}: bad number", path.display(), i + 1))
            })?;
        }
        tracks.push(
            AudioFeatures::new(v)
                .map_err(|e| UsageError(format!("{}: row {}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(tracks)
}

pub fn album(cfg: &RunConfig) -> anyhow::Result<()> {
    let a = &cfg.album;
    let genre_arg = parse_genre(a.genre.as_deref())?;
    let tracks = match &a.tracks {
        Some(path) => read_tracks(path)?,
        None => {
            let Some(genre) = genre_arg else {
                return Err(UsageError(
                    "pass --tracks <csv>, or --manifest with --genre to draw tracks".into(),
                )
                .into());
            };
            load_examples(cfg)?
                .into_iter()
                .filter(|e| e.genre == genre)
                .take(a.count)
                .map(|e| e.features)
                .collect()
        }
    };
    if tracks.is_empty() {
        bail!("no tracks to generate covers for");
    }
    let predictor = load_predictor(cfg)?;
    let generator = load_generator(cfg, &predictor)?;
    let genre = search_genre(&generator, genre_arg)?;
    let out = prepare_out(cfg)?;
    log::info!("optimizing {} album covers", tracks.len());
    let covers = album_batch(&generator, &predictor, &tracks, genre, &cfg.ga, cfg.seed)?;

    let dir = out.join("covers");
    fs::create_dir_all(&dir)?;
    let mut w = csv::Writer::from_path(out.join("album.csv"))?;
    w.write_record(["track", "cover", "mse"])?;
    for (i, (cover, track)) in covers.iter().zip(&tracks).enumerate() {
        let name = format!("track_{:02}.ppm", i + 1);
        cover.save(&dir.join(&name))?;
        let predicted = predictor.predict_features(cover)?;
        w.write_record([
            (i + 1).to_string(),
            format!("covers/{name}"),
            mse(&predicted, track).to_string(),
        ])?;
    }
    w.flush()?;
    let columns = (covers.len() as f64).sqrt().ceil() as usize;
    if let Some(sheet) = montage(&covers, columns, 2) {
        sheet.save(&out.join("album.ppm"))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs_are_file_safe() {
        assert_eq!(slug("Adam (0.15)"), "adam_0_15");
        assert_eq!(slug("GA"), "ga");
        assert_eq!(slug("RMSprop (0.001)"), "rmsprop_0_001");
    }
}
