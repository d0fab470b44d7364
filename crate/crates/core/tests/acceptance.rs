//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any fails. The desk-scale experiments (criteria 4,
//! 5, 6 and 8) train full-size models and take tens of minutes on one core.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use coverart::cli::config::{RunConfig, RESOLVED_CONFIG};
use coverart::dataset::{
    load_manifest, split, write_manifest, FeatureBounds, PairedExample, SyntheticWorld, WorldConfig,
};
use coverart::eval::{
    benchmark_optimizers, default_roster, feature_sweep, frechet_distance, genre_accuracy,
    pick_targets, spearman, train_genre_classifier, BenchmarkResult, ClassifierConfig,
    GaussianSummary, GenreClassifier,
};
use coverart::fitness::{
    feature_index, train_fitness_with_validation, AudioFeatures, FeatureDiscriminator,
    FeaturePredictor, FitnessFunction, FitnessTrainConfig, PredictorConfig, FEATURE_COUNT,
};
use coverart::generator::{sample_latent, Generator, GeneratorConfig, LatentCode};
use coverart::image::CoverImage;
use coverart::numerics::{finite_difference_grad, relative_error, OptimizerKind, Tensor};
use coverart::optimizers::{ceil_count, run_ga, run_gd, GaConfig, GdConfig, Quadratic};
use coverart::rng;
use rand::Rng;

const MASTER_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const SWEEP_FEATURE: &str = "danceability";

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn random_features<R: Rng>(r: &mut R) -> AudioFeatures {
    let mut v = [0.0; FEATURE_COUNT];
    for x in &mut v {
        *x = r.random::<f64>();
    }
    AudioFeatures::new(v).unwrap()
}

fn gradient_check() -> Verdict {
    let start = Instant::now();
    let g = Generator::build(GeneratorConfig::default()).unwrap();
    let p = FeaturePredictor::new(PredictorConfig::default()).unwrap();
    let mut r = rng::seeded(101);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let target = random_features(&mut r);
        let f = FitnessFunction::new(&g, &p, None, target).unwrap();
        let z = sample_latent(&mut r, 32);
        let analytic = f.gradient(&z).unwrap();
        let fd = finite_difference_grad(
            |t| {
                f.value(&LatentCode::new(t.data().to_vec()).unwrap())
                    .unwrap()
            },
            &Tensor::vector(z.as_slice().to_vec()).unwrap(),
            1e-6,
        )
        .unwrap();
        worst = worst.max(relative_error(&analytic, fd.data()));
    }
    let secs = start.elapsed().as_secs_f64();
    Verdict::new(
        worst < 1e-5 && secs < 30.0,
        format!("50 pairs at d=32, worst relative error {worst:.2e}, {secs:.1}s"),
    )
}

fn ga_invariants() -> Verdict {
    let g = Generator::build(GeneratorConfig {
        latent_dim: 16,
        image_size: 8,
        hidden: vec![32, 64],
        ..Default::default()
    })
    .unwrap();
    let p = FeaturePredictor::new(PredictorConfig {
        image_size: 8,
        hidden: vec![32, 16],
        seed: 5,
    })
    .unwrap();
    let max_threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut r = rng::seeded(202);
    let mut problems = Vec::new();
    for seed in 0..20u64 {
        let cfg = GaConfig {
            population_size: r.random_range(10..=120),
            mutation_rate: r.random_range(0.01..0.5),
            selection_fraction: r.random_range(0.05..0.9),
            mutation_std: r.random_range(0.01..0.5),
            iterations: r.random_range(2..=25),
            seed,
            ..Default::default()
        };
        let f = FitnessFunction::new(&g, &p, None, random_features(&mut r)).unwrap();
        let runs: Vec<_> = [1, 2, max_threads]
            .iter()
            .map(|&t| {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build()
                    .unwrap()
                    .install(|| run_ga(&f, &cfg).map_err(|e| e.error.to_string()))
            })
            .collect();
        let (best, trace) = match &runs[0] {
            Ok(v) => v,
            Err(e) => {
                problems.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        let mutated = ceil_count(cfg.mutation_rate, cfg.population_size);
        let rows = trace.rows();
        if rows.len() != cfg.iterations {
            problems.push(format!("seed {seed}: {} trace rows", rows.len()));
        }
        if rows.iter().any(|row| row.population != cfg.population_size) {
            problems.push(format!("seed {seed}: population size changed"));
        }
        if rows.iter().any(|row| row.mutated != mutated) {
            problems.push(format!(
                "seed {seed}: mutation count differs from {mutated}"
            ));
        }
        if rows
            .windows(2)
            .any(|w| w[1].best_fitness < w[0].best_fitness)
        {
            problems.push(format!("seed {seed}: best-ever fitness decreased"));
        }
        if f.value(best).unwrap() != trace.best_fitness().unwrap() {
            problems.push(format!(
                "seed {seed}: returned point does not carry the best fitness"
            ));
        }
        for other in &runs[1..] {
            match other {
                Ok((b, t)) if b == best && t == trace => {}
                _ => problems.push(format!("seed {seed}: result depends on thread count")),
            }
        }
    }
    let detail = if problems.is_empty() {
        format!("20 seeds/configs, threads 1/2/{max_threads}")
    } else {
        problems.join("; ")
    };
    Verdict::new(problems.is_empty(), detail)
}

fn convex_oracle() -> Verdict {
    let start = Instant::now();
    let d = 8;
    let q = Quadratic::new(vec![1.0; d]);
    let ga = GaConfig {
        population_size: 50,
        iterations: 100,
        seed: 3,
        ..Default::default()
    };
    let ga_best = run_ga(&q, &ga).unwrap().1.best_fitness().unwrap();
    let adam = GdConfig {
        kind: OptimizerKind::Adam,
        learning_rate: 0.001,
        iterations: 400,
        ..Default::default()
    };
    let adam_best = run_gd(&q, &adam, LatentCode::zeros(d))
        .unwrap()
        .1
        .best_fitness()
        .unwrap();
    let secs = start.elapsed().as_secs_f64();
    Verdict::new(
        ga_best > -1e-2 && adam_best > -1e-2 && secs < 60.0,
        format!(
            "z*=1, d=8: GA(N=50, 100 iters) {ga_best:.3e}, Adam(0.001, 400 iters from 0) {adam_best:.3e}, {secs:.1}s"
        ),
    )
}

/// Everything one master seed contributes to criteria 4, 5, 6 and 8.
struct SeedRun {
    seed: u64,
    bench: BenchmarkResult,
    bench_secs: f64,
    classifier_accuracy: f64,
    genre: Vec<(String, f64)>,
    sweep_rho: Option<f64>,
    frechet: Option<(f64, f64)>,
}

fn world_for(seed: u64) -> (SyntheticWorld, Generator) {
    let gen_cfg = GeneratorConfig {
        seed,
        ..Default::default()
    };
    let world = SyntheticWorld::build(WorldConfig {
        seed,
        base_generator: Some(gen_cfg.clone()),
        ..Default::default()
    })
    .unwrap();
    (world, Generator::build(gen_cfg).unwrap())
}

fn predicted_vs_true_frechet(pred: &FeaturePredictor, val: &[PairedExample]) -> f64 {
    let covers: Vec<CoverImage> = val.iter().map(|e| e.cover.clone()).collect();
    let predicted: Vec<Vec<f64>> = pred
        .predict_batch(&covers)
        .unwrap()
        .iter()
        .map(|f| f.values().to_vec())
        .collect();
    let truth: Vec<Vec<f64>> = val.iter().map(|e| e.features.values().to_vec()).collect();
    frechet_distance(
        &GaussianSummary::from_samples(&predicted).unwrap(),
        &GaussianSummary::from_samples(&truth).unwrap(),
    )
    .unwrap()
}

fn run_seed(seed: u64, with_lambda_pair: bool) -> SeedRun {
    let start = Instant::now();
    let (world, generator) = world_for(seed);
    let data = world
        .synth_dataset(1000, &mut rng::derived(seed, &[rng::stream::DATASET]))
        .unwrap();
    let (train, test) = split(data, 0.15, seed).unwrap();
    let fit_cfg = FitnessTrainConfig {
        seed,
        ..Default::default()
    };
    let trained = train_fitness_with_validation(&train, &test, &fit_cfg).unwrap();
    let predictor = trained.predictor;
    let targets = pick_targets(&test, 2);
    let ga = GaConfig {
        seed,
        ..Default::default()
    };
    let bench = benchmark_optimizers(
        &generator,
        &predictor,
        &targets,
        &default_roster(&ga, 400),
        seed,
    )
    .unwrap();
    let bench_secs = start.elapsed().as_secs_f64();
    eprintln!("  seed {seed}: trained and benchmarked in {bench_secs:.0}s");

    let (clf, _) = train_genre_classifier(
        &train,
        &ClassifierConfig {
            seed,
            ..Default::default()
        },
    )
    .unwrap();
    let held_out: Vec<_> = test.iter().map(|e| (e.cover.clone(), e.genre)).collect();
    let classifier_accuracy = genre_accuracy(&clf, &held_out).unwrap();
    let genre = bench
        .genre_accuracies(&clf)
        .unwrap()
        .into_iter()
        .map(|(p, a)| (p, a.unwrap_or(f64::NAN)))
        .collect();

    let steps = feature_sweep(
        &generator,
        &predictor,
        &targets[0].features,
        SWEEP_FEATURE,
        11,
        None,
        &ga,
    )
    .unwrap();
    let dim = feature_index(SWEEP_FEATURE).unwrap();
    let xs: Vec<f64> = steps.iter().map(|s| s.value).collect();
    let ys: Vec<f64> = steps.iter().map(|s| s.predicted.get(dim)).collect();
    let sweep_rho = spearman(&xs, &ys);

    let frechet = with_lambda_pair.then(|| {
        let plain = train_fitness_with_validation(
            &train,
            &test,
            &FitnessTrainConfig {
                lambda: 0.0,
                ..fit_cfg.clone()
            },
        )
        .unwrap();
        (
            predicted_vs_true_frechet(&predictor, &test),
            predicted_vs_true_frechet(&plain.predictor, &test),
        )
    });
    eprintln!(
        "  seed {seed}: done in {:.0}s",
        start.elapsed().as_secs_f64()
    );
    SeedRun {
        seed,
        bench,
        bench_secs,
        classifier_accuracy,
        genre,
        sweep_rho,
        frechet,
    }
}

fn table3_ordering(runs: &[SeedRun]) -> Verdict {
    let mut wins = 0;
    let mut lines = Vec::new();
    let mut slow = false;
    for run in runs {
        let ga_label = &run.bench.procedures[0];
        let avg = |p: &str| run.bench.average_mse(p).unwrap_or(f64::INFINITY);
        let ga = avg(ga_label);
        let win =
            run.bench.failures() == 0 && run.bench.procedures[1..].iter().all(|p| ga < avg(p));
        wins += usize::from(win);
        slow |= run.bench_secs >= 600.0;
        let cells: Vec<String> = run
            .bench
            .procedures
            .iter()
            .map(|p| format!("{p} {:.2}", avg(p) * 1e3))
            .collect();
        lines.push(format!(
            "seed {}: {} [{}] ({:.0}s)",
            run.seed,
            if win { "GA lowest" } else { "GA not lowest" },
            cells.join(", "),
            run.bench_secs
        ));
    }
    Verdict::new(
        wins >= 4 && !slow,
        format!("{wins}/5 seeds; MSE x1e-3: {}", lines.join("; ")),
    )
}

fn table4_ordering(runs: &[SeedRun]) -> Verdict {
    let mut wins = 0;
    let mut lines = Vec::new();
    let mut classifier_ok = true;
    for run in runs {
        classifier_ok &= run.classifier_accuracy > 0.4;
        let ga = run.genre[0].1;
        let win = run.genre[1..].iter().all(|(_, a)| ga >= *a);
        wins += usize::from(win);
        let cells: Vec<String> = run
            .genre
            .iter()
            .map(|(p, a)| format!("{p} {a:.2}"))
            .collect();
        lines.push(format!(
            "seed {}: classifier {:.3}, [{}]",
            run.seed,
            run.classifier_accuracy,
            cells.join(", ")
        ));
    }
    Verdict::new(
        wins >= 4 && classifier_ok,
        format!("{wins}/5 seeds GA >= all GD; {}", lines.join("; ")),
    )
}

fn adversarial_effect(runs: &[SeedRun]) -> Verdict {
    match runs.iter().find_map(|r| r.frechet.map(|f| (r.seed, f))) {
        Some((seed, (with, without))) => Verdict::new(
            with < without,
            format!(
                "seed {seed}: Frechet(predicted, true) lambda=9 {with:.5} vs lambda=0 {without:.5}"
            ),
        ),
        None => Verdict::new(false, "no paired run"),
    }
}

fn frechet_properties() -> Verdict {
    let mut problems = Vec::new();
    let mut r = rng::seeded(707);
    let random_summary = |r: &mut rng::SeededRng, d: usize| {
        let n = d + 5 + r.random_range(0..20);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| r.random::<f64>() * 2.0 - 1.0).collect())
            .collect();
        GaussianSummary::from_samples(&rows).unwrap()
    };
    for _ in 0..100 {
        let d = r.random_range(2..=9);
        let p = random_summary(&mut r, d);
        let q = random_summary(&mut r, d);
        let self_d = frechet_distance(&p, &p).unwrap();
        if self_d.abs() >= 1e-9 {
            problems.push(format!("self distance {self_d:e}"));
        }
        let pq = frechet_distance(&p, &q).unwrap();
        let qp = frechet_distance(&q, &p).unwrap();
        if (pq - qp).abs() >= 1e-9 {
            problems.push(format!("asymmetry {:e}", (pq - qp).abs()));
        }
        let alt = alternate_frechet(&p, &q);
        if (pq - alt).abs() >= 1e-8 {
            problems.push(format!("d={d}: {pq} vs alternate {alt}"));
        }
    }
    for (m1, s1, m2, s2) in [
        (0.0, 1.0, 1.0, 1.0),
        (0.3, 0.5, -1.2, 2.0),
        (2.0, 3.0, 2.0, 0.25),
    ] {
        let a = GaussianSummary::new(vec![m1], vec![s1 * s1]).unwrap();
        let b = GaussianSummary::new(vec![m2], vec![s2 * s2]).unwrap();
        let got = frechet_distance(&a, &b).unwrap();
        let want = (m1 - m2) * (m1 - m2) + (s1 - s2) * (s1 - s2);
        if (got - want).abs() >= 1e-12 {
            problems.push(format!("1-dim {got} vs {want}"));
        }
    }
    let detail = if problems.is_empty() {
        "identity, 1-dim closed form, symmetry, 100 alternate-formula cases".to_string()
    } else {
        problems.join("; ")
    };
    Verdict::new(problems.is_empty(), detail)
}

/// Trace term through the eigenvalues of `Σ₁Σ₂`: `Tr((Σ₁Σ₂)^{1/2}) = Σ √λᵢ`.
fn alternate_frechet(p: &GaussianSummary, q: &GaussianSummary) -> f64 {
    let d = p.dim();
    let a = nalgebra::DMatrix::from_row_slice(d, d, p.cov());
    let b = nalgebra::DMatrix::from_row_slice(d, d, q.cov());
    let root_trace: f64 = (&a * &b)
        .complex_eigenvalues()
        .iter()
        .map(|l| l.sqrt().re)
        .sum();
    let mean: f64 = p
        .mean()
        .iter()
        .zip(q.mean())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    mean + a.trace() + b.trace() - 2.0 * root_trace
}

fn sweep_correlation(runs: &[SeedRun]) -> Verdict {
    let positive = runs
        .iter()
        .filter(|r| r.sweep_rho.is_some_and(|rho| rho > 0.0))
        .count();
    let rhos: Vec<String> = runs
        .iter()
        .map(|r| {
            format!(
                "seed {}: {}",
                r.seed,
                r.sweep_rho
                    .map_or("undefined".into(), |v| format!("{v:.3}"))
            )
        })
        .collect();
    Verdict::new(
        positive >= 4,
        format!(
            "{SWEEP_FEATURE}: {positive}/5 seeds with Spearman > 0 ({})",
            rhos.join(", ")
        ),
    )
}

const SMALL_CONFIG: &str = r#"
latent_dim = 8
image_size = 8

[generator]
hidden = [16, 32]

[world]
n_per_genre = 20

[fitness]
epochs = 5
batch_size = 16
hidden = [16, 8]

[classifier]
epochs = 5
hidden = [8]

[ga]
population_size = 20
iterations = 10

[gd]
iterations = 20
"#;

fn coverart(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_coverart"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

fn tree_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path
                    .strip_prefix(dir)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

// The resolved config records the run directory itself, which necessarily
// differs between the two reruns; everything else in it must match.
fn resolved_without_out(
    mut files: Vec<(String, Vec<u8>)>,
) -> Result<Vec<(String, Vec<u8>)>, String> {
    for (name, bytes) in &mut files {
        if name == RESOLVED_CONFIG {
            let mut cfg: RunConfig =
                toml::from_str(&String::from_utf8_lossy(bytes)).map_err(|e| e.to_string())?;
            cfg.out = None;
            *bytes = toml::to_string(&cfg)
                .map_err(|e| e.to_string())?
                .into_bytes();
        }
    }
    Ok(files)
}

fn benchmark_rerun() -> Result<String, String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = tmp.path();
    let config = root.join("small.toml");
    fs::write(&config, SMALL_CONFIG).map_err(|e| e.to_string())?;
    let config = config.to_string_lossy().into_owned();
    let at = |name: &str| root.join(name).to_string_lossy().into_owned();
    coverart(&[
        "synth-data",
        "--config",
        &config,
        "--seed",
        "9",
        "--out",
        &at("data"),
    ])?;
    let manifest = format!("{}/manifest.csv", at("data"));
    coverart(&[
        "train-fitness",
        "--config",
        &config,
        "--seed",
        "9",
        "--manifest",
        &manifest,
        "--out",
        &at("fit"),
    ])?;
    let predictor = format!("{}/predictor.bin", at("fit"));
    for name in ["a", "b"] {
        coverart(&[
            "benchmark",
            "--config",
            &config,
            "--seed",
            "9",
            "--manifest",
            &manifest,
            "--predictor",
            &predictor,
            "--out",
            &at(name),
        ])?;
    }
    let (a, b) = (
        resolved_without_out(tree_files(&root.join("a")))?,
        resolved_without_out(tree_files(&root.join("b")))?,
    );
    let csvs = a.iter().filter(|(n, _)| n.ends_with(".csv")).count();
    let images = a.iter().filter(|(n, _)| n.ends_with(".ppm")).count();
    if csvs == 0 || images == 0 {
        return Err(format!("benchmark wrote {csvs} CSVs and {images} images"));
    }
    if a != b {
        let differing: Vec<_> = a
            .iter()
            .filter(|f| !b.contains(f))
            .map(|(n, _)| n.clone())
            .collect();
        return Err(format!("reruns differ in {differing:?}"));
    }
    Ok(format!(
        "{csvs} CSVs and {images} covers byte-identical across reruns"
    ))
}

fn reproducibility() -> Verdict {
    match benchmark_rerun() {
        Ok(detail) => Verdict::new(true, detail),
        Err(e) => Verdict::new(false, e),
    }
}

fn round_trips() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let mut problems = Vec::new();

    let world = SyntheticWorld::build(WorldConfig {
        seed: 11,
        latent_dim: 8,
        image_size: 8,
        hidden: vec![16, 32],
        ..Default::default()
    })
    .unwrap();
    let mut rows = world.synth_dataset(2, &mut rng::seeded(4)).unwrap();
    rows.truncate(10);
    let bounds = FeatureBounds::default();
    let path = write_manifest(&tmp.path().join("manifest"), &rows, &bounds).unwrap();
    let loaded = load_manifest(&path, 8, &bounds).unwrap();
    let worst = rows
        .iter()
        .zip(&loaded)
        .flat_map(|(a, b)| {
            (0..FEATURE_COUNT).map(move |i| (a.features.get(i) - b.features.get(i)).abs())
        })
        .fold(0.0f64, f64::max);
    if loaded.len() != rows.len() || worst >= 1e-9 {
        problems.push(format!(
            "manifest: {} rows back, worst feature error {worst:e}",
            loaded.len()
        ));
    }

    let mut r = rng::seeded(5);
    let gen = Generator::build(GeneratorConfig {
        latent_dim: 8,
        image_size: 8,
        hidden: vec![16, 32],
        conditional: true,
        seed: 3,
    })
    .unwrap();
    let zs: Vec<_> = (0..6).map(|_| sample_latent(&mut r, 8)).collect();
    let genre = Some(coverart::generator::Genre::Kids);
    let gpath = tmp.path().join("generator.bin");
    gen.save(&gpath).unwrap();
    let gen_back = Generator::load(&gpath).unwrap();
    if gen_back.generate_batch(&zs, genre).unwrap() != gen.generate_batch(&zs, genre).unwrap() {
        problems.push("generator outputs changed".into());
    }

    let covers = gen.generate_batch(&zs, genre).unwrap();
    let pred = FeaturePredictor::new(PredictorConfig {
        image_size: 8,
        hidden: vec![16, 8],
        seed: 2,
    })
    .unwrap();
    let ppath = tmp.path().join("predictor.bin");
    pred.save(&ppath).unwrap();
    let pred_back = FeaturePredictor::load(&ppath).unwrap();
    if pred_back.predict_batch(&covers).unwrap() != pred.predict_batch(&covers).unwrap() {
        problems.push("predictor outputs changed".into());
    }

    let disc = FeatureDiscriminator::new(8);
    let dpath = tmp.path().join("discriminator.bin");
    disc.save(&dpath).unwrap();
    let disc_back = FeatureDiscriminator::load(&dpath).unwrap();
    let f = random_features(&mut r);
    if disc_back.score(&f).unwrap().to_bits() != disc.score(&f).unwrap().to_bits() {
        problems.push("discriminator output changed".into());
    }

    let clf = GenreClassifier::new(8, &[8], 6).unwrap();
    let cpath = tmp.path().join("classifier.bin");
    clf.save(&cpath).unwrap();
    let clf_back = GenreClassifier::load(&cpath).unwrap();
    for c in &covers {
        if clf_back.probabilities(c).unwrap() != clf.probabilities(c).unwrap() {
            problems.push("classifier outputs changed".into());
            break;
        }
    }

    let detail = if problems.is_empty() {
        format!("manifest worst error {worst:.1e}; generator, predictor, discriminator, classifier bitwise")
    } else {
        problems.join("; ")
    };
    Verdict::new(problems.is_empty(), detail)
}

fn main() -> ExitCode {
    let mut verdicts: Vec<(usize, &str, Verdict)> = Vec::new();
    let mut report = |n: usize, name: &'static str, v: Verdict| {
        println!(
            "criterion {n:>2} {}: {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        verdicts.push((n, name, v));
    };
    report(1, "gradient vs finite differences", gradient_check());
    report(2, "GA invariants", ga_invariants());
    report(3, "convex-oracle convergence", convex_oracle());

    eprintln!("running the desk-scale experiments for seeds {MASTER_SEEDS:?}");
    let runs: Vec<SeedRun> = MASTER_SEEDS
        .iter()
        .map(|&s| run_seed(s, s == MASTER_SEEDS[0]))
        .collect();
    report(4, "optimizer MSE ordering", table3_ordering(&runs));
    report(5, "genre accuracy ordering", table4_ordering(&runs));
    report(
        6,
        "adversarial regularization effect",
        adversarial_effect(&runs),
    );
    report(7, "Frechet metric properties", frechet_properties());
    report(8, "feature sweep correlation", sweep_correlation(&runs));
    report(9, "benchmark reproducibility", reproducibility());
    report(10, "round-trips", round_trips());

    let failed = verdicts.iter().filter(|(_, _, v)| !v.pass).count();
    println!(
        "{} of {} criteria passed",
        verdicts.len() - failed,
        verdicts.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
