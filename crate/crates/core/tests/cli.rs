use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use coverart::dataset::{load_manifest, FeatureBounds, SyntheticWorld};
use coverart::fitness::{FeaturePredictor, PredictorConfig};
use coverart::rng;

const SMALL: &str = r#"
latent_dim = 8
image_size = 8

[generator]
hidden = [16, 32]

[world]
n_per_genre = 10
hidden = [16, 32]
calibration_samples = 64

[fitness]
epochs = 3
batch_size = 16
hidden = [16, 8]

[classifier]
epochs = 3
hidden = [8]

[ga]
population_size = 20
iterations = 5

[gd]
iterations = 10

[benchmark]
targets_per_genre = 1
"#;

fn coverart(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coverart"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = coverart(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

struct Workspace {
    _dir: tempfile::TempDir,
    root: PathBuf,
    config: String,
}

impl Workspace {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        let config = root.join("small.toml");
        fs::write(&config, SMALL).unwrap();
        Self {
            config: config.to_string_lossy().into_owned(),
            root,
            _dir: dir,
        }
    }

    fn path(&self, name: &str) -> String {
        self.root.join(name).to_string_lossy().into_owned()
    }

    /// Synthetic data plus a trained predictor.
    fn trained(&self) -> (String, String) {
        let data = self.path("data");
        ok(&[
            "synth-data",
            "--config",
            &self.config,
            "--seed",
            "3",
            "--out",
            &data,
        ]);
        let manifest = format!("{data}/manifest.csv");
        let fit = self.path("fit");
        ok(&[
            "train-fitness",
            "--config",
            &self.config,
            "--seed",
            "3",
            "--manifest",
            &manifest,
            "--out",
            &fit,
        ]);
        (manifest, format!("{fit}/predictor.bin"))
    }
}

fn csv_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect()
}

#[test]
fn synth_data_writes_reproducible_manifest() {
    let ws = Workspace::new();
    let (a, b) = (ws.path("a"), ws.path("b"));
    ok(&[
        "synth-data",
        "--config",
        &ws.config,
        "--seed",
        "1",
        "--out",
        &a,
    ]);
    ok(&[
        "synth-data",
        "--config",
        &ws.config,
        "--seed",
        "1",
        "--out",
        &b,
    ]);
    let ma = Path::new(&a).join("manifest.csv");
    let rows = csv_rows(&ma);
    assert_eq!(rows.len(), 51);
    assert_eq!(
        fs::read(&ma).unwrap(),
        fs::read(Path::new(&b).join("manifest.csv")).unwrap()
    );
    assert!(Path::new(&a).join("run_config.toml").exists());

    // the loaded manifest matches the in-process dataset
    let cfg: coverart::cli::RunConfig =
        toml::from_str(&fs::read_to_string(Path::new(&a).join("run_config.toml")).unwrap())
            .unwrap();
    let world = SyntheticWorld::build(cfg.world_config()).unwrap();
    let direct = world
        .synth_dataset(10, &mut rng::derived(1, &[rng::stream::DATASET]))
        .unwrap();
    let loaded = load_manifest(&ma, 8, &FeatureBounds::default()).unwrap();
    assert_eq!(loaded.len(), direct.len());
    for (l, d) in loaded.iter().zip(&direct) {
        for i in 0..9 {
            assert!((l.features.get(i) - d.features.get(i)).abs() < 1e-9);
        }
    }
}

#[test]
fn train_fitness_outputs_and_defaults() {
    let ws = Workspace::new();
    let (_, predictor) = ws.trained();
    let fit = Path::new(&predictor).parent().unwrap();
    assert_eq!(csv_rows(&fit.join("training_log.csv")).len(), 4);
    assert!(fit.join("discriminator.bin").exists());
    let resolved = fs::read_to_string(fit.join("run_config.toml")).unwrap();
    assert!(resolved.contains("lambda = 9.0"), "{resolved}");
}

#[test]
fn zero_epochs_saves_initialization() {
    let ws = Workspace::new();
    let data = ws.path("data");
    ok(&["synth-data", "--config", &ws.config, "--out", &data]);
    let out = ws.path("fit0");
    let run = ok(&[
        "train-fitness",
        "--config",
        &ws.config,
        "--seed",
        "4",
        "--epochs",
        "0",
        "--manifest",
        &format!("{data}/manifest.csv"),
        "--out",
        &out,
    ]);
    let _ = run;
    let saved = FeaturePredictor::load(&Path::new(&out).join("predictor.bin")).unwrap();
    let init = FeaturePredictor::new(PredictorConfig {
        image_size: 8,
        hidden: vec![16, 8],
        seed: 4,
    })
    .unwrap();
    assert_eq!(saved.net(), init.net());
    assert_eq!(csv_rows(&Path::new(&out).join("training_log.csv")).len(), 1);
}

#[test]
fn optimize_traces_have_the_configured_length() {
    let ws = Workspace::new();
    let (_, predictor) = ws.trained();
    let features = "0.2,0.4,0.6,0.5,0.7,0.1,0.3,0.2,0.6";
    let ga = ws.path("ga");
    ok(&[
        "optimize",
        "--config",
        &ws.config,
        "--predictor",
        &predictor,
        "--features",
        features,
        "--out",
        &ga,
        "--png",
    ]);
    assert_eq!(csv_rows(&Path::new(&ga).join("trace.csv")).len(), 6);
    assert!(Path::new(&ga).join("cover.ppm").exists());
    assert!(Path::new(&ga).join("cover.png").exists());

    // with no config file the paper defaults apply
    let ga_default = ws.path("ga_default");
    ok(&[
        "optimize",
        "--latent-dim",
        "8",
        "--image-size",
        "8",
        "--predictor",
        &predictor,
        "--features",
        features,
        "--out",
        &ga_default,
    ]);
    assert_eq!(
        csv_rows(&Path::new(&ga_default).join("trace.csv")).len(),
        201
    );

    let adam = ws.path("adam");
    ok(&[
        "optimize",
        "--latent-dim",
        "8",
        "--image-size",
        "8",
        "--predictor",
        &predictor,
        "--features",
        features,
        "--method",
        "adam",
        "--lr",
        "0.15",
        "--out",
        &adam,
    ]);
    let rows = csv_rows(&Path::new(&adam).join("trace.csv"));
    assert_eq!(rows.len(), 401);
    assert_eq!(rows[0], "iteration,best_fitness,mean_fitness,evaluations");
}

#[test]
fn usage_errors() {
    let ws = Workspace::new();
    let (_, predictor) = ws.trained();
    let out = coverart(&[
        "optimize",
        "--config",
        &ws.config,
        "--predictor",
        &predictor,
        "--features",
        "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8",
        "--out",
        &ws.path("x"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for name in coverart::fitness::FEATURE_NAMES {
        assert!(err.contains(name), "{err}");
    }

    let missing = ws.path("nowhere/predictor.bin");
    let out = coverart(&[
        "optimize",
        "--config",
        &ws.config,
        "--predictor",
        &missing,
        "--features",
        "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9",
        "--out",
        &ws.path("y"),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains(&missing));

    let out = coverart(&[
        "sweep",
        "--config",
        &ws.config,
        "--predictor",
        &predictor,
        "--feature",
        "mood",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn benchmark_tables_and_rerun_identity() {
    let ws = Workspace::new();
    let (manifest, predictor) = ws.trained();
    let run = |name: &str| {
        let out = ws.path(name);
        ok(&[
            "benchmark",
            "--config",
            &ws.config,
            "--seed",
            "3",
            "--manifest",
            &manifest,
            "--predictor",
            &predictor,
            "--out",
            &out,
        ]);
        PathBuf::from(out)
    };
    let (a, b) = (run("bench_a"), run("bench_b"));
    let table = csv_rows(&a.join("table_mse.csv"));
    assert_eq!(table.len(), 6);
    assert_eq!(csv_rows(&a.join("table_genre.csv")).len(), 6);
    // the tiny test split may lack a genre, so the target count varies
    let runs = csv_rows(&a.join("benchmark_runs.csv")).len() - 1;
    assert!(runs > 0 && runs % 5 == 0, "{runs} benchmark rows");
    for name in [
        "table_mse.csv",
        "table_genre.csv",
        "benchmark_runs.csv",
        "classifier_accuracy.csv",
    ] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    let covers: Vec<_> = fs::read_dir(a.join("covers"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(covers.len(), runs);
    for c in covers {
        assert_eq!(
            fs::read(a.join("covers").join(&c)).unwrap(),
            fs::read(b.join("covers").join(&c)).unwrap()
        );
    }
}

#[test]
fn resolved_config_reproduces_a_run() {
    let ws = Workspace::new();
    let (_, predictor) = ws.trained();
    let first = ws.path("first");
    ok(&[
        "optimize",
        "--config",
        &ws.config,
        "--seed",
        "8",
        "--predictor",
        &predictor,
        "--features",
        "0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5",
        "--out",
        &first,
    ]);
    let resolved = format!("{first}/run_config.toml");
    let second = ws.path("second");
    ok(&["optimize", "--config", &resolved, "--out", &second]);
    assert_eq!(
        fs::read(format!("{first}/trace.csv")).unwrap(),
        fs::read(format!("{second}/trace.csv")).unwrap()
    );
    assert_eq!(
        fs::read(format!("{first}/cover.ppm")).unwrap(),
        fs::read(format!("{second}/cover.ppm")).unwrap()
    );
}

#[test]
fn sweep_and_album_outputs() {
    let ws = Workspace::new();
    let (manifest, predictor) = ws.trained();
    let sweep = ws.path("sweep");
    ok(&[
        "sweep",
        "--config",
        &ws.config,
        "--predictor",
        &predictor,
        "--out",
        &sweep,
    ]);
    let rows = csv_rows(&Path::new(&sweep).join("sweep.csv"));
    assert_eq!(rows.len(), 12);
    assert!(rows[0].starts_with("danceability,fitness,predicted_danceability"));
    for (i, row) in rows[1..].iter().enumerate() {
        let v: f64 = row.split(',').next().unwrap().parse().unwrap();
        assert!((v - i as f64 / 10.0).abs() < 1e-12);
    }
    assert!(Path::new(&sweep).join("sweep.ppm").exists());

    let album = ws.path("album");
    ok(&[
        "album",
        "--config",
        &ws.config,
        "--predictor",
        &predictor,
        "--manifest",
        &manifest,
        "--genre",
        "metal",
        "--count",
        "4",
        "--out",
        &album,
    ]);
    assert_eq!(
        fs::read_dir(Path::new(&album).join("covers"))
            .unwrap()
            .count(),
        4
    );
    assert!(Path::new(&album).join("album.ppm").exists());

    let tracks = ws.path("tracks.csv");
    fs::write(
        &tracks,
        "id,danceability,valence,energy,tempo,loudness,speechiness,instrumentalness,liveness,acousticness\n\
         a,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9\nb,0.9,0.8,0.7,0.6,0.5,0.4,0.3,0.2,0.1\n",
    )
    .unwrap();
    let album2 = ws.path("album2");
    ok(&[
        "album",
        "--config",
        &ws.config,
        "--predictor",
        &predictor,
        "--tracks",
        &tracks,
        "--out",
        &album2,
    ]);
    assert_eq!(csv_rows(&Path::new(&album2).join("album.csv")).len(), 3);
}
