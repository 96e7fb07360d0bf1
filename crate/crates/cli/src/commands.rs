use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use mmdin_core::image_features::{extract_directory, read_poster_features_csv, write_poster_features_csv};
use mmdin_core::metrics::{
    export_reports, read_metrics_csv, write_metrics_rows, MetricError, MetricsRow,
    ModelEvaluation, ScoredSet, METRICS_HEADER,
};
use mmdin_core::model::{build_model, Model, ModelConfig, ModelError, Variant};
use mmdin_core::pipeline::{
    build_dataset, load_movies_csv, load_ratings_csv, read_samples, write_samples,
    PipelineOptions, Sample,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::args::{BuildArgs, CompareArgs, EvaluateArgs, ExtractArgs, TrainArgs};
use crate::config::{env_seed, read_config_file, resolve_model_config};
use crate::error::CliError;
use crate::manifest::Manifest;

pub const CHECKPOINT_NAME: &str = "checkpoint.txt";
pub const TRAINING_LOG_NAME: &str = "training_log.csv";

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::input(format!("cannot create {}: {e}", dir.display())))
}

fn open(path: &Path, what: &str) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::input(format!("cannot open {what} {}: {e}", path.display())))
}

fn write_file<F>(path: &Path, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<(), String>,
{
    let file = File::create(path)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    f(&mut w)
        .and_then(|_| w.flush().map_err(|e| e.to_string()))
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

fn read_split(dir: &Path, name: &str) -> Result<Vec<Sample>, CliError> {
    let path = dir.join(name);
    read_samples(open(&path, "dataset file")?)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn model_error(e: ModelError) -> CliError {
    match e {
        ModelError::Diverged { .. } => CliError::training(e.to_string()),
        _ => CliError::input(e.to_string()),
    }
}

fn metric_error(e: MetricError) -> CliError {
    match e {
        MetricError::Io { .. } => CliError::input(e.to_string()),
        _ => CliError::mismatch(e.to_string()),
    }
}

/// Name a trained model reports under.
pub fn model_label(config: &ModelConfig) -> String {
    if config.variant == Variant::Mmdin && !config.use_multimodal {
        "MMDIN_no_poster".to_string()
    } else {
        config.variant.name().to_string()
    }
}

/// Sort key placing rows in the fixed reporting order.
fn label_rank(label: &str) -> (usize, String) {
    let rank = Variant::ALL
        .iter()
        .position(|v| v.name() == label)
        .unwrap_or(Variant::ALL.len());
    (rank, label.to_string())
}

pub fn extract_features(args: &ExtractArgs) -> Result<(), CliError> {
    if !args.posters.is_dir() {
        return Err(CliError::input(format!(
            "poster directory {} does not exist",
            args.posters.display()
        )));
    }
    let extraction = extract_directory(&args.posters).map_err(|e| CliError::input(e.to_string()))?;
    for (path, reason) in &extraction.failures {
        warn!("skipping {}: {reason}", path.display());
    }
    let parent = args.out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    create_dir(parent)?;
    write_file(&args.out, |w| {
        write_poster_features_csv(w, &extraction.features).map_err(|e| e.to_string())
    })?;
    if extraction.features.is_empty() && extraction.failures.is_empty() {
        warn!("no poster images found in {}", args.posters.display());
    }
    println!("processed = {}", extraction.features.len());
    println!("failed = {}", extraction.failures.len());
    println!("ignored = {}", extraction.ignored.len());

    let mut manifest = Manifest::new("extract-features");
    manifest.set("posters", args.posters.display());
    manifest.set("processed", extraction.features.len());
    manifest.set("failed", extraction.failures.len());
    manifest.output("poster_features", &args.out)?;
    manifest.write(parent)
}

pub fn build_dataset_cmd(args: &BuildArgs) -> Result<(), CliError> {
    let seed = match args.seed {
        Some(s) => s,
        None => env_seed()?,
    };
    if !(args.train_ratio > 0.0 && args.train_ratio < 1.0) {
        return Err(CliError::input("--train-ratio must lie strictly between 0 and 1"));
    }
    if args.num_buckets == 0 {
        return Err(CliError::input("--num-buckets must be at least 1"));
    }
    let ratings = load_ratings_csv(open(&args.ratings, "ratings file")?)
        .map_err(|e| CliError::input(format!("{}: {e}", args.ratings.display())))?;
    for reject in ratings.rejects.iter().take(10) {
        warn!("ratings line {}: {} ({})", reject.line, reject.reason, reject.raw);
    }
    let (movies, unknown_tags) = load_movies_csv(open(&args.movies, "movies file")?)
        .map_err(|e| CliError::input(format!("{}: {e}", args.movies.display())))?;
    let posters = match &args.poster_features {
        Some(path) => Some(
            read_poster_features_csv(open(path, "poster features file")?)
                .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?,
        ),
        None => None,
    };
    let options = PipelineOptions {
        num_buckets: args.num_buckets,
        train_ratio: args.train_ratio,
        seed,
    };
    let dataset = build_dataset(&ratings, &movies, unknown_tags, posters.as_ref(), &options);

    create_dir(&args.out)?;
    let train_path = args.out.join("train.csv");
    let test_path = args.out.join("test.csv");
    let report_path = args.out.join("pipeline_report.txt");
    write_file(&train_path, |w| write_samples(w, &dataset.split.train).map_err(|e| e.to_string()))?;
    write_file(&test_path, |w| write_samples(w, &dataset.split.test).map_err(|e| e.to_string()))?;
    let report = dataset.report.render();
    write_file(&report_path, |w| w.write_all(report.as_bytes()).map_err(|e| e.to_string()))?;
    print!("{report}");

    let mut manifest = Manifest::new("build-dataset");
    manifest.set("seed", seed);
    manifest.set("num_buckets", args.num_buckets);
    manifest.set("train_ratio", args.train_ratio);
    manifest.input("ratings", &args.ratings)?;
    manifest.input("movies", &args.movies)?;
    if let Some(path) = &args.poster_features {
        manifest.input("poster_features", path)?;
    }
    manifest.output("train", &train_path)?;
    manifest.output("test", &test_path)?;
    manifest.output("pipeline_report", &report_path)?;
    manifest.write(&args.out)
}

struct Trained {
    model: Model,
    checkpoint: PathBuf,
    log: PathBuf,
}

fn train_into(config: &ModelConfig, train: &[Sample], out: &Path) -> Result<Trained, CliError> {
    let mut model = build_model(config, config.seed).map_err(model_error)?;
    let log = model.train(train).map_err(model_error)?;
    create_dir(out)?;
    let checkpoint = out.join(CHECKPOINT_NAME);
    write_file(&checkpoint, |w| model.save(w).map_err(|e| e.to_string()))?;
    let log_path = out.join(TRAINING_LOG_NAME);
    write_file(&log_path, |w| log.write_csv(w).map_err(|e| e.to_string()))?;
    if let Some(loss) = log.final_loss() {
        info!("{} seed {}: final training loss {loss:.6}", model_label(config), config.seed);
    }
    Ok(Trained {
        model,
        checkpoint,
        log: log_path,
    })
}

pub fn train(args: &TrainArgs) -> Result<(), CliError> {
    let file = read_config_file(args.config.as_deref())?;
    let config = resolve_model_config(args.variant, &file, &args.overrides)?;
    let train_path = args.data.join("train.csv");
    let samples = read_split(&args.data, "train.csv")?;
    let trained = train_into(&config, &samples, &args.out)?;
    println!("variant = {}", config.variant);
    println!("parameter_count = {}", trained.model.parameter_count());

    let mut manifest = Manifest::new("train");
    for (k, v) in config.to_pairs() {
        manifest.set(format!("config.{k}"), v);
    }
    manifest.set("parameter_count", trained.model.parameter_count());
    manifest.set("train_samples", samples.len());
    manifest.input("train", &train_path)?;
    if let Some(path) = &args.config {
        manifest.input("config", path)?;
    }
    manifest.output("checkpoint", &trained.checkpoint)?;
    manifest.output("training_log", &trained.log)?;
    manifest.write(&args.out)
}

/// Up to `limit` rows chosen by a seeded shuffle, kept in input order.
fn subsample(scores: &[f64], labels: &[u8], limit: usize, seed: u64) -> (Vec<f64>, Vec<u8>) {
    if scores.len() <= limit {
        return (scores.to_vec(), labels.to_vec());
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut keep = idx[..limit].to_vec();
    keep.sort_unstable();
    (keep.iter().map(|&i| scores[i]).collect(), keep.iter().map(|&i| labels[i]).collect())
}

fn scored(model: &Model, test: &[Sample]) -> Result<(Vec<f64>, Vec<u8>), ModelError> {
    let scores = model.predict(test)?;
    Ok((scores, test.iter().map(|s| s.label).collect()))
}

pub fn evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let reader = open(&args.checkpoint, "checkpoint")?;
    let model = Model::load(reader).map_err(|e| CliError::mismatch(e.to_string()))?;
    let test_path = args.data.join("test.csv");
    let test = read_split(&args.data, "test.csv")?;
    let (scores, labels) = scored(&model, &test).map_err(|e| match e {
        ModelError::Incompatible(_) | ModelError::Dimension { .. } => CliError::mismatch(e.to_string()),
        other => model_error(other),
    })?;
    let label = model_label(model.config());
    let seed = args.seed.unwrap_or(model.config().seed);
    let full = ScoredSet::new(scores.clone(), labels.clone()).map_err(metric_error)?;
    let row = MetricsRow::from_scores(&label, &full).map_err(metric_error)?;
    let (sub_scores, sub_labels) = subsample(&scores, &labels, args.curve_samples.max(1), seed);
    let curve_set = ScoredSet::new(sub_scores, sub_labels).map_err(metric_error)?;
    let curve_len = curve_set.len();

    create_dir(&args.out)?;
    let evaluation = ModelEvaluation {
        model: label.clone(),
        row: row.clone(),
        curve_set,
    };
    let metrics_path = args.out.join("metrics.csv");
    let earlier = if metrics_path.exists() {
        read_metrics_csv(&metrics_path).map_err(metric_error)?
    } else {
        Vec::new()
    };
    export_reports(&args.out, std::slice::from_ref(&evaluation), seed).map_err(metric_error)?;
    let mut rows = earlier;
    rows.retain(|(m, _)| *m != label);
    rows.push((label.clone(), row.values().to_vec()));
    rows.sort_by_key(|(m, _)| label_rank(m));
    write_metrics_rows(&metrics_path, &rows).map_err(metric_error)?;
    println!("model = {label}");
    for (name, value) in METRICS_HEADER[1..].iter().zip(row.values()) {
        println!("{name} = {value:.6}");
    }
    println!("curve_samples = {curve_len}");

    let mut manifest = Manifest::new("evaluate");
    manifest.set("model", &label);
    manifest.set("seed", seed);
    manifest.set("test_samples", test.len());
    manifest.set("curve_samples", curve_len);
    manifest.input("checkpoint", &args.checkpoint)?;
    manifest.input("test", &test_path)?;
    manifest.output("metrics", &metrics_path)?;
    manifest.write(&args.out)
}

struct JobOutcome {
    label: String,
    seed: u64,
    values: Result<Vec<f64>, CliError>,
}

fn run_job(config: &ModelConfig, train: &[Sample], test: &[Sample], dir: &Path) -> Result<Vec<f64>, CliError> {
    let trained = train_into(config, train, dir)?;
    let (scores, labels) = scored(&trained.model, test).map_err(model_error)?;
    let set = ScoredSet::new(scores, labels).map_err(metric_error)?;
    let row = MetricsRow::from_scores(&model_label(config), &set).map_err(metric_error)?;
    let values = row.values().to_vec();
    write_metrics_rows(&dir.join("metrics.csv"), &[(row.model.clone(), values.clone())])
        .map_err(metric_error)?;
    Ok(values)
}

/// Means over seeds, sorted by ROC-AUC descending (ties in reporting order).
pub fn mean_rows(per_seed: &[(String, u64, Vec<f64>)]) -> Vec<(String, Vec<f64>)> {
    let mut labels: Vec<&String> = per_seed.iter().map(|(l, _, _)| l).collect();
    labels.sort_by_key(|l| label_rank(l));
    labels.dedup();
    let mut rows: Vec<(String, Vec<f64>)> = labels
        .into_iter()
        .map(|label| {
            let runs: Vec<&Vec<f64>> =
                per_seed.iter().filter(|(l, _, _)| l == label).map(|(_, _, v)| v).collect();
            let width = runs[0].len();
            let mean = (0..width)
                .map(|c| runs.iter().map(|v| v[c]).sum::<f64>() / runs.len() as f64)
                .collect();
            (label.clone(), mean)
        })
        .collect();
    rows.sort_by(|a, b| b.1[0].total_cmp(&a.1[0]).then_with(|| label_rank(&a.0).cmp(&label_rank(&b.0))));
    rows
}

pub fn compare(args: &CompareArgs) -> Result<(), CliError> {
    if args.seeds == 0 || args.jobs == 0 {
        return Err(CliError::input("--seeds and --jobs must be at least 1"));
    }
    let file = read_config_file(args.config.as_deref())?;
    let base = resolve_model_config(Variant::Mmdin, &file, &args.overrides)?;
    let mut configs = Vec::new();
    for i in 0..args.seeds as u64 {
        for variant in Variant::ALL {
            let mut c = resolve_model_config(variant, &file, &args.overrides)?;
            c.seed = base.seed.wrapping_add(i);
            configs.push(c);
        }
    }
    let train = read_split(&args.data, "train.csv")?;
    let test = read_split(&args.data, "test.csv")?;
    create_dir(&args.out)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| CliError::training(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<JobOutcome> = pool.install(|| {
        configs
            .par_iter()
            .map(|c| {
                let label = model_label(c);
                let dir = args.out.join("jobs").join(format!("{label}_seed{}", c.seed));
                JobOutcome {
                    values: run_job(c, &train, &test, &dir),
                    label,
                    seed: c.seed,
                }
            })
            .collect()
    });

    let mut per_seed = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o.values {
            Ok(v) => per_seed.push((o.label, o.seed, v)),
            Err(e) => failures.push(format!("{} seed {}: {}", o.label, o.seed, e.message)),
        }
    }
    per_seed.sort_by(|a, b| label_rank(&a.0).cmp(&label_rank(&b.0)).then(a.1.cmp(&b.1)));

    let per_seed_path = args.out.join("metrics_per_seed.csv");
    write_file(&per_seed_path, |w| {
        let mut header = vec!["model", "seed"];
        header.extend_from_slice(&METRICS_HEADER[1..]);
        writeln!(w, "{}", header.join(",")).map_err(|e| e.to_string())?;
        for (label, seed, values) in &per_seed {
            let vals: Vec<String> = values.iter().map(|v| format!("{v:.6}")).collect();
            writeln!(w, "{label},{seed},{}", vals.join(",")).map_err(|e| e.to_string())?;
        }
        Ok(())
    })?;
    let metrics_path = args.out.join("metrics.csv");
    let means = mean_rows(&per_seed);
    write_metrics_rows(&metrics_path, &means).map_err(metric_error)?;
    let failures_path = args.out.join("failures.txt");
    write_file(&failures_path, |w| {
        failures.iter().try_for_each(|f| writeln!(w, "{f}")).map_err(|e| e.to_string())
    })?;

    for (label, values) in &means {
        println!("{label}: roc_auc = {:.6}, pr_auc = {:.6}", values[0], values[1]);
    }
    println!("jobs = {}", configs.len());
    println!("failed = {}", failures.len());

    let mut manifest = Manifest::new("compare");
    manifest.set("seeds", args.seeds);
    manifest.set("base_seed", base.seed);
    manifest.set("jobs", args.jobs);
    for (k, v) in base.to_pairs() {
        if k != "variant" && k != "seed" && k != "use_multimodal" {
            manifest.set(format!("config.{k}"), v);
        }
    }
    manifest.input("train", &args.data.join("train.csv"))?;
    manifest.input("test", &args.data.join("test.csv"))?;
    if let Some(path) = &args.config {
        manifest.input("config", path)?;
    }
    manifest.output("metrics_per_seed", &per_seed_path)?;
    manifest.output("metrics", &metrics_path)?;
    manifest.write(&args.out)?;

    if failures.is_empty() {
        Ok(())
    } else {
        for f in &failures {
            warn!("{f}");
        }
        Err(CliError::training(format!(
            "{} of {} jobs failed; see {}",
            failures.len(),
            configs.len(),
            failures_path.display()
        )))
    }
}
