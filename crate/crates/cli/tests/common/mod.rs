#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mmdin_core::image_features::encode_ppm;
use mmdin_core::pipeline::MovieRecord;
use mmdin_core::synthetic::{ratings_fixture, synthetic_poster};

/// Small model used wherever a test only needs the command to run.
pub const TINY_MODEL: [&str; 12] = [
    "--epochs",
    "1",
    "--embedding-dim",
    "4",
    "--head-width",
    "8",
    "--num-heads",
    "2",
    "--attention-hidden",
    "4",
    "--batch-size",
    "128",
];

pub fn mmdin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmdin"))
        .args(args)
        .env_remove("MMDIN_SEED")
        .output()
        .expect("failed to launch mmdin")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Runs the command and panics with its output unless it exits 0.
pub fn ok(args: &[&str]) -> Output {
    let out = mmdin(args);
    assert!(
        out.status.success(),
        "mmdin {args:?} failed ({:?})\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        stdout(&out),
        stderr(&out)
    );
    out
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

pub fn write_movies_csv(path: &Path, movies: &[MovieRecord]) {
    let mut text = String::from("movieId,title,genres\n");
    for m in movies {
        let genres = if m.genres.is_empty() {
            "(no genres listed)".to_string()
        } else {
            m.genres.join("|")
        };
        text.push_str(&format!("{},\"{}\",{}\n", m.movie_id, m.title, genres));
    }
    fs::write(path, text).unwrap();
}

/// Writes `ratings.csv` and `movies.csv` for a synthetic corpus and
/// returns the movie table.
pub fn write_corpus(dir: &Path, ratings: usize, seed: u64) -> Vec<MovieRecord> {
    fs::create_dir_all(dir).unwrap();
    let (records, movies) = ratings_fixture(ratings, 60, 150, seed);
    let mut text = String::from("userId,movieId,rating,timestamp\n");
    for r in &records {
        text.push_str(&format!("{},{},{:.1},{}\n", r.user_id, r.movie_id, r.rating, r.timestamp));
    }
    fs::write(dir.join("ratings.csv"), text).unwrap();
    write_movies_csv(&dir.join("movies.csv"), &movies);
    movies
}

pub fn write_posters(dir: &Path, movies: &[MovieRecord]) {
    fs::create_dir_all(dir).unwrap();
    for m in movies {
        fs::write(dir.join(format!("{}.ppm", m.movie_id)), encode_ppm(&synthetic_poster(m, 0))).unwrap();
    }
}

/// Corpus, posters, poster features and a built dataset under `root`;
/// returns the dataset directory.
pub fn built_dataset(root: &Path, ratings: usize, extra: &[&str]) -> PathBuf {
    let movies = write_corpus(root, ratings, 1);
    let posters = root.join("posters");
    write_posters(&posters, &movies[..movies.len() / 2]);
    let features = root.join("features").join("poster_features.csv");
    ok(&["extract-features", "--posters", s(&posters), "--out", s(&features)]);
    let data = root.join("data");
    let (ratings_csv, movies_csv) = (root.join("ratings.csv"), root.join("movies.csv"));
    let mut args = vec![
        "build-dataset",
        "--ratings",
        s(&ratings_csv),
        "--movies",
        s(&movies_csv),
        "--poster-features",
        s(&features),
        "--out",
        s(&data),
        "--seed",
        "3",
    ];
    args.extend_from_slice(extra);
    ok(&args);
    data
}

/// `key = value` entry of a manifest or report.
pub fn entry(text: &str, key: &str) -> Option<String> {
    text.lines()
        .find_map(|l| l.strip_prefix(key)?.strip_prefix(" = ").map(str::to_string))
}

pub fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}
