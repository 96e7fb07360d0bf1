//! MovieLens ingestion and feature engineering.
//!
//! Ratings become [`Sample`]s whose user features only look at the past:
//! profile statistics and the liked-movie history of a sample are built
//! from that user's ratings with strictly earlier timestamps. Movie
//! statistics are leave-one-out over all other ratings of the movie.

mod io;
mod records;
mod samples;
mod split;

pub use io::{read_samples, sample_csv_header, write_samples};
pub use records::{
    genre_index, is_valid_rating, label_of, load_movies_csv, load_ratings_csv,
    parse_year_from_title, LoadedRatings, MovieRecord, RatingRecord, Reject, GENRES,
    MAX_REJECT_FRACTION, MOVIES_HEADER, RATINGS_HEADER,
};
pub use samples::{
    build_profiles_and_samples, bucketize_id, BuildStats, FeatureContext, Sample, GENRE_VOCAB,
    HISTORY_LEN, MAX_GENRES, POSTER_LEN, SCENE_CAP,
};
pub use split::{split_train_test, DatasetSplit};

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::image_features::PosterFeatureVector;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{file}: line {line}: {reason}")]
    Format {
        file: &'static str,
        line: u64,
        reason: String,
    },
    #[error("{rejects} of {total} rating rows are malformed (limit 1%)")]
    TooManyRejects { rejects: usize, total: usize },
    #[error("{0}")]
    Io(String),
}

/// Default hash bucket count shared by user and movie ids.
pub const DEFAULT_NUM_BUCKETS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    pub num_buckets: usize,
    pub train_ratio: f64,
    pub seed: u64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            num_buckets: DEFAULT_NUM_BUCKETS,
            train_ratio: 0.8,
            seed: 42,
        }
    }
}

/// Everything the dataset build produces apart from the files.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub split: DatasetSplit,
    pub stats: BuildStats,
    pub report: PipelineReport,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineReport {
    pub ratings_read: usize,
    pub rejects: usize,
    pub movies_read: usize,
    pub unknown_genre_tags: usize,
    pub skipped_missing_movie: usize,
    pub samples: usize,
    pub positives: usize,
    pub train: usize,
    pub test: usize,
    pub train_positive_rate: f64,
    pub test_positive_rate: f64,
    pub movies_with_posters: usize,
    pub notes: Vec<String>,
    pub seed: u64,
    pub num_buckets: usize,
}

impl PipelineReport {
    pub fn positive_rate(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.positives as f64 / self.samples as f64
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "ratings_read = {}", self.ratings_read);
        let _ = writeln!(s, "ratings_rejected = {}", self.rejects);
        let _ = writeln!(s, "movies_read = {}", self.movies_read);
        let _ = writeln!(s, "unknown_genre_tags = {}", self.unknown_genre_tags);
        let _ = writeln!(s, "skipped_missing_movie = {}", self.skipped_missing_movie);
        let _ = writeln!(s, "samples = {}", self.samples);
        let _ = writeln!(s, "positives = {}", self.positives);
        let _ = writeln!(s, "positive_rate = {:.6}", self.positive_rate());
        let _ = writeln!(s, "train = {}", self.train);
        let _ = writeln!(s, "test = {}", self.test);
        let _ = writeln!(s, "train_positive_rate = {:.6}", self.train_positive_rate);
        let _ = writeln!(s, "test_positive_rate = {:.6}", self.test_positive_rate);
        let _ = writeln!(s, "movies_with_posters = {}", self.movies_with_posters);
        let _ = writeln!(s, "num_buckets = {}", self.num_buckets);
        let _ = writeln!(s, "seed = {}", self.seed);
        for note in &self.notes {
            let _ = writeln!(s, "note = {note}");
        }
        s
    }
}

fn rate(samples: &[Sample]) -> f64 {
    if samples.is_empty() {
        0.0
    } else {
        samples.iter().filter(|s| s.label == 1).count() as f64 / samples.len() as f64
    }
}

/// Features, labels and the seeded split for already-loaded inputs.
pub fn build_dataset(
    ratings: &LoadedRatings,
    movies: &[MovieRecord],
    unknown_genre_tags: usize,
    posters: Option<&BTreeMap<i64, PosterFeatureVector>>,
    options: &PipelineOptions,
) -> Dataset {
    let empty = BTreeMap::new();
    let (samples, stats) = build_profiles_and_samples(
        &ratings.records,
        movies,
        posters.unwrap_or(&empty),
        options.num_buckets,
    );
    let split = split_train_test(&samples, options.train_ratio, options.seed);
    let mut notes = Vec::new();
    if posters.is_none() {
        notes.push("no poster features supplied; multimodal columns are zero".to_string());
    }
    let report = PipelineReport {
        ratings_read: ratings.records.len(),
        rejects: ratings.rejects.len(),
        movies_read: movies.len(),
        unknown_genre_tags,
        skipped_missing_movie: stats.skipped_missing_movie,
        samples: stats.samples,
        positives: stats.positives,
        train: split.train.len(),
        test: split.test.len(),
        train_positive_rate: rate(&split.train),
        test_positive_rate: rate(&split.test),
        movies_with_posters: stats.movies_with_posters,
        notes,
        seed: options.seed,
        num_buckets: options.num_buckets,
    };
    Dataset {
        split,
        stats,
        report,
    }
}
