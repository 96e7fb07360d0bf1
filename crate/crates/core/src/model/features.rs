//! Turning [`Sample`]s into the index and value arrays a forward pass reads.

use super::ModelError;
use crate::image_features::HISTORY_AGG_LEN;
use crate::pipeline::{Sample, HISTORY_LEN, MAX_GENRES, POSTER_LEN};

/// Real-valued columns that get standardized: user stats, movie stats,
/// scene, candidate poster, history poster aggregate.
pub const NUMERIC_LEN: usize = 4 + 4 + 1 + POSTER_LEN + HISTORY_AGG_LEN;
const SCENE_COL: usize = 8;
const POSTER_COL: usize = 9;

fn raw_numeric(s: &Sample) -> [f64; NUMERIC_LEN] {
    let mut out = [0.0; NUMERIC_LEN];
    out[..4].copy_from_slice(&s.user_stats);
    out[4..8].copy_from_slice(&s.movie_stats);
    out[SCENE_COL] = s.scene;
    out[POSTER_COL..POSTER_COL + POSTER_LEN].copy_from_slice(&s.candidate_poster);
    out[POSTER_COL + POSTER_LEN..].copy_from_slice(&s.history_poster_agg);
    out
}

/// Per-column standardization fitted on training samples.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub fitted: bool,
}

impl Default for FeatureScaler {
    fn default() -> Self {
        Self {
            mean: vec![0.0; NUMERIC_LEN],
            std: vec![1.0; NUMERIC_LEN],
            fitted: false,
        }
    }
}

impl FeatureScaler {
    /// Population mean and standard deviation per column. Constant columns
    /// keep a unit scale so they map to 0.
    pub fn fit(samples: &[Sample]) -> Self {
        if samples.is_empty() {
            return Self::default();
        }
        let n = samples.len() as f64;
        let mut mean = vec![0.0; NUMERIC_LEN];
        for s in samples {
            for (m, v) in mean.iter_mut().zip(raw_numeric(s)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; NUMERIC_LEN];
        for s in samples {
            for ((acc, v), m) in var.iter_mut().zip(raw_numeric(s)).zip(&mean) {
                *acc += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|v| {
                let sd = (v / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self {
            mean,
            std,
            fitted: true,
        }
    }

    pub fn transform(&self, s: &Sample) -> [f64; NUMERIC_LEN] {
        let mut x = raw_numeric(s);
        for ((v, m), sd) in x.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = (*v - m) / sd;
        }
        x
    }
}

/// Column-major-by-field view of a batch of samples.
#[derive(Debug, Clone)]
pub struct Batch {
    pub len: usize,
    pub user_ids: Vec<usize>,
    pub movie_ids: Vec<usize>,
    /// `len × MAX_GENRES`
    pub candidate_genres: Vec<usize>,
    /// `1/count` for every non-padding candidate genre, else 0.
    pub candidate_genre_weights: Vec<f64>,
    /// `len × HISTORY_LEN`
    pub history_movies: Vec<usize>,
    /// Candidate id repeated once per history slot.
    pub candidate_per_slot: Vec<usize>,
    pub history_weights: Vec<f64>,
    /// `len × HISTORY_LEN·MAX_GENRES`
    pub history_genres: Vec<usize>,
    pub history_genre_weights: Vec<f64>,
    /// `len × 5`: standardized user stats and a has-history flag.
    pub user_numeric: Vec<f64>,
    /// `len × 5`: standardized movie stats and a has-ratings flag.
    pub movie_numeric: Vec<f64>,
    /// `len × 1`
    pub scene: Vec<f64>,
    /// `len × (POSTER_LEN + HISTORY_AGG_LEN)`
    pub poster: Vec<f64>,
    pub labels: Vec<f64>,
}

pub const USER_NUMERIC: usize = 5;
pub const MOVIE_NUMERIC: usize = 5;
pub const POSTER_WIDTH: usize = POSTER_LEN + HISTORY_AGG_LEN;
pub const HISTORY_GENRE_SLOTS: usize = HISTORY_LEN * MAX_GENRES;

fn mean_weights(ids: &[usize], out: &mut Vec<f64>) {
    let count = ids.iter().filter(|&&i| i != 0).count();
    out.extend(ids.iter().map(|&i| {
        if i == 0 {
            0.0
        } else {
            1.0 / count as f64
        }
    }));
}

impl Batch {
    /// Gathers `samples`, checking every id against the table sizes.
    pub fn new(
        samples: &[&Sample],
        scaler: &FeatureScaler,
        user_buckets: usize,
        movie_buckets: usize,
    ) -> Result<Self, ModelError> {
        let n = samples.len();
        if n == 0 {
            return Err(ModelError::EmptyInput);
        }
        let mut b = Batch {
            len: n,
            user_ids: Vec::with_capacity(n),
            movie_ids: Vec::with_capacity(n),
            candidate_genres: Vec::with_capacity(n * MAX_GENRES),
            candidate_genre_weights: Vec::with_capacity(n * MAX_GENRES),
            history_movies: Vec::with_capacity(n * HISTORY_LEN),
            candidate_per_slot: Vec::with_capacity(n * HISTORY_LEN),
            history_weights: Vec::with_capacity(n * HISTORY_LEN),
            history_genres: Vec::with_capacity(n * HISTORY_GENRE_SLOTS),
            history_genre_weights: Vec::with_capacity(n * HISTORY_GENRE_SLOTS),
            user_numeric: Vec::with_capacity(n * USER_NUMERIC),
            movie_numeric: Vec::with_capacity(n * MOVIE_NUMERIC),
            scene: Vec::with_capacity(n),
            poster: Vec::with_capacity(n * POSTER_WIDTH),
            labels: Vec::with_capacity(n),
        };
        for s in samples {
            if s.user_id > user_buckets {
                return Err(ModelError::Incompatible(format!(
                    "user bucket {} exceeds the model's {user_buckets} user buckets",
                    s.user_id
                )));
            }
            let too_big = std::iter::once(s.movie_id)
                .chain(s.history_movie_ids)
                .find(|&m| m > movie_buckets);
            if let Some(m) = too_big {
                return Err(ModelError::Incompatible(format!(
                    "movie bucket {m} exceeds the model's {movie_buckets} movie buckets"
                )));
            }
            let x = scaler.transform(s);
            b.user_ids.push(s.user_id);
            b.movie_ids.push(s.movie_id);
            b.candidate_genres.extend(s.candidate_genres);
            mean_weights(&s.candidate_genres, &mut b.candidate_genre_weights);
            b.history_movies.extend(s.history_movie_ids);
            b.candidate_per_slot.extend([s.movie_id; HISTORY_LEN]);
            mean_weights(&s.history_movie_ids, &mut b.history_weights);
            b.history_genres.extend(s.history_genres);
            mean_weights(&s.history_genres, &mut b.history_genre_weights);
            b.user_numeric.extend_from_slice(&x[..4]);
            b.user_numeric.push(f64::from(u8::from(s.user_stats[0] > 0.0)));
            b.movie_numeric.extend_from_slice(&x[4..8]);
            b.movie_numeric.push(f64::from(u8::from(s.movie_stats[0] > 0.0)));
            b.scene.push(x[SCENE_COL]);
            b.poster.extend_from_slice(&x[POSTER_COL..]);
            b.labels.push(f64::from(s.label));
        }
        Ok(b)
    }
}
