//! Random samples and posters for tests, benchmarks and smoke runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::image_features::{RgbImage, HISTORY_AGG_LEN};
use crate::pipeline::{
    genre_index, MovieRecord, RatingRecord, Sample, GENRES, GENRE_VOCAB, HISTORY_LEN, MAX_GENRES,
    POSTER_LEN, SCENE_CAP,
};

fn genres<R: Rng>(rng: &mut R) -> [usize; MAX_GENRES] {
    let count = rng.random_range(0..=MAX_GENRES);
    let mut out = [0; MAX_GENRES];
    for slot in out.iter_mut().take(count) {
        *slot = rng.random_range(1..GENRE_VOCAB);
    }
    out
}

/// A sample with plausible value ranges and a coin-flip label. Bucket ids
/// are drawn from `1..=num_buckets`; history slots may be padding.
pub fn random_sample<R: Rng>(rng: &mut R, num_buckets: usize) -> Sample {
    let history_len = rng.random_range(0..=HISTORY_LEN);
    let mut history_movie_ids = [0; HISTORY_LEN];
    let mut history_genres = [0; HISTORY_LEN * MAX_GENRES];
    for k in 0..history_len {
        history_movie_ids[k] = rng.random_range(1..=num_buckets);
        history_genres[k * MAX_GENRES..(k + 1) * MAX_GENRES].copy_from_slice(&genres(rng));
    }
    let user_count = rng.random_range(0..200) as f64;
    let movie_count = rng.random_range(0..300) as f64;
    let mut history_poster_agg = [0.0; HISTORY_AGG_LEN];
    history_poster_agg.iter_mut().for_each(|v| *v = rng.random_range(0.0..1.0));
    let mut candidate_poster = [0.0; POSTER_LEN];
    candidate_poster.iter_mut().for_each(|v| *v = rng.random_range(0.0..1.0));
    Sample {
        label: rng.random_range(0..=1),
        user_raw: rng.random_range(1..1000),
        movie_raw: rng.random_range(1..5000),
        timestamp: rng.random_range(800_000_000..1_500_000_000),
        user_id: rng.random_range(1..=num_buckets),
        movie_id: rng.random_range(1..=num_buckets),
        user_stats: [
            user_count,
            rng.random_range(1.0..5.0),
            rng.random_range(1950.0..2015.0),
            rng.random_range(0.0..20.0),
        ],
        movie_stats: [
            movie_count,
            rng.random_range(1.0..5.0),
            rng.random_range(0.0..1.5),
            rng.random_range(1950.0..2015.0),
        ],
        candidate_genres: genres(rng),
        history_movie_ids,
        history_genres,
        history_poster_agg,
        candidate_poster,
        scene: rng.random_range(0.0..SCENE_CAP),
    }
}

pub fn random_samples(n: usize, num_buckets: usize, seed: u64) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_sample(&mut rng, num_buckets)).collect()
}

/// Random samples relabelled by a fixed rule mixing a profile statistic,
/// a poster field and the candidate's genre:
/// `label = 1` iff `u_avg_rating + 2·cand_poster[0] + [genre 1 present] > 4`.
pub fn planted_rule_samples(n: usize, num_buckets: usize, seed: u64) -> Vec<Sample> {
    let mut samples = random_samples(n, num_buckets, seed);
    for s in &mut samples {
        let genre_bonus = f64::from(u8::from(s.candidate_genres.contains(&1)));
        let score = s.user_stats[1] + 2.0 * s.candidate_poster[0] + genre_bonus;
        s.label = u8::from(score > 4.0);
    }
    samples
}

/// A small stand-in poster for `movie`. The base colour follows the first
/// genre, brightness follows the release decade, and the amount of pixel
/// noise grows with the film's age.
pub fn synthetic_poster(movie: &MovieRecord, seed: u64) -> RgbImage {
    let (width, height) = (24, 36);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (movie.movie_id as u64).wrapping_mul(0x9E37_79B9));
    let genre = movie.genres.first().and_then(|g| genre_index(g)).unwrap_or(0);
    let hue = genre as f64 / GENRE_VOCAB as f64;
    let year = movie.release_year.unwrap_or(1990).clamp(1920, 2020);
    let brightness = 0.35 + 0.6 * (year - 1920) as f64 / 100.0;
    let base = [
        (0.5 + 0.5 * (std::f64::consts::TAU * hue).cos()) * brightness,
        (0.5 + 0.5 * (std::f64::consts::TAU * (hue + 1.0 / 3.0)).cos()) * brightness,
        (0.5 + 0.5 * (std::f64::consts::TAU * (hue + 2.0 / 3.0)).cos()) * brightness,
    ];
    let noise = 10.0 + 50.0 * (2020 - year) as f64 / 100.0;
    let pixels = (0..width * height)
        .map(|i| {
            let shade = if (i / width) < height / 3 { 0.6 } else { 1.0 };
            let mut px = [0u8; 3];
            for (c, v) in px.iter_mut().enumerate() {
                let value = base[c] * shade * 255.0 + rng.random_range(-noise..=noise);
                *v = value.round().clamp(0.0, 255.0) as u8;
            }
            px
        })
        .collect();
    RgbImage::new(width, height, pixels).expect("fixed non-zero dimensions")
}

/// A MovieLens-like corpus: `movies` titled movies with one to three
/// genres and `n` half-star ratings from `users` users. Timestamps are
/// drawn from a narrow range so that some of a user's ratings share one.
pub fn ratings_fixture(
    n: usize,
    users: i64,
    movies: i64,
    seed: u64,
) -> (Vec<RatingRecord>, Vec<MovieRecord>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let movie_table = (1..=movies)
        .map(|id| {
            let year = rng.random_range(1930..2015);
            let count = rng.random_range(1..=3);
            let genres = rand::seq::index::sample(&mut rng, GENRES.len(), count)
                .into_iter()
                .map(|g| GENRES[g].to_string())
                .collect();
            MovieRecord {
                movie_id: id,
                title: format!("Movie {id} ({year})"),
                genres,
                release_year: Some(year),
            }
        })
        .collect();
    let ratings = (0..n)
        .map(|_| RatingRecord {
            user_id: rng.random_range(1..=users),
            movie_id: rng.random_range(1..=movies),
            rating: f64::from(rng.random_range(1..=10u8)) / 2.0,
            timestamp: 1_000_000_000 + rng.random_range(0..2_000) * 3_600,
        })
        .collect();
    (ratings, movie_table)
}
