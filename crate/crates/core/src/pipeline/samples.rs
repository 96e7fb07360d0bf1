use std::collections::{BTreeMap, HashMap};

use chrono::{DateTime, Datelike};

use super::records::{genre_index, label_of, MovieRecord, RatingRecord, GENRES};
use crate::image_features::{
    aggregate_history_poster_features, PosterFeatureVector, HISTORY_AGG_LEN,
};
use crate::kernels::map_ordered;

/// Liked movies kept per sample, newest first.
pub const HISTORY_LEN: usize = 5;
/// Genres kept per movie, most frequent first.
pub const MAX_GENRES: usize = 4;
/// Genre embedding rows including padding.
pub const GENRE_VOCAB: usize = GENRES.len() + 1;
pub const SCENE_CAP: f64 = 50.0;
pub const POSTER_LEN: usize = PosterFeatureVector::LEN;

/// One labelled (user, candidate movie) interaction with its features.
///
/// Categorical slots use 0 as padding. Numeric profile fields are 0 when
/// there is no data to compute them from.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub label: u8,
    pub user_raw: i64,
    pub movie_raw: i64,
    pub timestamp: i64,
    /// Bucketized user id in `1..=num_buckets`.
    pub user_id: usize,
    /// Bucketized movie id in `1..=num_buckets`.
    pub movie_id: usize,
    /// rating count, mean rating, mean release year, std release year, all
    /// over the user's strictly earlier ratings.
    pub user_stats: [f64; 4],
    /// rating count, mean rating, std rating (all other ratings of the
    /// movie), release year.
    pub movie_stats: [f64; 4],
    pub candidate_genres: [usize; MAX_GENRES],
    pub history_movie_ids: [usize; HISTORY_LEN],
    /// `MAX_GENRES` slots per history movie, in history order.
    pub history_genres: [usize; HISTORY_LEN * MAX_GENRES],
    pub history_poster_agg: [f64; HISTORY_AGG_LEN],
    pub candidate_poster: [f64; POSTER_LEN],
    /// Years between release and rating, capped to `[0, 50]`.
    pub scene: f64,
}

impl Sample {
    /// Identity of the underlying rating.
    pub fn key(&self) -> (i64, i64, i64) {
        (self.user_raw, self.movie_raw, self.timestamp)
    }
}

/// Deterministic hash bucket in `1..=num_buckets` (0 is padding).
pub fn bucketize_id(id: i64, num_buckets: usize) -> usize {
    assert!(num_buckets >= 1, "num_buckets must be positive");
    // splitmix64 finalizer
    let mut z = (id as u64).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z % num_buckets as u64) as usize + 1
}

#[derive(Debug, Clone)]
struct MovieInfo {
    genres: [usize; MAX_GENRES],
    year: Option<i32>,
    poster: Option<PosterFeatureVector>,
}

#[derive(Debug, Clone, Copy, Default)]
struct MovieTotals {
    count: usize,
    sum: f64,
    sum_sq: f64,
}

/// Running user profile over ratings pushed in time order.
#[derive(Debug, Clone, Default)]
struct UserAccumulator {
    count: usize,
    rating_sum: f64,
    year_count: usize,
    year_sum: f64,
    year_sum_sq: f64,
    /// Positively rated movies, oldest first.
    liked: Vec<i64>,
}

impl UserAccumulator {
    fn push(&mut self, r: &RatingRecord, info: &MovieInfo) {
        self.count += 1;
        self.rating_sum += r.rating;
        if let Some(y) = info.year {
            let y = y as f64;
            self.year_count += 1;
            self.year_sum += y;
            self.year_sum_sq += y * y;
        }
        if label_of(r.rating) == 1 {
            self.liked.push(r.movie_id);
        }
    }

    fn stats(&self) -> [f64; 4] {
        let avg = if self.count > 0 {
            self.rating_sum / self.count as f64
        } else {
            0.0
        };
        let (year_mean, year_std) = if self.year_count > 0 {
            let n = self.year_count as f64;
            let mean = self.year_sum / n;
            (mean, (self.year_sum_sq / n - mean * mean).max(0.0).sqrt())
        } else {
            (0.0, 0.0)
        };
        [self.count as f64, avg, year_mean, year_std]
    }
}

/// Counters produced alongside the samples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BuildStats {
    pub skipped_missing_movie: usize,
    pub samples: usize,
    pub positives: usize,
    pub movies_with_posters: usize,
}

impl BuildStats {
    pub fn positive_rate(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.positives as f64 / self.samples as f64
        }
    }
}

/// Lookup tables shared by every sample of a build.
pub struct FeatureContext {
    movies: HashMap<i64, MovieInfo>,
    totals: HashMap<i64, MovieTotals>,
    num_buckets: usize,
}

fn rating_year(timestamp: i64) -> Option<i32> {
    DateTime::from_timestamp(timestamp, 0).map(|dt| dt.year())
}

impl FeatureContext {
    /// `ratings` should already exclude ratings of unknown movies.
    pub fn new(
        ratings: &[RatingRecord],
        movies: &[MovieRecord],
        posters: &BTreeMap<i64, PosterFeatureVector>,
        num_buckets: usize,
    ) -> Self {
        // genre frequency over the movie table decides which tags survive
        let mut freq = [0usize; GENRE_VOCAB];
        for m in movies {
            for g in m.genres.iter().filter_map(|g| genre_index(g)) {
                freq[g] += 1;
            }
        }
        let movies = movies
            .iter()
            .map(|m| {
                let mut idx: Vec<usize> = m.genres.iter().filter_map(|g| genre_index(g)).collect();
                idx.sort_by(|a, b| freq[*b].cmp(&freq[*a]).then(a.cmp(b)));
                let mut genres = [0; MAX_GENRES];
                for (slot, g) in genres.iter_mut().zip(idx) {
                    *slot = g;
                }
                let info = MovieInfo {
                    genres,
                    year: m.release_year,
                    poster: posters.get(&m.movie_id).copied(),
                };
                (m.movie_id, info)
            })
            .collect();
        let mut totals: HashMap<i64, MovieTotals> = HashMap::new();
        for r in ratings {
            let t = totals.entry(r.movie_id).or_default();
            t.count += 1;
            t.sum += r.rating;
            t.sum_sq += r.rating * r.rating;
        }
        Self {
            movies,
            totals,
            num_buckets,
        }
    }

    pub fn has_movie(&self, movie_id: i64) -> bool {
        self.movies.contains_key(&movie_id)
    }

    /// Movie statistics over its ratings, leaving out `excluded` (the
    /// target rating) when given.
    fn movie_stats(&self, movie_id: i64, excluded: Option<f64>) -> [f64; 4] {
        let t = self.totals.get(&movie_id).copied().unwrap_or_default();
        let (count, sum, sum_sq) = match excluded {
            Some(r) => (t.count - 1, t.sum - r, t.sum_sq - r * r),
            None => (t.count, t.sum, t.sum_sq),
        };
        let year = self.movies[&movie_id].year.map_or(0.0, f64::from);
        if count == 0 {
            return [0.0, 0.0, 0.0, year];
        }
        let n = count as f64;
        let mean = sum / n;
        let std = (sum_sq / n - mean * mean).max(0.0).sqrt();
        [n, mean, std, year]
    }

    fn make_sample(
        &self,
        target: &RatingRecord,
        user: &UserAccumulator,
        leave_out_target: bool,
    ) -> Sample {
        let info = &self.movies[&target.movie_id];
        let mut history_movie_ids = [0; HISTORY_LEN];
        let mut history_genres = [0; HISTORY_LEN * MAX_GENRES];
        let mut posters = Vec::new();
        for (slot, &movie) in user.liked.iter().rev().take(HISTORY_LEN).enumerate() {
            let h = &self.movies[&movie];
            history_movie_ids[slot] = bucketize_id(movie, self.num_buckets);
            history_genres[slot * MAX_GENRES..(slot + 1) * MAX_GENRES].copy_from_slice(&h.genres);
            if let Some(p) = h.poster {
                posters.push(p);
            }
        }
        let history_poster_agg =
            aggregate_history_poster_features(&posters).unwrap_or([0.0; HISTORY_AGG_LEN]);
        let scene = match (info.year, rating_year(target.timestamp)) {
            (Some(release), Some(rated)) => f64::from(rated - release).clamp(0.0, SCENE_CAP),
            _ => 0.0,
        };
        Sample {
            label: label_of(target.rating),
            user_raw: target.user_id,
            movie_raw: target.movie_id,
            timestamp: target.timestamp,
            user_id: bucketize_id(target.user_id, self.num_buckets),
            movie_id: bucketize_id(target.movie_id, self.num_buckets),
            user_stats: user.stats(),
            movie_stats: self.movie_stats(
                target.movie_id,
                leave_out_target.then_some(target.rating),
            ),
            candidate_genres: info.genres,
            history_movie_ids,
            history_genres,
            history_poster_agg,
            candidate_poster: info.poster.map_or([0.0; POSTER_LEN], |p| p.to_array()),
            scene,
        }
    }

    /// Features for a hypothetical rating that is not part of `ratings`:
    /// the user profile uses that user's ratings strictly before
    /// `query.timestamp` and the movie profile uses all ratings of the
    /// movie. This is the slow per-query path; it rescans `ratings`.
    pub fn sample_for_query(&self, ratings: &[RatingRecord], query: &RatingRecord) -> Option<Sample> {
        if !self.has_movie(query.movie_id) {
            return None;
        }
        let mut prior: Vec<(usize, &RatingRecord)> = ratings
            .iter()
            .enumerate()
            .filter(|(_, r)| {
                r.user_id == query.user_id
                    && r.timestamp < query.timestamp
                    && self.has_movie(r.movie_id)
            })
            .collect();
        prior.sort_by_key(|(i, r)| (r.timestamp, *i));
        let mut acc = UserAccumulator::default();
        for (_, r) in prior {
            acc.push(r, &self.movies[&r.movie_id]);
        }
        Some(self.make_sample(query, &acc, false))
    }
}

/// Builds one sample per rating.
///
/// Ratings of movies missing from `movies` are skipped and counted. Each
/// sample's user profile and liked-movie history come only from the same
/// user's ratings with strictly earlier timestamps; its movie profile uses
/// every other rating of the movie. Output is ordered by user id, then
/// timestamp, then input order.
pub fn build_profiles_and_samples(
    ratings: &[RatingRecord],
    movies: &[MovieRecord],
    posters: &BTreeMap<i64, PosterFeatureVector>,
    num_buckets: usize,
) -> (Vec<Sample>, BuildStats) {
    let known: Vec<bool> = {
        let ids: std::collections::HashSet<i64> = movies.iter().map(|m| m.movie_id).collect();
        ratings.iter().map(|r| ids.contains(&r.movie_id)).collect()
    };
    let kept: Vec<RatingRecord> = ratings
        .iter()
        .zip(&known)
        .filter(|(_, &k)| k)
        .map(|(r, _)| *r)
        .collect();
    let ctx = FeatureContext::new(&kept, movies, posters, num_buckets);

    let mut by_user: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, r) in kept.iter().enumerate() {
        by_user.entry(r.user_id).or_default().push(i);
    }
    let users: Vec<Vec<usize>> = by_user
        .into_values()
        .map(|mut idx| {
            idx.sort_by_key(|&i| (kept[i].timestamp, i));
            idx
        })
        .collect();

    let per_user = map_ordered(&users, |idx| {
        let mut acc = UserAccumulator::default();
        let mut out = Vec::with_capacity(idx.len());
        let mut start = 0;
        while start < idx.len() {
            let ts = kept[idx[start]].timestamp;
            let end = start + idx[start..].iter().take_while(|&&i| kept[i].timestamp == ts).count();
            for &i in &idx[start..end] {
                out.push(ctx.make_sample(&kept[i], &acc, true));
            }
            for &i in &idx[start..end] {
                let r = &kept[i];
                acc.push(r, &ctx.movies[&r.movie_id]);
            }
            start = end;
        }
        out
    });
    let samples: Vec<Sample> = per_user.into_iter().flatten().collect();
    let stats = BuildStats {
        skipped_missing_movie: ratings.len() - kept.len(),
        samples: samples.len(),
        positives: samples.iter().filter(|s| s.label == 1).count(),
        movies_with_posters: ctx.movies.values().filter(|m| m.poster.is_some()).count(),
    };
    (samples, stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn movie(id: i64, year: i32, genres: &[&str]) -> MovieRecord {
        MovieRecord {
            movie_id: id,
            title: format!("M{id} ({year})"),
            genres: genres.iter().map(|g| g.to_string()).collect(),
            release_year: Some(year),
        }
    }

    fn rating(user: i64, movie: i64, rating: f64, ts: i64) -> RatingRecord {
        RatingRecord {
            user_id: user,
            movie_id: movie,
            rating,
            timestamp: ts,
        }
    }

    #[test]
    fn bucketize_properties() {
        assert!((0..100).all(|id| bucketize_id(id, 1) == 1));
        assert_eq!(bucketize_id(12345, 97), bucketize_id(12345, 97));
        let mut load = vec![0usize; 1001];
        for id in 0..100_000 {
            let b = bucketize_id(id, 1000);
            assert!((1..=1000).contains(&b));
            load[b] += 1;
        }
        let max = *load.iter().max().unwrap();
        assert!(max < 3 * 100, "max bucket load {max}");
    }

    #[test]
    fn first_rating_is_cold_start() {
        let movies = vec![movie(1, 1990, &["Drama"])];
        let ratings = vec![rating(7, 1, 4.0, 1_000_000_000)];
        let (samples, stats) = build_profiles_and_samples(&ratings, &movies, &BTreeMap::new(), 100);
        assert_eq!(stats.samples, 1);
        let s = &samples[0];
        assert_eq!(s.user_stats, [0.0; 4]);
        assert_eq!(s.history_movie_ids, [0; HISTORY_LEN]);
        assert_eq!(s.history_poster_agg, [0.0; HISTORY_AGG_LEN]);
        // only rating of the movie is the target itself
        assert_eq!(s.movie_stats, [0.0, 0.0, 0.0, 1990.0]);
        // 2001 - 1990
        assert_eq!(s.scene, 11.0);
    }

    #[test]
    fn history_is_recent_positives_newest_first() {
        let movies: Vec<_> = (1..=6).map(|i| movie(i, 2000, &["Comedy"])).collect();
        let ratings = vec![
            rating(1, 1, 4.0, 10),
            rating(1, 2, 5.0, 20),
            rating(1, 5, 2.0, 25),
            rating(1, 3, 3.5, 30),
            rating(1, 4, 1.0, 40),
        ];
        let (samples, _) = build_profiles_and_samples(&ratings, &movies, &BTreeMap::new(), 1000);
        let last = samples.iter().find(|s| s.movie_raw == 4).unwrap();
        let b = |id| bucketize_id(id, 1000);
        assert_eq!(last.history_movie_ids, [b(3), b(2), b(1), 0, 0]);
        let comedy = genre_index("Comedy").unwrap();
        assert_eq!(&last.history_genres[..4], &[comedy, 0, 0, 0]);
        assert_eq!(last.history_genres[12..], [0; 8]);
        assert_eq!(last.user_stats[0], 4.0);
        assert_eq!(last.user_stats[1], (4.0 + 5.0 + 2.0 + 3.5) / 4.0);
    }

    #[test]
    fn equal_timestamps_do_not_see_each_other() {
        let movies = vec![movie(1, 2000, &[]), movie(2, 2000, &[])];
        let ratings = vec![rating(1, 1, 5.0, 10), rating(1, 2, 5.0, 10)];
        let (samples, _) = build_profiles_and_samples(&ratings, &movies, &BTreeMap::new(), 10);
        assert!(samples.iter().all(|s| s.user_stats[0] == 0.0));
        assert!(samples.iter().all(|s| s.history_movie_ids == [0; 5]));
    }

    #[test]
    fn missing_movies_are_skipped_and_counted() {
        let movies = vec![movie(1, 2000, &[])];
        let ratings = vec![rating(1, 1, 5.0, 10), rating(1, 99, 5.0, 11)];
        let (samples, stats) = build_profiles_and_samples(&ratings, &movies, &BTreeMap::new(), 10);
        assert_eq!(samples.len(), 1);
        assert_eq!(stats.skipped_missing_movie, 1);
    }

    #[test]
    fn genres_keep_most_frequent_first() {
        let movies = vec![
            movie(1, 2000, &["Western", "Drama", "War", "Comedy", "Action"]),
            movie(2, 2000, &["Drama", "Comedy"]),
            movie(3, 2000, &["Drama"]),
        ];
        let ratings = vec![rating(1, 1, 3.0, 5)];
        let (samples, _) = build_profiles_and_samples(&ratings, &movies, &BTreeMap::new(), 10);
        let g = |t| genre_index(t).unwrap();
        // Drama 3, Comedy 2, then ties broken by vocabulary order
        assert_eq!(samples[0].candidate_genres, [g("Drama"), g("Comedy"), g("Action"), g("War")]);
    }
}
