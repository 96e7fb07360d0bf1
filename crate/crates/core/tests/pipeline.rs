use std::collections::BTreeMap;

use approx::assert_abs_diff_eq;
use mmdin_core::image_features::{extract_poster_features, PosterFeatureVector};
use mmdin_core::pipeline::{
    build_profiles_and_samples, bucketize_id, label_of, read_samples, split_train_test, write_samples,
    FeatureContext, MovieRecord, RatingRecord, HISTORY_LEN,
};
use mmdin_core::synthetic::{random_sample, random_samples, ratings_fixture, synthetic_poster};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn posters_for(movies: &[MovieRecord]) -> BTreeMap<i64, PosterFeatureVector> {
    movies
        .iter()
        .filter(|m| m.movie_id % 2 == 0)
        .map(|m| (m.movie_id, extract_poster_features(&synthetic_poster(m, 1)).unwrap()))
        .collect()
}

#[test]
fn deleting_a_rating_leaves_its_own_profile_unchanged() {
    let (ratings, movies) = ratings_fixture(1_000, 40, 120, 7);
    let posters = posters_for(&movies);
    let (samples, _) = build_profiles_and_samples(&ratings, &movies, &posters, 500);
    assert_eq!(samples.len(), ratings.len());
    for (k, target) in ratings.iter().enumerate() {
        let mut rest = ratings.clone();
        rest.remove(k);
        let ctx = FeatureContext::new(&rest, &movies, &posters, 500);
        let rebuilt = ctx.sample_for_query(&rest, target).unwrap();
        let original = samples
            .iter()
            .find(|s| s.key() == (target.user_id, target.movie_id, target.timestamp))
            .unwrap();
        assert_eq!(rebuilt.user_stats.map(f64::to_bits), original.user_stats.map(f64::to_bits));
        assert_eq!(rebuilt.history_movie_ids, original.history_movie_ids);
        assert_eq!(rebuilt.history_genres, original.history_genres);
        assert_eq!(rebuilt.history_poster_agg, original.history_poster_agg);
        assert_eq!(rebuilt.label, original.label);
        for (a, b) in rebuilt.movie_stats.iter().zip(&original.movie_stats) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }
}

#[test]
fn histories_hold_at_most_five_earlier_positives() {
    let (ratings, movies) = ratings_fixture(1_000, 25, 80, 3);
    let (samples, _) = build_profiles_and_samples(&ratings, &movies, &BTreeMap::new(), 10_000);
    for s in &samples {
        let liked: Vec<usize> = ratings
            .iter()
            .filter(|r| r.user_id == s.user_raw && r.timestamp < s.timestamp && label_of(r.rating) == 1)
            .map(|r| bucketize_id(r.movie_id, 10_000))
            .collect();
        let filled = s.history_movie_ids.iter().take_while(|&&id| id != 0).count();
        assert_eq!(filled, liked.len().min(HISTORY_LEN));
        assert!(s.history_movie_ids[filled..].iter().all(|&id| id == 0));
        for id in &s.history_movie_ids[..filled] {
            assert!(liked.contains(id));
        }
    }
}

#[test]
fn movie_profile_leaves_out_the_target_rating() {
    let movies = vec![MovieRecord {
        movie_id: 9,
        title: "Nine (1999)".into(),
        genres: vec!["Drama".into()],
        release_year: Some(1999),
    }];
    let r = |user, rating, timestamp| RatingRecord {
        user_id: user,
        movie_id: 9,
        rating,
        timestamp,
    };
    let ratings = vec![r(1, 4.0, 10), r(2, 2.0, 20), r(3, 5.0, 30)];
    let (samples, _) = build_profiles_and_samples(&ratings, &movies, &BTreeMap::new(), 10);
    let stats = |user| samples.iter().find(|s| s.user_raw == user).unwrap().movie_stats;
    // others of user 1: {2, 5}; of user 2: {4, 5}; of user 3: {4, 2}
    for (user, mean, std) in [(1, 3.5, 1.5), (2, 4.5, 0.5), (3, 3.0, 1.0)] {
        let s = stats(user);
        assert_eq!(s[0], 2.0);
        assert_abs_diff_eq!(s[1], mean, epsilon = 1e-12);
        assert_abs_diff_eq!(s[2], std, epsilon = 1e-12);
        assert_eq!(s[3], 1999.0);
    }
}

#[test]
fn pipeline_output_is_deterministic() {
    let (ratings, movies) = ratings_fixture(800, 30, 60, 5);
    let posters = posters_for(&movies);
    let encode = || {
        let (samples, _) = build_profiles_and_samples(&ratings, &movies, &posters, 1000);
        let split = split_train_test(&samples, 0.8, 9);
        let mut bytes = Vec::new();
        write_samples(&mut bytes, &split.train).unwrap();
        write_samples(&mut bytes, &split.test).unwrap();
        bytes
    };
    assert_eq!(encode(), encode());
}

#[test]
fn bucket_load_is_even() {
    let mut load = vec![0usize; 1001];
    for id in 0..100_000 {
        load[bucketize_id(id, 1000)] += 1;
    }
    assert_eq!(load[0], 0);
    assert!(*load.iter().max().unwrap() < 3 * 100);
}

#[test]
fn split_sizes_and_prevalence() {
    let template = random_samples(1, 10, 0).pop().unwrap();
    let samples: Vec<_> = (0..100_000)
        .map(|i| {
            let mut s = template.clone();
            s.label = (i % 2) as u8;
            s.timestamp = i;
            s
        })
        .collect();
    let split = split_train_test(&samples, 0.8, 42);
    assert_eq!((split.train.len(), split.test.len()), (80_000, 20_000));
    let rate = |v: &[mmdin_core::pipeline::Sample]| v.iter().filter(|s| s.label == 1).count() as f64 / v.len() as f64;
    assert!((rate(&split.train) - rate(&split.test)).abs() < 0.02);
    let mut keys: Vec<i64> = split.train.iter().chain(&split.test).map(|s| s.timestamp).collect();
    keys.sort_unstable();
    keys.dedup();
    assert_eq!(keys.len(), 100_000);
    assert_eq!(split_train_test(&samples, 0.8, 42), split);
}

#[test]
fn thousand_random_samples_round_trip_exactly() {
    let samples = random_samples(1_000, 10_000, 17);
    let mut bytes = Vec::new();
    write_samples(&mut bytes, &samples).unwrap();
    assert_eq!(read_samples(bytes.as_slice()).unwrap(), samples);
}

proptest! {
    #[test]
    fn arbitrary_finite_values_round_trip(
        seed in any::<u64>(),
        floats in proptest::collection::vec(
            any::<f64>().prop_filter("finite", |v| v.is_finite()),
            8,
        ),
    ) {
        let mut s = random_sample(&mut ChaCha8Rng::seed_from_u64(seed), 50);
        s.user_stats = [floats[0], floats[1], floats[2], floats[3]];
        s.movie_stats[1] = floats[4];
        s.history_poster_agg[0] = floats[5];
        s.candidate_poster[12] = floats[6];
        s.scene = floats[7];
        let mut bytes = Vec::new();
        write_samples(&mut bytes, std::slice::from_ref(&s)).unwrap();
        let back = read_samples(bytes.as_slice()).unwrap();
        prop_assert_eq!(back.len(), 1);
        prop_assert_eq!(&back[0], &s);
    }
}
