use approx::assert_abs_diff_eq;
use mmdin_core::image_features::{
    column_frequency, extract_poster_features, luminance_matrix, row_frequency, spatial_frequency,
    GrayMatrix, PosterFeatureVector, RgbImage,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Row frequency, column frequency and their combination from nested loops
/// over the luminance formula written out per pixel.
fn oracle(img: &RgbImage) -> (f64, f64, f64) {
    let (w, h) = (img.width, img.height);
    let lum = |i: usize, j: usize| {
        let [r, g, b] = img.pixels[i * w + j];
        0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64
    };
    let (mut rf, mut cf) = (0.0, 0.0);
    for i in 0..h - 1 {
        for j in 0..w - 1 {
            rf += (lum(i, j) - lum(i, j + 1)).powi(2);
            cf += (lum(i, j) - lum(i + 1, j)).powi(2);
        }
    }
    let n = (w * h) as f64;
    let (rf, cf) = ((rf / n).sqrt(), (cf / n).sqrt());
    (rf, cf, (rf * rf + cf * cf).sqrt())
}

fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> RgbImage {
    let pixels = (0..w * h).map(|_| rng.random::<[u8; 3]>()).collect();
    RgbImage::new(w, h, pixels).unwrap()
}

fn random_sized_image(rng: &mut ChaCha8Rng, max_side: usize) -> RgbImage {
    let (w, h) = (rng.random_range(2..=max_side), rng.random_range(2..=max_side));
    random_image(rng, w, h)
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> GrayMatrix {
    GrayMatrix::new(rows, cols, (0..rows * cols).map(|_| rng.random_range(-50.0..50.0)).collect())
}

#[test]
fn spatial_frequency_matches_double_loop_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let (w, h) = (rng.random_range(2..=64), rng.random_range(2..=64));
        let img = random_image(&mut rng, w, h);
        let lum = luminance_matrix(&img);
        let (rf, cf, sf) = oracle(&img);
        assert_abs_diff_eq!(row_frequency(&lum).unwrap(), rf, epsilon = 1e-9);
        assert_abs_diff_eq!(column_frequency(&lum).unwrap(), cf, epsilon = 1e-9);
        assert_abs_diff_eq!(spatial_frequency(&lum).unwrap(), sf, epsilon = 1e-9);
        assert_abs_diff_eq!(extract_poster_features(&img).unwrap().sf, sf, epsilon = 1e-9);
    }
}

#[test]
fn constant_images_have_zero_frequency() {
    for color in [[0, 0, 0], [255, 255, 255], [12, 200, 77]] {
        let f = extract_poster_features(&RgbImage::filled(7, 5, color).unwrap()).unwrap();
        assert_eq!(f.sf, 0.0);
        for std in [f.sat_std, f.val_std, f.chroma_std, f.r_std, f.g_std, f.b_std] {
            assert_eq!(std, 0.0);
        }
    }
}

#[test]
fn unit_checkerboard_frequencies() {
    let f = GrayMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
    assert_abs_diff_eq!(row_frequency(&f).unwrap(), 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(column_frequency(&f).unwrap(), 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(spatial_frequency(&f).unwrap(), 0.5f64.sqrt(), epsilon = 1e-12);
}

#[test]
fn identical_rows_have_zero_column_frequency() {
    let row: Vec<f64> = (0..6).map(|j| j as f64 * 3.5).collect();
    let f = GrayMatrix::from_rows(&vec![row; 4]);
    assert_eq!(column_frequency(&f).unwrap(), 0.0);
    assert!(row_frequency(&f).unwrap() > 0.0);
}

#[test]
fn frequencies_scale_with_absolute_gain() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let (r, c) = (rng.random_range(2..=20), rng.random_range(2..=20));
        let f = random_matrix(&mut rng, r, c);
        let gain: f64 = rng.random_range(-4.0..4.0);
        let g = GrayMatrix::new(r, c, f.data.iter().map(|v| v * gain).collect());
        for op in [row_frequency, column_frequency, spatial_frequency] {
            let expected = gain.abs() * op(&f).unwrap();
            assert_abs_diff_eq!(op(&g).unwrap(), expected, epsilon = 1e-9);
        }
    }
}

#[test]
fn transpose_swaps_row_and_column_frequency_on_square_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in 2..=16 {
        let f = random_matrix(&mut rng, n, n);
        let t = GrayMatrix::new(n, n, (0..n * n).map(|k| f.at(k % n, k / n)).collect());
        assert_abs_diff_eq!(row_frequency(&t).unwrap(), column_frequency(&f).unwrap(), epsilon = 1e-9);
        assert_abs_diff_eq!(column_frequency(&t).unwrap(), row_frequency(&f).unwrap(), epsilon = 1e-9);
    }
}

#[test]
fn spatial_frequency_dominates_its_components() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let (r, c) = (rng.random_range(2..=12), rng.random_range(2..=12));
        let f = random_matrix(&mut rng, r, c);
        let sf = spatial_frequency(&f).unwrap();
        assert!(sf >= row_frequency(&f).unwrap());
        assert!(sf >= column_frequency(&f).unwrap());
    }
}

#[test]
fn colour_statistics_ignore_pixel_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..30 {
        let img = random_sized_image(&mut rng, 24);
        let mut shuffled = img.clone();
        shuffled.pixels.shuffle(&mut rng);
        let (a, b) = (
            extract_poster_features(&img).unwrap().to_array(),
            extract_poster_features(&shuffled).unwrap().to_array(),
        );
        for (k, name) in PosterFeatureVector::FIELD_NAMES.iter().enumerate() {
            if *name != "sf" {
                assert_abs_diff_eq!(a[k], b[k], epsilon = 1e-9);
            }
        }
    }
}

#[test]
fn extraction_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let img = random_image(&mut rng, 31, 17);
    let (a, b) = (extract_poster_features(&img).unwrap(), extract_poster_features(&img).unwrap());
    assert_eq!(a.to_array().map(f64::to_bits), b.to_array().map(f64::to_bits));
}

fn check_ranges(f: &PosterFeatureVector) {
    for v in [f.sat_mean, f.sat_std, f.val_mean, f.val_std, f.chroma_mean, f.chroma_std] {
        assert!((0.0..=1.0).contains(&v), "{f:?}");
    }
    for v in [f.r_mean, f.r_std, f.g_mean, f.g_std, f.b_mean, f.b_std] {
        assert!((0.0..=255.0).contains(&v), "{f:?}");
    }
    assert!(f.sf >= 0.0 && f.sf.is_finite(), "{f:?}");
}

#[test]
fn feature_ranges_over_ten_thousand_images() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..10_000 {
        let img = random_sized_image(&mut rng, 12);
        check_ranges(&extract_poster_features(&img).unwrap());
    }
}

proptest! {
    #[test]
    fn feature_ranges_hold_for_arbitrary_images(
        (w, h, pixels) in (2usize..10, 2usize..10).prop_flat_map(|(w, h)| {
            (Just(w), Just(h), proptest::collection::vec(any::<[u8; 3]>(), w * h))
        })
    ) {
        let img = RgbImage::new(w, h, pixels).unwrap();
        check_ranges(&extract_poster_features(&img).unwrap());
    }
}
