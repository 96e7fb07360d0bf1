//! Seeded parameter initializers.

use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Glorot-uniform weights for a `[fan_in×fan_out]` dense layer.
pub fn glorot_uniform<R: Rng>(rng: &mut R, fan_in: usize, fan_out: usize) -> Vec<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..fan_in * fan_out)
        .map(|_| rng.random_range(-limit..=limit))
        .collect()
}

/// Normal(0, 0.01) entries for an embedding table.
pub fn embedding_normal<R: Rng>(rng: &mut R, rows: usize, dim: usize) -> Vec<f64> {
    let normal = Normal::new(0.0, 0.01).expect("valid normal parameters");
    (0..rows * dim).map(|_| normal.sample(rng)).collect()
}

pub const PRELU_ALPHA: f64 = 0.25;
