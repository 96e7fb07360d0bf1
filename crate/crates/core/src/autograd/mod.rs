//! A small reverse-mode automatic differentiation engine.
//!
//! Tensors are dense `f64` arrays. Each op records its inputs, and
//! [`Tensor::backward`] walks the recorded graph from a scalar loss in
//! reverse topological order. Only the operations the recommendation
//! models need are provided.

mod adam;
pub mod init;
mod ops;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use ops::{
    add, add_row, bce_loss, concat_cols, embedding_lookup, fm_pairwise, gather_rows, group_pool,
    matmul, outer_product, prelu, reshape, row_outer, sigmoid, stable_sigmoid, sum,
    weighted_sum_pool, PROB_CLAMP,
};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("{op}: incompatible shapes {lhs:?} and {rhs:?}")]
    Shape {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("{op}: expected rank {expected}, got shape {shape:?}")]
    Rank {
        op: &'static str,
        expected: usize,
        shape: Vec<usize>,
    },
    #[error("data of length {len} does not fit shape {shape:?}")]
    Length { len: usize, shape: Vec<usize> },
    #[error("index {index} out of range for table with {len} rows")]
    Index { index: usize, len: usize },
    #[error("{0}: empty input")]
    Empty(&'static str),
    #[error("weighted pooling over an empty history; pad the history first")]
    EmptyHistory,
    #[error("label {value} at position {position} is not 0 or 1")]
    Label { position: usize, value: f64 },
    #[error("backward requires a one-element loss, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),
    #[error("non-finite gradient in parameter {param} at element {index}; update refused")]
    NonFiniteGradient { param: usize, index: usize },
    #[error("parameter {param} has shape {actual:?} but optimizer state expects {expected:?}")]
    OptimizerShape {
        param: usize,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },
}

#[cfg(test)]
mod tests;
