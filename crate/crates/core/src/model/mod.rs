//! Click-through models over [`Sample`](crate::pipeline::Sample) batches.
//!
//! All five variants share the bucketized user/movie embeddings and the
//! genre table (padding row 0 stays zero):
//!
//! * `MMDIN`: attention-pooled history, optional poster features, a
//!   compression layer, `num_heads` parallel residual stacks whose outputs
//!   are summed, and a sigmoid output.
//! * `DIN`: the same without poster features, with one plain stack.
//! * `EmbeddingMLP`: mean-pooled history into a three-layer MLP.
//! * `DeepFM`: the EmbeddingMLP network plus a pairwise factorization
//!   term over the five embedding fields and a linear term.
//! * `NeuralCF`: user and movie embeddings into a two-layer MLP.

mod checkpoint;
mod config;
mod features;
mod layers;
mod network;
mod train;


pub use checkpoint::CHECKPOINT_MAGIC;
pub use config::{ModelConfig, Variant};
pub use features::{Batch, FeatureScaler, NUMERIC_LEN, POSTER_WIDTH};
pub use layers::{AttentionUnit, Dense, DenseAct};
pub use network::{build_model, input_width, Model, Network};
pub use train::{EpochLog, TrainingLog};

use thiserror::Error;

use crate::autograd::TensorError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("dimension error in {stage}: {source}")]
    Dimension {
        stage: &'static str,
        source: TensorError,
    },
    #[error("no samples given")]
    EmptyInput,
    #[error("training diverged at epoch {epoch}, batch {batch}: {detail}")]
    Diverged {
        epoch: usize,
        batch: usize,
        detail: String,
    },
    #[error("model does not match the data or checkpoint: {0}")]
    Incompatible(String),
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
}
