use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use mmdin_core::model::Variant;
use mmdin_core::pipeline::DEFAULT_NUM_BUCKETS;

#[derive(Debug, Parser)]
#[command(name = "mmdin", version, about = "Train and evaluate multimodal movie recommendation models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute poster features for every `<movieId>.ppm` in a directory.
    ExtractFeatures(ExtractArgs),
    /// Build train.csv / test.csv from MovieLens ratings and movies.
    BuildDataset(BuildArgs),
    /// Train one model variant on a built dataset.
    Train(TrainArgs),
    /// Score a checkpoint on the test split and export metrics and curves.
    Evaluate(EvaluateArgs),
    /// Train and evaluate all five variants over several seeds.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub posters: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub ratings: PathBuf,
    #[arg(long)]
    pub movies: PathBuf,
    #[arg(long)]
    pub poster_features: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Split seed (falls back to MMDIN_SEED, then 42).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_NUM_BUCKETS)]
    pub num_buckets: usize,
    #[arg(long, default_value_t = 0.8)]
    pub train_ratio: f64,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: mmdin_core::model::ModelError| e.to_string())
}

/// Command-line overrides for model config fields.
#[derive(Debug, Clone, Default, Args)]
pub struct ModelOverrides {
    /// Model seed (falls back to the config file, then MMDIN_SEED, then 42).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub embedding_dim: Option<usize>,
    #[arg(long)]
    pub num_heads: Option<usize>,
    #[arg(long)]
    pub blocks_per_head: Option<usize>,
    #[arg(long)]
    pub head_width: Option<usize>,
    #[arg(long)]
    pub attention_hidden: Option<usize>,
    #[arg(long)]
    pub use_multimodal: Option<bool>,
    #[arg(long)]
    pub num_buckets_users: Option<usize>,
    #[arg(long)]
    pub num_buckets_movies: Option<usize>,
}

impl ModelOverrides {
    /// `(key, value)` pairs for every flag that was given, seed excluded.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut push = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k, v));
            }
        };
        push("epochs", self.epochs.map(|v| v.to_string()));
        push("batch_size", self.batch_size.map(|v| v.to_string()));
        push("learning_rate", self.learning_rate.map(|v| format!("{v:?}")));
        push("embedding_dim", self.embedding_dim.map(|v| v.to_string()));
        push("num_heads", self.num_heads.map(|v| v.to_string()));
        push("blocks_per_head", self.blocks_per_head.map(|v| v.to_string()));
        push("head_width", self.head_width.map(|v| v.to_string()));
        push("attention_hidden", self.attention_hidden.map(|v| v.to_string()));
        push("use_multimodal", self.use_multimodal.map(|v| v.to_string()));
        push("num_buckets_users", self.num_buckets_users.map(|v| v.to_string()));
        push("num_buckets_movies", self.num_buckets_movies.map(|v| v.to_string()));
        out
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// One of NeuralCF, EmbeddingMLP, DeepFM, DIN, MMDIN.
    #[arg(long, value_parser = parse_variant)]
    pub variant: Variant,
    /// `key = value` model config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: ModelOverrides,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Seed for the curve subsample and scatter jitter (defaults to the
    /// checkpoint's seed).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Largest number of test samples drawn into curves and scatter.
    #[arg(long, default_value_t = 20_000)]
    pub curve_samples: usize,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Number of seeds; seed i runs with base seed + i.
    #[arg(long, default_value_t = 1)]
    pub seeds: usize,
    /// Jobs trained concurrently.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[command(flatten)]
    pub overrides: ModelOverrides,
}
