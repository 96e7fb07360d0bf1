use std::fmt;
use std::str::FromStr;

use super::ModelError;
use crate::pipeline::DEFAULT_NUM_BUCKETS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Mmdin,
    Din,
    EmbeddingMlp,
    NeuralCf,
    DeepFm,
}

impl Variant {
    /// Reporting order: baselines first, the full model last.
    pub const ALL: [Variant; 5] = [
        Variant::NeuralCf,
        Variant::EmbeddingMlp,
        Variant::DeepFm,
        Variant::Din,
        Variant::Mmdin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Mmdin => "MMDIN",
            Variant::Din => "DIN",
            Variant::EmbeddingMlp => "EmbeddingMLP",
            Variant::NeuralCf => "NeuralCF",
            Variant::DeepFm => "DeepFM",
        }
    }

    pub fn valid_names() -> String {
        Self::ALL.map(Variant::name).join(", ")
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                ModelError::Config(format!(
                    "unknown variant '{s}' (expected one of: {})",
                    Variant::valid_names()
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub variant: Variant,
    pub embedding_dim: usize,
    pub num_heads: usize,
    /// Residual blocks per head; 0 leaves only compress → output.
    pub blocks_per_head: usize,
    pub head_width: usize,
    pub attention_hidden: usize,
    pub use_multimodal: bool,
    pub num_buckets_users: usize,
    pub num_buckets_movies: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::for_variant(Variant::Mmdin)
    }
}

impl ModelConfig {
    pub const KEYS: [&'static str; 13] = [
        "variant",
        "embedding_dim",
        "num_heads",
        "blocks_per_head",
        "head_width",
        "attention_hidden",
        "use_multimodal",
        "num_buckets_users",
        "num_buckets_movies",
        "learning_rate",
        "batch_size",
        "epochs",
        "seed",
    ];

    pub fn for_variant(variant: Variant) -> Self {
        Self {
            variant,
            embedding_dim: 16,
            num_heads: 4,
            blocks_per_head: 2,
            head_width: 64,
            attention_hidden: 32,
            use_multimodal: variant == Variant::Mmdin,
            num_buckets_users: DEFAULT_NUM_BUCKETS,
            num_buckets_movies: DEFAULT_NUM_BUCKETS,
            learning_rate: 1e-3,
            batch_size: 512,
            epochs: 5,
            seed: 42,
        }
    }

    /// Whether poster features feed the network.
    pub fn multimodal_active(&self) -> bool {
        self.variant == Variant::Mmdin && self.use_multimodal
    }

    /// Heads actually built (DIN always runs a single plain stack).
    pub fn effective_heads(&self) -> usize {
        if self.variant == Variant::Din {
            1
        } else {
            self.num_heads
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let dims = [
            ("embedding_dim", self.embedding_dim),
            ("num_heads", self.num_heads),
            ("head_width", self.head_width),
            ("attention_hidden", self.attention_hidden),
            ("num_buckets_users", self.num_buckets_users),
            ("num_buckets_movies", self.num_buckets_movies),
            ("batch_size", self.batch_size),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(ModelError::Config(format!("{name} must be at least 1")));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(ModelError::Config(format!(
                "learning_rate must be a finite non-negative number, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }

    /// Sets one field from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ModelError> {
        let value = value.trim();
        let bad = |what: &str| ModelError::Config(format!("{key}: expected {what}, got '{value}'"));
        let int = || value.parse::<usize>().map_err(|_| bad("a non-negative integer"));
        match key {
            "variant" => self.variant = value.parse()?,
            "embedding_dim" => self.embedding_dim = int()?,
            "num_heads" => self.num_heads = int()?,
            "blocks_per_head" => self.blocks_per_head = int()?,
            "head_width" => self.head_width = int()?,
            "attention_hidden" => self.attention_hidden = int()?,
            "use_multimodal" => {
                self.use_multimodal = match value.to_ascii_lowercase().as_str() {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    _ => return Err(bad("true or false")),
                }
            }
            "num_buckets_users" => self.num_buckets_users = int()?,
            "num_buckets_movies" => self.num_buckets_movies = int()?,
            "learning_rate" => {
                self.learning_rate = value.parse().map_err(|_| bad("a number"))?;
            }
            "batch_size" => self.batch_size = int()?,
            "epochs" => self.epochs = int()?,
            "seed" => self.seed = value.parse().map_err(|_| bad("an unsigned integer"))?,
            _ => {
                return Err(ModelError::Config(format!(
                    "unknown config key '{key}' (expected one of: {})",
                    Self::KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// `(key, value)` pairs in [`ModelConfig::KEYS`] order; feeding them back
    /// through [`ModelConfig::set`] reproduces the config exactly.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("variant", self.variant.name().to_string()),
            ("embedding_dim", self.embedding_dim.to_string()),
            ("num_heads", self.num_heads.to_string()),
            ("blocks_per_head", self.blocks_per_head.to_string()),
            ("head_width", self.head_width.to_string()),
            ("attention_hidden", self.attention_hidden.to_string()),
            ("use_multimodal", self.use_multimodal.to_string()),
            ("num_buckets_users", self.num_buckets_users.to_string()),
            ("num_buckets_movies", self.num_buckets_movies.to_string()),
            ("learning_rate", format!("{:?}", self.learning_rate)),
            ("batch_size", self.batch_size.to_string()),
            ("epochs", self.epochs.to_string()),
            ("seed", self.seed.to_string()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_names_parse_case_insensitively() {
        for v in Variant::ALL {
            assert_eq!(v.name().to_lowercase().parse::<Variant>().unwrap(), v);
        }
        let err = "Wide&Deep".parse::<Variant>().unwrap_err().to_string();
        for v in Variant::ALL {
            assert!(err.contains(v.name()));
        }
    }

    #[test]
    fn pairs_round_trip() {
        let mut c = ModelConfig::for_variant(Variant::DeepFm);
        c.learning_rate = 0.1 + 0.2;
        c.seed = u64::MAX;
        let mut back = ModelConfig::default();
        for (k, v) in c.to_pairs() {
            back.set(k, &v).unwrap();
        }
        assert_eq!(back, c);
    }

    #[test]
    fn zero_dimension_is_rejected() {
        let mut c = ModelConfig::default();
        c.head_width = 0;
        assert!(matches!(c.validate(), Err(ModelError::Config(_))));
        c.head_width = 1;
        c.blocks_per_head = 0;
        assert!(c.validate().is_ok());
    }
}
