use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::features::{
    Batch, FeatureScaler, HISTORY_GENRE_SLOTS, MOVIE_NUMERIC, POSTER_WIDTH, USER_NUMERIC,
};
use super::layers::{AttentionUnit, Dense, DenseAct, ParamBuilder};
use super::{ModelConfig, ModelError, Variant};
use crate::autograd::{
    add, concat_cols, fm_pairwise, gather_rows, group_pool, sigmoid, Tensor, TensorError,
};
use crate::pipeline::{Sample, GENRE_VOCAB, HISTORY_LEN, MAX_GENRES};

trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, ModelError>;
}

impl<T> Stage<T> for Result<T, TensorError> {
    fn stage(self, stage: &'static str) -> Result<T, ModelError> {
        self.map_err(|source| ModelError::Dimension { stage, source })
    }
}

/// Variant-specific layers on top of the shared embeddings.
#[derive(Debug, Clone)]
pub enum Network {
    /// Attention pooling, compression, parallel stacks summed, output.
    Tower {
        attention: AttentionUnit,
        compress: DenseAct,
        heads: Vec<Vec<DenseAct>>,
        residual: bool,
        output: Dense,
    },
    /// Mean-pooled history into a plain MLP, optionally with the
    /// factorization-machine and linear terms added to the logit.
    Mlp {
        hidden: Vec<DenseAct>,
        output: Dense,
        fm_linear: Option<Dense>,
    },
    /// User and movie embeddings into a small MLP.
    Collaborative { hidden: DenseAct, output: Dense },
}

#[derive(Debug, Clone)]
pub struct Model {
    config: ModelConfig,
    pub scaler: FeatureScaler,
    named: Vec<(String, Tensor)>,
    user_table: Tensor,
    movie_table: Tensor,
    genre_table: Option<Tensor>,
    network: Network,
}

/// Width of the concatenated feature row fed to the tower or MLP.
pub fn input_width(config: &ModelConfig) -> usize {
    let d = config.embedding_dim;
    let base = USER_NUMERIC + MOVIE_NUMERIC + 1 + 5 * d;
    if config.multimodal_active() {
        base + POSTER_WIDTH
    } else {
        base
    }
}

/// Fresh model with parameters drawn from `seed`.
pub fn build_model(config: &ModelConfig, seed: u64) -> Result<Model, ModelError> {
    Model::build(config, seed)
}

impl Model {
    pub fn build(config: &ModelConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let c = config;
        let d = c.embedding_dim;
        let w = c.head_width;
        let mut pb = ParamBuilder::new(ChaCha8Rng::seed_from_u64(seed));
        let user_table = pb.embedding("user", c.num_buckets_users + 1, d);
        let movie_table = pb.embedding("movie", c.num_buckets_movies + 1, d);
        let genre_table = (c.variant != Variant::NeuralCf).then(|| pb.embedding("genre", GENRE_VOCAB, d));
        let act = |pb: &mut ParamBuilder, name: &str, fan_in: usize, fan_out: usize| DenseAct {
            dense: pb.dense(name, fan_in, fan_out),
            alpha: pb.alpha(name),
        };
        let network = match c.variant {
            Variant::Mmdin | Variant::Din => {
                let attention = AttentionUnit::build(&mut pb, d, c.attention_hidden);
                let compress = act(&mut pb, "compress", input_width(c), w);
                let heads = (0..c.effective_heads())
                    .map(|h| {
                        (0..c.blocks_per_head)
                            .map(|b| act(&mut pb, &format!("head{h}.block{b}"), w, w))
                            .collect()
                    })
                    .collect();
                Network::Tower {
                    attention,
                    compress,
                    heads,
                    residual: c.variant == Variant::Mmdin,
                    output: pb.dense("output", w, 1),
                }
            }
            Variant::EmbeddingMlp | Variant::DeepFm => {
                let hidden = vec![
                    act(&mut pb, "mlp0", input_width(c), w),
                    act(&mut pb, "mlp1", w, w),
                ];
                let output = pb.dense("output", w, 1);
                let fm_linear =
                    (c.variant == Variant::DeepFm).then(|| pb.dense("linear", input_width(c), 1));
                Network::Mlp {
                    hidden,
                    output,
                    fm_linear,
                }
            }
            Variant::NeuralCf => Network::Collaborative {
                hidden: act(&mut pb, "mlp0", 2 * d, w),
                output: pb.dense("output", w, 1),
            },
        };
        Ok(Self {
            config: c.clone(),
            scaler: FeatureScaler::default(),
            named: pb.named,
            user_table,
            movie_table,
            genre_table,
            network,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    /// Parameters in creation order.
    pub fn parameters(&self) -> Vec<Tensor> {
        self.named.iter().map(|(_, t)| t.clone()).collect()
    }

    pub fn named_parameters(&self) -> &[(String, Tensor)] {
        &self.named
    }

    pub fn parameter_count(&self) -> usize {
        self.named.iter().map(|(_, t)| t.numel()).sum()
    }

    pub fn batch(&self, samples: &[&Sample]) -> Result<Batch, ModelError> {
        Batch::new(
            samples,
            &self.scaler,
            self.config.num_buckets_users,
            self.config.num_buckets_movies,
        )
    }

    /// Probabilities `[B×1]` for a prepared batch.
    pub fn forward(&self, b: &Batch) -> Result<Tensor, ModelError> {
        Ok(sigmoid(&self.logits(b)?))
    }

    fn logits(&self, b: &Batch) -> Result<Tensor, ModelError> {
        let n = b.len;
        let user = gather_rows(&self.user_table, &b.user_ids, Some(0)).stage("user embedding")?;
        let cand = gather_rows(&self.movie_table, &b.movie_ids, Some(0)).stage("movie embedding")?;
        let genre_table = match &self.network {
            Network::Collaborative { hidden, output } => {
                let x = concat_cols(&[user, cand]).stage("input concat")?;
                let h = hidden.forward(&x).stage("hidden layer")?;
                return output.forward(&h).stage("output layer");
            }
            _ => self.genre_table.as_ref().expect("genre table exists for this variant"),
        };

        let constant = |data: &[f64], cols: usize| Tensor::constant(data.to_vec(), &[n, cols]);
        let user_num = constant(&b.user_numeric, USER_NUMERIC).stage("user stats")?;
        let movie_num = constant(&b.movie_numeric, MOVIE_NUMERIC).stage("movie stats")?;
        let scene = constant(&b.scene, 1).stage("scene")?;
        let mean_pool = |table: &Tensor, ids: &[usize], weights: &[f64], group: usize| {
            let rows = gather_rows(table, ids, Some(0))?;
            let w = Tensor::constant(weights.to_vec(), &[weights.len()])?;
            group_pool(&rows, &w, group)
        };
        let cand_genres = mean_pool(genre_table, &b.candidate_genres, &b.candidate_genre_weights, MAX_GENRES)
            .stage("candidate genres")?;
        let hist_genres = mean_pool(
            genre_table,
            &b.history_genres,
            &b.history_genre_weights,
            HISTORY_GENRE_SLOTS,
        )
        .stage("history genres")?;
        let history = match &self.network {
            Network::Tower { attention, .. } => {
                let rows = gather_rows(&self.movie_table, &b.history_movies, Some(0)).stage("history")?;
                let cands = gather_rows(&self.movie_table, &b.candidate_per_slot, Some(0)).stage("history")?;
                attention.pool(&rows, &cands, HISTORY_LEN).stage("attention")?
            }
            _ => mean_pool(&self.movie_table, &b.history_movies, &b.history_weights, HISTORY_LEN)
                .stage("history")?,
        };

        let mut parts = vec![
            user_num,
            user.clone(),
            cand.clone(),
            movie_num,
            cand_genres.clone(),
            history.clone(),
            hist_genres.clone(),
            scene,
        ];
        if self.config.multimodal_active() {
            parts.push(constant(&b.poster, POSTER_WIDTH).stage("poster features")?);
        }
        let x = concat_cols(&parts).stage("input concat")?;

        match &self.network {
            Network::Tower {
                compress,
                heads,
                residual,
                output,
                ..
            } => {
                let base = compress.forward(&x).stage("compress")?;
                let mut total: Option<Tensor> = None;
                for head in heads {
                    let mut h = base.clone();
                    for block in head {
                        let y = block.forward(&h).stage("head block")?;
                        h = if *residual { add(&h, &y).stage("residual add")? } else { y };
                    }
                    total = Some(match total {
                        Some(t) => add(&t, &h).stage("head sum")?,
                        None => h,
                    });
                }
                output.forward(&total.unwrap_or(base)).stage("output layer")
            }
            Network::Mlp {
                hidden,
                output,
                fm_linear,
            } => {
                let mut h = x.clone();
                for layer in hidden {
                    h = layer.forward(&h).stage("hidden layer")?;
                }
                let deep = output.forward(&h).stage("output layer")?;
                match fm_linear {
                    None => Ok(deep),
                    Some(linear) => {
                        let fields = concat_cols(&[user, cand, cand_genres, history, hist_genres])
                            .stage("fm fields")?;
                        let fm = fm_pairwise(&fields, 5).stage("fm")?;
                        let lin = linear.forward(&x).stage("linear term")?;
                        add(&add(&deep, &fm).stage("fm")?, &lin).stage("linear term")
                    }
                }
            }
            Network::Collaborative { .. } => unreachable!("handled above"),
        }
    }

    /// Replaces the value of the named parameter, checking its shape.
    pub fn load_parameter(&self, name: &str, shape: &[usize], values: Vec<f64>) -> Result<(), ModelError> {
        let (_, t) = self
            .named
            .iter()
            .find(|(n, _)| n == name)
            .ok_or_else(|| ModelError::Incompatible(format!("unknown parameter '{name}'")))?;
        if t.shape() != shape || values.len() != t.numel() {
            return Err(ModelError::Incompatible(format!(
                "parameter '{name}' has shape {:?}, checkpoint has {shape:?}",
                t.shape()
            )));
        }
        *t.data_mut() = values;
        Ok(())
    }
}
