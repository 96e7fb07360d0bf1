use rand_chacha::ChaCha8Rng;

use crate::autograd::init::{embedding_normal, glorot_uniform, PRELU_ALPHA};
use crate::autograd::{
    add_row, concat_cols, gather_rows, group_pool, matmul, prelu, reshape, row_outer, Tensor,
    TensorError,
};

/// Creates parameters in a fixed order and remembers their names.
pub(crate) struct ParamBuilder {
    rng: ChaCha8Rng,
    pub(crate) named: Vec<(String, Tensor)>,
}

impl ParamBuilder {
    pub(crate) fn new(rng: ChaCha8Rng) -> Self {
        Self {
            rng,
            named: Vec::new(),
        }
    }

    fn register(&mut self, name: String, data: Vec<f64>, shape: &[usize]) -> Tensor {
        let t = Tensor::param(data, shape).expect("layer shapes are validated by the config");
        self.named.push((name, t.clone()));
        t
    }

    pub(crate) fn dense(&mut self, name: &str, fan_in: usize, fan_out: usize) -> Dense {
        let w = glorot_uniform(&mut self.rng, fan_in, fan_out);
        Dense {
            weight: self.register(format!("{name}.weight"), w, &[fan_in, fan_out]),
            bias: self.register(format!("{name}.bias"), vec![0.0; fan_out], &[fan_out]),
        }
    }

    pub(crate) fn alpha(&mut self, name: &str) -> Tensor {
        self.register(format!("{name}.alpha"), vec![PRELU_ALPHA], &[1])
    }

    /// Embedding table whose row 0 is the all-zero padding row.
    pub(crate) fn embedding(&mut self, name: &str, rows: usize, dim: usize) -> Tensor {
        let mut data = embedding_normal(&mut self.rng, rows, dim);
        data[..dim].iter_mut().for_each(|v| *v = 0.0);
        self.register(format!("{name}.table"), data, &[rows, dim])
    }
}

/// `x·W + b`.
#[derive(Debug, Clone)]
pub struct Dense {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Dense {
    pub fn forward(&self, x: &Tensor) -> Result<Tensor, TensorError> {
        add_row(&matmul(x, &self.weight)?, &self.bias)
    }

    pub fn fan_in(&self) -> usize {
        self.weight.shape()[0]
    }
}

/// Dense layer followed by a PReLU with its own slope.
#[derive(Debug, Clone)]
pub struct DenseAct {
    pub dense: Dense,
    pub alpha: Tensor,
}

impl DenseAct {
    pub fn forward(&self, x: &Tensor) -> Result<Tensor, TensorError> {
        prelu(&self.dense.forward(x)?, &self.alpha)
    }
}

/// Scores each history embedding against the candidate with a one-hidden-
/// layer network over `concat(h, c, flatten(h ⊗ c))`. Scores are used as
/// pooling weights directly, without normalization.
#[derive(Debug, Clone)]
pub struct AttentionUnit {
    pub hidden: DenseAct,
    pub output: Dense,
}

impl AttentionUnit {
    pub(crate) fn build(pb: &mut ParamBuilder, dim: usize, hidden: usize) -> Self {
        Self {
            hidden: DenseAct {
                dense: pb.dense("attention.hidden", 2 * dim + dim * dim, hidden),
                alpha: pb.alpha("attention.hidden"),
            },
            output: pb.dense("attention.output", hidden, 1),
        }
    }

    /// One weight per row for `history[R×d]` against `candidates[R×d]`.
    pub fn weights(&self, history: &Tensor, candidates: &Tensor) -> Result<Tensor, TensorError> {
        let dim = history.shape().get(1).copied().unwrap_or(0);
        if dim * dim + 2 * dim != self.hidden.dense.fan_in() {
            return Err(TensorError::Shape {
                op: "attention",
                lhs: history.shape().to_vec(),
                rhs: self.hidden.dense.weight.shape().to_vec(),
            });
        }
        let outer = row_outer(history, candidates)?;
        let input = concat_cols(&[history.clone(), candidates.clone(), outer])?;
        let scores = self.output.forward(&self.hidden.forward(&input)?)?;
        reshape(&scores, &[history.shape()[0]])
    }

    /// Weights for a single `[K×d]` history against one `[d]` candidate.
    pub fn attention_weights(
        &self,
        history: &Tensor,
        candidate: &Tensor,
    ) -> Result<Tensor, TensorError> {
        if history.shape().len() != 2 || candidate.shape() != [history.shape()[1]] {
            return Err(TensorError::Shape {
                op: "attention",
                lhs: history.shape().to_vec(),
                rhs: candidate.shape().to_vec(),
            });
        }
        let (k, d) = (history.shape()[0], history.shape()[1]);
        let c = reshape(candidate, &[1, d])?;
        let repeated = gather_rows(&c, &vec![0; k], None)?;
        self.weights(history, &repeated)
    }

    /// Attention-weighted sum over consecutive groups of `group` history
    /// rows. `candidates` holds the matching candidate for every row.
    pub fn pool(
        &self,
        history: &Tensor,
        candidates: &Tensor,
        group: usize,
    ) -> Result<Tensor, TensorError> {
        let w = self.weights(history, candidates)?;
        group_pool(history, &w, group)
    }
}
