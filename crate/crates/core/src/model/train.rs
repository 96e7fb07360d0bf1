use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::features::FeatureScaler;
use super::{Model, ModelError};
use crate::autograd::{bce_loss, AdamConfig, AdamState};
use crate::pipeline::Sample;

/// Rows per forward pass when scoring.
const PREDICT_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub mean_loss: f64,
    pub wall_ms: u128,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub epochs: Vec<EpochLog>,
}

impl TrainingLog {
    pub fn losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.mean_loss).collect()
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.mean_loss)
    }

    /// `epoch,mean_loss,wall_ms` CSV.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "epoch,mean_loss,wall_ms")?;
        for e in &self.epochs {
            writeln!(w, "{},{:?},{}", e.epoch, e.mean_loss, e.wall_ms)?;
        }
        w.flush()
    }
}

impl Model {
    /// Mini-batch Adam on mean BCE for `config.epochs` epochs. Batches are
    /// drawn from a shuffle seeded by `config.seed`. The feature scaler is
    /// fitted on `samples` unless the model already carries one.
    pub fn train(&mut self, samples: &[Sample]) -> Result<TrainingLog, ModelError> {
        if samples.is_empty() {
            return Err(ModelError::EmptyInput);
        }
        if !self.scaler.fitted {
            self.scaler = FeatureScaler::fit(samples);
        }
        let config = self.config().clone();
        let params = self.parameters();
        let mut adam = AdamState::new(
            AdamConfig {
                learning_rate: config.learning_rate,
                ..AdamConfig::default()
            },
            &params,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(1);
        let mut order: Vec<usize> = (0..samples.len()).collect();
        let mut log = TrainingLog::default();
        for epoch in 0..config.epochs {
            let start = Instant::now();
            order.shuffle(&mut rng);
            let mut total = 0.0;
            for (batch_index, chunk) in order.chunks(config.batch_size).enumerate() {
                let rows: Vec<&Sample> = chunk.iter().map(|&i| &samples[i]).collect();
                let batch = self.batch(&rows)?;
                let pred = self.forward(&batch)?;
                let loss = bce_loss(&pred, &batch.labels).map_err(|source| ModelError::Dimension {
                    stage: "loss",
                    source,
                })?;
                let value = loss.item();
                let diverged = |detail: String| ModelError::Diverged {
                    epoch,
                    batch: batch_index,
                    detail,
                };
                if !value.is_finite() {
                    return Err(diverged(format!("loss is {value}")));
                }
                loss.backward().map_err(|e| diverged(e.to_string()))?;
                adam.step(&params).map_err(|e| diverged(e.to_string()))?;
                params.iter().for_each(|p| p.zero_grad());
                total += value * chunk.len() as f64;
            }
            let entry = EpochLog {
                epoch,
                mean_loss: total / samples.len() as f64,
                wall_ms: start.elapsed().as_millis(),
            };
            log::debug!(
                "{} epoch {} loss {:.6} ({} ms)",
                config.variant,
                epoch,
                entry.mean_loss,
                entry.wall_ms
            );
            log.epochs.push(entry);
        }
        Ok(log)
    }

    /// Probability of a positive label for every sample, in input order.
    pub fn predict(&self, samples: &[Sample]) -> Result<Vec<f64>, ModelError> {
        if samples.is_empty() {
            return Err(ModelError::EmptyInput);
        }
        let mut out = Vec::with_capacity(samples.len());
        for chunk in samples.chunks(PREDICT_CHUNK) {
            let rows: Vec<&Sample> = chunk.iter().collect();
            let pred = self.forward(&self.batch(&rows)?)?;
            out.extend(pred.data().iter());
        }
        Ok(out)
    }

    /// Mean BCE of the current parameters on `samples`.
    pub fn evaluate_loss(&self, samples: &[Sample]) -> Result<f64, ModelError> {
        let scores = self.predict(samples)?;
        let (lo, hi) = crate::autograd::PROB_CLAMP;
        let total: f64 = scores
            .iter()
            .zip(samples)
            .map(|(&p, s)| {
                let p = p.clamp(lo, hi);
                if s.label == 1 {
                    -p.ln()
                } else {
                    -(1.0 - p).ln()
                }
            })
            .sum();
        Ok(total / samples.len() as f64)
    }
}
