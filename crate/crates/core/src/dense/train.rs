use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    loss_and_grad, AdapterParams, EmbeddingTable, Matrix, RerankConfig, RerankError, TrainingPair,
};
use crate::scalar::Scalar;

/// Heavy-ball gradient descent on the adapter.
pub struct Trainer<T> {
    params: AdapterParams<T>,
    velocity: Matrix<T>,
    cfg: RerankConfig,
    trace: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub params: AdapterParams<T>,
    /// Loss before each update, one entry per step.
    pub trace: Vec<T>,
}

impl<T: Scalar> Trainer<T> {
    pub fn new(dim: usize, cfg: RerankConfig) -> Self {
        Trainer {
            params: AdapterParams::identity(dim, cfg.seed),
            velocity: Matrix::zeros(dim),
            cfg,
            trace: Vec::new(),
        }
    }

    pub fn params(&self) -> &AdapterParams<T> {
        &self.params
    }

    pub fn steps_taken(&self) -> u64 {
        self.params.step_count
    }

    pub fn remaining(&self) -> u64 {
        self.cfg.steps.saturating_sub(self.params.step_count)
    }

    /// One update; returns the loss at the pre-update parameters.
    pub fn step(
        &mut self,
        pair: &TrainingPair,
        table: &EmbeddingTable<T>,
    ) -> Result<T, RerankError> {
        let step = self.params.step_count + 1;
        let (loss, grad) = loss_and_grad(&self.params, pair, table, &self.cfg)?;
        if !loss.total.is_finite() || !grad.is_finite() {
            return Err(RerankError::NonFiniteLoss { step });
        }
        self.velocity
            .scale_add(T::of(self.cfg.momentum), &grad, T::one());
        self.params
            .w
            .scale_add(T::one(), &self.velocity, -T::of(self.cfg.lr));
        if !self.params.w.is_finite() {
            return Err(RerankError::NonFiniteLoss { step });
        }
        self.params.step_count = step;
        self.trace.push(loss.total);
        Ok(loss.total)
    }

    /// Visits `pairs` in a fresh shuffled order, stopping at the step budget.
    pub fn run_epoch(
        &mut self,
        pairs: &[TrainingPair],
        table: &EmbeddingTable<T>,
        rng: &mut ChaCha8Rng,
    ) -> Result<(), RerankError> {
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        order.shuffle(rng);
        for i in order {
            if self.remaining() == 0 {
                break;
            }
            self.step(&pairs[i], table)?;
        }
        Ok(())
    }

    pub fn finish(self) -> TrainOutcome<T> {
        TrainOutcome {
            params: self.params,
            trace: self.trace,
        }
    }
}

/// Trains from identity for `cfg.steps` updates over repeated seeded shuffles of `pairs`.
pub fn train<T: Scalar>(
    pairs: &[TrainingPair],
    table: &EmbeddingTable<T>,
    dim: usize,
    cfg: &RerankConfig,
) -> Result<TrainOutcome<T>, RerankError> {
    if pairs.is_empty() {
        return Err(RerankError::NoTrainingData);
    }
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut trainer = Trainer::new(dim, cfg.clone());
    while trainer.remaining() > 0 {
        trainer.run_epoch(pairs, table, &mut rng)?;
    }
    Ok(trainer.finish())
}

/// Mean loss of each consecutive block of `epoch_len` steps.
pub fn mean_epoch_losses<T: Scalar>(trace: &[T], epoch_len: usize) -> Vec<T> {
    trace
        .chunks(epoch_len.max(1))
        .map(|c| c.iter().copied().sum::<T>() / T::of_usize(c.len()))
        .collect()
}

#[derive(Serialize, Deserialize)]
struct TraceLine {
    step: u64,
    loss: f64,
}

/// Writes `{"step": n, "loss": x}` lines, steps numbered from 1.
pub fn write_loss_trace<T: Scalar>(path: &Path, trace: &[T]) -> Result<(), RerankError> {
    let io = |source| RerankError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = Vec::new();
    for (i, l) in trace.iter().enumerate() {
        let line = TraceLine {
            step: i as u64 + 1,
            loss: l.to_f64_lossy(),
        };
        serde_json::to_writer(&mut out, &line).expect("trace serializes");
        out.push(b'\n');
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(io)
}

pub fn read_loss_trace(path: &Path) -> Result<Vec<f64>, RerankError> {
    let text = std::fs::read_to_string(path).map_err(|source| RerankError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str::<TraceLine>(l)
                .map(|t| t.loss)
                .map_err(|e| RerankError::Format(e.to_string()))
        })
        .collect()
}
