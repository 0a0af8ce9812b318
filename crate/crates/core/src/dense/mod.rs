//! Stage-two retrieval: a learned square projection over frozen embeddings.
//!
//! Pair scores are the cosine of the projected claim and document vectors.
//! The projection starts at identity, so an untrained adapter reproduces raw
//! embedding-cosine ranking. Training combines a margin term against the
//! best BM25 pseudo-positive with an InfoNCE-style contrast over BM25
//! positives and inverse-BM25 negatives.

mod loss;
mod matrix;
mod sampling;
mod train;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::EmbeddingVector;
use crate::scalar::{dot, Scalar};
use crate::sparse::{rank_scored, ScoredDocument, Stage};

pub use loss::{hinge_term, loss_and_grad, LossBreakdown};
pub use matrix::Matrix;
pub use sampling::{sample_training_pair, TrainingPair};
pub use train::{
    mean_epoch_losses, read_loss_trace, train, write_loss_trace, TrainOutcome, Trainer,
};

pub const ADAPTER_HEADER: &str = "rafts-adapter v1";

/// Projected vectors shorter than this cannot be compared.
pub const MIN_PROJECTED_NORM: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum RerankError {
    #[error("DimensionMismatch: adapter dim {expected}, vector dim {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("DegenerateProjection: projected vector norm below 1e-12")]
    DegenerateProjection,
    #[error("MissingEmbedding: {0}")]
    MissingEmbedding(String),
    #[error(
        "InsufficientPool: claim {claim_id}: {available} documents after exclusions, need {needed}"
    )]
    InsufficientPool {
        claim_id: String,
        available: usize,
        needed: usize,
    },
    #[error("UnknownGold: {0} is not in the index")]
    UnknownGold(String),
    #[error("NonFiniteLoss: at step {step}")]
    NonFiniteLoss { step: u64 },
    #[error("NoTrainingData")]
    NoTrainingData,
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error("AdapterFormat: {0}")]
    Format(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RerankConfig {
    /// Positives and negatives sampled per pair.
    pub l: usize,
    /// Ranking margin.
    pub tau: f64,
    /// Weight of the contrastive term.
    pub lambda: f64,
    /// Softmax temperature applied to cosine scores.
    pub temp: f64,
    pub lr: f64,
    pub momentum: f64,
    pub steps: u64,
    pub pool_size: usize,
    pub seed: u64,
}

impl Default for RerankConfig {
    fn default() -> Self {
        RerankConfig {
            l: 4,
            tau: 0.1,
            lambda: 1.0,
            temp: 0.05,
            lr: 0.01,
            momentum: 0.9,
            steps: 1000,
            pool_size: 200,
            seed: 0,
        }
    }
}

impl RerankConfig {
    // Written as `!(x > 0)` so that NaN is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), RerankError> {
        let bad = |m: &str| Err(RerankError::InvalidConfig(m.to_string()));
        if self.l < 1 {
            return bad("l must be >= 1");
        }
        if !(self.tau > 0.0) {
            return bad("tau must be > 0");
        }
        if !(self.temp > 0.0) {
            return bad("temp must be > 0");
        }
        if !(self.lr > 0.0) {
            return bad("lr must be > 0");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must be in [0, 1)");
        }
        if self.pool_size < 2 * self.l + 1 {
            return bad("pool_size must be >= 2l + 1");
        }
        Ok(())
    }
}

/// Trainable parameters: the projection `w` plus bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct AdapterParams<T> {
    pub w: Matrix<T>,
    pub step_count: u64,
    pub seed: u64,
}

impl<T: Scalar> AdapterParams<T> {
    pub fn identity(dim: usize, seed: u64) -> Self {
        AdapterParams {
            w: Matrix::identity(dim),
            step_count: 0,
            seed,
        }
    }

    pub fn dim(&self) -> usize {
        self.w.dim()
    }

    fn project(&self, e: &EmbeddingVector<T>) -> Result<Vec<T>, RerankError> {
        if e.dim() != self.dim() {
            return Err(RerankError::DimensionMismatch {
                expected: self.dim(),
                got: e.dim(),
            });
        }
        Ok(self.w.matvec(e.values()))
    }

    /// Cosine of `W·e_x` and `W·e_d`, clamped to [-1, 1].
    pub fn score_pair(
        &self,
        e_x: &EmbeddingVector<T>,
        e_d: &EmbeddingVector<T>,
    ) -> Result<T, RerankError> {
        let u = self.project(e_x)?;
        let v = self.project(e_d)?;
        let nu = dot(&u, &u).sqrt();
        let nv = dot(&v, &v).sqrt();
        let floor = T::of(MIN_PROJECTED_NORM);
        if nu < floor || nv < floor {
            return Err(RerankError::DegenerateProjection);
        }
        Ok((dot(&u, &v) / (nu * nv)).max(-T::one()).min(T::one()))
    }

    /// Top `m` candidates by dense score; ties by ascending doc id.
    pub fn rerank(
        &self,
        claim_id: &str,
        candidates: &[ScoredDocument<f64>],
        m: usize,
        table: &EmbeddingTable<T>,
    ) -> Result<Vec<ScoredDocument<T>>, RerankError> {
        let e_x = table.claim(claim_id)?;
        let scored = candidates
            .iter()
            .map(|c| {
                Ok((
                    c.doc_id.clone(),
                    self.score_pair(e_x, table.doc(&c.doc_id)?)?,
                ))
            })
            .collect::<Result<Vec<_>, RerankError>>()?;
        Ok(rank_scored(scored, m, Stage::Dense))
    }

    pub fn to_text(&self) -> String {
        let n = self.dim();
        let mut out = format!(
            "{ADAPTER_HEADER}\ndim {n}\nseed {}\nstep_count {}\n",
            self.seed, self.step_count
        );
        for i in 0..n {
            out.push('w');
            for v in self.w.row(i) {
                write!(out, " {v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, RerankError> {
        let bad = |m: String| RerankError::Format(m);
        let mut lines = text.lines();
        if lines.next() != Some(ADAPTER_HEADER) {
            return Err(bad("missing or unsupported header".into()));
        }
        let mut field = |name: &str| -> Result<u64, RerankError> {
            let line = lines.next().ok_or_else(|| bad(format!("missing {name}")))?;
            line.strip_prefix(name)
                .and_then(|r| r.trim().parse().ok())
                .ok_or_else(|| bad(format!("bad {name} line: {line:?}")))
        };
        let dim = field("dim")? as usize;
        let seed = field("seed")?;
        let step_count = field("step_count")?;
        let mut rows = Vec::with_capacity(dim);
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let rest = line
                .strip_prefix('w')
                .ok_or_else(|| bad(format!("bad row line: {line:?}")))?;
            let row = rest
                .split_whitespace()
                .map(|v| v.parse::<T>().map_err(|_| bad(format!("bad value {v:?}"))))
                .collect::<Result<Vec<T>, _>>()?;
            rows.push(row);
        }
        if rows.len() != dim {
            return Err(bad(format!("expected {dim} rows, found {}", rows.len())));
        }
        let w = Matrix::from_rows(rows).ok_or_else(|| bad("rows are not square".into()))?;
        if !w.is_finite() {
            return Err(bad("non-finite weight".into()));
        }
        Ok(AdapterParams {
            w,
            step_count,
            seed,
        })
    }

    pub fn write_to(&self, path: &Path) -> Result<(), RerankError> {
        std::fs::write(path, self.to_text()).map_err(|source| RerankError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn read_from(path: &Path) -> Result<Self, RerankError> {
        let text = std::fs::read_to_string(path).map_err(|source| RerankError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_text(&text)
    }
}

/// Frozen embeddings for claims and documents, in separate id namespaces.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingTable<T> {
    claims: HashMap<String, EmbeddingVector<T>>,
    docs: HashMap<String, EmbeddingVector<T>>,
}

impl<T: Scalar> EmbeddingTable<T> {
    pub fn new() -> Self {
        EmbeddingTable {
            claims: HashMap::new(),
            docs: HashMap::new(),
        }
    }

    pub fn insert_claim(&mut self, id: impl Into<String>, v: EmbeddingVector<T>) {
        self.claims.insert(id.into(), v);
    }

    pub fn insert_doc(&mut self, id: impl Into<String>, v: EmbeddingVector<T>) {
        self.docs.insert(id.into(), v);
    }

    pub fn has_doc(&self, id: &str) -> bool {
        self.docs.contains_key(id)
    }

    pub fn has_claim(&self, id: &str) -> bool {
        self.claims.contains_key(id)
    }

    pub fn claim(&self, id: &str) -> Result<&EmbeddingVector<T>, RerankError> {
        self.claims
            .get(id)
            .ok_or_else(|| RerankError::MissingEmbedding(format!("claim {id}")))
    }

    pub fn doc(&self, id: &str) -> Result<&EmbeddingVector<T>, RerankError> {
        self.docs
            .get(id)
            .ok_or_else(|| RerankError::MissingEmbedding(format!("document {id}")))
    }
}
