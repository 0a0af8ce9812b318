//! Command orchestration: index, train, evaluate, prepare demonstrations, verify.
//!
//! Every command reads a [`RunConfig`], writes its artifacts under
//! `paths.output_dir` and finishes by writing `manifest.<stage>.json`.
//! Existing artifacts are never overwritten unless `force` is set; the
//! demonstration file is the one exception, it is appended to when resuming.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use thiserror::Error;

use crate::corpus::CorpusError;
use crate::demos::DemoError;
use crate::dense::RerankError;
use crate::metrics::MetricsError;
use crate::provider::{CallCounts, MockCounts, ProviderError};
use crate::sparse::RetrievalError;
use crate::verifier::VerifyError;

pub use commands::{
    demos_prepare, eval_retrieval, index_build, rerank_train, verify_run, DemoRecord, StageReport,
    VerdictRecord,
};
pub use config::{build_gateway, Paths, ProviderKind, ProviderSection, RunConfig};

pub const INDEX_FILE: &str = "index.bm25";
pub const ADAPTER_FILE: &str = "adapter.txt";
pub const LOSS_TRACE_FILE: &str = "loss_trace.jsonl";
pub const RETRIEVAL_REPORT_FILE: &str = "retrieval_report.json";
pub const DEMOS_FILE: &str = "demos.jsonl";
pub const VERDICTS_FILE: &str = "verdicts.jsonl";
pub const CLASSIFICATION_REPORT_FILE: &str = "classification_report.json";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("MissingFile: {0}")]
    MissingFile(PathBuf),
    #[error("ConfigError: {0}")]
    Config(String),
    #[error("ArtifactExists: {0} (pass --force to overwrite)")]
    ArtifactExists(PathBuf),
    #[error("NoTrainingData: no train claim has a gold document in the index")]
    NoTrainingData,
    #[error("ProviderUnreachable: every claim failed: {0}")]
    SystemicOutage(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Rerank(#[from] RerankError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Demo(#[from] DemoError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("IoError: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Stable machine-readable error kind.
    pub fn code(&self) -> &'static str {
        use PipelineError as P;
        match self {
            P::MissingFile(_) => "MissingFile",
            P::Config(_) => "ConfigError",
            P::ArtifactExists(_) => "ArtifactExists",
            P::NoTrainingData => "NoTrainingData",
            P::SystemicOutage(_) => "ProviderUnreachable",
            P::Corpus(e) => match e {
                CorpusError::MissingFile(_) => "MissingFile",
                CorpusError::MalformedRecord { .. } => "MalformedRecord",
                CorpusError::DuplicateId(_) => "DuplicateId",
                CorpusError::UnknownLabel { .. } => "UnknownLabel",
                CorpusError::UnlabeledClaim(_) => "UnlabeledClaim",
                CorpusError::SharedClaimId(_) => "SharedClaimId",
                CorpusError::EmptyClassSet => "ConfigError",
                CorpusError::Io { .. } => "IoError",
            },
            P::Retrieval(e) => match e {
                RetrievalError::EmptyCorpus => "EmptyCorpus",
                RetrievalError::OrdinalOutOfRange { .. } => "OrdinalOutOfRange",
                RetrievalError::IndexFormat(_) => "IndexFormat",
                RetrievalError::Io { .. } => "IoError",
            },
            P::Rerank(e) => match e {
                RerankError::DimensionMismatch { .. } => "DimensionMismatch",
                RerankError::DegenerateProjection => "DegenerateProjection",
                RerankError::MissingEmbedding(_) => "MissingEmbedding",
                RerankError::InsufficientPool { .. } => "InsufficientPool",
                RerankError::UnknownGold(_) => "UnknownGold",
                RerankError::NonFiniteLoss { .. } => "NonFiniteLoss",
                RerankError::NoTrainingData => "NoTrainingData",
                RerankError::InvalidConfig(_) => "ConfigError",
                RerankError::Format(_) => "AdapterFormat",
                RerankError::Io { .. } => "IoError",
            },
            P::Provider(e)
            | P::Demo(DemoError::Provider(e))
            | P::Verify(VerifyError::Provider(e)) => provider_code(e),
            P::Demo(DemoError::Unlabeled(_)) => "UnlabeledClaim",
            P::Verify(VerifyError::MissingArgument(_)) => "MissingArgument",
            P::Verify(VerifyError::UnknownClass(_)) => "ConfigError",
            P::Metrics(e) => match e {
                MetricsError::LengthMismatch { .. } => "LengthMismatch",
                MetricsError::UnknownLabel(_) => "UnknownLabel",
                MetricsError::Empty => "EmptyInput",
            },
            P::Io { .. } => "IoError",
        }
    }
}

fn provider_code(e: &ProviderError) -> &'static str {
    match e {
        ProviderError::Unreachable(_) => "ProviderUnreachable",
        ProviderError::Status { .. }
        | ProviderError::Malformed(_)
        | ProviderError::DegenerateVector => "ProviderError",
        ProviderError::DimensionMismatch { .. } => "DimensionMismatch",
        ProviderError::EmptyCompletion => "EmptyCompletion",
        ProviderError::EmptyInput(_) => "EmptyInput",
        ProviderError::Cache(_) => "CacheError",
    }
}

/// Written last by every command.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub stage: String,
    pub code_version: String,
    pub config: RunConfig,
    pub started_at_unix_ms: u128,
    pub finished_at_unix_ms: u128,
    pub artifacts: Vec<PathBuf>,
    pub provider_calls: CallCounts,
    /// Counters of the mock backend itself, when it is the provider.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mock_calls: Option<MockCounts>,
    pub details: serde_json::Value,
}

pub fn code_version() -> String {
    format!(
        "rafts-core {} prompts {}",
        env!("CARGO_PKG_VERSION"),
        crate::verifier::prompts::PROMPT_VERSION
    )
}

pub(crate) fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

pub fn manifest_path(output_dir: &Path, stage: &str) -> PathBuf {
    output_dir.join(format!("manifest.{stage}.json"))
}
