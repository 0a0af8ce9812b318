//! Boundary to embedding and chat-generation providers.
//!
//! [`Gateway`] is the only type the rest of the crate talks to. It owns the
//! content-addressed embedding cache, bounds concurrent requests and counts
//! every remote call. Backends implement [`Provider`]: [`OpenAiProvider`]
//! speaks the OpenAI-compatible HTTP protocol, [`MockProvider`] is a
//! deterministic offline stand-in.

mod gateway;
mod mock;
mod openai;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use gateway::{content_hash, CacheRecord, CallCounts, Gateway};
pub use mock::{MockCounts, MockProvider, MOCK_FALLBACK_COMPLETION};
pub use openai::OpenAiProvider;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProviderError {
    #[error("ProviderUnreachable: {0}")]
    Unreachable(String),
    #[error("ProviderError: status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("ProviderError: malformed response: {0}")]
    Malformed(String),
    #[error("DimensionMismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("EmptyCompletion")]
    EmptyCompletion,
    #[error("EmptyInput: {0}")]
    EmptyInput(&'static str),
    #[error("ProviderError: zero or non-finite embedding vector")]
    DegenerateVector,
    #[error("CacheError: {0}")]
    Cache(String),
}

impl ProviderError {
    pub fn is_unreachable(&self) -> bool {
        matches!(self, ProviderError::Unreachable(_))
    }
}

/// Remote model backend. Implementations must be callable from many threads.
pub trait Provider: Send + Sync {
    /// One raw vector per input, in input order.
    fn embed(&self, model: &str, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError>;

    fn chat(
        &self,
        model: &str,
        system: &str,
        user: &str,
        temperature: f64,
    ) -> Result<String, ProviderError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub base_url: String,
    pub embed_model: String,
    pub chat_model: String,
    pub api_key_env: String,
    pub max_in_flight: usize,
    #[serde(with = "secs")]
    pub timeout: Duration,
    pub temperature: f64,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            base_url: "http://localhost:8000".into(),
            embed_model: "embed".into(),
            chat_model: "chat".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            max_in_flight: 4,
            timeout: Duration::from_secs(60),
            temperature: 0.0,
        }
    }
}

mod secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Duration::try_from_secs_f64(v).map_err(serde::de::Error::custom)
    }
}
