use reqwest::blocking::Client;
use serde::Deserialize;
use serde_json::json;

use super::{Provider, ProviderConfig, ProviderError};

/// OpenAI-compatible `/v1/embeddings` and `/v1/chat/completions` client.
pub struct OpenAiProvider {
    base_url: String,
    api_key: Option<String>,
    client: Client,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    embedding: Vec<f64>,
    #[serde(default)]
    index: Option<usize>,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    #[serde(default)]
    content: Option<String>,
}

impl OpenAiProvider {
    /// Reads the API key from the environment variable named in `cfg`.
    pub fn from_config(cfg: &ProviderConfig) -> Result<Self, ProviderError> {
        let api_key = std::env::var(&cfg.api_key_env)
            .ok()
            .filter(|k| !k.is_empty());
        let client = Client::builder()
            .timeout(cfg.timeout)
            .build()
            .map_err(|e| ProviderError::Unreachable(e.to_string()))?;
        Ok(OpenAiProvider {
            base_url: cfg.base_url.trim_end_matches('/').to_string(),
            api_key,
            client,
        })
    }

    fn post(&self, path: &str, body: serde_json::Value) -> Result<String, ProviderError> {
        let mut req = self
            .client
            .post(format!("{}{path}", self.base_url))
            .json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| ProviderError::Unreachable(e.to_string()))?;
        let status = resp.status();
        let text = resp
            .text()
            .map_err(|e| ProviderError::Unreachable(e.to_string()))?;
        if !status.is_success() {
            return Err(ProviderError::Status {
                status: status.as_u16(),
                body: text,
            });
        }
        Ok(text)
    }
}

impl Provider for OpenAiProvider {
    fn embed(&self, model: &str, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        let body = self.post("/v1/embeddings", json!({ "model": model, "input": texts }))?;
        let parsed: EmbeddingResponse =
            serde_json::from_str(&body).map_err(|e| ProviderError::Malformed(e.to_string()))?;
        let mut data = parsed.data;
        if data.iter().all(|d| d.index.is_some()) {
            data.sort_by_key(|d| d.index);
        }
        Ok(data.into_iter().map(|d| d.embedding).collect())
    }

    fn chat(
        &self,
        model: &str,
        system: &str,
        user: &str,
        temperature: f64,
    ) -> Result<String, ProviderError> {
        let body = self.post(
            "/v1/chat/completions",
            json!({
                "model": model,
                "messages": [
                    { "role": "system", "content": system },
                    { "role": "user", "content": user },
                ],
                "temperature": temperature,
            }),
        )?;
        let parsed: ChatResponse =
            serde_json::from_str(&body).map_err(|e| ProviderError::Malformed(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| ProviderError::Malformed("no choices in completion".into()))
    }
}
