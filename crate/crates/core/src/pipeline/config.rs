use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::dense::RerankConfig;
use crate::provider::{Gateway, MockProvider, OpenAiProvider, Provider, ProviderConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paths {
    pub documents: PathBuf,
    pub train_claims: PathBuf,
    pub test_claims: PathBuf,
    pub cache_dir: PathBuf,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Openai,
    Mock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderSection {
    pub kind: ProviderKind,
    pub base_url: String,
    pub embed_model: String,
    pub chat_model: String,
    pub api_key_env: String,
    pub max_in_flight: usize,
    pub timeout_secs: f64,
    pub temperature: f64,
    pub mock_seed: u64,
    pub mock_dim: usize,
    /// JSON object mapping prompt substrings to completions.
    pub mock_script: Option<PathBuf>,
    /// Chat prompts containing any of these fail with a server error.
    pub mock_fail_on: Vec<String>,
    pub mock_unreachable: bool,
}

impl Default for ProviderSection {
    fn default() -> Self {
        let base = ProviderConfig::default();
        ProviderSection {
            kind: ProviderKind::Openai,
            base_url: base.base_url,
            embed_model: base.embed_model,
            chat_model: base.chat_model,
            api_key_env: base.api_key_env,
            max_in_flight: base.max_in_flight,
            timeout_secs: base.timeout.as_secs_f64(),
            temperature: base.temperature,
            mock_seed: 0,
            mock_dim: 32,
            mock_script: None,
            mock_fail_on: Vec::new(),
            mock_unreachable: false,
        }
    }
}

impl ProviderSection {
    pub fn provider_config(&self) -> ProviderConfig {
        ProviderConfig {
            base_url: self.base_url.clone(),
            embed_model: self.embed_model.clone(),
            chat_model: self.chat_model.clone(),
            api_key_env: self.api_key_env.clone(),
            max_in_flight: self.max_in_flight,
            timeout: Duration::from_secs_f64(self.timeout_secs.max(0.0)),
            temperature: self.temperature,
        }
    }
}

fn d_m_hat() -> usize {
    20
}
fn d_m() -> usize {
    5
}
fn d_k() -> usize {
    crate::demos::DEFAULT_K
}
fn d_threshold() -> f64 {
    crate::demos::DEFAULT_THRESHOLD
}

/// Everything one pipeline run needs, read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub paths: Paths,
    pub classes: Vec<String>,
    /// Class used when a completion names no class; defaults to "False"
    /// when configured, else the last class.
    #[serde(default)]
    pub fallback_class: Option<String>,
    #[serde(default = "d_m_hat")]
    pub m_hat: usize,
    #[serde(default = "d_m")]
    pub m: usize,
    #[serde(default = "d_k")]
    pub k: usize,
    #[serde(default = "d_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub rerank: RerankConfig,
    #[serde(default)]
    pub provider: ProviderSection,
}

impl RunConfig {
    /// Parses `path`; relative paths inside are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => PipelineError::MissingFile(path.to_path_buf()),
            _ => PipelineError::io(path, e),
        })?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| PipelineError::Config(e.to_string()))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.paths.documents);
        fix(&mut self.paths.train_claims);
        fix(&mut self.paths.test_claims);
        fix(&mut self.paths.cache_dir);
        fix(&mut self.paths.output_dir);
        if let Some(s) = self.provider.mock_script.as_mut() {
            fix(s);
        }
    }

    /// Overrides the run seed and the re-ranker seed.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.rerank.seed = seed;
    }

    pub fn fallback(&self) -> &str {
        match &self.fallback_class {
            Some(f) => f,
            None => self
                .classes
                .iter()
                .find(|c| c.eq_ignore_ascii_case("false"))
                .or(self.classes.last())
                .map(String::as_str)
                .unwrap_or(""),
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.classes.is_empty() {
            return bad("classes must not be empty".into());
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = self.classes.iter().find(|c| !seen.insert(c.to_lowercase())) {
            return bad(format!("duplicate class {dup:?}"));
        }
        if !self.classes.iter().any(|c| c == self.fallback()) {
            return bad(format!(
                "fallback class {:?} is not a configured class",
                self.fallback()
            ));
        }
        if self.m == 0 || self.m_hat == 0 {
            return bad("m and m_hat must be >= 1".into());
        }
        if self.m > self.m_hat {
            return bad(format!(
                "m ({}) must not exceed m_hat ({})",
                self.m, self.m_hat
            ));
        }
        if !(-1.0..=1.0).contains(&self.threshold) {
            return bad("threshold must lie in [-1, 1]".into());
        }
        if self.provider.max_in_flight == 0 {
            return bad("provider.max_in_flight must be >= 1".into());
        }
        self.rerank.validate()?;
        Ok(())
    }

    pub fn cache_file(&self) -> PathBuf {
        self.paths.cache_dir.join("embeddings.jsonl")
    }
}

/// Builds the gateway described by `cfg`, attached to the persistent cache.
/// For the mock backend the provider handle is returned as well.
pub fn build_gateway(
    cfg: &RunConfig,
) -> Result<(Gateway, Option<Arc<MockProvider>>), PipelineError> {
    let pcfg = cfg.provider.provider_config();
    let (provider, mock): (Arc<dyn Provider>, _) = match cfg.provider.kind {
        ProviderKind::Openai => (Arc::new(OpenAiProvider::from_config(&pcfg)?), None),
        ProviderKind::Mock => {
            let mut mock = MockProvider::new(cfg.provider.mock_seed, cfg.provider.mock_dim);
            if let Some(path) = &cfg.provider.mock_script {
                let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
                    std::io::ErrorKind::NotFound => PipelineError::MissingFile(path.clone()),
                    _ => PipelineError::io(path, e),
                })?;
                let script: std::collections::BTreeMap<String, String> =
                    serde_json::from_str(&text)
                        .map_err(|e| PipelineError::Config(format!("mock script: {e}")))?;
                mock = mock.with_script(script);
            }
            let mock = Arc::new(mock.with_failures(cfg.provider.mock_fail_on.iter().cloned()));
            mock.set_unreachable(cfg.provider.mock_unreachable);
            (mock.clone() as Arc<dyn Provider>, Some(mock))
        }
    };
    let gateway = Gateway::new(pcfg, provider).with_cache_file(&cfg.cache_file())?;
    Ok((gateway, mock))
}
