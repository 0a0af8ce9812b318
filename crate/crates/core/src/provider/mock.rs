use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{Provider, ProviderError};
use crate::embedding::EmbeddingVector;

/// Completion returned when no script key matches.
pub const MOCK_FALLBACK_COMPLETION: &str = "I am unable to determine an answer.";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct MockCounts {
    pub embed_calls: u64,
    pub embedded_texts: u64,
    pub chat_calls: u64,
    pub max_in_flight: u64,
}

/// Deterministic offline provider.
///
/// Embeddings are a seeded hash of the text expanded into a pseudo-random
/// unit vector (or a pinned vector). Completions come from the script entry
/// whose key is the longest substring of `system + "\n" + user`.
pub struct MockProvider {
    seed: u64,
    dim: usize,
    script: BTreeMap<String, String>,
    pinned: HashMap<String, Vec<f64>>,
    fail_on: Vec<String>,
    unreachable: AtomicBool,
    delay: Duration,
    embed_calls: AtomicU64,
    embedded_texts: AtomicU64,
    chat_calls: AtomicU64,
    in_flight: AtomicU64,
    max_in_flight: AtomicU64,
    sent: Mutex<Vec<String>>,
}

struct InFlight<'a>(&'a MockProvider);

impl Drop for InFlight<'_> {
    fn drop(&mut self) {
        self.0.in_flight.fetch_sub(1, Ordering::SeqCst);
    }
}

impl MockProvider {
    pub fn new(seed: u64, dim: usize) -> Self {
        MockProvider {
            seed,
            dim: dim.max(1),
            script: BTreeMap::new(),
            pinned: HashMap::new(),
            fail_on: Vec::new(),
            unreachable: AtomicBool::new(false),
            delay: Duration::ZERO,
            embed_calls: AtomicU64::new(0),
            embedded_texts: AtomicU64::new(0),
            chat_calls: AtomicU64::new(0),
            in_flight: AtomicU64::new(0),
            max_in_flight: AtomicU64::new(0),
            sent: Mutex::new(Vec::new()),
        }
    }

    pub fn with_script(mut self, entries: impl IntoIterator<Item = (String, String)>) -> Self {
        self.script.extend(entries);
        self
    }

    /// Fixed vectors for specific texts, bypassing the hash.
    pub fn with_pinned(mut self, entries: impl IntoIterator<Item = (String, Vec<f64>)>) -> Self {
        self.pinned.extend(entries);
        self
    }

    /// Chat prompts containing any of these substrings fail with status 500.
    pub fn with_failures(mut self, needles: impl IntoIterator<Item = String>) -> Self {
        self.fail_on.extend(needles);
        self
    }

    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }

    pub fn set_unreachable(&self, down: bool) {
        self.unreachable.store(down, Ordering::SeqCst);
    }

    pub fn counts(&self) -> MockCounts {
        MockCounts {
            embed_calls: self.embed_calls.load(Ordering::SeqCst),
            embedded_texts: self.embedded_texts.load(Ordering::SeqCst),
            chat_calls: self.chat_calls.load(Ordering::SeqCst),
            max_in_flight: self.max_in_flight.load(Ordering::SeqCst),
        }
    }

    /// Every text sent for embedding, in arrival order.
    pub fn sent_texts(&self) -> Vec<String> {
        self.sent.lock().unwrap().clone()
    }

    /// The hash embedding for `text`, before any gateway processing.
    pub fn hash_vector(&self, text: &str) -> Vec<f64> {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(text.as_bytes());
        let mut rng = ChaCha8Rng::from_seed(h.finalize().into());
        let raw: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        EmbeddingVector::normalized(raw)
            .map(|v| v.values().to_vec())
            .unwrap_or_else(|| {
                let mut e = vec![0.0; self.dim];
                e[0] = 1.0;
                e
            })
    }

    /// Longest script key contained in `prompt`; ties go to the lexically smaller key.
    pub fn lookup(&self, prompt: &str) -> &str {
        self.script
            .iter()
            .filter(|(k, _)| prompt.contains(k.as_str()))
            .max_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| b.0.cmp(a.0)))
            .map(|(_, v)| v.as_str())
            .unwrap_or(MOCK_FALLBACK_COMPLETION)
    }

    fn enter(&self) -> InFlight<'_> {
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.max_in_flight.fetch_max(now, Ordering::SeqCst);
        if !self.delay.is_zero() {
            std::thread::sleep(self.delay);
        }
        InFlight(self)
    }
}

impl Provider for MockProvider {
    fn embed(&self, _model: &str, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        let _guard = self.enter();
        if self.unreachable.load(Ordering::SeqCst) {
            return Err(ProviderError::Unreachable("mock provider offline".into()));
        }
        self.embed_calls.fetch_add(1, Ordering::SeqCst);
        self.embedded_texts
            .fetch_add(texts.len() as u64, Ordering::SeqCst);
        self.sent.lock().unwrap().extend(texts.iter().cloned());
        Ok(texts
            .iter()
            .map(|t| {
                self.pinned
                    .get(t)
                    .cloned()
                    .unwrap_or_else(|| self.hash_vector(t))
            })
            .collect())
    }

    fn chat(
        &self,
        _model: &str,
        system: &str,
        user: &str,
        _temperature: f64,
    ) -> Result<String, ProviderError> {
        let _guard = self.enter();
        if self.unreachable.load(Ordering::SeqCst) {
            return Err(ProviderError::Unreachable("mock provider offline".into()));
        }
        self.chat_calls.fetch_add(1, Ordering::SeqCst);
        let prompt = format!("{system}\n{user}");
        if self.fail_on.iter().any(|n| prompt.contains(n.as_str())) {
            return Err(ProviderError::Status {
                status: 500,
                body: "injected failure".into(),
            });
        }
        Ok(self.lookup(&prompt).to_string())
    }
}
