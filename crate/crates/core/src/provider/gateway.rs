use std::collections::{HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Provider, ProviderConfig, ProviderError};
use crate::embedding::EmbeddingVector;

const EMBED_BATCH: usize = 64;

/// Hex SHA-256 of the text; the cache key within one embedding model.
pub fn content_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// One line of the on-disk embedding cache.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub model: String,
    pub hash: String,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallCounts {
    pub embed_requests: u64,
    pub embedded_texts: u64,
    pub chat_requests: u64,
}

#[derive(Default)]
struct CacheState {
    entries: HashMap<(String, String), EmbeddingVector<f64>>,
    pending: HashSet<String>,
    dim: Option<usize>,
}

struct Permits {
    free: Mutex<usize>,
    cond: Condvar,
}

struct Permit<'a>(&'a Permits);

impl Permits {
    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap();
        while *free == 0 {
            free = self.cond.wait(free).unwrap();
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap() += 1;
        self.0.cond.notify_one();
    }
}

/// Cached, concurrency-bounded access to a [`Provider`].
pub struct Gateway {
    cfg: ProviderConfig,
    provider: Arc<dyn Provider>,
    state: Mutex<CacheState>,
    filled: Condvar,
    cache_file: Option<Mutex<File>>,
    permits: Permits,
    embed_requests: AtomicU64,
    embedded_texts: AtomicU64,
    chat_requests: AtomicU64,
}

impl Gateway {
    pub fn new(cfg: ProviderConfig, provider: Arc<dyn Provider>) -> Self {
        let slots = cfg.max_in_flight.max(1);
        Gateway {
            cfg,
            provider,
            state: Mutex::new(CacheState::default()),
            filled: Condvar::new(),
            cache_file: None,
            permits: Permits {
                free: Mutex::new(slots),
                cond: Condvar::new(),
            },
            embed_requests: AtomicU64::new(0),
            embedded_texts: AtomicU64::new(0),
            chat_requests: AtomicU64::new(0),
        }
    }

    /// Loads `path` into the cache (if it exists) and appends new entries to it.
    pub fn with_cache_file(mut self, path: &Path) -> Result<Self, ProviderError> {
        let cache_err =
            |e: std::io::Error| ProviderError::Cache(format!("{}: {e}", path.display()));
        if path.exists() {
            let reader = BufReader::new(File::open(path).map_err(cache_err)?);
            let state = self.state.get_mut().unwrap();
            for (i, line) in reader.lines().enumerate() {
                let line = line.map_err(cache_err)?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: CacheRecord = serde_json::from_str(&line)
                    .map_err(|e| ProviderError::Cache(format!("line {}: {e}", i + 1)))?;
                let v = EmbeddingVector::from_unit(rec.vector)
                    .ok_or(ProviderError::DegenerateVector)?;
                if rec.model == self.cfg.embed_model {
                    check_dim(&mut state.dim, v.dim())?;
                }
                state.entries.insert((rec.model, rec.hash), v);
            }
        }
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(cache_err)?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(cache_err)?;
        self.cache_file = Some(Mutex::new(file));
        Ok(self)
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.cfg
    }

    pub fn counts(&self) -> CallCounts {
        CallCounts {
            embed_requests: self.embed_requests.load(Ordering::SeqCst),
            embedded_texts: self.embedded_texts.load(Ordering::SeqCst),
            chat_requests: self.chat_requests.load(Ordering::SeqCst),
        }
    }

    /// Embedding dimension once any vector has been seen.
    pub fn dim(&self) -> Option<usize> {
        self.state.lock().unwrap().dim
    }

    pub fn embed_one(&self, text: &str) -> Result<EmbeddingVector<f64>, ProviderError> {
        Ok(self.embed_texts(&[text.to_string()])?.remove(0))
    }

    /// One unit vector per text, in order. Each distinct text is sent to the
    /// provider at most once for the lifetime of the cache, even under
    /// concurrent callers.
    pub fn embed_texts(
        &self,
        texts: &[String],
    ) -> Result<Vec<EmbeddingVector<f64>>, ProviderError> {
        if texts.is_empty() {
            return Err(ProviderError::EmptyInput("no texts to embed"));
        }
        if texts.iter().any(|t| t.is_empty()) {
            return Err(ProviderError::EmptyInput("empty text"));
        }
        let model = self.cfg.embed_model.clone();
        let hashes: Vec<String> = texts.iter().map(|t| content_hash(t)).collect();
        let mut distinct: Vec<(&str, &str)> = Vec::new();
        let mut seen = HashSet::new();
        for (h, t) in hashes.iter().zip(texts) {
            if seen.insert(h.as_str()) {
                distinct.push((h.as_str(), t.as_str()));
            }
        }

        let mut state = self.state.lock().unwrap();
        loop {
            let mut claimed: Vec<(&str, &str)> = Vec::new();
            let mut waiting = false;
            for &(h, t) in &distinct {
                if state.entries.contains_key(&(model.clone(), h.to_string())) {
                    continue;
                }
                if state.pending.contains(h) {
                    waiting = true;
                } else {
                    state.pending.insert(h.to_string());
                    claimed.push((h, t));
                }
            }
            if claimed.is_empty() {
                if !waiting {
                    break;
                }
                state = self.filled.wait(state).unwrap();
                continue;
            }
            drop(state);
            let fetched = self.fetch(&model, &claimed);
            state = self.state.lock().unwrap();
            for (h, _) in &claimed {
                state.pending.remove(*h);
            }
            let stored =
                fetched.and_then(|vectors| self.store(&mut state, &model, &claimed, vectors));
            self.filled.notify_all();
            stored?;
        }
        Ok(hashes
            .iter()
            .map(|h| state.entries[&(model.clone(), h.clone())].clone())
            .collect())
    }

    fn fetch(
        &self,
        model: &str,
        items: &[(&str, &str)],
    ) -> Result<Vec<EmbeddingVector<f64>>, ProviderError> {
        let mut out = Vec::with_capacity(items.len());
        for chunk in items.chunks(EMBED_BATCH) {
            let texts: Vec<String> = chunk.iter().map(|(_, t)| t.to_string()).collect();
            let raw = {
                let _permit = self.permits.acquire();
                self.embed_requests.fetch_add(1, Ordering::SeqCst);
                self.embedded_texts
                    .fetch_add(texts.len() as u64, Ordering::SeqCst);
                self.provider.embed(model, &texts)?
            };
            if raw.len() != texts.len() {
                return Err(ProviderError::Malformed(format!(
                    "{} vectors for {} inputs",
                    raw.len(),
                    texts.len()
                )));
            }
            for v in raw {
                out.push(EmbeddingVector::normalized(v).ok_or(ProviderError::DegenerateVector)?);
            }
        }
        Ok(out)
    }

    fn store(
        &self,
        state: &mut MutexGuard<'_, CacheState>,
        model: &str,
        items: &[(&str, &str)],
        vectors: Vec<EmbeddingVector<f64>>,
    ) -> Result<(), ProviderError> {
        for v in &vectors {
            check_dim(&mut state.dim, v.dim())?;
        }
        let mut lines = String::new();
        for ((h, _), v) in items.iter().zip(vectors) {
            if self.cache_file.is_some() {
                let rec = CacheRecord {
                    model: model.to_string(),
                    hash: h.to_string(),
                    vector: v.values().to_vec(),
                };
                lines.push_str(&serde_json::to_string(&rec).expect("cache record serializes"));
                lines.push('\n');
            }
            state.entries.insert((model.to_string(), h.to_string()), v);
        }
        if let Some(file) = &self.cache_file {
            let mut f = file.lock().unwrap();
            f.write_all(lines.as_bytes())
                .and_then(|_| f.flush())
                .map_err(|e| ProviderError::Cache(e.to_string()))?;
        }
        Ok(())
    }

    /// Chat completion, trimmed, at the configured temperature.
    pub fn generate_text(&self, system: &str, user: &str) -> Result<String, ProviderError> {
        if user.trim().is_empty() {
            return Err(ProviderError::EmptyInput("empty user message"));
        }
        let raw = {
            let _permit = self.permits.acquire();
            self.chat_requests.fetch_add(1, Ordering::SeqCst);
            self.provider
                .chat(&self.cfg.chat_model, system, user, self.cfg.temperature)?
        };
        let text = raw.trim();
        if text.is_empty() {
            return Err(ProviderError::EmptyCompletion);
        }
        Ok(text.to_string())
    }
}

fn check_dim(dim: &mut Option<usize>, got: usize) -> Result<(), ProviderError> {
    match *dim {
        Some(expected) if expected != got => {
            Err(ProviderError::DimensionMismatch { expected, got })
        }
        Some(_) => Ok(()),
        None => {
            *dim = Some(got);
            Ok(())
        }
    }
}
