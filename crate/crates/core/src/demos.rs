//! In-context demonstration selection by claim-embedding cosine similarity.

use std::cmp::Ordering;

use crate::corpus::{Claim, DatasetSplit, SplitName};
use crate::embedding::EmbeddingVector;
use crate::provider::{Gateway, ProviderError};
use crate::scalar::Scalar;

pub const DEFAULT_K: usize = 10;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct DemoEntry<T> {
    pub claim: Claim,
    pub label: String,
    pub embedding: EmbeddingVector<T>,
    pub supporting_arg: Option<String>,
    pub refuting_arg: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoIndex<T> {
    pub entries: Vec<DemoEntry<T>>,
    pub source_split: SplitName,
}

/// A selected in-context example.
#[derive(Debug, Clone, PartialEq)]
pub struct Demonstration<T> {
    pub claim: Claim,
    pub label: String,
    pub similarity: T,
    pub supporting_arg: Option<String>,
    pub refuting_arg: Option<String>,
}

impl<T: Scalar> DemoIndex<T> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sets cached arguments for the entry with `claim_id`; false if absent.
    pub fn attach_arguments(
        &mut self,
        claim_id: &str,
        supporting: String,
        refuting: String,
    ) -> bool {
        match self
            .entries
            .iter_mut()
            .find(|e| e.claim.claim_id == claim_id)
        {
            Some(e) => {
                e.supporting_arg = Some(supporting);
                e.refuting_arg = Some(refuting);
                true
            }
            None => false,
        }
    }

    /// Entries with cosine ≥ `threshold` to `query`, most similar first
    /// (ties by ascending claim id), at most `k`. The entry sharing
    /// `claim_id` with the query is never returned.
    pub fn select(
        &self,
        claim_id: &str,
        query: &EmbeddingVector<T>,
        k: usize,
        threshold: T,
    ) -> Vec<Demonstration<T>> {
        let mut hits: Vec<(T, &DemoEntry<T>)> = self
            .entries
            .iter()
            .filter(|e| e.claim.claim_id != claim_id)
            .map(|e| (query.cosine(&e.embedding), e))
            .filter(|(s, _)| *s >= threshold)
            .collect();
        hits.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.1.claim.claim_id.cmp(&b.1.claim.claim_id))
        });
        hits.truncate(k);
        hits.into_iter()
            .map(|(similarity, e)| Demonstration {
                claim: e.claim.clone(),
                label: e.label.clone(),
                similarity,
                supporting_arg: e.supporting_arg.clone(),
                refuting_arg: e.refuting_arg.clone(),
            })
            .collect()
    }
}

/// Embeds every train claim once (cache-backed), preserving split order.
pub fn build_demo_index(
    train: &DatasetSplit,
    gateway: &Gateway,
) -> Result<DemoIndex<f64>, DemoError> {
    train
        .require_labels()
        .map_err(|e| DemoError::Unlabeled(e.to_string()))?;
    if train.claims.is_empty() {
        return Ok(DemoIndex {
            entries: Vec::new(),
            source_split: train.name,
        });
    }
    let texts: Vec<String> = train.claims.iter().map(|c| c.text.clone()).collect();
    let vectors = gateway.embed_texts(&texts)?;
    let entries = train
        .claims
        .iter()
        .zip(vectors)
        .map(|(c, v)| DemoEntry {
            label: c.label.clone().expect("labels checked"),
            claim: c.clone(),
            embedding: v,
            supporting_arg: None,
            refuting_arg: None,
        })
        .collect();
    Ok(DemoIndex {
        entries,
        source_split: train.name,
    })
}

/// Embeds the query claim and selects its demonstrations.
pub fn select_demonstrations(
    index: &DemoIndex<f64>,
    claim: &Claim,
    k: usize,
    threshold: f64,
    gateway: &Gateway,
) -> Result<Vec<Demonstration<f64>>, DemoError> {
    if index.is_empty() || k == 0 {
        return Ok(Vec::new());
    }
    let query = gateway.embed_one(&claim.text)?;
    Ok(index.select(&claim.claim_id, &query, k, threshold))
}

#[derive(Debug, thiserror::Error)]
pub enum DemoError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("{0}")]
    Unlabeled(String),
}
