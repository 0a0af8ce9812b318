use rand::seq::SliceRandom;
use rand::Rng;

use super::{RerankConfig, RerankError};
use crate::corpus::Claim;
use crate::sparse::{Bm25Params, InvertedIndex, ScoredDocument};

/// A gold pair with BM25 pseudo-positives and inverse-BM25 negatives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingPair {
    pub claim: Claim,
    pub gold_doc_id: String,
    pub positives: Vec<String>,
    pub negatives: Vec<String>,
}

/// Samples one training pair from the claim's BM25 pool of `cfg.pool_size`.
///
/// Positives are the top `l` pool documents other than the gold one.
/// Negatives are `l` draws without replacement from the bottom half of the
/// pool, weighted by `1 / (1 + rank_from_bottom)`, so the lowest-scoring
/// documents are the most likely.
pub fn sample_training_pair<R: Rng + ?Sized>(
    index: &InvertedIndex,
    claim: &Claim,
    gold: &str,
    cfg: &RerankConfig,
    rng: &mut R,
) -> Result<TrainingPair, RerankError> {
    if index.ordinal_of(gold).is_none() {
        return Err(RerankError::UnknownGold(gold.to_string()));
    }
    let l = cfg.l.max(1);
    let pool: Vec<ScoredDocument<f64>> =
        index.retrieve(&Bm25Params::default(), &claim.text, cfg.pool_size);
    let rest: Vec<&str> = pool
        .iter()
        .map(|d| d.doc_id.as_str())
        .filter(|id| *id != gold)
        .collect();
    if rest.len() < 2 * l {
        return Err(RerankError::InsufficientPool {
            claim_id: claim.claim_id.clone(),
            available: rest.len(),
            needed: 2 * l,
        });
    }
    let positives: Vec<String> = rest[..l].iter().map(|s| s.to_string()).collect();
    let bottom_start = (rest.len() - rest.len() / 2).max(l);
    let bottom: Vec<(usize, &str)> = rest[bottom_start..]
        .iter()
        .enumerate()
        .map(|(i, id)| (i, *id))
        .collect();
    let last = bottom.len() - 1;
    let mut picked: Vec<(usize, &str)> = bottom
        .choose_multiple_weighted(rng, l, |(i, _)| 1.0 / (1.0 + (last - i) as f64))
        .expect("weights are finite and positive")
        .copied()
        .collect();
    picked.sort_by_key(|(i, _)| *i);
    Ok(TrainingPair {
        claim: claim.clone(),
        gold_doc_id: gold.to_string(),
        positives,
        negatives: picked.into_iter().map(|(_, id)| id.to_string()).collect(),
    })
}
