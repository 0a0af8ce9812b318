//! Ranking metrics (NDCG@k, Recall@k) and macro-averaged classification metrics.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("LengthMismatch: {gold} gold labels, {pred} predictions")]
    LengthMismatch { gold: usize, pred: usize },
    #[error("UnknownLabel: {0}")]
    UnknownLabel(String),
    #[error("EmptyInput: no examples")]
    Empty,
}

/// Binary-relevance judgment of one ranked list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetrievalJudgment {
    pub claim_id: String,
    pub ranked_doc_ids: Vec<String>,
    pub relevant_doc_ids: BTreeSet<String>,
}

impl RetrievalJudgment {
    pub fn new(claim_id: &str, ranked: &[&str], relevant: &[&str]) -> Self {
        RetrievalJudgment {
            claim_id: claim_id.to_string(),
            ranked_doc_ids: ranked.iter().map(|s| s.to_string()).collect(),
            relevant_doc_ids: relevant.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn hits(&self, k: usize) -> impl Iterator<Item = (usize, bool)> + '_ {
        self.ranked_doc_ids
            .iter()
            .take(k)
            .enumerate()
            .map(|(i, d)| (i, self.relevant_doc_ids.contains(d)))
    }
}

fn discount<T: Scalar>(position: usize) -> T {
    // rank = position + 1; discount = 1 / log2(rank + 1)
    T::one() / T::of_usize(position + 2).log2()
}

pub fn ndcg_at_k<T: Scalar>(j: &RetrievalJudgment, k: usize) -> T {
    let dcg: T = j
        .hits(k)
        .filter(|(_, rel)| *rel)
        .map(|(i, _)| discount::<T>(i))
        .sum();
    if dcg == T::zero() {
        return T::zero();
    }
    let ideal: T = (0..k.min(j.relevant_doc_ids.len()))
        .map(discount::<T>)
        .sum();
    dcg / ideal
}

pub fn recall_at_k<T: Scalar>(j: &RetrievalJudgment, k: usize) -> T {
    if j.relevant_doc_ids.is_empty() {
        return T::zero();
    }
    let found = j.hits(k).filter(|(_, rel)| *rel).count();
    T::of_usize(found) / T::of_usize(j.relevant_doc_ids.len())
}

/// Mean N@1, N@3, R@3, N@5, R@5 over judgments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RetrievalSummary {
    #[serde(rename = "n@1")]
    pub n1: f64,
    #[serde(rename = "n@3")]
    pub n3: f64,
    #[serde(rename = "r@3")]
    pub r3: f64,
    #[serde(rename = "n@5")]
    pub n5: f64,
    #[serde(rename = "r@5")]
    pub r5: f64,
}

pub fn summarize_retrieval(judgments: &[RetrievalJudgment]) -> RetrievalSummary {
    let n = judgments.len().max(1) as f64;
    let mean = |f: &dyn Fn(&RetrievalJudgment) -> f64| judgments.iter().map(f).sum::<f64>() / n;
    RetrievalSummary {
        n1: mean(&|j| ndcg_at_k(j, 1)),
        n3: mean(&|j| ndcg_at_k(j, 3)),
        r3: mean(&|j| recall_at_k(j, 3)),
        n5: mean(&|j| ndcg_at_k(j, 5)),
        r5: mean(&|j| recall_at_k(j, 5)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassScores<T> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport<T> {
    pub classes: Vec<String>,
    /// Parallel to `classes`.
    pub per_class: Vec<ClassScores<T>>,
    pub macro_precision: T,
    pub macro_recall: T,
    pub macro_f1: T,
    /// `confusion[gold][pred]`, indices into `classes`.
    pub confusion: Vec<Vec<usize>>,
}

impl<T: Scalar> ClassificationReport<T> {
    pub fn class(&self, name: &str) -> Option<&ClassScores<T>> {
        self.classes
            .iter()
            .position(|c| c == name)
            .map(|i| &self.per_class[i])
    }
}

fn ratio<T: Scalar>(num: usize, den: usize) -> T {
    if den == 0 {
        T::zero()
    } else {
        T::of_usize(num) / T::of_usize(den)
    }
}

/// Macro precision / recall / F1 over every configured class, zero-support
/// classes included. Macro F1 is the mean of per-class F1.
pub fn macro_prf<T: Scalar>(
    gold: &[String],
    pred: &[String],
    classes: &[String],
) -> Result<ClassificationReport<T>, MetricsError> {
    if gold.len() != pred.len() {
        return Err(MetricsError::LengthMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    if gold.is_empty() {
        return Err(MetricsError::Empty);
    }
    let pos: HashMap<&str, usize> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let idx = |l: &String| {
        pos.get(l.as_str())
            .copied()
            .ok_or_else(|| MetricsError::UnknownLabel(l.clone()))
    };
    let n = classes.len();
    let mut confusion = vec![vec![0usize; n]; n];
    for (g, p) in gold.iter().zip(pred) {
        confusion[idx(g)?][idx(p)?] += 1;
    }
    let per_class: Vec<ClassScores<T>> = (0..n)
        .map(|c| {
            let tp = confusion[c][c];
            let predicted: usize = (0..n).map(|g| confusion[g][c]).sum();
            let support: usize = confusion[c].iter().sum();
            let precision: T = ratio(tp, predicted);
            let recall: T = ratio(tp, support);
            let f1 = if precision + recall > T::zero() {
                T::of(2.0) * precision * recall / (precision + recall)
            } else {
                T::zero()
            };
            ClassScores {
                precision,
                recall,
                f1,
                support,
            }
        })
        .collect();
    let denom = T::of_usize(n.max(1));
    let mean = |f: fn(&ClassScores<T>) -> T| per_class.iter().map(f).sum::<T>() / denom;
    Ok(ClassificationReport {
        classes: classes.to_vec(),
        macro_precision: mean(|s| s.precision),
        macro_recall: mean(|s| s.recall),
        macro_f1: mean(|s| s.f1),
        per_class,
        confusion,
    })
}

/// JSON view of a classification report.
pub fn classification_json<T: Scalar>(r: &ClassificationReport<T>) -> serde_json::Value {
    let mut per_class = serde_json::Map::new();
    for (c, s) in r.classes.iter().zip(&r.per_class) {
        per_class.insert(
            c.clone(),
            serde_json::json!({
                "precision": s.precision.to_f64_lossy(),
                "recall": s.recall.to_f64_lossy(),
                "f1": s.f1.to_f64_lossy(),
                "support": s.support,
            }),
        );
    }
    serde_json::json!({
        "per_class": per_class,
        "macro_precision": r.macro_precision.to_f64_lossy(),
        "macro_recall": r.macro_recall.to_f64_lossy(),
        "macro_f1": r.macro_f1.to_f64_lossy(),
        "confusion": r.confusion,
    })
}
