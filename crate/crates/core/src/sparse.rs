//! Stage-one retrieval: tokenizer, inverted index and Okapi BM25.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Claim, Document};
use crate::scalar::Scalar;

pub const INDEX_HEADER: &str = "rafts-bm25-index v1";

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("EmptyCorpus: cannot index zero documents")]
    EmptyCorpus,
    #[error("OrdinalOutOfRange: {ordinal} >= {doc_count}")]
    OrdinalOutOfRange { ordinal: usize, doc_count: usize },
    #[error("IndexFormat: {0}")]
    IndexFormat(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Lowercased maximal runs of alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub ordinal: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    postings: HashMap<String, Vec<Posting>>,
    doc_lengths: Vec<u32>,
    avg_doc_length: f64,
    doc_ids: Vec<String>,
    ordinals: HashMap<String, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params<T> {
    pub k1: T,
    pub b: T,
}

impl<T: Scalar> Default for Bm25Params<T> {
    fn default() -> Self {
        Bm25Params {
            k1: T::of(1.2),
            b: T::of(0.75),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Sparse,
    Dense,
}

/// One entry of a ranked result list. `rank` is 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDocument<T> {
    pub doc_id: String,
    pub score: T,
    pub rank: usize,
    pub stage: Stage,
}

/// Descending score, ascending doc id.
pub(crate) fn rank_order<T: Scalar>(a: (&T, &str), b: (&T, &str)) -> Ordering {
    b.0.partial_cmp(a.0)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.1.cmp(b.1))
}

/// Sorts `(doc_id, score)` pairs into a ranked list truncated to `limit`.
pub(crate) fn rank_scored<T: Scalar>(
    mut scored: Vec<(String, T)>,
    limit: usize,
    stage: Stage,
) -> Vec<ScoredDocument<T>> {
    let cmp = |a: &(String, T), b: &(String, T)| rank_order((&a.1, &a.0), (&b.1, &b.0));
    if limit == 0 {
        return Vec::new();
    }
    if limit < scored.len() {
        scored.select_nth_unstable_by(limit - 1, cmp);
        scored.truncate(limit);
    }
    scored.sort_by(cmp);
    scored
        .into_iter()
        .enumerate()
        .map(|(i, (doc_id, score))| ScoredDocument {
            doc_id,
            score,
            rank: i + 1,
            stage,
        })
        .collect()
}

/// Distinct terms in first-occurrence order.
/// Sorted and deduplicated, so scores do not depend on query word order.
fn distinct_terms(terms: &[String]) -> BTreeSet<&str> {
    terms.iter().map(String::as_str).collect()
}

impl InvertedIndex {
    /// Indexes `title ++ text` of every document.
    pub fn build(docs: &[Document]) -> Result<Self, RetrievalError> {
        if docs.is_empty() {
            return Err(RetrievalError::EmptyCorpus);
        }
        let mut postings: HashMap<String, Vec<Posting>> = HashMap::new();
        let mut doc_lengths = Vec::with_capacity(docs.len());
        for (ord, doc) in docs.iter().enumerate() {
            let tokens = tokenize(&doc.full_text());
            doc_lengths.push(tokens.len() as u32);
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for t in tokens {
                *tf.entry(t).or_default() += 1;
            }
            for (term, count) in tf {
                postings.entry(term).or_default().push(Posting {
                    ordinal: ord as u32,
                    tf: count,
                });
            }
        }
        let total: u64 = doc_lengths.iter().map(|&l| l as u64).sum();
        let avg_doc_length = total as f64 / docs.len() as f64;
        let doc_ids: Vec<String> = docs.iter().map(|d| d.doc_id.clone()).collect();
        let ordinals = doc_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        Ok(InvertedIndex {
            postings,
            doc_lengths,
            avg_doc_length,
            doc_ids,
            ordinals,
        })
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn doc_lengths(&self) -> &[u32] {
        &self.doc_lengths
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn ordinal_of(&self, doc_id: &str) -> Option<usize> {
        self.ordinals.get(doc_id).copied()
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn vocabulary_size(&self) -> usize {
        self.postings.len()
    }

    fn idf<T: Scalar>(&self, df: usize) -> T {
        let n = T::of_usize(self.doc_count());
        let df = T::of_usize(df);
        let half = T::of(0.5);
        (T::one() + (n - df + half) / (df + half)).ln()
    }

    fn term_weight<T: Scalar>(&self, params: &Bm25Params<T>, idf: T, tf: u32, ordinal: usize) -> T {
        let tf = T::of_usize(tf as usize);
        let dl = T::of_usize(self.doc_lengths[ordinal] as usize);
        let avgdl = T::of(self.avg_doc_length);
        let norm = params.k1 * (T::one() - params.b + params.b * dl / avgdl);
        idf * tf * (params.k1 + T::one()) / (tf + norm)
    }

    /// BM25 of one document; duplicate query terms count once.
    pub fn bm25_score<T: Scalar>(
        &self,
        params: &Bm25Params<T>,
        query_terms: &[String],
        ordinal: usize,
    ) -> Result<T, RetrievalError> {
        if ordinal >= self.doc_count() {
            return Err(RetrievalError::OrdinalOutOfRange {
                ordinal,
                doc_count: self.doc_count(),
            });
        }
        let mut score = T::zero();
        for term in distinct_terms(query_terms) {
            let plist = self.postings(term);
            if let Ok(pos) = plist.binary_search_by_key(&(ordinal as u32), |p| p.ordinal) {
                let idf = self.idf::<T>(plist.len());
                score = score + self.term_weight(params, idf, plist[pos].tf, ordinal);
            }
        }
        Ok(score)
    }

    /// Scores every document for `query_terms`.
    pub fn score_all<T: Scalar>(&self, params: &Bm25Params<T>, query_terms: &[String]) -> Vec<T> {
        let mut scores = vec![T::zero(); self.doc_count()];
        for term in distinct_terms(query_terms) {
            let plist = self.postings(term);
            if plist.is_empty() {
                continue;
            }
            let idf = self.idf::<T>(plist.len());
            for p in plist {
                let ord = p.ordinal as usize;
                scores[ord] = scores[ord] + self.term_weight(params, idf, p.tf, ord);
            }
        }
        scores
    }

    /// Top `m_hat` documents for a query text. Zero-score documents pad the
    /// list after every positive-score document.
    pub fn retrieve<T: Scalar>(
        &self,
        params: &Bm25Params<T>,
        query: &str,
        m_hat: usize,
    ) -> Vec<ScoredDocument<T>> {
        let terms = tokenize(query);
        let scored = self
            .score_all(params, &terms)
            .into_iter()
            .zip(&self.doc_ids)
            .map(|(s, id)| (id.clone(), s))
            .collect();
        rank_scored(scored, m_hat, Stage::Sparse)
    }

    /// Stage-one candidates for a claim with default BM25 parameters.
    pub fn retrieve_candidates(&self, claim: &Claim, m_hat: usize) -> Vec<ScoredDocument<f64>> {
        self.retrieve(&Bm25Params::default(), &claim.text, m_hat)
    }

    /// Serializes the index; equal indexes produce identical bytes.
    pub fn write_to(&self, path: &Path) -> Result<(), RetrievalError> {
        let io = |e| RetrievalError::Io {
            path: path.to_path_buf(),
            source: e,
        };
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        let meta = IndexMeta {
            doc_count: self.doc_count(),
            avg_doc_length: self.avg_doc_length,
            doc_ids: self.doc_ids.clone(),
            doc_lengths: self.doc_lengths.clone(),
        };
        writeln!(w, "{INDEX_HEADER}").map_err(io)?;
        writeln!(
            w,
            "{}",
            serde_json::to_string(&meta).expect("meta serializes")
        )
        .map_err(io)?;
        let mut terms: Vec<&String> = self.postings.keys().collect();
        terms.sort();
        for term in terms {
            let line = TermLine {
                term: term.clone(),
                postings: self.postings[term]
                    .iter()
                    .map(|p| (p.ordinal, p.tf))
                    .collect(),
            };
            writeln!(
                w,
                "{}",
                serde_json::to_string(&line).expect("postings serialize")
            )
            .map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn read_from(path: &Path) -> Result<Self, RetrievalError> {
        let io = |e| RetrievalError::Io {
            path: path.to_path_buf(),
            source: e,
        };
        let mut lines = BufReader::new(File::open(path).map_err(io)?).lines();
        let bad = |m: &str| RetrievalError::IndexFormat(m.to_string());
        match lines.next() {
            Some(Ok(h)) if h == INDEX_HEADER => {}
            _ => return Err(bad("missing or unsupported header")),
        }
        let meta: IndexMeta = match lines.next() {
            Some(Ok(l)) => serde_json::from_str(&l).map_err(|e| bad(&e.to_string()))?,
            _ => return Err(bad("missing metadata line")),
        };
        if meta.doc_ids.len() != meta.doc_count || meta.doc_lengths.len() != meta.doc_count {
            return Err(bad("metadata lengths disagree with doc_count"));
        }
        let mut postings = HashMap::new();
        for line in lines {
            let line = line.map_err(io)?;
            let tl: TermLine = serde_json::from_str(&line).map_err(|e| bad(&e.to_string()))?;
            let plist: Vec<Posting> = tl
                .postings
                .into_iter()
                .map(|(ordinal, tf)| Posting { ordinal, tf })
                .collect();
            if plist.iter().any(|p| p.ordinal as usize >= meta.doc_count)
                || plist.windows(2).any(|w| w[0].ordinal >= w[1].ordinal)
            {
                return Err(bad(&format!("invalid postings for term {:?}", tl.term)));
            }
            postings.insert(tl.term, plist);
        }
        let ordinals = meta
            .doc_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        Ok(InvertedIndex {
            postings,
            doc_lengths: meta.doc_lengths,
            avg_doc_length: meta.avg_doc_length,
            doc_ids: meta.doc_ids,
            ordinals,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct IndexMeta {
    doc_count: usize,
    avg_doc_length: f64,
    doc_ids: Vec<String>,
    doc_lengths: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct TermLine {
    term: String,
    postings: Vec<(u32, u32)>,
}
