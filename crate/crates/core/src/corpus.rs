//! Document collection and claim datasets.
//!
//! Both are line-delimited JSON: one object per line, blank lines skipped,
//! any other malformed line aborts the whole load.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("MissingFile: {0}")]
    MissingFile(PathBuf),
    #[error("MalformedRecord: line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("DuplicateId: {0}")]
    DuplicateId(String),
    #[error("UnknownLabel: claim {claim_id} has label {label:?}")]
    UnknownLabel { claim_id: String, label: String },
    #[error("UnlabeledClaim: {0}")]
    UnlabeledClaim(String),
    #[error("SharedClaimId: {0} appears in more than one split")]
    SharedClaimId(String),
    #[error("EmptyClassSet: at least one class is required")]
    EmptyClassSet,
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// An evidence passage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub text: String,
}

impl Document {
    /// Title followed by body; the text that is indexed and embedded.
    pub fn full_text(&self) -> String {
        match &self.title {
            Some(t) if !t.is_empty() => format!("{t}\n{}", self.text),
            _ => self.text.clone(),
        }
    }
}

/// A statement to verify, optionally with gold label and evidence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    pub claim_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_doc_ids: Option<Vec<String>>,
}

impl Claim {
    pub fn new(claim_id: impl Into<String>, text: impl Into<String>) -> Self {
        Claim {
            claim_id: claim_id.into(),
            text: text.into(),
            label: None,
            gold_doc_ids: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn with_gold(mut self, ids: &[&str]) -> Self {
        self.gold_doc_ids = Some(ids.iter().map(|s| s.to_string()).collect());
        self
    }

    /// Gold evidence ids, empty when the claim carries none.
    pub fn gold(&self) -> &[String] {
        self.gold_doc_ids.as_deref().unwrap_or(&[])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub name: SplitName,
    pub claims: Vec<Claim>,
}

impl DatasetSplit {
    /// Fails on the first unlabeled claim; demonstrations need labels.
    pub fn require_labels(&self) -> Result<(), CorpusError> {
        match self.claims.iter().find(|c| c.label.is_none()) {
            Some(c) => Err(CorpusError::UnlabeledClaim(c.claim_id.clone())),
            None => Ok(()),
        }
    }

    pub fn has_labels(&self) -> bool {
        !self.claims.is_empty() && self.claims.iter().all(|c| c.label.is_some())
    }
}

/// Rejects claim ids that occur in both splits.
pub fn check_disjoint(a: &DatasetSplit, b: &DatasetSplit) -> Result<(), CorpusError> {
    let seen: HashSet<&str> = a.claims.iter().map(|c| c.claim_id.as_str()).collect();
    match b.claims.iter().find(|c| seen.contains(c.claim_id.as_str())) {
        Some(c) => Err(CorpusError::SharedClaimId(c.claim_id.clone())),
        None => Ok(()),
    }
}

fn read_records<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<(usize, T)>, CorpusError> {
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CorpusError::MissingFile(path.to_path_buf()),
        _ => CorpusError::Io {
            path: path.to_path_buf(),
            source: e,
        },
    })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| CorpusError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| CorpusError::MalformedRecord {
            line: line_no,
            reason: e.to_string(),
        })?;
        out.push((line_no, rec));
    }
    Ok(out)
}

/// Loads a documents file in file order.
pub fn load_documents(path: &Path) -> Result<Vec<Document>, CorpusError> {
    let mut seen = HashSet::new();
    let mut docs = Vec::new();
    for (line, mut doc) in read_records::<Document>(path)? {
        doc.doc_id = doc.doc_id.trim().to_string();
        doc.text = doc.text.trim().to_string();
        doc.title = doc.title.map(|t| t.trim().to_string());
        if doc.doc_id.is_empty() {
            return Err(CorpusError::MalformedRecord {
                line,
                reason: "empty doc_id".into(),
            });
        }
        if doc.text.is_empty() {
            return Err(CorpusError::MalformedRecord {
                line,
                reason: format!("document {} has empty text", doc.doc_id),
            });
        }
        if !seen.insert(doc.doc_id.clone()) {
            return Err(CorpusError::DuplicateId(doc.doc_id));
        }
        docs.push(doc);
    }
    Ok(docs)
}

/// Resolves `label` case-insensitively against `classes`, returning the canonical spelling.
pub fn canonical_label<'a>(label: &str, classes: &'a [String]) -> Option<&'a str> {
    let needle = label.trim().to_lowercase();
    classes
        .iter()
        .find(|c| c.to_lowercase() == needle)
        .map(String::as_str)
}

/// Loads a claims file, normalizing labels to the casing used in `classes`.
pub fn load_claims(
    path: &Path,
    name: SplitName,
    classes: &[String],
) -> Result<DatasetSplit, CorpusError> {
    if classes.is_empty() {
        return Err(CorpusError::EmptyClassSet);
    }
    let mut seen = HashSet::new();
    let mut claims = Vec::new();
    for (line, mut claim) in read_records::<Claim>(path)? {
        claim.claim_id = claim.claim_id.trim().to_string();
        claim.text = claim.text.trim().to_string();
        if claim.claim_id.is_empty() {
            return Err(CorpusError::MalformedRecord {
                line,
                reason: "empty claim_id".into(),
            });
        }
        if claim.text.is_empty() {
            return Err(CorpusError::MalformedRecord {
                line,
                reason: format!("claim {} has empty text", claim.claim_id),
            });
        }
        if let Some(label) = claim.label.take() {
            match canonical_label(&label, classes) {
                Some(c) => claim.label = Some(c.to_string()),
                None => {
                    return Err(CorpusError::UnknownLabel {
                        claim_id: claim.claim_id,
                        label,
                    })
                }
            }
        }
        if !seen.insert(claim.claim_id.clone()) {
            return Err(CorpusError::DuplicateId(claim.claim_id));
        }
        claims.push(claim);
    }
    Ok(DatasetSplit { name, claims })
}

fn write_records<T: Serialize>(path: &Path, records: &[T]) -> Result<(), CorpusError> {
    let io = |e| CorpusError::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    for r in records {
        let line = serde_json::to_string(r).expect("records serialize");
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_documents(path: &Path, docs: &[Document]) -> Result<(), CorpusError> {
    write_records(path, docs)
}

pub fn write_claims(path: &Path, claims: &[Claim]) -> Result<(), CorpusError> {
    write_records(path, claims)
}

/// Gold links that do not resolve to a loaded document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub missing: Vec<(String, String)>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.missing.is_empty()
    }
}

pub fn validate_links(split: &DatasetSplit, docs: &[Document]) -> ValidationReport {
    let ids: HashSet<&str> = docs.iter().map(|d| d.doc_id.as_str()).collect();
    let missing = split
        .claims
        .iter()
        .flat_map(|c| c.gold().iter().map(move |g| (c, g)))
        .filter(|(_, g)| !ids.contains(g.as_str()))
        .map(|(c, g)| (c.claim_id.clone(), g.clone()))
        .collect();
    ValidationReport { missing }
}
