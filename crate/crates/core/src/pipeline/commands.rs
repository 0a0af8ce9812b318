use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{
    build_gateway, code_version, manifest_path, now_ms, PipelineError, RunConfig, RunManifest,
    ADAPTER_FILE, CLASSIFICATION_REPORT_FILE, DEMOS_FILE, INDEX_FILE, LOSS_TRACE_FILE,
    RETRIEVAL_REPORT_FILE, VERDICTS_FILE,
};
use crate::corpus::{load_claims, load_documents, Claim, Document, SplitName};
use crate::demos::{DemoEntry, DemoIndex};
use crate::dense::{
    mean_epoch_losses, sample_training_pair, write_loss_trace, AdapterParams, EmbeddingTable,
    RerankError, Trainer,
};
use crate::metrics::{classification_json, macro_prf, summarize_retrieval, RetrievalJudgment};
use crate::provider::{content_hash, Gateway, MockProvider, ProviderError};
use crate::sparse::{Bm25Params, InvertedIndex, ScoredDocument};
use crate::verifier::{self, ParseStatus, VerifyError};

/// What a command produced.
#[derive(Debug, Clone)]
pub struct StageReport {
    pub stage: &'static str,
    pub artifacts: Vec<PathBuf>,
    pub manifest: PathBuf,
    pub details: serde_json::Value,
}

/// One line of `demos.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoRecord {
    pub claim_id: String,
    pub text: String,
    pub label: String,
    pub embedding_model: String,
    /// Content hash of `text`; the vector lives in the embedding cache.
    pub embedding_hash: String,
    pub supporting_arg: String,
    pub refuting_arg: String,
    pub evidence_doc_ids: Vec<String>,
}

/// One line of `verdicts.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub claim_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub predicted_label: String,
    pub parse_status: ParseStatus,
    pub supporting_arg: String,
    pub refuting_arg: String,
    pub evidence_doc_ids: Vec<String>,
    pub explanation: String,
    pub demonstrations_used: Vec<String>,
    pub raw_completion: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

struct StageRun<'a> {
    cfg: &'a RunConfig,
    name: &'static str,
    started: u128,
}

impl<'a> StageRun<'a> {
    fn start(cfg: &'a RunConfig, name: &'static str) -> Result<Self, PipelineError> {
        let dir = &cfg.paths.output_dir;
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
        Ok(StageRun {
            cfg,
            name,
            started: now_ms(),
        })
    }

    fn out(&self, file: &str) -> PathBuf {
        self.cfg.paths.output_dir.join(file)
    }

    /// Refuses to touch an existing artifact unless `force` is set.
    fn guard(&self, file: &str, force: bool) -> Result<PathBuf, PipelineError> {
        let path = self.out(file);
        if path.exists() && !force {
            return Err(PipelineError::ArtifactExists(path));
        }
        Ok(path)
    }

    fn finish(
        self,
        artifacts: Vec<PathBuf>,
        gateway: Option<(&Gateway, Option<Arc<MockProvider>>)>,
        details: serde_json::Value,
    ) -> Result<StageReport, PipelineError> {
        let manifest = RunManifest {
            stage: self.name.to_string(),
            code_version: code_version(),
            config: self.cfg.clone(),
            started_at_unix_ms: self.started,
            finished_at_unix_ms: now_ms(),
            artifacts: artifacts.clone(),
            provider_calls: gateway
                .as_ref()
                .map(|(g, _)| g.counts())
                .unwrap_or_default(),
            mock_calls: gateway.and_then(|(_, m)| m).map(|m| m.counts()),
            details: details.clone(),
        };
        let path = manifest_path(&self.cfg.paths.output_dir, self.name);
        write_json(&path, &manifest)?;
        Ok(StageReport {
            stage: self.name,
            artifacts,
            manifest: path,
            details,
        })
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| PipelineError::io(path, e))
}

fn write_lines<T: Serialize>(path: &Path, records: &[T]) -> Result<(), PipelineError> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| PipelineError::io(path, e))
}

fn read_lines<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, PipelineError> {
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => PipelineError::MissingFile(path.to_path_buf()),
        _ => PipelineError::io(path, e),
    })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| PipelineError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| {
            PipelineError::Config(format!("{}: line {}: {e}", path.display(), i + 1))
        })?;
        out.push(rec);
    }
    Ok(out)
}

fn load_index(cfg: &RunConfig) -> Result<InvertedIndex, PipelineError> {
    let path = cfg.paths.output_dir.join(INDEX_FILE);
    if !path.exists() {
        return Err(PipelineError::MissingFile(path));
    }
    Ok(InvertedIndex::read_from(&path)?)
}

fn load_adapter(cfg: &RunConfig) -> Result<Option<AdapterParams<f64>>, PipelineError> {
    let path = cfg.paths.output_dir.join(ADAPTER_FILE);
    if !path.exists() {
        return Ok(None);
    }
    Ok(Some(AdapterParams::read_from(&path)?))
}

fn doc_map(docs: Vec<Document>) -> HashMap<String, Document> {
    docs.into_iter().map(|d| (d.doc_id.clone(), d)).collect()
}

fn lookup<'d>(
    docs: &'d HashMap<String, Document>,
    id: &str,
) -> Result<&'d Document, PipelineError> {
    docs.get(id).ok_or_else(|| {
        PipelineError::Config(format!(
            "document {id} is in the index but not in the documents file"
        ))
    })
}

/// Sparse candidates followed by dense re-ranking.
struct EvidenceRetriever<'a> {
    index: &'a InvertedIndex,
    docs: &'a HashMap<String, Document>,
    adapter: Option<&'a AdapterParams<f64>>,
    gateway: &'a Gateway,
    m_hat: usize,
    m: usize,
}

impl EvidenceRetriever<'_> {
    fn rerank(&self, claim: &Claim) -> Result<Vec<ScoredDocument<f64>>, PipelineError> {
        let candidates = self.index.retrieve_candidates(claim, self.m_hat);
        let mut texts = vec![claim.text.clone()];
        for c in &candidates {
            texts.push(lookup(self.docs, &c.doc_id)?.full_text());
        }
        let mut vectors = self.gateway.embed_texts(&texts)?.into_iter();
        let mut table = EmbeddingTable::new();
        let e_x = vectors.next().expect("claim vector");
        let dim = e_x.dim();
        table.insert_claim(claim.claim_id.clone(), e_x);
        for (c, v) in candidates.iter().zip(vectors) {
            table.insert_doc(c.doc_id.clone(), v);
        }
        let identity;
        let adapter = match self.adapter {
            Some(a) => a,
            None => {
                identity = AdapterParams::identity(dim, 0);
                &identity
            }
        };
        Ok(adapter.rerank(&claim.claim_id, &candidates, self.m, &table)?)
    }

    fn evidence(&self, claim: &Claim) -> Result<Vec<&Document>, PipelineError> {
        self.rerank(claim)?
            .iter()
            .map(|s| lookup(self.docs, &s.doc_id))
            .collect()
    }
}

/// The provider error behind a per-claim failure, if that is what it was.
fn provider_cause(e: &PipelineError) -> Option<&ProviderError> {
    match e {
        PipelineError::Provider(p)
        | PipelineError::Demo(crate::demos::DemoError::Provider(p))
        | PipelineError::Verify(VerifyError::Provider(p)) => Some(p),
        _ => None,
    }
}

fn failure_json(claim_id: &str, e: &PipelineError) -> serde_json::Value {
    json!({"claim_id": claim_id, "kind": e.code(), "message": e.to_string()})
}

/// Builds the BM25 index over the documents file.
pub fn index_build(cfg: &RunConfig, force: bool) -> Result<StageReport, PipelineError> {
    let run = StageRun::start(cfg, "index")?;
    let path = run.guard(INDEX_FILE, force)?;
    let docs = load_documents(&cfg.paths.documents)?;
    let index = InvertedIndex::build(&docs)?;
    index.write_to(&path)?;
    let details = json!({
        "documents": index.doc_count(),
        "vocabulary": index.vocabulary_size(),
        "avg_doc_length": index.avg_doc_length(),
    });
    run.finish(vec![path], None, details)
}

/// Trains the dense adapter on train claims whose first gold document is indexed.
pub fn rerank_train(cfg: &RunConfig, force: bool) -> Result<StageReport, PipelineError> {
    let run = StageRun::start(cfg, "rerank")?;
    let adapter_path = run.guard(ADAPTER_FILE, force)?;
    let trace_path = run.guard(LOSS_TRACE_FILE, force)?;
    let rcfg = &cfg.rerank;
    rcfg.validate()?;
    let index = load_index(cfg)?;
    let docs = doc_map(load_documents(&cfg.paths.documents)?);
    let train = load_claims(&cfg.paths.train_claims, SplitName::Train, &cfg.classes)?;

    let eligible: Vec<(&Claim, &str)> = train
        .claims
        .iter()
        .filter_map(|c| {
            c.gold()
                .first()
                .filter(|g| index.ordinal_of(g).is_some())
                .map(|g| (c, g.as_str()))
        })
        .collect();
    let skipped = train.claims.len() - eligible.len();
    if eligible.is_empty() {
        return Err(PipelineError::NoTrainingData);
    }

    let (gateway, mock) = build_gateway(cfg)?;
    let mut doc_ids = BTreeSet::new();
    for (claim, gold) in &eligible {
        doc_ids.insert(gold.to_string());
        for d in index.retrieve(&Bm25Params::<f64>::default(), &claim.text, rcfg.pool_size) {
            doc_ids.insert(d.doc_id);
        }
    }
    let claim_texts: Vec<String> = eligible.iter().map(|(c, _)| c.text.clone()).collect();
    let doc_texts = doc_ids
        .iter()
        .map(|id| Ok(lookup(&docs, id)?.full_text()))
        .collect::<Result<Vec<_>, PipelineError>>()?;
    let claim_vecs = gateway.embed_texts(&claim_texts)?;
    let doc_vecs = gateway.embed_texts(&doc_texts)?;
    let dim = claim_vecs[0].dim();
    let mut table = EmbeddingTable::new();
    for ((c, _), v) in eligible.iter().zip(claim_vecs) {
        table.insert_claim(c.claim_id.clone(), v);
    }
    for (id, v) in doc_ids.iter().zip(doc_vecs) {
        table.insert_doc(id.clone(), v);
    }

    // Negatives are resampled every epoch from one seeded stream.
    let mut rng = ChaCha8Rng::seed_from_u64(rcfg.seed);
    let mut trainer = Trainer::<f64>::new(dim, rcfg.clone());
    let mut epochs = 0usize;
    while trainer.remaining() > 0 {
        let pairs = eligible
            .iter()
            .map(|(c, g)| sample_training_pair(&index, c, g, rcfg, &mut rng))
            .collect::<Result<Vec<_>, RerankError>>()?;
        trainer.run_epoch(&pairs, &table, &mut rng)?;
        epochs += 1;
    }
    let outcome = trainer.finish();
    outcome.params.write_to(&adapter_path)?;
    write_loss_trace(&trace_path, &outcome.trace)?;

    let epoch_means = mean_epoch_losses(&outcome.trace, eligible.len());
    let details = json!({
        "eligible_claims": eligible.len(),
        "skipped_claims": skipped,
        "steps": outcome.params.step_count,
        "epochs": epochs,
        "dim": dim,
        "epoch_mean_loss": epoch_means,
    });
    run.finish(
        vec![adapter_path, trace_path],
        Some((&gateway, mock)),
        details,
    )
}

/// Scores sparse + dense retrieval on the test claims that carry gold ids.
pub fn eval_retrieval(cfg: &RunConfig, force: bool) -> Result<StageReport, PipelineError> {
    let run = StageRun::start(cfg, "eval")?;
    let report_path = run.guard(RETRIEVAL_REPORT_FILE, force)?;
    let index = load_index(cfg)?;
    let adapter = load_adapter(cfg)?;
    let docs = doc_map(load_documents(&cfg.paths.documents)?);
    let test = load_claims(&cfg.paths.test_claims, SplitName::Test, &cfg.classes)?;
    let (gateway, mock) = build_gateway(cfg)?;
    let retriever = EvidenceRetriever {
        index: &index,
        docs: &docs,
        adapter: adapter.as_ref(),
        gateway: &gateway,
        m_hat: cfg.m_hat,
        m: cfg.m,
    };
    let judged: Vec<&Claim> = test
        .claims
        .iter()
        .filter(|c| !c.gold().is_empty())
        .collect();
    let judgments = judged
        .par_iter()
        .map(|c| {
            let ranked = retriever.rerank(c)?;
            Ok(RetrievalJudgment {
                claim_id: c.claim_id.clone(),
                ranked_doc_ids: ranked.into_iter().map(|s| s.doc_id).collect(),
                relevant_doc_ids: c.gold().iter().cloned().collect(),
            })
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    let summary = summarize_retrieval(&judgments);
    let skipped = test.claims.len() - judged.len();
    let report = json!({
        "retrieval": summary,
        "claims": judgments.len(),
        "skipped": skipped,
        "adapter": if adapter.is_some() { "trained" } else { "identity" },
    });
    write_json(&report_path, &report)?;
    run.finish(vec![report_path], Some((&gateway, mock)), report)
}

/// Generates and stores both arguments for every train claim. Claims whose
/// record is already present are skipped, so an interrupted run resumes.
pub fn demos_prepare(cfg: &RunConfig, force: bool) -> Result<StageReport, PipelineError> {
    let run = StageRun::start(cfg, "demos")?;
    let demos_path = run.out(DEMOS_FILE);
    let index = load_index(cfg)?;
    let adapter = load_adapter(cfg)?;
    let docs = doc_map(load_documents(&cfg.paths.documents)?);
    let train = load_claims(&cfg.paths.train_claims, SplitName::Train, &cfg.classes)?;
    train.require_labels()?;

    if force && demos_path.exists() {
        std::fs::remove_file(&demos_path).map_err(|e| PipelineError::io(&demos_path, e))?;
    }
    let done: HashSet<String> = if demos_path.exists() {
        read_lines::<DemoRecord>(&demos_path)?
            .into_iter()
            .map(|r| r.claim_id)
            .collect()
    } else {
        HashSet::new()
    };
    let pending: Vec<&Claim> = train
        .claims
        .iter()
        .filter(|c| !done.contains(&c.claim_id))
        .collect();

    let (gateway, mock) = build_gateway(cfg)?;
    let retriever = EvidenceRetriever {
        index: &index,
        docs: &docs,
        adapter: adapter.as_ref(),
        gateway: &gateway,
        m_hat: cfg.m_hat,
        m: cfg.m,
    };
    let embed_model = gateway.config().embed_model.clone();
    let prepare = |c: &Claim| -> Result<DemoRecord, PipelineError> {
        let evidence = retriever.evidence(c)?;
        let args = verifier::generate_arguments(c, &evidence, &gateway)?;
        Ok(DemoRecord {
            claim_id: c.claim_id.clone(),
            text: c.text.clone(),
            label: c.label.clone().expect("labels checked"),
            embedding_model: embed_model.clone(),
            embedding_hash: content_hash(&c.text),
            supporting_arg: args.supporting,
            refuting_arg: args.refuting,
            evidence_doc_ids: args.evidence_doc_ids,
        })
    };

    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&demos_path)
        .map_err(|e| PipelineError::io(&demos_path, e))?;
    let chunk = (cfg.provider.max_in_flight * 4).max(1);
    let mut written = 0usize;
    let mut failures = Vec::new();
    for batch in pending.chunks(chunk) {
        let results: Vec<_> = batch.par_iter().map(|c| prepare(c)).collect();
        let mut out = String::new();
        for (c, r) in batch.iter().zip(results) {
            match r {
                Ok(rec) => {
                    out.push_str(&serde_json::to_string(&rec).expect("records serialize"));
                    out.push('\n');
                    written += 1;
                }
                Err(e) if provider_cause(&e).is_some() => {
                    failures.push(failure_json(&c.claim_id, &e))
                }
                Err(e) => return Err(e),
            }
        }
        file.write_all(out.as_bytes())
            .map_err(|e| PipelineError::io(&demos_path, e))?;
        file.flush()
            .map_err(|e| PipelineError::io(&demos_path, e))?;
    }
    let details = json!({
        "train_claims": train.claims.len(),
        "already_present": done.len(),
        "written": written,
        "failures": failures,
    });
    run.finish(vec![demos_path], Some((&gateway, mock)), details)
}

fn demo_index(records: &[DemoRecord], gateway: &Gateway) -> Result<DemoIndex<f64>, PipelineError> {
    let mut entries = Vec::with_capacity(records.len());
    if !records.is_empty() {
        let texts: Vec<String> = records.iter().map(|r| r.text.clone()).collect();
        for (r, v) in records.iter().zip(gateway.embed_texts(&texts)?) {
            entries.push(DemoEntry {
                claim: Claim::new(r.claim_id.clone(), r.text.clone()).with_label(r.label.clone()),
                label: r.label.clone(),
                embedding: v,
                supporting_arg: Some(r.supporting_arg.clone()),
                refuting_arg: Some(r.refuting_arg.clone()),
            });
        }
    }
    Ok(DemoIndex {
        entries,
        source_split: SplitName::Train,
    })
}

/// Verifies every test claim and, when gold labels exist, scores the verdicts.
pub fn verify_run(cfg: &RunConfig, force: bool) -> Result<StageReport, PipelineError> {
    let run = StageRun::start(cfg, "verify")?;
    let verdicts_path = run.guard(VERDICTS_FILE, force)?;
    let report_path = run.guard(CLASSIFICATION_REPORT_FILE, force)?;
    let index = load_index(cfg)?;
    let adapter = load_adapter(cfg)?;
    let docs = doc_map(load_documents(&cfg.paths.documents)?);
    let test = load_claims(&cfg.paths.test_claims, SplitName::Test, &cfg.classes)?;
    let records: Vec<DemoRecord> = read_lines(&run.out(DEMOS_FILE))?;

    let (gateway, mock) = build_gateway(cfg)?;
    let demos = demo_index(&records, &gateway)?;
    let retriever = EvidenceRetriever {
        index: &index,
        docs: &docs,
        adapter: adapter.as_ref(),
        gateway: &gateway,
        m_hat: cfg.m_hat,
        m: cfg.m,
    };
    let fallback = cfg.fallback();
    let verify_one = |c: &Claim| -> Result<VerdictRecord, PipelineError> {
        let selected =
            crate::demos::select_demonstrations(&demos, c, cfg.k, cfg.threshold, &gateway)?;
        let evidence = retriever.evidence(c)?;
        let args = verifier::generate_arguments(c, &evidence, &gateway)?;
        let verdict =
            verifier::predict_verdict(c, &selected, &args, &cfg.classes, fallback, &gateway)?;
        let explanation =
            verifier::generate_explanation(c, &args, &verdict.predicted_label, &gateway)?;
        Ok(VerdictRecord {
            claim_id: c.claim_id.clone(),
            label: c.label.clone(),
            predicted_label: verdict.predicted_label,
            parse_status: verdict.parse_status,
            supporting_arg: args.supporting,
            refuting_arg: args.refuting,
            evidence_doc_ids: args.evidence_doc_ids,
            explanation,
            demonstrations_used: verdict.demonstrations_used,
            raw_completion: verdict.raw_completion,
            error: None,
        })
    };

    let results: Vec<_> = test.claims.par_iter().map(verify_one).collect();
    let mut verdicts = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    let mut unreachable = 0usize;
    let mut last_unreachable = String::new();
    for (c, r) in test.claims.iter().zip(results) {
        match r {
            Ok(v) => verdicts.push(v),
            Err(e) => {
                let Some(cause) = provider_cause(&e) else {
                    return Err(e);
                };
                if cause.is_unreachable() {
                    unreachable += 1;
                    last_unreachable = cause.to_string();
                }
                failures.push(failure_json(&c.claim_id, &e));
                verdicts.push(VerdictRecord {
                    claim_id: c.claim_id.clone(),
                    label: c.label.clone(),
                    predicted_label: fallback.to_string(),
                    parse_status: ParseStatus::Fallback,
                    supporting_arg: String::new(),
                    refuting_arg: String::new(),
                    evidence_doc_ids: Vec::new(),
                    explanation: String::new(),
                    demonstrations_used: Vec::new(),
                    raw_completion: String::new(),
                    error: Some(format!("{}: {e}", e.code())),
                });
            }
        }
    }
    if !test.claims.is_empty() && unreachable == test.claims.len() {
        return Err(PipelineError::SystemicOutage(last_unreachable));
    }
    write_lines(&verdicts_path, &verdicts)?;
    let mut artifacts = vec![verdicts_path];

    let labeled: Vec<&VerdictRecord> = verdicts.iter().filter(|v| v.label.is_some()).collect();
    let mut details = json!({
        "test_claims": test.claims.len(),
        "demonstrations_available": demos.len(),
        "fallback_parses": verdicts.iter().filter(|v| v.parse_status == ParseStatus::Fallback).count(),
        "failures": failures,
    });
    if !labeled.is_empty() {
        let gold: Vec<String> = labeled.iter().map(|v| v.label.clone().unwrap()).collect();
        let pred: Vec<String> = labeled.iter().map(|v| v.predicted_label.clone()).collect();
        let report = macro_prf::<f64>(&gold, &pred, &cfg.classes)?;
        let body = json!({"classification": classification_json(&report), "claims": labeled.len()});
        write_json(&report_path, &body)?;
        artifacts.push(report_path);
        details["macro_f1"] = json!(report.macro_f1);
    }
    run.finish(artifacts, Some((&gateway, mock)), details)
}
