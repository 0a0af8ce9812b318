//! Fixtures and brute-force references shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashSet;
use std::path::Path;

use rafts_core::corpus::{write_claims, write_documents, Claim, Document};
use rafts_core::dense::{AdapterParams, EmbeddingTable, RerankConfig, TrainingPair};
use rafts_core::embedding::EmbeddingVector;
use rafts_core::pipeline::{Paths, ProviderKind, RunConfig};
use rafts_core::provider::MockProvider;
use rafts_core::sparse::tokenize;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

// ---------------------------------------------------------------------------
// BM25 reference

/// Corpus of `n` docs over a vocabulary of `vocab` words `w0..`.
pub fn random_corpus<R: Rng>(rng: &mut R, n: usize, vocab: usize) -> Vec<Document> {
    (0..n)
        .map(|i| {
            let len = rng.gen_range(1..=12);
            let words: Vec<String> = (0..len)
                .map(|_| format!("w{}", rng.gen_range(0..vocab)))
                .collect();
            Document {
                doc_id: format!("d{i:04}"),
                title: None,
                text: words.join(" "),
            }
        })
        .collect()
}

/// Scores every document directly from its text, no index involved.
pub fn brute_bm25(docs: &[Document], query: &str, k1: f64, b: f64) -> Vec<(String, f64)> {
    let toks: Vec<Vec<String>> = docs.iter().map(|d| tokenize(&d.full_text())).collect();
    let n = docs.len() as f64;
    let avg = toks.iter().map(|t| t.len()).sum::<usize>() as f64 / n;
    let mut terms: Vec<String> = tokenize(query);
    let mut seen = HashSet::new();
    terms.retain(|t| seen.insert(t.clone()));
    let dfs: Vec<f64> = terms
        .iter()
        .map(|q| toks.iter().filter(|x| x.contains(q)).count() as f64)
        .collect();
    docs.iter()
        .zip(&toks)
        .map(|(d, t)| {
            let dl = t.len() as f64;
            let score = terms
                .iter()
                .zip(&dfs)
                .map(|(q, &df)| {
                    let tf = t.iter().filter(|x| *x == q).count() as f64;
                    if tf == 0.0 {
                        return 0.0;
                    }
                    let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
                    idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avg))
                })
                .sum::<f64>();
            (d.doc_id.clone(), score)
        })
        .collect()
}

/// Reference top-`k`: score descending, doc id ascending.
pub fn brute_top(mut scored: Vec<(String, f64)>, k: usize) -> Vec<String> {
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    scored.into_iter().take(k).map(|(id, _)| id).collect()
}

// ---------------------------------------------------------------------------
// Dense fixtures

pub fn random_unit<R: Rng>(rng: &mut R, dim: usize) -> EmbeddingVector<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if let Some(e) = EmbeddingVector::normalized(v) {
            return e;
        }
    }
}

/// A random pair with `l` positives and `l` negatives plus a random adapter.
pub fn random_instance<R: Rng>(
    rng: &mut R,
    dim: usize,
    l: usize,
) -> (AdapterParams<f64>, TrainingPair, EmbeddingTable<f64>) {
    let mut table = EmbeddingTable::new();
    table.insert_claim("x", random_unit(rng, dim));
    table.insert_doc("gold", random_unit(rng, dim));
    let positives: Vec<String> = (0..l).map(|i| format!("p{i}")).collect();
    let negatives: Vec<String> = (0..l).map(|i| format!("n{i}")).collect();
    for id in positives.iter().chain(&negatives) {
        table.insert_doc(id.clone(), random_unit(rng, dim));
    }
    let mut params = AdapterParams::identity(dim, 0);
    for i in 0..dim {
        for j in 0..dim {
            let v = params.w.get(i, j) + rng.gen_range(-0.3..0.3);
            params.w.set(i, j, v);
        }
    }
    let pair = TrainingPair {
        claim: Claim::new("x", "claim"),
        gold_doc_id: "gold".into(),
        positives,
        negatives,
    };
    (params, pair, table)
}

/// Two-cluster retrieval fixture.
///
/// Claim `i` has a unique keyword shared by its gold document and 19
/// distractors. The gold document sits in the claim's cluster, the
/// distractors in the other one, so BM25 cannot separate them and a raw
/// embedding only weakly can: the cluster direction carries `signal` of the
/// vector, the rest is hash noise.
pub struct Separable {
    pub docs: Vec<Document>,
    pub train: Vec<Claim>,
    pub test: Vec<Claim>,
    pub table: EmbeddingTable<f64>,
    pub dim: usize,
}

pub fn separable_fixture(n_train: usize, n_test: usize, signal: f64) -> Separable {
    let dim = 16;
    let noise = MockProvider::new(7, dim - 2);
    let embed = |text: &str, cluster: usize| {
        let mut v = vec![0.0; dim];
        v[cluster] = signal;
        let scale = (1.0 - signal * signal).sqrt();
        for (slot, h) in v[2..].iter_mut().zip(noise.hash_vector(text)) {
            *slot = scale * h;
        }
        EmbeddingVector::normalized(v).unwrap()
    };
    let mut docs = Vec::new();
    let mut claims = Vec::new();
    let mut table = EmbeddingTable::new();
    for i in 0..n_train + n_test {
        let cluster = i % 2;
        let kw = format!("kw{i:04}");
        let claim = Claim::new(format!("c{i:04}"), kw.clone());
        // Gold position among the equal-BM25 group varies with i.
        let gold_slot = (i * 7) % 20;
        let mut gold = String::new();
        for j in 0..20 {
            let doc_id = format!("d{i:04}_{j:02}");
            let text = format!("{kw} filler{i:04}x{j:02}");
            let c = if j == gold_slot { cluster } else { 1 - cluster };
            if j == gold_slot {
                gold = doc_id.clone();
            }
            table.insert_doc(doc_id.clone(), embed(&text, c));
            docs.push(Document {
                doc_id,
                title: None,
                text,
            });
        }
        table.insert_claim(claim.claim_id.clone(), embed(&claim.text, cluster));
        claims.push(claim.with_gold(&[&gold]));
    }
    let test = claims.split_off(n_train);
    Separable {
        docs,
        train: claims,
        test,
        table,
        dim,
    }
}

// ---------------------------------------------------------------------------
// End-to-end fixture

pub const CLASSES: [&str; 3] = ["True", "False", "Mixed"];
pub const SUPPORT_ARG: &str = "The documents state the figure directly.";
pub const REFUTE_ARG: &str = "No evidence found to refute the claim.";
pub const EXPLANATION: &str = "The arguments point the same way as the verdict.";

/// Gold labels, and the verdict sentence scripted for each test claim.
pub const TWELVE: [(&str, &str); 12] = [
    ("True", "the claim should be classified as True."),
    ("True", "the claim should be classified as true"),
    ("True", "Classified as TRUE, clearly."),
    ("True", "the claim should be classified as False."),
    ("False", "the claim should be classified as False."),
    ("False", "classified as false!"),
    ("False", "the claim should be classified as Mixed."),
    (
        "False",
        "It is False. The claim should be classified as false.",
    ),
    ("Mixed", "the claim should be classified as Mixed."),
    ("Mixed", "classified as mixed; the evidence is split"),
    ("Mixed", "the claim should be classified as True."),
    ("Mixed", "classified as False (not True)"),
];

/// Hand count over `TWELVE`:
/// True  tp 3, predicted 4, support 4: P 3/4 R 3/4 F1 3/4
/// False tp 3, predicted 5, support 4: P 3/5 R 3/4 F1 2/3
/// Mixed tp 2, predicted 3, support 4: P 2/3 R 1/2 F1 4/7
/// macro F1 = (3/4 + 2/3 + 4/7) / 3 = 167/252
pub const TWELVE_MACRO_F1: f64 = 167.0 / 252.0;

pub fn test_claim_text(i: usize) -> String {
    format!(
        "Region {i} reported {} new cases in week {}",
        100 + i * 13,
        i + 1
    )
}

/// Writes the 12-claim fixture under `dir` and returns its config.
pub fn write_twelve_fixture(dir: &Path) -> RunConfig {
    let mut docs = Vec::new();
    for i in 0..12 {
        docs.push(Document {
            doc_id: format!("doc{i:02}"),
            title: Some(format!("Weekly report {i}")),
            text: format!("{} Officials confirmed the count.", test_claim_text(i)),
        });
    }
    for i in 0..8 {
        docs.push(Document {
            doc_id: format!("bg{i:02}"),
            title: None,
            text: format!("Background note {i} about testing capacity and hospital staffing."),
        });
    }
    let train: Vec<Claim> = (0..6)
        .map(|i| {
            Claim::new(
                format!("tr{i}"),
                format!("Region {i} reported new cases in week {}", i + 1),
            )
            .with_label(CLASSES[i % 3])
            .with_gold(&[&format!("doc{i:02}")])
        })
        .collect();
    let test: Vec<Claim> = TWELVE
        .iter()
        .enumerate()
        .map(|(i, (label, _))| {
            Claim::new(format!("te{i:02}"), test_claim_text(i))
                .with_label(*label)
                .with_gold(&[&format!("doc{i:02}")])
        })
        .collect();

    let mut script = serde_json::Map::new();
    script.insert(
        "write an argument that supports it".into(),
        SUPPORT_ARG.into(),
    );
    script.insert(
        "write an argument that refutes it".into(),
        REFUTE_ARG.into(),
    );
    script.insert("\nVerdict: ".into(), EXPLANATION.into());
    for (i, (_, verdict)) in TWELVE.iter().enumerate() {
        let key = format!(
            "Claim: {}\nSupporting argument: {SUPPORT_ARG}\nRefuting argument: {REFUTE_ARG}\nBased on",
            test_claim_text(i)
        );
        script.insert(key, serde_json::Value::String(verdict.to_string()));
    }

    std::fs::create_dir_all(dir).unwrap();
    write_documents(&dir.join("documents.jsonl"), &docs).unwrap();
    write_claims(&dir.join("train.jsonl"), &train).unwrap();
    write_claims(&dir.join("test.jsonl"), &test).unwrap();
    std::fs::write(
        dir.join("script.json"),
        serde_json::to_string_pretty(&script).unwrap(),
    )
    .unwrap();

    let mut cfg = RunConfig {
        paths: Paths {
            documents: dir.join("documents.jsonl"),
            train_claims: dir.join("train.jsonl"),
            test_claims: dir.join("test.jsonl"),
            cache_dir: dir.join("cache"),
            output_dir: dir.join("out"),
        },
        classes: strings(&CLASSES),
        fallback_class: None,
        m_hat: 20,
        m: 5,
        k: 10,
        threshold: 0.0,
        seed: 3,
        rerank: RerankConfig {
            l: 2,
            steps: 12,
            pool_size: 20,
            seed: 3,
            ..RerankConfig::default()
        },
        provider: Default::default(),
    };
    cfg.provider.kind = ProviderKind::Mock;
    cfg.provider.mock_seed = 11;
    cfg.provider.mock_dim = 16;
    cfg.provider.mock_script = Some(dir.join("script.json"));
    cfg.validate().unwrap();
    cfg
}

/// Reference selection: filter, sort, truncate, written as plainly as possible.
pub fn brute_select(
    entries: &[(String, EmbeddingVector<f64>)],
    query_id: &str,
    query: &EmbeddingVector<f64>,
    k: usize,
    threshold: f64,
) -> Vec<String> {
    let mut all: Vec<(f64, String)> = Vec::new();
    for (id, e) in entries {
        if id == query_id {
            continue;
        }
        let s = query.cosine(e);
        if s >= threshold {
            all.push((s, id.clone()));
        }
    }
    all.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    all.into_iter().take(k).map(|(_, id)| id).collect()
}

pub fn shuffle<T, R: Rng>(rng: &mut R, mut v: Vec<T>) -> Vec<T> {
    v.shuffle(rng);
    v
}
