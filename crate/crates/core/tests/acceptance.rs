//! Acceptance gate. One test per criterion; each prints a single
//! `[PASS]` / `[FAIL]` line before asserting.

mod common;

use std::time::{Duration, Instant};

use rafts_core::corpus::SplitName;
use rafts_core::corpus::{Claim, Document};
use rafts_core::demos::{DemoEntry, DemoIndex, Demonstration};
use rafts_core::dense::{
    hinge_term, loss_and_grad, mean_epoch_losses, sample_training_pair, AdapterParams,
    EmbeddingTable, RerankConfig, Trainer,
};
use rafts_core::embedding::EmbeddingVector;
use rafts_core::metrics::{macro_prf, ndcg_at_k, recall_at_k, RetrievalJudgment};
use rafts_core::pipeline::{self, VerdictRecord, CLASSIFICATION_REPORT_FILE, VERDICTS_FILE};
use rafts_core::sparse::InvertedIndex;
use rafts_core::verifier::prompts;
use rafts_core::verifier::{parse_label, ParseStatus, Stance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::strings;

fn report(id: u32, name: &str, ok: bool, detail: String) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {id:>2}: {name} ({detail})");
}

#[test]
fn criterion_01_bm25_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut mismatches = 0;
    let mut max_score_diff = 0.0f64;
    let mut queries = 0;
    for _ in 0..25 {
        let n = rng.gen_range(1..=500);
        let vocab = rng.gen_range(1..=50);
        let docs = common::random_corpus(&mut rng, n, vocab);
        let index = InvertedIndex::build(&docs).unwrap();
        for _ in 0..8 {
            let qlen = rng.gen_range(1..=6);
            let text: Vec<String> = (0..qlen)
                .map(|_| format!("w{}", rng.gen_range(0..vocab + 5)))
                .collect();
            let claim = Claim::new("q", text.join(" "));
            let m_hat = rng.gen_range(1..=n);
            let got = index.retrieve_candidates(&claim, m_hat);
            let brute = common::brute_bm25(&docs, &claim.text, 1.2, 0.75);
            let want = common::brute_top(brute.clone(), m_hat);
            let got_ids: Vec<String> = got.iter().map(|d| d.doc_id.clone()).collect();
            if got_ids != want {
                mismatches += 1;
            }
            for d in &got {
                let b = brute.iter().find(|(id, _)| *id == d.doc_id).unwrap().1;
                max_score_diff = max_score_diff.max((d.score - b).abs());
            }
            queries += 1;
        }
    }
    let elapsed = start.elapsed();
    let ok = mismatches == 0 && max_score_diff < 1e-9 && elapsed < Duration::from_secs(10);
    report(
        1,
        "BM25 matches brute-force ranking",
        ok,
        format!("{queries} queries, {mismatches} mismatches, max |Δscore| {max_score_diff:.2e}, {elapsed:.2?}"),
    );
    assert!(ok);
}

#[test]
fn criterion_02_hand_bm25_value() {
    let docs = vec![Document {
        doc_id: "only".into(),
        title: None,
        text: "apple".into(),
    }];
    let index = InvertedIndex::build(&docs).unwrap();
    let got = index.retrieve_candidates(&Claim::new("q", "apple"), 1)[0].score;
    let want = (1.0f64 + 0.5 / 1.5).ln();
    let ok = (got - want).abs() < 1e-9;
    report(
        2,
        "single-document BM25 value",
        ok,
        format!("got {got:.12}, want {want:.12}"),
    );
    assert!(ok);
}

/// Distance of the instance from a non-differentiable point of the loss.
fn kink_distance(
    params: &AdapterParams<f64>,
    pair: &rafts_core::dense::TrainingPair,
    table: &EmbeddingTable<f64>,
    tau: f64,
) -> f64 {
    let e_x = table.claim(&pair.claim.claim_id).unwrap();
    let f = |id: &str| params.score_pair(e_x, table.doc(id).unwrap()).unwrap();
    let mut pos: Vec<f64> = pair.positives.iter().map(|p| f(p)).collect();
    pos.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let margin = (pos[0] + tau - f(&pair.gold_doc_id)).abs();
    let gap = if pos.len() > 1 {
        pos[0] - pos[1]
    } else {
        f64::INFINITY
    };
    margin.min(gap)
}

#[test]
fn criterion_03_gradient_check() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let h = 1e-5;
    let mut worst = 0.0f64;
    let mut checked = 0;
    while checked < 50 {
        let dim = rng.gen_range(2..=16);
        let l = rng.gen_range(1..=4);
        let (params, pair, table) = common::random_instance(&mut rng, dim, l);
        let cfg = RerankConfig {
            l,
            lambda: rng.gen_range(0.0..2.0),
            temp: rng.gen_range(0.05..1.0),
            tau: rng.gen_range(0.05..0.5),
            ..RerankConfig::default()
        };
        // Finite differences straddling a kink measure nothing useful.
        if kink_distance(&params, &pair, &table, cfg.tau) < 1e-3 {
            continue;
        }
        let (_, grad) = loss_and_grad(&params, &pair, &table, &cfg).unwrap();
        for i in 0..dim {
            for j in 0..dim {
                let mut plus = params.clone();
                plus.w.set(i, j, params.w.get(i, j) + h);
                let mut minus = params.clone();
                minus.w.set(i, j, params.w.get(i, j) - h);
                let lp = loss_and_grad(&plus, &pair, &table, &cfg).unwrap().0.total;
                let lm = loss_and_grad(&minus, &pair, &table, &cfg).unwrap().0.total;
                let numeric = (lp - lm) / (2.0 * h);
                let analytic = grad.get(i, j);
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
                worst = worst.max(rel);
            }
        }
        checked += 1;
    }
    let elapsed = start.elapsed();
    let ok = worst < 1e-4 && elapsed < Duration::from_secs(30);
    report(
        3,
        "analytic gradient vs central differences",
        ok,
        format!("{checked} instances, max rel err {worst:.2e}, {elapsed:.2?}"),
    );
    assert!(ok);
}

#[test]
fn criterion_04_loss_reductions() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut exact = 0;
    for _ in 0..100 {
        let dim = rng.gen_range(2..=12);
        let l = rng.gen_range(1..=4);
        let (params, pair, table) = common::random_instance(&mut rng, dim, l);
        let cfg = RerankConfig {
            lambda: 0.0,
            l,
            ..RerankConfig::default()
        };
        let (lb, _) = loss_and_grad(&params, &pair, &table, &cfg).unwrap();
        if lb.total == hinge_term(&params, &pair, &table, cfg.tau).unwrap() && lb.total == lb.hinge
        {
            exact += 1;
        }
    }

    // Gold already clears every positive by more than tau.
    let unit = |v: &[f64]| EmbeddingVector::normalized(v.to_vec()).unwrap();
    let mut table = EmbeddingTable::new();
    table.insert_claim("x", unit(&[1.0, 0.0, 0.0]));
    table.insert_doc("gold", unit(&[1.0, 0.05, 0.0]));
    table.insert_doc("p0", unit(&[0.2, 1.0, 0.0]));
    table.insert_doc("p1", unit(&[0.0, 0.0, 1.0]));
    table.insert_doc("n0", unit(&[-1.0, 0.2, 0.0]));
    table.insert_doc("n1", unit(&[-0.5, 0.0, 1.0]));
    let pair = rafts_core::dense::TrainingPair {
        claim: Claim::new("x", "x"),
        gold_doc_id: "gold".into(),
        positives: strings(&["p0", "p1"]),
        negatives: strings(&["n0", "n1"]),
    };
    let params = AdapterParams::identity(3, 0);
    let cfg = RerankConfig {
        lambda: 0.0,
        l: 2,
        ..RerankConfig::default()
    };
    let (lb, grad) = loss_and_grad(&params, &pair, &table, &cfg).unwrap();
    let satisfied = lb.total == 0.0 && grad.max_abs() == 0.0;

    let ok = exact == 100 && satisfied;
    report(
        4,
        "lambda = 0 reduces to the hinge; satisfied margin is inert",
        ok,
        format!(
            "{exact}/100 exact, satisfied loss {} grad max {}",
            lb.total,
            grad.max_abs()
        ),
    );
    assert!(ok);
}

fn top1_rate(params: &AdapterParams<f64>, fx: &common::Separable, index: &InvertedIndex) -> f64 {
    let judgments: Vec<RetrievalJudgment> = fx
        .test
        .iter()
        .map(|c| {
            let cands = index.retrieve_candidates(c, 20);
            let ranked = params.rerank(&c.claim_id, &cands, 5, &fx.table).unwrap();
            RetrievalJudgment {
                claim_id: c.claim_id.clone(),
                ranked_doc_ids: ranked.into_iter().map(|d| d.doc_id).collect(),
                relevant_doc_ids: c.gold().iter().cloned().collect(),
            }
        })
        .collect();
    judgments
        .iter()
        .map(|j| ndcg_at_k::<f64>(j, 1))
        .sum::<f64>()
        / judgments.len() as f64
}

#[test]
fn criterion_05_reranker_learning_signal() {
    let start = Instant::now();
    let fx = common::separable_fixture(200, 50, 0.25);
    let index = InvertedIndex::build(&fx.docs).unwrap();
    let cfg = RerankConfig {
        steps: 1000,
        seed: 5,
        ..RerankConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut trainer = Trainer::<f64>::new(fx.dim, cfg.clone());
    while trainer.remaining() > 0 {
        let pairs: Vec<_> = fx
            .train
            .iter()
            .map(|c| sample_training_pair(&index, c, &c.gold()[0], &cfg, &mut rng).unwrap())
            .collect();
        trainer.run_epoch(&pairs, &fx.table, &mut rng).unwrap();
    }
    let outcome = trainer.finish();
    let epochs = mean_epoch_losses(&outcome.trace, fx.train.len());
    let identity = top1_rate(&AdapterParams::identity(fx.dim, 0), &fx, &index);
    let trained = top1_rate(&outcome.params, &fx, &index);
    let elapsed = start.elapsed();
    let ok = epochs.len() == 5
        && trained >= identity + 0.3
        && epochs[4] < epochs[0]
        && elapsed < Duration::from_secs(60);
    report(
        5,
        "trained adapter beats identity on separable fixture",
        ok,
        format!(
            "N@1 identity {identity:.3} trained {trained:.3}, epoch loss {:.4} -> {:.4}, {elapsed:.2?}",
            epochs[0], epochs[4]
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_06_metric_fixtures() {
    let rank3 = RetrievalJudgment::new("c", &["a", "b", "g", "d", "e"], &["g"]);
    let n5: f64 = ndcg_at_k(&rank3, 5);
    let two_of_three =
        RetrievalJudgment::new("c", &["g1", "x", "g2", "y", "z"], &["g1", "g2", "g3"]);
    let r5: f64 = recall_at_k(&two_of_three, 5);
    let hand_ok = (n5 - 0.5).abs() < 1e-12 && (r5 - 2.0 / 3.0).abs() < 1e-12;

    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut equal = 0;
    for _ in 0..100 {
        let n = rng.gen_range(1..=10);
        let ranked: Vec<String> = (0..n).map(|i| format!("d{i}")).collect();
        let ranked = common::shuffle(&mut rng, ranked);
        let relevant = format!("d{}", rng.gen_range(0..n + 3));
        let j = RetrievalJudgment {
            claim_id: "c".into(),
            ranked_doc_ids: ranked,
            relevant_doc_ids: [relevant].into_iter().collect(),
        };
        if ndcg_at_k::<f64>(&j, 1) == recall_at_k::<f64>(&j, 1) {
            equal += 1;
        }
    }
    let ok = hand_ok && equal == 100;
    report(
        6,
        "NDCG / recall fixtures",
        ok,
        format!("N@5 {n5}, R@5 {r5:.12}, N@1 == R@1 on {equal}/100"),
    );
    assert!(ok);
}

/// Per-class counts recomputed from scratch.
fn brute_macro(gold: &[String], pred: &[String], classes: &[String]) -> (f64, f64, f64) {
    let mut ps = Vec::new();
    let mut rs = Vec::new();
    let mut fs = Vec::new();
    for c in classes {
        let tp = gold
            .iter()
            .zip(pred)
            .filter(|(g, p)| *g == c && *p == c)
            .count() as f64;
        let fp = gold
            .iter()
            .zip(pred)
            .filter(|(g, p)| *g != c && *p == c)
            .count() as f64;
        let fn_ = gold
            .iter()
            .zip(pred)
            .filter(|(g, p)| *g == c && *p != c)
            .count() as f64;
        let p = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        let r = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
        let f = if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        };
        ps.push(p);
        rs.push(r);
        fs.push(f);
    }
    let n = classes.len() as f64;
    (
        ps.iter().sum::<f64>() / n,
        rs.iter().sum::<f64>() / n,
        fs.iter().sum::<f64>() / n,
    )
}

#[test]
fn criterion_07_macro_prf() {
    let classes = strings(&["A", "B"]);
    let gold = strings(&["A", "A", "B", "B"]);
    let pred = strings(&["A", "A", "A", "A"]);
    let r = macro_prf::<f64>(&gold, &pred, &classes).unwrap();
    let fixture_ok = (r.macro_precision - 0.25).abs() < 1e-9
        && (r.macro_recall - 0.5).abs() < 1e-9
        && (r.macro_f1 - 1.0 / 3.0).abs() < 1e-9;

    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut agree = 0;
    for _ in 0..100 {
        let k = rng.gen_range(2..=5);
        let classes: Vec<String> = (0..k).map(|i| format!("c{i}")).collect();
        let n = rng.gen_range(1..=40);
        let draw = |rng: &mut ChaCha8Rng| -> Vec<String> {
            (0..n)
                .map(|_| classes[rng.gen_range(0..k)].clone())
                .collect()
        };
        let gold = draw(&mut rng);
        let pred = draw(&mut rng);
        let got = macro_prf::<f64>(&gold, &pred, &classes).unwrap();
        let (p, r, f) = brute_macro(&gold, &pred, &classes);
        if got.macro_precision == p && got.macro_recall == r && got.macro_f1 == f {
            agree += 1;
        }
    }
    let ok = fixture_ok && agree == 100;
    report(
        7,
        "macro precision / recall / F1",
        ok,
        format!(
            "all-A fixture P {} R {} F1 {:.10}, brute force agrees {agree}/100",
            r.macro_precision, r.macro_recall, r.macro_f1
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_08_demo_selection() {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut agree = 0;
    let mut invariants = 0;
    for _ in 0..100 {
        let dim = rng.gen_range(2..=6);
        let n = rng.gen_range(0..=30);
        let mut entries: Vec<(String, EmbeddingVector<f64>)> = Vec::new();
        for i in 0..n {
            // Repeat some vectors so that ties actually occur.
            let v = if i > 0 && rng.gen_bool(0.2) {
                entries[rng.gen_range(0..i)].1.clone()
            } else {
                common::random_unit(&mut rng, dim)
            };
            entries.push((format!("t{:03}", rng.gen_range(0..1000) * 100 + i), v));
        }
        let (query_id, query) = if n > 0 && rng.gen_bool(0.3) {
            entries[rng.gen_range(0..n)].clone()
        } else {
            ("query".to_string(), common::random_unit(&mut rng, dim))
        };
        let k = rng.gen_range(0..=12);
        let threshold = rng.gen_range(-0.5..0.9);
        let index = DemoIndex {
            entries: entries
                .iter()
                .map(|(id, e)| DemoEntry {
                    claim: Claim::new(id.clone(), format!("text {id}")).with_label("True"),
                    label: "True".into(),
                    embedding: e.clone(),
                    supporting_arg: None,
                    refuting_arg: None,
                })
                .collect(),
            source_split: SplitName::Train,
        };
        let got = index.select(&query_id, &query, k, threshold);
        let ids: Vec<String> = got.iter().map(|d| d.claim.claim_id.clone()).collect();
        if ids == common::brute_select(&entries, &query_id, &query, k, threshold) {
            agree += 1;
        }
        let holds = got.len() <= k
            && got
                .iter()
                .all(|d| d.similarity >= threshold && d.claim.claim_id != query_id)
            && got.windows(2).all(|w| {
                w[0].similarity > w[1].similarity
                    || (w[0].similarity == w[1].similarity
                        && w[0].claim.claim_id < w[1].claim.claim_id)
            });
        if holds {
            invariants += 1;
        }
    }
    let ok = agree == 100 && invariants == 100;
    report(
        8,
        "demonstration selection vs brute force",
        ok,
        format!("{agree}/100 identical, invariants hold {invariants}/100"),
    );
    assert!(ok);
}

fn golden(name: &str) -> String {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn criterion_09_prompt_goldens() {
    let classes = strings(&["True", "False"]);
    let demo = |id: &str, text: &str, label: &str, s: &str, r: &str| Demonstration {
        claim: Claim::new(id, text).with_label(label),
        label: label.to_string(),
        similarity: 0.9,
        supporting_arg: Some(s.to_string()),
        refuting_arg: Some(r.to_string()),
    };
    let demos = vec![
        demo(
            "t1",
            "Masks reduce transmission of respiratory viruses.",
            "True",
            "Trials found fewer infections among mask wearers.",
            "No evidence found to refute the claim.",
        ),
        demo(
            "t2",
            "Vitamin C cures influenza.",
            "False",
            "No evidence found to support the claim.",
            "Controlled studies saw no effect on recovery time.",
        ),
    ];
    let claim = Claim::new("q", "Handwashing lowers infection rates in schools.");
    let supporting = "A school study reported fewer absences after handwashing programs.";
    let refuting = "No evidence found to refute the claim.";
    let docs = [
        Document {
            doc_id: "d1".into(),
            title: Some("School hygiene study".into()),
            text: "Absences fell by 20 percent after handwashing stations were installed.".into(),
        },
        Document {
            doc_id: "d2".into(),
            title: None,
            text: "Influenza season peaked in February.".into(),
        },
    ];
    let evidence: Vec<&Document> = docs.iter().collect();

    let synthesis =
        prompts::synthesis_prompt(&demos, supporting, refuting, &claim, &classes).unwrap();
    let checks = [
        (
            "synthesis",
            synthesis.clone(),
            golden("synthesis_two_demos.txt"),
        ),
        (
            "argument+",
            prompts::argument_prompt(&claim, &evidence, Stance::Supporting),
            golden("argument_supporting.txt"),
        ),
        (
            "argument-",
            prompts::argument_prompt(&claim, &evidence, Stance::Refuting),
            golden("argument_refuting.txt"),
        ),
        (
            "explanation",
            prompts::explanation_prompt(&claim, supporting, refuting, "True"),
            golden("explanation.txt"),
        ),
    ];
    let failed: Vec<&str> = checks
        .iter()
        .filter(|(_, got, want)| got != want)
        .map(|(n, _, _)| *n)
        .collect();
    let ends_open = synthesis.ends_with("the claim should be classified as");
    let ok = failed.is_empty() && ends_open;
    report(
        9,
        "prompt golden files",
        ok,
        format!(
            "{} of 4 match, target block open-ended: {ends_open}",
            4 - failed.len()
        ),
    );
    for (name, got, want) in &checks {
        assert_eq!(got, want, "{name} prompt differs from golden");
    }
    assert!(ok);
}

fn run_all(dir: &std::path::Path) -> (Vec<u8>, f64) {
    let cfg = common::write_twelve_fixture(dir);
    pipeline::index_build(&cfg, false).unwrap();
    pipeline::rerank_train(&cfg, false).unwrap();
    pipeline::demos_prepare(&cfg, false).unwrap();
    pipeline::verify_run(&cfg, false).unwrap();
    let verdicts = std::fs::read(cfg.paths.output_dir.join(VERDICTS_FILE)).unwrap();
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(cfg.paths.output_dir.join(CLASSIFICATION_REPORT_FILE)).unwrap(),
    )
    .unwrap();
    (
        verdicts,
        report["classification"]["macro_f1"].as_f64().unwrap(),
    )
}

#[test]
fn criterion_10_end_to_end_determinism() {
    let start = Instant::now();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (va, fa) = run_all(a.path());
    let (vb, fb) = run_all(b.path());
    let elapsed = start.elapsed();
    let records: Vec<VerdictRecord> = String::from_utf8(va.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let ok = va == vb
        && records.len() == 12
        && (fa - common::TWELVE_MACRO_F1).abs() < 1e-9
        && fa == fb
        && elapsed < Duration::from_secs(10);
    report(
        10,
        "verify run is deterministic and scores as hand-computed",
        ok,
        format!(
            "identical bytes: {}, macro F1 {fa:.12} vs hand {:.12}, {elapsed:.2?}",
            va == vb,
            common::TWELVE_MACRO_F1
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_11_parse_robustness() {
    let classes = strings(&["True", "Mostly True", "Half True", "False", "Pants on Fire"]);
    let fb = "False";
    use ParseStatus::{Fallback as F, Matched as M};
    let cases: [(&str, &str, ParseStatus); 50] = [
        ("True", "True", M),
        ("true.", "True", M),
        ("TRUE", "True", M),
        (" False ", "False", M),
        ("false!!!", "False", M),
        ("Mostly True", "Mostly True", M),
        ("mostly-true", "Mostly True", M),
        ("MOSTLY_TRUE", "Mostly True", M),
        ("Half True.", "Half True", M),
        ("half-true", "Half True", M),
        ("Pants on Fire", "Pants on Fire", M),
        ("pants-on-fire!", "Pants on Fire", M),
        ("the claim should be classified as True.", "True", M),
        (
            "the claim should be classified as Mostly True",
            "Mostly True",
            M,
        ),
        ("Classified as: FALSE", "False", M),
        ("classified as **Half True**", "Half True", M),
        ("the claim should be classified as \"False\"", "False", M),
        (
            "It is not True. The claim should be classified as False.",
            "False",
            M,
        ),
        (
            "The claim should be classified as False, not True.",
            "False",
            M,
        ),
        (
            "classified as True or False? I'd say classified as false",
            "False",
            M,
        ),
        ("Label: true", "True", M),
        ("Answer: False.", "False", M),
        ("I think it's half true, maybe mostly true.", "Half True", M),
        ("True, though mostly true overall", "True", M),
        ("", fb, F),
        ("I cannot determine.", fb, F),
        ("The evidence is inconclusive.", fb, F),
        ("untrue", fb, F),
        ("falsehood", fb, F),
        ("Truely", fb, F),
        ("\n\nTrue\n", "True", M),
        ("tRuE", "True", M),
        ("classified as\nFalse", "False", M),
        ("CLASSIFIED AS PANTS ON FIRE", "Pants on Fire", M),
        (
            "The claim is True. The claim should be classified as",
            "True",
            M,
        ),
        ("classified as unknown", fb, F),
        ("\u{1F642} True \u{1F642}", "True", M),
        ("Verdict \u{2014} False.", "False", M),
        ("True/False: False", "True", M),
        ("Pants on fire, definitely false", "Pants on Fire", M),
        ("half truths abound", fb, F),
        ("mostly", fb, F),
        ("FALSE.", "False", M),
        ("  classified   as   Mostly   True  ", "Mostly True", M),
        (
            "classified as mostly true. Some say classified as half true.",
            "Half True",
            M,
        ),
        ("[True]", "True", M),
        ("(false)", "False", M),
        ("true-ish", "True", M),
        ("Mostly True; not Pants on Fire", "Mostly True", M),
        ("Not classified as False but as True", "False", M),
    ];
    let mut in_set = 0;
    let mut exact = 0;
    for (text, want, status) in &cases {
        let (got, st) = parse_label(text, &classes, fb);
        if classes.contains(&got) {
            in_set += 1;
        }
        if got == *want && st == *status {
            exact += 1;
        } else {
            println!("  parse mismatch: {text:?} -> {got:?} {st:?}, want {want:?} {status:?}");
        }
    }
    let ok = in_set == cases.len() && exact == cases.len();
    report(
        11,
        "parse_label on adversarial completions",
        ok,
        format!("{in_set}/50 configured class, {exact}/50 expected"),
    );
    assert!(ok);
}
