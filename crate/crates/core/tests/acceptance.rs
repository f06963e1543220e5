//! Acceptance criteria, one test each. Every test prints a single
//! `PASS`/`FAIL` line before asserting.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use harassnet::augment::{augment_dataset, AugmentPolicy, IdentityBackend};
use harassnet::dataset::{Category, EncodedExample, LabelVector, Split};
use harassnet::embeddings::{EmbeddingMatrix, Vocab};
use harassnet::layers::{softmax, Attention, Gru};
use harassnet::model::{decide, ScoreVector, TYPE_PRIORITY};
use harassnet::ndmath::{grad_check, ParamStore, Rng, Tensor};
use harassnet::training::{
    auc, dataset_loss, evaluate, example_loss, f1, multitask_loss, ProtocolTable, TrainConfig, Trainer, TABLE_COLUMNS,
};
use harassnet::{load_corpus, ColumnMap, Model, ModelConfig, VariantId};

/// Timed criteria run one at a time so their clocks only see their own work.
static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn verdict(id: u32, title: &str, ok: bool, detail: &str) {
    println!(
        "{} criterion {id:>2} {title}: {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {id} ({title}) failed: {detail}");
}

fn tiny_embeddings(vocab_size: usize, dim: usize, seed: u64) -> EmbeddingMatrix {
    let vocab = Vocab::from_tokens((0..vocab_size - 2).map(|i| format!("w{i}"))).unwrap();
    EmbeddingMatrix::random(vocab, dim, &mut Rng::new(seed))
}

fn encode_split(model: &Model, d: &harassnet::Dataset, split: Split) -> Vec<EncodedExample> {
    d.split(split)
        .map(|e| EncodedExample {
            ids: model.encode_text(&e.text),
            labels: e.labels,
        })
        .collect()
}

/// Smallest |pre-activation| over every ReLU unit of every head. Central
/// differences are only meaningful when no unit sits within a few `eps` of
/// its kink.
fn relu_margin(model: &Model, ids: &[usize]) -> f64 {
    let cache = model.forward(ids, None).unwrap();
    let store = model.params();
    let mut margin = f64::INFINITY;
    for (c, head) in Category::ALL.iter().zip(cache.heads()) {
        let w = store.get(&format!("head.{}.l0.w", c.name())).unwrap();
        let b = store.get(&format!("head.{}.l0.b", c.name())).unwrap();
        for (j, bj) in b.data().iter().enumerate() {
            let row = &w.data()[j * head.input.len()..(j + 1) * head.input.len()];
            let pre = bj + row.iter().zip(&head.input).map(|(a, x)| a * x).sum::<f64>();
            margin = margin.min(pre.abs());
        }
    }
    margin
}

#[test]
fn criterion_01_gradient_correctness() {
    const EPS: f64 = 1e-4;
    let _g = serial();
    let start = Instant::now();
    let emb = tiny_embeddings(20, 8, 3);
    let batch = [
        (
            vec![2usize, 5, 7, 11, 3, 19],
            LabelVector::new(true, false, true, false),
        ),
        (vec![4usize, 9, 1, 16], LabelVector::new(true, true, false, false)),
    ];
    let mut worst = (0.0f64, String::new());
    let mut redrawn = 0;
    for variant in VariantId::ALL {
        let mut model = None;
        for seed in 1..=100 {
            let cfg = ModelConfig {
                variant,
                embed_dim: 8,
                hidden: 8,
                proj_width: 8,
                head_width: 8,
                attn_hidden: 8,
                seed,
                ..ModelConfig::default()
            };
            let m = Model::build(cfg, &emb).unwrap();
            if batch.iter().all(|(ids, _)| relu_margin(&m, ids) > 5.0 * EPS) {
                model = Some(m);
                break;
            }
            redrawn += 1;
        }
        let model = model.expect("no initialisation clear of ReLU kinks");
        let n = batch.len() as f64;
        let loss = |store: &ParamStore| -> harassnet::Result<f64> {
            let mut total = 0.0;
            for (ids, labels) in &batch {
                let cache = model.forward_with(store, ids, None)?;
                total += example_loss(&cache.scores(), labels).0;
            }
            Ok(total / n)
        };
        let mut grads = model.params().zero_grads();
        for (ids, labels) in &batch {
            let cache = model.forward(ids, None).unwrap();
            let (_, d) = example_loss(&cache.scores(), labels);
            model.backward(&cache, d.map(|v| v / n), &mut grads).unwrap();
        }
        let mut store = model.params().clone();
        let report = grad_check(loss, &mut store, &grads, EPS).unwrap();
        if report.max_rel_error >= worst.0 {
            worst = (report.max_rel_error, format!("{variant} at {:?}", report.worst));
        }
    }
    let elapsed = start.elapsed();
    verdict(
        1,
        "gradient correctness",
        worst.0 < 1e-3 && elapsed < Duration::from_secs(120),
        &format!(
            "max relative error {:.2e} ({}) over 8 variants in {elapsed:.1?}, {redrawn} initialisations redrawn for ReLU margin",
            worst.0, worst.1
        ),
    );
}

#[test]
fn criterion_02_attention_simplex() {
    let mut rng = Rng::new(2);
    let mut worst_dev = 0.0f64;
    let mut min_alpha = f64::INFINITY;
    for draw in 0..10_000 {
        let k = 1 + (rng.next_u64() % 30) as usize;
        let mut store = ParamStore::new();
        let att = Attention::new(&mut store, "att", 8, 8, 1, &mut Rng::new(draw)).unwrap();
        let scale = rng.uniform(0.1, 5.0);
        for id in store.ids().collect::<Vec<_>>() {
            for v in store.value_mut(id).data_mut() {
                *v *= scale;
            }
        }
        let states = Tensor::matrix(k, 8, (0..k * 8).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap();
        let alphas = att.forward(&store, &states).unwrap().alphas;
        worst_dev = worst_dev.max((alphas.iter().sum::<f64>() - 1.0).abs());
        min_alpha = alphas.iter().copied().fold(min_alpha, f64::min);
    }
    let mut store = ParamStore::new();
    let att = Attention::new(&mut store, "att", 8, 8, 1, &mut Rng::new(0)).unwrap();
    for id in store.ids().collect::<Vec<_>>() {
        store.value_mut(id).fill(0.0);
    }
    let states = Tensor::matrix(7, 8, (0..56).map(|i| i as f64 / 10.0).collect()).unwrap();
    let uniform = att.forward(&store, &states).unwrap().alphas;
    let uniform_ok = uniform.iter().all(|&a| (a - 1.0 / 7.0).abs() < 1e-15);
    let ok = worst_dev <= 1e-9 && min_alpha > 0.0 && uniform_ok && softmax(&[0.0; 4]) == [0.25; 4];
    verdict(
        2,
        "attention simplex",
        ok,
        &format!("10000 draws, max |sum-1| {worst_dev:.1e}, min alpha {min_alpha:.2e}, zero-MLP uniform {uniform_ok}"),
    );
}

#[test]
fn criterion_03_gru_zero_parameter_law() {
    let mut store = ParamStore::new();
    let gru = Gru::new(&mut store, "gru", 5, 6, &mut Rng::new(0)).unwrap();
    for id in store.ids().collect::<Vec<_>>() {
        store.value_mut(id).fill(0.0);
    }
    let h0 = [0.9, -0.3, 0.55, 1.0, -1.0, 0.125];
    let seq = Tensor::matrix(20, 5, (0..100).map(|i| (i as f64).sin()).collect()).unwrap();
    let cache = gru.forward(&store, &seq, Some(&h0)).unwrap();
    let mut mismatches = 0;
    for t in 1..=20 {
        let factor = 0.5f64.powi(t as i32);
        for (got, h) in cache.states.row(t - 1).iter().zip(h0) {
            if *got != factor * h {
                mismatches += 1;
            }
        }
    }
    verdict(
        3,
        "GRU zero-parameter law",
        mismatches == 0,
        &format!("states[t] == 0.5^t h0 for t = 1..20, {mismatches} mismatches"),
    );
}

#[test]
fn criterion_04_loss_identity() {
    let mut rng = Rng::new(4);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let c = if i == 0 { 0.0 } else { rng.uniform(0.0, 20.0) };
        let l = multitask_loss(c, c, c, c);
        let rel = if c == 0.0 { l.abs() } else { ((l - c) / c).abs() };
        worst = worst.max(rel);
    }
    verdict(
        4,
        "loss identity",
        worst <= 1e-15,
        &format!("1000 draws, max relative deviation {worst:.1e}"),
    );
}

fn auc_oracle(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let (mut twice, mut pairs) = (0u64, 0u64);
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li && !lj {
                pairs += 1;
                twice += match scores[i].partial_cmp(&scores[j]).unwrap() {
                    std::cmp::Ordering::Greater => 2,
                    std::cmp::Ordering::Equal => 1,
                    std::cmp::Ordering::Less => 0,
                };
            }
        }
    }
    (pairs > 0).then(|| twice as f64 / (2 * pairs) as f64)
}

fn f1_oracle(pred: &[bool], truth: &[bool]) -> f64 {
    let tp = pred.iter().zip(truth).filter(|(p, t)| **p && **t).count() as f64;
    let fp = pred.iter().zip(truth).filter(|(p, t)| **p && !**t).count() as f64;
    let fn_ = pred.iter().zip(truth).filter(|(p, t)| !**p && **t).count() as f64;
    if tp == 0.0 {
        0.0
    } else {
        let (precision, recall) = (tp / (tp + fp), tp / (tp + fn_));
        2.0 * precision * recall / (precision + recall)
    }
}

#[test]
fn criterion_05_metric_oracles() {
    let mut rng = Rng::new(5);
    let (mut auc_bad, mut f1_bad, mut checked) = (0, 0, 0);
    for _ in 0..100 {
        let n = 1 + (rng.next_u64() % 200) as usize;
        let levels = 2 + rng.next_u64() % 20;
        let scores: Vec<f64> = (0..n)
            .map(|_| (rng.next_u64() % levels) as f64 / levels as f64)
            .collect();
        let p = rng.uniform(0.05, 0.95);
        let labels: Vec<bool> = (0..n).map(|_| rng.bernoulli(p)).collect();
        let got = auc(&scores, &labels).unwrap();
        match auc_oracle(&scores, &labels) {
            Some(want) => {
                checked += 1;
                if got.value != want || got.degenerate {
                    auc_bad += 1;
                }
            }
            None => {
                if !(got.degenerate && got.value == 0.5) {
                    auc_bad += 1;
                }
            }
        }
        let pred: Vec<bool> = (0..n).map(|_| rng.bernoulli(0.4)).collect();
        if (f1(&pred, &labels).unwrap() - f1_oracle(&pred, &labels)).abs() > 1e-12 {
            f1_bad += 1;
        }
    }
    verdict(
        5,
        "metric oracles",
        auc_bad == 0 && f1_bad == 0,
        &format!("100 instances ({checked} two-class), AUC mismatches {auc_bad}, F1 mismatches {f1_bad}"),
    );
}

/// Brute force: list the types whose score is maximal and take the one that
/// appears first in the priority order.
fn decide_oracle(s: [f64; 4], threshold: f64) -> [bool; 4] {
    if s[0] < threshold {
        return [false; 4];
    }
    let types = [(1, s[1]), (2, s[2]), (3, s[3])];
    let best = types.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
    let winners: Vec<usize> = types.iter().filter(|t| t.1 == best).map(|t| t.0).collect();
    let order = TYPE_PRIORITY.map(|c| c.index());
    let pick = *order.iter().find(|i| winners.contains(i)).unwrap();
    let mut out = [true, false, false, false];
    out[pick] = true;
    out
}

#[test]
fn criterion_06_decision_rule_oracle() {
    let grid = |i: u64| i as f64 / 100.0;
    let mut rng = Rng::new(6);
    let (mut cases, mut mismatches) = (0u64, 0u64);
    let mut check = |s: [f64; 4]| {
        cases += 1;
        let got = decide(&ScoreVector::from_array(s), 0.33).as_array();
        if got != decide_oracle(s, 0.33) {
            mismatches += 1;
        }
    };
    for _ in 0..1_000_000 {
        check([0, 0, 0, 0].map(|_: i32| grid(rng.next_u64() % 101)));
    }
    let below = f64::from_bits(0.33f64.to_bits() - 1);
    let above = f64::from_bits(0.33f64.to_bits() + 1);
    for h in [0.32, below, 0.33, above, 0.34] {
        for a in 0..=100 {
            for b in 0..=100 {
                for c in 0..=100 {
                    check([h, grid(a), grid(b), grid(c)]);
                }
            }
        }
    }
    verdict(
        6,
        "decision-rule oracle",
        mismatches == 0,
        &format!("{cases} cases (1e6 sampled grid points + boundary sweep at 0.33), {mismatches} mismatches"),
    );
}

#[test]
fn criterion_07_overfit() {
    let _g = serial();
    let start = Instant::now();
    let corpus = load_corpus(&fixture("overfit.csv"), &ColumnMap::default()).unwrap();
    let tokens: Vec<Vec<String>> = corpus
        .examples
        .iter()
        .map(|e| harassnet::textprep::preprocess(&e.text, &Default::default()))
        .collect();
    let vocab = harassnet::embeddings::build_vocab(&tokens, 1).unwrap();
    let cfg = ModelConfig {
        variant: VariantId::MultiProjectedAttentionRNN,
        ..ModelConfig::default()
    };
    let emb = EmbeddingMatrix::random(vocab, cfg.embed_dim, &mut Rng::new(1).derive("embeddings"));
    let model = Model::build(cfg, &emb).unwrap();
    let train = encode_split(&model, &corpus, Split::Train);
    let mut trainer = Trainer::new(model, &train, TrainConfig::default()).unwrap();
    let (mut f1_macro, mut loss) = (0.0, f64::INFINITY);
    while trainer.epoch() < 200 {
        trainer.run_epoch().unwrap();
        f1_macro = evaluate(trainer.model(), &train, 0.33).unwrap().f1_macro;
        loss = dataset_loss(trainer.model(), &train).unwrap();
        if f1_macro == 1.0 && loss < 0.05 {
            break;
        }
    }
    let elapsed = start.elapsed();
    verdict(
        7,
        "overfit",
        f1_macro == 1.0 && loss < 0.05 && elapsed < Duration::from_secs(60),
        &format!(
            "64 examples, epoch {}: train f1_macro {f1_macro:.4}, loss {loss:.4}, {elapsed:.1?}",
            trainer.epoch()
        ),
    );
}

#[test]
fn criterion_08_augmentation_counting() {
    let corpus = load_corpus(&fixture("smoke.csv"), &ColumnMap::default()).unwrap();
    let policy = AugmentPolicy {
        dedup: false,
        ..AugmentPolicy::default()
    };
    let (out, _) = augment_dataset(&corpus, &policy, &IdentityBackend).unwrap();
    let targeted = corpus
        .split(Split::Train)
        .filter(|e| e.labels.get(Category::Indirect) || e.labels.get(Category::Physical))
        .count();
    let growth = out.split_len(Split::Train) - corpus.split_len(Split::Train);
    let labels_ok = out.examples[corpus.len()..].iter().all(|a| {
        let src = a.id.split_once("#bt-").map(|(s, _)| s).unwrap_or("");
        corpus
            .examples
            .iter()
            .any(|e| e.id == src && e.labels == a.labels && e.text == a.text)
    });
    let held_out = |d: &harassnet::Dataset| -> Vec<harassnet::Example> {
        d.examples.iter().filter(|e| e.split != Split::Train).cloned().collect()
    };
    let untouched = held_out(&out) == held_out(&corpus);
    verdict(
        8,
        "augmentation counting",
        growth == 3 * targeted && labels_ok && untouched,
        &format!(
            "train grew by {growth} for {targeted} indirect/physical examples, labels copied {labels_ok}, held-out untouched {untouched}"
        ),
    );
}

#[test]
fn criterion_09_protocol_shape() {
    let _g = serial();
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_harassnet"))
        .arg("bench")
        .arg(fixture("smoke.csv"))
        .arg("--embeddings")
        .arg(fixture("smoke_vectors.txt"))
        .args(["--runs", "10", "--out-dir"])
        .arg(dir.path())
        .env("RUST_LOG", "warn")
        .status()
        .unwrap();
    let elapsed = start.elapsed();
    let csv = std::fs::read_to_string(dir.path().join("bench.csv")).unwrap_or_default();
    let table: Option<ProtocolTable> = std::fs::read_to_string(dir.path().join("bench.json"))
        .ok()
        .and_then(|s| serde_json::from_str(&s).ok());
    let mut lines = csv.lines();
    let header_ok = lines.next() == Some(&format!("model,{}", TABLE_COLUMNS.join(","))[..]);
    let rows: Vec<&str> = lines.collect();
    let names: Vec<&str> = rows.iter().filter_map(|r| r.split(',').next()).collect();
    let all_variants = VariantId::ALL.iter().all(|v| names.contains(&v.name()));
    let averaged = table.as_ref().is_some_and(|t| {
        t.rows.iter().all(|r| {
            let mean: f64 = r.runs.iter().map(|run| run.report.f1_macro).sum::<f64>() / r.runs.len() as f64;
            r.runs.len() == 10 && (mean - r.mean.f1_macro).abs() < 1e-12
        })
    });
    verdict(
        9,
        "protocol shape",
        status.success()
            && header_ok
            && rows.len() == 8
            && all_variants
            && averaged
            && elapsed < Duration::from_secs(600),
        &format!(
            "{} rows, table header {header_ok}, all variants {all_variants}, 10-seed means {averaged}, {elapsed:.1?}",
            rows.len()
        ),
    );
}

#[test]
fn criterion_10_determinism() {
    let _g = serial();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let status = Command::new(env!("CARGO_BIN_EXE_harassnet"))
            .arg("train")
            .arg(fixture("smoke.csv"))
            .arg("--embeddings")
            .arg(fixture("smoke_vectors.txt"))
            .args([
                "--seed",
                "3",
                "--set",
                "max_epochs=8",
                "--set",
                "patience=4",
                "--out-dir",
            ])
            .arg(d.path())
            .env("RUST_LOG", "warn")
            .stdout(std::process::Stdio::null())
            .status()
            .unwrap();
        assert!(status.success());
    }
    let read = |d: &tempfile::TempDir, f: &str| std::fs::read(d.path().join(f)).unwrap();
    let same_history = read(&dirs[0], "history.json") == read(&dirs[1], "history.json");
    let same_ckpt = read(&dirs[0], "model.ckpt") == read(&dirs[1], "model.ckpt");
    verdict(
        10,
        "determinism",
        same_history && same_ckpt,
        &format!("history.json identical {same_history}, model.ckpt identical {same_ckpt}"),
    );
}

#[test]
fn criterion_11_parameter_count_delta() {
    let vocab_size = 10_000;
    let cfg = |variant| ModelConfig {
        variant,
        ..ModelConfig::default()
    };
    let projected: Vec<VariantId> = VariantId::ALL.into_iter().filter(|v| v.projected()).collect();
    let deltas: Vec<(VariantId, i64)> = projected
        .iter()
        .map(|&v| {
            let plain = v.counterpart();
            let d = cfg(v).param_count(vocab_size) as i64 - cfg(plain).param_count(vocab_size) as i64;
            (v, d)
        })
        .collect();
    let block = 200 * 128 + 128;
    let ok = deltas.iter().all(|&(_, d)| d == block);
    // The projection also narrows the GRU input from 200 to 128.
    let gru_shrink = 3 * (200 - 128) * 128;
    let explained = deltas.iter().all(|&(_, d)| d + gru_shrink == block);
    let detail = deltas
        .iter()
        .map(|(v, d)| format!("{v}: {d:+}"))
        .collect::<Vec<_>>()
        .join(", ");
    verdict(
        11,
        "parameter-count delta",
        ok,
        &format!(
            "expected +{block} per pair; got {detail}; delta + {gru_shrink} GRU input weights == {block}: {explained}"
        ),
    );
}

#[test]
fn criterion_12_real_dataset_protocol() {
    match std::env::var_os("HARASSNET_REAL_CORPUS") {
        None => println!(
            "SKIP criterion 12 real dataset protocol: informational, set HARASSNET_REAL_CORPUS (and optionally HARASSNET_REAL_EMBEDDINGS) to run it"
        ),
        Some(corpus) => {
            let _g = serial();
            let dir = tempfile::tempdir().unwrap();
            let mut cmd = Command::new(env!("CARGO_BIN_EXE_harassnet"));
            cmd.arg("bench").arg(&corpus).args(["--runs", "10", "--threshold", "0.33", "--sort", "--out-dir"]);
            cmd.arg(dir.path());
            if let Some(e) = std::env::var_os("HARASSNET_REAL_EMBEDDINGS") {
                cmd.arg("--embeddings").arg(e);
            }
            let status = cmd.status().unwrap();
            let csv = std::fs::read_to_string(dir.path().join("bench.csv")).unwrap_or_default();
            let multi = csv.lines().any(|l| l.starts_with("MultiProjectedAttentionRNN,"))
                && csv.lines().any(|l| l.starts_with("MultiAttentionRNN,"));
            print!("{csv}");
            verdict(
                12,
                "real dataset protocol",
                status.success() && multi,
                "10-run bench on the supplied corpus produced multi-attention rows",
            );
        }
    }
}
