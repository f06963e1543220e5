use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::{evaluate, MetricsReport};
use super::trainer::{train, History, TrainConfig};
use crate::dataset::EncodedExample;
use crate::embeddings::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::model::{Model, ModelConfig, VariantId};

/// Column names of the comparison table, in order.
pub const TABLE_COLUMNS: [&str; 5] = ["sexual_f1", "indirect_f1", "physical_f1", "harassment_f1", "f1_macro"];

/// The five compared F1 figures of one model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TableMetrics {
    pub sexual_f1: f64,
    pub indirect_f1: f64,
    pub physical_f1: f64,
    pub harassment_f1: f64,
    pub f1_macro: f64,
}

impl TableMetrics {
    pub fn from_report(r: &MetricsReport) -> Self {
        Self {
            sexual_f1: r.f1.sexual,
            indirect_f1: r.f1.indirect,
            physical_f1: r.f1.physical,
            harassment_f1: r.f1.harassment,
            f1_macro: r.f1_macro,
        }
    }

    pub fn values(&self) -> [f64; 5] {
        [
            self.sexual_f1,
            self.indirect_f1,
            self.physical_f1,
            self.harassment_f1,
            self.f1_macro,
        ]
    }

    fn from_values(v: [f64; 5]) -> Self {
        Self {
            sexual_f1: v[0],
            indirect_f1: v[1],
            physical_f1: v[2],
            harassment_f1: v[3],
            f1_macro: v[4],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub report: MetricsReport,
    pub history: History,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolRow {
    pub variant: VariantId,
    pub runs: Vec<RunResult>,
    pub mean: TableMetrics,
    /// Population standard deviation across runs.
    pub std: TableMetrics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolTable {
    pub rows: Vec<ProtocolRow>,
}

impl ProtocolTable {
    pub fn sort_by_f1_macro(&mut self) {
        self.rows.sort_by(|a, b| b.mean.f1_macro.total_cmp(&a.mean.f1_macro));
    }

    /// `model` followed by the five metric means.
    pub fn to_csv(&self) -> String {
        self.render(|r| r.mean, "")
    }

    /// Same layout holding standard deviations, columns suffixed `_std`.
    pub fn to_std_csv(&self) -> String {
        self.render(|r| r.std, "_std")
    }

    fn render(&self, pick: impl Fn(&ProtocolRow) -> TableMetrics, suffix: &str) -> String {
        let mut out = String::from("model");
        for c in TABLE_COLUMNS {
            let _ = write!(out, ",{c}{suffix}");
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(row.variant.name());
            for v in pick(row).values() {
                let _ = write!(out, ",{v:.6}");
            }
            out.push('\n');
        }
        out
    }
}

/// Inputs shared by every run.
pub struct ProtocolData<'a> {
    pub embeddings: &'a EmbeddingMatrix,
    pub train: &'a [EncodedExample],
    pub validation: &'a [EncodedExample],
    /// Reports are computed here; falls back to validation when empty.
    pub test: &'a [EncodedExample],
}

#[derive(Clone, Debug)]
pub struct ProtocolConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub variants: Vec<VariantId>,
    pub seeds: Vec<u64>,
}

impl ProtocolConfig {
    /// All eight variants with seeds `1..=n_runs`.
    pub fn new(model: ModelConfig, train: TrainConfig, n_runs: usize) -> Self {
        Self {
            model,
            train,
            variants: VariantId::ALL.to_vec(),
            seeds: (1..=n_runs as u64).collect(),
        }
    }
}

/// Trains and evaluates every (variant, seed) pair and averages per variant.
/// The first failing run aborts the whole protocol.
pub fn run_protocol(cfg: &ProtocolConfig, data: &ProtocolData<'_>) -> Result<ProtocolTable> {
    if cfg.seeds.is_empty() {
        return Err(Error::Config("the protocol needs at least one run".into()));
    }
    let eval_set = if data.test.is_empty() {
        data.validation
    } else {
        data.test
    };
    let mut rows = Vec::with_capacity(cfg.variants.len());
    for &variant in &cfg.variants {
        let mut runs = Vec::with_capacity(cfg.seeds.len());
        for &seed in &cfg.seeds {
            let run = single_run(cfg, data, eval_set, variant, seed)
                .map_err(|e| Error::State(format!("run failed (variant {variant}, seed {seed}): {e}")))?;
            log::info!("{variant} seed {seed}: f1_macro {:.4}", run.report.f1_macro);
            runs.push(run);
        }
        let (mean, std) = summarize(&runs);
        rows.push(ProtocolRow {
            variant,
            runs,
            mean,
            std,
        });
    }
    Ok(ProtocolTable { rows })
}

fn single_run(
    cfg: &ProtocolConfig,
    data: &ProtocolData<'_>,
    eval_set: &[EncodedExample],
    variant: VariantId,
    seed: u64,
) -> Result<RunResult> {
    let model_cfg = ModelConfig {
        variant,
        seed,
        ..cfg.model.clone()
    };
    let train_cfg = TrainConfig {
        seed,
        ..cfg.train.clone()
    };
    let model = Model::build(model_cfg, data.embeddings)?;
    let outcome = train(model, data.train, data.validation, &train_cfg)?;
    let mut report = evaluate(&outcome.model, eval_set, train_cfg.threshold)?;
    report.seed = Some(seed);
    report.best_epoch = Some(outcome.history.best_epoch);
    Ok(RunResult {
        seed,
        report,
        history: outcome.history,
    })
}

fn summarize(runs: &[RunResult]) -> (TableMetrics, TableMetrics) {
    let n = runs.len() as f64;
    let all: Vec<[f64; 5]> = runs
        .iter()
        .map(|r| TableMetrics::from_report(&r.report).values())
        .collect();
    let mean: [f64; 5] = std::array::from_fn(|j| all.iter().map(|v| v[j]).sum::<f64>() / n);
    let std: [f64; 5] = std::array::from_fn(|j| (all.iter().map(|v| (v[j] - mean[j]).powi(2)).sum::<f64>() / n).sqrt());
    (TableMetrics::from_values(mean), TableMetrics::from_values(std))
}
