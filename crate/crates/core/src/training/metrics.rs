use serde::{Deserialize, Serialize};

use crate::dataset::{Category, EncodedExample, LabelVector};
use crate::error::{Error, Result};
use crate::model::{decide, Model, ScoreVector};

/// ROC AUC together with a flag for single-class inputs, where it is
/// undefined and reported as 0.5.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RocAuc {
    pub value: f64,
    pub degenerate: bool,
}

/// Normalised Mann–Whitney U: `(concordant + ½·tied) / (positives·negatives)`.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<RocAuc> {
    if scores.len() != labels.len() {
        return Err(Error::shape("auc", &[scores.len()], &[labels.len()]));
    }
    if scores.is_empty() {
        return Err(Error::Input("AUC of an empty set".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Numeric("AUC scores".into()));
    }
    let positives = labels.iter().filter(|&&l| l).count() as u64;
    let negatives = labels.len() as u64 - positives;
    if positives == 0 || negatives == 0 {
        return Ok(RocAuc {
            value: 0.5,
            degenerate: true,
        });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Walk groups of equal score in ascending order, counting negatives below.
    let (mut concordant, mut tied, mut negatives_below) = (0u64, 0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut pos, mut neg) = (0u64, 0u64);
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] {
                pos += 1;
            } else {
                neg += 1;
            }
            j += 1;
        }
        concordant += pos * negatives_below;
        tied += pos * neg;
        negatives_below += neg;
        i = j;
    }
    Ok(RocAuc {
        value: (2 * concordant + tied) as f64 / (2 * positives * negatives) as f64,
        degenerate: false,
    })
}

/// Confusion counts of binary predictions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn count(pred: &[bool], truth: &[bool]) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::shape("confusion", &[pred.len()], &[truth.len()]));
        }
        let mut c = Confusion::default();
        for (&p, &t) in pred.iter().zip(truth) {
            match (p, t) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        Ok(c)
    }

    /// `2PR/(P+R)`, zero when precision or recall is undefined or both are 0.
    pub fn f1(&self) -> f64 {
        if self.tp + self.fp == 0 || self.tp + self.fn_ == 0 {
            return 0.0;
        }
        let precision = self.tp as f64 / (self.tp + self.fp) as f64;
        let recall = self.tp as f64 / (self.tp + self.fn_) as f64;
        if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        }
    }
}

pub fn f1(pred: &[bool], truth: &[bool]) -> Result<f64> {
    Ok(Confusion::count(pred, truth)?.f1())
}

/// One value per category.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PerCategory {
    pub harassment: f64,
    pub indirect: f64,
    pub sexual: f64,
    pub physical: f64,
}

impl PerCategory {
    pub fn from_fn(mut f: impl FnMut(Category) -> f64) -> Self {
        Self {
            harassment: f(Category::Harassment),
            indirect: f(Category::Indirect),
            sexual: f(Category::Sexual),
            physical: f(Category::Physical),
        }
    }

    pub fn get(&self, c: Category) -> f64 {
        match c {
            Category::Harassment => self.harassment,
            Category::Indirect => self.indirect,
            Category::Sexual => self.sexual,
            Category::Physical => self.physical,
        }
    }

    pub fn mean(&self) -> f64 {
        (self.harassment + self.indirect + self.sexual + self.physical) / 4.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// F1 of the decided labels.
    pub f1: PerCategory,
    pub f1_macro: f64,
    /// AUC of the raw scores.
    pub auc: PerCategory,
    pub auc_avg: f64,
    /// Categories whose AUC was undefined (single class) and set to 0.5.
    pub degenerate_auc: Vec<Category>,
    pub threshold: f64,
    pub n_examples: usize,
    pub seed: Option<u64>,
    pub best_epoch: Option<usize>,
}

/// Metrics of precomputed scores.
pub fn evaluate_scores(scores: &[ScoreVector], labels: &[LabelVector], threshold: f64) -> Result<MetricsReport> {
    if scores.len() != labels.len() {
        return Err(Error::shape("evaluate", &[scores.len()], &[labels.len()]));
    }
    if scores.is_empty() {
        return Err(Error::Input("cannot evaluate an empty dataset".into()));
    }
    let decided: Vec<LabelVector> = scores.iter().map(|s| decide(s, threshold)).collect();
    let mut degenerate = Vec::new();
    let mut f1s = PerCategory::default();
    let mut aucs = PerCategory::default();
    for c in Category::ALL {
        let truth: Vec<bool> = labels.iter().map(|l| l.get(c)).collect();
        let pred: Vec<bool> = decided.iter().map(|l| l.get(c)).collect();
        let raw: Vec<f64> = scores.iter().map(|s| s.get(c)).collect();
        let f = f1(&pred, &truth)?;
        let a = auc(&raw, &truth)?;
        if a.degenerate {
            log::warn!("AUC for {c} is undefined (single class); using 0.5");
            degenerate.push(c);
        }
        match c {
            Category::Harassment => (f1s.harassment, aucs.harassment) = (f, a.value),
            Category::Indirect => (f1s.indirect, aucs.indirect) = (f, a.value),
            Category::Sexual => (f1s.sexual, aucs.sexual) = (f, a.value),
            Category::Physical => (f1s.physical, aucs.physical) = (f, a.value),
        }
    }
    Ok(MetricsReport {
        f1: f1s,
        f1_macro: f1s.mean(),
        auc: aucs,
        auc_avg: aucs.mean(),
        degenerate_auc: degenerate,
        threshold,
        n_examples: scores.len(),
        seed: None,
        best_epoch: None,
    })
}

/// Scores every example in inference mode and computes the report.
pub fn evaluate(model: &Model, examples: &[EncodedExample], threshold: f64) -> Result<MetricsReport> {
    let scores = examples
        .iter()
        .map(|e| model.score(&e.ids))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<LabelVector> = examples.iter().map(|e| e.labels).collect();
    evaluate_scores(&scores, &labels, threshold)
}
