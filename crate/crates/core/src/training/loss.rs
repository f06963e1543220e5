use crate::dataset::{Category, LabelVector};
use crate::error::{Error, Result};
use crate::model::ScoreVector;

/// Probabilities are clamped to `[BCE_EPS, 1 − BCE_EPS]` before the log.
pub const BCE_EPS: f64 = 1e-7;

/// Per-head loss weights in head order (harassment, indirect, sexual,
/// physical): half on the harassment task, half on the type task split
/// 1/5 sexual, 2/5 indirect, 2/5 physical.
pub const LOSS_WEIGHTS: [f64; 4] = [0.5, 0.5 * 0.4, 0.5 * 0.2, 0.5 * 0.4];

/// Mean binary cross-entropy.
pub fn bce(y: &[bool], y_hat: &[f64]) -> Result<f64> {
    if y.len() != y_hat.len() {
        return Err(Error::shape("bce", &[y.len()], &[y_hat.len()]));
    }
    if y.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = y.iter().zip(y_hat).map(|(&t, &p)| single_bce(t, p)).sum();
    Ok(total / y.len() as f64)
}

#[inline]
fn single_bce(y: bool, p: f64) -> f64 {
    let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
    if y {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// `½·har + ½·(⅕·sex + ⅖·ind + ⅖·phys)`.
pub fn multitask_loss(b_har: f64, b_sex: f64, b_ind: f64, b_phys: f64) -> f64 {
    0.5 * b_har + 0.5 * (0.2 * b_sex + 0.4 * b_ind + 0.4 * b_phys)
}

/// Weighted loss of one example and its gradient with respect to each head
/// logit. The gradient is zero for a head whose probability sits in the
/// clamped region, matching the clamped loss.
pub fn example_loss(scores: &ScoreVector, labels: &LabelVector) -> (f64, [f64; 4]) {
    let mut bces = [0.0; 4];
    let mut d_logits = [0.0; 4];
    for c in Category::ALL {
        let i = c.index();
        let p = scores.get(c);
        let y = labels.get(c);
        bces[i] = single_bce(y, p);
        if p > BCE_EPS && p < 1.0 - BCE_EPS {
            d_logits[i] = LOSS_WEIGHTS[i] * (p - if y { 1.0 } else { 0.0 });
        }
    }
    let loss = multitask_loss(
        bces[Category::Harassment.index()],
        bces[Category::Sexual.index()],
        bces[Category::Indirect.index()],
        bces[Category::Physical.index()],
    );
    (loss, d_logits)
}
