use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::loss::example_loss;
use super::metrics::evaluate;
use crate::dataset::EncodedExample;
use crate::error::{Error, Result};
use crate::model::{Model, DEFAULT_THRESHOLD};
use crate::ndmath::{Grads, Rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub threshold: f64,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            batch_size: 32,
            max_epochs: 20,
            patience: 10,
            threshold: DEFAULT_THRESHOLD,
            seed: 1,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.lr > 0.0) {
            return bad(format!("lr must be > 0, got {}", self.lr));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if self.patience > self.max_epochs {
            return bad(format!(
                "patience ({}) cannot exceed max_epochs ({})",
                self.patience, self.max_epochs
            ));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return bad(format!("threshold must be in (0, 1), got {}", self.threshold));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return bad("adam betas must be in [0, 1)".into());
        }
        if !(self.adam_eps > 0.0) {
            return bad("adam_eps must be > 0".into());
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }
}

/// Tracks the best validation score and counts epochs without improvement.
#[derive(Clone, Debug, PartialEq)]
pub struct EarlyStopping {
    patience: usize,
    best: Option<(usize, f64)>,
    since_best: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StopDecision {
    pub improved: bool,
    pub stop: bool,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: None,
            since_best: 0,
        }
    }

    /// Only a strict increase counts as an improvement.
    pub fn observe(&mut self, epoch: usize, value: f64) -> StopDecision {
        let improved = match self.best {
            None => true,
            Some((_, best)) => value > best,
        };
        if improved {
            self.best = Some((epoch, value));
            self.since_best = 0;
        } else {
            self.since_best += 1;
        }
        StopDecision {
            improved,
            stop: self.since_best >= self.patience && self.patience > 0,
        }
    }

    pub fn best(&self) -> Option<(usize, f64)> {
        self.best
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-example loss over the epoch's batches (dropout active).
    pub train_loss: f64,
    pub val_auc_avg: f64,
    pub val_f1_macro: f64,
    pub improved: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_auc_avg: f64,
    pub stopped_early: bool,
}

/// Epoch-at-a-time optimiser over a fixed training set.
pub struct Trainer<'a> {
    model: Model,
    train: &'a [EncodedExample],
    cfg: TrainConfig,
    adam: AdamState,
    grads: Grads,
    shuffle_rng: Rng,
    dropout_rng: Rng,
    epoch: usize,
}

impl<'a> Trainer<'a> {
    pub fn new(model: Model, train: &'a [EncodedExample], cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        if train.is_empty() {
            return Err(Error::Input("training set is empty".into()));
        }
        let root = Rng::new(cfg.seed);
        Ok(Self {
            adam: AdamState::new(model.params()),
            grads: model.params().zero_grads(),
            shuffle_rng: root.derive("shuffle"),
            dropout_rng: root.derive("dropout"),
            model,
            train,
            cfg,
            epoch: 0,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn into_model(self) -> Model {
        self.model
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    /// One shuffled pass in mini-batches; returns the mean example loss.
    pub fn run_epoch(&mut self) -> Result<f64> {
        self.epoch += 1;
        let mut order: Vec<usize> = (0..self.train.len()).collect();
        self.shuffle_rng.shuffle(&mut order);
        let mut total = 0.0;
        for (b, batch) in order.chunks(self.cfg.batch_size).enumerate() {
            self.grads.clear();
            let scale = 1.0 / batch.len() as f64;
            let mut batch_loss = 0.0;
            for &i in batch {
                let ex = &self.train[i];
                let cache = self.model.forward(&ex.ids, Some(&mut self.dropout_rng))?;
                let (loss, d_logits) = example_loss(&cache.scores(), &ex.labels);
                batch_loss += loss;
                self.model
                    .backward(&cache, d_logits.map(|d| d * scale), &mut self.grads)?;
            }
            if !batch_loss.is_finite() {
                return Err(Error::Numeric(format!(
                    "training loss at epoch {}, batch {}",
                    self.epoch,
                    b + 1
                )));
            }
            adam_step(self.model.params_mut(), &self.grads, &mut self.adam, &self.cfg.adam())
                .map_err(|e| Error::Numeric(format!("epoch {}, batch {}: {e}", self.epoch, b + 1)))?;
            total += batch_loss;
        }
        Ok(total / self.train.len() as f64)
    }
}

/// Mean weighted loss over `examples` in inference mode.
pub fn dataset_loss(model: &Model, examples: &[EncodedExample]) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::Input("cannot compute the loss of an empty set".into()));
    }
    let mut total = 0.0;
    for ex in examples {
        let (loss, _) = example_loss(&model.score(&ex.ids)?, &ex.labels);
        total += loss;
    }
    Ok(total / examples.len() as f64)
}

pub struct TrainOutcome {
    /// Parameters of the epoch with the best validation average AUC.
    pub model: Model,
    pub history: History,
}

/// Trains with early stopping on validation average AUC and returns the best
/// snapshot.
pub fn train(
    model: Model,
    train_set: &[EncodedExample],
    val_set: &[EncodedExample],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    if val_set.is_empty() {
        return Err(Error::Input("validation set is empty".into()));
    }
    let mut trainer = Trainer::new(model, train_set, cfg.clone())?;
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut best_params = trainer.model().params().clone();
    let mut epochs = Vec::new();
    let mut stopped_early = false;
    for _ in 0..cfg.max_epochs {
        let train_loss = trainer.run_epoch()?;
        let report = evaluate(trainer.model(), val_set, cfg.threshold)?;
        let decision = stopper.observe(trainer.epoch(), report.auc_avg);
        if decision.improved {
            best_params = trainer.model().params().clone();
        }
        log::info!(
            "epoch {}: loss {:.5} val auc_avg {:.4} f1_macro {:.4}{}",
            trainer.epoch(),
            train_loss,
            report.auc_avg,
            report.f1_macro,
            if decision.improved { " *" } else { "" }
        );
        epochs.push(EpochRecord {
            epoch: trainer.epoch(),
            train_loss,
            val_auc_avg: report.auc_avg,
            val_f1_macro: report.f1_macro,
            improved: decision.improved,
        });
        if decision.stop {
            stopped_early = trainer.epoch() < cfg.max_epochs;
            break;
        }
    }
    let (best_epoch, best_val_auc_avg) = stopper.best().unwrap_or((0, f64::NAN));
    let mut model = trainer.into_model();
    model.set_params(best_params)?;
    Ok(TrainOutcome {
        model,
        history: History {
            epochs,
            best_epoch,
            best_val_auc_avg,
            stopped_early,
        },
    })
}
