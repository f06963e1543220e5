//! Loss, optimisation, metrics, the early-stopped training loop and the
//! multi-seed comparison protocol.

mod adam;
mod loss;
mod metrics;
mod protocol;
mod trainer;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use loss::{bce, example_loss, multitask_loss, BCE_EPS, LOSS_WEIGHTS};
pub use metrics::{auc, evaluate, evaluate_scores, f1, Confusion, MetricsReport, PerCategory, RocAuc};
pub use protocol::{
    run_protocol, ProtocolConfig, ProtocolData, ProtocolRow, ProtocolTable, RunResult, TableMetrics, TABLE_COLUMNS,
};
pub use trainer::{
    dataset_loss, train, EarlyStopping, EpochRecord, History, StopDecision, TrainConfig, TrainOutcome, Trainer,
};
