//! # harassnet
//!
//! A multi-attention GRU classifier for harassment detection in short texts.
//! Every tweet receives four probabilities (harassment, indirect, sexual,
//! physical) that a threshold gate turns into one exclusive harassment type.
//!
//! ```text
//! text → clean/tokenize → vocab ids → embedding → spatial dropout
//!      → [tanh projection] → GRU → pooling / attention (1 or 4) → 4 heads
//! ```
//!
//! The crate is organised bottom-up:
//!
//! - [`ndmath`]: dense tensors, kernels, seeded rng, parameter store, gradient checker
//! - [`textprep`]: tweet cleaning and tokenization
//! - [`embeddings`]: vocabulary, pre-trained vector loading, encoding
//! - [`layers`]: forward/backward passes of every block
//! - [`model`]: the eight variants, scoring, the decision rule, checkpoints
//! - [`training`]: loss, Adam, metrics, the training loop, the multi-run protocol
//! - [`augment`]: back-translation with pluggable translation backends
//! - [`corpus`]: reading and writing labeled corpus CSV files
//! - [`cli`]: run configuration and the command implementations
//!
//! Runnable walkthroughs live in `examples/`.

pub mod augment;
pub mod cli;
pub mod corpus;
pub mod dataset;
pub mod embeddings;
pub mod error;
pub mod layers;
pub mod model;
pub mod ndmath;
pub mod textprep;
pub mod training;

pub use corpus::{load_corpus, save_corpus, ColumnMap};
pub use dataset::{Category, Dataset, EncodedExample, Example, LabelVector, Split};
pub use embeddings::{EmbeddingMatrix, Vocab};
pub use error::{Error, Result};
pub use model::{decide, Model, ModelConfig, ScoreVector, VariantId};
pub use ndmath::{ParamStore, Rng, Tensor};
pub use training::{evaluate, train, MetricsReport, TrainConfig};
