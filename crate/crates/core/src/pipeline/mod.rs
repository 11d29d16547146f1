//! Joint training and two-stage decoding, plus checkpoint persistence.

mod checkpoint;
mod encoder;
mod model;
mod settings;
mod train;
mod vocab;

pub use checkpoint::{Checkpoint, EpochRecord, ModelKind, FORMAT_VERSION, MAGIC};
pub use encoder::{Encoded, TextEncoder};
pub use model::{GoldStructure, JointModel, SentenceLoss};
pub use settings::TrainConfig;
pub use train::{evaluate, train, Embeddings};
pub use vocab::{TypeInventory, Vocab, UNK, UNK_TOKEN};

pub(crate) use model::adopt_params;

use crate::config::ConfigError;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0} corpus is empty")]
    EmptyCorpus(&'static str),
    #[error("no entity types in the training data")]
    NoTypes,
    #[error("training sentence {sentence}: {message}")]
    TrainingData { sentence: usize, message: String },
    #[error("embedding dimension {found} does not match emb_dim={expected}")]
    EmbeddingDim { expected: usize, found: usize },
    #[error("checkpoint format version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("checkpoint holds a {found} model, expected {expected}")]
    WrongKind { expected: ModelKind, found: ModelKind },
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
