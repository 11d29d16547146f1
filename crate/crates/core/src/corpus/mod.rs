//! Entity data model, JSON-lines corpus I/O and the synthetic corpus generator.

pub mod fixtures;
mod generate;
mod jsonl;
mod stats;
mod types;

pub use generate::{generate_corpus, generate_split, GenConfig};
pub use jsonl::{load_corpus, parse_jsonl, read_corpus, save_corpus, serialize, write_corpus};
pub use stats::{corpus_stats, CorpusStats};
pub use types::{derive_gold_segments, enumerate_spans, AnnotatedSentence, Entity, Segment, Span};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("line {line}: field `{field}`: {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },
    #[error("corpus generation: {0}")]
    Generation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
