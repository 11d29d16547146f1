//! Segment extraction over a segmental hypergraph: construction, exact
//! log-partition and MAP inference, and the bijection between segment sets
//! and derivations.

mod graph;
mod inference;
mod score;

pub use graph::{Anchor, EdgeFamily, Hyperedge, NodeKind, SegmentalHypergraph, SINK};
pub use inference::{MapDecode, SegmentSet, TypedSpan};
pub use score::{EdgeScorer, ScoredEdges};

#[derive(Debug, thiserror::Error)]
pub enum HypergraphError {
    #[error("cannot encode segment set: {0}")]
    Encoding(String),
}
