//! Sequence-labelling baseline: seven tags per entity type, a linear-chain
//! CRF over the word encoder, and two ways of reading entities back.

mod chain;
mod heuristics;
mod tagger;
mod tags;

pub use chain::{ChainMarginals, ChainScores};
pub use heuristics::{decode, decode_all, decode_enough, Heuristic};
pub use tagger::{train_crf, CrfTagger};
pub use tags::{encode_tags, Role, Tag, TagSet};
