//! Recognition of discontiguous and overlapping entities in two stages:
//! exact segment extraction over a segmental hypergraph, then merging of
//! same-type segments into entities with a binary classifier. Both stages
//! share one word/span encoder and are trained jointly.

pub mod corpus;
pub mod crf;
pub mod hypergraph;
pub mod merger;
pub mod tensor;
pub mod config;
pub mod eval;
pub mod pipeline;
