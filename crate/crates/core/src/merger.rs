//! Segment merging: entity candidates built from a segment set, scored
//! independently by a binary classifier over an entity-level encoder.

use std::collections::BTreeSet;

use rand::Rng;

use crate::corpus::Span;
use crate::hypergraph::SegmentSet;
use crate::tensor::{sigmoid, BiLstm, NodeId, ParamId, ParamStore, SpanTable, Tape, INIT_SCALE};

/// Default maximal number of segments per candidate.
pub const DEFAULT_MAX_SEGMENTS: usize = 3;

/// An ordered tuple of same-type segments proposed as one entity.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Candidate {
    pub label: usize,
    pub spans: Vec<Span>,
}

impl Candidate {
    pub fn new(label: usize, spans: Vec<Span>) -> Self {
        Candidate { label, spans }
    }

    fn sort_key(&self) -> (usize, Span, usize, &[Span]) {
        (self.label, self.spans[0], self.spans.len(), &self.spans)
    }

    pub fn is_valid(&self) -> bool {
        !self.spans.is_empty() && self.spans.windows(2).all(|w| w[0].precedes_with_gap(&w[1]))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum MergeError {
    #[error("entity {0:?} is not among the candidates of the segment set")]
    NotACandidate(Candidate),
    #[error("{candidates} candidates but {probs} probabilities")]
    Length { candidates: usize, probs: usize },
}

/// All tuples of 1..=`max_segments` same-type segments whose spans are
/// ordered and separated by at least one token, ordered by
/// `(type, first span, size)`.
pub fn enumerate_candidates(segments: &SegmentSet, max_segments: usize) -> Vec<Candidate> {
    assert!(max_segments >= 1);
    let mut out = Vec::new();
    let labels: BTreeSet<usize> = segments.iter().map(|s| s.label).collect();
    for label in labels {
        let spans: Vec<Span> = segments
            .iter()
            .filter(|s| s.label == label)
            .map(|s| s.span)
            .collect();
        let mut stack = Vec::new();
        extend(&spans, 0, max_segments, &mut stack, &mut |c: &[Span]| {
            out.push(Candidate::new(label, c.to_vec()));
        });
    }
    out.sort();
    out
}

fn extend(spans: &[Span], from: usize, max: usize, cur: &mut Vec<Span>, emit: &mut impl FnMut(&[Span])) {
    for idx in from..spans.len() {
        let s = spans[idx];
        if let Some(last) = cur.last() {
            if !last.precedes_with_gap(&s) {
                continue;
            }
        }
        cur.push(s);
        emit(cur);
        if cur.len() < max {
            extend(spans, idx + 1, max, cur, emit);
        }
        cur.pop();
    }
}

/// Probability of the membership pattern `entities` over `candidates`:
/// product of `p` for members and `1 - p` for the rest.
pub fn merge_probability(entities: &[Candidate], candidates: &[Candidate], probs: &[f64]) -> Result<f64, MergeError> {
    if candidates.len() != probs.len() {
        return Err(MergeError::Length {
            candidates: candidates.len(),
            probs: probs.len(),
        });
    }
    let members: BTreeSet<&Candidate> = entities.iter().collect();
    for e in &members {
        if !candidates.contains(e) {
            return Err(MergeError::NotACandidate((*e).clone()));
        }
    }
    Ok(candidates
        .iter()
        .zip(probs)
        .map(|(c, &p)| if members.contains(c) { p } else { 1.0 - p })
        .product())
}

/// Keeps the candidates with probability strictly above `threshold`. At 0.5
/// this is the argmax of [`merge_probability`].
pub fn decode_entities(candidates: &[Candidate], probs: &[f64], threshold: f64) -> Vec<Candidate> {
    assert_eq!(candidates.len(), probs.len());
    candidates
        .iter()
        .zip(probs)
        .filter(|(_, &p)| p > threshold)
        .map(|(c, _)| c.clone())
        .collect()
}

/// Entity-level biLSTM over span encodings followed by
/// `sigmoid(W · relu(h) + b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MergeScorer {
    pub encoder: BiLstm,
    pub weight: ParamId,
    pub bias: ParamId,
}

impl MergeScorer {
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, span_dim: usize, hidden: usize, rng: &mut R) -> Self {
        let encoder = BiLstm::new(store, &format!("{name}.entity"), span_dim, hidden, rng);
        MergeScorer {
            encoder,
            weight: store.uniform(format!("{name}.classifier.weight"), 1, 2 * hidden, INIT_SCALE, rng),
            bias: store.zeros(format!("{name}.classifier.bias"), 1, 1),
        }
    }

    /// Entity representation of a candidate from its span encodings.
    pub fn encode(&self, tape: &mut Tape, span_vectors: &[NodeId]) -> NodeId {
        self.encoder.encode_final(tape, span_vectors)
    }

    /// Pre-sigmoid score node (length 1).
    pub fn logit(&self, tape: &mut Tape, span_vectors: &[NodeId]) -> NodeId {
        let h = self.encode(tape, span_vectors);
        let r = tape.relu(h);
        tape.affine(self.weight, Some(self.bias), &[r])
    }

    pub fn candidate_logit(&self, tape: &mut Tape, spans: &SpanTable, c: &Candidate) -> NodeId {
        let vecs: Vec<NodeId> = c
            .spans
            .iter()
            .map(|s| spans.get(s.start, s.end).expect("candidate span within max length"))
            .collect();
        self.logit(tape, &vecs)
    }

    pub fn probability(&self, tape: &mut Tape, spans: &SpanTable, c: &Candidate) -> f64 {
        let l = self.candidate_logit(tape, spans, c);
        sigmoid(tape.scalar(l))
    }
}

/// `-log p(label)` for a Bernoulli with the given logit, and its derivative
/// with respect to the logit.
pub fn bernoulli_nll(logit: f64, member: bool) -> (f64, f64) {
    let p = sigmoid(logit);
    if member {
        (crate::tensor::softplus(-logit), p - 1.0)
    } else {
        (crate::tensor::softplus(logit), p)
    }
}
