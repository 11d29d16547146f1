use rand::Rng;

use crate::tensor::{NodeId, ParamId, ParamStore, SpanTable, Tape, INIT_SCALE};

use super::graph::{Anchor, SegmentalHypergraph};

/// Linear edge scorer.
///
/// Edges anchored at word `i` (leaving `A_i`, `E_i`, the type chain and
/// `T^k_i`) read `h^w_i`; edges leaving `I^k_{i,j}` read `[h^s_{i:j}, h^w_j]`.
/// Every family and type has its own weight row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeScorer {
    pub word_weight: ParamId,
    pub word_bias: ParamId,
    pub span_weight: ParamId,
    pub span_bias: ParamId,
}

/// Edge scores plus where each one lives on the tape.
#[derive(Debug, Clone)]
pub struct ScoredEdges {
    pub values: Vec<f64>,
    sources: Vec<(NodeId, usize)>,
}

impl EdgeScorer {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        num_types: usize,
        word_dim: usize,
        span_dim: usize,
        rng: &mut R,
    ) -> Self {
        let wf = SegmentalHypergraph::word_features(num_types);
        let sf = SegmentalHypergraph::span_features(num_types);
        EdgeScorer {
            word_weight: store.uniform(format!("{name}.word.weight"), wf, word_dim, INIT_SCALE, rng),
            word_bias: store.zeros(format!("{name}.word.bias"), wf, 1),
            span_weight: store.uniform(format!("{name}.span.weight"), sf, span_dim + word_dim, INIT_SCALE, rng),
            span_bias: store.zeros(format!("{name}.span.bias"), sf, 1),
        }
    }

    /// Scores every hyperedge from word encodings `words` and the span table.
    pub fn score(&self, tape: &mut Tape, hg: &SegmentalHypergraph, words: &[NodeId], spans: &SpanTable) -> ScoredEdges {
        assert_eq!(words.len(), hg.len());
        let n = hg.len();
        let word_nodes: Vec<NodeId> = words
            .iter()
            .map(|&w| tape.affine(self.word_weight, Some(self.word_bias), &[w]))
            .collect();
        let mut span_nodes = vec![None; n * hg.max_len()];
        let mut sources = Vec::with_capacity(hg.num_edges());
        let mut values = Vec::with_capacity(hg.num_edges());
        for e in hg.edges() {
            let idx = hg.feature_index(e.family);
            let node = match e.anchor {
                Anchor::Word(i) => word_nodes[i],
                Anchor::Span(i, j) => *span_nodes[i * hg.max_len() + (j - i)].get_or_insert_with(|| {
                    let hs = spans.get(i, j).expect("span encoding within max length");
                    tape.affine(self.span_weight, Some(self.span_bias), &[hs, words[j]])
                }),
            };
            values.push(tape.value(node)[idx]);
            sources.push((node, idx));
        }
        ScoredEdges { values, sources }
    }
}

impl ScoredEdges {
    /// Converts per-edge adjoints into tape seeds.
    pub fn seeds(&self, tape: &Tape, edge_grads: &[f64]) -> Vec<(NodeId, Vec<f64>)> {
        assert_eq!(edge_grads.len(), self.sources.len());
        let mut by_node: std::collections::BTreeMap<NodeId, Vec<f64>> = std::collections::BTreeMap::new();
        for (&(node, idx), &g) in self.sources.iter().zip(edge_grads) {
            if g == 0.0 {
                continue;
            }
            let buf = by_node
                .entry(node)
                .or_insert_with(|| vec![0.0; tape.value(node).len()]);
            buf[idx] += g;
        }
        by_node.into_iter().collect()
    }
}
