use std::collections::BTreeSet;

use crate::corpus::Span;
use crate::tensor::{log_add_exp, log_sum_exp};

use super::graph::{EdgeFamily, SegmentalHypergraph, SINK};
use super::HypergraphError;

/// A segment with its type given as an index into the type inventory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypedSpan {
    pub label: usize,
    pub span: Span,
}

impl TypedSpan {
    pub fn new(label: usize, start: usize, end: usize) -> Self {
        TypedSpan {
            label,
            span: Span::new(start, end),
        }
    }
}

pub type SegmentSet = BTreeSet<TypedSpan>;

/// Result of MAP decoding.
#[derive(Debug, Clone, PartialEq)]
pub struct MapDecode {
    pub segments: SegmentSet,
    pub score: f64,
    /// Edges of the winning derivation.
    pub edges: Vec<usize>,
}

impl SegmentalHypergraph {
    fn check_scores(&self, scores: &[f64]) {
        assert_eq!(scores.len(), self.num_edges(), "one score per hyperedge expected");
    }

    /// Log-space inside values for every node; the sink has inside 0.
    pub fn inside(&self, scores: &[f64]) -> Vec<f64> {
        self.check_scores(scores);
        let mut inside = vec![f64::NEG_INFINITY; self.num_nodes()];
        inside[SINK] = 0.0;
        for v in 1..self.num_nodes() {
            let edges = self.out_edges(v);
            inside[v] = log_sum_exp(edges.map(|e| {
                let edge = &self.edges()[e];
                scores[e] + edge.children.iter().map(|&c| inside[c]).sum::<f64>()
            }));
        }
        inside
    }

    /// Log-partition function: log of the sum over all derivations of the
    /// exponentiated sum of their edge scores.
    pub fn inside_log_z(&self, scores: &[f64]) -> f64 {
        self.inside(scores)[self.root()]
    }

    /// Log-partition function and the posterior probability of every edge
    /// (the gradient of the log-partition function w.r.t. edge scores).
    pub fn edge_marginals(&self, scores: &[f64]) -> (f64, Vec<f64>) {
        let inside = self.inside(scores);
        let root = self.root();
        let log_z = inside[root];
        let mut outside = vec![f64::NEG_INFINITY; self.num_nodes()];
        outside[root] = 0.0;
        let mut marg = vec![0.0; self.num_edges()];
        for v in (1..self.num_nodes()).rev() {
            if outside[v] == f64::NEG_INFINITY {
                continue;
            }
            for e in self.out_edges(v) {
                let edge = &self.edges()[e];
                let w = outside[v] + scores[e] + edge.children.iter().map(|&c| inside[c]).sum::<f64>();
                marg[e] = (w - log_z).exp();
                for &c in &edge.children {
                    outside[c] = log_add_exp(outside[c], w - inside[c]);
                }
            }
        }
        (log_z, marg)
    }

    /// Highest-scoring derivation. Ties prefer fewer edges, then the lower
    /// edge id at each node.
    pub fn map_decode(&self, scores: &[f64]) -> MapDecode {
        self.check_scores(scores);
        let nn = self.num_nodes();
        let mut best = vec![f64::NEG_INFINITY; nn];
        let mut count = vec![0usize; nn];
        let mut choice = vec![usize::MAX; nn];
        best[SINK] = 0.0;
        for v in 1..nn {
            for e in self.out_edges(v) {
                let edge = &self.edges()[e];
                let s = scores[e] + edge.children.iter().map(|&c| best[c]).sum::<f64>();
                let cnt = 1 + edge.children.iter().map(|&c| count[c]).sum::<usize>();
                let better = s > best[v] || (s == best[v] && cnt < count[v]);
                if choice[v] == usize::MAX || better {
                    best[v] = s;
                    count[v] = cnt;
                    choice[v] = e;
                }
            }
        }
        let mut edges = Vec::new();
        let mut stack = vec![self.root()];
        while let Some(v) = stack.pop() {
            if v == SINK {
                continue;
            }
            let e = choice[v];
            edges.push(e);
            stack.extend(self.edges()[e].children.iter().copied());
        }
        edges.sort_unstable();
        MapDecode {
            segments: self.read_hyperpath(&edges),
            score: best[self.root()],
            edges,
        }
    }

    /// Segments encoded by a derivation given as its edge ids.
    pub fn read_hyperpath(&self, edges: &[usize]) -> SegmentSet {
        edges
            .iter()
            .filter_map(|&e| {
                let edge = &self.edges()[e];
                match edge.family {
                    EdgeFamily::Close(k) | EdgeFamily::CloseExtend(k) => match edge.anchor {
                        super::Anchor::Span(i, j) => Some(TypedSpan::new(k, i, j)),
                        super::Anchor::Word(_) => unreachable!("closing edges are span-anchored"),
                    },
                    _ => None,
                }
            })
            .collect()
    }

    /// The unique derivation whose segment reading is `segments`, as sorted
    /// edge ids.
    pub fn segments_to_hyperpath(&self, segments: &SegmentSet) -> Result<Vec<usize>, HypergraphError> {
        for s in segments {
            if s.label >= self.num_types() {
                return Err(HypergraphError::Encoding(format!(
                    "segment {} has type {} but only {} types exist",
                    s.span,
                    s.label,
                    self.num_types()
                )));
            }
            if s.span.end >= self.len() || s.span.start > s.span.end {
                return Err(HypergraphError::Encoding(format!(
                    "segment {} outside sentence of {} words",
                    s.span,
                    self.len()
                )));
            }
            if s.span.len() > self.max_len() {
                return Err(HypergraphError::Encoding(format!(
                    "segment {} longer than the maximal length {}",
                    s.span,
                    self.max_len()
                )));
            }
        }
        let edge = |v: usize, f: EdgeFamily| self.find_edge(v, f).expect("edge required by schema");
        let k_n = self.num_types();
        let mut path = Vec::new();
        for i in 0..self.len() {
            // ends[k] = end positions of type-k segments starting at i
            let mut ends: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); k_n];
            for s in segments.iter().filter(|s| s.span.start == i) {
                ends[s.label].insert(s.span.end);
            }
            let a = self.any_node(i);
            if ends.iter().all(|e| e.is_empty()) {
                path.push(edge(a, EdgeFamily::NoStart));
                continue;
            }
            path.push(edge(a, EdgeFamily::Start));
            let mut any = false;
            for (k, ends_k) in ends.iter().enumerate() {
                let g = self.choice_node(i, k, any).expect("choice node");
                if ends_k.is_empty() {
                    path.push(edge(g, EdgeFamily::Skip(k)));
                    continue;
                }
                path.push(edge(g, EdgeFamily::Take(k)));
                any = true;
                path.push(edge(self.type_node(i, k), EdgeFamily::Open(k)));
                let last = *ends_k.iter().next_back().unwrap();
                for j in i..=last {
                    let v = self.span_node(i, j, k).expect("span node within bounds");
                    let fam = if j == last {
                        EdgeFamily::Close(k)
                    } else if ends_k.contains(&j) {
                        EdgeFamily::CloseExtend(k)
                    } else {
                        EdgeFamily::Extend(k)
                    };
                    path.push(edge(v, fam));
                }
            }
        }
        path.sort_unstable();
        Ok(path)
    }

    pub fn path_score(&self, edges: &[usize], scores: &[f64]) -> f64 {
        edges.iter().map(|&e| scores[e]).sum()
    }

    /// `-log p(gold | x)` under the log-linear model over derivations.
    pub fn nll_segments(&self, gold: &SegmentSet, scores: &[f64]) -> Result<f64, HypergraphError> {
        let path = self.segments_to_hyperpath(gold)?;
        Ok(self.inside_log_z(scores) - self.path_score(&path, scores))
    }
}
