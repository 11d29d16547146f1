use std::fmt;

/// Node of the segmental hypergraph.
///
/// `Any(i)` covers every segment starting at `i` or later, `Start(i)` the
/// segments starting exactly at `i`, `Type(i, k)` those of type `k` starting
/// at `i`, `Span(i, j, k)` those of type `k` starting at `i` and covering `j`,
/// and `Sink` closes a segment. `Choice` nodes realize the nonempty-subset
/// choice of types below `Start(i)` as a chain: `Choice(i, k, any)` decides
/// types `k..` given whether some earlier type was taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Sink,
    Span { start: usize, end: usize, label: usize },
    Type { pos: usize, label: usize },
    Choice { pos: usize, label: usize, any: bool },
    Start { pos: usize },
    Any { pos: usize },
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            NodeKind::Sink => write!(f, "X"),
            NodeKind::Span { start, end, label } => write!(f, "I[{label}]({start},{end})"),
            NodeKind::Type { pos, label } => write!(f, "T[{label}]({pos})"),
            NodeKind::Choice { pos, label, any } => {
                write!(f, "G[{label}]({pos},{})", if any { "any" } else { "none" })
            }
            NodeKind::Start { pos } => write!(f, "E({pos})"),
            NodeKind::Any { pos } => write!(f, "A({pos})"),
        }
    }
}

/// Hyperedge family; the scorer keeps separate weights per family and type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeFamily {
    /// `A_i -> A_{i+1}` (or `A_{n-1} -> X`): no segment starts at `i`.
    NoStart,
    /// `A_i -> (E_i, A_{i+1})` (or `A_{n-1} -> E_{n-1}`).
    Start,
    /// include type `k` among segments starting here
    Take(usize),
    /// exclude type `k`
    Skip(usize),
    /// `T^k_i -> I^k_{i,i}`
    Open(usize),
    /// `I^k_{i,j} -> X`: a segment ends at `j`, none continues
    Close(usize),
    /// `I^k_{i,j} -> I^k_{i,j+1}`
    Extend(usize),
    /// `I^k_{i,j} -> (X, I^k_{i,j+1})`: one segment ends at `j`, a longer one
    /// with the same start continues
    CloseExtend(usize),
}

impl EdgeFamily {
    /// True for the families whose use marks a segment ending at the parent.
    pub fn closes(self) -> bool {
        matches!(self, EdgeFamily::Close(_) | EdgeFamily::CloseExtend(_))
    }
}

impl fmt::Display for EdgeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeFamily::NoStart => write!(f, "no-start"),
            EdgeFamily::Start => write!(f, "start"),
            EdgeFamily::Take(k) => write!(f, "take[{k}]"),
            EdgeFamily::Skip(k) => write!(f, "skip[{k}]"),
            EdgeFamily::Open(k) => write!(f, "open[{k}]"),
            EdgeFamily::Close(k) => write!(f, "close[{k}]"),
            EdgeFamily::Extend(k) => write!(f, "extend[{k}]"),
            EdgeFamily::CloseExtend(k) => write!(f, "close-extend[{k}]"),
        }
    }
}

/// Which encoding an edge's score is computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Anchor {
    Word(usize),
    Span(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hyperedge {
    pub parent: usize,
    pub children: Vec<usize>,
    pub family: EdgeFamily,
    pub anchor: Anchor,
}

/// Directed acyclic hypergraph whose root-to-sink derivations are in
/// bijection with sets of typed segments of length at most `max_len`.
///
/// Nodes are numbered so that every child precedes its parent; the root
/// `A_0` is the last node.
#[derive(Debug, Clone)]
pub struct SegmentalHypergraph {
    n: usize,
    num_types: usize,
    max_len: usize,
    nodes: Vec<NodeKind>,
    /// edges are grouped by parent; `edge_ranges[v]` indexes `edges`
    edges: Vec<Hyperedge>,
    edge_ranges: Vec<std::ops::Range<usize>>,
    any_idx: Vec<usize>,
    start_idx: Vec<usize>,
    type_idx: Vec<usize>,
    choice_idx: Vec<Option<usize>>,
    span_idx: Vec<Option<usize>>,
}

pub const SINK: usize = 0;

impl SegmentalHypergraph {
    pub fn build(n: usize, num_types: usize, max_len: usize) -> Self {
        assert!(n >= 1, "hypergraph needs at least one word");
        assert!(num_types >= 1, "hypergraph needs at least one type");
        assert!(max_len >= 1, "max segment length must be positive");
        let k_n = num_types;
        let mut g = SegmentalHypergraph {
            n,
            num_types,
            max_len,
            nodes: Vec::new(),
            edges: Vec::new(),
            edge_ranges: Vec::new(),
            any_idx: vec![usize::MAX; n],
            start_idx: vec![usize::MAX; n],
            type_idx: vec![usize::MAX; n * k_n],
            choice_idx: vec![None; n * k_n * 2],
            span_idx: vec![None; n * k_n * max_len],
        };
        g.add_node(NodeKind::Sink, vec![]);

        for i in (0..n).rev() {
            let last = (i + max_len - 1).min(n - 1);
            for k in 0..k_n {
                for j in (i..=last).rev() {
                    let anchor = Anchor::Span(i, j);
                    let mut edges = vec![(vec![SINK], EdgeFamily::Close(k), anchor)];
                    if j < last {
                        let next = g.span_node(i, j + 1, k).unwrap();
                        edges.push((vec![next], EdgeFamily::Extend(k), anchor));
                        edges.push((vec![SINK, next], EdgeFamily::CloseExtend(k), anchor));
                    }
                    let v = g.add_node(NodeKind::Span { start: i, end: j, label: k }, edges);
                    g.span_idx[(i * k_n + k) * max_len + (j - i)] = Some(v);
                }
                let first = g.span_node(i, i, k).unwrap();
                let v = g.add_node(
                    NodeKind::Type { pos: i, label: k },
                    vec![(vec![first], EdgeFamily::Open(k), Anchor::Word(i))],
                );
                g.type_idx[i * k_n + k] = v;
            }
            // type-subset chain, last type first
            let w = Anchor::Word(i);
            for k in (0..k_n).rev() {
                for any in [true, false] {
                    if k == 0 && any {
                        continue;
                    }
                    let t = g.type_idx[i * k_n + k];
                    let mut edges = Vec::new();
                    if k + 1 < k_n {
                        let after_skip = g.choice_idx[(i * k_n + k + 1) * 2 + any as usize].unwrap();
                        let after_take = g.choice_idx[(i * k_n + k + 1) * 2 + 1].unwrap();
                        edges.push((vec![after_skip], EdgeFamily::Skip(k), w));
                        edges.push((vec![t, after_take], EdgeFamily::Take(k), w));
                    } else {
                        if any {
                            edges.push((vec![SINK], EdgeFamily::Skip(k), w));
                        }
                        edges.push((vec![t], EdgeFamily::Take(k), w));
                    }
                    let kind = if k == 0 {
                        NodeKind::Start { pos: i }
                    } else {
                        NodeKind::Choice { pos: i, label: k, any }
                    };
                    let v = g.add_node(kind, edges);
                    g.choice_idx[(i * k_n + k) * 2 + any as usize] = Some(v);
                }
            }
            let e = g.choice_idx[(i * k_n) * 2].unwrap();
            g.start_idx[i] = e;
            let edges = if i + 1 < n {
                let next = g.any_idx[i + 1];
                vec![
                    (vec![next], EdgeFamily::NoStart, w),
                    (vec![e, next], EdgeFamily::Start, w),
                ]
            } else {
                vec![
                    (vec![SINK], EdgeFamily::NoStart, w),
                    (vec![e], EdgeFamily::Start, w),
                ]
            };
            g.any_idx[i] = g.add_node(NodeKind::Any { pos: i }, edges);
        }
        g
    }

    fn add_node(&mut self, kind: NodeKind, edges: Vec<(Vec<usize>, EdgeFamily, Anchor)>) -> usize {
        let v = self.nodes.len();
        self.nodes.push(kind);
        let from = self.edges.len();
        for (children, family, anchor) in edges {
            debug_assert!(children.iter().all(|&c| c < v));
            self.edges.push(Hyperedge {
                parent: v,
                children,
                family,
                anchor,
            });
        }
        self.edge_ranges.push(from..self.edges.len());
        v
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn num_types(&self) -> usize {
        self.num_types
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[NodeKind] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Hyperedge] {
        &self.edges
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edge ids whose parent is `v`.
    pub fn out_edges(&self, v: usize) -> std::ops::Range<usize> {
        self.edge_ranges[v].clone()
    }

    pub fn any_node(&self, i: usize) -> usize {
        self.any_idx[i]
    }

    pub fn start_node(&self, i: usize) -> usize {
        self.start_idx[i]
    }

    pub fn type_node(&self, i: usize, k: usize) -> usize {
        self.type_idx[i * self.num_types + k]
    }

    pub fn choice_node(&self, i: usize, k: usize, any: bool) -> Option<usize> {
        if k == 0 {
            return (!any).then(|| self.start_idx[i]);
        }
        self.choice_idx[(i * self.num_types + k) * 2 + any as usize]
    }

    pub fn span_node(&self, i: usize, j: usize, k: usize) -> Option<usize> {
        if j < i || j >= self.n || j - i >= self.max_len || k >= self.num_types {
            return None;
        }
        self.span_idx[(i * self.num_types + k) * self.max_len + (j - i)]
    }

    /// Edge leaving `v` with the given family.
    pub fn find_edge(&self, v: usize, family: EdgeFamily) -> Option<usize> {
        self.out_edges(v).find(|&e| self.edges[e].family == family)
    }

    /// Number of word-anchored score features: no-start, start, then
    /// take/skip/open per type.
    pub fn word_features(num_types: usize) -> usize {
        2 + 3 * num_types
    }

    /// Number of span-anchored score features: close/extend/close-extend per
    /// type.
    pub fn span_features(num_types: usize) -> usize {
        3 * num_types
    }

    /// Index of the edge's family within its anchor's feature vector.
    pub fn feature_index(&self, family: EdgeFamily) -> usize {
        let k_n = self.num_types;
        match family {
            EdgeFamily::NoStart => 0,
            EdgeFamily::Start => 1,
            EdgeFamily::Take(k) => 2 + k,
            EdgeFamily::Skip(k) => 2 + k_n + k,
            EdgeFamily::Open(k) => 2 + 2 * k_n + k,
            EdgeFamily::Close(k) => k,
            EdgeFamily::Extend(k) => k_n + k,
            EdgeFamily::CloseExtend(k) => 2 * k_n + k,
        }
    }

    /// One edge per line, children-first order:
    /// `parent -> [children] family score`.
    pub fn dump(&self, scores: Option<&[f64]>) -> String {
        let mut out = String::new();
        for (id, e) in self.edges.iter().enumerate() {
            let children: Vec<String> = e.children.iter().map(|&c| self.nodes[c].to_string()).collect();
            let score = scores.map_or(0.0, |s| s[id]);
            out.push_str(&format!(
                "{} -> [{}] {} {:.6}\n",
                self.nodes[e.parent],
                children.join(", "),
                e.family,
                score
            ));
        }
        out
    }
}
