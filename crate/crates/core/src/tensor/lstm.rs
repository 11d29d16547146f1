use rand::Rng;

use super::params::{ParamId, ParamStore};
use super::tape::{NodeId, Tape};

/// Uniform init range for LSTM and projection weights.
pub const INIT_SCALE: f64 = 0.1;

/// One unidirectional LSTM: gates `[i, f, g, o]` from `W · [x, h] + b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lstm {
    pub weight: ParamId,
    pub bias: ParamId,
    pub input: usize,
    pub hidden: usize,
}

impl Lstm {
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, input: usize, hidden: usize, rng: &mut R) -> Self {
        let weight = store.uniform(format!("{name}.weight"), 4 * hidden, input + hidden, INIT_SCALE, rng);
        let bias = store.zeros(format!("{name}.bias"), 4 * hidden, 1);
        // forget gate starts open
        for b in &mut store.get_mut(bias).data[hidden..2 * hidden] {
            *b = 1.0;
        }
        Lstm {
            weight,
            bias,
            input,
            hidden,
        }
    }

    /// One recurrence step; returns the new cell node (value `[h, c]`).
    pub fn step(&self, tape: &mut Tape, x: NodeId, prev: Option<NodeId>) -> NodeId {
        let h_prev = match prev {
            Some(p) => tape.slice(p, 0, self.hidden),
            None => tape.zeros(self.hidden),
        };
        let gates = tape.affine(self.weight, Some(self.bias), &[x, h_prev]);
        tape.lstm_cell(gates, prev)
    }

    /// Runs over `xs` in the given order, returning every cell node.
    pub fn run(&self, tape: &mut Tape, xs: impl IntoIterator<Item = NodeId>) -> Vec<NodeId> {
        let mut prev = None;
        let mut out = Vec::new();
        for x in xs {
            let cell = self.step(tape, x, prev);
            out.push(cell);
            prev = Some(cell);
        }
        out
    }

    pub fn hidden_of(&self, tape: &mut Tape, cell: NodeId) -> NodeId {
        tape.slice(cell, 0, self.hidden)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BiLstm {
    pub forward: Lstm,
    pub backward: Lstm,
}

impl BiLstm {
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, input: usize, hidden: usize, rng: &mut R) -> Self {
        BiLstm {
            forward: Lstm::new(store, &format!("{name}.fwd"), input, hidden, rng),
            backward: Lstm::new(store, &format!("{name}.bwd"), input, hidden, rng),
        }
    }

    pub fn output_dim(&self) -> usize {
        self.forward.hidden + self.backward.hidden
    }

    /// Per-position `[h_fwd_i, h_bwd_i]`.
    pub fn encode_sequence(&self, tape: &mut Tape, xs: &[NodeId]) -> Vec<NodeId> {
        assert!(!xs.is_empty(), "cannot encode an empty sequence");
        let fwd = self.forward.run(tape, xs.iter().copied());
        let mut bwd = self.backward.run(tape, xs.iter().rev().copied());
        bwd.reverse();
        fwd.into_iter()
            .zip(bwd)
            .map(|(f, b)| {
                let hf = self.forward.hidden_of(tape, f);
                let hb = self.backward.hidden_of(tape, b);
                tape.concat(&[hf, hb])
            })
            .collect()
    }

    /// Final forward state after reading `xs` left to right, concatenated with
    /// the final backward state after reading right to left.
    pub fn encode_final(&self, tape: &mut Tape, xs: &[NodeId]) -> NodeId {
        assert!(!xs.is_empty(), "cannot encode an empty sequence");
        let f = *self.forward.run(tape, xs.iter().copied()).last().unwrap();
        let b = *self.backward.run(tape, xs.iter().rev().copied()).last().unwrap();
        let hf = self.forward.hidden_of(tape, f);
        let hb = self.backward.hidden_of(tape, b);
        tape.concat(&[hf, hb])
    }
}

/// Final-state encodings of every span of at most `max_len` tokens.
///
/// Shares recurrences: one forward run per start position covers all spans
/// with that start, one backward run per end position covers all spans with
/// that end. Values equal `BiLstm::encode_final` over the same slice.
#[derive(Debug, Clone)]
pub struct SpanTable {
    n: usize,
    max_len: usize,
    nodes: Vec<Option<NodeId>>,
}

impl SpanTable {
    pub fn build(enc: &BiLstm, tape: &mut Tape, words: &[NodeId], max_len: usize) -> Self {
        assert!(max_len >= 1);
        let n = words.len();
        let mut fwd_h = vec![None; n * max_len];
        for i in 0..n {
            let last = (i + max_len).min(n);
            let cells = enc.forward.run(tape, words[i..last].iter().copied());
            for (off, cell) in cells.into_iter().enumerate() {
                fwd_h[i * max_len + off] = Some(enc.forward.hidden_of(tape, cell));
            }
        }
        let mut nodes = vec![None; n * max_len];
        for j in 0..n {
            let first = (j + 1).saturating_sub(max_len);
            let cells = enc.backward.run(tape, words[first..=j].iter().rev().copied());
            for (off, cell) in cells.into_iter().enumerate() {
                let i = j - off;
                let hb = enc.backward.hidden_of(tape, cell);
                let hf = fwd_h[i * max_len + (j - i)].expect("forward state for span");
                nodes[i * max_len + (j - i)] = Some(tape.concat(&[hf, hb]));
            }
        }
        SpanTable { n, max_len, nodes }
    }

    pub fn get(&self, start: usize, end: usize) -> Option<NodeId> {
        if start > end || end >= self.n || end - start >= self.max_len {
            return None;
        }
        self.nodes[start * self.max_len + (end - start)]
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }
}
