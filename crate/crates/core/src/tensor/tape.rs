//! Vector-valued reverse-mode tape.
//!
//! Every node holds a dense `Vec<f64>`; scalars are length-1 vectors. Nodes
//! are appended in evaluation order, so the node index is a topological
//! order and the backward pass is a single reverse sweep.

use super::params::{Gradients, ParamId, ParamStore};
use super::sigmoid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

#[derive(Debug, Clone)]
enum Op {
    Input,
    Param(ParamId),
    Embed { table: ParamId, row: usize },
    /// `W · concat(inputs) + b`
    Affine {
        weight: ParamId,
        bias: Option<ParamId>,
        inputs: Vec<NodeId>,
    },
    /// LSTM cell update from gate pre-activations `[i, f, g, o]`; value is
    /// `[h, c]`.
    LstmCell { gates: NodeId, prev: Option<NodeId> },
    Add(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Sigmoid(NodeId),
    Tanh(NodeId),
    Relu(NodeId),
    Slice { src: NodeId, offset: usize },
    Concat(Vec<NodeId>),
    /// elementwise product with a constant vector
    Mask { src: NodeId, mask: Vec<f64> },
    Dot(NodeId, NodeId),
    Sum(NodeId),
}

#[derive(Debug, Clone)]
struct Node {
    value: Vec<f64>,
    op: Op,
}

pub struct Tape<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Tape {
            params,
            nodes: Vec::new(),
        }
    }

    pub fn params(&self) -> &'p ParamStore {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, n: NodeId) -> &[f64] {
        &self.nodes[n.0].value
    }

    pub fn scalar(&self, n: NodeId) -> f64 {
        let v = self.value(n);
        debug_assert_eq!(v.len(), 1);
        v[0]
    }

    fn push(&mut self, value: Vec<f64>, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        NodeId(self.nodes.len() - 1)
    }

    pub fn input(&mut self, value: Vec<f64>) -> NodeId {
        self.push(value, Op::Input)
    }

    pub fn zeros(&mut self, len: usize) -> NodeId {
        self.input(vec![0.0; len])
    }

    pub fn param(&mut self, id: ParamId) -> NodeId {
        let v = self.params.get(id).data.clone();
        self.push(v, Op::Param(id))
    }

    pub fn embed(&mut self, table: ParamId, row: usize) -> NodeId {
        let v = self.params.get(table).row(row).to_vec();
        self.push(v, Op::Embed { table, row })
    }

    pub fn affine(&mut self, weight: ParamId, bias: Option<ParamId>, inputs: &[NodeId]) -> NodeId {
        let w = self.params.get(weight);
        let cols: usize = inputs.iter().map(|&i| self.value(i).len()).sum();
        assert_eq!(cols, w.cols, "affine {}: input width {cols} != {}", w.name, w.cols);
        let mut out = match bias {
            Some(b) => {
                let b = self.params.get(b);
                assert_eq!(b.data.len(), w.rows, "bias {} size mismatch", b.name);
                b.data.clone()
            }
            None => vec![0.0; w.rows],
        };
        for (r, o) in out.iter_mut().enumerate() {
            let row = w.row(r);
            let mut off = 0;
            let mut acc = 0.0;
            for &inp in inputs {
                let x = &self.nodes[inp.0].value;
                acc += row[off..off + x.len()]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
                off += x.len();
            }
            *o += acc;
        }
        self.push(
            out,
            Op::Affine {
                weight,
                bias,
                inputs: inputs.to_vec(),
            },
        )
    }

    /// `prev` is the previous cell node (value `[h, c]`), `None` for a zero
    /// initial state.
    pub fn lstm_cell(&mut self, gates: NodeId, prev: Option<NodeId>) -> NodeId {
        let z = self.value(gates);
        assert_eq!(z.len() % 4, 0);
        let h = z.len() / 4;
        let mut out = vec![0.0; 2 * h];
        for k in 0..h {
            let i = sigmoid(z[k]);
            let f = sigmoid(z[h + k]);
            let g = z[2 * h + k].tanh();
            let o = sigmoid(z[3 * h + k]);
            let c_prev = prev.map_or(0.0, |p| self.nodes[p.0].value[h + k]);
            let c = f * c_prev + i * g;
            out[h + k] = c;
            out[k] = o * c.tanh();
        }
        self.push(out, Op::LstmCell { gates, prev })
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = zip_map(self.value(a), self.value(b), |x, y| x + y);
        self.push(v, Op::Add(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = zip_map(self.value(a), self.value(b), |x, y| x * y);
        self.push(v, Op::Mul(a, b))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).iter().map(|&x| sigmoid(x)).collect();
        self.push(v, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).iter().map(|x| x.tanh()).collect();
        self.push(v, Op::Tanh(a))
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).iter().map(|&x| super::relu(x)).collect();
        self.push(v, Op::Relu(a))
    }

    pub fn slice(&mut self, src: NodeId, offset: usize, len: usize) -> NodeId {
        let v = self.value(src)[offset..offset + len].to_vec();
        self.push(v, Op::Slice { src, offset })
    }

    pub fn concat(&mut self, parts: &[NodeId]) -> NodeId {
        let mut v = Vec::new();
        for &p in parts {
            v.extend_from_slice(self.value(p));
        }
        self.push(v, Op::Concat(parts.to_vec()))
    }

    pub fn mask(&mut self, src: NodeId, mask: Vec<f64>) -> NodeId {
        let v = zip_map(self.value(src), &mask, |x, m| x * m);
        self.push(v, Op::Mask { src, mask })
    }

    pub fn dot(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (x, y) = (self.value(a), self.value(b));
        assert_eq!(x.len(), y.len());
        let v = x.iter().zip(y).map(|(p, q)| p * q).sum();
        self.push(vec![v], Op::Dot(a, b))
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).iter().sum();
        self.push(vec![v], Op::Sum(a))
    }

    /// Back-propagates from a scalar node with seed 1.
    pub fn backward_scalar(&self, out: NodeId) -> Gradients {
        self.backward(&[(out, vec![1.0])])
    }

    /// Back-propagates the given output adjoints. Seeds for the same node add.
    pub fn backward(&self, seeds: &[(NodeId, Vec<f64>)]) -> Gradients {
        let mut grads = self.params.zero_grads();
        let mut adj: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        for (n, g) in seeds {
            assert_eq!(g.len(), self.value(*n).len(), "seed size mismatch");
            accumulate(&mut adj[n.0], g);
        }
        let top = seeds.iter().map(|(n, _)| n.0).max().map_or(0, |m| m + 1);
        for idx in (0..top).rev() {
            let Some(g) = adj[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Input => {}
                Op::Param(p) => {
                    for (d, x) in grads.get_mut(*p).iter_mut().zip(&g) {
                        *d += x;
                    }
                }
                Op::Embed { table, row } => {
                    let cols = self.params.get(*table).cols;
                    let buf = &mut grads.get_mut(*table)[row * cols..(row + 1) * cols];
                    for (d, x) in buf.iter_mut().zip(&g) {
                        *d += x;
                    }
                }
                Op::Affine {
                    weight,
                    bias,
                    inputs,
                } => {
                    let w = self.params.get(*weight);
                    if let Some(b) = bias {
                        for (d, x) in grads.get_mut(*b).iter_mut().zip(&g) {
                            *d += x;
                        }
                    }
                    let mut off = 0;
                    for &inp in inputs {
                        let x = &self.nodes[inp.0].value;
                        let dw = grads.get_mut(*weight);
                        let mut dx = vec![0.0; x.len()];
                        for (r, &gr) in g.iter().enumerate() {
                            if gr == 0.0 {
                                continue;
                            }
                            let row = &w.data[r * w.cols + off..r * w.cols + off + x.len()];
                            let drow = &mut dw[r * w.cols + off..r * w.cols + off + x.len()];
                            for c in 0..x.len() {
                                drow[c] += gr * x[c];
                                dx[c] += gr * row[c];
                            }
                        }
                        accumulate(&mut adj[inp.0], &dx);
                        off += x.len();
                    }
                }
                Op::LstmCell { gates, prev } => {
                    let z = &self.nodes[gates.0].value;
                    let h = z.len() / 4;
                    let mut dz = vec![0.0; 4 * h];
                    let mut dprev = vec![0.0; 2 * h];
                    for k in 0..h {
                        let i = sigmoid(z[k]);
                        let f = sigmoid(z[h + k]);
                        let gg = z[2 * h + k].tanh();
                        let o = sigmoid(z[3 * h + k]);
                        let c_prev = prev.map_or(0.0, |p| self.nodes[p.0].value[h + k]);
                        let c = node.value[h + k];
                        let tc = c.tanh();
                        let dh = g[k];
                        let dc = g[h + k] + dh * o * (1.0 - tc * tc);
                        dz[k] = dc * gg * i * (1.0 - i);
                        dz[h + k] = dc * c_prev * f * (1.0 - f);
                        dz[2 * h + k] = dc * i * (1.0 - gg * gg);
                        dz[3 * h + k] = dh * tc * o * (1.0 - o);
                        dprev[h + k] = dc * f;
                    }
                    accumulate(&mut adj[gates.0], &dz);
                    if let Some(p) = prev {
                        accumulate(&mut adj[p.0], &dprev);
                    }
                }
                Op::Add(a, b) => {
                    accumulate(&mut adj[a.0], &g);
                    accumulate(&mut adj[b.0], &g);
                }
                Op::Mul(a, b) => {
                    let da = zip_map(&g, &self.nodes[b.0].value, |x, y| x * y);
                    let db = zip_map(&g, &self.nodes[a.0].value, |x, y| x * y);
                    accumulate(&mut adj[a.0], &da);
                    accumulate(&mut adj[b.0], &db);
                }
                Op::Sigmoid(a) => {
                    let d = zip_map(&g, &node.value, |x, s| x * s * (1.0 - s));
                    accumulate(&mut adj[a.0], &d);
                }
                Op::Tanh(a) => {
                    let d = zip_map(&g, &node.value, |x, t| x * (1.0 - t * t));
                    accumulate(&mut adj[a.0], &d);
                }
                Op::Relu(a) => {
                    let d = zip_map(&g, &self.nodes[a.0].value, |x, v| if v > 0.0 { x } else { 0.0 });
                    accumulate(&mut adj[a.0], &d);
                }
                Op::Slice { src, offset } => {
                    let slot = adj[src.0].get_or_insert_with(|| vec![0.0; self.nodes[src.0].value.len()]);
                    for (d, x) in slot[*offset..offset + g.len()].iter_mut().zip(&g) {
                        *d += x;
                    }
                }
                Op::Concat(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let len = self.nodes[p.0].value.len();
                        accumulate(&mut adj[p.0], &g[off..off + len]);
                        off += len;
                    }
                }
                Op::Mask { src, mask } => {
                    let d = zip_map(&g, mask, |x, m| x * m);
                    accumulate(&mut adj[src.0], &d);
                }
                Op::Dot(a, b) => {
                    let s = g[0];
                    let da: Vec<f64> = self.nodes[b.0].value.iter().map(|y| s * y).collect();
                    let db: Vec<f64> = self.nodes[a.0].value.iter().map(|x| s * x).collect();
                    accumulate(&mut adj[a.0], &da);
                    accumulate(&mut adj[b.0], &db);
                }
                Op::Sum(a) => {
                    let d = vec![g[0]; self.nodes[a.0].value.len()];
                    accumulate(&mut adj[a.0], &d);
                }
            }
        }
        grads
    }
}

fn zip_map(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    assert_eq!(a.len(), b.len(), "elementwise op on mismatched lengths");
    a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
}

fn accumulate(slot: &mut Option<Vec<f64>>, g: &[f64]) {
    match slot {
        Some(v) => {
            for (d, x) in v.iter_mut().zip(g) {
                *d += x;
            }
        }
        None => *slot = Some(g.to_vec()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Param;

    fn store_with(data: &[(&str, usize, usize, Vec<f64>)]) -> (ParamStore, Vec<ParamId>) {
        let mut s = ParamStore::new();
        let ids = data
            .iter()
            .map(|(n, r, c, d)| {
                s.push(Param {
                    name: n.to_string(),
                    rows: *r,
                    cols: *c,
                    data: d.clone(),
                })
            })
            .collect();
        (s, ids)
    }

    #[test]
    fn affine_scalar_gradient_is_input() {
        let (store, ids) = store_with(&[("w", 1, 3, vec![0.5, -1.0, 2.0])]);
        let mut t = Tape::new(&store);
        let x = t.input(vec![1.0, 2.0, 3.0]);
        let y = t.affine(ids[0], None, &[x]);
        assert!((t.scalar(y) - 4.5).abs() < 1e-12);
        let g = t.backward_scalar(y);
        assert_eq!(g.get(ids[0]), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn zero_seed_gives_zero_gradients() {
        let (store, ids) = store_with(&[("w", 2, 2, vec![1.0, 2.0, 3.0, 4.0])]);
        let mut t = Tape::new(&store);
        let x = t.input(vec![1.0, 1.0]);
        let y = t.affine(ids[0], None, &[x]);
        let s = t.sum(y);
        let g = t.backward(&[(s, vec![0.0])]);
        assert!(g.is_zero(ids[0]));
    }

    #[test]
    fn embedding_gradient_counts_rows() {
        let (store, ids) = store_with(&[("emb", 3, 2, vec![1.0, 0.0, 0.0, 1.0, 0.5, 0.5])]);
        let mut t = Tape::new(&store);
        let rows = [0usize, 2, 0];
        let embedded: Vec<NodeId> = rows.iter().map(|&r| t.embed(ids[0], r)).collect();
        assert_eq!(t.value(embedded[0]), &[1.0, 0.0]);
        let cat = t.concat(&embedded);
        let s = t.sum(cat);
        let g = t.backward_scalar(s);
        assert_eq!(g.get(ids[0]), &[2.0, 2.0, 0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn elementwise_ops_match_finite_differences() {
        let (store, ids) = store_with(&[
            ("a", 3, 1, vec![0.3, -0.7, 1.1]),
            ("b", 3, 1, vec![-0.2, 0.4, 0.9]),
        ]);
        let f = |s: &ParamStore| -> (f64, Option<Gradients>) {
            let mut t = Tape::new(s);
            let a = t.param(ids[0]);
            let b = t.param(ids[1]);
            let m = t.mul(a, b);
            let sg = t.sigmoid(m);
            let th = t.tanh(a);
            let r = t.relu(b);
            let ad = t.add(sg, th);
            let sl = t.slice(ad, 1, 2);
            let sl2 = t.slice(r, 0, 2);
            let mk = t.mask(sl2, vec![2.0, 0.5]);
            let d = t.dot(sl, mk);
            let out = t.sum(d);
            (t.scalar(out), Some(t.backward_scalar(out)))
        };
        let (_, g) = f(&store);
        let g = g.unwrap();
        for &id in &ids {
            for k in 0..3 {
                let mut p = store.clone();
                p.get_mut(id).data[k] += 1e-6;
                let mut m = store.clone();
                m.get_mut(id).data[k] -= 1e-6;
                let fd = (f(&p).0 - f(&m).0) / 2e-6;
                assert!((fd - g.get(id)[k]).abs() < 1e-7, "{id:?}[{k}]: {fd} vs {}", g.get(id)[k]);
            }
        }
    }
}
