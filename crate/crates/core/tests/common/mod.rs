//! Brute-force reference implementations shared by the integration tests
//! and the acceptance binary. None of them reuse the dynamic programs they
//! check.

#![allow(dead_code)]

use std::collections::HashMap;

use disco_core::corpus::Span;
use disco_core::crf::TagSet;
use disco_core::hypergraph::{EdgeFamily, NodeKind, SegmentSet, SegmentalHypergraph, TypedSpan};
use disco_core::merger::Candidate;
use rand::Rng;

/// Edge scores keyed by what the edge means rather than by its id.
pub type EdgeTable = HashMap<(NodeKind, EdgeFamily), f64>;

pub fn edge_table(hg: &SegmentalHypergraph, scores: &[f64]) -> EdgeTable {
    let mut t = EdgeTable::new();
    for (e, s) in hg.edges().iter().zip(scores) {
        let prev = t.insert((hg.nodes()[e.parent], e.family), *s);
        assert!(prev.is_none(), "two edges share a meaning");
    }
    t
}

fn lookup(t: &EdgeTable, node: NodeKind, fam: EdgeFamily) -> f64 {
    *t.get(&(node, fam))
        .unwrap_or_else(|| panic!("no edge {fam} leaving {node}"))
}

/// Score of the derivation of `segs` (all starting at `i`), written out
/// from the edge rules: start or skip the position, choose the types in
/// order, then walk each type's span chain closing at every chosen end.
pub fn position_score(t: &EdgeTable, i: usize, num_types: usize, max_end: usize, segs: &[TypedSpan]) -> f64 {
    let any = NodeKind::Any { pos: i };
    if segs.is_empty() {
        return lookup(t, any, EdgeFamily::NoStart);
    }
    let mut s = lookup(t, any, EdgeFamily::Start);
    let mut taken = false;
    for k in 0..num_types {
        let node = if k == 0 {
            NodeKind::Start { pos: i }
        } else {
            NodeKind::Choice {
                pos: i,
                label: k,
                any: taken,
            }
        };
        let ends: Vec<usize> = segs.iter().filter(|x| x.label == k).map(|x| x.span.end).collect();
        if ends.is_empty() {
            s += lookup(t, node, EdgeFamily::Skip(k));
            continue;
        }
        taken = true;
        s += lookup(t, node, EdgeFamily::Take(k));
        s += lookup(t, NodeKind::Type { pos: i, label: k }, EdgeFamily::Open(k));
        let last = *ends.iter().max().unwrap();
        assert!(last <= max_end);
        for j in i..=last {
            let node = NodeKind::Span { start: i, end: j, label: k };
            let fam = if j == last {
                EdgeFamily::Close(k)
            } else if ends.contains(&j) {
                EdgeFamily::CloseExtend(k)
            } else {
                EdgeFamily::Extend(k)
            };
            s += lookup(t, node, fam);
        }
    }
    s
}

/// Every typed segment of a sentence, grouped by start position.
pub fn all_segments(n: usize, num_types: usize, max_len: usize) -> Vec<Vec<TypedSpan>> {
    (0..n)
        .map(|i| {
            let mut v = Vec::new();
            for k in 0..num_types {
                for j in i..(i + max_len).min(n) {
                    v.push(TypedSpan::new(k, i, j));
                }
            }
            v
        })
        .collect()
}

pub struct BruteForce {
    pub log_z: f64,
    pub max: f64,
    pub argmax: SegmentSet,
    pub subsets: u64,
}

/// Log-sum and max of the derivation score over every subset of segments.
/// A subset's score is the sum of its per-position scores, so those are
/// tabulated once per position and the global loop only adds them up.
pub fn brute_force(hg: &SegmentalHypergraph, scores: &[f64]) -> BruteForce {
    let t = edge_table(hg, scores);
    let (n, kn, c) = (hg.len(), hg.num_types(), hg.max_len());
    let groups = all_segments(n, kn, c);
    let mut tables: Vec<Vec<f64>> = Vec::new();
    for (i, g) in groups.iter().enumerate() {
        let mut tab = Vec::with_capacity(1 << g.len());
        for m in 0..(1usize << g.len()) {
            let chosen: Vec<TypedSpan> = (0..g.len()).filter(|b| m >> b & 1 == 1).map(|b| g[b]).collect();
            tab.push(position_score(&t, i, kn, n - 1, &chosen));
        }
        tables.push(tab);
    }
    let widths: Vec<usize> = groups.iter().map(|g| g.len()).collect();
    let total: usize = widths.iter().sum();
    assert!(total <= 30, "too many segments for exhaustive enumeration");
    let score_of = |mask: u64| -> f64 {
        let mut s = 0.0;
        let mut off = 0;
        for (i, &w) in widths.iter().enumerate() {
            s += tables[i][((mask >> off) & ((1u64 << w) - 1)) as usize];
            off += w;
        }
        s
    };
    let count = 1u64 << total;
    let mut max = f64::NEG_INFINITY;
    let mut arg = 0u64;
    for m in 0..count {
        let s = score_of(m);
        if s > max {
            max = s;
            arg = m;
        }
    }
    let mut sum = 0.0;
    for m in 0..count {
        sum += (score_of(m) - max).exp();
    }
    let flat: Vec<TypedSpan> = groups.into_iter().flatten().collect();
    let argmax = (0..total).filter(|b| arg >> b & 1 == 1).map(|b| flat[b]).collect();
    BruteForce {
        log_z: max + sum.ln(),
        max,
        argmax,
        subsets: count,
    }
}

/// Score of the derivation of an arbitrary segment set, from the rules.
pub fn set_score(hg: &SegmentalHypergraph, scores: &[f64], set: &SegmentSet) -> f64 {
    let t = edge_table(hg, scores);
    (0..hg.len())
        .map(|i| {
            let here: Vec<TypedSpan> = set.iter().filter(|s| s.span.start == i).copied().collect();
            position_score(&t, i, hg.num_types(), hg.len() - 1, &here)
        })
        .sum()
}

/// All derivations below node `v`, as edge lists.
pub fn derivations(hg: &SegmentalHypergraph, v: usize) -> Vec<Vec<usize>> {
    if hg.nodes()[v] == NodeKind::Sink {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for e in hg.out_edges(v) {
        let mut partial: Vec<Vec<usize>> = vec![vec![e]];
        for &c in &hg.edges()[e].children {
            let below = derivations(hg, c);
            partial = partial
                .iter()
                .flat_map(|p| {
                    below.iter().map(move |b| {
                        let mut x = p.clone();
                        x.extend(b);
                        x
                    })
                })
                .collect();
        }
        out.extend(partial);
    }
    out
}

pub fn random_scores<R: Rng>(rng: &mut R, len: usize, scale: f64) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-scale..scale)).collect()
}

pub fn random_segment_set<R: Rng>(rng: &mut R, n: usize, num_types: usize, max_len: usize, p: f64) -> SegmentSet {
    all_segments(n, num_types, max_len)
        .into_iter()
        .flatten()
        .filter(|_| rng.gen::<f64>() < p)
        .collect()
}

/// Sum and max of the chain score over every tag sequence that respects the
/// mask, by plain enumeration.
pub fn crf_brute_force(
    ts: TagSet,
    em: &[Vec<f64>],
    start: &[f64],
    trans: &[Vec<f64>],
) -> (f64, f64, Vec<usize>) {
    let t = ts.len();
    let n = em.len();
    let mut seq = vec![0usize; n];
    let mut max = f64::NEG_INFINITY;
    let mut arg = Vec::new();
    let mut scores = Vec::new();
    loop {
        let ok = ts.can_start(seq[0]) && seq.windows(2).all(|w| ts.allowed(w[0], w[1]));
        if ok {
            let mut s = start[seq[0]] + em[0][seq[0]];
            for i in 1..n {
                s += trans[seq[i - 1]][seq[i]] + em[i][seq[i]];
            }
            if s > max {
                max = s;
                arg = seq.clone();
            }
            scores.push(s);
        }
        // odometer, last position fastest
        let mut i = n;
        loop {
            if i == 0 {
                let lz = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
                return (lz, max, arg);
            }
            i -= 1;
            seq[i] += 1;
            if seq[i] < t {
                break;
            }
            seq[i] = 0;
        }
    }
}

/// Σ over all 2^m membership patterns of the product of per-candidate
/// probabilities, and the most probable pattern.
pub fn membership_patterns(probs: &[f64]) -> (f64, Vec<bool>) {
    let m = probs.len();
    let mut total = 0.0;
    let mut best = (f64::NEG_INFINITY, 0usize);
    for mask in 0..(1usize << m) {
        let p: f64 = (0..m)
            .map(|i| if mask >> i & 1 == 1 { probs[i] } else { 1.0 - probs[i] })
            .product();
        total += p;
        if p > best.0 {
            best = (p, mask);
        }
    }
    (total, (0..m).map(|i| best.1 >> i & 1 == 1).collect())
}

pub fn cand(spans: &[(usize, usize)]) -> Candidate {
    Candidate::new(0, spans.iter().map(|&(a, b)| Span::new(a, b)).collect())
}

/// Largest relative error between the analytic gradient of the sentence
/// objective and central differences, per parameter tensor. Checks the
/// entries with the largest analytic gradient plus a few random ones.
pub fn gradient_check<R: Rng>(
    model: &mut disco_core::pipeline::JointModel,
    s: &disco_core::corpus::AnnotatedSentence,
    rng: &mut R,
) -> Vec<(String, f64)> {
    let analytic = model.sentence_loss(s).unwrap().grads;
    let ids: Vec<_> = model.store.ids().collect();
    // the loss is O(10) while some merge gradients are O(1e-5), so a smaller
    // step loses the difference to cancellation
    let h = 1e-4;
    let mut out = Vec::new();
    for id in ids {
        let g = analytic.get(id).to_vec();
        let mut order: Vec<usize> = (0..g.len()).collect();
        order.sort_by(|&a, &b| g[b].abs().partial_cmp(&g[a].abs()).unwrap());
        let mut picks: Vec<usize> = order.into_iter().take(4).collect();
        for _ in 0..2 {
            picks.push(rng.gen_range(0..g.len()));
        }
        let mut worst: f64 = 0.0;
        for k in picks {
            let orig = model.store.get(id).data[k];
            model.store.get_mut(id).data[k] = orig + h;
            let up = model.sentence_loss(s).unwrap().total();
            model.store.get_mut(id).data[k] = orig - h;
            let down = model.sentence_loss(s).unwrap().total();
            model.store.get_mut(id).data[k] = orig;
            let num = (up - down) / (2.0 * h);
            // below 1e-6 the central difference is dominated by rounding
            let err = (g[k] - num).abs() / g[k].abs().max(num.abs()).max(1e-6);
            worst = worst.max(err);
        }
        out.push((model.store.get(id).name.clone(), worst));
    }
    out
}

/// Redraws every parameter uniformly from `[-scale, scale]`. The default
/// initialization leaves deep activations so close to zero that a finite
/// difference step can straddle a ReLU kink.
pub fn randomize<R: Rng>(model: &mut disco_core::pipeline::JointModel, rng: &mut R, scale: f64) {
    let ids: Vec<_> = model.store.ids().collect();
    for id in ids {
        for x in &mut model.store.get_mut(id).data {
            *x = rng.gen_range(-scale..scale);
        }
    }
}

/// A random 4-token sentence over `words` with one or two entities of the
/// given types.
pub fn random_small_sentence<R: Rng>(rng: &mut R, words: &[&str], types: &[&str]) -> disco_core::corpus::AnnotatedSentence {
    use disco_core::corpus::{AnnotatedSentence, Entity};
    let tokens: Vec<String> = (0..4).map(|_| words[rng.gen_range(0..words.len())].to_string()).collect();
    let mut ents = vec![];
    let ty = types[rng.gen_range(0..types.len())];
    if rng.gen_bool(0.5) {
        ents.push(Entity::new(ty, vec![Span::new(0, 0), Span::new(2, 3)]));
        ents.push(Entity::new(ty, vec![Span::new(0, 1)]));
    } else {
        let a = rng.gen_range(0..4);
        ents.push(Entity::new(ty, vec![Span::new(a, a)]));
        if a + 2 < 4 {
            ents.push(Entity::new(types[0], vec![Span::new(a, a), Span::new(a + 2, 3)]));
        }
    }
    AnnotatedSentence::new(tokens, ents)
}

/// Small configuration for fast tests.
pub fn tiny_config() -> disco_core::pipeline::TrainConfig {
    let mut c = disco_core::pipeline::TrainConfig::synthetic();
    c.emb_dim = 4;
    c.hidden_word = 3;
    c.hidden_span = 3;
    c.hidden_entity = 2;
    c.max_segment_len = 3;
    c
}
