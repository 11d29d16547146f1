//! Reading entity sets back from seven-tag sequences.

use std::collections::BTreeSet;
use std::str::FromStr;

use crate::corpus::Span;
use crate::merger::Candidate;

use super::tags::{Role, Tag};

/// How an ambiguous tag sequence is turned into entities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Heuristic {
    /// A small set of entities that uses every head and body segment.
    Enough,
    /// Every entity the segments could form.
    All,
}

impl FromStr for Heuristic {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "enough" => Ok(Heuristic::Enough),
            "all" => Ok(Heuristic::All),
            other => Err(format!("unknown heuristic `{other}` (expected `enough` or `all`)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Contiguous,
    Head,
    Body,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Run {
    kind: Kind,
    label: usize,
    span: Span,
}

/// Maximal runs of a begin tag followed by its inside tags. A stray inside
/// tag opens a run of its own.
fn runs(tags: &[Tag]) -> Vec<Run> {
    let mut out: Vec<Run> = Vec::new();
    for (i, &t) in tags.iter().enumerate() {
        let Tag::Typed(role, label) = t else { continue };
        let kind = match role.begin_of() {
            Role::B => Kind::Contiguous,
            Role::BH => Kind::Head,
            _ => Kind::Body,
        };
        if role.is_inside() {
            if let Some(last) = out.last_mut() {
                if last.kind == kind && last.label == label && last.span.end + 1 == i {
                    last.span.end = i;
                    continue;
                }
            }
        }
        out.push(Run {
            kind,
            label,
            span: Span::single(i),
        });
    }
    out
}

/// Contiguous entities; a `B I*` run directly followed by a head of the
/// same type extends through that head.
fn contiguous(runs: &[Run]) -> Vec<Candidate> {
    let mut out = Vec::new();
    for (i, r) in runs.iter().enumerate() {
        if r.kind != Kind::Contiguous {
            continue;
        }
        let mut span = r.span;
        if let Some(next) = runs.get(i + 1) {
            if next.kind == Kind::Head && next.label == r.label && next.span.start == r.span.end + 1 {
                span.end = next.span.end;
            }
        }
        out.push(Candidate::new(r.label, vec![span]));
    }
    out
}

fn pieces(runs: &[Run], label: usize) -> Vec<Run> {
    runs.iter()
        .filter(|r| r.label == label && r.kind != Kind::Contiguous)
        .copied()
        .collect()
}

fn finish(set: BTreeSet<Candidate>) -> Vec<Candidate> {
    let mut v: Vec<Candidate> = set.into_iter().collect();
    v.sort();
    v
}

/// Contiguous entities plus every in-order, gap-separated pair of head/body
/// segments and every such tuple of up to `max_segments` that ends in a body.
pub fn decode_all(tags: &[Tag], max_segments: usize) -> Vec<Candidate> {
    let rs = runs(tags);
    let mut set: BTreeSet<Candidate> = contiguous(&rs).into_iter().collect();
    let labels: BTreeSet<usize> = rs.iter().map(|r| r.label).collect();
    for label in labels {
        let ps = pieces(&rs, label);
        let mut stack: Vec<usize> = Vec::new();
        combine(&ps, 0, max_segments, &mut stack, &mut |idx: &[usize]| {
            let last = ps[*idx.last().unwrap()];
            if idx.len() == 2 || (idx.len() > 2 && last.kind == Kind::Body) {
                set.insert(Candidate::new(label, idx.iter().map(|&i| ps[i].span).collect()));
            }
        });
    }
    finish(set)
}

fn combine(ps: &[Run], from: usize, max: usize, cur: &mut Vec<usize>, emit: &mut impl FnMut(&[usize])) {
    for i in from..ps.len() {
        if let Some(&last) = cur.last() {
            if !ps[last].span.precedes_with_gap(&ps[i].span) {
                continue;
            }
        }
        cur.push(i);
        emit(cur);
        if cur.len() < max {
            combine(ps, i + 1, max, cur, emit);
        }
        cur.pop();
    }
}

/// Contiguous entities plus a greedy left-to-right pairing of head and body
/// segments. A body pairs with the unpaired body before it, else with the
/// closest free head on its left; a head pairs with an unpaired body before
/// it or stays free. Segments still unused pair with the nearest segment
/// they can legally combine with.
pub fn decode_enough(tags: &[Tag], max_segments: usize) -> Vec<Candidate> {
    let rs = runs(tags);
    let mut set: BTreeSet<Candidate> = contiguous(&rs).into_iter().collect();
    if max_segments < 2 {
        return finish(set);
    }
    let labels: BTreeSet<usize> = rs.iter().map(|r| r.label).collect();
    for label in labels {
        let ps = pieces(&rs, label);
        let mut used = vec![false; ps.len()];
        let mut pending: Option<usize> = None;
        let mut free: Vec<usize> = Vec::new();
        let mut pair = |a: usize, b: usize, used: &mut Vec<bool>| {
            used[a] = true;
            used[b] = true;
            set.insert(Candidate::new(label, vec![ps[a].span, ps[b].span]));
        };
        for i in 0..ps.len() {
            if let Some(p) = pending {
                if ps[p].span.precedes_with_gap(&ps[i].span) {
                    pair(p, i, &mut used);
                    pending = None;
                    continue;
                }
            }
            if ps[i].kind == Kind::Head {
                free.push(i);
                continue;
            }
            if let Some(pos) = free.iter().rposition(|&h| ps[h].span.precedes_with_gap(&ps[i].span)) {
                let h = free.remove(pos);
                pair(h, i, &mut used);
                continue;
            }
            pending = Some(i);
        }
        for i in 0..ps.len() {
            if used[i] {
                continue;
            }
            let partner = (0..ps.len())
                .filter(|&j| {
                    ps[i].span.precedes_with_gap(&ps[j].span) || ps[j].span.precedes_with_gap(&ps[i].span)
                })
                .min_by_key(|&j| (ps[i].span.start.abs_diff(ps[j].span.start), j));
            if let Some(j) = partner {
                let (a, b) = if j < i { (j, i) } else { (i, j) };
                pair(a, b, &mut used);
            }
        }
    }
    finish(set)
}

pub fn decode(tags: &[Tag], max_segments: usize, h: Heuristic) -> Vec<Candidate> {
    match h {
        Heuristic::Enough => decode_enough(tags, max_segments),
        Heuristic::All => decode_all(tags, max_segments),
    }
}
