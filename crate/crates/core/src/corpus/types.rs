use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Inclusive token range `[start, end]`, 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end, "span start {start} after end {end}");
        Span { start, end }
    }

    pub fn single(pos: usize) -> Self {
        Span { start: pos, end: pos }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, pos: usize) -> bool {
        self.start <= pos && pos <= self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    /// True when `next` starts at least one token after `self` ends.
    pub fn precedes_with_gap(&self, next: &Span) -> bool {
        next.start > self.end + 1
    }

    pub fn positions(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }
}

impl From<[usize; 2]> for Span {
    fn from(v: [usize; 2]) -> Self {
        Span { start: v[0], end: v[1] }
    }
}

impl From<Span> for [usize; 2] {
    fn from(s: Span) -> Self {
        [s.start, s.end]
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

/// A typed contiguous span: either an entity on its own or one piece of a
/// discontiguous entity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Segment {
    pub span: Span,
    pub etype: String,
}

/// A typed entity made of one or more spans.
///
/// Spans are sorted, pairwise disjoint and separated by at least one token.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Entity {
    #[serde(rename = "type")]
    pub etype: String,
    pub spans: Vec<Span>,
}

impl Entity {
    pub fn new(etype: impl Into<String>, spans: Vec<Span>) -> Self {
        Entity { etype: etype.into(), spans }
    }

    pub fn is_discontiguous(&self) -> bool {
        self.spans.len() > 1
    }

    pub fn tokens(&self) -> impl Iterator<Item = usize> + '_ {
        self.spans.iter().flat_map(|s| s.positions())
    }

    pub fn shares_token_with(&self, other: &Entity) -> bool {
        self.spans
            .iter()
            .any(|a| other.spans.iter().any(|b| a.overlaps(b)))
    }

    /// Checks the structural invariants against a sentence of `n` tokens.
    pub fn check(&self, n: usize) -> Result<(), String> {
        if self.spans.is_empty() {
            return Err("entity has no spans".into());
        }
        for s in &self.spans {
            if s.start > s.end {
                return Err(format!("span [{}, {}] has start after end", s.start, s.end));
            }
            if s.end >= n {
                return Err(format!(
                    "span [{}, {}] out of range for {n} tokens",
                    s.start, s.end
                ));
            }
        }
        for w in self.spans.windows(2) {
            if w[1].start < w[0].start {
                return Err(format!("spans {} and {} are not sorted", w[0], w[1]));
            }
            if w[0].overlaps(&w[1]) {
                return Err(format!("spans {} and {} overlap", w[0], w[1]));
            }
            if !w[0].precedes_with_gap(&w[1]) {
                return Err(format!("spans {} and {} are adjacent", w[0], w[1]));
            }
        }
        Ok(())
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        self.spans.iter().map(|&span| Segment {
            span,
            etype: self.etype.clone(),
        })
    }
}

/// A tokenized sentence with its entity set.
///
/// `entities` is kept sorted and deduplicated, so two sentences with the same
/// entity set compare equal regardless of insertion order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedSentence {
    pub tokens: Vec<String>,
    pub entities: Vec<Entity>,
}

impl AnnotatedSentence {
    pub fn new(tokens: Vec<String>, entities: impl IntoIterator<Item = Entity>) -> Self {
        let set: BTreeSet<Entity> = entities.into_iter().collect();
        AnnotatedSentence {
            tokens,
            entities: set.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn entity_set(&self) -> BTreeSet<Entity> {
        self.entities.iter().cloned().collect()
    }

    pub fn check(&self) -> Result<(), String> {
        for e in &self.entities {
            e.check(self.tokens.len())?;
        }
        for w in self.entities.windows(2) {
            if w[0] == w[1] {
                return Err("duplicate entity".into());
            }
        }
        Ok(())
    }
}

/// Every (span, type) pair used by some entity, deduplicated.
pub fn derive_gold_segments<'a>(entities: impl IntoIterator<Item = &'a Entity>) -> BTreeSet<Segment> {
    entities.into_iter().flat_map(|e| e.segments()).collect()
}

/// All spans of length at most `max_len` in a sentence of `n` tokens, sorted
/// by `(start, end)`.
pub fn enumerate_spans(n: usize, max_len: usize) -> Vec<Span> {
    let mut out = Vec::new();
    for start in 0..n {
        let last = (start + max_len).min(n);
        for end in start..last {
            out.push(Span::new(start, end));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mouth_tongue_pair() -> Vec<Entity> {
        vec![
            Entity::new("Disorder", vec![Span::new(2, 5)]),
            Entity::new("Disorder", vec![Span::new(2, 2), Span::new(7, 9)]),
        ]
    }

    #[test]
    fn gold_segments_of_overlapping_pair() {
        let segs = derive_gold_segments(&mouth_tongue_pair());
        let spans: Vec<_> = segs.iter().map(|s| (s.span.start, s.span.end)).collect();
        assert_eq!(spans, vec![(2, 2), (2, 5), (7, 9)]);
        assert!(segs.iter().all(|s| s.etype == "Disorder"));
    }

    #[test]
    fn gold_segments_empty_and_shared() {
        assert!(derive_gold_segments(&[]).is_empty());
        let shared = vec![
            Entity::new("D", vec![Span::new(2, 2), Span::new(5, 5)]),
            Entity::new("D", vec![Span::new(2, 2), Span::new(8, 9)]),
        ];
        let segs = derive_gold_segments(&shared);
        assert_eq!(segs.len(), 3);
        assert_eq!(
            segs.iter().filter(|s| s.span == Span::new(2, 2)).count(),
            1
        );
    }

    #[test]
    fn gold_segments_idempotent_and_order_free() {
        let mut ents = mouth_tongue_pair();
        let a = derive_gold_segments(&ents);
        ents.reverse();
        let b = derive_gold_segments(&ents);
        assert_eq!(a, b);
        // applying to the segment-level entities again gives the same set
        let as_entities: Vec<Entity> = a
            .iter()
            .map(|s| Entity::new(s.etype.clone(), vec![s.span]))
            .collect();
        assert_eq!(derive_gold_segments(&as_entities), a);
    }

    #[test]
    fn span_enumeration() {
        assert_eq!(
            enumerate_spans(2, 2),
            vec![Span::new(0, 0), Span::new(0, 1), Span::new(1, 1)]
        );
        assert_eq!(
            enumerate_spans(3, 1),
            vec![Span::new(0, 0), Span::new(1, 1), Span::new(2, 2)]
        );
        assert_eq!(enumerate_spans(10, 6).len(), 45);
        assert!(enumerate_spans(0, 3).is_empty());
        for n in 0..12 {
            for c in 1..8 {
                let expected: usize = (0..n).map(|i| c.min(n - i)).sum();
                assert_eq!(enumerate_spans(n, c).len(), expected);
            }
        }
    }

    #[test]
    fn entity_check_rejects_adjacent() {
        let e = Entity::new("D", vec![Span::new(0, 1), Span::new(2, 3)]);
        assert!(e.check(5).unwrap_err().contains("adjacent"));
        let e = Entity::new("D", vec![Span::new(0, 1), Span::new(3, 3)]);
        assert!(e.check(5).is_ok());
        assert!(e.check(3).is_err());
    }
}
