mod common;

use std::collections::BTreeSet;

use common::*;
use disco_core::corpus::fixtures::{self, gastro::*};
use disco_core::corpus::Span;
use disco_core::crf::*;
use disco_core::merger::Candidate;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gastro_candidates() -> Vec<Candidate> {
    fixtures::gastro_sentence()
        .entities
        .iter()
        .map(|e| Candidate::new(0, e.spans.clone()))
        .collect()
}

fn one(i: usize) -> (usize, usize) {
    (i, i)
}

#[test]
fn gastro_tags() {
    let tags = encode_tags(&gastro_candidates(), 14);
    let t = |r| Tag::Typed(r, 0);
    let mut want = vec![Tag::O; 14];
    want[LACERATION] = t(Role::BD);
    want[ESOPHAGUS] = t(Role::BD);
    want[BLOOD] = t(Role::B);
    want[IN] = t(Role::I);
    want[STOMACH] = t(Role::BH);
    want[LAC] = t(Role::BD);
    assert_eq!(tags, want);
    assert!(TagSet::new(1).is_valid(&tags));
}

#[test]
fn gastro_all_reading() {
    let tags = encode_tags(&gastro_candidates(), 14);
    let got: BTreeSet<Candidate> = decode_all(&tags, 3).into_iter().collect();
    let want: BTreeSet<Candidate> = [
        cand(&[one(LACERATION), one(ESOPHAGUS)]),
        cand(&[one(STOMACH), one(LAC)]),
        cand(&[(BLOOD, STOMACH)]),
        cand(&[one(LACERATION), one(LAC)]),
        cand(&[one(ESOPHAGUS), one(LAC)]),
        cand(&[one(LACERATION), one(ESOPHAGUS), one(LAC)]),
        cand(&[one(LACERATION), one(STOMACH)]),
        cand(&[one(ESOPHAGUS), one(STOMACH)]),
        cand(&[one(LACERATION), one(STOMACH), one(LAC)]),
        cand(&[one(ESOPHAGUS), one(STOMACH), one(LAC)]),
    ]
    .into_iter()
    .collect();
    assert_eq!(got, want);
}

#[test]
fn gastro_enough_reading() {
    let tags = encode_tags(&gastro_candidates(), 14);
    let got = decode_enough(&tags, 3);
    let want: BTreeSet<Candidate> = gastro_candidates().into_iter().collect();
    assert_eq!(got.len(), 3);
    assert_eq!(got.into_iter().collect::<BTreeSet<_>>(), want);
}

#[test]
fn contiguous_disjoint_sets_are_lossless() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..300 {
        let n = rng.gen_range(1..12);
        let mut ents = Vec::new();
        let mut i = 0;
        while i < n {
            if rng.gen_bool(0.4) {
                let end = rng.gen_range(i..n.min(i + 3));
                ents.push(Candidate::new(rng.gen_range(0..2), vec![Span::new(i, end)]));
                i = end + 1;
            } else {
                i += 1;
            }
        }
        ents.sort();
        let tags = encode_tags(&ents, n);
        assert_eq!(decode_all(&tags, 3), ents);
        assert_eq!(decode_enough(&tags, 3), ents);
    }
}

#[test]
fn distinct_sets_can_share_a_tag_sequence() {
    // two sequential pairs and two crossing pairs: every segment is a body
    let first = vec![cand(&[one(0), one(2)]), cand(&[one(4), one(6)])];
    let second = vec![cand(&[one(0), one(4)]), cand(&[one(2), one(6)])];
    assert_ne!(first, second);
    assert_eq!(encode_tags(&first, 7), encode_tags(&second, 7));
}

#[test]
fn forward_and_viterbi_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..30 {
        let k = rng.gen_range(1..=2);
        let ts = TagSet::new(k);
        let t = ts.len();
        let n = rng.gen_range(1..=if k == 1 { 5 } else { 3 });
        let em: Vec<Vec<f64>> = (0..n).map(|_| random_scores(&mut rng, t, 2.0)).collect();
        let start = random_scores(&mut rng, t, 2.0);
        let trans: Vec<Vec<f64>> = (0..t).map(|_| random_scores(&mut rng, t, 2.0)).collect();
        let c = ChainScores {
            tags: ts,
            emissions: &em,
            start: &start,
            transitions: &trans,
        };
        let (lz, max, arg) = crf_brute_force(ts, &em, &start, &trans);
        assert!((c.log_z() - lz).abs() < 1e-9);
        let (seq, score) = c.viterbi();
        assert!((score - max).abs() < 1e-9);
        assert_eq!(seq, arg);
        assert!((c.sequence_score(&seq) - score).abs() < 1e-9);
        let gold: Vec<usize> = seq.clone();
        assert!(c.nll(&gold) >= 0.0);
        let m = c.marginals();
        for row in &m.unary {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let pairs: f64 = m.transitions.iter().flatten().sum();
        assert!((pairs - (n - 1) as f64).abs() < 1e-9);
    }
}

#[test]
fn viterbi_ties_prefer_low_indices() {
    let ts = TagSet::new(1);
    let em = vec![vec![0.0; 7]; 3];
    let start = vec![0.0; 7];
    let tr = vec![vec![0.0; 7]; 7];
    let c = ChainScores {
        tags: ts,
        emissions: &em,
        start: &start,
        transitions: &tr,
    };
    assert_eq!(c.viterbi().0, vec![0, 0, 0]);
}

fn valid_tags(k: usize) -> impl Strategy<Value = Vec<Tag>> {
    let ts = TagSet::new(k);
    proptest::collection::vec(0..ts.len(), 0..16).prop_map(move |raw| {
        let mut out: Vec<usize> = Vec::new();
        for r in raw {
            let ok = match out.last() {
                None => ts.can_start(r),
                Some(&p) => ts.allowed(p, r),
            };
            out.push(if ok { r } else { 0 });
        }
        out.into_iter().map(|i| ts.tag(i)).collect()
    })
}

proptest! {
    #[test]
    fn enough_is_subset_of_all(tags in valid_tags(2), k in 1usize..4) {
        let all: BTreeSet<_> = decode_all(&tags, k).into_iter().collect();
        for e in decode_enough(&tags, k) {
            prop_assert!(all.contains(&e), "{:?} not in all", e);
            prop_assert!(e.is_valid());
        }
    }

    #[test]
    fn encoded_tags_are_valid(raw in proptest::collection::vec((0usize..8, 0usize..3, 0usize..2, 0usize..4), 0..6)) {
        let mut ents = Vec::new();
        for (a, len, label, gap) in raw {
            let first = Span::new(a, a + len);
            let mut spans = vec![first];
            if gap > 0 && first.end + 1 + gap < 12 {
                spans.push(Span::single(first.end + 1 + gap));
            }
            ents.push(Candidate::new(label, spans));
        }
        let tags = encode_tags(&ents, 12);
        prop_assert!(TagSet::new(2).is_valid(&tags));
    }
}
