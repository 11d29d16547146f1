use serde::Serialize;

use super::AnnotatedSentence;

/// Structural counts of a corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub sentences: usize,
    pub entities: usize,
    /// Entities with 1, 2, 3 and more than 3 segments.
    pub by_segments: [usize; 4],
    pub discontiguous: usize,
    /// Entities that share at least one token with another entity.
    pub overlapping: usize,
}

impl CorpusStats {
    pub fn segment_fraction(&self, segments: usize) -> f64 {
        assert!((1..=4).contains(&segments));
        ratio(self.by_segments[segments - 1], self.entities)
    }

    pub fn overlap_fraction(&self) -> f64 {
        ratio(self.overlapping, self.entities)
    }

    pub fn discontiguous_fraction(&self) -> f64 {
        ratio(self.discontiguous, self.entities)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn corpus_stats(corpus: &[AnnotatedSentence]) -> CorpusStats {
    let mut st = CorpusStats {
        sentences: corpus.len(),
        ..Default::default()
    };
    for s in corpus {
        for (i, e) in s.entities.iter().enumerate() {
            st.entities += 1;
            st.by_segments[e.spans.len().clamp(1, 4) - 1] += 1;
            if e.is_discontiguous() {
                st.discontiguous += 1;
            }
            let overlaps = s
                .entities
                .iter()
                .enumerate()
                .any(|(j, o)| j != i && e.shares_token_with(o));
            if overlaps {
                st.overlapping += 1;
            }
        }
    }
    st
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures;

    #[test]
    fn empty_corpus() {
        assert_eq!(corpus_stats(&[]), CorpusStats::default());
        assert_eq!(CorpusStats::default().overlap_fraction(), 0.0);
    }

    #[test]
    fn gastro_sentence_counts() {
        let st = corpus_stats(&[fixtures::gastro_sentence()]);
        assert_eq!(st.sentences, 1);
        assert_eq!(st.entities, 3);
        assert_eq!(st.discontiguous, 2);
        assert_eq!(st.overlapping, 2);
        assert_eq!(st.by_segments, [1, 2, 0, 0]);
    }
}
