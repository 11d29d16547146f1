use std::collections::{BTreeMap, HashMap};

use crate::corpus::AnnotatedSentence;

pub const UNK: usize = 0;
pub const UNK_TOKEN: &str = "<unk>";

/// Word forms seen in training; index 0 is reserved for unknown words.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocab {
    words: Vec<String>,
    counts: Vec<usize>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn from_corpus(corpus: &[AnnotatedSentence]) -> Self {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for s in corpus {
            for t in &s.tokens {
                *counts.entry(t.as_str()).or_default() += 1;
            }
        }
        let mut words = vec![UNK_TOKEN.to_string()];
        let mut freq = vec![0];
        for (w, c) in counts {
            if w == UNK_TOKEN {
                continue;
            }
            words.push(w.to_string());
            freq.push(c);
        }
        Self::with_counts(words, freq)
    }

    /// Rebuilds a vocabulary from a stored word list (counts are not kept).
    pub fn from_words(words: Vec<String>) -> Self {
        let counts = vec![0; words.len()];
        Self::with_counts(words, counts)
    }

    fn with_counts(words: Vec<String>, counts: Vec<usize>) -> Self {
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Vocab { words, counts, index }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.len() <= 1
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn ids(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t)).collect()
    }

    /// Training frequency; 0 for unknown words or a vocabulary loaded from a
    /// checkpoint.
    pub fn count(&self, id: usize) -> usize {
        self.counts[id]
    }
}

/// Type names with stable indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeInventory {
    names: Vec<String>,
}

impl TypeInventory {
    pub fn new(mut names: Vec<String>) -> Self {
        names.sort();
        names.dedup();
        TypeInventory { names }
    }

    pub fn from_corpora(corpora: &[&[AnnotatedSentence]]) -> Self {
        let names = corpora
            .iter()
            .flat_map(|c| c.iter())
            .flat_map(|s| s.entities.iter().map(|e| e.etype.clone()))
            .collect();
        Self::new(names)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.binary_search_by(|n| n.as_str().cmp(name)).ok()
    }

    pub fn name(&self, label: usize) -> &str {
        &self.names[label]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_words_map_to_reserved_row() {
        let s = AnnotatedSentence::new(vec!["a".into(), "b".into(), "a".into()], vec![]);
        let v = Vocab::from_corpus(&[s]);
        assert_eq!(v.len(), 3);
        assert_eq!(v.id("zzz"), UNK);
        assert_eq!(v.count(v.id("a")), 2);
        assert_eq!(v.count(v.id("b")), 1);
        assert_eq!(Vocab::from_words(v.words().to_vec()).ids(&["b".into()]), vec![v.id("b")]);
    }

    #[test]
    fn types_sorted_unique() {
        let t = TypeInventory::new(vec!["b".into(), "a".into(), "b".into()]);
        assert_eq!(t.names(), &["a", "b"]);
        assert_eq!(t.index("b"), Some(1));
        assert_eq!(t.index("c"), None);
    }
}
