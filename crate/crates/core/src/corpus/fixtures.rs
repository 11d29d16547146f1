//! Small hand-annotated sentences used by tests, docs and the CLI demo.

use super::{AnnotatedSentence, Entity, Span};

fn toks(words: &[&str]) -> Vec<String> {
    words.iter().map(|w| w.to_string()).collect()
}

/// "He had blood in his mouth and on his tongue": a contiguous mention and a
/// discontiguous one sharing the word "blood".
pub fn mouth_tongue_sentence() -> AnnotatedSentence {
    AnnotatedSentence::new(
        toks(&["He", "had", "blood", "in", "his", "mouth", "and", "on", "his", "tongue"]),
        vec![
            Entity::new("Disorder", vec![Span::new(2, 5)]),
            Entity::new("Disorder", vec![Span::new(2, 2), Span::new(7, 9)]),
        ],
    )
}

/// Three disorder mentions: "laceration ... esophagus", "stomach ... lac" and
/// "blood in stomach", the last two sharing "stomach".
pub fn gastro_sentence() -> AnnotatedSentence {
    AnnotatedSentence::new(
        toks(&[
            "EGD", "showed", "laceration", "in", "distal", "esophagus", "and", "blood", "in",
            "stomach", "with", "small", "lac", ".",
        ]),
        vec![
            Entity::new("Disorder", vec![Span::new(2, 2), Span::new(5, 5)]),
            Entity::new("Disorder", vec![Span::new(9, 9), Span::new(12, 12)]),
            Entity::new("Disorder", vec![Span::new(7, 9)]),
        ],
    )
}

/// Token positions in [`gastro_sentence`].
pub mod gastro {
    pub const LACERATION: usize = 2;
    pub const ESOPHAGUS: usize = 5;
    pub const BLOOD: usize = 7;
    pub const IN: usize = 8;
    pub const STOMACH: usize = 9;
    pub const LAC: usize = 12;
}
