//! JSON-lines corpus format.
//!
//! One sentence per line:
//!
//! ```text
//! {"tokens":["He","had","blood"],"entities":[{"type":"Disorder","spans":[[2,2]]}]}
//! ```
//!
//! Spans are `[start, end]` pairs, 0-based and inclusive. Indices written
//! 1-based elsewhere (e.g. `I_{3,3}` in hypergraph notation over "He had blood
//! ...") map to `start - 1`, `end - 1` here.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use serde::Deserialize;

use super::{AnnotatedSentence, CorpusError, Entity, Span};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntity {
    #[serde(rename = "type")]
    etype: String,
    spans: Vec<[usize; 2]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSentence {
    tokens: Vec<String>,
    entities: Vec<RawEntity>,
}

/// Parses one JSON line. `line_no` is 1-based and only used in diagnostics.
pub fn parse_jsonl(text: &str, line_no: usize) -> Result<AnnotatedSentence, CorpusError> {
    let raw: RawSentence = serde_json::from_str(text).map_err(|e| CorpusError::Parse {
        line: line_no,
        field: "json".into(),
        message: e.to_string(),
    })?;
    let n = raw.tokens.len();
    let mut entities = BTreeSet::new();
    for (ei, re) in raw.entities.into_iter().enumerate() {
        let field = format!("entities[{ei}].spans");
        if re.etype.is_empty() {
            return Err(CorpusError::Parse {
                line: line_no,
                field: format!("entities[{ei}].type"),
                message: "empty entity type".into(),
            });
        }
        let entity = Entity::new(re.etype, re.spans.into_iter().map(Span::from).collect());
        entity.check(n).map_err(|message| CorpusError::Parse {
            line: line_no,
            field: field.clone(),
            message,
        })?;
        entities.insert(entity);
    }
    Ok(AnnotatedSentence {
        tokens: raw.tokens,
        entities: entities.into_iter().collect(),
    })
}

pub fn serialize(sentence: &AnnotatedSentence) -> String {
    serde_json::to_string(sentence).expect("sentence serialization is infallible")
}

pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<AnnotatedSentence>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_jsonl(&line, i + 1)?);
    }
    Ok(out)
}

pub fn write_corpus<W: Write>(mut writer: W, corpus: &[AnnotatedSentence]) -> Result<(), CorpusError> {
    for s in corpus {
        writeln!(writer, "{}", serialize(s))?;
    }
    Ok(())
}

pub fn load_corpus(path: &std::path::Path) -> Result<Vec<AnnotatedSentence>, CorpusError> {
    let file = std::fs::File::open(path)?;
    read_corpus(std::io::BufReader::new(file))
}

pub fn save_corpus(path: &std::path::Path, corpus: &[AnnotatedSentence]) -> Result<(), CorpusError> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_corpus(&mut w, corpus)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MOUTH_TONGUE: &str = r#"{"tokens":["He","had","blood","in","his","mouth","and","on","his","tongue"],"entities":[{"type":"Disorder","spans":[[2,5]]},{"type":"Disorder","spans":[[2,2],[7,9]]}]}"#;

    #[test]
    fn parses_trivial_line() {
        let s = parse_jsonl(r#"{"tokens":["a"],"entities":[]}"#, 1).unwrap();
        assert_eq!(s.tokens.len(), 1);
        assert!(s.entities.is_empty());
    }

    #[test]
    fn parses_overlapping_discontiguous_pair() {
        let s = parse_jsonl(MOUTH_TONGUE, 1).unwrap();
        assert_eq!(s.entities.len(), 2);
        assert_eq!(s.entities.iter().filter(|e| e.is_discontiguous()).count(), 1);
        assert_eq!(parse_jsonl(&serialize(&s), 1).unwrap(), s);
    }

    #[test]
    fn round_trips_empty_annotation() {
        let s = AnnotatedSentence::new(vec!["x".into(), "y".into()], vec![]);
        assert_eq!(parse_jsonl(&serialize(&s), 1).unwrap(), s);
    }

    #[test]
    fn rejects_overlap_within_entity() {
        let line = r#"{"tokens":["a","b","c","d","e","f","g"],"entities":[{"type":"D","spans":[[3,5],[4,6]]}]}"#;
        match parse_jsonl(line, 7) {
            Err(CorpusError::Parse { line, field, message }) => {
                assert_eq!(line, 7);
                assert_eq!(field, "entities[0].spans");
                assert!(message.contains("overlap"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_out_of_range_unsorted_and_malformed() {
        let oob = r#"{"tokens":["a"],"entities":[{"type":"D","spans":[[0,1]]}]}"#;
        assert!(matches!(parse_jsonl(oob, 1), Err(CorpusError::Parse { .. })));
        let unsorted = r#"{"tokens":["a","b","c","d"],"entities":[{"type":"D","spans":[[3,3],[0,0]]}]}"#;
        let err = parse_jsonl(unsorted, 2).unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("not sorted"), "{err}");
        assert!(matches!(
            parse_jsonl("{\"tokens\":", 3),
            Err(CorpusError::Parse { line: 3, .. })
        ));
        let inverted = r#"{"tokens":["a","b"],"entities":[{"type":"D","spans":[[1,0]]}]}"#;
        assert!(parse_jsonl(inverted, 1).is_err());
    }

    #[test]
    fn duplicates_collapse() {
        let line = r#"{"tokens":["a","b"],"entities":[{"type":"D","spans":[[0,0]]},{"type":"D","spans":[[0,0]]}]}"#;
        assert_eq!(parse_jsonl(line, 1).unwrap().entities.len(), 1);
    }
}
