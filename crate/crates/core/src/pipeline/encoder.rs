use std::collections::HashMap;

use rand::Rng;

use crate::tensor::{dropout_mask, BiLstm, Mode, NodeId, ParamId, ParamStore, SpanTable, Tape, INIT_SCALE};

use super::vocab::Vocab;
use super::PipelineError;

/// Word embeddings followed by a word-level biLSTM and a span-level biLSTM
/// over the word encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TextEncoder {
    pub embedding: ParamId,
    pub word: BiLstm,
    pub span: Option<BiLstm>,
}

/// Per-sentence encodings on a tape.
pub struct Encoded {
    pub words: Vec<NodeId>,
    pub spans: Option<SpanTable>,
}

impl TextEncoder {
    /// `span_hidden = None` builds a word-only encoder.
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        vocab_size: usize,
        emb_dim: usize,
        word_hidden: usize,
        span_hidden: Option<usize>,
        rng: &mut R,
    ) -> Self {
        let embedding = store.uniform(format!("{name}.embedding"), vocab_size, emb_dim, INIT_SCALE, rng);
        let word = BiLstm::new(store, &format!("{name}.word"), emb_dim, word_hidden, rng);
        let span = span_hidden.map(|h| BiLstm::new(store, &format!("{name}.span"), word.output_dim(), h, rng));
        TextEncoder { embedding, word, span }
    }

    pub fn word_dim(&self) -> usize {
        self.word.output_dim()
    }

    pub fn span_dim(&self) -> usize {
        self.span.map_or(0, |s| s.output_dim())
    }

    /// Encodes token ids. In training mode each embedding gets an inverted
    /// dropout mask drawn from `rng`.
    pub fn encode<R: Rng>(
        &self,
        tape: &mut Tape,
        ids: &[usize],
        max_len: usize,
        dropout: f64,
        mode: Mode,
        rng: &mut R,
    ) -> Encoded {
        let embs: Vec<NodeId> = ids
            .iter()
            .map(|&id| {
                let e = tape.embed(self.embedding, id);
                if mode == Mode::Train && dropout > 0.0 {
                    let m = dropout_mask(tape.value(e).len(), dropout, rng);
                    tape.mask(e, m)
                } else {
                    e
                }
            })
            .collect();
        let words = self.word.encode_sequence(tape, &embs);
        let spans = self.span.map(|s| SpanTable::build(&s, tape, &words, max_len));
        Encoded { words, spans }
    }

    /// Overwrites embedding rows of words found in `pretrained`; returns how
    /// many rows were set.
    pub fn load_pretrained(
        &self,
        store: &mut ParamStore,
        vocab: &Vocab,
        pretrained: &HashMap<String, Vec<f64>>,
    ) -> Result<usize, PipelineError> {
        let table = store.get_mut(self.embedding);
        let dim = table.cols;
        if let Some(v) = pretrained.values().find(|v| v.len() != dim) {
            return Err(PipelineError::EmbeddingDim {
                expected: dim,
                found: v.len(),
            });
        }
        let mut hits = 0;
        for (i, w) in vocab.words().iter().enumerate() {
            if let Some(v) = pretrained.get(w) {
                table.row_mut(i).copy_from_slice(v);
                hits += 1;
            }
        }
        Ok(hits)
    }
}
