use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{AnnotatedSentence, Entity};
use crate::hypergraph::{EdgeScorer, SegmentSet, SegmentalHypergraph, TypedSpan};
use crate::merger::{bernoulli_nll, decode_entities, enumerate_candidates, Candidate, MergeScorer};
use crate::tensor::{sigmoid, Gradients, Mode, NodeId, ParamStore, Tape};

use super::checkpoint::{Checkpoint, EpochRecord, ModelKind};
use super::encoder::{Encoded, TextEncoder};
use super::settings::TrainConfig;
use super::vocab::{TypeInventory, Vocab, UNK};
use super::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Layout {
    extract: TextEncoder,
    /// Separate encoder for the merging stage when the encoder is not shared.
    merge: Option<TextEncoder>,
    edges: EdgeScorer,
    merger: MergeScorer,
}

impl Layout {
    fn build<R: Rng>(store: &mut ParamStore, cfg: &TrainConfig, vocab: usize, types: usize, rng: &mut R) -> Self {
        let text = |store: &mut ParamStore, name: &str, rng: &mut R| {
            TextEncoder::new(store, name, vocab, cfg.emb_dim, cfg.hidden_word, Some(cfg.hidden_span), rng)
        };
        let extract = text(store, "extract", rng);
        let merge = (!cfg.shared_encoder).then(|| text(store, "merge", rng));
        let edges = EdgeScorer::new(store, "edges", types, extract.word_dim(), extract.span_dim(), rng);
        let merger = MergeScorer::new(store, "merger", extract.span_dim(), cfg.hidden_entity, rng);
        Layout {
            extract,
            merge,
            edges,
            merger,
        }
    }
}

/// Gold structure of one training sentence in index form.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldStructure {
    pub segments: SegmentSet,
    pub entities: Vec<Candidate>,
}

/// The two terms of the sentence objective and the gradient of their sum.
#[derive(Debug, Clone)]
pub struct SentenceLoss {
    pub segment_nll: f64,
    pub merge_nll: f64,
    pub grads: Gradients,
}

impl SentenceLoss {
    pub fn total(&self) -> f64 {
        self.segment_nll + self.merge_nll
    }
}

/// Segment extractor and segment merger over a shared (or duplicated)
/// word/span encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct JointModel {
    pub config: TrainConfig,
    pub vocab: Vocab,
    pub types: TypeInventory,
    pub store: ParamStore,
    layout: Layout,
}

impl JointModel {
    /// Fresh model with parameters drawn from `config.seed`.
    pub fn new(config: TrainConfig, vocab: Vocab, types: TypeInventory) -> Result<Self, PipelineError> {
        config.validate()?;
        if types.is_empty() {
            return Err(PipelineError::NoTypes);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new();
        let layout = Layout::build(&mut store, &config, vocab.len(), types.len(), &mut rng);
        Ok(JointModel {
            config,
            vocab,
            types,
            store,
            layout,
        })
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self, PipelineError> {
        ckpt.expect_kind(ModelKind::Joint)?;
        let mut model = Self::new(
            ckpt.config.clone(),
            Vocab::from_words(ckpt.vocab.clone()),
            TypeInventory::new(ckpt.types.clone()),
        )?;
        adopt_params(&mut model.store, &ckpt.params)?;
        Ok(model)
    }

    pub fn to_checkpoint(&self, history: Vec<EpochRecord>) -> Checkpoint {
        Checkpoint {
            kind: ModelKind::Joint,
            config: self.config.clone(),
            vocab: self.vocab.words().to_vec(),
            types: self.types.names().to_vec(),
            params: self.store.clone(),
            history,
        }
    }

    pub fn extraction_encoder(&self) -> TextEncoder {
        self.layout.extract
    }

    pub fn merging_encoder(&self) -> TextEncoder {
        self.layout.merge.unwrap_or(self.layout.extract)
    }

    pub fn hypergraph(&self, n: usize) -> SegmentalHypergraph {
        SegmentalHypergraph::build(n, self.types.len(), self.config.max_segment_len)
    }

    /// Maps gold entities to typed segments and candidates, rejecting
    /// entities the model cannot represent.
    pub fn gold_structure(&self, s: &AnnotatedSentence) -> Result<GoldStructure, String> {
        let mut segments = SegmentSet::new();
        let mut entities = Vec::new();
        for e in &s.entities {
            let label = self
                .types
                .index(&e.etype)
                .ok_or_else(|| format!("unknown entity type `{}`", e.etype))?;
            if let Some(sp) = e.spans.iter().find(|sp| sp.len() > self.config.max_segment_len) {
                return Err(format!(
                    "segment {sp} has {} tokens, more than max_segment_len={}",
                    sp.len(),
                    self.config.max_segment_len
                ));
            }
            if e.spans.len() > self.config.max_entity_segments {
                return Err(format!(
                    "entity with {} segments exceeds max_entity_segments={}",
                    e.spans.len(),
                    self.config.max_entity_segments
                ));
            }
            for sp in &e.spans {
                segments.insert(TypedSpan { label, span: *sp });
            }
            entities.push(Candidate::new(label, e.spans.clone()));
        }
        Ok(GoldStructure { segments, entities })
    }

    fn encode_pair<R: Rng>(&self, tape: &mut Tape, ids: &[usize], mode: Mode, rng: &mut R) -> (Encoded, Option<Encoded>) {
        let c = self.config.max_segment_len;
        let d = self.config.dropout;
        let ext = self.layout.extract.encode(tape, ids, c, d, mode, rng);
        let mrg = self.layout.merge.map(|m| m.encode(tape, ids, c, d, mode, rng));
        (ext, mrg)
    }

    /// Edge scores of the hypergraph for `tokens` in evaluation mode.
    pub fn edge_scores(&self, tokens: &[String]) -> (SegmentalHypergraph, Vec<f64>) {
        let hg = self.hypergraph(tokens.len());
        if tokens.is_empty() {
            return (hg, Vec::new());
        }
        let mut tape = Tape::new(&self.store);
        let ids = self.vocab.ids(tokens);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let enc = self.layout.extract.encode(&mut tape, &ids, self.config.max_segment_len, 0.0, Mode::Eval, &mut rng);
        let spans = enc.spans.as_ref().expect("span encoder");
        let scored = self.layout.edges.score(&mut tape, &hg, &enc.words, spans);
        (hg, scored.values)
    }

    /// Merge probabilities of `candidates` in evaluation mode.
    pub fn candidate_probabilities(&self, tokens: &[String], candidates: &[Candidate]) -> Vec<f64> {
        if candidates.is_empty() {
            return Vec::new();
        }
        let mut tape = Tape::new(&self.store);
        let ids = self.vocab.ids(tokens);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let enc = self
            .merging_encoder()
            .encode(&mut tape, &ids, self.config.max_segment_len, 0.0, Mode::Eval, &mut rng);
        let spans = enc.spans.as_ref().expect("span encoder");
        candidates
            .iter()
            .map(|c| {
                let l = self.layout.merger.candidate_logit(&mut tape, spans, c);
                sigmoid(tape.scalar(l))
            })
            .collect()
    }

    /// Objective of one sentence in evaluation mode (no dropout, no word
    /// replacement) and its gradient.
    pub fn sentence_loss(&self, s: &AnnotatedSentence) -> Result<SentenceLoss, PipelineError> {
        let gold = self.gold_structure(s).map_err(|message| PipelineError::TrainingData { sentence: 0, message })?;
        let ids = self.vocab.ids(&s.tokens);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        Ok(self.loss_on_ids(&ids, &gold, Mode::Eval, &mut rng))
    }

    /// Sentence objective on token ids: segment NLL under the hypergraph plus
    /// the Bernoulli NLL of every candidate built from the gold segments.
    pub fn loss_on_ids<R: Rng>(&self, ids: &[usize], gold: &GoldStructure, mode: Mode, rng: &mut R) -> SentenceLoss {
        self.objective(ids, gold, mode, rng, true)
    }

    /// The merging term alone, in evaluation mode; its gradient shows which
    /// parameters the merging stage reaches.
    pub fn merge_loss(&self, s: &AnnotatedSentence) -> Result<SentenceLoss, PipelineError> {
        let gold = self.gold_structure(s).map_err(|message| PipelineError::TrainingData { sentence: 0, message })?;
        let ids = self.vocab.ids(&s.tokens);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        Ok(self.objective(&ids, &gold, Mode::Eval, &mut rng, false))
    }

    fn objective<R: Rng>(&self, ids: &[usize], gold: &GoldStructure, mode: Mode, rng: &mut R, with_segments: bool) -> SentenceLoss {
        if ids.is_empty() {
            return SentenceLoss {
                segment_nll: 0.0,
                merge_nll: 0.0,
                grads: self.store.zero_grads(),
            };
        }
        let hg = self.hypergraph(ids.len());
        let mut tape = Tape::new(&self.store);
        let (ext, mrg) = self.encode_pair(&mut tape, ids, mode, rng);
        let ext_spans = ext.spans.as_ref().expect("span encoder");
        let scored = self.layout.edges.score(&mut tape, &hg, &ext.words, ext_spans);
        let (log_z, mut edge_grads) = hg.edge_marginals(&scored.values);
        let path = hg
            .segments_to_hyperpath(&gold.segments)
            .expect("gold segments checked against the hypergraph bounds");
        let segment_nll = log_z - hg.path_score(&path, &scored.values);
        for &e in &path {
            edge_grads[e] -= 1.0;
        }
        let (segment_nll, mut seeds) = if with_segments {
            (segment_nll, scored.seeds(&tape, &edge_grads))
        } else {
            (0.0, Vec::new())
        };

        let members: BTreeSet<&Candidate> = gold.entities.iter().collect();
        let candidates = enumerate_candidates(&gold.segments, self.config.max_entity_segments);
        let merge_spans = mrg.as_ref().unwrap_or(&ext).spans.as_ref().expect("span encoder");
        let mut merge_nll = 0.0;
        let logits: Vec<(NodeId, bool)> = candidates
            .iter()
            .map(|c| (self.layout.merger.candidate_logit(&mut tape, merge_spans, c), members.contains(c)))
            .collect();
        for (node, member) in logits {
            let (nll, d) = bernoulli_nll(tape.scalar(node), member);
            merge_nll += nll;
            seeds.push((node, vec![d]));
        }
        let grads = tape.backward(&seeds);
        SentenceLoss {
            segment_nll,
            merge_nll,
            grads,
        }
    }

    /// Most probable segment set, then every candidate with merge
    /// probability above one half.
    pub fn predict(&self, tokens: &[String]) -> Vec<Entity> {
        if tokens.is_empty() {
            return Vec::new();
        }
        let (hg, scores) = self.edge_scores(tokens);
        let segments = hg.map_decode(&scores).segments;
        let candidates = enumerate_candidates(&segments, self.config.max_entity_segments);
        let probs = self.candidate_probabilities(tokens, &candidates);
        let mut out: Vec<Entity> = decode_entities(&candidates, &probs, 0.5)
            .into_iter()
            .map(|c| Entity::new(self.types.name(c.label), c.spans))
            .collect();
        out.sort();
        out
    }

    pub fn predict_corpus(&self, corpus: &[AnnotatedSentence]) -> Vec<AnnotatedSentence> {
        corpus
            .iter()
            .map(|s| AnnotatedSentence::new(s.tokens.clone(), self.predict(&s.tokens)))
            .collect()
    }

    /// Token ids for a training pass: words seen at most once are replaced
    /// by the unknown-word id with probability `unk_replace_prob`.
    pub fn training_ids<R: Rng>(&self, tokens: &[String], rng: &mut R) -> Vec<usize> {
        tokens
            .iter()
            .map(|t| {
                let id = self.vocab.id(t);
                if id != UNK && self.vocab.count(id) <= 1 && rng.gen::<f64>() < self.config.unk_replace_prob {
                    UNK
                } else {
                    id
                }
            })
            .collect()
    }
}

/// Copies stored parameters into a freshly laid out store after checking
/// that names and shapes agree.
pub(crate) fn adopt_params(fresh: &mut ParamStore, stored: &ParamStore) -> Result<(), PipelineError> {
    if fresh.len() != stored.len() {
        return Err(PipelineError::Checkpoint(format!(
            "expected {} parameter tensors, found {}",
            fresh.len(),
            stored.len()
        )));
    }
    for ((_, a), (_, b)) in fresh.iter().zip(stored.iter()) {
        if a.name != b.name || a.rows != b.rows || a.cols != b.cols {
            return Err(PipelineError::Checkpoint(format!(
                "parameter mismatch: expected {} {}x{}, found {} {}x{}",
                a.name, a.rows, a.cols, b.name, b.rows, b.cols
            )));
        }
    }
    *fresh = stored.clone();
    Ok(())
}
