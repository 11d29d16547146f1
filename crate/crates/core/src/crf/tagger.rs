use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{AnnotatedSentence, Entity};
use crate::eval::{score, EvalReport};
use crate::merger::Candidate;
use crate::pipeline::{
    adopt_params, Checkpoint, EpochRecord, ModelKind, PipelineError, TextEncoder, TrainConfig, TypeInventory, Vocab, UNK,
};
use crate::tensor::{Adam, Gradients, Mode, NodeId, ParamId, ParamStore, Tape, INIT_SCALE};

use super::chain::ChainScores;
use super::heuristics::{decode, Heuristic};
use super::tags::{encode_tags, TagSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Layout {
    encoder: TextEncoder,
    emit_weight: ParamId,
    emit_bias: ParamId,
    start: ParamId,
    transitions: ParamId,
}

/// Linear-chain CRF whose emissions are a linear map of the word encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfTagger {
    pub config: TrainConfig,
    pub vocab: Vocab,
    pub types: TypeInventory,
    pub store: ParamStore,
    layout: Layout,
}

impl CrfTagger {
    pub fn new(config: TrainConfig, vocab: Vocab, types: TypeInventory) -> Result<Self, PipelineError> {
        config.validate()?;
        if types.is_empty() {
            return Err(PipelineError::NoTypes);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new();
        let encoder = TextEncoder::new(
            &mut store,
            "crf",
            vocab.len(),
            config.emb_dim,
            config.hidden_word,
            None,
            &mut rng,
        );
        let t = TagSet::new(types.len()).len();
        let layout = Layout {
            encoder,
            emit_weight: store.uniform("crf.emit.weight", t, encoder.word_dim(), INIT_SCALE, &mut rng),
            emit_bias: store.zeros("crf.emit.bias", t, 1),
            start: store.zeros("crf.start", t, 1),
            transitions: store.zeros("crf.transitions", t, t),
        };
        Ok(CrfTagger {
            config,
            vocab,
            types,
            store,
            layout,
        })
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self, PipelineError> {
        ckpt.expect_kind(ModelKind::Crf)?;
        let mut m = Self::new(
            ckpt.config.clone(),
            Vocab::from_words(ckpt.vocab.clone()),
            TypeInventory::new(ckpt.types.clone()),
        )?;
        adopt_params(&mut m.store, &ckpt.params)?;
        Ok(m)
    }

    pub fn to_checkpoint(&self, history: Vec<EpochRecord>) -> Checkpoint {
        Checkpoint {
            kind: ModelKind::Crf,
            config: self.config.clone(),
            vocab: self.vocab.words().to_vec(),
            types: self.types.names().to_vec(),
            params: self.store.clone(),
            history,
        }
    }

    pub fn tag_set(&self) -> TagSet {
        TagSet::new(self.types.len())
    }

    fn matrix(&self, id: ParamId) -> Vec<Vec<f64>> {
        let p = self.store.get(id);
        (0..p.rows).map(|r| p.row(r).to_vec()).collect()
    }

    fn emissions<R: Rng>(&self, tape: &mut Tape, ids: &[usize], mode: Mode, rng: &mut R) -> Vec<NodeId> {
        let enc = self.layout.encoder.encode(tape, ids, 1, self.config.dropout, mode, rng);
        enc.words
            .iter()
            .map(|&w| tape.affine(self.layout.emit_weight, Some(self.layout.emit_bias), &[w]))
            .collect()
    }

    /// Gold tag indices; entities of unknown type are ignored.
    pub fn gold_tags(&self, s: &AnnotatedSentence) -> Vec<usize> {
        let cands: Vec<Candidate> = s
            .entities
            .iter()
            .filter_map(|e| self.types.index(&e.etype).map(|k| Candidate::new(k, e.spans.clone())))
            .collect();
        let ts = self.tag_set();
        encode_tags(&cands, s.len()).into_iter().map(|t| ts.index(t)).collect()
    }

    /// Sequence NLL and its gradient.
    pub fn loss_on_ids<R: Rng>(&self, ids: &[usize], gold: &[usize], mode: Mode, rng: &mut R) -> (f64, Gradients) {
        if ids.is_empty() {
            return (0.0, self.store.zero_grads());
        }
        let mut tape = Tape::new(&self.store);
        let nodes = self.emissions(&mut tape, ids, mode, rng);
        let em: Vec<Vec<f64>> = nodes.iter().map(|&n| tape.value(n).to_vec()).collect();
        let start = self.store.get(self.layout.start).data.clone();
        let trans = self.matrix(self.layout.transitions);
        let chain = ChainScores {
            tags: self.tag_set(),
            emissions: &em,
            start: &start,
            transitions: &trans,
        };
        let m = chain.marginals();
        let nll = m.log_z - chain.sequence_score(gold);
        let seeds: Vec<(NodeId, Vec<f64>)> = nodes
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let mut g = m.unary[i].clone();
                g[gold[i]] -= 1.0;
                (n, g)
            })
            .collect();
        let mut grads = tape.backward(&seeds);
        let t = start.len();
        {
            let gs = grads.get_mut(self.layout.start);
            gs.copy_from_slice(&m.start);
            gs[gold[0]] -= 1.0;
        }
        let gt = grads.get_mut(self.layout.transitions);
        for p in 0..t {
            for y in 0..t {
                gt[p * t + y] = m.transitions[p][y];
            }
        }
        for w in gold.windows(2) {
            gt[w[0] * t + w[1]] -= 1.0;
        }
        (nll, grads)
    }

    pub fn predict_tags(&self, tokens: &[String]) -> Vec<usize> {
        if tokens.is_empty() {
            return Vec::new();
        }
        let mut tape = Tape::new(&self.store);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let nodes = self.emissions(&mut tape, &self.vocab.ids(tokens), Mode::Eval, &mut rng);
        let em: Vec<Vec<f64>> = nodes.iter().map(|&n| tape.value(n).to_vec()).collect();
        let start = self.store.get(self.layout.start).data.clone();
        let trans = self.matrix(self.layout.transitions);
        ChainScores {
            tags: self.tag_set(),
            emissions: &em,
            start: &start,
            transitions: &trans,
        }
        .viterbi()
        .0
    }

    pub fn predict(&self, tokens: &[String], heuristic: Heuristic) -> Vec<Entity> {
        let ts = self.tag_set();
        let tags: Vec<_> = self.predict_tags(tokens).into_iter().map(|i| ts.tag(i)).collect();
        let mut out: Vec<Entity> = decode(&tags, self.config.max_entity_segments, heuristic)
            .into_iter()
            .map(|c| Entity::new(self.types.name(c.label), c.spans))
            .collect();
        out.sort();
        out
    }

    pub fn evaluate(&self, corpus: &[AnnotatedSentence], heuristic: Heuristic) -> EvalReport {
        let pred: Vec<_> = corpus.iter().map(|s| self.predict(&s.tokens, heuristic)).collect();
        let gold: Vec<_> = corpus.iter().map(|s| s.entities.clone()).collect();
        score(&pred, &gold).expect("aligned by construction")
    }

    fn training_ids<R: Rng>(&self, tokens: &[String], rng: &mut R) -> Vec<usize> {
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

/// Trains the CRF baseline with the same schedule as the joint model; dev
/// F1 is measured with `heuristic`.
pub fn train_crf(
    train: &[AnnotatedSentence],
    dev: &[AnnotatedSentence],
    cfg: &TrainConfig,
    heuristic: Heuristic,
) -> Result<Checkpoint, PipelineError> {
    if train.is_empty() {
        return Err(PipelineError::EmptyCorpus("training"));
    }
    if dev.is_empty() {
        return Err(PipelineError::EmptyCorpus("dev"));
    }
    let types = TypeInventory::from_corpora(&[train, dev]);
    let mut model = CrfTagger::new(cfg.clone(), Vocab::from_corpus(train), types)?;
    let golds: Vec<Vec<usize>> = train.iter().map(|s| model.gold_tags(s)).collect();
    let mut adam = Adam::new(&model.store, cfg.learning_rate, cfg.l2);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::new();
    let mut best: Option<(f64, ParamStore)> = None;
    let mut stale = 0;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let ids = model.training_ids(&train[i].tokens, &mut rng);
            let (loss, grads) = model.loss_on_ids(&ids, &golds[i], Mode::Train, &mut rng);
            total += loss;
            adam.update(&mut model.store, &grads);
        }
        let r = model.evaluate(dev, heuristic);
        let rec = EpochRecord {
            epoch,
            loss: total / train.len() as f64,
            precision: r.precision(),
            recall: r.recall(),
            f1: r.f1(),
        };
        log::info!(
            "model=crf epoch={} loss={:.6} dev_p={:.4} dev_r={:.4} dev_f1={:.4}",
            rec.epoch,
            rec.loss,
            rec.precision,
            rec.recall,
            rec.f1
        );
        history.push(rec);
        if best.as_ref().is_none_or(|(f, _)| rec.f1 > *f) {
            best = Some((rec.f1, model.store.clone()));
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    if let Some((_, p)) = best {
        model.store = p;
    }
    Ok(model.to_checkpoint(history))
}
