use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::AnnotatedSentence;
use crate::eval::{score, EvalReport};
use crate::tensor::{Adam, Mode};

use super::checkpoint::{Checkpoint, EpochRecord};
use super::model::{GoldStructure, JointModel};
use super::settings::TrainConfig;
use super::vocab::{TypeInventory, Vocab};
use super::PipelineError;

/// Pretrained word vectors keyed by token.
pub type Embeddings = HashMap<String, Vec<f64>>;

/// Checks every sentence against the model limits before any update.
pub(crate) fn gold_structures(model: &JointModel, corpus: &[AnnotatedSentence]) -> Result<Vec<GoldStructure>, PipelineError> {
    corpus
        .iter()
        .enumerate()
        .map(|(i, s)| {
            model
                .gold_structure(s)
                .map_err(|message| PipelineError::TrainingData { sentence: i, message })
        })
        .collect()
}

pub fn evaluate(model: &JointModel, corpus: &[AnnotatedSentence]) -> EvalReport {
    let pred: Vec<_> = corpus.iter().map(|s| model.predict(&s.tokens)).collect();
    let gold: Vec<_> = corpus.iter().map(|s| s.entities.clone()).collect();
    score(&pred, &gold).expect("aligned by construction")
}

/// Trains the joint model with per-sentence Adam updates and keeps the
/// parameters of the epoch with the best dev F1.
pub fn train(
    train: &[AnnotatedSentence],
    dev: &[AnnotatedSentence],
    cfg: &TrainConfig,
    pretrained: Option<&Embeddings>,
) -> Result<Checkpoint, PipelineError> {
    if train.is_empty() {
        return Err(PipelineError::EmptyCorpus("training"));
    }
    if dev.is_empty() {
        return Err(PipelineError::EmptyCorpus("dev"));
    }
    cfg.validate()?;
    let vocab = Vocab::from_corpus(train);
    let types = TypeInventory::from_corpora(&[train, dev]);
    let mut model = JointModel::new(cfg.clone(), vocab, types)?;
    if let Some(p) = pretrained {
        let hits = model.extraction_encoder().load_pretrained(&mut model.store, &model.vocab, p)?;
        if !cfg.shared_encoder {
            model.merging_encoder().load_pretrained(&mut model.store, &model.vocab, p)?;
        }
        log::info!("pretrained_rows={hits}");
    }
    let golds = gold_structures(&model, train)?;

    let mut adam = Adam::new(&model.store, cfg.learning_rate, cfg.l2);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::new();
    let mut best: Option<(f64, crate::tensor::ParamStore)> = None;
    let mut stale = 0;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let ids = model.training_ids(&train[i].tokens, &mut rng);
            let loss = model.loss_on_ids(&ids, &golds[i], Mode::Train, &mut rng);
            total += loss.total();
            adam.update(&mut model.store, &loss.grads);
        }
        let report = evaluate(&model, dev);
        let rec = EpochRecord {
            epoch,
            loss: total / train.len() as f64,
            precision: report.precision(),
            recall: report.recall(),
            f1: report.f1(),
        };
        log::info!(
            "epoch={} loss={:.6} dev_p={:.4} dev_r={:.4} dev_f1={:.4}",
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
                log::info!("early_stop epoch={epoch}");
                break;
            }
        }
    }
    if let Some((_, params)) = best {
        model.store = params;
    }
    Ok(model.to_checkpoint(history))
}
