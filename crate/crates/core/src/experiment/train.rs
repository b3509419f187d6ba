use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{encode_corpus, EncodedDialogue};
use crate::corpus::{build_vocabulary, Corpus, Vocabulary};
use crate::error::{Error, Result};
use crate::model::{Batch, ExampleRef, Mode, ModelConfig, Seq2Seq};
use crate::numerics::{AdamConfig, AdamState};
use crate::seed::{derive_rng, derive_seed, tag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// `vocab_size` is filled in from the training vocabulary.
    pub model: ModelConfig,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without a dev-loss improvement of `min_delta` before stopping.
    pub patience: usize,
    pub min_delta: f64,
    pub clip_norm: f64,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            model: ModelConfig::default(),
            batch_size: 32,
            max_epochs: 30,
            patience: 3,
            min_delta: 1e-3,
            clip_norm: 5.0,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    /// Hidden size 100 for three epochs.
    pub fn smoke() -> Self {
        TrainConfig { model: ModelConfig { hidden_dim: 100, ..Default::default() }, max_epochs: 3, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::Config("batch size and epoch cap must be positive".into()));
        }
        if !(self.clip_norm > 0.0) || !(self.adam.lr > 0.0) {
            return Err(Error::Config("clip norm and learning rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_loss: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the lowest dev loss.
    pub model: Seq2Seq<f32>,
    pub vocabulary: Vocabulary,
    pub log: Vec<EpochLog>,
    pub best_epoch: usize,
}

/// Packs examples into batches of `size`, keeping each dialogue's examples
/// together in the given dialogue order.
fn batches<'a>(dialogues: &'a [EncodedDialogue], order: &[usize], size: usize) -> Vec<Batch<'a>> {
    let mut out = Vec::new();
    let mut current = Batch::default();
    for &d in order {
        let dialogue = &dialogues[d];
        let mut seq = None;
        for t in &dialogue.targets {
            if current.examples.len() == size {
                out.push(std::mem::take(&mut current));
                seq = None;
            }
            let s = *seq.get_or_insert_with(|| {
                current.sequences.push(&dialogue.tokens);
                current.sequences.len() - 1
            });
            current.examples.push(ExampleRef { seq: s, end: t.end, target: &t.target });
        }
    }
    if !current.examples.is_empty() {
        out.push(current);
    }
    out
}

/// Mean per-example loss over a corpus in evaluation mode.
pub(crate) fn corpus_loss(model: &Seq2Seq<f32>, dialogues: &[EncodedDialogue], batch_size: usize) -> Result<f64> {
    let order: Vec<usize> = (0..dialogues.len()).collect();
    let mut total = 0.0;
    let mut n = 0usize;
    for b in batches(dialogues, &order, batch_size) {
        let k = b.examples.len();
        total += model.loss(&b, Mode::Eval)? * k as f64;
        n += k;
    }
    Ok(if n == 0 { 0.0 } else { total / n as f64 })
}

fn diverged(epoch: usize, batch: usize, e: Error) -> Error {
    match e {
        Error::NonFinite(what) => Error::Diverged(format!("epoch {epoch}, batch {batch}: non-finite {what}")),
        other => other,
    }
}

/// Trains a fresh model; `on_epoch` sees each epoch's log line.
pub fn train(
    cfg: &TrainConfig,
    train: &Corpus,
    dev: &Corpus,
    seed: u64,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train.is_empty() || dev.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let vocabulary = build_vocabulary(train)?;
    let model_cfg = ModelConfig { vocab_size: vocabulary.len(), ..cfg.model.clone() };
    let mut model = Seq2Seq::<f32>::new(model_cfg, derive_seed(seed, &[tag("init")]))?;
    let train_enc = encode_corpus(train, &vocabulary);
    let dev_enc = encode_corpus(dev, &vocabulary);
    let mut adam = AdamState::new(model.params());

    let mut log = Vec::new();
    let mut best = (f64::INFINITY, model.clone(), 0usize);
    let mut reference = f64::INFINITY;
    let mut stale = 0;
    for epoch in 1..=cfg.max_epochs {
        let start = Instant::now();
        let mut order: Vec<usize> = (0..train_enc.len()).collect();
        order.shuffle(&mut derive_rng(seed, &[tag("shuffle"), epoch as u64]));
        let mut total = 0.0;
        let mut n = 0usize;
        for (b, batch) in batches(&train_enc, &order, cfg.batch_size).iter().enumerate() {
            model.params_mut().zero_grads();
            let mode = Mode::Train { seed: derive_seed(seed, &[tag("dropout"), epoch as u64, b as u64]) };
            let loss = model.loss_and_grad(batch, mode).map_err(|e| diverged(epoch, b, e))?;
            model.params_mut().clip_grad_norm(cfg.clip_norm);
            adam.step(model.params_mut(), &cfg.adam).map_err(|e| diverged(epoch, b, e))?;
            total += loss * batch.examples.len() as f64;
            n += batch.examples.len();
        }
        let dev_loss = corpus_loss(&model, &dev_enc, cfg.batch_size)?;
        if !dev_loss.is_finite() {
            return Err(Error::Diverged(format!("epoch {epoch}: non-finite dev loss")));
        }
        let entry = EpochLog { epoch, train_loss: total / n as f64, dev_loss, seconds: start.elapsed().as_secs_f64() };
        on_epoch(&entry);
        log.push(entry);
        if dev_loss < best.0 {
            best = (dev_loss, model.clone(), epoch);
        }
        if dev_loss < reference - cfg.min_delta {
            reference = dev_loss;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    let (_, mut model, best_epoch) = best;
    model.params_mut().zero_grads();
    Ok(TrainOutcome { model, vocabulary, log, best_epoch })
}
