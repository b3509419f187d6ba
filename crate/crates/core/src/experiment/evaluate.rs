use serde::{Deserialize, Serialize};

use super::metrics::{aggregate, sequence_accuracy, word_accuracy, Category, MetricsReport, PredictionRecord};
use super::{encode_corpus, EncodedDialogue};
use crate::corpus::{Corpus, TokenId, Vocabulary};
use crate::error::Result;
use crate::model::Seq2Seq;
use crate::numerics::Real;

const DIALOGUES_PER_CHUNK: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub report: MetricsReport,
    pub records: Vec<PredictionRecord>,
}

/// Greedy decoding of every system turn from its gold history.
pub fn evaluate<T: Real>(model: &Seq2Seq<T>, vocab: &Vocabulary, corpus: &Corpus) -> Result<Evaluation> {
    let gold: Vec<String> = corpus.dialogues.iter().flat_map(|d| d.turns.iter().map(|t| t.system.join(" "))).collect();
    let encoded = encode_corpus(corpus, vocab);
    let mut records = evaluate_encoded(model, vocab, &encoded)?;
    // score against the original words so out-of-vocabulary gold tokens never match
    for (r, g) in records.iter_mut().zip(gold) {
        r.gold = g;
        let gw: Vec<&str> = r.gold.split(' ').collect();
        let hw: Vec<&str> = if r.hypothesis.is_empty() { Vec::new() } else { r.hypothesis.split(' ').collect() };
        r.word_acc = word_accuracy(&hw, &gw)?;
        r.seq_acc = sequence_accuracy(&hw, &gw);
    }
    Ok(Evaluation { report: aggregate(&records), records })
}

/// Decodes pre-encoded dialogues; gold strings are rebuilt from the vocabulary.
pub fn evaluate_encoded<T: Real>(
    model: &Seq2Seq<T>,
    vocab: &Vocabulary,
    dialogues: &[EncodedDialogue],
) -> Result<Vec<PredictionRecord>> {
    let words = |ids: &[TokenId]| vocab.decode(ids).join(" ");
    let mut records = Vec::new();
    for chunk in dialogues.chunks(DIALOGUES_PER_CHUNK) {
        let sequences: Vec<&[TokenId]> = chunk.iter().map(|d| d.tokens.as_slice()).collect();
        let queries: Vec<(usize, usize)> =
            chunk.iter().enumerate().flat_map(|(s, d)| d.targets.iter().map(move |t| (s, t.end))).collect();
        let decoded = model.decode_batch(&sequences, &queries, model.config().max_decode_len)?;
        let mut it = decoded.into_iter();
        for d in chunk {
            for t in &d.targets {
                let hyp = it.next().expect("one decoding per query").tokens;
                let gold = &t.target[..t.target.len() - 1];
                records.push(PredictionRecord {
                    dialogue: d.id,
                    turn: t.turn,
                    category: if t.is_api_call { Category::Api } else { Category::Utterance },
                    gold: words(gold),
                    hypothesis: words(&hyp),
                    word_acc: word_accuracy(&hyp, gold)?,
                    seq_acc: sequence_accuracy(&hyp, gold),
                });
            }
        }
    }
    Ok(records)
}
