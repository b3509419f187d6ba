//! Training-example extraction, the training loop, evaluation metrics and
//! the train/test grids over fluent and disfluent corpora.

mod evaluate;
mod grid;
mod metrics;
mod train;

use serde::{Deserialize, Serialize};

use crate::corpus::{history_len, history_tokens, Corpus, Dialogue, TokenId, Vocabulary, API_CALL};

pub use evaluate::{evaluate, evaluate_encoded, Evaluation};
pub use grid::{
    et_grid, run_grid, Dataset, EtCell, EtGridReport, GridCell, GridConfig, GridReport, RunKey, EXPECTED_ET_CELLS,
};
pub use metrics::{
    aggregate, parse_records, sequence_accuracy, word_accuracy, write_records, Category, MetricsReport, PredictionRecord,
};
pub use train::{train, EpochLog, TrainConfig, TrainOutcome};

/// One system response and the dialogue history that precedes it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub history: Vec<TokenId>,
    /// System utterance ids followed by `<eos>`.
    pub target: Vec<TokenId>,
    pub is_api_call: bool,
    pub dialogue: usize,
    /// 0-based turn position within the dialogue.
    pub turn: usize,
}

/// One example per system turn; unknown words map to `<unk>`.
pub fn build_examples(dialogue: &Dialogue, dialogue_id: usize, vocab: &Vocabulary) -> Vec<TrainingExample> {
    (0..dialogue.turns.len())
        .map(|k| {
            let system = &dialogue.turns[k].system;
            let mut target = vocab.encode(system);
            target.push(Vocabulary::EOS_ID);
            TrainingExample {
                history: vocab.encode(&history_tokens(&dialogue.turns, k)),
                target,
                is_api_call: system.first().map(String::as_str) == Some(API_CALL),
                dialogue: dialogue_id,
                turn: k,
            }
        })
        .collect()
}

/// A target decoded from the first `end` tokens of its dialogue's history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrefixTarget {
    pub end: usize,
    pub target: Vec<TokenId>,
    pub is_api_call: bool,
    pub turn: usize,
}

/// A dialogue encoded once as its longest history, with every example
/// expressed as a prefix of it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedDialogue {
    pub id: usize,
    pub tokens: Vec<TokenId>,
    pub targets: Vec<PrefixTarget>,
}

pub fn encode_dialogue(dialogue: &Dialogue, id: usize, vocab: &Vocabulary) -> EncodedDialogue {
    let turns = &dialogue.turns;
    let tokens = if turns.is_empty() { Vec::new() } else { vocab.encode(&history_tokens(turns, turns.len() - 1)) };
    let targets = turns
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let mut target = vocab.encode(&t.system);
            target.push(Vocabulary::EOS_ID);
            PrefixTarget {
                end: history_len(turns, k),
                target,
                is_api_call: t.system.first().map(String::as_str) == Some(API_CALL),
                turn: k,
            }
        })
        .collect();
    EncodedDialogue { id, tokens, targets }
}

pub fn encode_corpus(corpus: &Corpus, vocab: &Vocabulary) -> Vec<EncodedDialogue> {
    corpus.dialogues.iter().enumerate().map(|(i, d)| encode_dialogue(d, i, vocab)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocabulary, generate_corpus, CorpusConfig, SplitSizes};

    fn corpus() -> Corpus {
        let mut cfg = CorpusConfig::with_seed(3);
        cfg.sizes = SplitSizes { train: 40, dev: 0, test: 0, test_oov: 0 };
        generate_corpus(&cfg).unwrap().train
    }

    #[test]
    fn one_example_per_system_turn_with_nested_histories() {
        let c = corpus();
        let vocab = build_vocabulary(&c).unwrap();
        for (i, d) in c.dialogues.iter().enumerate() {
            let ex = build_examples(d, i, &vocab);
            assert_eq!(ex.len(), d.turns.len());
            assert!(ex.last().unwrap().is_api_call);
            assert_eq!(ex.iter().filter(|e| e.is_api_call).count(), 1);
            for w in ex.windows(2) {
                assert!(w[1].history.starts_with(&w[0].history));
                assert!(w[1].history.len() > w[0].history.len());
            }
            let enc = encode_dialogue(d, i, &vocab);
            for (e, p) in ex.iter().zip(&enc.targets) {
                assert_eq!(&enc.tokens[..p.end], e.history.as_slice());
                assert_eq!(p.target, e.target);
            }
        }
    }

    #[test]
    fn seven_system_turn_dialogue_gives_seven_examples() {
        let c = corpus();
        let vocab = build_vocabulary(&c).unwrap();
        let d = c.dialogues.iter().find(|d| d.turns.len() == 7).expect("a 7-turn dialogue");
        assert_eq!(build_examples(d, 0, &vocab).len(), 7);
    }

    #[test]
    fn unknown_words_map_to_unk() {
        let c = corpus();
        let vocab = build_vocabulary(&c).unwrap();
        let mut d = c.dialogues[0].clone();
        d.turns[0].user = vec!["zzzz".into()];
        let ex = build_examples(&d, 0, &vocab);
        assert_eq!(ex[0].history, vec![Vocabulary::USER_ID, Vocabulary::UNK_ID]);
    }
}
