use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::babi::API_CALL;
use super::vocab::RESERVED;
use super::Corpus;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub dialogues: usize,
    pub turns: usize,
    pub user_utterances: usize,
    pub system_utterances: usize,
    pub user_tokens: usize,
    pub mean_user_utterance_len: f64,
    pub mean_user_utterances_per_dialogue: f64,
    pub mean_system_utterances_per_dialogue: f64,
    pub distinct_system_utterances: usize,
    pub distinct_api_calls: usize,
    pub distinct_words: usize,
}

pub fn corpus_stats(corpus: &Corpus) -> Stats {
    let mut user_tokens = 0usize;
    let mut turns = 0usize;
    let mut system_utterances = HashSet::new();
    let mut api_calls = HashSet::new();
    let mut words = HashSet::new();
    for d in &corpus.dialogues {
        for t in &d.turns {
            turns += 1;
            user_tokens += t.user.len();
            let system = t.system.join(" ");
            if t.system.first().map(String::as_str) == Some(API_CALL) {
                api_calls.insert(system);
            } else {
                system_utterances.insert(system);
            }
            for w in t.user.iter().chain(&t.system) {
                if !RESERVED.contains(&w.as_str()) {
                    words.insert(w.as_str());
                }
            }
        }
    }
    let per = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
    let dialogues = corpus.dialogues.len();
    Stats {
        dialogues,
        turns,
        user_utterances: turns,
        system_utterances: turns,
        user_tokens,
        mean_user_utterance_len: per(user_tokens, turns),
        mean_user_utterances_per_dialogue: per(turns, dialogues),
        mean_system_utterances_per_dialogue: per(turns, dialogues),
        distinct_system_utterances: system_utterances.len(),
        distinct_api_calls: api_calls.len(),
        distinct_words: words.len(),
    }
}

impl Stats {
    /// Tab-separated `key\tvalue` lines.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let rows: [(&str, String); 11] = [
            ("dialogues", self.dialogues.to_string()),
            ("turns", self.turns.to_string()),
            ("user_utterances", self.user_utterances.to_string()),
            ("system_utterances", self.system_utterances.to_string()),
            ("user_tokens", self.user_tokens.to_string()),
            ("mean_user_utterance_len", format!("{:.4}", self.mean_user_utterance_len)),
            ("mean_user_utterances_per_dialogue", format!("{:.4}", self.mean_user_utterances_per_dialogue)),
            ("mean_system_utterances_per_dialogue", format!("{:.4}", self.mean_system_utterances_per_dialogue)),
            ("distinct_system_utterances", self.distinct_system_utterances.to_string()),
            ("distinct_api_calls", self.distinct_api_calls.to_string()),
            ("distinct_words", self.distinct_words.to_string()),
        ];
        for (k, v) in rows {
            let _ = writeln!(out, "{k}\t{v}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_babi, Split};

    #[test]
    fn exact_counts() {
        let text = "1 hi\thello what can i help you with today\n\
                    2 can you book a table in rome\ti'm on it\n\
                    3 <SILENCE>\tapi_call thai rome two cheap\n\n";
        let s = corpus_stats(&parse_babi(text, Split::Train).unwrap());
        assert_eq!(s.dialogues, 1);
        assert_eq!(s.turns, 3);
        assert_eq!(s.user_tokens, 1 + 7 + 1);
        assert!((s.mean_user_utterance_len - 3.0).abs() < 1e-12);
        assert_eq!(s.distinct_system_utterances, 2);
        assert_eq!(s.distinct_api_calls, 1);
        assert!(s.to_tsv().contains("mean_user_utterance_len\t3.0000\n"));
    }

    #[test]
    fn empty_corpus_has_zero_means() {
        let s = corpus_stats(&Corpus::new(Split::Test));
        assert_eq!(s.mean_user_utterance_len, 0.0);
    }
}
