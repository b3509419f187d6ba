use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Corpus, SILENCE};
use crate::error::{Error, Result};

pub type TokenId = usize;

pub const PAD: &str = "<pad>";
pub const UNK: &str = "<unk>";
pub const EOS: &str = "<eos>";
pub const USER_MARK: &str = "<u>";
pub const SYSTEM_MARK: &str = "<s>";

/// Reserved tokens in id order; `<pad>` is always id 0.
pub const RESERVED: [&str; 6] = [PAD, UNK, EOS, SILENCE, USER_MARK, SYSTEM_MARK];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VocabularyFile", into = "VocabularyFile")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    tokens: Vec<String>,
}

impl From<VocabularyFile> for Vocabulary {
    fn from(f: VocabularyFile) -> Self {
        Vocabulary::from_tokens(f.tokens)
    }
}

impl From<Vocabulary> for VocabularyFile {
    fn from(v: Vocabulary) -> Self {
        VocabularyFile { tokens: v.tokens }
    }
}

impl Vocabulary {
    pub const PAD_ID: TokenId = 0;
    pub const UNK_ID: TokenId = 1;
    pub const EOS_ID: TokenId = 2;
    pub const SILENCE_ID: TokenId = 3;
    pub const USER_ID: TokenId = 4;
    pub const SYSTEM_ID: TokenId = 5;

    /// Builds a vocabulary from reserved tokens followed by `extra` in order.
    /// Duplicates and reserved names in `extra` are skipped.
    pub fn with_tokens<I: IntoIterator<Item = String>>(extra: I) -> Self {
        let mut tokens: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        tokens.extend(extra);
        Vocabulary::from_tokens(tokens)
    }

    fn from_tokens(all: Vec<String>) -> Self {
        let mut tokens = Vec::with_capacity(all.len());
        let mut index = HashMap::new();
        for t in all {
            if !index.contains_key(&t) {
                index.insert(t.clone(), tokens.len());
                tokens.push(t);
            }
        }
        Vocabulary { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn non_reserved_len(&self) -> usize {
        self.tokens.len() - RESERVED.len()
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn id_or_unk(&self, token: &str) -> TokenId {
        self.id(token).unwrap_or(Self::UNK_ID)
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn encode<S: AsRef<str>>(&self, words: &[S]) -> Vec<TokenId> {
        words.iter().map(|w| self.id_or_unk(w.as_ref())).collect()
    }

    pub fn decode(&self, ids: &[TokenId]) -> Vec<String> {
        ids.iter()
            .map(|&id| self.token(id).unwrap_or(UNK).to_string())
            .collect()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Collects every token of the corpus; ordering is by descending frequency,
/// ties broken lexicographically.
pub fn build_vocabulary(corpus: &Corpus) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for d in &corpus.dialogues {
        for t in &d.turns {
            for w in t.user.iter().chain(&t.system) {
                *counts.entry(w.as_str()).or_default() += 1;
            }
        }
    }
    let mut words: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|(w, _)| !RESERVED.contains(w))
        .collect();
    words.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Ok(Vocabulary::with_tokens(words.into_iter().map(|(w, _)| w.to_string())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{tokens, Dialogue, Split, Turn};

    fn corpus_of(user: &str, system: &str) -> Corpus {
        Corpus {
            dialogues: vec![Dialogue {
                turns: vec![Turn { index: 1, user: tokens(user), system: tokens(system) }],
                goal: None,
            }],
            split: Split::Train,
        }
    }

    #[test]
    fn reserved_ids_fixed() {
        let v = Vocabulary::with_tokens(Vec::new());
        assert_eq!(v.id(PAD), Some(0));
        assert_eq!(v.id(UNK), Some(Vocabulary::UNK_ID));
        assert_eq!(v.id(EOS), Some(Vocabulary::EOS_ID));
        assert_eq!(v.id(SILENCE), Some(Vocabulary::SILENCE_ID));
        assert_eq!(v.id(USER_MARK), Some(Vocabulary::USER_ID));
        assert_eq!(v.id(SYSTEM_MARK), Some(Vocabulary::SYSTEM_ID));
    }

    #[test]
    fn single_token_corpus() {
        let v = build_vocabulary(&corpus_of("hi", "hi")).unwrap();
        assert_eq!(v.non_reserved_len(), 1);
        assert_eq!(v.token(RESERVED.len()), Some("hi"));
    }

    #[test]
    fn silence_is_not_duplicated() {
        let v = build_vocabulary(&corpus_of("<SILENCE>", "ok")).unwrap();
        assert_eq!(v.non_reserved_len(), 1);
    }

    #[test]
    fn frequency_then_lexicographic() {
        let v = build_vocabulary(&corpus_of("b a c c", "b")).unwrap();
        let order: Vec<_> = v.tokens()[RESERVED.len()..].to_vec();
        assert_eq!(order, tokens("b c a"));
    }

    #[test]
    fn empty_corpus_rejected() {
        assert!(matches!(build_vocabulary(&Corpus::new(Split::Train)), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn unknown_maps_to_unk_and_json_round_trip() {
        let v = build_vocabulary(&corpus_of("hi there", "hello")).unwrap();
        assert_eq!(v.encode(&["hi", "zzz"]), vec![v.id("hi").unwrap(), Vocabulary::UNK_ID]);
        let json = serde_json::to_string(&v).unwrap();
        let back: Vocabulary = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
        for id in 0..v.len() {
            assert_eq!(v.id(v.token(id).unwrap()), Some(id));
        }
    }
}
