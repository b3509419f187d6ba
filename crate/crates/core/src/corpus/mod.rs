//! Synthetic restaurant-reservation dialogues in the bAbI Task 1 style.
//!
//! A dialogue opens with a greeting, continues with a request that
//! volunteers some subset of the four slots, lets the system ask for the
//! remaining slots in canonical order and ends with an API call that encodes
//! the user's goal.

mod babi;
mod catalog;
mod generate;
mod history;
mod stats;
mod templates;
mod vocab;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use babi::{parse_babi, parse_babi_lenient, serialize_babi, API_CALL};
pub use catalog::{PerSlot, Slot, SlotCatalog};
pub use generate::{generate_corpus, generate_dialogue, sample_goal, CorpusBundle, CorpusConfig, SplitSizes};
pub use history::{history_len, history_tokens};
pub use stats::{corpus_stats, Stats};
pub use templates::{fill, tokens, SystemUtterances, TemplateSet, VALUE};
pub use vocab::{build_vocabulary, TokenId, Vocabulary, EOS, PAD, RESERVED, SYSTEM_MARK, UNK, USER_MARK};

pub const SILENCE: &str = "<SILENCE>";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UserGoal {
    pub cuisine: String,
    pub location: String,
    pub party_size: String,
    pub price_range: String,
    pub oov: bool,
}

impl UserGoal {
    pub fn value(&self, slot: Slot) -> &str {
        match slot {
            Slot::Cuisine => &self.cuisine,
            Slot::Location => &self.location,
            Slot::PartySize => &self.party_size,
            Slot::PriceRange => &self.price_range,
        }
    }

    pub fn api_call(&self, api_token: &str) -> Vec<String> {
        let mut call = vec![api_token.to_string()];
        call.extend(Slot::ALL.iter().map(|&s| self.value(s).to_string()));
        call
    }

    /// Reads a goal back from an `api_call a b c d` utterance.
    pub fn from_api_call(call: &[String], api_token: &str, oov: bool) -> Option<UserGoal> {
        match call {
            [head, cuisine, location, party_size, price_range] if head == api_token => Some(UserGoal {
                cuisine: cuisine.clone(),
                location: location.clone(),
                party_size: party_size.clone(),
                price_range: price_range.clone(),
                oov,
            }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub index: usize,
    pub user: Vec<String>,
    pub system: Vec<String>,
}

impl Turn {
    pub fn is_silent(&self) -> bool {
        self.user.len() == 1 && self.user[0] == SILENCE
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dialogue {
    pub turns: Vec<Turn>,
    /// Absent only for dialogues read leniently without a closing API call.
    pub goal: Option<UserGoal>,
}

impl Dialogue {
    pub fn api_call(&self) -> Option<&[String]> {
        self.turns.last().map(|t| t.system.as_slice())
    }

    pub fn user_turns(&self) -> impl Iterator<Item = &Vec<String>> {
        self.turns.iter().map(|t| &t.user)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Dev,
    Test,
    TestOov,
}

impl Split {
    pub const ALL: [Split; 4] = [Split::Train, Split::Dev, Split::Test, Split::TestOov];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
            Split::TestOov => "test_oov",
        }
    }

    pub fn file_name(self) -> String {
        format!("{}.txt", self.name())
    }

    pub fn is_oov(self) -> bool {
        self == Split::TestOov
    }

    pub fn parse(name: &str) -> Option<Split> {
        Split::ALL.into_iter().find(|s| s.name() == name)
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub dialogues: Vec<Dialogue>,
    pub split: Split,
}

impl Corpus {
    pub fn new(split: Split) -> Self {
        Corpus { dialogues: Vec::new(), split }
    }

    pub fn len(&self) -> usize {
        self.dialogues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dialogues.is_empty()
    }
}
