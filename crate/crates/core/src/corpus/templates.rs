use serde::{Deserialize, Serialize};

use super::catalog::{PerSlot, Slot};
use crate::error::{Error, Result};

/// Placeholder for the slot value inside a phrase template.
pub const VALUE: &str = "{}";

/// The fixed system-side utterances of the task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemUtterances {
    pub greeting: String,
    pub acknowledge: String,
    pub ask: PerSlot<String>,
    pub searching: String,
    pub api_call_token: String,
}

impl Default for SystemUtterances {
    fn default() -> Self {
        SystemUtterances {
            greeting: "hello what can i help you with today".into(),
            acknowledge: "i'm on it".into(),
            ask: PerSlot {
                cuisine: "any preference on a type of cuisine".into(),
                location: "where should it be".into(),
                party_size: "how many people would be in your party".into(),
                price_range: "which price range are looking for".into(),
            },
            searching: "ok let me look into some options for you".into(),
            api_call_token: "api_call".into(),
        }
    }
}

impl SystemUtterances {
    /// The seven non-API system utterances in the order a dialogue uses them.
    pub fn canonical_order(&self) -> Vec<&str> {
        let mut out = vec![self.greeting.as_str(), self.acknowledge.as_str()];
        out.extend(Slot::ALL.iter().map(|&s| self.ask.get(s).as_str()));
        out.push(self.searching.as_str());
        out
    }
}

/// User-side templates. `{}` marks where the slot value goes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateSet {
    pub greetings: Vec<String>,
    pub request_frames: Vec<String>,
    /// Phrases appended to a request frame, one per volunteered slot.
    pub request_phrases: PerSlot<Vec<String>>,
    /// Stand-alone answers to a slot question.
    pub answers: PerSlot<Vec<String>>,
    /// Probability that the opening request mentions a given slot.
    pub p_mention: f64,
    pub system: SystemUtterances,
}

fn list(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl Default for TemplateSet {
    fn default() -> Self {
        TemplateSet {
            greetings: list(&["hi", "hello", "good morning", "hello there"]),
            request_frames: list(&[
                "can you make a restaurant reservation",
                "i'd like to book a table",
                "may i have a table",
                "i would like to make a reservation",
            ]),
            request_phrases: PerSlot {
                cuisine: list(&["with {} food", "with {} cuisine"]),
                location: list(&["in {}"]),
                party_size: list(&["for {} people", "for {}"]),
                price_range: list(&["in a {} price range"]),
            },
            answers: PerSlot {
                cuisine: list(&["i love {} food", "with {} cuisine please", "i would like {} food"]),
                location: list(&["in {} please", "i want it in {}", "somewhere in {}"]),
                party_size: list(&["we will be {}", "for {} people please", "there will be {} of us"]),
                price_range: list(&[
                    "i am looking for a {} restaurant",
                    "in a {} price range please",
                    "a {} one please",
                ]),
            },
            p_mention: 0.5,
            system: SystemUtterances::default(),
        }
    }
}

impl TemplateSet {
    pub fn validate(&self) -> Result<()> {
        let nonempty = |name: &str, items: &[String]| {
            if items.is_empty() {
                Err(Error::Config(format!("template list {name} is empty")))
            } else {
                Ok(())
            }
        };
        nonempty("greetings", &self.greetings)?;
        nonempty("request_frames", &self.request_frames)?;
        for slot in Slot::ALL {
            nonempty(slot.name(), self.request_phrases.get(slot))?;
            nonempty(slot.name(), self.answers.get(slot))?;
            for t in self.request_phrases.get(slot).iter().chain(self.answers.get(slot)) {
                if t.split(' ').filter(|w| *w == VALUE).count() != 1 {
                    return Err(Error::Config(format!(
                        "template {t:?} must contain exactly one {VALUE}"
                    )));
                }
            }
        }
        if !(0.0..=1.0).contains(&self.p_mention) {
            return Err(Error::Config("p_mention must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Instantiates a phrase template with `value`.
pub fn fill(template: &str, value: &str) -> Vec<String> {
    template
        .split(' ')
        .filter(|w| !w.is_empty())
        .map(|w| if w == VALUE { value.to_string() } else { w.to_string() })
        .collect()
}

pub fn tokens(text: &str) -> Vec<String> {
    text.split(' ').filter(|w| !w.is_empty()).map(str::to_string).collect()
}
