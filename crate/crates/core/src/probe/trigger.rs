use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{history_tokens, tokens, Slot, SlotCatalog, TokenId, Vocabulary, API_CALL, SILENCE, SYSTEM_MARK, USER_MARK};
use crate::disfluency::{strip_disfluencies, AnnotatedCorpus};
use crate::error::Result;
use crate::model::Seq2Seq;
use crate::numerics::Real;

const QUERIES_PER_CHUNK: usize = 64;

/// System utterance and user reply appended after each user turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriggerPrompt {
    pub system: Vec<String>,
    pub user: Vec<String>,
}

impl Default for TriggerPrompt {
    /// The corpus's own pre-API utterance.
    fn default() -> Self {
        TriggerPrompt { system: tokens("ok let me look into some options for you"), user: vec![SILENCE.to_string()] }
    }
}

impl TriggerPrompt {
    /// The shortened wording that is not itself a corpus utterance.
    pub fn printed() -> Self {
        TriggerPrompt { system: tokens("let me look some options for you"), user: vec![SILENCE.to_string()] }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TriggerReport {
    pub prompts: usize,
    /// Responses that begin with the API-call token.
    pub api_responses: usize,
    /// API responses with at least one fillable slot; the accuracy base.
    pub scored_calls: usize,
    /// Scored calls whose every fillable slot is right.
    pub correct_calls: usize,
    pub scored_slots: usize,
    pub correct_slots: usize,
}

impl TriggerReport {
    pub fn success_rate(&self) -> Option<f64> {
        (self.prompts > 0).then(|| 100.0 * self.api_responses as f64 / self.prompts as f64)
    }

    /// Partial-call accuracy in percent.
    pub fn accuracy(&self) -> Option<f64> {
        (self.scored_calls > 0).then(|| 100.0 * self.correct_calls as f64 / self.scored_calls as f64)
    }

    pub fn slot_accuracy(&self) -> Option<f64> {
        (self.scored_slots > 0).then(|| 100.0 * self.correct_slots as f64 / self.scored_slots as f64)
    }
}

impl fmt::Display for TriggerReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pct = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.1}"));
        write!(
            f,
            "accuracy {} (slots {})  prompt success {} ({}/{})",
            pct(self.accuracy()),
            pct(self.slot_accuracy()),
            pct(self.success_rate()),
            self.api_responses,
            self.prompts
        )
    }
}

/// Slot values known after the user's turns so far, corrections applied.
pub fn fillable_slots<'a, I>(fluent_user_turns: I, catalog: &SlotCatalog) -> [Option<String>; 4]
where
    I: IntoIterator<Item = &'a [String]>,
{
    let mut out: [Option<String>; 4] = Default::default();
    for turn in fluent_user_turns {
        for w in turn {
            if let Some(s) = catalog.slot_of(w) {
                out[s.index()] = Some(w.clone());
            }
        }
    }
    out
}

/// Scores one response against the fillable slots; `None` if it is no API call.
fn score(hyp: &[String], known: &[Option<String>; 4]) -> Option<(usize, usize)> {
    if hyp.first().map(String::as_str) != Some(API_CALL) {
        return None;
    }
    let mut scored = 0;
    let mut correct = 0;
    for slot in Slot::ALL {
        if let Some(v) = &known[slot.index()] {
            scored += 1;
            correct += (hyp.get(1 + slot.index()) == Some(v)) as usize;
        }
    }
    Some((scored, correct))
}

/// After every user turn except the closing one, appends the prompt and
/// decodes; API-call responses are scored on the slots mentioned so far.
pub fn trigger_api_calls<T: Real>(
    model: &Seq2Seq<T>,
    vocab: &Vocabulary,
    corpus: &AnnotatedCorpus,
    prompt: &TriggerPrompt,
    catalog: &SlotCatalog,
) -> Result<TriggerReport> {
    let mut queries: Vec<(Vec<TokenId>, [Option<String>; 4])> = Vec::new();
    for d in &corpus.dialogues {
        let surface = d.surface();
        let fluent: Vec<Vec<String>> = d.turns.iter().map(|t| strip_disfluencies(&t.user)).collect();
        for k in 0..d.turns.len().saturating_sub(1) {
            let mut h = history_tokens(&surface.turns, k);
            h.push(SYSTEM_MARK.to_string());
            h.extend(prompt.system.iter().cloned());
            h.push(USER_MARK.to_string());
            h.extend(prompt.user.iter().cloned());
            queries.push((vocab.encode(&h), fillable_slots(fluent[..=k].iter().map(|v| v.as_slice()), catalog)));
        }
    }
    let mut report = TriggerReport { prompts: queries.len(), ..Default::default() };
    for chunk in queries.chunks(QUERIES_PER_CHUNK) {
        let seqs: Vec<&[TokenId]> = chunk.iter().map(|(s, _)| s.as_slice()).collect();
        let qs: Vec<(usize, usize)> = seqs.iter().enumerate().map(|(i, s)| (i, s.len())).collect();
        for (d, (_, known)) in model.decode_batch(&seqs, &qs, model.config().max_decode_len)?.iter().zip(chunk) {
            let hyp = vocab.decode(&d.tokens);
            let Some((scored, correct)) = score(&hyp, known) else { continue };
            report.api_responses += 1;
            if scored > 0 {
                report.scored_calls += 1;
                report.correct_calls += (scored == correct) as usize;
                report.scored_slots += scored;
                report.correct_slots += correct;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn only_mentioned_slots_are_scored() {
        let cat = SlotCatalog::default();
        let turns = [tokens("hi"), tokens("i want french food in rome"), tokens("actually in paris")];
        let known = fillable_slots(turns.iter().map(|t| t.as_slice()), &cat);
        assert_eq!(known[Slot::Cuisine.index()].as_deref(), Some("french"));
        assert_eq!(known[Slot::Location.index()].as_deref(), Some("paris"));
        assert_eq!(known[Slot::PartySize.index()], None);
        assert_eq!(score(&tokens("api_call french paris two cheap"), &known), Some((2, 2)));
        assert_eq!(score(&tokens("api_call french rome"), &known), Some((2, 1)));
        assert_eq!(score(&tokens("api_call"), &known), Some((2, 0)));
        assert_eq!(score(&tokens("where should it be"), &known), None);
    }

    #[test]
    fn report_rates() {
        let r = TriggerReport { prompts: 10, api_responses: 8, scored_calls: 4, correct_calls: 3, scored_slots: 8, correct_slots: 7 };
        assert_eq!(r.success_rate(), Some(80.0));
        assert_eq!(r.accuracy(), Some(75.0));
        assert_eq!(r.slot_accuracy(), Some(87.5));
        assert_eq!(TriggerReport::default().accuracy(), None);
    }
}
