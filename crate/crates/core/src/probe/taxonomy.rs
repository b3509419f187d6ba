use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{SystemUtterances, API_CALL};
use crate::experiment::{Category, PredictionRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    /// The response belongs later in the canonical sequence.
    JumpAhead,
    JumpBack,
    Other,
}

/// Non-API system utterances in dialogue order; an API call ranks after all of them.
pub fn canonical_order(system: &SystemUtterances) -> Vec<String> {
    system.canonical_order().into_iter().map(str::to_string).collect()
}

fn rank(utterance: &str, order: &[String]) -> Option<usize> {
    if utterance.split(' ').next() == Some(API_CALL) {
        return Some(order.len());
    }
    order.iter().position(|u| u == utterance)
}

pub fn classify(gold: &str, hypothesis: &str, order: &[String]) -> ErrorKind {
    match (rank(gold, order), rank(hypothesis, order)) {
        (Some(g), Some(h)) if h > g => ErrorKind::JumpAhead,
        (Some(g), Some(h)) if h < g => ErrorKind::JumpBack,
        _ => ErrorKind::Other,
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TaxonomyReport {
    pub errors: usize,
    pub jump_ahead: usize,
    pub jump_back: usize,
    pub other: usize,
    /// 0-based turn position → wrong responses there.
    pub by_turn: BTreeMap<usize, usize>,
}

impl TaxonomyReport {
    pub fn jump_ahead_fraction(&self) -> Option<f64> {
        (self.errors > 0).then(|| self.jump_ahead as f64 / self.errors as f64)
    }

    /// Share of errors on the dialogue's first turn.
    pub fn initial_fraction(&self) -> Option<f64> {
        (self.errors > 0).then(|| self.by_turn.get(&0).copied().unwrap_or(0) as f64 / self.errors as f64)
    }
}

impl fmt::Display for TaxonomyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pct = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{:.1}", 100.0 * v));
        writeln!(
            f,
            "utterance errors {}: jump-ahead {} ({}%), jump-back {}, other {}; first turn {}%",
            self.errors,
            self.jump_ahead,
            pct(self.jump_ahead_fraction()),
            self.jump_back,
            self.other,
            pct(self.initial_fraction())
        )?;
        for (turn, n) in &self.by_turn {
            writeln!(f, "  turn {:>2}: {n}", turn + 1)?;
        }
        Ok(())
    }
}

/// Classifies every wrong non-API response.
pub fn error_taxonomy(records: &[PredictionRecord], order: &[String]) -> TaxonomyReport {
    let mut out = TaxonomyReport::default();
    for r in records.iter().filter(|r| r.category == Category::Utterance && r.hypothesis != r.gold) {
        out.errors += 1;
        match classify(&r.gold, &r.hypothesis, order) {
            ErrorKind::JumpAhead => out.jump_ahead += 1,
            ErrorKind::JumpBack => out.jump_back += 1,
            ErrorKind::Other => out.other += 1,
        }
        *out.by_turn.entry(r.turn).or_insert(0) += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(turn: usize, gold: &str, hyp: &str) -> PredictionRecord {
        PredictionRecord {
            dialogue: 0,
            turn,
            category: if gold.starts_with(API_CALL) { Category::Api } else { Category::Utterance },
            gold: gold.into(),
            hypothesis: hyp.into(),
            word_acc: 0.0,
            seq_acc: (gold == hyp) as u8 as f64,
        }
    }

    #[test]
    fn correct_predictions_give_empty_taxonomy() {
        let order = canonical_order(&SystemUtterances::default());
        let recs = vec![rec(0, &order[0], &order[0]), rec(1, &order[1], &order[1])];
        assert_eq!(error_taxonomy(&recs, &order), TaxonomyReport::default());
        assert_eq!(TaxonomyReport::default().initial_fraction(), None);
    }

    #[test]
    fn greeting_answered_with_acknowledgement_jumps_ahead() {
        let order = canonical_order(&SystemUtterances::default());
        assert_eq!(order[0], "hello what can i help you with today");
        assert_eq!(order[1], "i'm on it");
        assert_eq!(order.len(), 7);
        let recs = vec![
            rec(0, &order[0], "i'm on it"),
            rec(2, &order[3], &order[2]),
            rec(3, &order[4], "api_call french paris two cheap"),
            rec(4, &order[5], "hello paris"),
            rec(5, "api_call a b c d", "api_call a b c e"),
        ];
        let t = error_taxonomy(&recs, &order);
        assert_eq!((t.errors, t.jump_ahead, t.jump_back, t.other), (4, 2, 1, 1));
        assert_eq!(t.initial_fraction(), Some(0.25));
        assert_eq!(t.jump_ahead_fraction(), Some(0.5));
        assert_eq!(classify(&order[6], &order[2], &order), ErrorKind::JumpBack);
    }
}
