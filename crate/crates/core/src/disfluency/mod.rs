//! bAbI+-style disfluency injection with token-level annotation.
//!
//! User turns receive at most one of three disfluency patterns: a hesitation
//! (a filler inside the utterance), a restart (an abandoned prefix repeated
//! from the beginning) or a self-correction (a wrong slot phrase replaced by
//! the right one). Every inserted token carries a structural label so that
//! the fluent source can be recovered and probes can be trained on it.

mod augment;
mod insert;
mod sidecar;

use serde::{Deserialize, Serialize};

use crate::corpus::{PerSlot, Slot, SlotCatalog, Turn, UserGoal};
use crate::error::{Error, Result};

pub use augment::{augment_corpus, augment_dialogue, measure_rates, AnnotatedCorpus, DisfluencyRates};
pub use insert::{
    correct_at, find_correction_candidates, hesitate_at, insert_correction, insert_hesitation, insert_restart,
    restart_with, CorrectionCandidate,
};
pub use sidecar::{parse_sidecar, write_sidecar};

/// Structural role of a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Label {
    Other = 0,
    Reparandum = 1,
    EditingTerm = 2,
    Repair = 3,
}

impl Label {
    pub const ALL: [Label; 4] = [Label::Other, Label::Reparandum, Label::EditingTerm, Label::Repair];

    pub fn from_u8(v: u8) -> Option<Label> {
        Label::ALL.get(v as usize).copied()
    }

    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::Other => "other",
            Label::Reparandum => "reparandum",
            Label::EditingTerm => "editing_term",
            Label::Repair => "repair",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisfluencyKind {
    None,
    Hesitation,
    Restart,
    Correction,
}

/// How often corrections and restarts carry an explicit editing term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EtPolicy {
    #[serde(rename = "noET")]
    NoEt,
    #[serde(rename = "realET")]
    RealEt,
    #[serde(rename = "fullET")]
    FullEt,
}

impl EtPolicy {
    pub const ALL: [EtPolicy; 3] = [EtPolicy::NoEt, EtPolicy::RealEt, EtPolicy::FullEt];

    pub fn rate(self) -> f64 {
        match self {
            EtPolicy::NoEt => 0.0,
            EtPolicy::RealEt => 0.2,
            EtPolicy::FullEt => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EtPolicy::NoEt => "noET",
            EtPolicy::RealEt => "realET",
            EtPolicy::FullEt => "fullET",
        }
    }

    pub fn parse(name: &str) -> Option<EtPolicy> {
        EtPolicy::ALL.into_iter().find(|p| p.name().eq_ignore_ascii_case(name))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisfluencyConfig {
    pub p_hesitation: f64,
    pub p_restart: f64,
    pub p_correction: f64,
    pub et_policy: EtPolicy,
    /// Overrides the rate implied by `et_policy` when set.
    pub et_rate: Option<f64>,
    pub filler_lexicon: Vec<String>,
    pub et_lexicon: Vec<String>,
    pub restart_et_lexicon: Vec<String>,
    /// Phrase shapes a self-correction may replace; `{}` marks the value.
    pub correction_patterns: PerSlot<Vec<String>>,
    pub catalog: SlotCatalog,
}

fn list(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl Default for DisfluencyConfig {
    fn default() -> Self {
        DisfluencyConfig {
            p_hesitation: 0.21,
            p_restart: 0.40,
            p_correction: 0.05,
            et_policy: EtPolicy::FullEt,
            et_rate: None,
            filler_lexicon: list(&["uhm", "uh"]),
            et_lexicon: list(&["sorry", "no", "oh no", "no sorry", "uhm sorry"]),
            restart_et_lexicon: list(&["uhm yeah"]),
            correction_patterns: PerSlot {
                cuisine: list(&["with {} food", "with {} cuisine", "{} food", "{} cuisine", "a {}", "{}"]),
                location: list(&["in {}", "{}"]),
                party_size: list(&["for {} people", "for {}", "{} people", "{}"]),
                price_range: list(&["in a {} price range", "a {} price range", "a {}", "{}"]),
            },
            catalog: SlotCatalog::default(),
        }
    }
}

impl DisfluencyConfig {
    pub fn with_policy(policy: EtPolicy) -> Self {
        DisfluencyConfig { et_policy: policy, ..Default::default() }
    }

    pub fn et_rate(&self) -> f64 {
        self.et_rate.unwrap_or_else(|| self.et_policy.rate())
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [self.p_hesitation, self.p_restart, self.p_correction, self.et_rate()];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config("disfluency probabilities must lie in [0, 1]".into()));
        }
        if self.p_hesitation + self.p_restart + self.p_correction > 1.0 + 1e-12 {
            return Err(Error::Config("per-turn disfluency probabilities sum above 1".into()));
        }
        if self.filler_lexicon.is_empty() || self.et_lexicon.is_empty() || self.restart_et_lexicon.is_empty() {
            return Err(Error::Config("filler and editing-term lexicons must be nonempty".into()));
        }
        self.catalog.validate()
    }
}

/// A user utterance with one structural label per token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedUtterance {
    pub tokens: Vec<String>,
    pub labels: Vec<Label>,
    pub kind: DisfluencyKind,
    pub corrected_slot: Option<Slot>,
}

fn spans(labels: &[Label]) -> Vec<(Label, usize, usize)> {
    let mut out: Vec<(Label, usize, usize)> = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        match out.last_mut() {
            Some((prev, _, end)) if *prev == l => *end = i + 1,
            _ => out.push((l, i, i + 1)),
        }
    }
    out
}

impl AnnotatedUtterance {
    pub fn fluent(tokens: Vec<String>) -> Self {
        let labels = vec![Label::Other; tokens.len()];
        AnnotatedUtterance { tokens, labels, kind: DisfluencyKind::None, corrected_slot: None }
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn has_editing_term(&self) -> bool {
        self.labels.contains(&Label::EditingTerm)
    }

    fn span_tokens(&self, label: Label) -> Vec<&str> {
        self.tokens
            .iter()
            .zip(&self.labels)
            .filter(|(_, &l)| l == label)
            .map(|(t, _)| t.as_str())
            .collect()
    }

    /// Checks the label layout against the utterance's disfluency kind.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Alignment(format!("{msg}: {:?} / {:?}", self.tokens, self.labels)));
        if self.tokens.len() != self.labels.len() {
            return bad("label count differs from token count");
        }
        let layout: Vec<Label> = spans(&self.labels).into_iter().map(|(l, _, _)| l).collect();
        use Label::*;
        let ok = match self.kind {
            DisfluencyKind::None => layout.iter().all(|&l| l == Other),
            DisfluencyKind::Hesitation => self.count(EditingTerm) == 1 && layout.iter().all(|&l| l == Other || l == EditingTerm),
            DisfluencyKind::Restart => {
                matches!(layout.as_slice(), [Reparandum, Repair, ..] | [Reparandum, EditingTerm, Repair, ..])
                    && layout.iter().skip_while(|&&l| l != Repair).skip(1).all(|&l| l == Other)
                    && self.span_tokens(Reparandum) == self.span_tokens(Repair)
            }
            DisfluencyKind::Correction => {
                let core: Vec<Label> = layout.iter().copied().skip_while(|&l| l == Other).collect();
                let shape_ok = matches!(core.as_slice(), [Reparandum, Repair, ..] | [Reparandum, EditingTerm, Repair, ..])
                    && core.iter().skip_while(|&&l| l != Repair).skip(1).all(|&l| l == Other);
                shape_ok && self.span_tokens(Reparandum) != self.span_tokens(Repair)
            }
        };
        if ok {
            Ok(())
        } else {
            bad("labels do not match the disfluency kind")
        }
    }
}

/// Drops reparandum and editing-term tokens.
pub fn strip_disfluencies(a: &AnnotatedUtterance) -> Vec<String> {
    a.tokens
        .iter()
        .zip(&a.labels)
        .filter(|(_, &l)| l == Label::Other || l == Label::Repair)
        .map(|(t, _)| t.clone())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedTurn {
    pub index: usize,
    pub user: AnnotatedUtterance,
    pub system: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedDialogue {
    pub turns: Vec<AnnotatedTurn>,
    pub goal: Option<UserGoal>,
}

impl AnnotatedDialogue {
    pub fn from_fluent(d: &crate::corpus::Dialogue) -> Self {
        AnnotatedDialogue {
            turns: d
                .turns
                .iter()
                .map(|t| AnnotatedTurn {
                    index: t.index,
                    user: AnnotatedUtterance::fluent(t.user.clone()),
                    system: t.system.clone(),
                })
                .collect(),
            goal: d.goal.clone(),
        }
    }

    /// The disfluent surface dialogue.
    pub fn surface(&self) -> crate::corpus::Dialogue {
        self.map_user(|u| u.tokens.clone())
    }

    /// The dialogue with every disfluency removed.
    pub fn fluent(&self) -> crate::corpus::Dialogue {
        self.map_user(strip_disfluencies)
    }

    fn map_user(&self, f: impl Fn(&AnnotatedUtterance) -> Vec<String>) -> crate::corpus::Dialogue {
        crate::corpus::Dialogue {
            turns: self
                .turns
                .iter()
                .map(|t| Turn { index: t.index, user: f(&t.user), system: t.system.clone() })
                .collect(),
            goal: self.goal.clone(),
        }
    }
}

/// Labels aligned with the encoder input of the full dialogue history:
/// speaker markers and system tokens are `Other`.
pub fn token_labels(a: &AnnotatedDialogue) -> Result<Vec<Label>> {
    let Some(last) = a.turns.len().checked_sub(1) else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    for (i, t) in a.turns.iter().enumerate() {
        if t.user.labels.len() != t.user.tokens.len() {
            return Err(Error::Alignment(format!("turn {}: labels and tokens differ in length", t.index)));
        }
        out.push(Label::Other);
        out.extend(&t.user.labels);
        if i < last {
            out.push(Label::Other);
            out.extend(std::iter::repeat_n(Label::Other, t.system.len()));
        }
    }
    let expected = crate::corpus::history_len(&a.surface().turns, last);
    if out.len() != expected {
        return Err(Error::Alignment(format!("{} labels for {expected} encoder tokens", out.len())));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokens;
    use Label::*;

    fn price_correction() -> AnnotatedUtterance {
        AnnotatedUtterance {
            tokens: tokens("with uhm yeah with british cuisine in a moderate no sorry a cheap price range"),
            labels: vec![
                Reparandum, EditingTerm, EditingTerm, Repair, Other, Other, Other, Reparandum, Reparandum,
                EditingTerm, EditingTerm, Repair, Repair, Other, Other,
            ],
            kind: DisfluencyKind::Correction,
            corrected_slot: Some(Slot::PriceRange),
        }
    }

    #[test]
    fn price_correction_strips_to_fluent_request() {
        assert_eq!(strip_disfluencies(&price_correction()), tokens("with british cuisine in a cheap price range"));
    }

    #[test]
    fn price_correction_token_labels() {
        let d = AnnotatedDialogue {
            turns: vec![AnnotatedTurn { index: 1, user: price_correction(), system: tokens("i'm on it") }],
            goal: None,
        };
        let labels: Vec<u8> = token_labels(&d).unwrap().into_iter().map(Label::as_u8).collect();
        // leading 0 is the user marker
        assert_eq!(labels[0], 0);
        assert_eq!(&labels[1..], &[1, 2, 2, 3, 0, 0, 0, 1, 1, 2, 2, 3, 3, 0, 0]);
    }

    #[test]
    fn fluent_dialogue_labels_all_zero() {
        let d = AnnotatedDialogue {
            turns: vec![
                AnnotatedTurn { index: 1, user: AnnotatedUtterance::fluent(tokens("hi")), system: tokens("hello") },
                AnnotatedTurn {
                    index: 2,
                    user: AnnotatedUtterance::fluent(tokens("<SILENCE>")),
                    system: tokens("api_call a b c d"),
                },
            ],
            goal: None,
        };
        let labels = token_labels(&d).unwrap();
        assert_eq!(labels.len(), 6);
        assert!(labels.iter().all(|&l| l == Other));
    }

    #[test]
    fn misaligned_labels_rejected() {
        let mut u = price_correction();
        u.labels.pop();
        let d = AnnotatedDialogue { turns: vec![AnnotatedTurn { index: 1, user: u, system: vec![] }], goal: None };
        assert!(matches!(token_labels(&d), Err(Error::Alignment(_))));
    }

    #[test]
    fn validate_catches_bad_restart() {
        let u = AnnotatedUtterance {
            tokens: tokens("good morning good evening"),
            labels: vec![Reparandum, Reparandum, Repair, Repair],
            kind: DisfluencyKind::Restart,
            corrected_slot: None,
        };
        assert!(u.validate().is_err());
    }

    #[test]
    fn policies() {
        assert_eq!(EtPolicy::parse("realet"), Some(EtPolicy::RealEt));
        assert_eq!(DisfluencyConfig::with_policy(EtPolicy::NoEt).et_rate(), 0.0);
        DisfluencyConfig::default().validate().unwrap();
        let mut c = DisfluencyConfig::default();
        c.p_restart = 0.9;
        assert!(c.validate().is_err());
    }
}
