use rand::Rng;
use serde::{Deserialize, Serialize};

use super::insert::{find_correction_candidates, insert_correction, insert_hesitation, insert_restart};
use super::{AnnotatedDialogue, AnnotatedTurn, AnnotatedUtterance, DisfluencyConfig, DisfluencyKind};
use crate::corpus::{Corpus, Dialogue, Split};
use crate::error::Result;
use crate::seed::{derive_rng, tag};

/// Applies at most one disfluency to every non-silent user turn.
pub fn augment_dialogue<R: Rng + ?Sized>(d: &Dialogue, cfg: &DisfluencyConfig, rng: &mut R) -> AnnotatedDialogue {
    augment_with(d, cfg, cfg.p_hesitation, rng)
}

/// `p_hesitation` applies only to turns long enough to take a filler.
fn augment_with<R: Rng + ?Sized>(d: &Dialogue, cfg: &DisfluencyConfig, p_hesitation: f64, rng: &mut R) -> AnnotatedDialogue {
    let turns = d
        .turns
        .iter()
        .map(|t| {
            let user = if t.is_silent() {
                AnnotatedUtterance::fluent(t.user.clone())
            } else {
                let draw: f64 = rng.gen();
                let u = &t.user;
                let p_h = if u.len() < 2 { cfg.p_hesitation } else { p_hesitation };
                if draw < p_h {
                    insert_hesitation(u, rng, cfg)
                } else if draw < p_h + cfg.p_restart {
                    insert_restart(u, rng, cfg)
                } else if draw < p_h + cfg.p_restart + cfg.p_correction {
                    let candidates = find_correction_candidates(u, rng, cfg);
                    match insert_correction(u, &candidates, rng, cfg) {
                        Ok(a) => a,
                        Err(_) => insert_hesitation(u, rng, cfg),
                    }
                } else {
                    AnnotatedUtterance::fluent(u.clone())
                }
            };
            AnnotatedTurn { index: t.index, user, system: t.system.clone() }
        })
        .collect();
    AnnotatedDialogue { turns, goal: d.goal.clone() }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedCorpus {
    pub dialogues: Vec<AnnotatedDialogue>,
    pub split: Split,
}

impl AnnotatedCorpus {
    pub fn from_fluent(corpus: &Corpus) -> Self {
        AnnotatedCorpus {
            dialogues: corpus.dialogues.iter().map(AnnotatedDialogue::from_fluent).collect(),
            split: corpus.split,
        }
    }

    /// The disfluent corpus as plain dialogues.
    pub fn surface(&self) -> Corpus {
        Corpus { dialogues: self.dialogues.iter().map(AnnotatedDialogue::surface).collect(), split: self.split }
    }

    pub fn fluent(&self) -> Corpus {
        Corpus { dialogues: self.dialogues.iter().map(AnnotatedDialogue::fluent).collect(), split: self.split }
    }
}

/// Hesitation probability for multi-token turns such that the corpus-wide
/// hesitation rate is `cfg.p_hesitation`; single-token turns cannot take one.
fn hesitation_on_hosts(corpus: &Corpus, cfg: &DisfluencyConfig) -> f64 {
    let (mut spoken, mut hosts) = (0usize, 0usize);
    for t in corpus.dialogues.iter().flat_map(|d| &d.turns).filter(|t| !t.is_silent()) {
        spoken += 1;
        hosts += usize::from(t.user.len() >= 2);
    }
    if hosts == 0 {
        return cfg.p_hesitation;
    }
    let room = (1.0 - cfg.p_restart - cfg.p_correction).max(0.0);
    (cfg.p_hesitation * spoken as f64 / hosts as f64).min(room).max(cfg.p_hesitation.min(room))
}

/// Dialogue `i` is augmented with a stream derived from `seed`, the split and `i`.
/// Multi-token turns get a raised hesitation probability so that the
/// corpus-wide rate matches the configured one.
pub fn augment_corpus(corpus: &Corpus, cfg: &DisfluencyConfig, seed: u64) -> Result<AnnotatedCorpus> {
    cfg.validate()?;
    let p_hesitation = hesitation_on_hosts(corpus, cfg);
    let dialogues = corpus
        .dialogues
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let mut rng = derive_rng(seed, &[tag("augment"), tag(corpus.split.name()), i as u64]);
            augment_with(d, cfg, p_hesitation, &mut rng)
        })
        .collect();
    Ok(AnnotatedCorpus { dialogues, split: corpus.split })
}

/// Per-turn disfluency frequencies over non-silent user turns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisfluencyRates {
    pub eligible_turns: usize,
    pub hesitation: f64,
    pub restart: f64,
    pub correction: f64,
    /// Restarts plus corrections.
    pub repairs: usize,
    /// Fraction of restarts and corrections that carry an editing term.
    pub et_fraction: f64,
    pub editing_term_tokens: usize,
}

pub fn measure_rates(corpus: &AnnotatedCorpus) -> DisfluencyRates {
    let mut eligible = 0usize;
    let mut counts = [0usize; 3];
    let mut with_et = 0usize;
    let mut et_tokens = 0usize;
    for d in &corpus.dialogues {
        for t in &d.turns {
            if t.user.tokens.len() == 1 && t.user.tokens[0] == crate::corpus::SILENCE {
                continue;
            }
            eligible += 1;
            et_tokens += t.user.count(super::Label::EditingTerm);
            match t.user.kind {
                DisfluencyKind::None => {}
                DisfluencyKind::Hesitation => counts[0] += 1,
                DisfluencyKind::Restart | DisfluencyKind::Correction => {
                    if t.user.kind == DisfluencyKind::Restart {
                        counts[1] += 1;
                    } else {
                        counts[2] += 1;
                    }
                    if t.user.has_editing_term() {
                        with_et += 1;
                    }
                }
            }
        }
    }
    let frac = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
    let repairs = counts[1] + counts[2];
    DisfluencyRates {
        eligible_turns: eligible,
        hesitation: frac(counts[0], eligible),
        restart: frac(counts[1], eligible),
        correction: frac(counts[2], eligible),
        repairs,
        et_fraction: frac(with_et, repairs),
        editing_term_tokens: et_tokens,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_corpus, CorpusConfig, SplitSizes};
    use crate::disfluency::{strip_disfluencies, token_labels, EtPolicy, Label};
    use crate::seed::rng;

    fn small_train(n: usize) -> Corpus {
        let mut cfg = CorpusConfig::with_seed(21);
        cfg.sizes = SplitSizes { train: n, dev: 0, test: 0, test_oov: 0 };
        generate_corpus(&cfg).unwrap().train
    }

    #[test]
    fn zero_probabilities_are_identity() {
        let cfg = DisfluencyConfig { p_hesitation: 0.0, p_restart: 0.0, p_correction: 0.0, ..Default::default() };
        for d in &small_train(50).dialogues {
            let a = augment_dialogue(d, &cfg, &mut rng(1));
            assert_eq!(&a.surface(), d);
        }
    }

    #[test]
    fn api_calls_and_system_turns_untouched() {
        let corpus = small_train(100);
        let a = augment_corpus(&corpus, &DisfluencyConfig::default(), 3).unwrap();
        for (src, aug) in corpus.dialogues.iter().zip(&a.dialogues) {
            assert_eq!(src.api_call(), aug.surface().api_call());
            for (s, t) in src.turns.iter().zip(&aug.turns) {
                assert_eq!(s.system, t.system);
                assert_eq!(strip_disfluencies(&t.user), s.user);
                t.user.validate().unwrap();
            }
            assert_eq!(&aug.fluent(), src);
        }
    }

    #[test]
    fn hesitation_rate_counts_single_token_turns() {
        // a third of the turns shrink to one token and cannot take a filler
        let mut corpus = small_train(300);
        for d in &mut corpus.dialogues {
            for (i, t) in d.turns.iter_mut().enumerate() {
                if !t.is_silent() && i % 3 == 1 {
                    t.user.truncate(1);
                }
            }
        }
        let rates = measure_rates(&augment_corpus(&corpus, &DisfluencyConfig::default(), 5).unwrap());
        assert!((rates.hesitation - 0.21).abs() <= 0.02, "{}", rates.hesitation);
        // the raised probability never eats into restarts and corrections
        let crowded = DisfluencyConfig { p_hesitation: 0.5, p_restart: 0.4, p_correction: 0.05, ..Default::default() };
        assert!((hesitation_on_hosts(&corpus, &crowded) - 0.55).abs() < 1e-12);
    }

    #[test]
    fn full_et_marks_every_repair() {
        let corpus = small_train(200);
        let a = augment_corpus(&corpus, &DisfluencyConfig::with_policy(EtPolicy::FullEt), 4).unwrap();
        let rates = measure_rates(&a);
        assert!(rates.repairs > 0);
        assert_eq!(rates.et_fraction, 1.0);
        let none = augment_corpus(&corpus, &DisfluencyConfig::with_policy(EtPolicy::NoEt), 4).unwrap();
        assert_eq!(measure_rates(&none).et_fraction, 0.0);
    }

    #[test]
    fn editing_term_label_count_matches_inserted_tokens() {
        // counting oracle: every label-2 token is a filler or an ET-lexicon word
        let corpus = small_train(100);
        let cfg = DisfluencyConfig::default();
        let a = augment_corpus(&corpus, &cfg, 9).unwrap();
        let mut labelled = 0;
        let mut inserted = 0;
        for (src, aug) in corpus.dialogues.iter().zip(&a.dialogues) {
            labelled += token_labels(aug).unwrap().iter().filter(|&&l| l == Label::EditingTerm).count();
            for (s, t) in src.turns.iter().zip(&aug.turns) {
                let kept = s.user.len() + t.user.count(Label::Reparandum);
                inserted += t.user.tokens.len() - kept;
            }
        }
        assert!(labelled > 0);
        assert_eq!(labelled, inserted);
    }

    #[test]
    fn deterministic_for_seed() {
        let corpus = small_train(30);
        let cfg = DisfluencyConfig::default();
        assert_eq!(augment_corpus(&corpus, &cfg, 5).unwrap(), augment_corpus(&corpus, &cfg, 5).unwrap());
        assert_ne!(augment_corpus(&corpus, &cfg, 5).unwrap(), augment_corpus(&corpus, &cfg, 6).unwrap());
    }
}
