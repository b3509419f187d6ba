use rand::seq::SliceRandom;
use rand::Rng;

use super::{AnnotatedUtterance, DisfluencyConfig, DisfluencyKind, Label};
use crate::corpus::{fill, tokens, Slot, VALUE};
use crate::error::{Error, Result};

/// Longest prefix a restart abandons.
pub const MAX_RESTART_PREFIX: usize = 3;

fn draw_phrase<R: Rng + ?Sized>(rng: &mut R, lexicon: &[String]) -> Vec<String> {
    tokens(lexicon.choose(rng).expect("lexicon is nonempty"))
}

fn maybe_et<R: Rng + ?Sized>(rng: &mut R, cfg: &DisfluencyConfig, lexicon: &[String]) -> Option<Vec<String>> {
    let rate = cfg.et_rate();
    if rate > 0.0 && rng.gen_bool(rate) {
        Some(draw_phrase(rng, lexicon))
    } else {
        None
    }
}

/// Inserts `filler` between `u[boundary - 1]` and `u[boundary]`.
pub fn hesitate_at(u: &[String], boundary: usize, filler: &str) -> AnnotatedUtterance {
    assert!(boundary >= 1 && boundary < u.len(), "boundary must be internal");
    let mut tokens = u.to_vec();
    tokens.insert(boundary, filler.to_string());
    let mut labels = vec![Label::Other; tokens.len()];
    labels[boundary] = Label::EditingTerm;
    AnnotatedUtterance { tokens, labels, kind: DisfluencyKind::Hesitation, corrected_slot: None }
}

pub fn insert_hesitation<R: Rng + ?Sized>(u: &[String], rng: &mut R, cfg: &DisfluencyConfig) -> AnnotatedUtterance {
    if u.len() < 2 {
        return AnnotatedUtterance::fluent(u.to_vec());
    }
    let boundary = rng.gen_range(1..u.len());
    let filler = cfg.filler_lexicon.choose(rng).expect("filler lexicon is nonempty");
    hesitate_at(u, boundary, filler)
}

/// Abandons the first `prefix_len` tokens, optionally signals the restart
/// with `et`, then says `u` from the beginning.
pub fn restart_with(u: &[String], prefix_len: usize, et: Option<&[String]>) -> AnnotatedUtterance {
    assert!(prefix_len >= 1 && prefix_len <= u.len());
    let mut tokens = u[..prefix_len].to_vec();
    let mut labels = vec![Label::Reparandum; prefix_len];
    if let Some(et) = et {
        tokens.extend_from_slice(et);
        labels.extend(std::iter::repeat_n(Label::EditingTerm, et.len()));
    }
    tokens.extend_from_slice(u);
    labels.extend(std::iter::repeat_n(Label::Repair, prefix_len));
    labels.extend(std::iter::repeat_n(Label::Other, u.len() - prefix_len));
    AnnotatedUtterance { tokens, labels, kind: DisfluencyKind::Restart, corrected_slot: None }
}

pub fn insert_restart<R: Rng + ?Sized>(u: &[String], rng: &mut R, cfg: &DisfluencyConfig) -> AnnotatedUtterance {
    if u.is_empty() {
        return AnnotatedUtterance::fluent(Vec::new());
    }
    let prefix_len = rng.gen_range(1..=u.len().min(MAX_RESTART_PREFIX));
    let et = maybe_et(rng, cfg, &cfg.restart_et_lexicon);
    restart_with(u, prefix_len, et.as_deref())
}

/// A slot phrase found in an utterance together with the wrong phrase that
/// may stand in front of it as a reparandum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrectionCandidate {
    pub slot: Slot,
    pub start: usize,
    pub right: Vec<String>,
    pub wrong: Vec<String>,
}

/// Replaces `u[start..start + right_len]` with `wrong`, an optional editing
/// term and the original phrase.
pub fn correct_at(
    u: &[String],
    start: usize,
    right_len: usize,
    wrong: &[String],
    et: Option<&[String]>,
    slot: Slot,
) -> AnnotatedUtterance {
    let end = start + right_len;
    let mut tokens = u[..start].to_vec();
    let mut labels = vec![Label::Other; start];
    tokens.extend_from_slice(wrong);
    labels.extend(std::iter::repeat_n(Label::Reparandum, wrong.len()));
    if let Some(et) = et {
        tokens.extend_from_slice(et);
        labels.extend(std::iter::repeat_n(Label::EditingTerm, et.len()));
    }
    tokens.extend_from_slice(&u[start..end]);
    labels.extend(std::iter::repeat_n(Label::Repair, right_len));
    tokens.extend_from_slice(&u[end..]);
    labels.extend(std::iter::repeat_n(Label::Other, u.len() - end));
    AnnotatedUtterance { tokens, labels, kind: DisfluencyKind::Correction, corrected_slot: Some(slot) }
}

fn pattern_matches(u: &[String], value_pos: usize, pattern: &[String]) -> Option<usize> {
    let hole = pattern.iter().position(|w| w == VALUE)?;
    let start = value_pos.checked_sub(hole)?;
    if start + pattern.len() > u.len() {
        return None;
    }
    let ok = pattern
        .iter()
        .zip(&u[start..])
        .all(|(p, w)| p == VALUE || p == w);
    ok.then_some(start)
}

/// Every slot value in `u`, each paired with one of the matching phrase
/// shapes (chosen uniformly) and a wrong in-vocabulary value of the same slot.
pub fn find_correction_candidates<R: Rng + ?Sized>(
    u: &[String],
    rng: &mut R,
    cfg: &DisfluencyConfig,
) -> Vec<CorrectionCandidate> {
    let mut out = Vec::new();
    for (pos, word) in u.iter().enumerate() {
        let Some(slot) = cfg.catalog.slot_of(word) else { continue };
        let matching: Vec<(usize, &String)> = cfg
            .correction_patterns
            .get(slot)
            .iter()
            .filter_map(|p| pattern_matches(u, pos, &tokens(p)).map(|start| (start, p)))
            .collect();
        let Some(&(start, pattern)) = matching.choose(rng) else { continue };
        let alternatives: Vec<&String> = cfg.catalog.values(slot, false).iter().filter(|v| *v != word).collect();
        let Some(wrong_value) = alternatives.choose(rng) else { continue };
        out.push(CorrectionCandidate {
            slot,
            start,
            right: fill(pattern, word),
            wrong: fill(pattern, wrong_value),
        });
    }
    out
}

pub fn insert_correction<R: Rng + ?Sized>(
    u: &[String],
    candidates: &[CorrectionCandidate],
    rng: &mut R,
    cfg: &DisfluencyConfig,
) -> Result<AnnotatedUtterance> {
    let present: Vec<&CorrectionCandidate> = candidates
        .iter()
        .filter(|c| {
            c.start + c.right.len() <= u.len() && u[c.start..c.start + c.right.len()] == c.right[..] && c.wrong != c.right
        })
        .collect();
    let chosen = present.choose(rng).ok_or(Error::NoSlotPhrase)?;
    let et = maybe_et(rng, cfg, &cfg.et_lexicon);
    Ok(correct_at(u, chosen.start, chosen.right.len(), &chosen.wrong, et.as_deref(), chosen.slot))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disfluency::{strip_disfluencies, EtPolicy};
    use crate::seed::rng;
    use proptest::prelude::*;
    use Label::*;

    #[test]
    fn hesitation_example() {
        let a = hesitate_at(&tokens("we will be eight"), 3, "uhm");
        assert_eq!(a.tokens, tokens("we will be uhm eight"));
        assert_eq!(a.labels, vec![Other, Other, Other, EditingTerm, Other]);
        a.validate().unwrap();
    }

    #[test]
    fn hesitation_on_single_token_is_noop() {
        let a = insert_hesitation(&tokens("hi"), &mut rng(1), &DisfluencyConfig::default());
        assert_eq!(a.tokens, tokens("hi"));
        assert_eq!(a.kind, DisfluencyKind::None);
    }

    #[test]
    fn hesitation_boundaries_are_internal_and_cover_all() {
        let u = tokens("we will be eight");
        let cfg = DisfluencyConfig::default();
        let mut seen = std::collections::BTreeSet::new();
        let mut r = rng(3);
        for _ in 0..200 {
            let a = insert_hesitation(&u, &mut r, &cfg);
            let pos = a.labels.iter().position(|&l| l == EditingTerm).unwrap();
            seen.insert(pos);
        }
        assert_eq!(seen.into_iter().collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    #[test]
    fn restart_example_full_et() {
        let cfg = DisfluencyConfig::with_policy(EtPolicy::FullEt);
        let a = restart_with(&tokens("good morning"), 2, Some(&tokens(&cfg.restart_et_lexicon[0])));
        assert_eq!(a.tokens, tokens("good morning uhm yeah good morning"));
        assert_eq!(a.labels, vec![Reparandum, Reparandum, EditingTerm, EditingTerm, Repair, Repair]);
        a.validate().unwrap();
    }

    #[test]
    fn restart_without_et() {
        let cfg = DisfluencyConfig::with_policy(EtPolicy::NoEt);
        let u = tokens("good morning");
        for seed in 0..20 {
            let a = insert_restart(&u, &mut rng(seed), &cfg);
            assert!(!a.has_editing_term());
            if a.count(Reparandum) == 2 {
                assert_eq!(a.tokens, tokens("good morning good morning"));
                assert_eq!(a.labels, vec![Reparandum, Reparandum, Repair, Repair]);
            }
        }
    }

    #[test]
    fn correction_example() {
        let u = tokens("i would like a vietnamese restaurant");
        let a = correct_at(&u, 3, 2, &tokens("a french"), Some(&tokens("uhm sorry")), Slot::Cuisine);
        assert_eq!(a.tokens, tokens("i would like a french uhm sorry a vietnamese restaurant"));
        a.validate().unwrap();
        assert_eq!(strip_disfluencies(&a), u);
    }

    #[test]
    fn correction_of_price_phrase_spans() {
        let u = tokens("in a cheap price range");
        let cand = CorrectionCandidate {
            slot: Slot::PriceRange,
            start: 0,
            right: u.clone(),
            wrong: tokens("in a moderate price range"),
        };
        let mut cfg = DisfluencyConfig::default();
        cfg.et_lexicon = vec!["no".into()];
        let a = insert_correction(&u, &[cand], &mut rng(0), &cfg).unwrap();
        assert_eq!(a.tokens, tokens("in a moderate price range no in a cheap price range"));
        assert_eq!(a.count(Reparandum), 5);
        assert_eq!(a.count(EditingTerm), 1);
        assert_eq!(a.count(Repair), 5);
        assert_eq!(a.corrected_slot, Some(Slot::PriceRange));
    }

    #[test]
    fn correction_without_slot_phrase_errors() {
        let cfg = DisfluencyConfig::default();
        let u = tokens("good morning");
        let cands = find_correction_candidates(&u, &mut rng(0), &cfg);
        assert!(cands.is_empty());
        assert!(matches!(insert_correction(&u, &cands, &mut rng(0), &cfg), Err(Error::NoSlotPhrase)));
    }

    #[test]
    fn candidates_use_matching_patterns() {
        let cfg = DisfluencyConfig::default();
        let u = tokens("can you book a table for six people in a cheap price range");
        let mut shapes = std::collections::BTreeSet::new();
        for seed in 0..100 {
            for c in find_correction_candidates(&u, &mut rng(seed), &cfg) {
                assert_eq!(&u[c.start..c.start + c.right.len()], &c.right[..]);
                assert_eq!(c.wrong.len(), c.right.len());
                assert_ne!(c.wrong, c.right);
                shapes.insert((c.slot, c.right.len()));
            }
        }
        // party size: "for six people", "for six", "six people", "six";
        // price: "in a cheap price range", "a cheap price range", "a cheap", "cheap"
        assert!(shapes.contains(&(Slot::PartySize, 3)));
        assert!(shapes.contains(&(Slot::PartySize, 1)));
        assert!(shapes.contains(&(Slot::PriceRange, 5)));
        assert!(shapes.contains(&(Slot::PriceRange, 2)));
    }

    fn utterance() -> impl Strategy<Value = Vec<String>> {
        let words = prop::sample::select(vec![
            "i", "love", "british", "food", "in", "a", "cheap", "price", "range", "for", "six", "people", "madrid",
            "please", "with", "cuisine",
        ]);
        prop::collection::vec(words.prop_map(String::from), 1..12)
    }

    proptest! {
        #[test]
        fn every_insertion_strips_back(u in utterance(), seed in any::<u64>()) {
            for policy in EtPolicy::ALL {
                let cfg = DisfluencyConfig::with_policy(policy);
                let mut r = rng(seed);
                let h = insert_hesitation(&u, &mut r, &cfg);
                prop_assert_eq!(strip_disfluencies(&h), u.clone());
                h.validate().unwrap();
                let s = insert_restart(&u, &mut r, &cfg);
                prop_assert_eq!(strip_disfluencies(&s), u.clone());
                s.validate().unwrap();
                let cands = find_correction_candidates(&u, &mut r, &cfg);
                if let Ok(c) = insert_correction(&u, &cands, &mut r, &cfg) {
                    prop_assert_eq!(strip_disfluencies(&c), u.clone());
                    c.validate().unwrap();
                    let rm = c.count(Reparandum);
                    prop_assert!((1..=6).contains(&rm));
                } else {
                    prop_assert!(cands.is_empty());
                }
            }
        }
    }
}
