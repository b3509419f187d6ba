//! Annotation sidecar: one line per bAbI line with the user tokens' labels
//! (space-separated integers), a tab and `-` for the unannotated system side.
//! Dialogues are separated by a blank line, as in the corpus file.

use super::{AnnotatedCorpus, AnnotatedDialogue, AnnotatedTurn, AnnotatedUtterance, DisfluencyKind, Label};
use crate::corpus::{Corpus, SlotCatalog};
use crate::error::{Error, Result};

pub fn write_sidecar(corpus: &AnnotatedCorpus) -> String {
    let mut out = String::new();
    for d in &corpus.dialogues {
        for t in &d.turns {
            let labels: Vec<String> = t.user.labels.iter().map(|l| l.as_u8().to_string()).collect();
            out.push_str(&labels.join(" "));
            out.push_str("\t-\n");
        }
        out.push('\n');
    }
    out
}

fn infer(tokens: Vec<String>, labels: Vec<Label>, catalog: &SlotCatalog) -> AnnotatedUtterance {
    let has = |l: Label| labels.contains(&l);
    let kind = if !has(Label::Reparandum) && !has(Label::Repair) {
        if has(Label::EditingTerm) {
            DisfluencyKind::Hesitation
        } else {
            DisfluencyKind::None
        }
    } else {
        let pick = |want: Label| -> Vec<&String> {
            tokens.iter().zip(&labels).filter(|(_, &l)| l == want).map(|(t, _)| t).collect()
        };
        if labels[0] == Label::Reparandum && pick(Label::Reparandum) == pick(Label::Repair) {
            DisfluencyKind::Restart
        } else {
            DisfluencyKind::Correction
        }
    };
    let corrected_slot = if kind == DisfluencyKind::Correction {
        tokens
            .iter()
            .zip(&labels)
            .filter(|(_, &l)| l == Label::Repair)
            .find_map(|(t, _)| catalog.slot_of(t))
    } else {
        None
    };
    AnnotatedUtterance { tokens, labels, kind, corrected_slot }
}

/// Re-attaches sidecar labels to the disfluent corpus they describe.
pub fn parse_sidecar(text: &str, surface: &Corpus, catalog: &SlotCatalog) -> Result<AnnotatedCorpus> {
    let mut blocks: Vec<Vec<(usize, Vec<Label>)>> = Vec::new();
    let mut current = Vec::new();
    for (i, raw) in text.split('\n').enumerate() {
        let line_no = i + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            if !current.is_empty() {
                blocks.push(std::mem::take(&mut current));
            }
            continue;
        }
        let (labels, system) = line.split_once('\t').ok_or_else(|| Error::Parse {
            line: line_no,
            message: "missing tab separator".into(),
        })?;
        if system != "-" {
            return Err(Error::Parse { line: line_no, message: "system side must be `-`".into() });
        }
        let labels = labels
            .split(' ')
            .filter(|w| !w.is_empty())
            .map(|w| w.parse::<u8>().ok().and_then(Label::from_u8))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Parse { line: line_no, message: format!("invalid label in {labels:?}") })?;
        current.push((line_no, labels));
    }
    if !current.is_empty() {
        blocks.push(current);
    }
    if blocks.len() != surface.dialogues.len() {
        return Err(Error::Alignment(format!(
            "sidecar has {} dialogues, corpus has {}",
            blocks.len(),
            surface.dialogues.len()
        )));
    }
    let mut dialogues = Vec::with_capacity(blocks.len());
    for (block, d) in blocks.into_iter().zip(&surface.dialogues) {
        if block.len() != d.turns.len() {
            return Err(Error::Alignment(format!(
                "sidecar block at line {} has {} lines for {} turns",
                block[0].0,
                block.len(),
                d.turns.len()
            )));
        }
        let mut turns = Vec::with_capacity(block.len());
        for ((line_no, labels), t) in block.into_iter().zip(&d.turns) {
            if labels.len() != t.user.len() {
                return Err(Error::Alignment(format!(
                    "line {line_no}: {} labels for {} user tokens",
                    labels.len(),
                    t.user.len()
                )));
            }
            let user = infer(t.user.clone(), labels, catalog);
            user.validate()?;
            turns.push(AnnotatedTurn { index: t.index, user, system: t.system.clone() });
        }
        dialogues.push(AnnotatedDialogue { turns, goal: d.goal.clone() });
    }
    Ok(AnnotatedCorpus { dialogues, split: surface.split })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_corpus, parse_babi, serialize_babi, CorpusConfig, SplitSizes};
    use crate::disfluency::{augment_corpus, DisfluencyConfig};

    #[test]
    fn sidecar_round_trip_through_files() {
        let mut cfg = CorpusConfig::with_seed(2);
        cfg.sizes = SplitSizes { train: 200, dev: 0, test: 0, test_oov: 0 };
        let train = generate_corpus(&cfg).unwrap().train;
        let dcfg = DisfluencyConfig::default();
        let aug = augment_corpus(&train, &dcfg, 11).unwrap();
        let text = serialize_babi(&aug.surface());
        let side = write_sidecar(&aug);
        let surface = parse_babi(&text, train.split).unwrap();
        let back = parse_sidecar(&side, &surface, &dcfg.catalog).unwrap();
        assert_eq!(back, aug);
    }

    #[test]
    fn sidecar_line_format() {
        let mut cfg = CorpusConfig::with_seed(2);
        cfg.sizes = SplitSizes { train: 1, dev: 0, test: 0, test_oov: 0 };
        let train = generate_corpus(&cfg).unwrap().train;
        let fluent = AnnotatedCorpus::from_fluent(&train);
        let side = write_sidecar(&fluent);
        assert!(side.ends_with("\t-\n\n"));
        assert_eq!(side.lines().next().unwrap().split('\t').next().unwrap().split(' ').count(), train.dialogues[0].turns[0].user.len());
    }

    #[test]
    fn misaligned_sidecar_rejected() {
        let mut cfg = CorpusConfig::with_seed(2);
        cfg.sizes = SplitSizes { train: 1, dev: 0, test: 0, test_oov: 0 };
        let train = generate_corpus(&cfg).unwrap().train;
        assert!(matches!(
            parse_sidecar("0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0\t-\n\n", &train, &SlotCatalog::default()),
            Err(Error::Alignment(_))
        ));
        assert!(matches!(parse_sidecar("0 9\t-\n", &train, &SlotCatalog::default()), Err(Error::Parse { .. })));
    }
}
