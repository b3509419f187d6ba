use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::logistic::{balanced_indices, fit_binary, split_dialogues, BinaryClassifier, ProbeConfig};
use super::states::{StateDataset, StructureKind};
use crate::disfluency::Label;
use crate::error::{Error, Result};
use crate::seed::{derive_rng, tag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticClassifier {
    pub target: Label,
    pub classifier: BinaryClassifier,
    pub train_dialogues: BTreeSet<usize>,
    /// Rows seen in training after balancing.
    pub train_rows: usize,
    pub final_loss: f64,
}

/// Binary probe for `target` against every other label, trained on the
/// training side of a dialogue split with the classes balanced.
pub fn train_diagnostic(data: &StateDataset, target: Label, cfg: &ProbeConfig) -> Result<DiagnosticClassifier> {
    if target == Label::Other {
        return Err(Error::Config("diagnostic target must be reparandum, editing_term or repair".into()));
    }
    let train_dialogues = split_dialogues(data.records.iter().map(|r| r.dialogue), cfg);
    let rows: Vec<_> = data.records.iter().filter(|r| train_dialogues.contains(&r.dialogue)).collect();
    let ys: Vec<bool> = rows.iter().map(|r| r.label == target).collect();
    if !ys.contains(&true) || !ys.contains(&false) {
        return Err(Error::SingleClass(format!("{} in training split", target.name())));
    }
    let idx = balanced_indices(&ys, &mut derive_rng(cfg.seed, &[tag("probe-balance"), target.as_u8() as u64]));
    let xs: Vec<&[f32]> = idx.iter().map(|&i| rows[i].state.as_slice()).collect();
    let yb: Vec<bool> = idx.iter().map(|&i| ys[i]).collect();
    let (classifier, losses) = fit_binary(&xs, &yb, cfg)?;
    Ok(DiagnosticClassifier {
        target,
        classifier,
        train_dialogues,
        train_rows: idx.len(),
        final_loss: losses.last().copied().unwrap_or(f64::NAN),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub true_pos: usize,
    pub false_pos: usize,
    pub false_neg: usize,
    /// `None` when nothing was predicted positive.
    pub precision: Option<f64>,
    /// `None` when there are no positives.
    pub recall: Option<f64>,
}

impl PrecisionRecall {
    pub fn from_counts(true_pos: usize, false_pos: usize, false_neg: usize) -> Self {
        let ratio = |a: usize, b: usize| if a + b == 0 { None } else { Some(a as f64 / (a + b) as f64) };
        PrecisionRecall {
            true_pos,
            false_pos,
            false_neg,
            precision: ratio(true_pos, false_pos),
            recall: ratio(true_pos, false_neg),
        }
    }
}

/// Scores held-out dialogues: positives are `target` tokens inside
/// structures of `kind` (any kind when `None`), negatives are all
/// 0-labelled tokens.
pub fn eval_diagnostic(c: &DiagnosticClassifier, data: &StateDataset, kind: Option<StructureKind>) -> PrecisionRecall {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for r in data.records.iter().filter(|r| !c.train_dialogues.contains(&r.dialogue)) {
        let positive = r.label == c.target && kind.is_none_or(|k| r.kind == k);
        let negative = r.label == Label::Other;
        if !positive && !negative {
            continue;
        }
        match (positive, c.classifier.predict(&r.state)) {
            (true, true) => tp += 1,
            (true, false) => fn_ += 1,
            (false, true) => fp += 1,
            (false, false) => {}
        }
    }
    PrecisionRecall::from_counts(tp, fp, fn_)
}

pub const STRUCTURE_TARGETS: [Label; 3] = [Label::Reparandum, Label::EditingTerm, Label::Repair];
pub const STRUCTURE_KINDS: [StructureKind; 2] = [StructureKind::Correction, StructureKind::Restart];

/// Precision/recall per structure kind and target label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    /// `cells[k][t]` for `STRUCTURE_KINDS[k]` and `STRUCTURE_TARGETS[t]`.
    pub cells: Vec<Vec<PrecisionRecall>>,
    pub classifiers: Vec<DiagnosticClassifier>,
}

impl StructureReport {
    pub fn cell(&self, kind: StructureKind, target: Label) -> Option<&PrecisionRecall> {
        let k = STRUCTURE_KINDS.iter().position(|&x| x == kind)?;
        let t = STRUCTURE_TARGETS.iter().position(|&x| x == target)?;
        Some(&self.cells[k][t])
    }

    /// Precision strictly increases from reparandum to repair to editing term.
    pub fn precision_ordered(&self, kind: StructureKind) -> bool {
        let p = |l| self.cell(kind, l).and_then(|c| c.precision);
        match (p(Label::Reparandum), p(Label::Repair), p(Label::EditingTerm)) {
            (Some(a), Some(b), Some(c)) => a < b && b < c,
            _ => false,
        }
    }

    pub fn min_recall(&self) -> Option<f64> {
        self.cells.iter().flatten().map(|c| c.recall).try_fold(f64::INFINITY, |m, r| r.map(|r| m.min(r)))
    }
}

pub fn structure_report(data: &StateDataset, cfg: &ProbeConfig) -> Result<StructureReport> {
    let classifiers = STRUCTURE_TARGETS.iter().map(|&t| train_diagnostic(data, t, cfg)).collect::<Result<Vec<_>>>()?;
    let cells = STRUCTURE_KINDS
        .iter()
        .map(|&k| classifiers.iter().map(|c| eval_diagnostic(c, data, Some(k))).collect())
        .collect();
    Ok(StructureReport { cells, classifiers })
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{:.1}", 100.0 * v))
}

impl fmt::Display for StructureReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<12}", "")?;
        for t in STRUCTURE_TARGETS {
            write!(f, "{:>18}", t.name())?;
        }
        writeln!(f)?;
        for (k, row) in STRUCTURE_KINDS.iter().zip(&self.cells) {
            write!(f, "{:<12}", k.name())?;
            for c in row {
                write!(f, "{:>18}", format!("{} / {}", pct(c.precision), pct(c.recall)))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::states::StateRecord;

    fn record(dialogue: usize, label: Label, kind: StructureKind, x: f32) -> StateRecord {
        StateRecord { state: vec![x, 1.0], token: "w".into(), label, kind, dialogue, position: 0 }
    }

    fn toy() -> StateDataset {
        let mut records = Vec::new();
        for d in 0..20 {
            for _ in 0..6 {
                records.push(record(d, Label::Other, StructureKind::None, -1.0));
            }
            records.push(record(d, Label::Repair, StructureKind::Correction, 1.0));
        }
        StateDataset { hidden_dim: 2, records }
    }

    #[test]
    fn perfect_classifier_scores_one() {
        let data = toy();
        let c = train_diagnostic(&data, Label::Repair, &ProbeConfig::default()).unwrap();
        let pr = eval_diagnostic(&c, &data, Some(StructureKind::Correction));
        assert_eq!((pr.precision, pr.recall), (Some(1.0), Some(1.0)));
        assert_eq!(pr.true_pos, 6);
        assert!(c.train_dialogues.len() == 14);
    }

    #[test]
    fn missing_positives_reported_as_undefined() {
        let data = toy();
        let c = train_diagnostic(&data, Label::Repair, &ProbeConfig::default()).unwrap();
        let pr = eval_diagnostic(&c, &data, Some(StructureKind::Restart));
        assert_eq!(pr.recall, None);
        assert!(matches!(train_diagnostic(&data, Label::EditingTerm, &ProbeConfig::default()), Err(Error::SingleClass(_))));
        assert!(matches!(train_diagnostic(&data, Label::Other, &ProbeConfig::default()), Err(Error::Config(_))));
    }

    #[test]
    fn ordering_helper() {
        let pr = |p| PrecisionRecall { precision: Some(p), recall: Some(0.9), true_pos: 0, false_pos: 0, false_neg: 0 };
        let report = StructureReport { cells: vec![vec![pr(0.1), pr(0.4), pr(0.2)], vec![pr(0.3), pr(0.2), pr(0.1)]], classifiers: vec![] };
        assert!(report.precision_ordered(StructureKind::Correction));
        assert!(!report.precision_ordered(StructureKind::Restart));
        assert_eq!(report.min_recall(), Some(0.9));
    }
}
