use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::logistic::{fit_multiclass, split_dialogues, ProbeConfig};
use super::states::{encoder_states, full_histories};
use crate::corpus::{PerSlot, Slot, SlotCatalog, TokenId, Vocabulary};
use crate::disfluency::{token_labels, AnnotatedCorpus, AnnotatedDialogue};
use crate::error::{Error, Result};
use crate::model::Seq2Seq;
use crate::numerics::Real;

/// What a slot holds at one encoder position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotProbeRecord {
    pub dialogue: usize,
    pub position: usize,
    pub slot: Slot,
    /// Index into `SlotCatalog::all_values(slot)`; `None` before the first mention.
    pub value: Option<usize>,
    /// Tokens since the most recent mention.
    pub offset: Option<usize>,
}

/// Every user-side slot value is a mention, reparanda included, so a
/// correction moves the value again at its repair.
pub fn slot_records(d: &AnnotatedDialogue, dialogue: usize, catalog: &SlotCatalog) -> Result<Vec<SlotProbeRecord>> {
    let len = token_labels(d)?.len();
    let values: Vec<Vec<String>> = Slot::ALL.iter().map(|&s| catalog.all_values(s)).collect();
    let mut mentions = vec![None; len];
    let mut pos = 0;
    let last = d.turns.len().saturating_sub(1);
    for (i, t) in d.turns.iter().enumerate() {
        pos += 1;
        for w in &t.user.tokens {
            if let Some(slot) = catalog.slot_of(w) {
                let class = values[slot.index()].iter().position(|v| v == w).expect("value of its own slot");
                mentions[pos] = Some((slot, class));
            }
            pos += 1;
        }
        if i < last {
            pos += 1 + t.system.len();
        }
    }
    debug_assert_eq!(pos, len);
    let mut out = Vec::with_capacity(len * 4);
    let mut current: [Option<(usize, usize)>; 4] = [None; 4];
    for (p, m) in mentions.iter().enumerate() {
        if let Some((slot, class)) = *m {
            current[slot.index()] = Some((class, p));
        }
        for slot in Slot::ALL {
            let cur = current[slot.index()];
            out.push(SlotProbeRecord {
                dialogue,
                position: p,
                slot,
                value: cur.map(|(c, _)| c),
                offset: cur.map(|(_, at)| p - at),
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct SlotProbeConfig {
    pub probe: ProbeConfig,
    /// Train on the state this many tokens after the labelled position.
    pub delay: usize,
    /// Also score positions before the first mention, as an extra class.
    pub include_unmentioned: bool,
}


#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SlotAccuracy {
    pub classes: usize,
    pub correct: usize,
    pub total: usize,
    /// Offset → (correct, total) over held-out post-mention positions.
    pub by_offset: BTreeMap<usize, (usize, usize)>,
}

impl SlotAccuracy {
    pub fn accuracy(&self) -> Option<f64> {
        (self.total > 0).then(|| self.correct as f64 / self.total as f64)
    }

    /// Accuracy over offsets within `lo..=hi`.
    pub fn accuracy_between(&self, lo: usize, hi: usize) -> Option<f64> {
        let (c, t) = self.by_offset.range(lo..=hi).fold((0, 0), |(c, t), (_, &(a, b))| (c + a, t + b));
        (t > 0).then(|| c as f64 / t as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotProbeReport {
    pub delay: usize,
    pub include_unmentioned: bool,
    pub slots: PerSlot<SlotAccuracy>,
}

impl SlotProbeReport {
    /// Accuracy at offsets `0..=near` minus accuracy at offsets `far..`.
    pub fn forgetting(&self, slot: Slot, near: usize, far: usize) -> Option<f64> {
        let a = self.slots.get(slot);
        Some(a.accuracy_between(0, near)? - a.accuracy_between(far, usize::MAX)?)
    }

    /// Accuracy per offset bucket `0, 1, ..., cap - 1, cap+`, for plotting.
    pub fn curve(&self, slot: Slot, cap: usize) -> Vec<(usize, Option<f64>)> {
        let a = self.slots.get(slot);
        (0..=cap)
            .map(|o| (o, if o < cap { a.accuracy_between(o, o) } else { a.accuracy_between(cap, usize::MAX) }))
            .collect()
    }
}

impl fmt::Display for SlotProbeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pct = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{:.1}", 100.0 * v));
        writeln!(f, "{:<12}{:>10}{:>10}{:>10}{:>10}", "", "cuisine", "location", "party", "price")?;
        write!(f, "{:<12}", "accuracy")?;
        for s in Slot::ALL {
            write!(f, "{:>10}", pct(self.slots.get(s).accuracy()))?;
        }
        writeln!(f)?;
        write!(f, "{:<12}", "offset<=2")?;
        for s in Slot::ALL {
            write!(f, "{:>10}", pct(self.slots.get(s).accuracy_between(0, 2)))?;
        }
        writeln!(f)?;
        write!(f, "{:<12}", "offset>=10")?;
        for s in Slot::ALL {
            write!(f, "{:>10}", pct(self.slots.get(s).accuracy_between(10, usize::MAX)))?;
        }
        writeln!(f)
    }
}

/// One multiclass probe per slot over encoder states; trained on a
/// dialogue split and scored on the held-out side.
pub fn probe_slots<T: Real>(
    model: &Seq2Seq<T>,
    vocab: &Vocabulary,
    corpus: &AnnotatedCorpus,
    catalog: &SlotCatalog,
    cfg: &SlotProbeConfig,
) -> Result<SlotProbeReport> {
    catalog.validate()?;
    let ids: Vec<Vec<TokenId>> = full_histories(corpus, vocab).into_iter().map(|(_, ids)| ids).collect();
    let states = encoder_states(model, &ids)?;
    let mut records = Vec::new();
    for (i, d) in corpus.dialogues.iter().enumerate() {
        records.extend(slot_records(d, i, catalog)?);
    }
    let train = split_dialogues(0..corpus.dialogues.len(), &cfg.probe);
    let mut slots = PerSlot::from_fn(|_| SlotAccuracy::default());
    for slot in Slot::ALL {
        let n = catalog.all_values(slot).len();
        let classes = n + cfg.include_unmentioned as usize;
        let usable: Vec<(&[f32], usize, Option<usize>, bool)> = records
            .iter()
            .filter(|r| r.slot == slot && (cfg.include_unmentioned || r.value.is_some()))
            .filter_map(|r| {
                let state = states[r.dialogue].get(r.position + cfg.delay)?;
                Some((state.as_slice(), r.value.unwrap_or(n), r.offset, train.contains(&r.dialogue)))
            })
            .collect();
        let (xs, ys): (Vec<&[f32]>, Vec<usize>) = usable.iter().filter(|u| u.3).map(|u| (u.0, u.1)).unzip();
        if xs.is_empty() {
            return Err(Error::EmptyInput("slot probe training"));
        }
        let (clf, _) = fit_multiclass(&xs, &ys, classes, &cfg.probe)?;
        let acc = slots.get_mut(slot);
        acc.classes = classes;
        for &(x, y, offset, is_train) in &usable {
            if is_train {
                continue;
            }
            let ok = clf.predict(x) == y;
            acc.total += 1;
            acc.correct += ok as usize;
            if let Some(o) = offset {
                let e = acc.by_offset.entry(o).or_insert((0, 0));
                e.0 += ok as usize;
                e.1 += 1;
            }
        }
    }
    Ok(SlotProbeReport { delay: cfg.delay, include_unmentioned: cfg.include_unmentioned, slots })
}
