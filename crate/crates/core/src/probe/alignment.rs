use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::grid::LabelledGrid;
use crate::corpus::{history_tokens, Corpus, Slot, SlotCatalog, TokenId, Vocabulary, API_CALL};
use crate::error::{Error, Result};
use crate::model::Seq2Seq;
use crate::numerics::Real;

pub const DEFAULT_TAU: f64 = 0.2;

const DIALOGUES_PER_CHUNK: usize = 32;

/// Slot values collapse to their category; everything else stays literal.
pub fn token_type(word: &str, catalog: &SlotCatalog) -> String {
    catalog.slot_of(word).map_or_else(|| word.to_string(), |s| s.category().to_string())
}

/// Labels of the API-call output positions.
pub fn api_row_labels() -> Vec<String> {
    std::iter::once(API_CALL.to_string()).chain(Slot::ALL.iter().map(|s| s.category().to_string())).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    /// Mean attention mass per output position and input token type.
    pub cells: Vec<Vec<f64>>,
    /// Examples contributing to each row.
    pub counts: Vec<usize>,
    pub tau: f64,
}

impl AlignmentMatrix {
    /// Cells below `tau` are hidden for display; the data keeps them.
    pub fn masked(&self) -> Vec<Vec<Option<f64>>> {
        self.cells.iter().map(|r| r.iter().map(|&v| (v >= self.tau).then_some(v)).collect()).collect()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.cols.iter().position(|c| c == name)
    }

    /// Attention mass on `name` summed over output positions; 0 when absent.
    pub fn column_mass(&self, name: &str) -> f64 {
        self.column(name).map_or(0.0, |c| self.cells.iter().map(|r| r[c]).sum())
    }

    pub fn to_grid(&self) -> LabelledGrid {
        LabelledGrid { rows: self.rows.clone(), cols: self.cols.clone(), cells: self.cells.clone() }
    }
}

/// Greedy API-call decodings of every dialogue's last turn, each as a grid
/// with output words as rows and the history's words as columns.
pub fn attention_dumps<T: Real>(model: &Seq2Seq<T>, vocab: &Vocabulary, corpus: &Corpus) -> Result<Vec<LabelledGrid>> {
    if !model.has_attention() {
        return Err(Error::AttentionDisabled);
    }
    let histories: Vec<Vec<String>> = corpus
        .dialogues
        .iter()
        .filter(|d| !d.turns.is_empty())
        .map(|d| history_tokens(&d.turns, d.turns.len() - 1))
        .collect();
    let ids: Vec<Vec<TokenId>> = histories.iter().map(|h| vocab.encode(h)).collect();
    let mut out = Vec::with_capacity(ids.len());
    for (words, chunk) in histories.chunks(DIALOGUES_PER_CHUNK).zip(ids.chunks(DIALOGUES_PER_CHUNK)) {
        let seqs: Vec<&[TokenId]> = chunk.iter().map(|s| s.as_slice()).collect();
        let queries: Vec<(usize, usize)> = seqs.iter().enumerate().map(|(i, s)| (i, s.len())).collect();
        let decoded = model.decode_batch(&seqs, &queries, model.config().max_decode_len)?;
        for (w, d) in words.iter().zip(decoded) {
            out.push(LabelledGrid { rows: vocab.decode(&d.tokens), cols: w.clone(), cells: d.attention.weights });
        }
    }
    Ok(out)
}

/// Averages per-example dumps over the API-call output positions.
pub fn aggregate_alignment(dumps: &[LabelledGrid], catalog: &SlotCatalog, tau: f64) -> Result<AlignmentMatrix> {
    let rows = api_row_labels();
    let mut sums: Vec<BTreeMap<String, f64>> = vec![BTreeMap::new(); rows.len()];
    let mut counts = vec![0usize; rows.len()];
    for d in dumps {
        d.validate()?;
        let types: Vec<String> = d.cols.iter().map(|w| token_type(w, catalog)).collect();
        for (j, row) in d.cells.iter().take(rows.len()).enumerate() {
            counts[j] += 1;
            for (t, &v) in types.iter().zip(row) {
                *sums[j].entry(t.clone()).or_insert(0.0) += v;
            }
        }
    }
    let mut cols: Vec<String> = sums.iter().flat_map(|m| m.keys().cloned()).collect();
    cols.sort_by(|a, b| {
        let cat = |s: &str| Slot::ALL.iter().position(|x| x.category() == s).unwrap_or(usize::MAX);
        cat(a).cmp(&cat(b)).then_with(|| a.cmp(b))
    });
    cols.dedup();
    let cells = sums
        .iter()
        .zip(&counts)
        .map(|(m, &n)| cols.iter().map(|c| if n == 0 { 0.0 } else { m.get(c).copied().unwrap_or(0.0) / n as f64 }).collect())
        .collect();
    Ok(AlignmentMatrix { rows, cols, cells, counts, tau })
}

pub fn attention_alignment<T: Real>(
    model: &Seq2Seq<T>,
    vocab: &Vocabulary,
    corpus: &Corpus,
    catalog: &SlotCatalog,
    tau: f64,
) -> Result<(AlignmentMatrix, Vec<LabelledGrid>)> {
    let dumps = attention_dumps(model, vocab, corpus)?;
    let matrix = aggregate_alignment(&dumps, catalog, tau)?;
    Ok((matrix, dumps))
}
