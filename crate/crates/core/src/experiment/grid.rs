use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::evaluate::evaluate;
use super::metrics::MetricsReport;
use super::train::{train, TrainConfig, TrainOutcome};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::model::ModelConfig;

/// A named corpus family with its training, development and test splits.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub train: Corpus,
    pub dev: Corpus,
    pub test: Corpus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub train: TrainConfig,
    pub seeds: Vec<u64>,
    /// Attention settings to train, e.g. `[true, false]`.
    pub attention: Vec<bool>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { train: TrainConfig::default(), seeds: vec![1, 2], attention: vec![true, false] }
    }
}

/// Identifies one trained model inside a grid run.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RunKey {
    pub train_set: String,
    pub attention: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub train_set: String,
    pub test_set: String,
    pub attention: bool,
    pub per_seed: Vec<MetricsReport>,
    pub mean: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub seeds: Vec<u64>,
    pub cells: Vec<GridCell>,
}

fn train_model(cfg: &TrainConfig, data: &Dataset, attention: bool, seed: u64) -> Result<TrainOutcome> {
    let cfg = TrainConfig { model: ModelConfig { attention, ..cfg.model.clone() }, ..cfg.clone() };
    train(&cfg, &data.train, &data.dev, seed, |_| {})
}

/// Trains every (dataset, attention, seed) combination and evaluates it on
/// every dataset's test split. `on_model` sees each trained model.
pub fn run_grid(
    datasets: &[Dataset],
    cfg: &GridConfig,
    mut on_model: impl FnMut(&RunKey, &TrainOutcome),
) -> Result<GridReport> {
    if datasets.is_empty() || cfg.seeds.is_empty() || cfg.attention.is_empty() {
        return Err(Error::Config("grid needs datasets, seeds and attention variants".into()));
    }
    let mut cells = Vec::new();
    for tr in datasets {
        for &attention in &cfg.attention {
            let mut per_test: Vec<Vec<MetricsReport>> = vec![Vec::new(); datasets.len()];
            for &seed in &cfg.seeds {
                let outcome = train_model(&cfg.train, tr, attention, seed)?;
                for (k, te) in datasets.iter().enumerate() {
                    per_test[k].push(evaluate(&outcome.model, &outcome.vocabulary, &te.test)?.report);
                }
                on_model(&RunKey { train_set: tr.name.clone(), attention, seed }, &outcome);
            }
            for (te, per_seed) in datasets.iter().zip(per_test) {
                cells.push(GridCell {
                    train_set: tr.name.clone(),
                    test_set: te.name.clone(),
                    attention,
                    mean: MetricsReport::mean(&per_seed),
                    per_seed,
                });
            }
        }
    }
    Ok(GridReport { seeds: cfg.seeds.clone(), cells })
}

impl GridReport {
    pub fn cell(&self, train_set: &str, test_set: &str, attention: bool) -> Option<&GridCell> {
        self.cells.iter().find(|c| c.train_set == train_set && c.test_set == test_set && c.attention == attention)
    }

    /// Sequence accuracy with word accuracy in brackets, per condition.
    pub fn table(&self) -> String {
        let mut conditions: Vec<(&str, &str)> = Vec::new();
        for c in &self.cells {
            if !conditions.contains(&(c.train_set.as_str(), c.test_set.as_str())) {
                conditions.push((&c.train_set, &c.test_set));
            }
        }
        let mut out = String::new();
        let _ = writeln!(out, "{:<22} {:<14} {:>16} {:>16} {:>16}", "train/test", "model", "all", "api calls", "utterances");
        for (tr, te) in conditions {
            for attention in [true, false] {
                if let Some(c) = self.cell(tr, te, attention) {
                    let m = &c.mean;
                    let fmt = |s: f64, w: f64| format!("{s:.1} ({w:.1})");
                    let _ = writeln!(
                        out,
                        "{:<22} {:<14} {:>16} {:>16} {:>16}",
                        format!("{tr}/{te}"),
                        if attention { "attention" } else { "no attention" },
                        fmt(m.sequence_accuracy_all, m.word_accuracy_all),
                        fmt(m.sequence_accuracy_api, m.word_accuracy_api),
                        fmt(m.sequence_accuracy_utt, m.word_accuracy_utt),
                    );
                }
            }
        }
        let _ = writeln!(out, "seeds: {:?}", self.seeds);
        out
    }
}

/// Train/test pairs of the editing-term grid: each model is tested on
/// corpora with at most as many editing terms as it was trained on.
pub const EXPECTED_ET_CELLS: [(&str, &str); 6] = [
    ("fullET", "noET"),
    ("fullET", "realET"),
    ("fullET", "fullET"),
    ("realET", "noET"),
    ("realET", "realET"),
    ("noET", "noET"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtCell {
    pub train_set: String,
    pub test_set: String,
    /// Sequence accuracy over all responses, per seed.
    pub per_seed: Vec<f64>,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtGridReport {
    pub seeds: Vec<u64>,
    pub cells: Vec<EtCell>,
}

impl EtGridReport {
    pub fn cell(&self, train_set: &str, test_set: &str) -> Option<&EtCell> {
        self.cells.iter().find(|c| c.train_set == train_set && c.test_set == test_set)
    }

    pub fn table(&self) -> String {
        let cols = ["noET", "realET", "fullET"];
        let mut out = format!("{:<10}{:>10}{:>10}{:>10}\n", "trained", cols[0], cols[1], cols[2]);
        for tr in ["fullET", "realET", "noET"] {
            let _ = write!(out, "{tr:<10}");
            for te in cols {
                match self.cell(tr, te) {
                    Some(c) => {
                        let _ = write!(out, "{:>10.1}", c.mean);
                    }
                    None => out.push_str(&format!("{:>10}", "")),
                }
            }
            out.push('\n');
        }
        let _ = writeln!(out, "seeds: {:?}", self.seeds);
        out
    }
}

/// Attentive models trained on each editing-term variant, evaluated on the
/// cells of [`EXPECTED_ET_CELLS`]. Datasets are looked up by name.
pub fn et_grid(
    datasets: &[Dataset],
    cfg: &GridConfig,
    mut on_model: impl FnMut(&RunKey, &TrainOutcome),
) -> Result<EtGridReport> {
    let find = |name: &str| {
        datasets.iter().find(|d| d.name == name).ok_or_else(|| Error::Config(format!("editing-term grid needs a {name} dataset")))
    };
    let mut cells: Vec<EtCell> = EXPECTED_ET_CELLS
        .iter()
        .map(|(tr, te)| EtCell { train_set: tr.to_string(), test_set: te.to_string(), per_seed: Vec::new(), mean: 0.0 })
        .collect();
    for tr in ["fullET", "realET", "noET"] {
        let data = find(tr)?;
        for &seed in &cfg.seeds {
            let outcome = train_model(&cfg.train, data, true, seed)?;
            for cell in cells.iter_mut().filter(|c| c.train_set == tr) {
                let test = &find(&cell.test_set)?.test;
                cell.per_seed.push(evaluate(&outcome.model, &outcome.vocabulary, test)?.report.sequence_accuracy_all);
            }
            on_model(&RunKey { train_set: tr.to_string(), attention: true, seed }, &outcome);
        }
    }
    for c in &mut cells {
        c.mean = c.per_seed.iter().sum::<f64>() / c.per_seed.len().max(1) as f64;
    }
    Ok(EtGridReport { seeds: cfg.seeds.clone(), cells })
}
