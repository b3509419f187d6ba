use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fraction of positions `< min(|hyp|, |ref|)` where the tokens agree,
/// over `max(|hyp|, |ref|)`.
pub fn word_accuracy<S: PartialEq>(hyp: &[S], reference: &[S]) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::EmptyInput("word_accuracy reference"));
    }
    let hits = hyp.iter().zip(reference).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / hyp.len().max(reference.len()) as f64)
}

pub fn sequence_accuracy<S: PartialEq>(hyp: &[S], reference: &[S]) -> f64 {
    if hyp == reference {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Api,
    Utterance,
}

impl Category {
    pub fn name(self) -> &'static str {
        match self {
            Category::Api => "api",
            Category::Utterance => "utterance",
        }
    }
}

/// One decoded response against its gold reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub dialogue: usize,
    pub turn: usize,
    pub category: Category,
    pub gold: String,
    pub hypothesis: String,
    pub word_acc: f64,
    pub seq_acc: f64,
}

/// Percentages per response category.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    pub word_accuracy_all: f64,
    pub sequence_accuracy_all: f64,
    pub word_accuracy_api: f64,
    pub sequence_accuracy_api: f64,
    pub word_accuracy_utt: f64,
    pub sequence_accuracy_utt: f64,
    pub count_all: usize,
    pub count_api: usize,
    pub count_utt: usize,
}

impl MetricsReport {
    /// Element-wise mean of several reports; counts are averaged too.
    pub fn mean(reports: &[MetricsReport]) -> MetricsReport {
        let n = reports.len().max(1) as f64;
        let avg = |f: fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        let avgc = |f: fn(&MetricsReport) -> usize| (reports.iter().map(f).sum::<usize>() as f64 / n).round() as usize;
        MetricsReport {
            word_accuracy_all: avg(|r| r.word_accuracy_all),
            sequence_accuracy_all: avg(|r| r.sequence_accuracy_all),
            word_accuracy_api: avg(|r| r.word_accuracy_api),
            sequence_accuracy_api: avg(|r| r.sequence_accuracy_api),
            word_accuracy_utt: avg(|r| r.word_accuracy_utt),
            sequence_accuracy_utt: avg(|r| r.sequence_accuracy_utt),
            count_all: avgc(|r| r.count_all),
            count_api: avgc(|r| r.count_api),
            count_utt: avgc(|r| r.count_utt),
        }
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "all {:.1} ({:.1})  api {:.1} ({:.1})  utt {:.1} ({:.1})",
            self.sequence_accuracy_all,
            self.word_accuracy_all,
            self.sequence_accuracy_api,
            self.word_accuracy_api,
            self.sequence_accuracy_utt,
            self.word_accuracy_utt
        )
    }
}

pub fn aggregate(records: &[PredictionRecord]) -> MetricsReport {
    let pct = |rs: &[&PredictionRecord], f: fn(&PredictionRecord) -> f64| {
        if rs.is_empty() {
            0.0
        } else {
            100.0 * rs.iter().map(|r| f(r)).sum::<f64>() / rs.len() as f64
        }
    };
    let all: Vec<&PredictionRecord> = records.iter().collect();
    let api: Vec<&PredictionRecord> = records.iter().filter(|r| r.category == Category::Api).collect();
    let utt: Vec<&PredictionRecord> = records.iter().filter(|r| r.category == Category::Utterance).collect();
    MetricsReport {
        word_accuracy_all: pct(&all, |r| r.word_acc),
        sequence_accuracy_all: pct(&all, |r| r.seq_acc),
        word_accuracy_api: pct(&api, |r| r.word_acc),
        sequence_accuracy_api: pct(&api, |r| r.seq_acc),
        word_accuracy_utt: pct(&utt, |r| r.word_acc),
        sequence_accuracy_utt: pct(&utt, |r| r.seq_acc),
        count_all: all.len(),
        count_api: api.len(),
        count_utt: utt.len(),
    }
}

const HEADER: &str = "dialogue\tturn\tcategory\tgold\thypothesis\tword_acc\tseq_acc";

/// Tab-separated records with a header line. Accuracies are written with
/// enough digits to round-trip.
pub fn write_records(records: &[PredictionRecord]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{:?}\t{:?}\n",
            r.dialogue,
            r.turn,
            r.category.name(),
            r.gold,
            r.hypothesis,
            r.word_acc,
            r.seq_acc
        ));
    }
    out
}

pub fn parse_records(text: &str) -> Result<Vec<PredictionRecord>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 && line == HEADER || line.is_empty() {
            continue;
        }
        let bad = |m: &str| Error::Parse { line: i + 1, message: m.to_string() };
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 7 {
            return Err(bad("expected 7 tab-separated fields"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad("invalid accuracy"));
        let int = |s: &str| s.parse::<usize>().map_err(|_| bad("invalid integer"));
        let category = match f[2] {
            "api" => Category::Api,
            "utterance" => Category::Utterance,
            _ => return Err(bad("unknown category")),
        };
        out.push(PredictionRecord {
            dialogue: int(f[0])?,
            turn: int(f[1])?,
            category,
            gold: f[3].to_string(),
            hypothesis: f[4].to_string(),
            word_acc: num(f[5])?,
            seq_acc: num(f[6])?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_accuracy_oracles() {
        assert_eq!(word_accuracy(&["a", "b"], &["a", "b"]).unwrap(), 1.0);
        assert!((word_accuracy(&["a", "b", "c"], &["a", "x", "c"]).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((word_accuracy(&["a", "b"], &["a", "b", "c"]).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((word_accuracy(&["a", "b", "c", "d"], &["a", "b"]).unwrap() - 0.5).abs() < 1e-12);
        assert!(word_accuracy::<&str>(&["a"], &[]).is_err());
        assert_eq!(word_accuracy::<&str>(&[], &["a"]).unwrap(), 0.0);
    }

    #[test]
    fn sequence_accuracy_oracles() {
        assert_eq!(sequence_accuracy(&[1, 2], &[1, 2]), 1.0);
        assert_eq!(sequence_accuracy(&[1, 3], &[1, 2]), 0.0);
        assert_eq!(sequence_accuracy(&[1], &[1, 2]), 0.0);
    }

    fn rec(category: Category, w: f64, s: f64) -> PredictionRecord {
        PredictionRecord { dialogue: 0, turn: 1, category, gold: "a b".into(), hypothesis: "a c".into(), word_acc: w, seq_acc: s }
    }

    #[test]
    fn aggregate_equals_recount_and_records_round_trip() {
        let records = vec![
            rec(Category::Api, 1.0, 1.0),
            rec(Category::Api, 0.4, 0.0),
            rec(Category::Utterance, 2.0 / 3.0, 0.0),
            rec(Category::Utterance, 1.0, 1.0),
            rec(Category::Utterance, 1.0, 1.0),
        ];
        let r = aggregate(&records);
        assert_eq!((r.count_all, r.count_api, r.count_utt), (5, 2, 3));
        assert!((r.sequence_accuracy_all - 60.0).abs() < 1e-12);
        assert!((r.sequence_accuracy_api - 50.0).abs() < 1e-12);
        assert!((r.word_accuracy_utt - 100.0 * (8.0 / 3.0) / 3.0).abs() < 1e-9);
        let back = parse_records(&write_records(&records)).unwrap();
        assert_eq!(back, records);
        assert_eq!(aggregate(&back), r);
    }

    #[test]
    fn bad_record_line_reports_position() {
        let text = format!("{HEADER}\n0\t1\tapi\ta\tb\tx\t1\n");
        assert!(matches!(parse_records(&text), Err(Error::Parse { line: 2, .. })));
    }
}
