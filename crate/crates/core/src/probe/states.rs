use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::{history_tokens, TokenId, Vocabulary};
use crate::disfluency::{token_labels, AnnotatedCorpus, AnnotatedDialogue, DisfluencyKind, Label};
use crate::error::{Error, Result};
use crate::model::Seq2Seq;
use crate::numerics::Real;

pub const STATES_MAGIC: &[u8; 8] = b"DIALABST";
pub const STATES_VERSION: u32 = 1;

const DIALOGUES_PER_CHUNK: usize = 32;

/// Disfluency structure a token belongs to. Hesitation fillers count as `None`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum StructureKind {
    None = 0,
    Correction = 1,
    Restart = 2,
}

impl StructureKind {
    pub fn of(kind: DisfluencyKind) -> Self {
        match kind {
            DisfluencyKind::Correction => StructureKind::Correction,
            DisfluencyKind::Restart => StructureKind::Restart,
            DisfluencyKind::None | DisfluencyKind::Hesitation => StructureKind::None,
        }
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        [StructureKind::None, StructureKind::Correction, StructureKind::Restart].get(v as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            StructureKind::None => "none",
            StructureKind::Correction => "correction",
            StructureKind::Restart => "restart",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub state: Vec<f32>,
    pub token: String,
    pub label: Label,
    pub kind: StructureKind,
    pub dialogue: usize,
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StateDataset {
    pub hidden_dim: usize,
    pub records: Vec<StateRecord>,
}

impl StateDataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn label_counts(&self) -> [usize; 4] {
        let mut out = [0; 4];
        for r in &self.records {
            out[r.label.as_u8() as usize] += 1;
        }
        out
    }
}

/// Per-token structure kinds aligned with `token_labels`.
fn token_kinds(d: &AnnotatedDialogue) -> Vec<StructureKind> {
    let last = d.turns.len().saturating_sub(1);
    let mut out = Vec::new();
    for (i, t) in d.turns.iter().enumerate() {
        out.push(StructureKind::None);
        out.extend(std::iter::repeat_n(StructureKind::of(t.user.kind), t.user.tokens.len()));
        if i < last {
            out.extend(std::iter::repeat_n(StructureKind::None, 1 + t.system.len()));
        }
    }
    out
}

/// Full-dialogue encoder inputs of every dialogue, as words and ids.
pub(crate) fn full_histories(corpus: &AnnotatedCorpus, vocab: &Vocabulary) -> Vec<(Vec<String>, Vec<TokenId>)> {
    corpus
        .dialogues
        .iter()
        .map(|d| {
            let surface = d.surface();
            let words = if surface.turns.is_empty() { Vec::new() } else { history_tokens(&surface.turns, surface.turns.len() - 1) };
            let ids = vocab.encode(&words);
            (words, ids)
        })
        .collect()
}

/// Evaluation-mode encoder states for each sequence, as f32 rows.
pub(crate) fn encoder_states<T: Real>(model: &Seq2Seq<T>, sequences: &[Vec<TokenId>]) -> Result<Vec<Vec<Vec<f32>>>> {
    let mut out = Vec::with_capacity(sequences.len());
    for chunk in sequences.chunks(DIALOGUES_PER_CHUNK) {
        let refs: Vec<&[TokenId]> = chunk.iter().map(|s| s.as_slice()).collect();
        for trace in model.encode_batch(&refs)? {
            out.push(
                (0..trace.len())
                    .map(|t| trace.states.row(t).iter().map(|v| v.f64() as f32).collect())
                    .collect(),
            );
        }
    }
    Ok(out)
}

/// One record per encoder input token of each dialogue's longest history.
pub fn collect_encoder_states<T: Real>(
    model: &Seq2Seq<T>,
    vocab: &Vocabulary,
    corpus: &AnnotatedCorpus,
) -> Result<StateDataset> {
    let histories = full_histories(corpus, vocab);
    let mut labels = Vec::with_capacity(corpus.dialogues.len());
    for (d, (words, _)) in corpus.dialogues.iter().zip(&histories) {
        let l = token_labels(d)?;
        if l.len() != words.len() {
            return Err(Error::Alignment(format!("{} labels for {} encoder tokens", l.len(), words.len())));
        }
        labels.push(l);
    }
    let ids: Vec<Vec<TokenId>> = histories.iter().map(|(_, ids)| ids.clone()).collect();
    let states = encoder_states(model, &ids)?;
    let mut records = Vec::new();
    for (i, ((d, (words, _)), rows)) in corpus.dialogues.iter().zip(&histories).zip(states).enumerate() {
        let kinds = token_kinds(d);
        for (pos, state) in rows.into_iter().enumerate() {
            records.push(StateRecord {
                state,
                token: words[pos].clone(),
                label: labels[i][pos],
                kind: kinds[pos],
                dialogue: i,
                position: pos,
            });
        }
    }
    Ok(StateDataset { hidden_dim: model.config().hidden_dim, records })
}

fn u32_of(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Config(format!("{what} {v} does not fit the state file format")))
}

/// Header (magic, version, hidden dim, record count), then per record:
/// dialogue u32, position u32, label u8, kind u8, token length u16, token
/// bytes and `hidden_dim` little-endian f32 values.
pub fn write_states<W: Write>(mut w: W, data: &StateDataset) -> Result<()> {
    w.write_all(STATES_MAGIC)?;
    w.write_all(&STATES_VERSION.to_le_bytes())?;
    w.write_all(&u32_of(data.hidden_dim, "hidden dim")?.to_le_bytes())?;
    w.write_all(&(data.records.len() as u64).to_le_bytes())?;
    for r in &data.records {
        if r.state.len() != data.hidden_dim {
            return Err(Error::shape("write_states", data.hidden_dim, r.state.len()));
        }
        let token = r.token.as_bytes();
        let tlen = u16::try_from(token.len()).map_err(|_| Error::Config(format!("token {:?} too long", r.token)))?;
        w.write_all(&u32_of(r.dialogue, "dialogue")?.to_le_bytes())?;
        w.write_all(&u32_of(r.position, "position")?.to_le_bytes())?;
        w.write_all(&[r.label.as_u8(), r.kind as u8])?;
        w.write_all(&tlen.to_le_bytes())?;
        w.write_all(token)?;
        for v in &r.state {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Checkpoint("state file truncated".into()),
        _ => Error::Io(e),
    })?;
    Ok(buf)
}

pub fn read_states<R: Read>(mut r: R) -> Result<StateDataset> {
    let bad = |m: String| Error::Checkpoint(m);
    if &take::<8, _>(&mut r)? != STATES_MAGIC {
        return Err(bad("not a state file".into()));
    }
    let version = u32::from_le_bytes(take(&mut r)?);
    if version != STATES_VERSION {
        return Err(bad(format!("unsupported state file version {version}")));
    }
    let hidden_dim = u32::from_le_bytes(take(&mut r)?) as usize;
    let count = u64::from_le_bytes(take(&mut r)?) as usize;
    let mut records = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let dialogue = u32::from_le_bytes(take(&mut r)?) as usize;
        let position = u32::from_le_bytes(take(&mut r)?) as usize;
        let [label, kind] = take::<2, _>(&mut r)?;
        let label = Label::from_u8(label).ok_or_else(|| bad(format!("invalid label {label}")))?;
        let kind = StructureKind::from_u8(kind).ok_or_else(|| bad(format!("invalid structure kind {kind}")))?;
        let tlen = u16::from_le_bytes(take(&mut r)?) as usize;
        let mut token = vec![0u8; tlen];
        r.read_exact(&mut token)?;
        let token = String::from_utf8(token).map_err(|_| bad("token is not utf-8".into()))?;
        let mut state = Vec::with_capacity(hidden_dim);
        for _ in 0..hidden_dim {
            state.push(f32::from_le_bytes(take(&mut r)?));
        }
        records.push(StateRecord { state, token, label, kind, dialogue, position });
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(bad(format!("{} trailing bytes", rest.len())));
    }
    Ok(StateDataset { hidden_dim, records })
}
