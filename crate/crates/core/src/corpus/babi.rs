//! The bAbI dialogue text format.
//!
//! One line per turn, `<index> <user utterance>\t<system utterance>`, with a
//! single blank line after every dialogue.

use super::{Corpus, Dialogue, Split, Turn, UserGoal};
use crate::error::{Error, Result};

pub const API_CALL: &str = "api_call";

pub fn serialize_babi(corpus: &Corpus) -> String {
    let mut out = String::new();
    for dialogue in &corpus.dialogues {
        for turn in &dialogue.turns {
            out.push_str(&turn.index.to_string());
            out.push(' ');
            out.push_str(&turn.user.join(" "));
            out.push('\t');
            out.push_str(&turn.system.join(" "));
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

/// Parses a corpus, requiring every dialogue to close with an API call.
pub fn parse_babi(text: &str, split: Split) -> Result<Corpus> {
    parse(text, split, true)
}

/// Like [`parse_babi`] but accepts dialogues without an API call; their
/// `goal` is left empty.
pub fn parse_babi_lenient(text: &str, split: Split) -> Result<Corpus> {
    parse(text, split, false)
}

fn split_words(s: &str) -> Vec<String> {
    s.split(' ').filter(|w| !w.is_empty()).map(str::to_string).collect()
}

fn parse_line(line: &str, line_no: usize) -> Result<Turn> {
    let err = |message: &str| Error::Parse { line: line_no, message: message.to_string() };
    let (head, system) = line.split_once('\t').ok_or_else(|| err("missing tab separator"))?;
    let (index, user) = head.split_once(' ').ok_or_else(|| err("missing space after turn index"))?;
    let index: usize = index
        .parse()
        .map_err(|_| err(&format!("turn index {index:?} is not a number")))?;
    let user = split_words(user);
    let system = split_words(system);
    if user.is_empty() {
        return Err(err("empty user utterance"));
    }
    if system.is_empty() {
        return Err(err("empty system utterance"));
    }
    Ok(Turn { index, user, system })
}

fn finish(turns: Vec<Turn>, start: usize, split: Split, strict: bool) -> Result<Dialogue> {
    let structure = |message: String| Error::Structure { line: start, message };
    let last = turns.len() - 1;
    if let Some(pos) = turns[..last].iter().position(|t| t.system.first().map(String::as_str) == Some(API_CALL)) {
        return Err(structure(format!("API call before the final turn (turn {})", turns[pos].index)));
    }
    let goal = UserGoal::from_api_call(&turns[last].system, API_CALL, split.is_oov());
    if goal.is_none() && (strict || turns[last].system.first().map(String::as_str) == Some(API_CALL)) {
        return Err(structure("dialogue does not end with a 4-argument API call".into()));
    }
    Ok(Dialogue { turns, goal })
}

fn parse(text: &str, split: Split, strict: bool) -> Result<Corpus> {
    let mut corpus = Corpus::new(split);
    let mut turns: Vec<Turn> = Vec::new();
    let mut start = 0;
    for (i, raw) in text.split('\n').enumerate() {
        let line_no = i + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            if !turns.is_empty() {
                corpus.dialogues.push(finish(std::mem::take(&mut turns), start, split, strict)?);
            }
            continue;
        }
        let turn = parse_line(line, line_no)?;
        if let Some(prev) = turns.last() {
            if turn.index <= prev.index {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("turn index {} does not increase (previous {})", turn.index, prev.index),
                });
            }
        } else {
            start = line_no;
        }
        turns.push(turn);
    }
    if !turns.is_empty() {
        corpus.dialogues.push(finish(turns, start, split, strict)?);
    }
    Ok(corpus)
}
