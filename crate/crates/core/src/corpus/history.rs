use super::vocab::{SYSTEM_MARK, USER_MARK};
use super::Turn;

/// Encoder input for the system response of turn `upto` (0-based):
/// every earlier exchange plus the current user utterance, each utterance
/// preceded by a speaker marker.
pub fn history_tokens(turns: &[Turn], upto: usize) -> Vec<String> {
    let mut out = Vec::new();
    for (i, turn) in turns[..=upto].iter().enumerate() {
        out.push(USER_MARK.to_string());
        out.extend(turn.user.iter().cloned());
        if i < upto {
            out.push(SYSTEM_MARK.to_string());
            out.extend(turn.system.iter().cloned());
        }
    }
    out
}

/// Position in the full history (the one for the last turn) where the
/// history for turn `upto` ends, exclusive.
pub fn history_len(turns: &[Turn], upto: usize) -> usize {
    turns[..=upto]
        .iter()
        .enumerate()
        .map(|(i, t)| 1 + t.user.len() + if i < upto { 1 + t.system.len() } else { 0 })
        .sum()
}
