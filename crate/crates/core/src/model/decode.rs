//! Greedy decoding and evaluation-mode encoder traces, batched across
//! queries that share encoder inputs.

use serde::{Deserialize, Serialize};

use super::batch::{embed_ragged, run_lstm, Ragged};
use super::{EncoderTrace, Seq2Seq};
use crate::corpus::{TokenId, Vocabulary};
use crate::error::{Error, Result};
use crate::numerics::linalg::{axpy, dot, matmul_nt};
use crate::numerics::{argmax, fast_sigmoid, softmax_in_place, Matrix, Real};

/// `weights[j][i]`: attention of output step `j` on input token `i`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AttentionMap {
    pub weights: Vec<Vec<f64>>,
}

impl AttentionMap {
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Decoded {
    /// Emitted tokens, without the closing `<eos>`.
    pub tokens: Vec<TokenId>,
    pub attention: AttentionMap,
}

struct Encoded<T> {
    lay: Ragged,
    h: Vec<T>,
    c: Vec<T>,
    keys: Option<Vec<T>>,
}

impl<T: Real> Seq2Seq<T> {
    fn encode_all(&self, sequences: &[&[TokenId]]) -> Result<Encoded<T>> {
        for s in sequences {
            if s.is_empty() {
                return Err(Error::EmptyInput("encode"));
            }
            if let Some(&bad) = s.iter().find(|&&id| id >= self.config.vocab_size) {
                return Err(Error::OutOfRange { what: "vocabulary", index: bad, size: self.config.vocab_size });
            }
        }
        let p = self.params.values();
        let hd = self.config.hidden_dim;
        let lens: Vec<usize> = sequences.iter().map(|s| s.len()).collect();
        let lay = Ragged::new(&lens);
        let (x, _, _) = embed_ragged(&p[self.ids.embedding], &lay, |s, t| sequences[s][t], &lens, None);
        let cache = run_lstm(&p, self.ids.encoder, &lay, &x, None);
        let keys = self.ids.attention.map(|a| {
            let mut k = vec![T::zero(); lay.total * hd];
            matmul_nt(lay.total, hd, hd, &cache.h, p[a.w_h].as_slice(), T::zero(), &mut k);
            k
        });
        Ok(Encoded { lay, h: cache.h, c: cache.c, keys })
    }

    /// Evaluation-mode encoder traces for several sequences at once.
    pub fn encode_batch(&self, sequences: &[&[TokenId]]) -> Result<Vec<EncoderTrace<T>>> {
        let enc = self.encode_all(sequences)?;
        let hd = self.config.hidden_dim;
        sequences
            .iter()
            .enumerate()
            .map(|(s, seq)| {
                let mut states = Matrix::zeros(seq.len(), hd);
                let mut cells = Matrix::zeros(seq.len(), hd);
                for t in 0..seq.len() {
                    let row = enc.lay.row(s, t);
                    states.row_mut(t).copy_from_slice(&enc.h[row * hd..(row + 1) * hd]);
                    cells.row_mut(t).copy_from_slice(&enc.c[row * hd..(row + 1) * hd]);
                }
                Ok(EncoderTrace { states, cells })
            })
            .collect()
    }

    /// Greedy decoding of one history.
    pub fn greedy_decode(&self, history: &[TokenId], max_len: usize) -> Result<Decoded> {
        let mut out = self.decode_batch(&[history], &[(0, history.len())], max_len)?;
        Ok(out.pop().expect("one query"))
    }

    /// Greedy decoding for `(sequence, prefix length)` queries; argmax ties
    /// go to the lowest token id.
    pub fn decode_batch(&self, sequences: &[&[TokenId]], queries: &[(usize, usize)], max_len: usize) -> Result<Vec<Decoded>> {
        for &(s, end) in queries {
            let len = sequences.get(s).map(|q| q.len()).ok_or(Error::OutOfRange {
                what: "sequences",
                index: s,
                size: sequences.len(),
            })?;
            if end == 0 || end > len {
                return Err(Error::OutOfRange { what: "history", index: end, size: len });
            }
        }
        if queries.is_empty() {
            return Ok(Vec::new());
        }
        let enc = self.encode_all(sequences)?;
        let p = self.params.values();
        let (hd, e, v, d) = (self.config.hidden_dim, self.config.embedding_dim, self.config.vocab_size, self.config.output_dim());
        let g4 = 4 * hd;
        let nq = queries.len();
        let mut h = vec![T::zero(); nq * hd];
        let mut c = vec![T::zero(); nq * hd];
        for (q, &(s, end)) in queries.iter().enumerate() {
            let row = enc.lay.row(s, end - 1);
            h[q * hd..(q + 1) * hd].copy_from_slice(&enc.h[row * hd..(row + 1) * hd]);
            c[q * hd..(q + 1) * hd].copy_from_slice(&enc.c[row * hd..(row + 1) * hd]);
        }
        let mut prev = vec![Vocabulary::EOS_ID; nq];
        let mut done = vec![false; nq];
        let mut out = vec![Decoded::default(); nq];
        let emb = &p[self.ids.embedding];
        let dec = self.ids.decoder;
        let mut x = vec![T::zero(); nq * e];
        let mut z = vec![T::zero(); nq * g4];
        let mut feats = vec![T::zero(); nq * d];
        let mut qv = vec![T::zero(); nq * hd];
        let mut logits = vec![T::zero(); nq * v];
        let mut scores = Vec::new();
        for _ in 0..max_len {
            for q in 0..nq {
                x[q * e..(q + 1) * e].copy_from_slice(emb.row(prev[q]));
            }
            matmul_nt(nq, e, g4, &x, p[dec.w].as_slice(), T::zero(), &mut z);
            matmul_nt(nq, hd, g4, &h, p[dec.u].as_slice(), T::one(), &mut z);
            let b = p[dec.b].as_slice();
            for q in 0..nq {
                let zr = &z[q * g4..(q + 1) * g4];
                for k in 0..hd {
                    let i = fast_sigmoid(zr[k] + b[k]);
                    let f = fast_sigmoid(zr[hd + k] + b[hd + k]);
                    let g = (zr[2 * hd + k] + b[2 * hd + k]).fast_tanh();
                    let o = fast_sigmoid(zr[3 * hd + k] + b[3 * hd + k]);
                    let cv = f * c[q * hd + k] + i * g;
                    c[q * hd + k] = cv;
                    h[q * hd + k] = o * cv.fast_tanh();
                }
                feats[q * d..q * d + hd].copy_from_slice(&h[q * hd..(q + 1) * hd]);
            }
            let mut alphas: Vec<Option<Vec<T>>> = vec![None; nq];
            if let (Some(a), Some(keys)) = (self.ids.attention, enc.keys.as_ref()) {
                matmul_nt(nq, hd, hd, &h, p[a.w_s].as_slice(), T::zero(), &mut qv);
                let vv = p[a.v].as_slice();
                let mut u = vec![T::zero(); hd];
                for (q, &(s, end)) in queries.iter().enumerate() {
                    if done[q] {
                        continue;
                    }
                    let qr = &qv[q * hd..(q + 1) * hd];
                    scores.clear();
                    for i in 0..end {
                        let kr = enc.lay.row(s, i);
                        for ((uu, &kk), &qq) in u.iter_mut().zip(&keys[kr * hd..(kr + 1) * hd]).zip(qr) {
                            *uu = (kk + qq).fast_tanh();
                        }
                        scores.push(dot(vv, &u));
                    }
                    softmax_in_place(&mut scores)?;
                    let ctx = &mut feats[q * d + hd..(q + 1) * d];
                    ctx.iter_mut().for_each(|x| *x = T::zero());
                    for (i, &al) in scores.iter().enumerate() {
                        let kr = enc.lay.row(s, i);
                        axpy(al, &enc.h[kr * hd..(kr + 1) * hd], ctx);
                    }
                    alphas[q] = Some(scores.clone());
                }
            }
            matmul_nt(nq, d, v, &feats, p[self.ids.out_w].as_slice(), T::zero(), &mut logits);
            let ob = p[self.ids.out_b].as_slice();
            for q in 0..nq {
                if done[q] {
                    continue;
                }
                let lr = &mut logits[q * v..(q + 1) * v];
                for (l, &bb) in lr.iter_mut().zip(ob) {
                    *l += bb;
                }
                let tok = argmax(lr).expect("nonempty vocabulary");
                if tok == Vocabulary::EOS_ID {
                    done[q] = true;
                    continue;
                }
                out[q].tokens.push(tok);
                if let Some(al) = alphas[q].take() {
                    out[q].attention.weights.push(al.iter().map(|x| x.f64()).collect());
                }
                prev[q] = tok;
            }
            if done.iter().all(|&x| x) {
                break;
            }
        }
        Ok(out)
    }
}
