//! Batched teacher-forced forward and backward passes.
//!
//! Sequences of different lengths are laid out time-major after sorting by
//! length, so the rows active at step `t` are always a prefix of the rows
//! active at step `t − 1` and every recurrent product is one GEMM.

use super::{apply_dropout, LstmIds, Mode, Seq2Seq};
use crate::corpus::{TokenId, Vocabulary};
use crate::error::{Error, Result};
use crate::numerics::linalg::{axpy, dot, matmul_nn, matmul_nt, matmul_tn};
use crate::numerics::{cross_entropy_in_place, fast_sigmoid, softmax_in_place, Grads, Matrix, Real, Values};
use crate::seed::derive_rng;

/// A training example: decode `target` from the encoder state after the
/// first `end` tokens of sequence `seq`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExampleRef<'a> {
    pub seq: usize,
    pub end: usize,
    pub target: &'a [TokenId],
}

/// Encoder inputs shared by several examples.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Batch<'a> {
    pub sequences: Vec<&'a [TokenId]>,
    pub examples: Vec<ExampleRef<'a>>,
}

impl<'a> Batch<'a> {
    pub fn single(history: &'a [TokenId], target: &'a [TokenId]) -> Self {
        Batch { sequences: vec![history], examples: vec![ExampleRef { seq: 0, end: history.len(), target }] }
    }

    pub fn validate(&self, vocab_size: usize) -> Result<()> {
        if self.examples.is_empty() {
            return Err(Error::EmptyInput("batch"));
        }
        for ex in &self.examples {
            let seq = self.sequences.get(ex.seq).ok_or(Error::OutOfRange {
                what: "batch sequences",
                index: ex.seq,
                size: self.sequences.len(),
            })?;
            if ex.end == 0 || ex.end > seq.len() {
                return Err(Error::OutOfRange { what: "history", index: ex.end, size: seq.len() });
            }
            if ex.target.last() != Some(&Vocabulary::EOS_ID) {
                return Err(Error::Config("target must end with <eos>".into()));
            }
        }
        for &id in self.sequences.iter().flat_map(|s| s.iter()).chain(self.examples.iter().flat_map(|e| e.target)) {
            if id >= vocab_size {
                return Err(Error::OutOfRange { what: "vocabulary", index: id, size: vocab_size });
            }
        }
        Ok(())
    }
}

/// Time-major layout of ragged sequences sorted by decreasing length.
#[derive(Debug, Clone)]
pub(crate) struct Ragged {
    pub order: Vec<usize>,
    pub rank: Vec<usize>,
    pub active: Vec<usize>,
    pub offset: Vec<usize>,
    pub total: usize,
}

impl Ragged {
    pub fn new(lens: &[usize]) -> Self {
        let mut order: Vec<usize> = (0..lens.len()).collect();
        order.sort_by(|&a, &b| lens[b].cmp(&lens[a]));
        let mut rank = vec![0; lens.len()];
        for (r, &o) in order.iter().enumerate() {
            rank[o] = r;
        }
        let steps = lens.iter().copied().max().unwrap_or(0);
        let active: Vec<usize> = (0..steps).map(|t| lens.iter().filter(|&&l| l > t).count()).collect();
        let mut offset = Vec::with_capacity(steps);
        let mut total = 0;
        for &a in &active {
            offset.push(total);
            total += a;
        }
        Ragged { order, rank, active, offset, total }
    }

    pub fn row(&self, item: usize, t: usize) -> usize {
        self.offset[t] + self.rank[item]
    }

    pub fn steps(&self) -> usize {
        self.active.len()
    }
}

/// Forward values of a ragged LSTM run; gates are stored post-activation.
pub(crate) struct LstmCache<T> {
    pub gates: Vec<T>,
    pub c: Vec<T>,
    pub tc: Vec<T>,
    pub h: Vec<T>,
    pub hprev: Vec<T>,
    pub cprev: Vec<T>,
}

pub(crate) fn run_lstm<T: Real>(
    p: &Values<'_, T>,
    ids: LstmIds,
    lay: &Ragged,
    x: &[T],
    h0: Option<(&[T], &[T])>,
) -> LstmCache<T> {
    let (n, hd) = (lay.total, p[ids.u].cols());
    let (e, g4) = (p[ids.w].cols(), 4 * hd);
    let mut z = vec![T::zero(); n * g4];
    matmul_nt(n, e, g4, x, p[ids.w].as_slice(), T::zero(), &mut z);
    let b = p[ids.b].as_slice();
    for row in z.chunks_exact_mut(g4) {
        for (v, &bb) in row.iter_mut().zip(b) {
            *v += bb;
        }
    }
    let mut c = vec![T::zero(); n * hd];
    let mut tc = vec![T::zero(); n * hd];
    let mut h = vec![T::zero(); n * hd];
    let mut hprev = vec![T::zero(); n * hd];
    let mut cprev = vec![T::zero(); n * hd];
    for t in 0..lay.steps() {
        let (bt, off) = (lay.active[t], lay.offset[t]);
        let span = off * hd..(off + bt) * hd;
        if t == 0 {
            if let Some((h0, c0)) = h0 {
                hprev[span.clone()].copy_from_slice(&h0[..bt * hd]);
                cprev[span.clone()].copy_from_slice(&c0[..bt * hd]);
            }
        } else {
            let prev = lay.offset[t - 1] * hd;
            hprev[span.clone()].copy_from_slice(&h[prev..prev + bt * hd]);
            cprev[span.clone()].copy_from_slice(&c[prev..prev + bt * hd]);
        }
        if t > 0 || h0.is_some() {
            matmul_nt(bt, hd, g4, &hprev[span.clone()], p[ids.u].as_slice(), T::one(), &mut z[off * g4..(off + bt) * g4]);
        }
        for r in off..off + bt {
            let zr = &mut z[r * g4..(r + 1) * g4];
            for k in 0..hd {
                let i = fast_sigmoid(zr[k]);
                let f = fast_sigmoid(zr[hd + k]);
                let g = zr[2 * hd + k].fast_tanh();
                let o = fast_sigmoid(zr[3 * hd + k]);
                zr[k] = i;
                zr[hd + k] = f;
                zr[2 * hd + k] = g;
                zr[3 * hd + k] = o;
                let cv = f * cprev[r * hd + k] + i * g;
                let tv = cv.fast_tanh();
                c[r * hd + k] = cv;
                tc[r * hd + k] = tv;
                h[r * hd + k] = o * tv;
            }
        }
    }
    LstmCache { gates: z, c, tc, h, hprev, cprev }
}

/// Backward through a ragged LSTM run. `dh` and `dc` carry gradients
/// reaching each row's outputs from outside the recurrence. Returns the
/// input gradient (`N×E`) and the gradients of the initial states.
#[allow(clippy::too_many_arguments)]
pub(crate) fn back_lstm<T: Real>(
    p: &Values<'_, T>,
    g: &mut Grads<'_, T>,
    ids: LstmIds,
    lay: &Ragged,
    x: &[T],
    cache: &LstmCache<T>,
    dh: &[T],
    dc: Option<&[T]>,
) -> (Vec<T>, Vec<T>, Vec<T>) {
    let (n, hd) = (lay.total, p[ids.u].cols());
    let (e, g4) = (p[ids.w].cols(), 4 * hd);
    let b0 = lay.active.first().copied().unwrap_or(0);
    let mut dh_carry = vec![T::zero(); b0 * hd];
    let mut dc_carry = vec![T::zero(); b0 * hd];
    let mut dz = vec![T::zero(); n * g4];
    let one = T::one();
    for t in (0..lay.steps()).rev() {
        let (bt, off) = (lay.active[t], lay.offset[t]);
        for r in 0..bt {
            let row = off + r;
            let gr = &cache.gates[row * g4..(row + 1) * g4];
            let dzr = &mut dz[row * g4..(row + 1) * g4];
            for k in 0..hd {
                let idx = row * hd + k;
                let dhv = dh[idx] + dh_carry[r * hd + k];
                let dcin = dc.map_or(T::zero(), |d| d[idx]) + dc_carry[r * hd + k];
                let (i, f, gg, o) = (gr[k], gr[hd + k], gr[2 * hd + k], gr[3 * hd + k]);
                let tv = cache.tc[idx];
                let dcv = dcin + dhv * o * (one - tv * tv);
                dzr[k] = dcv * gg * i * (one - i);
                dzr[hd + k] = dcv * cache.cprev[idx] * f * (one - f);
                dzr[2 * hd + k] = dcv * i * (one - gg * gg);
                dzr[3 * hd + k] = dhv * tv * o * (one - o);
                dc_carry[r * hd + k] = dcv * f;
            }
        }
        matmul_nn(bt, g4, hd, &dz[off * g4..(off + bt) * g4], p[ids.u].as_slice(), T::zero(), &mut dh_carry[..bt * hd]);
    }
    matmul_tn(g4, n, e, &dz, x, T::one(), g[ids.w].as_mut_slice());
    matmul_tn(g4, n, hd, &dz, &cache.hprev, T::one(), g[ids.u].as_mut_slice());
    let db = g[ids.b].as_mut_slice();
    for row in dz.chunks_exact(g4) {
        for (d, &v) in db.iter_mut().zip(row) {
            *d += v;
        }
    }
    let mut dx = vec![T::zero(); n * e];
    matmul_nn(n, g4, e, &dz, p[ids.w].as_slice(), T::zero(), &mut dx);
    (dx, dh_carry, dc_carry)
}

/// Embedded inputs for a ragged layout, with the dropout multipliers used.
pub(crate) fn embed_ragged<T: Real>(
    emb: &Matrix<T>,
    lay: &Ragged,
    tokens: impl Fn(usize, usize) -> TokenId,
    lens: &[usize],
    dropout: Option<(f64, u64, u64)>,
) -> (Vec<T>, Vec<TokenId>, Option<Vec<T>>) {
    let e = emb.cols();
    let mut x = vec![T::zero(); lay.total * e];
    let mut ids = vec![0; lay.total];
    let mut mask = dropout.map(|_| vec![T::zero(); lay.total * e]);
    for (item, &len) in lens.iter().enumerate() {
        let mut stream = dropout.map(|(_, seed, tag)| derive_rng(seed, &[tag, item as u64]));
        for t in 0..len {
            let row = lay.row(item, t);
            let id = tokens(item, t);
            ids[row] = id;
            let xr = &mut x[row * e..(row + 1) * e];
            xr.copy_from_slice(emb.row(id));
            if let (Some(r), Some(m), Some((rate, _, _))) = (stream.as_mut(), mask.as_mut(), dropout) {
                let mr = &mut m[row * e..(row + 1) * e];
                mr.iter_mut().for_each(|v| *v = T::one());
                apply_dropout(mr, rate, r);
                for (a, &b) in xr.iter_mut().zip(mr.iter()) {
                    *a *= b;
                }
            }
        }
    }
    (x, ids, mask)
}

fn scatter_embedding<T: Real>(demb: &mut Matrix<T>, ids: &[TokenId], dx: &[T], mask: Option<&Vec<T>>) {
    let e = demb.cols();
    for (row, &id) in ids.iter().enumerate() {
        let src = &dx[row * e..(row + 1) * e];
        let dst = demb.row_mut(id);
        match mask {
            Some(m) => {
                for ((d, &s), &mm) in dst.iter_mut().zip(src).zip(&m[row * e..(row + 1) * e]) {
                    *d += s * mm;
                }
            }
            None => axpy(T::one(), src, dst),
        }
    }
}

struct AttentionCache<T> {
    /// Per decoder row: start into `alpha` and `u` (scaled by the attention width).
    start: Vec<usize>,
    alpha: Vec<T>,
    u: Vec<T>,
}

struct Forward<T> {
    enc_lay: Ragged,
    enc_x: Vec<T>,
    enc_ids: Vec<TokenId>,
    enc_mask: Option<Vec<T>>,
    enc: LstmCache<T>,
    dec_lay: Ragged,
    dec_x: Vec<T>,
    dec_ids: Vec<TokenId>,
    dec_mask: Option<Vec<T>>,
    dec: LstmCache<T>,
    att: Option<AttentionCache<T>>,
    features: Vec<T>,
    dlogits: Vec<T>,
    loss: f64,
}

impl<T: Real> Seq2Seq<T> {
    fn forward(&self, batch: &Batch<'_>, mode: Mode) -> Result<Forward<T>> {
        batch.validate(self.config.vocab_size)?;
        let p = self.params.values();
        let (hd, v) = (self.config.hidden_dim, self.config.vocab_size);
        let dropout = match mode {
            Mode::Train { seed } if self.config.dropout > 0.0 => Some(seed),
            _ => None,
        };

        let enc_lens: Vec<usize> = batch.sequences.iter().map(|s| s.len()).collect();
        let enc_lay = Ragged::new(&enc_lens);
        let (enc_x, enc_ids, enc_mask) = embed_ragged(
            &p[self.ids.embedding],
            &enc_lay,
            |s, t| batch.sequences[s][t],
            &enc_lens,
            dropout.map(|s| (self.config.dropout, s, 0)),
        );
        let enc = run_lstm(&p, self.ids.encoder, &enc_lay, &enc_x, None);

        let dec_lens: Vec<usize> = batch.examples.iter().map(|e| e.target.len()).collect();
        let dec_lay = Ragged::new(&dec_lens);
        let (dec_x, dec_ids, dec_mask) = embed_ragged(
            &p[self.ids.embedding],
            &dec_lay,
            |e, j| if j == 0 { Vocabulary::EOS_ID } else { batch.examples[e].target[j - 1] },
            &dec_lens,
            dropout.map(|s| (self.config.dropout, s, 1)),
        );
        let b0 = dec_lay.active.first().copied().unwrap_or(0);
        let mut h0 = vec![T::zero(); b0 * hd];
        let mut c0 = vec![T::zero(); b0 * hd];
        for (r, &e) in dec_lay.order.iter().enumerate() {
            let ex = &batch.examples[e];
            let row = enc_lay.row(ex.seq, ex.end - 1);
            h0[r * hd..(r + 1) * hd].copy_from_slice(&enc.h[row * hd..(row + 1) * hd]);
            c0[r * hd..(r + 1) * hd].copy_from_slice(&enc.c[row * hd..(row + 1) * hd]);
        }
        let dec = run_lstm(&p, self.ids.decoder, &dec_lay, &dec_x, Some((&h0, &c0)));

        let m = dec_lay.total;
        let d = self.config.output_dim();
        let mut features = vec![T::zero(); m * d];
        for row in 0..m {
            features[row * d..row * d + hd].copy_from_slice(&dec.h[row * hd..(row + 1) * hd]);
        }
        let att = match self.ids.attention {
            None => None,
            Some(a) => {
                let n = enc_lay.total;
                let mut keys = vec![T::zero(); n * hd];
                matmul_nt(n, hd, hd, &enc.h, p[a.w_h].as_slice(), T::zero(), &mut keys);
                let mut q = vec![T::zero(); m * hd];
                matmul_nt(m, hd, hd, &dec.h, p[a.w_s].as_slice(), T::zero(), &mut q);
                let vv = p[a.v].as_slice();
                let mut start = Vec::with_capacity(m + 1);
                let mut alpha = Vec::new();
                let mut u = Vec::new();
                for row in 0..m {
                    let (e, _) = row_item(&dec_lay, row);
                    let ex = &batch.examples[e];
                    start.push(alpha.len());
                    let qr = &q[row * hd..(row + 1) * hd];
                    let a0 = alpha.len();
                    for i in 0..ex.end {
                        let kr = enc_lay.row(ex.seq, i);
                        let k = &keys[kr * hd..(kr + 1) * hd];
                        let u0 = u.len();
                        u.extend(k.iter().zip(qr).map(|(&a, &b)| (a + b).fast_tanh()));
                        alpha.push(dot(vv, &u[u0..]));
                    }
                    softmax_in_place(&mut alpha[a0..])?;
                    let ctx = &mut features[row * d + hd..(row + 1) * d];
                    for i in 0..ex.end {
                        let kr = enc_lay.row(ex.seq, i);
                        axpy(alpha[a0 + i], &enc.h[kr * hd..(kr + 1) * hd], ctx);
                    }
                }
                start.push(alpha.len());
                Some(AttentionCache { start, alpha, u })
            }
        };

        let mut logits = vec![T::zero(); m * v];
        matmul_nt(m, d, v, &features, p[self.ids.out_w].as_slice(), T::zero(), &mut logits);
        let ob = p[self.ids.out_b].as_slice();
        let n_ex = batch.examples.len() as f64;
        let mut loss = 0.0;
        for row in 0..m {
            let (e, j) = row_item(&dec_lay, row);
            let target = batch.examples[e].target;
            let lr = &mut logits[row * v..(row + 1) * v];
            for (l, &b) in lr.iter_mut().zip(ob) {
                *l += b;
            }
            let weight = 1.0 / (target.len() as f64 * n_ex);
            let ce = cross_entropy_in_place(lr, target[j])?;
            loss += ce * weight;
            let w = T::of(weight);
            lr.iter_mut().for_each(|x| *x *= w);
        }
        if !loss.is_finite() {
            return Err(Error::NonFinite("loss".into()));
        }
        Ok(Forward {
            enc_lay,
            enc_x,
            enc_ids,
            enc_mask,
            enc,
            dec_lay,
            dec_x,
            dec_ids,
            dec_mask,
            dec,
            att,
            features,
            dlogits: logits,
            loss,
        })
    }

    /// Mean over examples of each example's mean token loss.
    pub fn loss(&self, batch: &Batch<'_>, mode: Mode) -> Result<f64> {
        Ok(self.forward(batch, mode)?.loss)
    }

    /// As [`Seq2Seq::loss`], adding gradients to the parameter store.
    pub fn loss_and_grad(&mut self, batch: &Batch<'_>, mode: Mode) -> Result<f64> {
        let fw = self.forward(batch, mode)?;
        let (hd, v, d) = (self.config.hidden_dim, self.config.vocab_size, self.config.output_dim());
        let ids = self.ids;
        let (p, mut g) = self.params.split_mut();
        let m = fw.dec_lay.total;
        let n = fw.enc_lay.total;

        matmul_tn(v, m, d, &fw.dlogits, &fw.features, T::one(), g[ids.out_w].as_mut_slice());
        let db = g[ids.out_b].as_mut_slice();
        for row in fw.dlogits.chunks_exact(v) {
            for (a, &b) in db.iter_mut().zip(row) {
                *a += b;
            }
        }
        let mut dfeat = vec![T::zero(); m * d];
        matmul_nn(m, v, d, &fw.dlogits, p[ids.out_w].as_slice(), T::zero(), &mut dfeat);
        let mut ds = vec![T::zero(); m * hd];
        for row in 0..m {
            ds[row * hd..(row + 1) * hd].copy_from_slice(&dfeat[row * d..row * d + hd]);
        }

        let mut denc_h = vec![T::zero(); n * hd];
        let mut denc_c = vec![T::zero(); n * hd];
        if let (Some(a), Some(att)) = (ids.attention, fw.att.as_ref()) {
            let vv = p[a.v].as_slice().to_vec();
            let mut dv = vec![T::zero(); hd];
            let mut dk = vec![T::zero(); n * hd];
            let mut dq = vec![T::zero(); m * hd];
            let mut dalpha = Vec::new();
            for row in 0..m {
                let (e, _) = row_item(&fw.dec_lay, row);
                let ex = &batch.examples[e];
                let dctx = &dfeat[row * d + hd..(row + 1) * d];
                let a0 = att.start[row];
                let alpha = &att.alpha[a0..att.start[row + 1]];
                dalpha.clear();
                for (i, &al) in alpha.iter().enumerate() {
                    let kr = fw.enc_lay.row(ex.seq, i);
                    dalpha.push(dot(dctx, &fw.enc.h[kr * hd..(kr + 1) * hd]));
                    axpy(al, dctx, &mut denc_h[kr * hd..(kr + 1) * hd]);
                }
                let s: f64 = alpha.iter().zip(&dalpha).map(|(a, b)| a.f64() * b.f64()).sum();
                let s = T::of(s);
                let dqr = &mut dq[row * hd..(row + 1) * hd];
                for (i, &al) in alpha.iter().enumerate() {
                    let de = al * (dalpha[i] - s);
                    let kr = fw.enc_lay.row(ex.seq, i);
                    let ur = &att.u[(a0 + i) * hd..(a0 + i + 1) * hd];
                    let dkr = &mut dk[kr * hd..(kr + 1) * hd];
                    for k in 0..hd {
                        let uk = ur[k];
                        dv[k] += de * uk;
                        let dpre = de * vv[k] * (T::one() - uk * uk);
                        dkr[k] += dpre;
                        dqr[k] += dpre;
                    }
                }
            }
            axpy(T::one(), &dv, g[a.v].as_mut_slice());
            matmul_tn(hd, m, hd, &dq, &fw.dec.h, T::one(), g[a.w_s].as_mut_slice());
            matmul_nn(m, hd, hd, &dq, p[a.w_s].as_slice(), T::one(), &mut ds);
            matmul_tn(hd, n, hd, &dk, &fw.enc.h, T::one(), g[a.w_h].as_mut_slice());
            matmul_nn(n, hd, hd, &dk, p[a.w_h].as_slice(), T::one(), &mut denc_h);
        }

        let (dx_dec, dh0, dc0) = back_lstm(&p, &mut g, ids.decoder, &fw.dec_lay, &fw.dec_x, &fw.dec, &ds, None);
        for (r, &e) in fw.dec_lay.order.iter().enumerate() {
            let ex = &batch.examples[e];
            let row = fw.enc_lay.row(ex.seq, ex.end - 1);
            axpy(T::one(), &dh0[r * hd..(r + 1) * hd], &mut denc_h[row * hd..(row + 1) * hd]);
            axpy(T::one(), &dc0[r * hd..(r + 1) * hd], &mut denc_c[row * hd..(row + 1) * hd]);
        }
        let (dx_enc, _, _) = back_lstm(&p, &mut g, ids.encoder, &fw.enc_lay, &fw.enc_x, &fw.enc, &denc_h, Some(&denc_c));
        let demb = &mut g[ids.embedding];
        scatter_embedding(demb, &fw.dec_ids, &dx_dec, fw.dec_mask.as_ref());
        scatter_embedding(demb, &fw.enc_ids, &dx_enc, fw.enc_mask.as_ref());
        Ok(fw.loss)
    }
}

/// Item index and step of a flat row in a ragged layout.
pub(crate) fn row_item(lay: &Ragged, row: usize) -> (usize, usize) {
    let t = match lay.offset.binary_search(&row) {
        Ok(t) => t,
        Err(t) => t - 1,
    };
    (lay.order[row - lay.offset[t]], t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{grad_check, init_uniform, GradCheckConfig, ParameterStore};
    use crate::seed::rng;

    #[test]
    fn single_lstm_step_gradient_check() {
        let (e, hd) = (5, 4);
        let mut r = rng(12);
        let mut store = ParameterStore::<f64>::new();
        let ids = LstmIds {
            w: store.add("W", init_uniform(4 * hd, e, 0.5, &mut r)).unwrap(),
            u: store.add("U", init_uniform(4 * hd, hd, 0.5, &mut r)).unwrap(),
            b: store.add("b", init_uniform(4 * hd, 1, 0.5, &mut r)).unwrap(),
        };
        let x: Vec<f64> = init_uniform::<f64, _>(1, e, 1.0, &mut r).into_vec();
        let h0: Vec<f64> = init_uniform::<f64, _>(1, hd, 0.8, &mut r).into_vec();
        let c0: Vec<f64> = init_uniform::<f64, _>(1, hd, 0.8, &mut r).into_vec();
        let wh: Vec<f64> = (0..hd).map(|k| 0.3 + 0.2 * k as f64).collect();
        let wc: Vec<f64> = (0..hd).map(|k| -0.4 + 0.25 * k as f64).collect();
        let lay = Ragged::new(&[1]);
        let report = grad_check(
            &mut store,
            |s| {
                let cache = {
                    let p = s.values();
                    run_lstm(&p, ids, &lay, &x, Some((&h0, &c0)))
                };
                let loss: f64 = (0..hd).map(|k| wh[k] * cache.h[k] + wc[k] * cache.c[k]).sum();
                let (p, mut g) = s.split_mut();
                back_lstm(&p, &mut g, ids, &lay, &x, &cache, &wh, Some(&wc));
                Ok(loss)
            },
            &GradCheckConfig::default(),
        )
        .unwrap();
        assert_eq!(report.checked, store.num_scalars());
        assert!(report.max_rel_error < 1e-4, "{report:?}");
    }

    #[test]
    fn ragged_layout_rows() {
        let lay = Ragged::new(&[2, 4, 1]);
        assert_eq!(lay.order, vec![1, 0, 2]);
        assert_eq!(lay.active, vec![3, 2, 1, 1]);
        assert_eq!(lay.offset, vec![0, 3, 5, 6]);
        assert_eq!(lay.total, 7);
        assert_eq!(lay.row(0, 1), 4);
        for row in 0..lay.total {
            let (item, t) = row_item(&lay, row);
            assert_eq!(lay.row(item, t), row);
        }
    }
}
