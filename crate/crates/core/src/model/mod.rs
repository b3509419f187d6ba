//! One-layer LSTM encoder-decoder with optional additive attention.
//!
//! The encoder reads a whole dialogue history; the decoder starts from the
//! encoder's final state with `<eos>` as its first input and, when attention
//! is on, attends from its current state over every encoder state. Output
//! logits are `W_o·[s; ctx] + b_o` (or `W_o·s + b_o` without attention).
//!
//! Training runs batched: each dialogue is encoded once and every example
//! taken from it decodes from the encoder state at the end of its own
//! history prefix. The single-sequence operations below are reference
//! implementations of the same arithmetic.

mod batch;
mod check;
mod decode;
mod io;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{TokenId, Vocabulary};
use crate::error::{Error, Result};
use crate::numerics::{affine, fan_in_scale, fast_sigmoid, init_uniform, linalg, softmax_in_place, Matrix, ParamId, ParameterStore, Real};
use crate::seed::{derive_rng, rng, LabRng};

pub use batch::{Batch, ExampleRef};
pub use check::check_gradients;
pub use decode::{AttentionMap, Decoded};
pub use io::{load_model, save_model, ModelHeader};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub embedding_dim: usize,
    pub hidden_dim: usize,
    pub attention: bool,
    pub dropout: f64,
    pub vocab_size: usize,
    pub max_decode_len: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { embedding_dim: 128, hidden_dim: 500, attention: true, dropout: 0.2, vocab_size: 0, max_decode_len: 24 }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embedding_dim == 0 || self.hidden_dim == 0 || self.vocab_size == 0 || self.max_decode_len == 0 {
            return Err(Error::Config("model dimensions must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }

    /// Width of the output projection's input.
    pub fn output_dim(&self) -> usize {
        if self.attention {
            2 * self.hidden_dim
        } else {
            self.hidden_dim
        }
    }
}

/// Whether a forward pass applies dropout, and with which mask stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Eval,
    Train { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct LstmIds {
    pub w: ParamId,
    pub u: ParamId,
    pub b: ParamId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct AttentionIds {
    pub w_h: ParamId,
    pub w_s: ParamId,
    pub v: ParamId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Ids {
    pub embedding: ParamId,
    pub encoder: LstmIds,
    pub decoder: LstmIds,
    pub attention: Option<AttentionIds>,
    pub out_w: ParamId,
    pub out_b: ParamId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Seq2Seq<T> {
    config: ModelConfig,
    params: ParameterStore<T>,
    ids: Ids,
}

/// Encoder hidden states, one row per input token, plus the final cell.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderTrace<T> {
    pub states: Matrix<T>,
    pub cells: Matrix<T>,
}

impl<T: Real> EncoderTrace<T> {
    pub fn len(&self) -> usize {
        self.states.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.states.rows() == 0
    }

    pub fn final_state(&self) -> LstmState<T> {
        let last = self.len() - 1;
        LstmState { h: self.states.row(last).to_vec(), c: self.cells.row(last).to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState<T> {
    pub h: Vec<T>,
    pub c: Vec<T>,
}

impl<T: Real> LstmState<T> {
    pub fn zeros(n: usize) -> Self {
        LstmState { h: vec![T::zero(); n], c: vec![T::zero(); n] }
    }
}

/// One LSTM cell step. `w` is `4H×X`, `u` is `4H×H` and `b` has `4H`
/// entries, with gate blocks ordered input, forget, cell, output.
pub fn lstm_step<T: Real>(x: &[T], state: &LstmState<T>, w: &Matrix<T>, u: &Matrix<T>, b: &[T]) -> Result<LstmState<T>> {
    let n = state.h.len();
    if state.c.len() != n || u.shape() != (4 * n, n) || w.rows() != 4 * n {
        return Err(Error::shape("lstm_step", format!("U {}x{n}, W {}x_", 4 * n, 4 * n), format!("U {:?}, W {:?}", u.shape(), w.shape())));
    }
    let zx = affine(x, w, b)?;
    let zh = affine(&state.h, u, &vec![T::zero(); 4 * n])?;
    let mut h = vec![T::zero(); n];
    let mut c = vec![T::zero(); n];
    for k in 0..n {
        let gate = |g: usize| zx[g * n + k] + zh[g * n + k];
        let (i, f, g, o) = (fast_sigmoid(gate(0)), fast_sigmoid(gate(1)), gate(2).fast_tanh(), fast_sigmoid(gate(3)));
        c[k] = f * state.c[k] + i * g;
        h[k] = o * c[k].fast_tanh();
    }
    Ok(LstmState { h, c })
}

impl<T: Real> Seq2Seq<T> {
    /// Fresh parameters: uniform `±1/√fan_in` weights, embeddings uniform
    /// on `[−1, 1]`, zero biases except a forget-gate bias of 1.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let (v, e, h) = (config.vocab_size, config.embedding_dim, config.hidden_dim);
        let mut r = rng(seed);
        let mut params = ParameterStore::new();
        let embedding = params.add("embedding", init_uniform(v, e, 1.0, &mut r))?;
        let lstm = |prefix: &str, params: &mut ParameterStore<T>, r: &mut LabRng| -> Result<LstmIds> {
            let w = params.add(&format!("{prefix}.W"), init_uniform(4 * h, e, fan_in_scale(e), r))?;
            let u = params.add(&format!("{prefix}.U"), init_uniform(4 * h, h, fan_in_scale(h), r))?;
            let mut bias = Matrix::zeros(4 * h, 1);
            for k in h..2 * h {
                bias.set(k, 0, T::one());
            }
            let b = params.add(&format!("{prefix}.b"), bias)?;
            Ok(LstmIds { w, u, b })
        };
        let encoder = lstm("encoder", &mut params, &mut r)?;
        let decoder = lstm("decoder", &mut params, &mut r)?;
        let attention = if config.attention {
            Some(AttentionIds {
                w_h: params.add("attention.W_h", init_uniform(h, h, fan_in_scale(h), &mut r))?,
                w_s: params.add("attention.W_s", init_uniform(h, h, fan_in_scale(h), &mut r))?,
                v: params.add("attention.v", init_uniform(h, 1, fan_in_scale(h), &mut r))?,
            })
        } else {
            None
        };
        let d = config.output_dim();
        let out_w = params.add("output.W", init_uniform(v, d, fan_in_scale(d), &mut r))?;
        let out_b = params.add("output.b", Matrix::zeros(v, 1))?;
        Ok(Seq2Seq { config, params, ids: Ids { embedding, encoder, decoder, attention, out_w, out_b } })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParameterStore<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParameterStore<T> {
        &mut self.params
    }

    pub fn has_attention(&self) -> bool {
        self.ids.attention.is_some()
    }

    /// Same architecture and values in another precision.
    pub fn cast<U: Real>(&self) -> Seq2Seq<U> {
        Seq2Seq { config: self.config.clone(), params: self.params.cast(), ids: self.ids }
    }

    fn check_token(&self, id: TokenId) -> Result<()> {
        if id >= self.config.vocab_size {
            return Err(Error::OutOfRange { what: "vocabulary", index: id, size: self.config.vocab_size });
        }
        Ok(())
    }

    /// Embedding row, with inverted dropout when a mask stream is given.
    fn embed(&self, id: TokenId, dropout: Option<&mut LabRng>) -> Vec<T> {
        let mut x = self.params.value(self.ids.embedding).row(id).to_vec();
        if let Some(r) = dropout {
            apply_dropout(&mut x, self.config.dropout, r);
        }
        x
    }

    fn lstm(&self, ids: LstmIds, x: &[T], state: &LstmState<T>) -> Result<LstmState<T>> {
        let p = &self.params;
        lstm_step(x, state, p.value(ids.w), p.value(ids.u), p.value(ids.b).as_slice())
    }

    /// Runs the encoder from a zero state over `input`.
    pub fn encode(&self, input: &[TokenId], mode: Mode) -> Result<EncoderTrace<T>> {
        if input.is_empty() {
            return Err(Error::EmptyInput("encode"));
        }
        let h = self.config.hidden_dim;
        let mut mask_rng = match mode {
            Mode::Train { seed } => Some(derive_rng(seed, &[0, 0])),
            Mode::Eval => None,
        };
        let mut states = Matrix::zeros(input.len(), h);
        let mut cells = Matrix::zeros(input.len(), h);
        let mut state = LstmState::zeros(h);
        for (t, &id) in input.iter().enumerate() {
            self.check_token(id)?;
            let x = self.embed(id, mask_rng.as_mut());
            state = self.lstm(self.ids.encoder, &x, &state)?;
            states.row_mut(t).copy_from_slice(&state.h);
            cells.row_mut(t).copy_from_slice(&state.c);
        }
        Ok(EncoderTrace { states, cells })
    }

    /// Additive attention of decoder state `s` over the trace.
    pub fn attend(&self, s: &[T], trace: &EncoderTrace<T>) -> Result<(Vec<T>, Vec<T>)> {
        let att = self.ids.attention.ok_or(Error::AttentionDisabled)?;
        let p = &self.params;
        let zeros = vec![T::zero(); self.config.hidden_dim];
        let q = affine(s, p.value(att.w_s), &zeros)?;
        let v = p.value(att.v).as_slice();
        let mut alpha = Vec::with_capacity(trace.len());
        for i in 0..trace.len() {
            let k = affine(trace.states.row(i), p.value(att.w_h), &zeros)?;
            let u: Vec<T> = k.iter().zip(&q).map(|(a, b)| (*a + *b).fast_tanh()).collect();
            alpha.push(linalg::dot(v, &u));
        }
        softmax_in_place(&mut alpha)?;
        let mut ctx = vec![T::zero(); self.config.hidden_dim];
        for (i, &a) in alpha.iter().enumerate() {
            linalg::axpy(a, trace.states.row(i), &mut ctx);
        }
        Ok((alpha, ctx))
    }

    /// One decoder step in evaluation mode.
    pub fn decode_step(
        &self,
        prev: TokenId,
        state: &LstmState<T>,
        trace: &EncoderTrace<T>,
    ) -> Result<(Vec<T>, LstmState<T>, Option<Vec<T>>)> {
        self.check_token(prev)?;
        let x = self.embed(prev, None);
        let next = self.lstm(self.ids.decoder, &x, state)?;
        let (features, alpha) = if self.has_attention() {
            let (alpha, ctx) = self.attend(&next.h, trace)?;
            let mut f = next.h.clone();
            f.extend_from_slice(&ctx);
            (f, Some(alpha))
        } else {
            (next.h.clone(), None)
        };
        let p = &self.params;
        let logits = affine(&features, p.value(self.ids.out_w), p.value(self.ids.out_b).as_slice())?;
        Ok((logits, next, alpha))
    }

    /// Teacher-forced mean token loss of one example; gradients are added
    /// to the parameter store.
    pub fn forward_loss(&mut self, history: &[TokenId], target: &[TokenId], mode: Mode) -> Result<f64> {
        let batch = Batch::single(history, target);
        self.loss_and_grad(&batch, mode)
    }
}

pub(crate) fn apply_dropout<T: Real, R: Rng + ?Sized>(x: &mut [T], rate: f64, r: &mut R) {
    if rate <= 0.0 {
        return;
    }
    let keep = T::of(1.0 / (1.0 - rate));
    for v in x.iter_mut() {
        *v = if r.gen::<f64>() < rate { T::zero() } else { *v * keep };
    }
}

/// Loads a trained f32 model from checkpoint bytes together with its vocabulary.
pub fn model_from_parts(header: ModelHeader, params: Vec<(String, Matrix<f32>)>) -> Result<(Seq2Seq<f32>, Vocabulary)> {
    let mut model = Seq2Seq::<f32>::new(header.config, 0)?;
    model.params.load(params)?;
    Ok((model, header.vocabulary))
}

#[cfg(test)]
mod tests;
