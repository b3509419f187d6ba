use super::*;
use crate::numerics::{grad_check, GradCheckConfig};

fn small(attention: bool) -> ModelConfig {
    ModelConfig { embedding_dim: 8, hidden_dim: 12, attention, dropout: 0.2, vocab_size: 20, max_decode_len: 10 }
}

fn history() -> Vec<TokenId> {
    vec![4, 7, 9, 5, 11, 12, 13, 4, 8]
}

fn target() -> Vec<TokenId> {
    vec![14, 15, 16, 17, Vocabulary::EOS_ID]
}

#[test]
fn lstm_zero_params_give_zero_state() {
    let w = Matrix::<f64>::zeros(8, 3);
    let u = Matrix::<f64>::zeros(8, 2);
    let s = lstm_step(&[1.0, -2.0, 0.5], &LstmState::zeros(2), &w, &u, &[0.0; 8]).unwrap();
    assert_eq!(s, LstmState::zeros(2));
}

#[test]
fn lstm_scalar_oracle() {
    // one hidden unit: gates i, f, g, o with weights 0.5, -0.3, 0.8, 0.1
    let w = Matrix::from_vec(4, 1, vec![0.5, -0.3, 0.8, 0.1]).unwrap();
    let u = Matrix::from_vec(4, 1, vec![0.2, 0.4, -0.6, 0.9]).unwrap();
    let b = [0.1, 1.0, 0.0, -0.2];
    let (x, h, c) = (0.7f64, 0.3f64, -0.4f64);
    let s = lstm_step(&[x], &LstmState { h: vec![h], c: vec![c] }, &w, &u, &b).unwrap();
    let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
    let i = sig(0.5 * x + 0.2 * h + 0.1);
    let f = sig(-0.3 * x + 0.4 * h + 1.0);
    let g = (0.8 * x - 0.6 * h).fast_tanh();
    let o = sig(0.1 * x + 0.9 * h - 0.2);
    let c2 = f * c + i * g;
    assert!((s.c[0] - c2).abs() < 1e-6);
    assert!((s.h[0] - o * c2.fast_tanh()).abs() < 1e-6);
    assert!(matches!(lstm_step(&[x], &LstmState::zeros(2), &w, &u, &b), Err(Error::Shape { .. })));
}

#[test]
fn encode_length_determinism_and_prefix() {
    let m = Seq2Seq::<f32>::new(small(true), 1).unwrap();
    let h = history();
    let full = m.encode(&h, Mode::Eval).unwrap();
    assert_eq!(full.len(), h.len());
    assert!(full.states.as_slice().iter().all(|x| x.abs() <= 1.0));
    assert_eq!(full, m.encode(&h, Mode::Eval).unwrap());
    let part = m.encode(&h[..4], Mode::Eval).unwrap();
    for t in 0..4 {
        assert_eq!(part.states.row(t), full.states.row(t));
    }
    assert!(matches!(m.encode(&[], Mode::Eval), Err(Error::EmptyInput(_))));
    let batched = m.encode_batch(&[&h, &h[..4]]).unwrap();
    for (a, b) in batched[0].states.as_slice().iter().zip(full.states.as_slice()) {
        assert!((a - b).abs() < 1e-5);
    }
}

#[test]
fn attention_properties() {
    let mut m = Seq2Seq::<f64>::new(small(true), 2).unwrap();
    let trace = m.encode(&history(), Mode::Eval).unwrap();
    let s = vec![0.1; 12];
    let (alpha, _) = m.attend(&s, &trace).unwrap();
    assert!((alpha.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    let one = m.encode(&[4], Mode::Eval).unwrap();
    let (alpha, ctx) = m.attend(&s, &one).unwrap();
    assert_eq!(alpha, vec![1.0]);
    assert_eq!(ctx, one.states.row(0));
    let v = m.params.id("attention.v").unwrap();
    m.params.value_mut(v).fill(0.0);
    let (alpha, _) = m.attend(&s, &trace).unwrap();
    assert!(alpha.iter().all(|a| (a - 1.0 / 9.0).abs() < 1e-12));
    let plain = Seq2Seq::<f64>::new(small(false), 2).unwrap();
    assert!(matches!(plain.attend(&s, &trace), Err(Error::AttentionDisabled)));
}

#[test]
fn decode_step_shapes_and_trace_independence() {
    let m = Seq2Seq::<f64>::new(small(false), 3).unwrap();
    let trace = m.encode(&history(), Mode::Eval).unwrap();
    let state = trace.final_state();
    let (logits, _, alpha) = m.decode_step(Vocabulary::EOS_ID, &state, &trace).unwrap();
    assert_eq!(logits.len(), 20);
    assert!(alpha.is_none());
    let mut scrambled = trace.clone();
    scrambled.states.row_mut(0).iter_mut().for_each(|x| *x = 0.9);
    assert_eq!(m.decode_step(Vocabulary::EOS_ID, &state, &scrambled).unwrap().0, logits);
    assert!(m.decode_step(99, &state, &trace).is_err());
}

#[test]
fn untrained_loss_near_log_vocab() {
    let mut m = Seq2Seq::<f32>::new(ModelConfig { vocab_size: 90, hidden_dim: 64, embedding_dim: 32, ..small(true) }, 4).unwrap();
    let loss = m.forward_loss(&history(), &target(), Mode::Train { seed: 1 }).unwrap();
    assert!(loss >= 0.0);
    assert!((loss - 90f64.ln()).abs() < 0.2, "{loss}");
}

fn check(config: ModelConfig, mode: Mode) -> f64 {
    let mut m = Seq2Seq::<f64>::new(config, 5).unwrap();
    let seq_a: Vec<TokenId> = history();
    let seq_b: Vec<TokenId> = vec![4, 10, 5, 3, 4, 6];
    let t1 = target();
    let t2: Vec<TokenId> = vec![18, Vocabulary::EOS_ID];
    let t3: Vec<TokenId> = vec![19, 14, 13, Vocabulary::EOS_ID];
    let batch = Batch {
        sequences: vec![&seq_a, &seq_b],
        examples: vec![
            ExampleRef { seq: 0, end: 9, target: &t1 },
            ExampleRef { seq: 0, end: 4, target: &t2 },
            ExampleRef { seq: 1, end: 6, target: &t3 },
            ExampleRef { seq: 1, end: 2, target: &t1 },
        ],
    };
    let cfg = GradCheckConfig { samples: 200, h: 1e-3, seed: 9 };
    let mut params = m.params.clone();
    let report = grad_check(
        &mut params,
        |p| {
            m.params = p.clone();
            m.params.zero_grads();
            let loss = m.loss_and_grad(&batch, mode)?;
            for id in p.ids().collect::<Vec<_>>() {
                p.grad_mut(id).as_mut_slice().copy_from_slice(m.params.grad(id).as_slice());
            }
            Ok(loss)
        },
        &cfg,
    )
    .unwrap();
    report.max_rel_error
}

#[test]
fn full_model_gradients_match_central_differences() {
    for attention in [true, false] {
        for mode in [Mode::Eval, Mode::Train { seed: 3 }] {
            let err = check(small(attention), mode);
            println!("attention={attention} {mode:?}: max rel error {err:.2e}");
            assert!(err < 1e-3, "attention={attention} {mode:?}: {err}");
        }
    }
}

#[test]
fn single_example_gradient_check() {
    let mut m = Seq2Seq::<f64>::new(small(true), 6).unwrap();
    let (h, t) = (history(), target());
    let mut params = m.params.clone();
    let report = grad_check(
        &mut params,
        |p| {
            m.params = p.clone();
            let loss = m.forward_loss(&h, &t, Mode::Eval)?;
            for id in p.ids().collect::<Vec<_>>() {
                p.grad_mut(id).as_mut_slice().copy_from_slice(m.params.grad(id).as_slice());
            }
            Ok(loss)
        },
        &GradCheckConfig::default(),
    )
    .unwrap();
    assert!(report.max_rel_error < 1e-3, "{report:?}");
}

#[test]
fn batch_loss_is_mean_of_example_losses() {
    let m = Seq2Seq::<f64>::new(small(true), 7).unwrap();
    let (a, b) = (history(), vec![4usize, 6, 5, 3]);
    let (t1, t2) = (target(), vec![13, Vocabulary::EOS_ID]);
    let batch = Batch {
        sequences: vec![&a, &b],
        examples: vec![ExampleRef { seq: 0, end: 5, target: &t1 }, ExampleRef { seq: 1, end: 4, target: &t2 }],
    };
    let joint = m.loss(&batch, Mode::Eval).unwrap();
    let l1 = m.loss(&Batch::single(&a[..5], &t1), Mode::Eval).unwrap();
    let l2 = m.loss(&Batch::single(&b, &t2), Mode::Eval).unwrap();
    assert!((joint - (l1 + l2) / 2.0).abs() < 1e-12);
}

#[test]
fn reference_path_matches_batched_path() {
    let m = Seq2Seq::<f64>::new(small(true), 8).unwrap();
    let h = history();
    let trace = m.encode(&h, Mode::Eval).unwrap();
    let mut state = trace.final_state();
    let mut prev = Vocabulary::EOS_ID;
    let mut tokens = Vec::new();
    let mut rows = Vec::new();
    for _ in 0..10 {
        let (logits, next, alpha) = m.decode_step(prev, &state, &trace).unwrap();
        let tok = crate::numerics::argmax(&logits).unwrap();
        if tok == Vocabulary::EOS_ID {
            break;
        }
        tokens.push(tok);
        rows.push(alpha.unwrap());
        state = next;
        prev = tok;
    }
    let dec = m.greedy_decode(&h, 10).unwrap();
    assert_eq!(dec.tokens, tokens);
    assert_eq!(dec.attention.weights.len(), tokens.len());
    for (a, b) in dec.attention.weights.iter().zip(&rows) {
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-9);
        }
    }
    // teacher forcing on the greedy output reproduces the same loss in both paths
    let mut t = tokens.clone();
    t.push(Vocabulary::EOS_ID);
    let batch = m.loss(&Batch::single(&h, &t), Mode::Eval).unwrap();
    let mut manual = 0.0;
    let mut state = trace.final_state();
    let mut prev = Vocabulary::EOS_ID;
    for &y in &t {
        let (logits, next, _) = m.decode_step(prev, &state, &trace).unwrap();
        manual += crate::numerics::cross_entropy(&logits, y).unwrap().0;
        state = next;
        prev = y;
    }
    assert!((batch - manual / t.len() as f64).abs() < 1e-9);
}

#[test]
fn train_mode_dropout_matches_reference_encoder() {
    let m = Seq2Seq::<f64>::new(small(true), 9).unwrap();
    let h = history();
    let a = m.encode(&h, Mode::Train { seed: 4 }).unwrap();
    let b = m.encode(&h, Mode::Eval).unwrap();
    assert_ne!(a, b);
    assert_eq!(a, m.encode(&h, Mode::Train { seed: 4 }).unwrap());
}

#[test]
fn greedy_decode_respects_max_len() {
    let m = Seq2Seq::<f32>::new(small(true), 10).unwrap();
    for len in [1, 3, 10] {
        let d = m.greedy_decode(&history(), len).unwrap();
        assert!(d.tokens.len() <= len);
        assert_eq!(d.attention.weights.len(), d.tokens.len());
    }
    let plain = Seq2Seq::<f32>::new(small(false), 10).unwrap();
    assert!(plain.greedy_decode(&history(), 5).unwrap().attention.is_empty());
}

#[test]
fn checkpoint_bytes_round_trip() {
    let m = Seq2Seq::<f32>::new(small(true), 11).unwrap();
    let vocab = Vocabulary::with_tokens((0..14).map(|i| format!("w{i}")));
    let bytes = m.to_bytes(&vocab).unwrap();
    let (back, v2) = Seq2Seq::<f32>::from_bytes(&bytes).unwrap();
    assert_eq!(v2, vocab);
    assert_eq!(back.to_bytes(&vocab).unwrap(), bytes);
    assert_eq!(back.params, m.params);
}

#[test]
fn public_gradient_check_passes_on_random_batch() {
    for attention in [true, false] {
        let report = check_gradients(small(attention), Mode::Train { seed: 1 }, 4, &GradCheckConfig::default()).unwrap();
        assert!(report.checked > 0);
        assert!(report.max_rel_error < 1e-3, "{report:?}");
    }
}
