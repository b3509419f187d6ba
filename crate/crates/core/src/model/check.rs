use rand::Rng;

use super::batch::{Batch, ExampleRef};
use super::{Mode, ModelConfig, Seq2Seq};
use crate::corpus::{TokenId, Vocabulary, RESERVED};
use crate::error::Result;
use crate::numerics::{grad_check, GradCheckConfig, GradCheckReport};
use crate::seed::{derive_rng, tag};

/// Central-difference check of the batched loss gradient for a freshly
/// initialised model on a random batch: two sequences, three prefixes each.
pub fn check_gradients(config: ModelConfig, mode: Mode, seed: u64, cfg: &GradCheckConfig) -> Result<GradCheckReport> {
    config.validate()?;
    let mut m = Seq2Seq::<f64>::new(config.clone(), seed)?;
    let mut r = derive_rng(seed, &[tag("gradcheck-batch")]);
    let first = RESERVED.len().min(config.vocab_size - 1);
    let mut word = move || r.gen_range(first..config.vocab_size) as TokenId;
    let sequences: Vec<Vec<TokenId>> = [9usize, 6].iter().map(|&n| (0..n).map(|_| word()).collect()).collect();
    let targets: Vec<Vec<TokenId>> =
        [4usize, 1, 3].iter().map(|&n| (0..n).map(|_| word()).chain([Vocabulary::EOS_ID]).collect()).collect();
    let batch = Batch {
        sequences: sequences.iter().map(|s| s.as_slice()).collect(),
        examples: vec![
            ExampleRef { seq: 0, end: 9, target: &targets[0] },
            ExampleRef { seq: 0, end: 4, target: &targets[1] },
            ExampleRef { seq: 1, end: 6, target: &targets[2] },
            ExampleRef { seq: 1, end: 2, target: &targets[0] },
        ],
    };
    let mut params = m.params.clone();
    grad_check(
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
        cfg,
    )
}
