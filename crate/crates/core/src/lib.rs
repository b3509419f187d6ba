//! Disfluency laboratory: synthetic task-oriented dialogue corpora,
//! disfluency injection, attentive LSTM encoder-decoders trained from
//! scratch, and probing analyses over their internal states.

pub mod corpus;
pub mod disfluency;
pub mod error;
pub mod experiment;
pub mod fsio;
pub mod model;
pub mod numerics;
pub mod probe;
pub mod seed;

pub use error::{Error, Result};
