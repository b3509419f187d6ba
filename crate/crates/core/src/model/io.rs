use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{model_from_parts, ModelConfig, Seq2Seq};
use crate::corpus::Vocabulary;
use crate::error::Result;
use crate::fsio::write_atomic;
use crate::numerics::{read_checkpoint, write_checkpoint, Checkpoint};

/// Checkpoint header record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelHeader {
    pub config: ModelConfig,
    pub vocabulary: Vocabulary,
}

impl Seq2Seq<f32> {
    pub fn to_bytes(&self, vocabulary: &Vocabulary) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&ModelHeader { config: self.config.clone(), vocabulary: vocabulary.clone() })?;
        let mut out = Vec::new();
        write_checkpoint(&mut out, &header, &self.params)?;
        Ok(out)
    }

    pub fn from_bytes(mut bytes: &[u8]) -> Result<(Seq2Seq<f32>, Vocabulary)> {
        from_checkpoint(read_checkpoint(&mut bytes)?)
    }
}

fn from_checkpoint(ck: Checkpoint) -> Result<(Seq2Seq<f32>, Vocabulary)> {
    let header: ModelHeader = serde_json::from_slice(&ck.header)?;
    model_from_parts(header, ck.params)
}

pub fn save_model(path: &Path, model: &Seq2Seq<f32>, vocabulary: &Vocabulary) -> Result<()> {
    write_atomic(path, &model.to_bytes(vocabulary)?)
}

pub fn load_model(path: &Path) -> Result<(Seq2Seq<f32>, Vocabulary)> {
    let mut r = BufReader::new(File::open(path)?);
    from_checkpoint(read_checkpoint(&mut r)?)
}
