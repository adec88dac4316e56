//! Numeric sample encoding: per-variable z-scores with mean imputation for
//! missing values.

use serde::{Deserialize, Serialize};

use super::{EmbeddingVector, StoreError};
use crate::domain::Sample;

/// Frozen z-score statistics for one variable. A zero standard deviation is
/// allowed (constant variable); its components encode to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableStat {
    pub name: String,
    pub mean: f64,
    pub std: f64,
}

/// Ordered per-variable statistics computed when a process-data store is
/// built and frozen with it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderStats {
    pub variables: Vec<VariableStat>,
}

impl EncoderStats {
    pub fn get(&self, name: &str) -> Option<&VariableStat> {
        self.variables.iter().find(|v| v.name == name)
    }
}

/// Computes per-variable mean and population standard deviation over the
/// non-missing entries of the given samples. A variable with no observed
/// values gets mean 0, std 0. Variable order follows the first sample.
pub fn compute_encoder_stats(samples: &[Sample]) -> Result<EncoderStats, StoreError> {
    let first = samples.first().ok_or(StoreError::EmptyStore)?;
    let variables = first
        .values
        .iter()
        .map(|(name, _)| {
            let observed: Vec<f64> = samples
                .iter()
                .filter_map(|s| s.get(name))
                .collect();
            let (mean, std) = if observed.is_empty() {
                (0.0, 0.0)
            } else {
                let n = observed.len() as f64;
                let mean = observed.iter().sum::<f64>() / n;
                let var = observed.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
                (mean, var.sqrt())
            };
            VariableStat { name: name.clone(), mean, std }
        })
        .collect();
    Ok(EncoderStats { variables })
}

/// Encodes a sample as its z-score vector in the stats' variable order:
/// component j is `(x_j - mean_j) / std_j`, with 0 for missing values
/// (mean imputation after z-scoring) and 0 when `std_j` is 0. Every variable
/// of the sample must be covered by the stats.
pub fn encode_sample(sample: &Sample, stats: &EncoderStats) -> Result<EmbeddingVector, StoreError> {
    for (name, _) in &sample.values {
        if stats.get(name).is_none() {
            return Err(StoreError::UnknownVariable(name.clone()));
        }
    }
    let components = stats
        .variables
        .iter()
        .map(|stat| match sample.get(&stat.name) {
            Some(x) if stat.std > 0.0 => (x - stat.mean) / stat.std,
            _ => 0.0,
        })
        .collect();
    Ok(EmbeddingVector(components))
}
