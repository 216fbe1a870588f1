//! Noise filter: keeps the states a tuned model believes belong to the ideal
//! output and renormalizes their predicted probabilities.

use serde::{Deserialize, Serialize};

use crate::bitstring::BitString;
use crate::features::featurize_result;
use crate::mlp::{predict, MlpModel, ModelKind};
use crate::simulator::{OutputDistribution, ProbMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilteredOutput {
    pub probabilities: ProbMap,
    #[serde(rename = "dropped")]
    pub dropped_states: Vec<BitString>,
    #[serde(rename = "fallback")]
    pub fallback_used: bool,
    /// Set when the model used was a baseline rather than a tuned model.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub baseline_model: bool,
}

impl FilteredOutput {
    /// Wraps an unfiltered distribution so it can be assessed like filtered output.
    pub fn unfiltered(dist: &OutputDistribution) -> Self {
        Self {
            probabilities: dist.probabilities(),
            dropped_states: Vec::new(),
            fallback_used: false,
            baseline_model: false,
        }
    }
}

/// Half of one shot's worth of probability.
pub fn default_threshold(shots: u64) -> f64 {
    1.0 / (2.0 * shots as f64)
}

/// Predicts the ideal probability of every observed state, drops predictions
/// below `threshold` and renormalizes the rest. When every state is dropped
/// the raw normalized distribution is returned with `fallback_used` set.
pub fn filter_output(m: &MlpModel, dist: &OutputDistribution, threshold: f64) -> FilteredOutput {
    let mut kept = ProbMap::new();
    let mut dropped = Vec::new();
    for (state, f) in featurize_result(dist) {
        let p = predict(m, &f);
        if p < threshold {
            dropped.push(state);
        } else {
            kept.insert(state, p);
        }
    }
    let baseline_model = m.kind() == ModelKind::Baseline;
    let total: f64 = kept.values().sum();
    if kept.is_empty() || total <= 0.0 {
        return FilteredOutput {
            probabilities: dist.probabilities(),
            dropped_states: dropped,
            fallback_used: true,
            baseline_model,
        };
    }
    kept.values_mut().for_each(|p| *p /= total);
    FilteredOutput {
        probabilities: kept,
        dropped_states: dropped,
        fallback_used: false,
        baseline_model,
    }
}

/// One entry of the filtered-results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilteredRecord {
    pub input: BitString,
    pub shots: u64,
    #[serde(flatten)]
    pub output: FilteredOutput,
}
