//! Distances between output distributions and classification metrics.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitstring::BitString;
use crate::oracle::Outcome;
use crate::simulator::ProbMap;

/// Allowed deviation of a distribution's total mass from 1.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("distribution sums to {0}, not 1")]
    NotNormalized(f64),
    #[error("empty list")]
    EmptyList,
    #[error("noisy Hellinger distance is zero; improvement undefined")]
    ZeroBaseline,
    #[error("diversity needs at least two circuits, got {0}")]
    SuiteTooSmall(usize),
    #[error("circuit {0} has no output for probe input {1}")]
    MissingProbe(usize, BitString),
    #[error("circuit index {0} out of range")]
    NoSuchCircuit(usize),
}

fn check_normalized(p: &ProbMap) -> Result<(), MetricsError> {
    let total: f64 = p.values().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE || p.values().any(|&x| x < 0.0) {
        return Err(MetricsError::NotNormalized(total));
    }
    Ok(())
}

fn union_support<'a>(p: &'a ProbMap, q: &'a ProbMap) -> impl Iterator<Item = (f64, f64)> + 'a {
    let keys: BTreeSet<&BitString> = p.keys().chain(q.keys()).collect();
    keys.into_iter().map(move |s| {
        (
            p.get(s).copied().unwrap_or(0.0),
            q.get(s).copied().unwrap_or(0.0),
        )
    })
}

/// `(1/√2)·‖√p − √q‖₂` over the union of supports.
pub fn hellinger(p: &ProbMap, q: &ProbMap) -> Result<f64, MetricsError> {
    check_normalized(p)?;
    check_normalized(q)?;
    let sum: f64 = union_support(p, q).map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2)).sum();
    Ok((sum / 2.0).sqrt().min(1.0))
}

/// Mean Hellinger distance over per-input distribution pairs.
pub fn avg_hellinger(pairs: &[(ProbMap, ProbMap)]) -> Result<f64, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::EmptyList);
    }
    let mut sum = 0.0;
    for (p, q) in pairs {
        sum += hellinger(p, q)?;
    }
    Ok(sum / pairs.len() as f64)
}

/// Relative reduction of the Hellinger distance, in percent. Negative when
/// filtering made things worse.
pub fn improved_percent(hl_noisy: f64, hl_filtered: f64) -> Result<f64, MetricsError> {
    if hl_noisy <= 0.0 {
        return Err(MetricsError::ZeroBaseline);
    }
    Ok((hl_noisy - hl_filtered) / hl_noisy * 100.0)
}

/// Jensen-Shannon distance with base-2 logarithms, in `[0, 1]`.
pub fn jsd(p: &ProbMap, q: &ProbMap) -> Result<f64, MetricsError> {
    check_normalized(p)?;
    check_normalized(q)?;
    let kl_half = |a: f64, m: f64| if a > 0.0 { a * (a / m).log2() } else { 0.0 };
    let div: f64 = union_support(p, q)
        .map(|(a, b)| {
            let m = 0.5 * (a + b);
            0.5 * kl_half(a, m) + 0.5 * kl_half(b, m)
        })
        .sum();
    Ok(div.clamp(0.0, 1.0).sqrt())
}

/// Output distributions of one circuit, keyed by probe input.
pub type ProbeOutputs = BTreeMap<BitString, ProbMap>;

/// Mean over the other circuits of the mean-over-probes JSD to `target`.
pub fn diversity_score(target: usize, suite: &[ProbeOutputs]) -> Result<f64, MetricsError> {
    if suite.len() < 2 {
        return Err(MetricsError::SuiteTooSmall(suite.len()));
    }
    let own = suite.get(target).ok_or(MetricsError::NoSuchCircuit(target))?;
    if own.is_empty() {
        return Err(MetricsError::EmptyList);
    }
    let mut total = 0.0;
    for (j, other) in suite.iter().enumerate().filter(|(j, _)| *j != target) {
        let mut per_circuit = 0.0;
        for (x, p) in own {
            let q = other.get(x).ok_or(MetricsError::MissingProbe(j, *x))?;
            per_circuit += jsd(p, q)?;
        }
        total += per_circuit / own.len() as f64;
    }
    Ok(total / (suite.len() - 1) as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn record(&mut self, o: Outcome) {
        match o {
            Outcome::Tp => self.tp += 1,
            Outcome::Fp => self.fp += 1,
            Outcome::Fn => self.fn_ += 1,
            Outcome::Tn => self.tn += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

impl FromIterator<Outcome> for ConfusionCounts {
    fn from_iter<I: IntoIterator<Item = Outcome>>(iter: I) -> Self {
        let mut c = Self::default();
        iter.into_iter().for_each(|o| c.record(o));
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when any ratio had a zero denominator and was reported as 0.
    pub degenerate: bool,
}

pub fn precision_recall_f1(c: &ConfusionCounts) -> PrecisionRecall {
    let ratio = |num: u64, den: u64| if den == 0 { None } else { Some(num as f64 / den as f64) };
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let mut degenerate = precision.is_none() || recall.is_none();
    let (p, r) = (precision.unwrap_or(0.0), recall.unwrap_or(0.0));
    let f1 = if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        degenerate = true;
        0.0
    };
    PrecisionRecall {
        precision: p,
        recall: r,
        f1,
        degenerate,
    }
}

/// Per-backend noise reduction row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImprovementRow {
    pub backend: String,
    #[serde(rename = "HLin")]
    pub hl_noisy: f64,
    #[serde(rename = "HLif")]
    pub hl_filtered: f64,
    #[serde(rename = "Improved%")]
    pub improved_percent: f64,
}

impl ImprovementRow {
    /// Averages per-input Hellinger distances of the noisy and filtered
    /// outputs against the ideal ones.
    pub fn from_pairs(
        backend: &str,
        noisy: &[(ProbMap, ProbMap)],
        filtered: &[(ProbMap, ProbMap)],
    ) -> Result<Self, MetricsError> {
        let hl_noisy = avg_hellinger(noisy)?;
        let hl_filtered = avg_hellinger(filtered)?;
        Ok(Self {
            backend: backend.into(),
            hl_noisy,
            hl_filtered,
            improved_percent: improved_percent(hl_noisy, hl_filtered)?,
        })
    }
}

pub fn write_improvement_csv<W: Write>(rows: &[ImprovementRow], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

/// Fault-detection summary, with and without filtering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRow {
    pub label: String,
    #[serde(flatten)]
    pub counts: ConfusionCounts,
    #[serde(flatten)]
    pub scores: PrecisionRecall,
    pub score_percent: f64,
}

impl DetectionRow {
    pub fn new(label: &str, counts: ConfusionCounts, score_percent: f64) -> Self {
        Self {
            label: label.into(),
            counts,
            scores: precision_recall_f1(&counts),
            score_percent,
        }
    }
}

pub fn write_detection_csv<W: Write>(rows: &[DetectionRow], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["label", "tp", "fp", "fn", "tn", "precision", "recall", "f1", "score_percent"])?;
    for r in rows {
        out.write_record([
            r.label.clone(),
            r.counts.tp.to_string(),
            r.counts.fp.to_string(),
            r.counts.fn_.to_string(),
            r.counts.tn.to_string(),
            format!("{:.4}", r.scores.precision),
            format!("{:.4}", r.scores.recall),
            format!("{:.4}", r.scores.f1),
            format!("{:.2}", r.score_percent),
        ])?;
    }
    out.flush()?;
    Ok(())
}
