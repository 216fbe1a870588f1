//! Test oracles. UOF flags observed states the specification never produces;
//! WODF runs a Pearson chi-squared goodness-of-fit test of the observed
//! distribution against the specified one.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitstring::BitString;
use crate::datagen::ProgramSpec;
use crate::filter::FilteredOutput;
use crate::simulator::ProbMap;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("input {0} has no specification")]
    MissingSpecInput(BitString),
    #[error("invalid oracle config: {0}")]
    InvalidConfig(String),
    #[error("no verdicts to score")]
    NothingToScore,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub alpha: f64,
    pub uof_min_prob: f64,
    pub pool_min_expected: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            uof_min_prob: 0.02,
            pool_min_expected: 5.0,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<(), OracleError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(OracleError::InvalidConfig(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.uof_min_prob) {
            return Err(OracleError::InvalidConfig(format!(
                "uof_min_prob {} outside [0, 1]",
                self.uof_min_prob
            )));
        }
        if !(self.pool_min_expected >= 0.0) {
            return Err(OracleError::InvalidConfig("pool_min_expected must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub input: BitString,
    pub uof_fail: bool,
    pub wodf_fail: bool,
    pub p_value: Option<f64>,
    #[serde(rename = "offending")]
    pub offending_states: Vec<BitString>,
}

impl Verdict {
    pub fn failed(&self) -> bool {
        self.uof_fail || self.wodf_fail
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Outcome {
    Tp,
    Fp,
    Fn,
    Tn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UofResult {
    pub fail: bool,
    pub offending_states: Vec<BitString>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WodfResult {
    pub fail: bool,
    /// Absent when pooling leaves fewer than two categories.
    pub p_value: Option<f64>,
    pub statistic: Option<f64>,
    pub df: usize,
}

pub fn assess_uof(spec: &ProbMap, observed: &FilteredOutput, cfg: &OracleConfig) -> UofResult {
    let offending: Vec<BitString> = observed
        .probabilities
        .iter()
        .filter(|(s, &p)| p >= cfg.uof_min_prob && spec.get(s).is_none_or(|&q| q <= 0.0))
        .map(|(s, _)| *s)
        .collect();
    UofResult {
        fail: !offending.is_empty(),
        offending_states: offending,
    }
}

#[derive(Debug, Clone)]
struct Category {
    expected: f64,
    observed: f64,
    /// `None` is the bucket for states outside the specification.
    key: Option<BitString>,
}

/// Merges the smallest-expected category into the next smallest until every
/// category reaches `min_expected` or only one remains. Ties are broken by
/// key order, with the outside-spec bucket first.
fn pool(mut cats: Vec<Category>, min_expected: f64) -> Vec<Category> {
    let order = |a: &Category, b: &Category| a.expected.total_cmp(&b.expected).then(a.key.cmp(&b.key));
    cats.sort_by(order);
    while cats.len() > 1 && cats[0].expected < min_expected {
        let smallest = cats.remove(0);
        cats[0].expected += smallest.expected;
        cats[0].observed += smallest.observed;
        cats[0].key = cats[0].key.min(smallest.key);
        cats.sort_by(order);
    }
    cats
}

pub fn assess_wodf(spec: &ProbMap, observed: &FilteredOutput, shots: u64, cfg: &OracleConfig) -> WodfResult {
    let counts: BTreeMap<BitString, f64> = observed
        .probabilities
        .iter()
        .map(|(s, p)| (*s, (p * shots as f64).round()))
        .collect();
    let total: f64 = counts.values().sum();
    let spec_mass: f64 = spec.values().sum();
    let mut cats: Vec<Category> = spec
        .iter()
        .filter(|(_, &p)| p > 0.0)
        .map(|(s, &p)| Category {
            expected: total * p / spec_mass,
            observed: counts.get(s).copied().unwrap_or(0.0),
            key: Some(*s),
        })
        .collect();
    let outside: f64 = counts
        .iter()
        .filter(|(s, _)| spec.get(s).is_none_or(|&p| p <= 0.0))
        .map(|(_, c)| c)
        .sum();
    cats.push(Category {
        expected: 0.0,
        observed: outside,
        key: None,
    });
    let cats = pool(cats, cfg.pool_min_expected);
    if cats.len() < 2 {
        return WodfResult {
            fail: false,
            p_value: None,
            statistic: None,
            df: 0,
        };
    }
    let stat: f64 = cats
        .iter()
        .map(|c| (c.observed - c.expected).powi(2) / c.expected)
        .sum();
    let df = cats.len() - 1;
    let p = chi_squared_p_value(stat, df);
    WodfResult {
        fail: p < cfg.alpha,
        p_value: Some(p),
        statistic: Some(stat),
        df,
    }
}

/// Runs UOF then WODF on every result. An input fails if either oracle fails.
pub fn assess(
    spec: &ProgramSpec,
    results: &BTreeMap<BitString, FilteredOutput>,
    shots: u64,
    cfg: &OracleConfig,
) -> Result<Vec<Verdict>, OracleError> {
    cfg.validate()?;
    results
        .iter()
        .map(|(input, out)| {
            let s = spec.get(input).ok_or(OracleError::MissingSpecInput(*input))?;
            let uof = assess_uof(s, out, cfg);
            let wodf = assess_wodf(s, out, shots, cfg);
            Ok(Verdict {
                input: *input,
                uof_fail: uof.fail,
                wodf_fail: wodf.fail,
                p_value: wodf.p_value,
                offending_states: uof.offending_states,
            })
        })
        .collect()
}

/// Mean over backends of the percentage of failing inputs.
pub fn score_percent(verdicts_per_backend: &[Vec<Verdict>]) -> Result<f64, OracleError> {
    if verdicts_per_backend.is_empty() || verdicts_per_backend.iter().any(Vec::is_empty) {
        return Err(OracleError::NothingToScore);
    }
    let sum: f64 = verdicts_per_backend
        .iter()
        .map(|v| v.iter().filter(|x| x.failed()).count() as f64 / v.len() as f64 * 100.0)
        .sum();
    Ok(sum / verdicts_per_backend.len() as f64)
}

pub fn classify_outcome(ground_truth_faulty: bool, assessed_faulty: bool) -> Outcome {
    match (ground_truth_faulty, assessed_faulty) {
        (true, true) => Outcome::Tp,
        (false, true) => Outcome::Fp,
        (true, false) => Outcome::Fn,
        (false, false) => Outcome::Tn,
    }
}

/// Upper tail of the chi-squared distribution: `Q(df/2, x/2)`.
pub fn chi_squared_p_value(x: f64, df: usize) -> f64 {
    assert!(df >= 1, "chi-squared needs at least one degree of freedom");
    if x <= 0.0 {
        return 1.0;
    }
    regularized_gamma_q(df as f64 / 2.0, x / 2.0)
}

fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + G + 0.5;
    let series = C[1..]
        .iter()
        .enumerate()
        .fold(C[0], |acc, (i, c)| acc + c / (x + i as f64 + 1.0));
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + series.ln()
}

/// Regularized upper incomplete gamma function `Q(a, x)`.
pub fn regularized_gamma_q(a: f64, x: f64) -> f64 {
    const EPS: f64 = 1e-16;
    const MAX_ITER: usize = 10_000;
    if x <= 0.0 {
        return 1.0;
    }
    let log_prefactor = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        for n in 1..MAX_ITER {
            term *= x / (a + n as f64);
            sum += term;
            if term.abs() < sum.abs() * EPS {
                break;
            }
        }
        (1.0 - sum * log_prefactor.exp()).clamp(0.0, 1.0)
    } else {
        // Modified Lentz evaluation of the continued fraction.
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < EPS {
                break;
            }
        }
        (log_prefactor.exp() * h).clamp(0.0, 1.0)
    }
}
