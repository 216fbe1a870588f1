//! Per-state features of a measured output distribution: probability of
//! success (POS), odds ratio (ODR) and probability of failure (POF).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bitstring::BitString;
use crate::simulator::OutputDistribution;

/// ODR value used when a state holds all of the probability mass.
pub const ODR_SENTINEL: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub pos: f64,
    pub odr: f64,
    pub pof: f64,
}

impl FeatureVector {
    pub fn from_pos(pos: f64) -> Self {
        Self {
            pos,
            odr: odr(pos),
            pof: pof(pos),
        }
    }
}

/// Observed frequency of `t` divided by the total shot count; 0 if unobserved.
pub fn pos(dist: &OutputDistribution, t: &BitString) -> f64 {
    dist.count(t) as f64 / dist.shots as f64
}

/// `pos / (1 - pos)`, clamped to [`ODR_SENTINEL`].
pub fn odr(pos: f64) -> f64 {
    if pos >= 1.0 {
        return ODR_SENTINEL;
    }
    (pos / (1.0 - pos)).min(ODR_SENTINEL)
}

pub fn pof(pos: f64) -> f64 {
    1.0 - pos
}

/// One feature vector per observed state.
pub fn featurize_result(dist: &OutputDistribution) -> BTreeMap<BitString, FeatureVector> {
    dist.counts
        .keys()
        .map(|t| (*t, FeatureVector::from_pos(pos(dist, t))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitstring::bits;
    use proptest::prelude::*;

    /// Noisy three-qubit GHZ output over 1000 shots. The printed row of
    /// frequencies sums to 1.002, so the "111" count is reduced by two.
    fn table1_noisy() -> OutputDistribution {
        let counts = [476, 13, 7, 16, 8, 19, 20, 441];
        OutputDistribution::from_counts(
            BitString::all(3).zip(counts).collect(),
        )
        .unwrap()
    }

    #[test]
    fn pos_examples() {
        let d = table1_noisy();
        assert_eq!(pos(&d, &bits("000")), 0.476);
        let two = OutputDistribution::from_counts(BTreeMap::from([(bits("0"), 487), (bits("1"), 537)])).unwrap();
        assert_eq!(pos(&two, &bits("0")), 487.0 / 1024.0);
        let single = OutputDistribution::from_counts(BTreeMap::from([(bits("11"), 5)])).unwrap();
        assert_eq!(pos(&single, &bits("00")), 0.0);
    }

    #[test]
    fn odr_examples() {
        assert_eq!(odr(0.5), 1.0);
        assert!((odr(0.47) - 0.886_792_452_830_188_7).abs() < 1e-12);
        assert!((odr(0.013) - 0.013 / 0.987).abs() < 1e-15);
        assert!((odr(0.013) - 0.013_171_225).abs() < 1e-9);
        assert_eq!(odr(1.0), ODR_SENTINEL);
    }

    #[test]
    fn pof_examples() {
        assert!((pof(0.47) - 0.53).abs() < 1e-15);
        assert_eq!(pof(0.0), 1.0);
        assert_eq!(pof(1.0), 0.0);
    }

    #[test]
    fn table1_featurization() {
        let f = featurize_result(&table1_noisy());
        assert_eq!(f.len(), 8);
        let total: f64 = f.values().map(|v| v.pos).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_state() {
        let d = OutputDistribution::from_counts(BTreeMap::from([(bits("101"), 1024)])).unwrap();
        let f = featurize_result(&d);
        assert_eq!(f[&bits("101")], FeatureVector { pos: 1.0, odr: ODR_SENTINEL, pof: 0.0 });
    }

    fn arb_dist() -> impl Strategy<Value = OutputDistribution> {
        proptest::collection::vec(1u64..5000, 1..16).prop_map(|counts| {
            OutputDistribution::from_counts(BitString::all(4).zip(counts).collect()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn pos_sums_to_one(d in arb_dist()) {
            let total: f64 = featurize_result(&d).values().map(|f| f.pos).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn complement_and_odds(d in arb_dist()) {
            for f in featurize_result(&d).values() {
                prop_assert_eq!(f.pos + f.pof, 1.0);
                if f.pos < 1.0 {
                    prop_assert!((f.odr - f.pos / (1.0 - f.pos)).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn odr_increasing(a in 0.0f64..0.999, b in 0.0f64..0.999) {
            prop_assume!(a < b);
            prop_assert!(odr(a) < odr(b));
        }

        #[test]
        fn scale_invariant(d in arb_dist(), k in 2u64..50) {
            let scaled = OutputDistribution::from_counts(
                d.counts.iter().map(|(s, c)| (*s, c * k)).collect(),
            ).unwrap();
            prop_assert_eq!(featurize_result(&d), featurize_result(&scaled));
        }
    }
}
