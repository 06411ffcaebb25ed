use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitCriterion {
    #[default]
    Gini,
    Entropy,
}

impl SplitCriterion {
    pub fn impurity(self, counts: &[usize]) -> Result<f64> {
        match self {
            SplitCriterion::Gini => gini(counts),
            SplitCriterion::Entropy => entropy(counts),
        }
    }

    /// `total` must equal the sum of `counts` and be nonzero.
    #[inline]
    pub(crate) fn of(self, counts: &[usize], total: usize) -> f64 {
        let n = total as f64;
        match self {
            SplitCriterion::Gini => 1.0 - counts.iter().map(|&c| (c as f64 / n) * (c as f64 / n)).sum::<f64>(),
            SplitCriterion::Entropy => -counts
                .iter()
                .filter(|&&c| c > 0)
                .map(|&c| {
                    let p = c as f64 / n;
                    p * math::log2(p)
                })
                .sum::<f64>(),
        }
    }
}

fn total(counts: &[usize]) -> Result<usize> {
    match counts.iter().sum() {
        0 => Err(Error::ZeroTotal),
        t => Ok(t),
    }
}

/// 1 - sum_i p_i^2.
pub fn gini(counts: &[usize]) -> Result<f64> {
    Ok(SplitCriterion::Gini.of(counts, total(counts)?))
}

/// -sum_i p_i log2 p_i, with 0 log 0 = 0.
pub fn entropy(counts: &[usize]) -> Result<f64> {
    Ok(SplitCriterion::Entropy.of(counts, total(counts)?))
}
