//! Pearson correlation and correlation-based feature ranking.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::data::RawDataset;
use crate::error::{Error, Result};
use crate::math;

/// Pearson's rho: covariance over the product of standard deviations.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::TooShort);
    }
    let (mx, my) = (math::mean(x), math::mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    // the n - 1 factors cancel
    Ok((sxy / math::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    /// Row-major, `names.len()` squared entries.
    pub values: Vec<f64>,
}

impl CorrelationMatrix {
    pub fn size(&self) -> usize {
        self.names.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size() + j]
    }
}

/// Correlations between every pair of columns, target included.
pub fn correlation_matrix(raw: &RawDataset) -> Result<CorrelationMatrix> {
    let d = raw.column_names().len();
    let cols: Vec<Vec<f64>> = (0..d).map(|j| raw.values().column(j)).collect();
    let mut values = alloc::vec![0.0; d * d];
    for i in 0..d {
        values[i * d + i] = 1.0;
        for j in i + 1..d {
            let r = pearson(&cols[i], &cols[j])?;
            values[i * d + j] = r;
            values[j * d + i] = r;
        }
    }
    Ok(CorrelationMatrix {
        names: raw.column_names().to_vec(),
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub rank: usize,
    pub name: String,
    pub correlation: f64,
}

/// Features ordered by |rho| with `target`, largest first; equal magnitudes
/// fall back to alphabetical order.
pub fn rank_features(cm: &CorrelationMatrix, target: &str) -> Result<Vec<RankedFeature>> {
    let t = cm
        .names
        .iter()
        .position(|n| n == target)
        .ok_or_else(|| Error::MissingColumn(target.into()))?;
    let mut out: Vec<(String, f64)> = (0..cm.size())
        .filter(|&j| j != t)
        .map(|j| (cm.names[j].clone(), cm.get(t, j)))
        .collect();
    out.sort_by(|a, b| match math::abs(b.1).total_cmp(&math::abs(a.1)) {
        Ordering::Equal => a.0.cmp(&b.0),
        o => o,
    });
    Ok(out
        .into_iter()
        .enumerate()
        .map(|(i, (name, correlation))| RankedFeature {
            rank: i + 1,
            name,
            correlation,
        })
        .collect())
}
