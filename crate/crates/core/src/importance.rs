//! Permutation feature importance on held-out rows.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::math;
use crate::model::TrainedModel;
use crate::par;
use crate::rng;

pub const DEFAULT_REPEATS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    /// 1 is the most important.
    pub rank: usize,
    /// Mean of (baseline accuracy - shuffled accuracy) over repeats.
    pub mean_drop: f64,
    pub sd_drop: f64,
    /// Correct predictions per repeat with this column shuffled.
    pub shuffled_correct: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub n_rows: usize,
    pub repeats: usize,
    pub seed: u64,
    pub baseline_correct: usize,
    pub baseline_accuracy: f64,
    /// In feature order.
    pub features: Vec<FeatureImportance>,
}

impl ImportanceReport {
    /// Features sorted by rank.
    pub fn ranked(&self) -> Vec<&FeatureImportance> {
        let mut v: Vec<_> = self.features.iter().collect();
        v.sort_by_key(|f| f.rank);
        v
    }
}

fn correct(model: &TrainedModel, ds: &Dataset, x: &crate::Matrix) -> Result<usize> {
    let pred = model.predict_batch(x)?;
    Ok(pred.iter().zip(ds.labels()).filter(|(p, t)| p == t).count())
}

/// Shuffle one column at a time and measure the accuracy lost. Trial
/// (feature j, repeat r) draws its permutation from `stream(seed, [j, r])`.
pub fn permutation_importance(model: &TrainedModel, test: &Dataset, repeats: usize, seed: u64) -> Result<ImportanceReport> {
    if repeats < 1 {
        return Err(Error::param("repeats", "must be at least 1"));
    }
    if test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if test.feature_names() != model.feature_names.as_slice() {
        return Err(Error::FeatureMismatch);
    }
    let n = test.len();
    let d = test.n_features();
    let baseline_correct = correct(model, test, test.features())?;

    let trials = par::map_indexed(d * repeats, |t| {
        let (j, r) = (t / repeats, t % repeats);
        let mut col = test.features().column(j);
        col.shuffle(&mut rng::stream(seed, &[j as u64, r as u64]));
        let mut x = test.features().clone();
        for (i, v) in col.into_iter().enumerate() {
            x.set(i, j, v);
        }
        correct(model, test, &x)
    });
    let trials = trials.into_iter().collect::<Result<Vec<_>>>()?;

    let mut features: Vec<FeatureImportance> = (0..d)
        .map(|j| {
            let shuffled_correct = trials[j * repeats..(j + 1) * repeats].to_vec();
            let drops: Vec<f64> = shuffled_correct
                .iter()
                .map(|&c| (baseline_correct as f64 - c as f64) / n as f64)
                .collect();
            FeatureImportance {
                feature: test.feature_names()[j].clone(),
                rank: 0,
                mean_drop: math::mean(&drops),
                sd_drop: math::sample_sd(&drops),
                shuffled_correct,
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| features[b].mean_drop.total_cmp(&features[a].mean_drop).then(a.cmp(&b)));
    for (rank, j) in order.into_iter().enumerate() {
        features[j].rank = rank + 1;
    }
    Ok(ImportanceReport {
        n_rows: n,
        repeats,
        seed,
        baseline_correct,
        baseline_accuracy: baseline_correct as f64 / n as f64,
        features,
    })
}
