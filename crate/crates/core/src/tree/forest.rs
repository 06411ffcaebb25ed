//! Bagged trees with per-node feature subsampling and majority voting.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cart::{grow, majority, FeatureSampler, TreeModel, TreeParams};
use super::impurity::SplitCriterion;
use crate::data::QualityClass;
use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Matrix;
use crate::{par, rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features tried at each node; `None` means floor(sqrt(d)).
    pub features_per_split: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub criterion: SplitCriterion,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            features_per_split: None,
            max_depth: None,
            min_samples_split: 2,
            criterion: SplitCriterion::Gini,
            bootstrap: true,
        }
    }
}

impl ForestParams {
    pub fn resolved_features_per_split(&self, d: usize) -> usize {
        self.features_per_split
            .unwrap_or_else(|| (math::floor(math::sqrt(d as f64)) as usize).max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeModel>,
    /// Seed of each tree's stream (bootstrap draw and feature choices).
    pub tree_seeds: Vec<u64>,
    pub features_per_split: usize,
}

impl ForestModel {
    pub fn n_features(&self) -> usize {
        self.trees[0].n_features
    }

    pub fn votes(&self, x: &[f64]) -> Result<[usize; QualityClass::COUNT]> {
        let mut v = [0; 3];
        for t in &self.trees {
            v[t.predict(x)?.index()] += 1;
        }
        Ok(v)
    }

    /// Majority vote over trees; ties go to the lower class.
    pub fn predict(&self, x: &[f64]) -> Result<QualityClass> {
        Ok(majority(&self.votes(x)?))
    }
}

/// Tree `i` draws everything from `rng::stream(seed, [i])`, so the forest is
/// the same whichever worker builds which tree.
pub fn fit_forest(x: &Matrix, labels: &[QualityClass], params: &ForestParams, seed: u64) -> Result<ForestModel> {
    if params.n_trees == 0 {
        return Err(Error::param("trees", "must be at least 1"));
    }
    let d = x.cols();
    let per_split = params.resolved_features_per_split(d);
    if per_split == 0 || per_split > d {
        return Err(Error::param("features_per_split", alloc::format!("must lie in 1..={d}")));
    }
    if x.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if x.rows() != labels.len() {
        return Err(Error::LengthMismatch(x.rows(), labels.len()));
    }
    let tree_params = TreeParams {
        criterion: params.criterion,
        max_depth: params.max_depth,
        min_samples_split: params.min_samples_split,
    };
    tree_params.validate()?;

    let n = x.rows();
    let tree_seeds: Vec<u64> = (0..params.n_trees).map(|i| rng::derive_seed(seed, &[i as u64])).collect();
    let trees = par::map_indexed(params.n_trees, |i| {
        let mut r = ChaCha8Rng::seed_from_u64(tree_seeds[i]);
        let samples: Vec<usize> = if params.bootstrap {
            (0..n).map(|_| r.gen_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        let sampler = FeatureSampler {
            per_split,
            rng: &mut r,
        };
        grow(x, labels, &samples, &tree_params, Some(sampler))
    });
    Ok(ForestModel {
        trees,
        tree_seeds,
        features_per_split: per_split,
    })
}
