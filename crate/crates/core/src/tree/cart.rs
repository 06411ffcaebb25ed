//! Greedy classification trees.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::impurity::SplitCriterion;
use super::presort::NodeSamples;
use super::{midpoint, MIN_DECREASE, TIE_TOLERANCE};
use crate::data::QualityClass;
use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Matrix;

type Counts = [usize; QualityClass::COUNT];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub impurity_decrease: f64,
}

/// Parent impurity minus the size-weighted child impurities.
fn decrease(criterion: SplitCriterion, parent: &Counts, parent_imp: f64, left: &Counts, n_left: usize) -> f64 {
    let n = parent.iter().sum::<usize>();
    let mut right = [0; 3];
    for c in 0..3 {
        right[c] = parent[c] - left[c];
    }
    let n_right = n - n_left;
    parent_imp
        - (n_left as f64 * criterion.of(left, n_left) + n_right as f64 * criterion.of(&right, n_right)) / n as f64
}

/// Best threshold for one feature given its members in ascending value
/// order. Ties keep the lowest threshold.
fn scan_feature(
    sorted: &[u32],
    value: impl Fn(u32) -> f64,
    label: impl Fn(u32) -> usize,
    parent: &Counts,
    parent_imp: f64,
    criterion: SplitCriterion,
) -> Option<(f64, f64)> {
    let mut left = [0usize; 3];
    let mut best: Option<(f64, f64)> = None;
    for w in 0..sorted.len().saturating_sub(1) {
        left[label(sorted[w])] += 1;
        let (lo, hi) = (value(sorted[w]), value(sorted[w + 1]));
        if lo >= hi {
            continue;
        }
        let d = decrease(criterion, parent, parent_imp, &left, w + 1);
        if d > MIN_DECREASE && best.map_or(true, |(_, b)| d > b + TIE_TOLERANCE) {
            best = Some((midpoint(lo, hi), d));
        }
    }
    best
}

fn counts_of(members: &[u32], label: impl Fn(u32) -> usize) -> Counts {
    let mut c = [0; 3];
    for &m in members {
        c[label(m)] += 1;
    }
    c
}

fn is_pure(c: &Counts) -> bool {
    c.iter().filter(|&&v| v > 0).count() <= 1
}

/// The split over `candidate_features` with the largest impurity decrease,
/// thresholds taken at midpoints between consecutive distinct values. Ties
/// prefer the lower feature index, then the lower threshold. `None` when no
/// split reduces impurity.
pub fn best_split(
    rows: &Matrix,
    labels: &[QualityClass],
    criterion: SplitCriterion,
    candidate_features: &[usize],
) -> Option<Split> {
    if rows.rows() < 2 || rows.rows() != labels.len() {
        return None;
    }
    let label = |p: u32| labels[p as usize].index();
    let all: Vec<u32> = (0..rows.rows() as u32).collect();
    let parent = counts_of(&all, label);
    let parent_imp = criterion.of(&parent, all.len());
    let mut features = candidate_features.to_vec();
    features.sort_unstable();
    features.dedup();
    let mut best: Option<Split> = None;
    for f in features {
        let mut sorted = all.clone();
        sorted.sort_by(|&a, &b| rows.get(a as usize, f).total_cmp(&rows.get(b as usize, f)));
        let found = scan_feature(&sorted, |p| rows.get(p as usize, f), label, &parent, parent_imp, criterion);
        if let Some((threshold, d)) = found {
            if best.map_or(true, |b| d > b.impurity_decrease + TIE_TOLERANCE) {
                best = Some(Split {
                    feature: f,
                    threshold,
                    impurity_decrease: d,
                });
            }
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub criterion: SplitCriterion,
    /// `None` grows until another stopping rule applies.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            criterion: SplitCriterion::Gini,
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

impl TreeParams {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.min_samples_split < 2 {
            return Err(Error::param("min_samples_split", "must be at least 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TreeNode {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        counts: Counts,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    /// Root first; children always follow their parent.
    pub nodes: Vec<TreeNode>,
    pub params: TreeParams,
    pub n_features: usize,
}

impl TreeModel {
    fn leaf(&self, x: &[f64]) -> &Counts {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
                TreeNode::Leaf { counts } => return counts,
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<QualityClass> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: x.len(),
            });
        }
        Ok(majority(self.leaf(x)))
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], at: usize) -> usize {
            match nodes[at] {
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
                TreeNode::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Most frequent class; ties go to the lower class.
pub(crate) fn majority(counts: &Counts) -> QualityClass {
    let as_f: [f64; 3] = [counts[0] as f64, counts[1] as f64, counts[2] as f64];
    QualityClass::ALL[math::argmax(&as_f)]
}

/// Per-node feature subsampling for forests.
pub(crate) struct FeatureSampler<'r, R: Rng> {
    pub per_split: usize,
    pub rng: &'r mut R,
}

/// Grow a tree over `samples` (row indices into `x`, repeats allowed).
pub(crate) fn grow<R: Rng>(
    x: &Matrix,
    labels: &[QualityClass],
    samples: &[usize],
    params: &TreeParams,
    mut sampler: Option<FeatureSampler<'_, R>>,
) -> TreeModel {
    let d = x.cols();
    let value = |p: u32, f: usize| x.get(samples[p as usize], f);
    let label = |p: u32| labels[samples[p as usize]].index();
    let root = NodeSamples::root(samples.len(), d, |p, f| x.get(samples[p], f));
    let mut goes_left = alloc::vec![false; samples.len()];
    let mut nodes = alloc::vec![TreeNode::Leaf { counts: [0; 3] }];
    let mut stack = alloc::vec![(0usize, root, 0usize)];

    while let Some((at, node, depth)) = stack.pop() {
        let counts = counts_of(&node.members, label);
        let n = node.len();
        let can_split = !is_pure(&counts)
            && n >= params.min_samples_split
            && params.max_depth.map_or(true, |m| depth < m);
        let mut chosen: Option<(usize, f64)> = None;
        if can_split {
            let features: Vec<usize> = match sampler.as_mut() {
                Some(s) if s.per_split < d => {
                    let mut f = rand::seq::index::sample(s.rng, d, s.per_split).into_vec();
                    f.sort_unstable();
                    f
                }
                _ => (0..d).collect(),
            };
            let parent_imp = params.criterion.of(&counts, n);
            let mut best_d = f64::NEG_INFINITY;
            for f in features {
                let found = scan_feature(&node.sorted[f], |p| value(p, f), label, &counts, parent_imp, params.criterion);
                if let Some((t, dec)) = found {
                    if dec > best_d + TIE_TOLERANCE {
                        best_d = dec;
                        chosen = Some((f, t));
                    }
                }
            }
        }
        match chosen {
            None => nodes[at] = TreeNode::Leaf { counts },
            Some((feature, threshold)) => {
                for &m in &node.members {
                    goes_left[m as usize] = value(m, feature) <= threshold;
                }
                let (l, r) = node.partition(&goes_left);
                let (li, ri) = (nodes.len(), nodes.len() + 1);
                nodes.push(TreeNode::Leaf { counts: [0; 3] });
                nodes.push(TreeNode::Leaf { counts: [0; 3] });
                nodes[at] = TreeNode::Split {
                    feature,
                    threshold,
                    left: li,
                    right: ri,
                };
                stack.push((ri, r, depth + 1));
                stack.push((li, l, depth + 1));
            }
        }
    }
    TreeModel {
        nodes,
        params: *params,
        n_features: d,
    }
}

/// Greedy recursive partitioning until nodes are pure, too small, at the
/// depth limit, or admit no improving split. Leaves predict their majority.
pub fn fit_tree(x: &Matrix, labels: &[QualityClass], params: &TreeParams) -> Result<TreeModel> {
    params.validate()?;
    if x.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if x.rows() != labels.len() {
        return Err(Error::LengthMismatch(x.rows(), labels.len()));
    }
    let samples: Vec<usize> = (0..x.rows()).collect();
    Ok(grow::<rand_chacha::ChaCha8Rng>(x, labels, &samples, params, None))
}
