//! Multiclass gradient boosting with softmax cross-entropy.
//!
//! Scores start at the log class priors. Every stage fits one least-squares
//! regression tree per class to the negative gradient (one-hot label minus
//! softmax probability) and adds `learning_rate * tree` to that class's score.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::presort::NodeSamples;
use super::{midpoint, MIN_DECREASE};
use crate::data::{class_counts, QualityClass};
use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Matrix;
use crate::svm::class_from_scores;

const K: usize = QualityClass::COUNT;
type Scores = [f64; K];

/// Prior used in place of zero for a class absent from training.
const MIN_PRIOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GboostParams {
    pub iterations: usize,
    pub learning_rate: f64,
    pub tree_depth: usize,
}

impl Default for GboostParams {
    fn default() -> Self {
        GboostParams {
            iterations: 100,
            learning_rate: 0.1,
            tree_depth: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum RegNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<RegNode>,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                RegNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
                RegNode::Leaf { value } => return *value,
            }
        }
    }
}

/// Least-squares tree on `targets`, leaves holding the mean target.
fn fit_regression_tree(x: &Matrix, targets: &[f64], root: NodeSamples, max_depth: usize) -> RegressionTree {
    let mut goes_left = alloc::vec![false; targets.len()];
    let mut nodes = alloc::vec![RegNode::Leaf { value: 0.0 }];
    let mut stack = alloc::vec![(0usize, root, 0usize)];
    while let Some((at, node, depth)) = stack.pop() {
        let n = node.len();
        let total: f64 = node.members.iter().map(|&p| targets[p as usize]).sum();
        let mut chosen: Option<(usize, f64)> = None;
        if depth < max_depth && n >= 2 {
            let base = total * total / n as f64;
            let mut best = MIN_DECREASE;
            for (f, sorted) in node.sorted.iter().enumerate() {
                let mut left = 0.0;
                for w in 0..n - 1 {
                    left += targets[sorted[w] as usize];
                    let (lo, hi) = (x.get(sorted[w] as usize, f), x.get(sorted[w + 1] as usize, f));
                    if lo >= hi {
                        continue;
                    }
                    let (nl, nr) = ((w + 1) as f64, (n - w - 1) as f64);
                    let right = total - left;
                    let gain = left * left / nl + right * right / nr - base;
                    if gain > best {
                        best = gain;
                        chosen = Some((f, midpoint(lo, hi)));
                    }
                }
            }
        }
        match chosen {
            None => {
                nodes[at] = RegNode::Leaf {
                    value: if n > 0 { total / n as f64 } else { 0.0 },
                }
            }
            Some((feature, threshold)) => {
                for &m in &node.members {
                    goes_left[m as usize] = x.get(m as usize, feature) <= threshold;
                }
                let (l, r) = node.partition(&goes_left);
                let (li, ri) = (nodes.len(), nodes.len() + 1);
                nodes.push(RegNode::Leaf { value: 0.0 });
                nodes.push(RegNode::Leaf { value: 0.0 });
                nodes[at] = RegNode::Split {
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
    RegressionTree { nodes }
}

pub fn softmax(scores: &Scores) -> Scores {
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e = scores.map(|s| math::exp(s - m));
    let z: f64 = e.iter().sum();
    e.map(|v| v / z)
}

/// -log softmax(scores)[label], computed stably.
pub fn sample_loss(scores: &Scores, label: QualityClass) -> f64 {
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + math::ln(scores.iter().map(|s| math::exp(s - m)).sum::<f64>());
    lse - scores[label.index()]
}

/// Mean cross-entropy over rows.
pub fn cross_entropy(scores: &[Scores], labels: &[QualityClass]) -> f64 {
    scores.iter().zip(labels).map(|(s, &l)| sample_loss(s, l)).sum::<f64>() / labels.len() as f64
}

/// One-hot(label) - softmax(scores), the negative gradient of
/// [`sample_loss`] with respect to the scores.
pub fn negative_gradient(scores: &Scores, label: QualityClass) -> Scores {
    let mut g = softmax(scores).map(|p| -p);
    g[label.index()] += 1.0;
    g
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GboostModel {
    pub init_scores: Scores,
    pub learning_rate: f64,
    /// One tree per class per stage.
    pub stages: Vec<Vec<RegressionTree>>,
    pub n_features: usize,
    /// Mean training cross-entropy before boosting and after each stage.
    pub training_loss: Vec<f64>,
}

impl GboostModel {
    pub fn scores(&self, x: &[f64]) -> Result<Scores> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: x.len(),
            });
        }
        let mut s = self.init_scores;
        for stage in &self.stages {
            for (k, tree) in stage.iter().enumerate() {
                s[k] += self.learning_rate * tree.predict(x);
            }
        }
        Ok(s)
    }

    pub fn predict(&self, x: &[f64]) -> Result<QualityClass> {
        Ok(class_from_scores(&self.scores(x)?))
    }
}

pub fn fit_gboost(x: &Matrix, labels: &[QualityClass], params: &GboostParams) -> Result<GboostModel> {
    if !(params.learning_rate >= 0.0 && params.learning_rate.is_finite()) {
        return Err(Error::param("learning_rate", "must be finite and non-negative"));
    }
    if x.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if x.rows() != labels.len() {
        return Err(Error::LengthMismatch(x.rows(), labels.len()));
    }
    let n = labels.len();
    let counts = class_counts(labels);
    let init_scores: Scores = core::array::from_fn(|k| math::ln((counts[k] as f64 / n as f64).max(MIN_PRIOR)));

    let root = NodeSamples::root(n, x.cols(), |p, f| x.get(p, f));
    let mut scores = alloc::vec![init_scores; n];
    let mut training_loss = alloc::vec![cross_entropy(&scores, labels)];
    let mut stages = Vec::with_capacity(params.iterations);
    let mut residual = alloc::vec![0.0; n];
    for _ in 0..params.iterations {
        let grads: Vec<Scores> = scores.iter().zip(labels).map(|(s, &l)| negative_gradient(s, l)).collect();
        let mut stage = Vec::with_capacity(K);
        for k in 0..K {
            for (r, g) in residual.iter_mut().zip(&grads) {
                *r = g[k];
            }
            let root_k = NodeSamples {
                members: root.members.clone(),
                sorted: root.sorted.clone(),
            };
            let tree = fit_regression_tree(x, &residual, root_k, params.tree_depth);
            for (i, s) in scores.iter_mut().enumerate() {
                s[k] += params.learning_rate * tree.predict(x.row(i));
            }
            stage.push(tree);
        }
        stages.push(stage);
        training_loss.push(cross_entropy(&scores, labels));
    }
    Ok(GboostModel {
        init_scores,
        learning_rate: params.learning_rate,
        stages,
        n_features: x.cols(),
        training_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use QualityClass::*;

    fn toy() -> (Matrix, Vec<QualityClass>) {
        let x = Matrix::from_rows(&[[0.0, 1.0], [0.5, 0.2], [1.0, 0.7], [3.0, 0.1], [3.5, 0.9], [4.0, 0.4], [4.2, 0.3]]).unwrap();
        (x, vec![Bad, Bad, Bad, Good, Good, Good, Good])
    }

    #[test]
    fn zero_rate_or_zero_iterations_predict_prior_majority() {
        let (x, y) = toy();
        for p in [
            GboostParams { learning_rate: 0.0, ..GboostParams::default() },
            GboostParams { iterations: 0, ..GboostParams::default() },
        ] {
            let m = fit_gboost(&x, &y, &p).unwrap();
            for i in 0..x.rows() {
                assert_eq!(m.predict(x.row(i)).unwrap(), Good);
            }
        }
    }

    #[test]
    fn separable_toy_loss_decreases() {
        let (x, y) = toy();
        let p = GboostParams { iterations: 10, learning_rate: 0.1, tree_depth: 3 };
        let m = fit_gboost(&x, &y, &p).unwrap();
        assert_eq!(m.training_loss.len(), 11);
        for w in m.training_loss.windows(2) {
            assert!(w[1] <= w[0]);
        }
        for i in 0..x.rows() {
            assert_eq!(m.predict(x.row(i)).unwrap(), y[i]);
        }
    }

    #[test]
    fn regression_tree_leaf_means() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [10.0], [11.0]]).unwrap();
        let t = [1.0, 3.0, -2.0, -4.0];
        let root = NodeSamples::root(4, 1, |p, f| x.get(p, f));
        let tree = fit_regression_tree(&x, &t, root, 1);
        assert_eq!(tree.predict(&[0.5]), 2.0);
        assert_eq!(tree.predict(&[10.5]), -3.0);
    }

    #[test]
    fn softmax_and_gradient_shapes() {
        let p = softmax(&[1000.0, 1000.0, 1000.0]);
        assert!((p[0] - 1.0 / 3.0).abs() < 1e-15);
        let g = negative_gradient(&[0.0, 0.0, 0.0], Normal);
        assert!((g.iter().sum::<f64>()).abs() < 1e-15);
        assert!(g[1] > 0.0 && g[0] < 0.0);
    }

    #[test]
    fn rejects_negative_rate() {
        let (x, y) = toy();
        assert!(fit_gboost(&x, &y, &GboostParams { learning_rate: -0.1, ..GboostParams::default() }).is_err());
    }
}
