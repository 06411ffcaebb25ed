//! Decision trees, random forests and gradient boosting.

mod boost;
mod cart;
mod forest;
mod impurity;
mod presort;

pub use boost::{
    cross_entropy, fit_gboost, negative_gradient, sample_loss, softmax, GboostModel, GboostParams, RegNode,
    RegressionTree,
};
pub use cart::{best_split, fit_tree, Split, TreeModel, TreeNode, TreeParams};
pub use forest::{fit_forest, ForestModel, ForestParams};
pub use impurity::{entropy, gini, SplitCriterion};

/// Smallest impurity (or squared-error) decrease that counts as progress.
pub(crate) const MIN_DECREASE: f64 = 1e-12;

/// Candidate splits whose decreases differ by less than this are ties, so
/// rounding noise cannot override the lowest-feature, lowest-threshold rule.
pub(crate) const TIE_TOLERANCE: f64 = 1e-12;

/// Threshold halfway between two consecutive distinct sorted values,
/// guaranteed to satisfy `lo <= t < hi`.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m >= hi {
        lo
    } else {
        m
    }
}
