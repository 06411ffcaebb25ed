//! The shared fit/predict contract over the five model families, with
//! hyperparameter validation and the default configurations.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, QualityClass};
use crate::error::{Error, Result};
use crate::knn::{fit_knn, KnnModel};
use crate::math;
use crate::matrix::Matrix;
use crate::svm::{train_multiclass_svm, Kernel, MulticlassSvm, SvmParams};
use crate::tree::{
    fit_forest, fit_gboost, fit_tree, ForestModel, ForestParams, GboostModel, GboostParams, SplitCriterion,
    TreeModel, TreeParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelFamily {
    Svm,
    Dtree,
    Rforest,
    Gboost,
    Knn,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 5] = [
        ModelFamily::Svm,
        ModelFamily::Dtree,
        ModelFamily::Rforest,
        ModelFamily::Gboost,
        ModelFamily::Knn,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ModelFamily::Svm => "svm",
            ModelFamily::Dtree => "dtree",
            ModelFamily::Rforest => "rforest",
            ModelFamily::Gboost => "gboost",
            ModelFamily::Knn => "knn",
        }
    }

    pub fn from_tag(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|f| f.tag() == s)
    }

    pub fn valid_keys(self) -> &'static [&'static str] {
        match self {
            ModelFamily::Svm => &["c", "gamma", "kernel", "max_passes", "tol"],
            ModelFamily::Dtree => &["criterion", "max_depth", "min_samples_split"],
            ModelFamily::Rforest => &[
                "bootstrap",
                "criterion",
                "features_per_split",
                "max_depth",
                "min_samples_split",
                "trees",
            ],
            ModelFamily::Gboost => &["iterations", "learning_rate", "tree_depth"],
            ModelFamily::Knn => &["k"],
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// A hyperparameter value as it appears in JSON: number, string, boolean,
/// or `null` for "unbounded".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Bool(bool),
    Number(f64),
    Text(String),
    Unbounded,
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Bool(b) => write!(f, "{b}"),
            ParamValue::Number(x) if math::is_integer(*x) && math::abs(*x) < 1e15 => write!(f, "{}", *x as i64),
            ParamValue::Number(x) => write!(f, "{x}"),
            ParamValue::Text(s) => f.write_str(s),
            ParamValue::Unbounded => f.write_str("unbounded"),
        }
    }
}

impl From<f64> for ParamValue {
    fn from(x: f64) -> Self {
        ParamValue::Number(x)
    }
}

impl From<usize> for ParamValue {
    fn from(x: usize) -> Self {
        ParamValue::Number(x as f64)
    }
}

impl From<&str> for ParamValue {
    fn from(s: &str) -> Self {
        ParamValue::Text(s.into())
    }
}

impl From<bool> for ParamValue {
    fn from(b: bool) -> Self {
        ParamValue::Bool(b)
    }
}

pub type Hyperparameters = BTreeMap<String, ParamValue>;

/// `name=value` pairs joined by commas, for messages and table rows.
pub fn describe(hp: &Hyperparameters) -> String {
    hp.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub model_family: ModelFamily,
    #[serde(default)]
    pub hyperparameters: Hyperparameters,
    pub seed: u64,
}

/// Conventional defaults used when a model is trained "as is".
pub fn default_hyperparameters(family: ModelFamily) -> Hyperparameters {
    let pairs: Vec<(&str, ParamValue)> = match family {
        ModelFamily::Svm => alloc::vec![("c", 1.0.into()), ("kernel", "linear".into())],
        ModelFamily::Dtree => alloc::vec![
            ("criterion", "gini".into()),
            ("max_depth", ParamValue::Unbounded),
            ("min_samples_split", 2usize.into()),
        ],
        ModelFamily::Rforest => alloc::vec![
            ("trees", 100usize.into()),
            ("bootstrap", true.into()),
            ("criterion", "gini".into()),
            ("max_depth", ParamValue::Unbounded),
        ],
        ModelFamily::Gboost => alloc::vec![
            ("iterations", 100usize.into()),
            ("learning_rate", 0.1.into()),
            ("tree_depth", 3usize.into()),
        ],
        ModelFamily::Knn => alloc::vec![("k", 5usize.into())],
    };
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Validated, family-specific training parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyParams {
    Svm(SvmParams),
    Dtree(TreeParams),
    Rforest(ForestParams),
    Gboost(GboostParams),
    Knn { k: usize },
}

struct Reader<'a> {
    hp: &'a Hyperparameters,
}

impl Reader<'_> {
    fn number(&self, key: &str, default: f64) -> Result<f64> {
        match self.hp.get(key) {
            None => Ok(default),
            Some(ParamValue::Number(x)) if x.is_finite() => Ok(*x),
            Some(v) => Err(Error::param(key, format!("expected a number, found {v}"))),
        }
    }

    fn count(&self, key: &str, default: usize) -> Result<usize> {
        let x = self.number(key, default as f64)?;
        if x < 0.0 || !math::is_integer(x) {
            return Err(Error::param(key, format!("expected a non-negative integer, found {x}")));
        }
        Ok(x as usize)
    }

    fn depth(&self, key: &str) -> Result<Option<usize>> {
        match self.hp.get(key) {
            None | Some(ParamValue::Unbounded) => Ok(None),
            Some(ParamValue::Text(s)) if s == "unbounded" => Ok(None),
            Some(_) => self.count(key, 0).map(Some),
        }
    }

    fn text(&self, key: &str, default: &str) -> Result<String> {
        match self.hp.get(key) {
            None => Ok(default.into()),
            Some(ParamValue::Text(s)) => Ok(s.clone()),
            Some(v) => Err(Error::param(key, format!("expected a string, found {v}"))),
        }
    }

    fn flag(&self, key: &str, default: bool) -> Result<bool> {
        match self.hp.get(key) {
            None => Ok(default),
            Some(ParamValue::Bool(b)) => Ok(*b),
            Some(v) => Err(Error::param(key, format!("expected true or false, found {v}"))),
        }
    }

    fn criterion(&self) -> Result<SplitCriterion> {
        match self.text("criterion", "gini")?.as_str() {
            "gini" => Ok(SplitCriterion::Gini),
            "entropy" => Ok(SplitCriterion::Entropy),
            other => Err(Error::param("criterion", format!("expected gini or entropy, found {other}"))),
        }
    }
}

fn criterion_name(c: SplitCriterion) -> &'static str {
    match c {
        SplitCriterion::Gini => "gini",
        SplitCriterion::Entropy => "entropy",
    }
}

fn depth_value(d: Option<usize>) -> ParamValue {
    d.map_or(ParamValue::Unbounded, ParamValue::from)
}

/// Check keys and values for `family` and fill in defaults. Returns the
/// typed parameters and the complete, canonical hyperparameter map (keys
/// that have no effect, like `gamma` under a linear kernel, are dropped).
pub fn resolve(family: ModelFamily, hp: &Hyperparameters, n_features: usize) -> Result<(FamilyParams, Hyperparameters)> {
    let valid = family.valid_keys();
    if let Some(bad) = hp.keys().find(|k| !valid.contains(&k.as_str())) {
        return Err(Error::UnknownHyperparameter {
            family: family.tag().into(),
            name: bad.clone(),
            valid: valid.iter().map(|s| s.to_string()).collect(),
        });
    }
    let r = Reader { hp };
    let mut out = Hyperparameters::new();
    let mut put = |k: &str, v: ParamValue| {
        out.insert(k.into(), v);
    };
    let params = match family {
        ModelFamily::Svm => {
            let defaults = SvmParams::default();
            let c = r.number("c", defaults.c)?;
            let kernel = match r.text("kernel", "linear")?.as_str() {
                "linear" => Kernel::Linear,
                "rbf" => Kernel::Rbf {
                    gamma: r.number("gamma", 1.0 / n_features.max(1) as f64)?,
                },
                other => return Err(Error::param("kernel", format!("expected linear or rbf, found {other}"))),
            };
            let p = SvmParams {
                c,
                kernel,
                tol: r.number("tol", defaults.tol)?,
                max_passes: r.count("max_passes", defaults.max_passes)?,
            };
            p.kernel.validate()?;
            if c.is_nan() || c <= 0.0 {
                return Err(Error::param("c", "must be positive"));
            }
            put("c", c.into());
            match kernel {
                Kernel::Linear => put("kernel", "linear".into()),
                Kernel::Rbf { gamma } => {
                    put("kernel", "rbf".into());
                    put("gamma", gamma.into());
                }
            }
            put("tol", p.tol.into());
            put("max_passes", p.max_passes.into());
            FamilyParams::Svm(p)
        }
        ModelFamily::Dtree => {
            let p = TreeParams {
                criterion: r.criterion()?,
                max_depth: r.depth("max_depth")?,
                min_samples_split: r.count("min_samples_split", 2)?,
            };
            p.validate()?;
            put("criterion", criterion_name(p.criterion).into());
            put("max_depth", depth_value(p.max_depth));
            put("min_samples_split", p.min_samples_split.into());
            FamilyParams::Dtree(p)
        }
        ModelFamily::Rforest => {
            let defaults = ForestParams::default();
            let mut p = ForestParams {
                n_trees: r.count("trees", defaults.n_trees)?,
                features_per_split: match hp.get("features_per_split") {
                    None => None,
                    Some(_) => Some(r.count("features_per_split", 0)?),
                },
                max_depth: r.depth("max_depth")?,
                min_samples_split: r.count("min_samples_split", 2)?,
                criterion: r.criterion()?,
                bootstrap: r.flag("bootstrap", true)?,
            };
            let per_split = p.resolved_features_per_split(n_features);
            if p.n_trees == 0 {
                return Err(Error::param("trees", "must be at least 1"));
            }
            if per_split == 0 || per_split > n_features {
                return Err(Error::param("features_per_split", format!("must lie in 1..={n_features}")));
            }
            p.features_per_split = Some(per_split);
            put("trees", p.n_trees.into());
            put("features_per_split", per_split.into());
            put("max_depth", depth_value(p.max_depth));
            put("min_samples_split", p.min_samples_split.into());
            put("criterion", criterion_name(p.criterion).into());
            put("bootstrap", p.bootstrap.into());
            FamilyParams::Rforest(p)
        }
        ModelFamily::Gboost => {
            let d = GboostParams::default();
            let p = GboostParams {
                iterations: r.count("iterations", d.iterations)?,
                learning_rate: r.number("learning_rate", d.learning_rate)?,
                tree_depth: r.count("tree_depth", d.tree_depth)?,
            };
            if p.learning_rate < 0.0 {
                return Err(Error::param("learning_rate", "must be non-negative"));
            }
            put("iterations", p.iterations.into());
            put("learning_rate", p.learning_rate.into());
            put("tree_depth", p.tree_depth.into());
            FamilyParams::Gboost(p)
        }
        ModelFamily::Knn => {
            let k = r.count("k", 5)?;
            if k == 0 {
                return Err(Error::param("k", "must be at least 1"));
            }
            put("k", k.into());
            FamilyParams::Knn { k }
        }
    };
    Ok((params, out))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelPayload {
    Svm(MulticlassSvm),
    Dtree(TreeModel),
    Rforest(ForestModel),
    Gboost(GboostModel),
    Knn(KnnModel),
}

/// A fitted classifier. Immutable; predicts only on rows with the training arity.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub family: ModelFamily,
    pub feature_names: Vec<String>,
    /// Complete resolved hyperparameters.
    pub hyperparameters: Hyperparameters,
    pub payload: ModelPayload,
    /// Solver diagnostics such as unconverged SVM machines.
    pub warnings: Vec<String>,
}

pub fn fit(train: &Dataset, cfg: &TrainConfig) -> Result<TrainedModel> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (params, hyperparameters) = resolve(cfg.model_family, &cfg.hyperparameters, train.n_features())?;
    let (x, y) = (train.features(), train.labels());
    let mut warnings = Vec::new();
    let payload = match params {
        FamilyParams::Svm(p) => {
            let m = train_multiclass_svm(x, y, &p)?;
            for (c, machine) in m.machines.iter().enumerate() {
                if !machine.converged {
                    warnings.push(format!(
                        "svm machine for class {c} stopped after {} iterations with KKT gap {:.3e} (tol {:.1e})",
                        machine.iterations, machine.kkt_gap, p.tol
                    ));
                }
            }
            ModelPayload::Svm(m)
        }
        FamilyParams::Dtree(p) => ModelPayload::Dtree(fit_tree(x, y, &p)?),
        FamilyParams::Rforest(p) => ModelPayload::Rforest(fit_forest(x, y, &p, cfg.seed)?),
        FamilyParams::Gboost(p) => ModelPayload::Gboost(fit_gboost(x, y, &p)?),
        FamilyParams::Knn { k } => ModelPayload::Knn(fit_knn(x, y, k)?),
    };
    Ok(TrainedModel {
        family: cfg.model_family,
        feature_names: train.feature_names().to_vec(),
        hyperparameters,
        payload,
        warnings,
    })
}

impl TrainedModel {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn predict_row(&self, x: &[f64]) -> Result<QualityClass> {
        match &self.payload {
            ModelPayload::Svm(m) => m.predict(x),
            ModelPayload::Dtree(m) => m.predict(x),
            ModelPayload::Rforest(m) => m.predict(x),
            ModelPayload::Gboost(m) => m.predict(x),
            ModelPayload::Knn(m) => m.predict(x),
        }
    }

    pub fn predict_batch(&self, x: &Matrix) -> Result<Vec<QualityClass>> {
        if x.cols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                found: x.cols(),
            });
        }
        x.iter_rows().map(|r| self.predict_row(r)).collect()
    }

    /// Like [`predict_batch`](Self::predict_batch), also checking column names.
    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<QualityClass>> {
        if ds.feature_names() != self.feature_names.as_slice() {
            return Err(Error::FeatureMismatch);
        }
        self.predict_batch(ds.features())
    }

    /// Payload arity agrees with the stored feature names.
    pub fn validate(&self) -> Result<()> {
        let arity = match &self.payload {
            ModelPayload::Svm(m) => {
                if m.machines.len() != QualityClass::COUNT {
                    return Err(Error::param("payload", "svm needs one machine per class"));
                }
                m.n_features()
            }
            ModelPayload::Dtree(m) => m.n_features,
            ModelPayload::Rforest(m) => {
                if m.trees.is_empty() {
                    return Err(Error::param("payload", "forest has no trees"));
                }
                m.n_features()
            }
            ModelPayload::Gboost(m) => m.n_features,
            ModelPayload::Knn(m) => m.n_features(),
        };
        if arity != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                found: arity,
            });
        }
        Ok(())
    }
}
