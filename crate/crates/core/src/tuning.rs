//! Stratified k-fold cross-validation and exhaustive grid search.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, QualityClass};
use crate::error::{Error, Result};
use crate::model::{self, describe, Hyperparameters, ModelFamily, ParamValue, TrainConfig};
use crate::par;
use crate::rng;
use crate::sampling::{resample, SamplerConfig};

pub const DEFAULT_K_FOLDS: usize = 5;

/// Split indices into `k_folds` disjoint sets. Members of each class are
/// shuffled, then dealt round-robin, so per-class fold sizes differ by at
/// most one. Each fold is sorted.
pub fn stratified_kfold(labels: &[QualityClass], k_folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k_folds < 2 {
        return Err(Error::param("k_folds", "must be at least 2"));
    }
    let mut by_class: [Vec<usize>; QualityClass::COUNT] = Default::default();
    for (i, l) in labels.iter().enumerate() {
        by_class[l.index()].push(i);
    }
    let mut folds = alloc::vec![Vec::new(); k_folds];
    let mut next = 0;
    for (class, members) in by_class.iter_mut().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < k_folds {
            return Err(Error::ClassTooSmall {
                class,
                count: members.len(),
                needed: k_folds,
            });
        }
        members.shuffle(&mut rng::stream(seed, &[class as u64]));
        // Continue dealing where the previous class stopped so fold sizes stay level.
        for &i in members.iter() {
            folds[next].push(i);
            next = (next + 1) % k_folds;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub values: Vec<ParamValue>,
}

impl Axis {
    pub fn new(name: &str, values: impl IntoIterator<Item = ParamValue>) -> Self {
        Axis {
            name: name.into(),
            values: values.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub model_family: ModelFamily,
    /// Declared order matters: the last axis varies fastest.
    pub axes: Vec<Axis>,
    pub seed: u64,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if let Some(a) = self.axes.iter().find(|a| a.values.is_empty()) {
            return Err(Error::EmptyAxis(a.name.clone()));
        }
        for (i, a) in self.axes.iter().enumerate() {
            if self.axes[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::param(&a.name, "axis declared twice"));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every combination in row-major order.
    pub fn configs(&self) -> Vec<Hyperparameters> {
        let n = self.len();
        let mut out = Vec::with_capacity(n);
        for mut flat in 0..n {
            let mut hp = Hyperparameters::new();
            for a in self.axes.iter().rev() {
                let len = a.values.len();
                hp.insert(a.name.clone(), a.values[flat % len].clone());
                flat /= len;
            }
            out.push(hp);
        }
        out
    }
}

/// The grids searched when a configuration asks for tuning without its own grid.
pub fn default_grid(family: ModelFamily, seed: u64) -> GridSpec {
    use ParamValue::{Number, Text, Unbounded};
    let nums = |xs: &[f64]| xs.iter().map(|&x| Number(x)).collect::<Vec<_>>();
    let axes = match family {
        ModelFamily::Svm => alloc::vec![
            Axis::new("c", nums(&[0.1, 1.0, 10.0, 100.0])),
            Axis::new("kernel", [Text("linear".into()), Text("rbf".into())]),
            Axis::new("gamma", nums(&[0.01, 0.1, 1.0])),
        ],
        ModelFamily::Dtree => alloc::vec![
            Axis::new("criterion", [Text("gini".into()), Text("entropy".into())]),
            Axis::new("max_depth", [Number(3.0), Number(5.0), Number(10.0), Unbounded]),
        ],
        ModelFamily::Rforest => alloc::vec![
            Axis::new("trees", nums(&[100.0, 300.0])),
            Axis::new("features_per_split", nums(&[2.0, 3.0, 4.0])),
        ],
        ModelFamily::Gboost => alloc::vec![
            Axis::new("learning_rate", nums(&[0.05, 0.1, 0.3])),
            Axis::new("iterations", nums(&[50.0, 100.0, 200.0])),
            Axis::new("tree_depth", nums(&[2.0, 3.0])),
        ],
        ModelFamily::Knn => alloc::vec![Axis::new("k", nums(&[3.0, 5.0, 7.0, 9.0, 11.0]))],
    };
    GridSpec {
        model_family: family,
        axes,
        seed,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigScore {
    /// The combination as declared in the grid.
    pub config: Hyperparameters,
    /// Mean validation error over folds.
    pub error: f64,
    pub fold_errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub model_family: ModelFamily,
    pub best_config: Hyperparameters,
    pub best_error: f64,
    pub k_folds: usize,
    pub table: Vec<ConfigScore>,
}

/// Cross-validated error for one configuration. `fold_sampler`, when set, is
/// applied to the training folds only.
pub fn cross_validate(
    cfg: &TrainConfig,
    train: &Dataset,
    folds: &[Vec<usize>],
    fold_sampler: Option<&SamplerConfig>,
) -> Result<Vec<f64>> {
    let n = train.len();
    let mut errors = Vec::with_capacity(folds.len());
    for (f, held_out) in folds.iter().enumerate() {
        let mut in_fold = alloc::vec![false; n];
        for &i in held_out {
            in_fold[i] = true;
        }
        let fit_idx: Vec<usize> = (0..n).filter(|&i| !in_fold[i]).collect();
        let mut fit_set = train.subset(&fit_idx);
        if let Some(s) = fold_sampler {
            let s = SamplerConfig {
                seed: rng::derive_seed(s.seed, &[f as u64]),
                ..*s
            };
            fit_set = resample(&fit_set, &s)?;
        }
        let val = train.subset(held_out);
        let m = model::fit(&fit_set, cfg)?;
        let pred = m.predict_batch(val.features())?;
        let wrong = pred.iter().zip(val.labels()).filter(|(p, t)| p != t).count();
        errors.push(wrong as f64 / val.len() as f64);
    }
    Ok(errors)
}

/// Evaluate every combination of `grid` by stratified k-fold CV on `train`
/// and return the one with the lowest mean error, earliest on ties.
///
/// Combinations that resolve to the same effective hyperparameters (for
/// example any `gamma` under a linear kernel) are trained once and share
/// their score. Randomized fits use a stream keyed by the index of the first
/// combination with those effective hyperparameters.
pub fn grid_search(
    grid: &GridSpec,
    train: &Dataset,
    k_folds: usize,
    fold_sampler: Option<&SamplerConfig>,
) -> Result<TuneResult> {
    grid.validate()?;
    let configs = grid.configs();
    let folds = stratified_kfold(train.labels(), k_folds, grid.seed)?;

    let mut unique: Vec<(usize, Hyperparameters)> = Vec::new();
    let mut slot = Vec::with_capacity(configs.len());
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for (i, hp) in configs.iter().enumerate() {
        let (_, resolved) = model::resolve(grid.model_family, hp, train.n_features()).map_err(|e| Error::Tuning {
            config: describe(hp),
            source: Box::new(e),
        })?;
        let key = describe(&resolved);
        let s = *seen.entry(key).or_insert_with(|| {
            unique.push((i, hp.clone()));
            unique.len() - 1
        });
        slot.push(s);
    }

    let scores = par::map_indexed(unique.len(), |u| {
        let (first, hp) = &unique[u];
        let cfg = TrainConfig {
            model_family: grid.model_family,
            hyperparameters: hp.clone(),
            seed: rng::derive_seed(grid.seed, &[*first as u64]),
        };
        cross_validate(&cfg, train, &folds, fold_sampler).map_err(|e| Error::Tuning {
            config: describe(hp),
            source: Box::new(e),
        })
    });
    let scores = scores.into_iter().collect::<Result<Vec<_>>>()?;

    let table: Vec<ConfigScore> = configs
        .into_iter()
        .zip(slot)
        .map(|(config, s)| {
            let fold_errors = scores[s].clone();
            ConfigScore {
                config,
                error: fold_errors.iter().sum::<f64>() / fold_errors.len() as f64,
                fold_errors,
            }
        })
        .collect();
    let mut best = 0;
    for (i, row) in table.iter().enumerate() {
        if row.error < table[best].error {
            best = i;
        }
    }
    Ok(TuneResult {
        model_family: grid.model_family,
        best_config: table[best].config.clone(),
        best_error: table[best].error,
        k_folds,
        table,
    })
}
