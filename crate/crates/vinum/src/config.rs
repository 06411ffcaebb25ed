//! Experiment configuration files (JSON, snake_case keys).

use std::fmt;
use std::path::PathBuf;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use vinum_core::model::Hyperparameters;
use vinum_core::sampling::{SamplerConfig, SamplingMethod};
use vinum_core::tuning::{Axis, DEFAULT_K_FOLDS};
use vinum_core::{ModelFamily, ParamValue};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    /// No resampling; models keep their default hyperparameters.
    UnbalancedDefault,
    /// Class balancing plus grid search for every model without fixed hyperparameters.
    BalancedTuned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingOrder {
    /// Standardize and resample the whole dataset, then split. Synthetic
    /// rows built from test neighbours can reach the training side.
    BeforeSplit,
    /// Split first; resampling only ever sees training rows.
    #[default]
    TrainOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSettings {
    pub method: SamplingMethod,
    #[serde(default = "default_k_neighbors")]
    pub k_neighbors: usize,
}

fn default_k_neighbors() -> usize {
    SamplerConfig::DEFAULT_K
}

impl SamplerSettings {
    pub fn with_seed(self, seed: u64) -> SamplerConfig {
        SamplerConfig {
            method: self.method,
            k_neighbors: self.k_neighbors,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSettings {
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
}

fn default_test_fraction() -> f64 {
    vinum_core::preprocess::SplitSpec::DEFAULT_TEST_FRACTION
}

impl Default for SplitSettings {
    fn default() -> Self {
        SplitSettings {
            test_fraction: default_test_fraction(),
        }
    }
}

/// Grid axes written as a JSON object; key order is the axis order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GridAxes(pub Vec<Axis>);

impl Serialize for GridAxes {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for a in &self.0 {
            m.serialize_entry(&a.name, &a.values)?;
        }
        m.end()
    }
}

impl<'de> Deserialize<'de> for GridAxes {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct AxesVisitor;

        impl<'de> Visitor<'de> for AxesVisitor {
            type Value = GridAxes;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping hyperparameter names to value lists")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<GridAxes, A::Error> {
                let mut axes = Vec::new();
                while let Some((name, values)) = map.next_entry::<String, Vec<ParamValue>>()? {
                    axes.push(Axis { name, values });
                }
                Ok(GridAxes(axes))
            }
        }

        d.deserialize_map(AxesVisitor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub family: ModelFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyperparameters: Option<Hyperparameters>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridAxes>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ModelSpec {
    pub fn new(family: ModelFamily) -> Self {
        ModelSpec {
            family,
            hyperparameters: None,
            grid: None,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub input: PathBuf,
    pub protocol: Protocol,
    #[serde(default)]
    pub sampler: Option<SamplerSettings>,
    #[serde(default)]
    pub sampling_order: SamplingOrder,
    #[serde(default)]
    pub split: SplitSettings,
    /// Feature keep-list; defaults to the ten features most correlated with quality.
    #[serde(default)]
    pub features: Option<Vec<String>>,
    #[serde(default = "all_models")]
    pub models: Vec<ModelSpec>,
    #[serde(default = "default_k_folds")]
    pub k_folds: usize,
    #[serde(default = "default_repeats")]
    pub importance_repeats: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_dir: Option<PathBuf>,
    pub seed: u64,
}

fn all_models() -> Vec<ModelSpec> {
    ModelFamily::ALL.into_iter().map(ModelSpec::new).collect()
}

fn default_k_folds() -> usize {
    DEFAULT_K_FOLDS
}

fn default_repeats() -> usize {
    vinum_core::importance::DEFAULT_REPEATS
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::Config("`models` is empty".into()));
        }
        if let Some(m) = self.models.iter().find(|m| m.hyperparameters.is_some() && m.grid.is_some()) {
            return Err(Error::Config(format!(
                "model {} sets both `hyperparameters` and `grid`",
                m.family
            )));
        }
        if self.protocol == Protocol::UnbalancedDefault && self.sampler.is_some() {
            return Err(Error::Config("the unbalanced-default protocol does not resample; drop `sampler`".into()));
        }
        if self.sampling_order == SamplingOrder::BeforeSplit && self.protocol == Protocol::UnbalancedDefault {
            return Err(Error::Config("`sampling_order` before-split needs a resampling protocol".into()));
        }
        if !(self.split.test_fraction > 0.0 && self.split.test_fraction < 1.0) {
            return Err(Error::Config("`split.test_fraction` must lie strictly between 0 and 1".into()));
        }
        if self.importance_repeats == 0 {
            return Err(Error::Config("`importance_repeats` must be at least 1".into()));
        }
        Ok(())
    }

    /// The sampler in effect: the configured one, or SMOTE under balanced-tuned.
    pub fn effective_sampler(&self) -> Option<SamplerSettings> {
        match self.protocol {
            Protocol::UnbalancedDefault => None,
            Protocol::BalancedTuned => Some(self.sampler.unwrap_or(SamplerSettings {
                method: SamplingMethod::Smote,
                k_neighbors: SamplerConfig::DEFAULT_K,
            })),
        }
    }
}
