//! Trained models on disk: JSON with the preprocessing needed to score raw rows.

use std::path::Path;

use serde::{Deserialize, Serialize};
use vinum_core::model::{Hyperparameters, ModelPayload};
use vinum_core::preprocess::Standardizer;
use vinum_core::{Dataset, Matrix, ModelFamily, RawDataset, TrainedModel};

use crate::dataio;
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub family: ModelFamily,
    pub feature_names: Vec<String>,
    pub hyperparameters: Hyperparameters,
    pub payload: ModelPayload,
    /// Applied to raw feature values in order before prediction.
    pub standardizers: Vec<Standardizer>,
}

impl ModelFile {
    pub fn new(model: &TrainedModel, standardizers: Vec<Standardizer>) -> Self {
        ModelFile {
            format_version: FORMAT_VERSION,
            family: model.family,
            feature_names: model.feature_names.clone(),
            hyperparameters: model.hyperparameters.clone(),
            payload: model.payload.clone(),
            standardizers,
        }
    }

    pub fn model(&self) -> TrainedModel {
        TrainedModel {
            family: self.family,
            feature_names: self.feature_names.clone(),
            hyperparameters: self.hyperparameters.clone(),
            payload: self.payload.clone(),
            warnings: Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::ModelFile(format!(
                "format_version {} is not supported (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        let tag_matches = matches!(
            (self.family, &self.payload),
            (ModelFamily::Svm, ModelPayload::Svm(_))
                | (ModelFamily::Dtree, ModelPayload::Dtree(_))
                | (ModelFamily::Rforest, ModelPayload::Rforest(_))
                | (ModelFamily::Gboost, ModelPayload::Gboost(_))
                | (ModelFamily::Knn, ModelPayload::Knn(_))
        );
        if !tag_matches {
            return Err(Error::ModelFile(format!("payload does not hold a {} model", self.family)));
        }
        if self.standardizers.iter().any(|s| s.feature_names != self.feature_names) {
            return Err(Error::ModelFile("standardizer features differ from the model's".into()));
        }
        self.model().validate()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: ModelFile = serde_json::from_str(text)?;
        f.validate()?;
        Ok(f)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&dataio::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        dataio::write_string(path, &(self.to_json()? + "\n"))
    }

    /// Model-ready features from a raw table: select the model's columns in
    /// its order, then standardize.
    pub fn prepare(&self, raw: &RawDataset) -> Result<Matrix> {
        let idx = self
            .feature_names
            .iter()
            .map(|n| raw.column_index(n))
            .collect::<Result<Vec<_>, _>>()?;
        let mut x = raw.values().select_cols(&idx);
        for s in &self.standardizers {
            x = s.transform(&x)?;
        }
        Ok(x)
    }

    /// Like [`prepare`](Self::prepare), keeping labels from the quality column.
    pub fn prepare_labeled(&self, raw: &RawDataset) -> Result<Dataset> {
        let labels = vinum_core::data::encode_labels(raw)?.labels().to_vec();
        Ok(Dataset::new(self.feature_names.clone(), self.prepare(raw)?, labels)?)
    }
}
