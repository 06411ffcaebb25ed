//! Raw wine records, the encoded three-class dataset, and their summaries.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Matrix;

/// Name of the target column in the raw file.
pub const QUALITY_COLUMN: &str = "quality";

/// Three-way wine quality label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum QualityClass {
    Bad = 0,
    Normal = 1,
    Good = 2,
}

impl QualityClass {
    pub const COUNT: usize = 3;
    pub const ALL: [QualityClass; 3] = [QualityClass::Bad, QualityClass::Normal, QualityClass::Good];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Bucket an integer score: below 5 is bad, 5 and 6 normal, 7 to 10 good.
    pub fn from_score(score: f64) -> Result<Self> {
        if !math::is_integer(score) || !(0.0..=10.0).contains(&score) {
            return Err(Error::InvalidQuality(score));
        }
        Ok(match score as u8 {
            0..=4 => QualityClass::Bad,
            5 | 6 => QualityClass::Normal,
            _ => QualityClass::Good,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            QualityClass::Bad => "bad",
            QualityClass::Normal => "normal",
            QualityClass::Good => "good",
        }
    }
}

impl fmt::Display for QualityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl From<QualityClass> for u8 {
    fn from(c: QualityClass) -> u8 {
        c as u8
    }
}

impl TryFrom<u8> for QualityClass {
    type Error = String;

    fn try_from(v: u8) -> core::result::Result<Self, String> {
        QualityClass::from_index(v as usize).ok_or_else(|| alloc::format!("invalid class {v}"))
    }
}

/// Per-class row counts, indexed by [`QualityClass::index`].
pub fn class_counts(labels: &[QualityClass]) -> [usize; QualityClass::COUNT] {
    let mut counts = [0; QualityClass::COUNT];
    for l in labels {
        counts[l.index()] += 1;
    }
    counts
}

/// Rows exactly as read from the file, target column included.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    column_names: Vec<String>,
    values: Matrix,
}

impl RawDataset {
    pub fn new(column_names: Vec<String>, values: Matrix) -> Result<Self> {
        if column_names.len() != values.cols() {
            return Err(Error::DimensionMismatch {
                expected: column_names.len(),
                found: values.cols(),
            });
        }
        if let Some((row, col)) = values.first_non_finite() {
            return Err(Error::NonFinite { row, col });
        }
        Ok(RawDataset {
            column_names,
            values,
        })
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.column_names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::MissingColumn(name.into()))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        Ok(self.values.column(self.column_index(name)?))
    }
}

/// Drop exact-duplicate rows, keeping each first occurrence in file order.
pub fn deduplicate(raw: &RawDataset) -> RawDataset {
    let mut seen = BTreeSet::new();
    let keep: Vec<usize> = (0..raw.len())
        .filter(|&i| {
            // +0.0 and -0.0 compare equal, so they must share a key
            let key: Vec<u64> = raw
                .values
                .row(i)
                .iter()
                .map(|v| if *v == 0.0 { 0 } else { v.to_bits() })
                .collect();
            seen.insert(key)
        })
        .collect();
    RawDataset {
        column_names: raw.column_names.clone(),
        values: raw.values.select_rows(&keep),
    }
}

/// Descriptive statistics for one column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub median: f64,
}

impl StatsRow {
    pub fn of(name: &str, xs: &[f64]) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(StatsRow {
            name: name.into(),
            mean: math::mean(xs),
            sd: math::sample_sd(xs),
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            median: math::median(xs),
        })
    }
}

pub fn summarize(raw: &RawDataset) -> Result<Vec<StatsRow>> {
    if raw.is_empty() {
        return Err(Error::EmptyDataset);
    }
    raw.column_names
        .iter()
        .enumerate()
        .map(|(j, name)| StatsRow::of(name, &raw.values.column(j)))
        .collect()
}

/// Feature matrix with encoded quality classes.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    features: Matrix,
    labels: Vec<QualityClass>,
}

impl Dataset {
    pub fn new(feature_names: Vec<String>, features: Matrix, labels: Vec<QualityClass>) -> Result<Self> {
        if feature_names.len() != features.cols() {
            return Err(Error::DimensionMismatch {
                expected: feature_names.len(),
                found: features.cols(),
            });
        }
        if labels.len() != features.rows() {
            return Err(Error::LengthMismatch(features.rows(), labels.len()));
        }
        if let Some((row, col)) = features.first_non_finite() {
            return Err(Error::NonFinite { row, col });
        }
        Ok(Dataset {
            feature_names,
            features,
            labels,
        })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[QualityClass] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn class_counts(&self) -> [usize; QualityClass::COUNT] {
        class_counts(&self.labels)
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            features: self.features.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Same names and labels over a replacement matrix of identical shape.
    pub fn with_features(&self, features: Matrix) -> Result<Dataset> {
        if features.rows() != self.features.rows() || features.cols() != self.features.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.features.rows() * self.features.cols(),
                found: features.rows() * features.cols(),
            });
        }
        Dataset::new(self.feature_names.clone(), features, self.labels.clone())
    }

    /// Append rows; used by the samplers.
    pub fn extend_rows(&mut self, rows: &Matrix, labels: &[QualityClass]) -> Result<()> {
        for (r, &l) in rows.iter_rows().zip(labels) {
            self.features.push_row(r)?;
            self.labels.push(l);
        }
        Ok(())
    }
}

/// Split off the quality column and bucket it into three classes.
pub fn encode_labels(raw: &RawDataset) -> Result<Dataset> {
    let q = raw.column_index(QUALITY_COLUMN)?;
    let labels = raw
        .values
        .column(q)
        .into_iter()
        .map(QualityClass::from_score)
        .collect::<Result<Vec<_>>>()?;
    let keep: Vec<usize> = (0..raw.column_names.len()).filter(|&j| j != q).collect();
    let names = keep.iter().map(|&j| raw.column_names[j].clone()).collect();
    Dataset::new(names, raw.values.select_cols(&keep), labels)
}

/// Row counts per encoded class and per raw integer score 0..=10.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDistribution {
    pub by_class: [usize; QualityClass::COUNT],
    pub by_score: [usize; 11],
}

impl ClassDistribution {
    pub fn total(&self) -> usize {
        self.by_class.iter().sum()
    }
}

pub fn class_distribution(raw: &RawDataset) -> Result<ClassDistribution> {
    let mut dist = ClassDistribution {
        by_class: [0; 3],
        by_score: [0; 11],
    };
    for s in raw.column(QUALITY_COLUMN)? {
        let class = QualityClass::from_score(s)?;
        dist.by_class[class.index()] += 1;
        dist.by_score[s as usize] += 1;
    }
    Ok(dist)
}
