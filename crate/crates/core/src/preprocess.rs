//! Z-score standardization, stratified train/test splitting and column selection.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, QualityClass};
use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Matrix;
use crate::rng;

/// Per-feature mean and sample standard deviation from one partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub feature_names: Vec<String>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

pub fn fit_standardizer(ds: &Dataset) -> Result<Standardizer> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (means, sds) = (0..ds.n_features())
        .map(|j| {
            let col = ds.features().column(j);
            (math::mean(&col), math::sample_sd(&col))
        })
        .unzip();
    Ok(Standardizer {
        feature_names: ds.feature_names().to_vec(),
        means,
        sds,
    })
}

impl Standardizer {
    /// Transform a bare matrix whose columns follow `feature_names`.
    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.means.len() {
            return Err(Error::DimensionMismatch {
                expected: self.means.len(),
                found: x.cols(),
            });
        }
        let mut out = x.clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                let sd = self.sds[j];
                *v = if sd > 0.0 { (*v - self.means[j]) / sd } else { 0.0 };
            }
        }
        Ok(out)
    }

    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        if ds.feature_names() != self.feature_names.as_slice() {
            return Err(Error::FeatureMismatch);
        }
        ds.with_features(self.transform(ds.features())?)
    }
}

pub fn apply_standardizer(st: &Standardizer, ds: &Dataset) -> Result<Dataset> {
    st.apply(ds)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub const DEFAULT_TEST_FRACTION: f64 = 0.2;
}

/// Row indices of each side of a stratified split, both ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Per class, `round(count * test_fraction)` rows go to the test side.
/// Classes with no rows are skipped.
pub fn stratified_split_indices(labels: &[QualityClass], spec: &SplitSpec) -> Result<SplitIndices> {
    let f = spec.test_fraction;
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::param("test_fraction", "must lie strictly between 0 and 1"));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in QualityClass::ALL {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        let count = members.len();
        if count == 0 {
            continue;
        }
        let n_test = math::round(count as f64 * f) as usize;
        if count < 2 || n_test == 0 || n_test >= count {
            return Err(Error::ClassTooSmall {
                class: class.index(),
                count,
                needed: 2,
            });
        }
        members.shuffle(&mut rng::stream(spec.seed, &[class.index() as u64]));
        test.extend_from_slice(&members[..n_test]);
        train.extend_from_slice(&members[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test })
}

pub fn stratified_split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let idx = stratified_split_indices(ds.labels(), spec)?;
    Ok((ds.subset(&idx.train), ds.subset(&idx.test)))
}

/// Restrict to the named columns, in the order given.
pub fn select_features<S: AsRef<str>>(ds: &Dataset, keep: &[S]) -> Result<Dataset> {
    let idx = keep
        .iter()
        .map(|k| {
            let k = k.as_ref();
            ds.feature_names()
                .iter()
                .position(|n| n == k)
                .ok_or_else(|| Error::UnknownFeature(k.into()))
        })
        .collect::<Result<Vec<_>>>()?;
    let names = idx.iter().map(|&j| ds.feature_names()[j].clone()).collect();
    Dataset::new(names, ds.features().select_cols(&idx), ds.labels().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;
    use QualityClass::*;

    fn one_col(xs: &[f64]) -> Dataset {
        Dataset::new(vec!["x".into()], Matrix::new(xs.len(), 1, xs.to_vec()).unwrap(), vec![Normal; xs.len()]).unwrap()
    }

    #[test]
    fn fit_and_apply_small_column() {
        let ds = one_col(&[1.0, 2.0, 3.0]);
        let st = fit_standardizer(&ds).unwrap();
        assert_eq!((st.means[0], st.sds[0]), (2.0, 1.0));
        let z = st.apply(&ds).unwrap();
        assert_eq!(z.features().column(0), [-1.0, 0.0, 1.0]);
        // re-standardizing a standardized column is a no-op on the statistics
        let again = fit_standardizer(&z).unwrap();
        assert!(again.means[0].abs() < 1e-12 && (again.sds[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let ds = one_col(&[4.0, 4.0, 4.0]);
        let st = fit_standardizer(&ds).unwrap();
        assert_eq!((st.means[0], st.sds[0]), (4.0, 0.0));
        assert_eq!(st.apply(&ds).unwrap().features().column(0), [0.0; 3]);
    }

    #[test]
    fn test_rows_use_training_statistics() {
        let st = fit_standardizer(&one_col(&[1.0, 2.0, 3.0])).unwrap();
        let test = st.apply(&one_col(&[10.0, 12.0])).unwrap();
        assert_eq!(test.features().column(0), [8.0, 10.0]);
    }

    #[test]
    fn apply_rejects_other_columns() {
        let st = fit_standardizer(&one_col(&[1.0, 2.0])).unwrap();
        let other = Dataset::new(vec!["y".into()], Matrix::from_rows(&[[1.0]]).unwrap(), vec![Bad]).unwrap();
        assert_eq!(st.apply(&other), Err(Error::FeatureMismatch));
        assert!(fit_standardizer(&one_col(&[])).is_err());
    }

    #[test]
    fn split_counts_follow_fraction() {
        let mut labels = vec![Bad; 10];
        labels.extend(vec![Good; 90]);
        let spec = SplitSpec { test_fraction: 0.2, seed: 3 };
        let s = stratified_split_indices(&labels, &spec).unwrap();
        let test_bad = s.test.iter().filter(|&&i| labels[i] == Bad).count();
        assert_eq!((test_bad, s.test.len() - test_bad), (2, 18));
        assert_eq!(s, stratified_split_indices(&labels, &spec).unwrap());
        let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn split_rejects_bad_fraction_and_tiny_class() {
        let labels = vec![Bad, Bad, Normal, Normal, Normal];
        for f in [0.0, 1.0, -0.5] {
            let spec = SplitSpec { test_fraction: f, seed: 0 };
            assert!(matches!(
                stratified_split_indices(&labels, &spec),
                Err(Error::InvalidParameter { .. })
            ));
        }
        let spec = SplitSpec { test_fraction: 0.1, seed: 0 };
        assert!(matches!(
            stratified_split_indices(&labels, &spec),
            Err(Error::ClassTooSmall { .. })
        ));
    }

    #[test]
    fn select_features_orders_and_validates() {
        let ds = Dataset::new(
            vec!["a".into(), "b".into(), "c".into()],
            Matrix::from_rows(&[[1.0, 2.0, 3.0]]).unwrap(),
            vec![Bad],
        )
        .unwrap();
        let s = select_features(&ds, &["c", "a"]).unwrap();
        assert_eq!(s.features().row(0), &[3.0, 1.0]);
        assert_eq!(select_features(&s, &["c", "a"]).unwrap(), s);
        assert_eq!(select_features(&ds, &["a", "b", "c"]).unwrap(), ds);
        assert_eq!(
            select_features(&ds, &["sugar level"]),
            Err(Error::UnknownFeature("sugar level".to_string()))
        );
    }
}
