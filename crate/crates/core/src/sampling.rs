//! Class balancing: random over/undersampling and SMOTE.
//!
//! Every sampler equalizes the three classes, either up to the largest class
//! or down to the smallest. Randomness is drawn per class from
//! `rng::stream(seed, [class])`, so output depends only on (input, seed).

use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, QualityClass};
use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Matrix;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMethod {
    Oversample,
    Undersample,
    Smote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub method: SamplingMethod,
    #[serde(default = "SamplerConfig::default_k")]
    pub k_neighbors: usize,
    pub seed: u64,
}

impl SamplerConfig {
    pub const DEFAULT_K: usize = 5;

    fn default_k() -> usize {
        Self::DEFAULT_K
    }

    pub fn smote(seed: u64) -> Self {
        SamplerConfig {
            method: SamplingMethod::Smote,
            k_neighbors: Self::DEFAULT_K,
            seed,
        }
    }
}

pub fn resample(train: &Dataset, cfg: &SamplerConfig) -> Result<Dataset> {
    match cfg.method {
        SamplingMethod::Oversample => random_oversample(train, cfg.seed),
        SamplingMethod::Undersample => random_undersample(train, cfg.seed),
        SamplingMethod::Smote => smote(train, cfg),
    }
}

fn members_by_class(train: &Dataset) -> Result<[Vec<usize>; QualityClass::COUNT]> {
    let mut m: [Vec<usize>; 3] = Default::default();
    for (i, l) in train.labels().iter().enumerate() {
        m[l.index()].push(i);
    }
    if let Some(class) = m.iter().position(Vec::is_empty) {
        return Err(Error::EmptyClass { class });
    }
    Ok(m)
}

/// Append copies drawn with replacement until every class matches the largest.
pub fn random_oversample(train: &Dataset, seed: u64) -> Result<Dataset> {
    let members = members_by_class(train)?;
    let target = members.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = train.clone();
    for (c, rows) in members.iter().enumerate() {
        let mut rng = rng::stream(seed, &[c as u64]);
        let picks: Vec<usize> = (rows.len()..target)
            .map(|_| rows[rng.gen_range(0..rows.len())])
            .collect();
        let labels = alloc::vec![QualityClass::ALL[c]; picks.len()];
        out.extend_rows(&train.features().select_rows(&picks), &labels)?;
    }
    Ok(out)
}

/// Keep a random subset of each class the size of the smallest class.
/// Surviving rows stay in their original order.
pub fn random_undersample(train: &Dataset, seed: u64) -> Result<Dataset> {
    let members = members_by_class(train)?;
    let target = members.iter().map(Vec::len).min().unwrap_or(0);
    let mut keep = Vec::with_capacity(target * QualityClass::COUNT);
    for (c, rows) in members.iter().enumerate() {
        let mut rng = rng::stream(seed, &[c as u64]);
        keep.extend(rand::seq::index::sample(&mut rng, rows.len(), target).into_iter().map(|p| rows[p]));
    }
    keep.sort_unstable();
    Ok(train.subset(&keep))
}

/// Where one synthetic SMOTE row came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticOrigin {
    pub source: usize,
    pub neighbor: usize,
    pub t: f64,
}

/// The `k` nearest other members of `members` for each member, as row
/// indices. Distance ties go to the lower row index.
pub fn class_neighbors(x: &Matrix, members: &[usize], k: usize) -> Vec<Vec<usize>> {
    members
        .iter()
        .map(|&i| {
            let mut d: Vec<(f64, usize)> = members
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| (math::squared_distance(x.row(i), x.row(j)), j))
                .collect();
            let by_dist = |a: &(f64, usize), b: &(f64, usize)| match a.0.total_cmp(&b.0) {
                Ordering::Equal => a.1.cmp(&b.1),
                o => o,
            };
            if k < d.len() {
                d.select_nth_unstable_by(k, by_dist);
                d.truncate(k);
            }
            d.sort_by(by_dist);
            d.into_iter().map(|(_, j)| j).collect()
        })
        .collect()
}

pub fn smote(train: &Dataset, cfg: &SamplerConfig) -> Result<Dataset> {
    smote_with_origins(train, cfg).map(|(ds, _)| ds)
}

/// SMOTE that also reports the parent pair of every appended row.
///
/// For each missing row of a class: pick a member `p` uniformly, one of its
/// `k` nearest same-class neighbours `q` uniformly, and emit
/// `p + t (q - p)` with `t` uniform in (0, 1).
pub fn smote_with_origins(train: &Dataset, cfg: &SamplerConfig) -> Result<(Dataset, Vec<SyntheticOrigin>)> {
    let k = cfg.k_neighbors;
    if k < 1 {
        return Err(Error::param("k_neighbors", "must be at least 1"));
    }
    let members = members_by_class(train)?;
    let target = members.iter().map(Vec::len).max().unwrap_or(0);
    for (class, rows) in members.iter().enumerate() {
        if rows.len() < target && rows.len() <= k {
            return Err(Error::ClassTooSmall {
                class,
                count: rows.len(),
                needed: k + 1,
            });
        }
    }

    let x = train.features();
    let mut out = train.clone();
    let mut origins = Vec::new();
    for (c, rows) in members.iter().enumerate() {
        let need = target - rows.len();
        if need == 0 {
            continue;
        }
        let neighbors = class_neighbors(x, rows, k);
        let mut rng = rng::stream(cfg.seed, &[c as u64]);
        let mut synth = Matrix::with_cols(x.cols());
        let mut row = alloc::vec![0.0; x.cols()];
        for _ in 0..need {
            let p = rng.gen_range(0..rows.len());
            let q = neighbors[p][rng.gen_range(0..k)];
            let t = loop {
                let t: f64 = rng.gen();
                if t > 0.0 {
                    break t;
                }
            };
            let (a, b) = (x.row(rows[p]), x.row(q));
            for j in 0..row.len() {
                let (lo, hi) = if a[j] <= b[j] { (a[j], b[j]) } else { (b[j], a[j]) };
                row[j] = (a[j] + t * (b[j] - a[j])).clamp(lo, hi);
            }
            synth.push_row(&row)?;
            origins.push(SyntheticOrigin {
                source: rows[p],
                neighbor: q,
                t,
            });
        }
        out.extend_rows(&synth, &alloc::vec![QualityClass::ALL[c]; need])?;
    }
    Ok((out, origins))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use QualityClass::*;

    fn toy(counts: [usize; 3]) -> Dataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (c, &n) in counts.iter().enumerate() {
            for i in 0..n {
                rows.push([c as f64 * 10.0 + i as f64, i as f64 * 0.5]);
                labels.push(QualityClass::ALL[c]);
            }
        }
        Dataset::new(vec!["a".into(), "b".into()], Matrix::from_rows(&rows).unwrap(), labels).unwrap()
    }

    fn is_row_of(ds: &Dataset, row: &[f64], class: QualityClass) -> bool {
        (0..ds.len()).any(|i| ds.labels()[i] == class && ds.features().row(i) == row)
    }

    #[test]
    fn oversample_equalizes_with_copies() {
        let ds = toy([2, 5, 3]);
        let out = random_oversample(&ds, 1).unwrap();
        assert_eq!(out.class_counts(), [5, 5, 5]);
        for i in ds.len()..out.len() {
            assert!(is_row_of(&ds, out.features().row(i), out.labels()[i]));
        }
        let balanced = toy([3, 3, 3]);
        assert_eq!(random_oversample(&balanced, 1).unwrap(), balanced);
        assert_eq!(random_oversample(&toy([0, 2, 2]), 1), Err(Error::EmptyClass { class: 0 }));
    }

    #[test]
    fn undersample_keeps_original_rows() {
        let ds = toy([2, 5, 3]);
        let out = random_undersample(&ds, 9).unwrap();
        assert_eq!(out.class_counts(), [2, 2, 2]);
        for i in 0..out.len() {
            assert!(is_row_of(&ds, out.features().row(i), out.labels()[i]));
        }
        assert_eq!(out, random_undersample(&ds, 9).unwrap());
        let balanced = toy([3, 3, 3]);
        assert_eq!(random_undersample(&balanced, 1).unwrap(), balanced);
    }

    #[test]
    fn smote_single_pair_interpolates() {
        // class 0 = {(0,0), (1,1)}, one synthetic row needed
        let ds = Dataset::new(
            vec!["a".into(), "b".into()],
            Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0], [5.0, 5.0], [6.0, 5.0], [7.0, 5.0], [8.0, 8.0], [9.0, 8.0], [9.5, 8.0]])
                .unwrap(),
            vec![Bad, Bad, Normal, Normal, Normal, Good, Good, Good],
        )
        .unwrap();
        let cfg = SamplerConfig { method: SamplingMethod::Smote, k_neighbors: 1, seed: 4 };
        let (out, origins) = smote_with_origins(&ds, &cfg).unwrap();
        assert_eq!(out.class_counts(), [3, 3, 3]);
        assert_eq!(origins.len(), 1);
        let s = out.features().row(8);
        assert_eq!(s[0], s[1]);
        assert!(s[0] > 0.0 && s[0] < 1.0);
        assert_eq!(out.labels()[8], Bad);
    }

    #[test]
    fn smote_rejects_small_class_and_zero_k() {
        let ds = toy([10, 20, 20]);
        let cfg = SamplerConfig { method: SamplingMethod::Smote, k_neighbors: 12, seed: 0 };
        assert_eq!(smote(&ds, &cfg), Err(Error::ClassTooSmall { class: 0, count: 10, needed: 13 }));
        let zero = SamplerConfig { k_neighbors: 0, ..cfg };
        assert!(matches!(smote(&ds, &zero), Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn smote_scales_to_wine_counts() {
        let ds = toy([10, 400, 577]);
        let out = smote(&ds, &SamplerConfig::smote(11)).unwrap();
        assert_eq!(out.class_counts(), [577, 577, 577]);
        assert_eq!(out.subset(&(0..ds.len()).collect::<Vec<_>>()), ds);
    }

    #[test]
    fn neighbors_break_distance_ties_by_index() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [-1.0], [2.0]]).unwrap();
        let nb = class_neighbors(&x, &[0, 1, 2, 3], 2);
        assert_eq!(nb[0], [1, 2]);
        assert_eq!(nb[3], [1, 0]);
    }
}
