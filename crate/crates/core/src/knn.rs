//! k-nearest-neighbour classification.
//!
//! Neighbours are the `k` training rows closest in Euclidean distance, equal
//! distances ordered by training index. The class with the most neighbours
//! wins; tied classes are separated by their mean distance to the query, and
//! anything still tied goes to the lower class.

use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::data::QualityClass;
use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Matrix;

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(math::sqrt(math::squared_distance(a, b)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub x: Matrix,
    pub labels: Vec<QualityClass>,
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

pub fn fit_knn(x: &Matrix, labels: &[QualityClass], k: usize) -> Result<KnnModel> {
    if x.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if x.rows() != labels.len() {
        return Err(Error::LengthMismatch(x.rows(), labels.len()));
    }
    if k == 0 || k > x.rows() {
        return Err(Error::param("k", alloc::format!("must lie in 1..={}", x.rows())));
    }
    Ok(KnnModel {
        x: x.clone(),
        labels: labels.to_vec(),
        k,
    })
}

impl KnnModel {
    pub fn n_features(&self) -> usize {
        self.x.cols()
    }

    /// The `k` nearest training rows, closest first.
    pub fn neighbors(&self, q: &[f64]) -> Result<Vec<Neighbor>> {
        if q.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                found: q.len(),
            });
        }
        let mut d: Vec<(f64, usize)> = self
            .x
            .iter_rows()
            .enumerate()
            .map(|(i, r)| (math::squared_distance(r, q), i))
            .collect();
        let order = |a: &(f64, usize), b: &(f64, usize)| match a.0.total_cmp(&b.0) {
            Ordering::Equal => a.1.cmp(&b.1),
            o => o,
        };
        if self.k < d.len() {
            d.select_nth_unstable_by(self.k, order);
            d.truncate(self.k);
        }
        d.sort_by(order);
        Ok(d
            .into_iter()
            .map(|(sq, index)| Neighbor {
                index,
                distance: math::sqrt(sq),
            })
            .collect())
    }

    pub fn predict(&self, q: &[f64]) -> Result<QualityClass> {
        let nb = self.neighbors(q)?;
        Ok(vote(nb.iter().map(|n| (self.labels[n.index], n.distance))))
    }
}

/// Majority vote with the mean-distance tie rule.
pub fn vote(neighbors: impl IntoIterator<Item = (QualityClass, f64)>) -> QualityClass {
    let mut count = [0usize; 3];
    let mut dist = [0.0f64; 3];
    for (c, d) in neighbors {
        count[c.index()] += 1;
        dist[c.index()] += d;
    }
    let top = count.iter().copied().max().unwrap_or(0);
    let mut best: Option<(usize, f64)> = None;
    for c in 0..3 {
        if count[c] != top || top == 0 {
            continue;
        }
        let mean = dist[c] / count[c] as f64;
        if best.map_or(true, |(_, m)| mean < m) {
            best = Some((c, mean));
        }
    }
    QualityClass::ALL[best.map_or(0, |(c, _)| c)]
}

pub fn predict_knn(m: &KnnModel, q: &[f64]) -> Result<QualityClass> {
    m.predict(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use QualityClass::*;

    #[test]
    fn distances() {
        assert_eq!(euclidean_distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(euclidean_distance(&[1.5, -2.0], &[1.5, -2.0]).unwrap(), 0.0);
        let d = euclidean_distance(&[0.0; 3], &[1.0; 3]).unwrap();
        assert!((d - 1.732_050_807_568_877_2).abs() < 1e-15);
        assert!(euclidean_distance(&[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn seven_neighbours_two_three_two() {
        let votes = [(Bad, 0.5), (Bad, 0.6), (Normal, 0.9), (Normal, 1.0), (Normal, 1.1), (Good, 0.4), (Good, 0.7)];
        assert_eq!(vote(votes), Normal);
    }

    #[test]
    fn three_way_tie_goes_to_nearest() {
        assert_eq!(vote([(Bad, 0.9), (Normal, 0.8), (Good, 0.3)]), Good);
        // equal mean distance too: lowest class
        assert_eq!(vote([(Bad, 0.5), (Good, 0.5)]), Bad);
    }

    #[test]
    fn k_one_returns_nearest_label() {
        let x = Matrix::from_rows(&[[0.0], [5.0], [10.0]]).unwrap();
        let m = fit_knn(&x, &[Bad, Normal, Good], 1).unwrap();
        assert_eq!(m.predict(&[6.0]).unwrap(), Normal);
        assert_eq!(m.predict(&[9.0]).unwrap(), Good);
        assert!(m.predict(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn distance_ties_prefer_lower_index() {
        let x = Matrix::from_rows(&[[1.0], [-1.0], [2.0]]).unwrap();
        let m = fit_knn(&x, &[Good, Bad, Normal], 1).unwrap();
        assert_eq!(m.neighbors(&[0.0]).unwrap()[0].index, 0);
        assert_eq!(m.predict(&[0.0]).unwrap(), Good);
    }

    #[test]
    fn k_bounds() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        assert!(fit_knn(&x, &[Bad, Good], 0).is_err());
        assert!(fit_knn(&x, &[Bad, Good], 3).is_err());
        let single = fit_knn(&x, &[Normal, Normal], 2).unwrap();
        assert_eq!(single.predict(&[100.0]).unwrap(), Normal);
    }
}
