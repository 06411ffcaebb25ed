use proptest::prelude::*;
use vinum_core::knn::{fit_knn, vote};
use vinum_core::sampling::{random_oversample, random_undersample, smote, smote_with_origins, SamplerConfig};
use vinum_core::{Dataset, Matrix, QualityClass};

/// Sort everything, count the first k, break ties the documented way.
fn full_sort_knn(x: &Matrix, labels: &[QualityClass], k: usize, q: &[f64]) -> QualityClass {
    let mut d: Vec<(f64, usize)> = x
        .iter_rows()
        .enumerate()
        .map(|(i, r)| (r.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(), i))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut count = [0usize; 3];
    let mut total = [0.0; 3];
    for &(dist, i) in &d[..k] {
        count[labels[i].index()] += 1;
        total[labels[i].index()] += dist;
    }
    let top = *count.iter().max().unwrap();
    let winners: Vec<usize> = (0..3).filter(|&c| count[c] == top).collect();
    let best = winners
        .iter()
        .copied()
        .min_by(|&a, &b| (total[a] / count[a] as f64).total_cmp(&(total[b] / count[b] as f64)).then(a.cmp(&b)))
        .unwrap();
    QualityClass::from_index(best).unwrap()
}

fn dataset(rows: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Dataset> {
    rows.prop_flat_map(|n| {
        (
            prop::collection::vec(prop::collection::vec((-20i32..20).prop_map(|v| v as f64 / 4.0), 2), n),
            prop::collection::vec(0usize..3, n),
        )
    })
    .prop_map(|(rows, labels)| {
        Dataset::new(
            vec!["a".into(), "b".into()],
            Matrix::from_rows(&rows).unwrap(),
            labels.into_iter().map(|l| QualityClass::from_index(l).unwrap()).collect(),
        )
        .unwrap()
    })
}

/// Every class present with at least `min` rows.
fn populated(min: usize) -> impl Strategy<Value = Dataset> {
    dataset(3 * min..=60).prop_filter("each class needs rows", move |ds| ds.class_counts().iter().all(|&c| c >= min))
}

fn on_segment(s: &[f64], a: &[f64], b: &[f64]) -> bool {
    // s = a + t (b - a) for one t in [0, 1], checked per coordinate.
    let mut t: Option<f64> = None;
    for j in 0..s.len() {
        let (lo, hi) = (a[j].min(b[j]), a[j].max(b[j]));
        if s[j] < lo || s[j] > hi {
            return false;
        }
        let span = b[j] - a[j];
        if span.abs() > 1e-12 {
            let tj = (s[j] - a[j]) / span;
            if let Some(t0) = t {
                if (t0 - tj).abs() > 1e-9 {
                    return false;
                }
            }
            t = Some(tj);
        } else if (s[j] - a[j]).abs() > 1e-12 {
            return false;
        }
    }
    true
}

#[test]
fn seven_neighbor_vote_example() {
    use QualityClass::*;
    let nb = [(Bad, 1.0), (Bad, 1.0), (Normal, 1.0), (Normal, 1.0), (Normal, 1.0), (Good, 1.0), (Good, 1.0)];
    assert_eq!(vote(nb), Normal);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn knn_matches_full_sort(train in dataset(1..=50), queries in prop::collection::vec(prop::array::uniform2(-6.0f64..6.0), 1..20), k in 1usize..12) {
        let k = k.min(train.len());
        let m = fit_knn(train.features(), train.labels(), k).unwrap();
        for q in &queries {
            prop_assert_eq!(m.predict(q).unwrap(), full_sort_knn(train.features(), train.labels(), k, q));
        }
        // Training rows as queries exercise exact-distance ties.
        for r in train.features().iter_rows() {
            prop_assert_eq!(m.predict(r).unwrap(), full_sort_knn(train.features(), train.labels(), k, r));
        }
    }

    #[test]
    fn smote_points_lie_on_same_class_segments(train in populated(4), seed in any::<u64>(), k in 1usize..4) {
        let cfg = SamplerConfig { k_neighbors: k, ..SamplerConfig::smote(seed) };
        let (out, origins) = smote_with_origins(&train, &cfg).unwrap();
        let n = train.len();
        let target = *train.class_counts().iter().max().unwrap();
        prop_assert_eq!(out.class_counts(), [target; 3]);
        prop_assert_eq!(out.len() - n, origins.len());
        for (s, o) in origins.iter().enumerate() {
            let row = out.features().row(n + s);
            let label = out.labels()[n + s];
            // Independent of the reported origin: some same-class pair spans it.
            let spanned = (0..n).any(|a| {
                train.labels()[a] == label
                    && (0..n).any(|b| b != a && train.labels()[b] == label && on_segment(row, train.features().row(a), train.features().row(b)))
            });
            prop_assert!(spanned, "synthetic row {s} is off every same-class segment");
            prop_assert!(on_segment(row, train.features().row(o.source), train.features().row(o.neighbor)));
            prop_assert!(o.t > 0.0 && o.t < 1.0);
            // The neighbour is among the k nearest by a full sort.
            let mut same: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != o.source && train.labels()[j] == label)
                .map(|j| {
                    let d: f64 = train.features().row(j).iter().zip(train.features().row(o.source)).map(|(a, b)| (a - b) * (a - b)).sum();
                    (d, j)
                })
                .collect();
            same.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            prop_assert!(same[..k].iter().any(|&(_, j)| j == o.neighbor));
        }
        prop_assert_eq!(smote(&train, &cfg).unwrap(), out);
    }

    #[test]
    fn random_samplers_equalize_counts(train in populated(1), seed in any::<u64>()) {
        let up = random_oversample(&train, seed).unwrap();
        let max = *train.class_counts().iter().max().unwrap();
        prop_assert_eq!(up.class_counts(), [max; 3]);
        let down = random_undersample(&train, seed).unwrap();
        let min = *train.class_counts().iter().min().unwrap();
        prop_assert_eq!(down.class_counts(), [min; 3]);
        prop_assert_eq!(random_oversample(&train, seed).unwrap(), up);
    }
}
