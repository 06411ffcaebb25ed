use proptest::prelude::*;
use vinum_core::svm::{eval_kernel, train_binary_svm, train_multiclass_svm, BinarySvm, Kernel, SvmParams};
use vinum_core::{Matrix, QualityClass};

/// Maximize the dual exactly on a tiny instance by enumerating which
/// alphas sit at 0, at C, or strictly between, and solving the equality
/// system for the free ones.
fn dual_oracle(x: &Matrix, y: &[f64], c: f64, kernel: &Kernel) -> f64 {
    let n = y.len();
    let q: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| y[i] * y[j] * eval_kernel(kernel, x.row(i), x.row(j)).unwrap()).collect())
        .collect();
    let objective = |a: &[f64]| {
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += a[i] * a[j] * q[i][j];
            }
        }
        a.iter().sum::<f64>() - 0.5 * quad
    };
    let mut best = f64::NEG_INFINITY;
    for code in 0..3usize.pow(n as u32) {
        let state: Vec<usize> = (0..n).map(|i| code / 3usize.pow(i as u32) % 3).collect();
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut a: Vec<f64> = state.iter().map(|&s| if s == 1 { c } else { 0.0 }).collect();
        if !free.is_empty() {
            // [Q_FF y_F; y_F^T 0] [a_F; b] = [1 - Q_FB a_B; -y_B^T a_B]
            let m = free.len() + 1;
            let mut sys = vec![vec![0.0; m + 1]; m];
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    sys[r][s] = q[i][j];
                }
                sys[r][m - 1] = y[i];
                sys[r][m] = 1.0 - (0..n).filter(|j| state[*j] == 1).map(|j| q[i][j] * c).sum::<f64>();
            }
            for (s, &j) in free.iter().enumerate() {
                sys[m - 1][s] = y[j];
            }
            sys[m - 1][m] = -(0..n).filter(|j| state[*j] == 1).map(|j| y[j] * c).sum::<f64>();
            let Some(sol) = gauss(sys) else { continue };
            for (s, &i) in free.iter().enumerate() {
                a[i] = sol[s];
            }
        }
        let feasible = a.iter().all(|&v| (-1e-12..=c + 1e-12).contains(&v))
            && a.iter().zip(y).map(|(a, y)| a * y).sum::<f64>().abs() < 1e-9;
        if feasible {
            best = best.max(objective(&a));
        }
    }
    best
}

fn gauss(mut m: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = m.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-10 {
            return None;
        }
        m.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = m[r][col] / m[col][col];
                let pivot = m[col].clone();
                for (v, p) in m[r].iter_mut().zip(&pivot).skip(col) {
                    *v -= f * p;
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

/// Alpha of every training row, zero for rows that are not support vectors.
fn full_alphas(m: &BinarySvm, x: &Matrix) -> Vec<f64> {
    x.iter_rows()
        .map(|r| {
            m.support_vectors
                .iter_rows()
                .position(|sv| sv == r)
                .map_or(0.0, |k| m.alphas[k])
        })
        .collect()
}

fn points(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = (Matrix, Vec<f64>)> {
    n.prop_flat_map(|n| {
        (
            prop::collection::vec(prop::array::uniform2(-3.0f64..3.0), n),
            prop::collection::vec(any::<bool>(), n),
        )
    })
    .prop_filter_map("needs both labels and distinct points", |(rows, flags)| {
        let y: Vec<f64> = flags.iter().map(|&f| if f { 1.0 } else { -1.0 }).collect();
        let distinct = rows
            .iter()
            .enumerate()
            .all(|(i, a)| rows[..i].iter().all(|b| (a[0] - b[0]).abs() + (a[1] - b[1]).abs() > 1e-3));
        (y.contains(&1.0) && y.contains(&-1.0) && distinct).then(|| (Matrix::from_rows(&rows).unwrap(), y))
    })
}

fn kernels() -> impl Strategy<Value = Kernel> {
    prop_oneof![Just(Kernel::Linear), (0.1f64..2.0).prop_map(|gamma| Kernel::Rbf { gamma })]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dual_feasible_and_kkt((x, y) in points(2..=30), kernel in kernels(), c in 0.1f64..10.0) {
        let params = SvmParams { c, kernel, ..SvmParams::default() };
        let m = train_binary_svm(&x, &y, &params).unwrap();
        prop_assert!(m.converged);
        prop_assert!(m.kkt_gap <= params.tol);
        let a = full_alphas(&m, &x);
        prop_assert!(a.iter().all(|&v| (0.0..=c).contains(&v)));
        prop_assert!(a.iter().zip(&y).map(|(a, y)| a * y).sum::<f64>().abs() <= 1e-6);
        // Per-point KKT residual of y f(x) against the margin.
        for (i, r) in x.iter_rows().enumerate() {
            let yf = y[i] * m.decision_value(r).unwrap();
            let residual = if a[i] <= 1e-8 {
                (1.0 - yf).max(0.0)
            } else if a[i] >= c - 1e-8 {
                (yf - 1.0).max(0.0)
            } else {
                (yf - 1.0).abs()
            };
            prop_assert!(residual <= params.tol, "row {i}: residual {residual}");
        }
    }

    #[test]
    fn dual_objective_matches_exhaustive_oracle((x, y) in points(2..=4), kernel in kernels(), c in 0.1f64..5.0) {
        let params = SvmParams { c, kernel, tol: 1e-6, ..SvmParams::default() };
        let m = train_binary_svm(&x, &y, &params).unwrap();
        let oracle = dual_oracle(&x, &y, c, &kernel);
        prop_assert!((m.dual_objective() - oracle).abs() <= 1e-3, "solver {} oracle {}", m.dual_objective(), oracle);
    }

    #[test]
    fn predictions_invariant_to_positive_scaling((x, y) in points(6..=30), factor in 0.01f64..100.0) {
        let labels: Vec<QualityClass> = y
            .iter()
            .enumerate()
            .map(|(i, &v)| if v > 0.0 { QualityClass::Good } else if i % 2 == 0 { QualityClass::Bad } else { QualityClass::Normal })
            .collect();
        let params = SvmParams { kernel: Kernel::Rbf { gamma: 0.5 }, ..SvmParams::default() };
        let m = train_multiclass_svm(&x, &labels, &params).unwrap();
        let s = m.scaled(factor);
        for r in x.iter_rows() {
            prop_assert_eq!(m.predict(r).unwrap(), s.predict(r).unwrap());
        }
    }
}
