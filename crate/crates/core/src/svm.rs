//! Soft-margin support vector machines.
//!
//! Binary machines solve the dual
//!
//! ```text
//! max  sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
//! s.t. sum_i a_i y_i = 0,  0 <= a_i <= C
//! ```
//!
//! by sequential pairwise coordinate ascent: each step picks the maximal
//! violating pair with second-order working-set selection and solves the
//! two-variable subproblem in closed form. The gradient is maintained
//! incrementally. Three machines (one per class against the rest) make up
//! the multiclass model, which predicts the argmax decision value.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::QualityClass;
use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Matrix;

/// Alphas at or below this are not support vectors.
pub const SUPPORT_FLOOR: f64 = 1e-8;

/// Largest training set whose full Gram matrix is precomputed.
const DENSE_GRAM_LIMIT: usize = 5000;

const TAU: f64 = 1e-12;

/// Shortest pass counted by the iteration budget. Tiny problems with
/// low-rank kernels can need hundreds of pair updates per point.
pub const MIN_PASS_LENGTH: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Rbf { gamma } if !(gamma > 0.0 && gamma.is_finite()) => {
                Err(Error::param("gamma", "must be positive and finite"))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    fn value(&self, x: &[f64], z: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => math::dot(x, z),
            Kernel::Rbf { gamma } => math::exp(-gamma * math::squared_distance(x, z)),
        }
    }
}

pub fn eval_kernel(k: &Kernel, x: &[f64], z: &[f64]) -> Result<f64> {
    if x.len() != z.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: z.len(),
        });
    }
    Ok(k.value(x, z))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub kernel: Kernel,
    /// Stop once the maximal violating pair gap falls below this.
    pub tol: f64,
    /// Iteration budget: `max_passes * max(n, MIN_PASS_LENGTH)` pair updates.
    pub max_passes: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            kernel: Kernel::Linear,
            tol: 1e-3,
            max_passes: 100,
        }
    }
}

impl SvmParams {
    pub fn iteration_budget(&self, n: usize) -> usize {
        self.max_passes.saturating_mul(n.max(MIN_PASS_LENGTH))
    }

    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::param("c", "must be positive and finite"));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::param("tol", "must be positive"));
        }
        if self.max_passes == 0 {
            return Err(Error::param("max_passes", "must be at least 1"));
        }
        self.kernel.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    pub support_vectors: Matrix,
    /// +1 or -1 per support vector.
    pub support_labels: Vec<f64>,
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub kernel: Kernel,
    /// Maximal violating pair gap when training stopped.
    pub kkt_gap: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl BinarySvm {
    /// A machine with no support vectors that always answers `bias`.
    fn constant(n_features: usize, bias: f64, c: f64, kernel: Kernel) -> Self {
        BinarySvm {
            support_vectors: Matrix::with_cols(n_features),
            support_labels: Vec::new(),
            alphas: Vec::new(),
            bias,
            c,
            kernel,
            kkt_gap: 0.0,
            converged: true,
            iterations: 0,
        }
    }

    pub fn n_features(&self) -> usize {
        self.support_vectors.cols()
    }

    /// f(x) = sum_i a_i y_i K(x_i, x) + b.
    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                found: x.len(),
            });
        }
        Ok(self.decision_unchecked(x))
    }

    fn decision_unchecked(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter_rows()
            .zip(self.alphas.iter().zip(&self.support_labels))
            .map(|(sv, (a, y))| a * y * self.kernel.value(sv, x))
            .sum::<f64>()
            + self.bias
    }

    /// Dual objective at the stored alphas. Non-support points have zero
    /// alpha and contribute nothing.
    pub fn dual_objective(&self) -> f64 {
        let n = self.alphas.len();
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += self.alphas[i]
                    * self.alphas[j]
                    * self.support_labels[i]
                    * self.support_labels[j]
                    * self.kernel.value(self.support_vectors.row(i), self.support_vectors.row(j));
            }
        }
        self.alphas.iter().sum::<f64>() - 0.5 * quad
    }

    /// Hinge slack max(0, 1 - y f(x)) of a labelled point.
    pub fn slack(&self, x: &[f64], y: f64) -> Result<f64> {
        Ok((1.0 - y * self.decision_value(x)?).max(0.0))
    }

    /// Copy with every alpha and the bias multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> BinarySvm {
        let mut m = self.clone();
        m.alphas.iter_mut().for_each(|a| *a *= factor);
        m.bias *= factor;
        m
    }
}

/// Kernel values over the training rows, precomputed when small enough.
struct Gram<'a> {
    x: &'a Matrix,
    kernel: Kernel,
    dense: Option<Vec<f64>>,
    diag: Vec<f64>,
}

impl<'a> Gram<'a> {
    fn new(x: &'a Matrix, kernel: Kernel) -> Self {
        let n = x.rows();
        let diag = (0..n).map(|i| kernel.value(x.row(i), x.row(i))).collect();
        let dense = (n <= DENSE_GRAM_LIMIT).then(|| {
            let mut k = alloc::vec![0.0; n * n];
            for i in 0..n {
                for j in i..n {
                    let v = kernel.value(x.row(i), x.row(j));
                    k[i * n + j] = v;
                    k[j * n + i] = v;
                }
            }
            k
        });
        Gram { x, kernel, dense, diag }
    }

    fn row<'s>(&'s self, i: usize, buf: &'s mut [f64]) -> &'s [f64] {
        let n = self.x.rows();
        match &self.dense {
            Some(k) => &k[i * n..(i + 1) * n],
            None => {
                let xi = self.x.row(i);
                for (j, b) in buf.iter_mut().enumerate() {
                    *b = self.kernel.value(xi, self.x.row(j));
                }
                buf
            }
        }
    }
}

struct Solution {
    alphas: Vec<f64>,
    bias: f64,
    gap: f64,
    converged: bool,
    iterations: usize,
}

fn solve(gram: &Gram<'_>, y: &[f64], c: f64, tol: f64, max_iter: usize) -> Solution {
    let n = y.len();
    let mut alpha = alloc::vec![0.0; n];
    // gradient of the minimization form 1/2 a'Qa - e'a, with Q_ij = y_i y_j K_ij
    let mut grad = alloc::vec![-1.0; n];
    let mut buf_i = alloc::vec![0.0; n];
    let mut buf_j = alloc::vec![0.0; n];
    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;

    let mut iterations = 0;
    let mut gap;
    loop {
        // i: maximizes -y_t G_t over the "up" set
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            let v = -y[t] * grad[t];
            let eligible = if y[t] > 0.0 { !upper(alpha[t]) } else { !lower(alpha[t]) };
            if eligible && v >= gmax {
                gmax = v;
                i = t;
            }
        }
        // j: best second-order gain over the "low" set
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best_obj = f64::INFINITY;
        if i != usize::MAX {
            let ki = gram.row(i, &mut buf_i);
            for t in 0..n {
                let eligible = if y[t] > 0.0 { !lower(alpha[t]) } else { !upper(alpha[t]) };
                if !eligible {
                    continue;
                }
                let v = y[t] * grad[t];
                if v >= gmax2 {
                    gmax2 = v;
                }
                let diff = gmax + v;
                if diff > 0.0 {
                    let quad = gram.diag[i] + gram.diag[t] - 2.0 * ki[t];
                    let obj = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                    if obj <= best_obj {
                        best_obj = obj;
                        j = t;
                    }
                }
            }
        }
        gap = gmax + gmax2;
        if i == usize::MAX || j == usize::MAX || gap < tol {
            break;
        }
        if iterations >= max_iter {
            break;
        }
        iterations += 1;

        let (ai_old, aj_old) = (alpha[i], alpha[j]);
        let kij = gram.row(i, &mut buf_i)[j];
        let quad = {
            let q = gram.diag[i] + gram.diag[j] - 2.0 * kij;
            if q > 0.0 { q } else { TAU }
        };
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - ai_old, alpha[j] - aj_old);
        let ki = gram.row(i, &mut buf_i);
        let kj = gram.row(j, &mut buf_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
        }
    }

    // b = -rho, rho averaged over free vectors, else the middle of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if upper(alpha[t]) {
            if y[t] < 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else if lower(alpha[t]) {
            if y[t] > 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 { sum_free / n_free as f64 } else { (ub + lb) / 2.0 };

    Solution {
        alphas: alpha,
        bias: -rho,
        gap: gap.max(0.0),
        converged: gap < tol,
        iterations,
    }
}

fn check_binary_labels(y: &[f64]) -> Result<()> {
    if let Some(bad) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
        return Err(Error::param("labels", alloc::format!("expected +1 or -1, found {bad}")));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(Error::SingleLabel);
    }
    Ok(())
}

fn machine_from_solution(x: &Matrix, y: &[f64], sol: Solution, params: &SvmParams) -> BinarySvm {
    let sv: Vec<usize> = (0..y.len()).filter(|&i| sol.alphas[i] > SUPPORT_FLOOR).collect();
    BinarySvm {
        support_vectors: x.select_rows(&sv),
        support_labels: sv.iter().map(|&i| y[i]).collect(),
        alphas: sv.iter().map(|&i| sol.alphas[i]).collect(),
        bias: sol.bias,
        c: params.c,
        kernel: params.kernel,
        kkt_gap: sol.gap,
        converged: sol.converged,
        iterations: sol.iterations,
    }
}

/// Train one machine on labels in {-1, +1}. Running out of iterations is
/// not an error: the machine comes back with `converged == false` and the
/// gap it reached.
pub fn train_binary_svm(x: &Matrix, y: &[f64], params: &SvmParams) -> Result<BinarySvm> {
    params.validate()?;
    if x.rows() != y.len() {
        return Err(Error::LengthMismatch(x.rows(), y.len()));
    }
    check_binary_labels(y)?;
    let gram = Gram::new(x, params.kernel);
    let sol = solve(&gram, y, params.c, params.tol, params.iteration_budget(y.len()));
    Ok(machine_from_solution(x, y, sol, params))
}

/// One machine per class, that class against the rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassSvm {
    pub machines: Vec<BinarySvm>,
}

impl MulticlassSvm {
    pub fn n_features(&self) -> usize {
        self.machines[0].n_features()
    }

    pub fn converged(&self) -> bool {
        self.machines.iter().all(|m| m.converged)
    }

    pub fn decision_values(&self, x: &[f64]) -> Result<[f64; QualityClass::COUNT]> {
        let mut out = [0.0; 3];
        for (o, m) in out.iter_mut().zip(&self.machines) {
            *o = m.decision_value(x)?;
        }
        Ok(out)
    }

    pub fn predict(&self, x: &[f64]) -> Result<QualityClass> {
        Ok(class_from_scores(&self.decision_values(x)?))
    }

    pub fn scaled(&self, factor: f64) -> MulticlassSvm {
        MulticlassSvm {
            machines: self.machines.iter().map(|m| m.scaled(factor)).collect(),
        }
    }
}

/// Argmax over per-class scores; equal scores go to the lower class.
pub fn class_from_scores(scores: &[f64; QualityClass::COUNT]) -> QualityClass {
    QualityClass::ALL[math::argmax(scores)]
}

pub fn predict_multiclass(m: &MulticlassSvm, x: &[f64]) -> Result<QualityClass> {
    m.predict(x)
}

/// Train the three one-vs-rest machines over one shared Gram matrix. A class
/// that is absent (or the only one present) gets a constant machine.
pub fn train_multiclass_svm(x: &Matrix, labels: &[QualityClass], params: &SvmParams) -> Result<MulticlassSvm> {
    params.validate()?;
    if x.rows() != labels.len() {
        return Err(Error::LengthMismatch(x.rows(), labels.len()));
    }
    if x.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let gram = Gram::new(x, params.kernel);
    let max_iter = params.iteration_budget(labels.len());
    let machines = QualityClass::ALL
        .iter()
        .map(|&c| {
            let y: Vec<f64> = labels.iter().map(|&l| if l == c { 1.0 } else { -1.0 }).collect();
            if check_binary_labels(&y).is_err() {
                return BinarySvm::constant(x.cols(), y[0], params.c, params.kernel);
            }
            let sol = solve(&gram, &y, params.c, params.tol, max_iter);
            machine_from_solution(x, &y, sol, params)
        })
        .collect();
    Ok(MulticlassSvm { machines })
}
