//! Graph construction from a vector dataset: the thresholded inner-product
//! method (TSC) and the sparse self-expressive method (SSC).
//!
//! Both produce one [`AffinityMatrix`] ("graph realization") and stop before
//! spectral clustering, so the multilinear pipeline can pool many
//! realizations before the final clustering stage.

use nalgebra::{Cholesky, DMatrix, RowDVector};

use crate::data::{AffinityMatrix, VectorDataset};
use crate::error::{Error, Result};

/// TSC parameters: keep the `q` strongest neighbors per row,
/// `1 <= q <= N-1`.
///
/// The upper bound is `N-1` rather than `N`: the Gram diagonal is removed
/// before thresholding, so a row has at most `N-1` candidate edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TscParams {
    pub q: usize,
}

impl TscParams {
    /// Neighbor count used when none is given: `max(3, N/(6K))`, capped at
    /// `N-1`.
    pub fn default_q(n: usize, k: usize) -> usize {
        (n / (6 * k)).max(3).min(n.saturating_sub(1)).max(1)
    }
}

/// SSC parameters.
///
/// When `lambda1`/`lambda2` are not set they are derived from the data
/// following the usual SSC parameterization, rescaled to this objective's
/// unit quadratic term: `lambda1 = 2 mu0 / alpha` with
/// `mu0 = min_i max_{j!=i} |x_i^T x_j|`, and `lambda2 = 2 mu0 / mu_e` with
/// `mu_e = min_i max_{j!=i} ||x_j||_1`. Larger `alpha` keeps more
/// coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SscParams {
    pub alpha: f64,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub outlier_rejection: bool,
    pub affine: bool,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SscParams {
    fn default() -> Self {
        Self {
            alpha: 20.0,
            lambda1: None,
            lambda2: None,
            outlier_rejection: true,
            affine: false,
            tolerance: 1e-6,
            max_iterations: 5000,
        }
    }
}

/// Output of the SSC solver: sparse coefficients, outlier matrix, and the
/// per-iteration objective trace.
#[derive(Debug, Clone)]
pub struct SscSolution {
    pub coefficients: DMatrix<f64>,
    pub outliers: DMatrix<f64>,
    pub objective_value: f64,
    pub objective_history: Vec<f64>,
    pub iterations: usize,
}

/// Rescales every column to unit Euclidean norm.
pub fn normalize_columns(data: &VectorDataset) -> Result<VectorDataset> {
    let mut columns = data.columns().clone();
    for j in 0..columns.ncols() {
        let norm = columns.column(j).norm();
        if norm == 0.0 {
            return Err(Error::ZeroColumn(j));
        }
        columns.column_mut(j).scale_mut(1.0 / norm);
    }
    VectorDataset::new(columns, data.labels().map(|l| l.to_vec()))
}

/// Indices of the `q` largest entries of a row, the diagonal excluded.
/// Ties break toward the lower column index.
fn top_q_indices(row: &RowDVector<f64>, diag: usize, q: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..row.len()).filter(|&j| j != diag).collect();
    let by_value_then_index = |&a: &usize, &b: &usize| {
        row[b]
            .partial_cmp(&row[a])
            .unwrap()
            .then_with(|| a.cmp(&b))
    };
    // The comparator is a strict total order, so partial selection retains
    // exactly the q indices a full sort would.
    if q < order.len() {
        order.select_nth_unstable_by(q, by_value_then_index);
        order.truncate(q);
    }
    order
}

/// TSC graph construction.
///
/// Normalizes the columns, forms `G = |X^T X|` clamped into `[0, 1]`,
/// removes the diagonal, keeps the `q` largest entries per row, maps the
/// retained entries through `exp(-2 * acos(g))`, and symmetrizes by
/// averaging. Entries removed by thresholding stay zero; applying the
/// weight map to them would resurrect deleted edges at weight `e^{-pi}`.
pub fn tsc_affinity(data: &VectorDataset, params: &TscParams) -> Result<AffinityMatrix> {
    let n = data.len();
    if params.q < 1 || params.q > n - 1 {
        return Err(Error::ThresholdOutOfRange {
            q: params.q,
            max: n - 1,
        });
    }
    let normalized = normalize_columns(data)?;
    let x = normalized.columns();
    let gram = (x.transpose() * x).map(|v| v.abs().clamp(0.0, 1.0));
    let mut thresholded = DMatrix::zeros(n, n);
    for i in 0..n {
        let row = gram.row(i).clone_owned();
        for j in top_q_indices(&row, i, params.q) {
            thresholded[(i, j)] = (-2.0 * row[j].acos()).exp();
        }
    }
    Ok(AffinityMatrix::finalize(&thresholded))
}

fn soft_threshold(v: f64, threshold: f64) -> f64 {
    if v > threshold {
        v - threshold
    } else if v < -threshold {
        v + threshold
    } else {
        0.0
    }
}

/// `min_i max_{j!=i} |x_i^T x_j|` on normalized data; the scale the default
/// `lambda1` is expressed against.
fn coherence_scale(x: &DMatrix<f64>) -> f64 {
    let gram = x.transpose() * x;
    let n = x.ncols();
    let mut scale = f64::INFINITY;
    for i in 0..n {
        let mut row_max: f64 = 0.0;
        for j in 0..n {
            if j != i {
                row_max = row_max.max(gram[(i, j)].abs());
            }
        }
        scale = scale.min(row_max);
    }
    scale
}

fn l1_column_scale(x: &DMatrix<f64>) -> f64 {
    let n = x.ncols();
    let norms: Vec<f64> = (0..n).map(|j| x.column(j).abs().sum()).collect();
    let mut scale = f64::INFINITY;
    for i in 0..n {
        let mut row_max: f64 = 0.0;
        for (j, &nj) in norms.iter().enumerate() {
            if j != i {
                row_max = row_max.max(nj);
            }
        }
        scale = scale.min(row_max);
    }
    scale
}

fn objective(
    x: &DMatrix<f64>,
    c: &DMatrix<f64>,
    e: &DMatrix<f64>,
    lambda1: f64,
    lambda2: f64,
) -> f64 {
    let residual = x - x * c - e;
    residual.norm_squared() + lambda1 * c.abs().sum() + lambda2 * e.abs().sum()
}

/// Resolved regularization weights for one SSC problem.
#[derive(Debug, Clone, Copy)]
pub struct SscWeights {
    pub lambda1: f64,
    pub lambda2: f64,
}

pub(crate) fn resolve_weights(x: &DMatrix<f64>, params: &SscParams) -> SscWeights {
    let mu0 = coherence_scale(x);
    let lambda1 = params
        .lambda1
        .unwrap_or_else(|| if mu0 > 0.0 { 2.0 * mu0 / params.alpha } else { 1.0 });
    let lambda2 = if params.outlier_rejection {
        params.lambda2.unwrap_or_else(|| {
            let mu_e = l1_column_scale(x);
            if mu_e > 0.0 && mu0 > 0.0 {
                2.0 * mu0 / mu_e
            } else {
                1.0
            }
        })
    } else {
        0.0
    };
    SscWeights { lambda1, lambda2 }
}

/// Solves the self-expressive program
/// `min_{C,E} ||X - XC - E||_F^2 + lambda1 ||C||_1 + lambda2 ||E||_1`
/// subject to `C_ii = 0` (and `1^T C = 1^T` when `affine` is on) with an
/// augmented-Lagrangian splitting scheme.
///
/// The smooth copy `A` of `C` absorbs the quadratic term; `C` carries the
/// l1 penalty and the zero-diagonal constraint, enforced at every iterate.
/// When `outlier_rejection` is off, `E` stays fixed at zero.
pub fn ssc_solve(data: &VectorDataset, params: &SscParams) -> Result<SscSolution> {
    let x = data.columns();
    let n = x.ncols();
    let d = x.nrows();
    if n < 2 {
        return Err(Error::InvalidConfig("SSC needs at least 2 points".into()));
    }
    let weights = resolve_weights(x, params);
    let (lambda1, lambda2) = (weights.lambda1, weights.lambda2);

    // Penalty scaled from the data: mu ~ N / sum_i ||x_i||_1, lifted to the
    // lambda1 scale so the soft-threshold lambda1/mu stays moderate.
    // Residual balancing below adapts it when primal and dual residuals
    // drift apart.
    let l1_sum: f64 = (0..n).map(|j| x.column(j).abs().sum()).sum();
    let mut mu = if l1_sum > 0.0 {
        (n as f64 / l1_sum).max(1e-8) * 10.0 * lambda1.max(1.0)
    } else {
        1.0
    };

    let xtx = x.transpose() * x;
    let factor = |mu: f64| -> Result<Cholesky<f64, nalgebra::Dyn>> {
        let mut system = 2.0 * &xtx + DMatrix::identity(n, n) * mu;
        if params.affine {
            // + mu * 1 1^T for the row-sum constraint.
            for i in 0..n {
                for j in 0..n {
                    system[(i, j)] += mu;
                }
            }
        }
        Cholesky::new(system)
            .ok_or_else(|| Error::EigenFailure("augmented system is not positive definite".into()))
    };
    let mut chol = factor(mu)?;

    let ones_row = RowDVector::<f64>::from_element(n, 1.0);
    let mut c = DMatrix::zeros(n, n);
    let mut e = DMatrix::zeros(d, n);
    let mut dual = DMatrix::zeros(n, n);
    let mut affine_dual = RowDVector::<f64>::zeros(n);
    let mut history = Vec::new();
    let mut primal = f64::INFINITY;
    let mut dual_resid = f64::INFINITY;

    for iter in 0..params.max_iterations {
        // A-update: quadratic solve.
        let mut rhs = 2.0 * x.transpose() * (x - &e) + (&c - &dual) * mu;
        if params.affine {
            let target = &ones_row - &affine_dual;
            for i in 0..n {
                for j in 0..n {
                    rhs[(i, j)] += mu * target[j];
                }
            }
        }
        let a = chol.solve(&rhs);

        // C-update: soft-threshold, zero diagonal.
        let c_prev = c.clone();
        c = (&a + &dual).map(|v| soft_threshold(v, lambda1 / mu));
        c.fill_diagonal(0.0);

        // E-update: exact minimizer of ||R - E||^2 + lambda2 ||E||_1.
        if params.outlier_rejection {
            let residual = x - x * &a;
            e = residual.map(|v| soft_threshold(v, lambda2 / 2.0));
        }

        let gap = &a - &c;
        dual += &gap;
        primal = gap.abs().max();
        if params.affine {
            let affine_gap = &ones_row * &a - &ones_row;
            affine_dual += &affine_gap;
            primal = primal.max(affine_gap.abs().max());
        }
        dual_resid = mu * (&c - &c_prev).abs().max();

        history.push(objective(x, &c, &e, lambda1, lambda2));

        // Residual balancing: grow mu when the primal gap dominates,
        // shrink it when the dual residual does. The scaled duals are
        // rescaled to keep mu * dual invariant.
        if iter % 10 == 9 && primal.max(dual_resid) > params.tolerance {
            if primal > 10.0 * dual_resid {
                mu *= 2.0;
                dual /= 2.0;
                affine_dual /= 2.0;
                chol = factor(mu)?;
            } else if dual_resid > 10.0 * primal {
                mu /= 2.0;
                dual *= 2.0;
                affine_dual *= 2.0;
                chol = factor(mu)?;
            }
        }

        if primal <= params.tolerance && dual_resid <= params.tolerance {
            return Ok(SscSolution {
                objective_value: *history.last().unwrap(),
                coefficients: c,
                outliers: e,
                objective_history: history,
                iterations: iter + 1,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: params.max_iterations,
        primal,
        dual: dual_resid,
    })
}

/// SSC graph construction: `W = |C| + |C|^T` from the solver output.
pub fn ssc_affinity(data: &VectorDataset, params: &SscParams) -> Result<AffinityMatrix> {
    let solution = ssc_solve(data, params)?;
    affinity_from_coefficients(&solution.coefficients)
}

pub fn affinity_from_coefficients(c: &DMatrix<f64>) -> Result<AffinityMatrix> {
    let abs = c.abs();
    AffinityMatrix::new(&abs + abs.transpose())
}
