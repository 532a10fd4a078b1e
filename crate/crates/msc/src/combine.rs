//! Pooling many graph realizations into a single affinity matrix.
//!
//! Four rules: entrywise addition, addition followed by per-row
//! thresholding, entrywise order statistics ("quantile"), and per-realization
//! spectral projection before addition.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::AffinityMatrix;
use crate::error::{Error, Result};

fn check_shapes(realizations: &[AffinityMatrix]) -> Result<usize> {
    let first = realizations
        .first()
        .ok_or_else(|| Error::InvalidConfig("no realizations to combine".into()))?;
    let n = first.len();
    for r in realizations {
        if r.len() != n {
            return Err(Error::ShapeMismatch {
                expected: format!("{n}x{n}"),
                got: format!("{}x{}", r.len(), r.len()),
            });
        }
    }
    Ok(n)
}

fn sum_weights(realizations: &[AffinityMatrix]) -> DMatrix<f64> {
    let n = realizations[0].len();
    realizations
        .iter()
        .fold(DMatrix::zeros(n, n), |acc, r| acc + r.weights())
}

/// Entrywise sum of all realizations.
pub fn combine_addition(realizations: &[AffinityMatrix]) -> Result<AffinityMatrix> {
    check_shapes(realizations)?;
    AffinityMatrix::new(sum_weights(realizations))
}

/// Sum, then keep the `q_c` largest entries per row (ties to lower column
/// index), then symmetrize by averaging.
pub fn combine_threshold(realizations: &[AffinityMatrix], q_c: usize) -> Result<AffinityMatrix> {
    let n = check_shapes(realizations)?;
    if q_c < 1 || q_c > n - 1 {
        return Err(Error::ThresholdOutOfRange { q: q_c, max: n - 1 });
    }
    let sum = sum_weights(realizations);
    let mut kept = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            sum[(i, b)]
                .partial_cmp(&sum[(i, a)])
                .unwrap()
                .then_with(|| a.cmp(&b))
        });
        for &j in order.iter().take(q_c) {
            kept[(i, j)] = sum[(i, j)];
        }
    }
    Ok(AffinityMatrix::finalize(&kept))
}

/// Entrywise `l`-th largest value across realizations (`l = 1` is the max,
/// `l = count` the min).
pub fn combine_quantile(realizations: &[AffinityMatrix], l: usize) -> Result<AffinityMatrix> {
    let n = check_shapes(realizations)?;
    let count = realizations.len();
    if l < 1 || l > count {
        return Err(Error::QuantileOutOfRange { l, max: count });
    }
    let mut out = DMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(count);
    for i in 0..n {
        for j in 0..n {
            values.clear();
            values.extend(realizations.iter().map(|r| r.weights()[(i, j)]));
            values.sort_by(|a, b| b.partial_cmp(a).unwrap());
            out[(i, j)] = values[l - 1];
        }
    }
    AffinityMatrix::new(out)
}

/// Projects the columns of each realization onto its leading `K` left
/// singular vectors before summing; the sum is symmetrized and negatives
/// are clamped to zero.
///
/// Exact dense SVD up to N = 512; a randomized range finder above.
pub fn combine_projection(realizations: &[AffinityMatrix], clusters: usize) -> Result<AffinityMatrix> {
    let n = check_shapes(realizations)?;
    if clusters > n {
        return Err(Error::InvalidConfig(format!(
            "K={clusters} exceeds N={n}"
        )));
    }
    let mut acc = DMatrix::zeros(n, n);
    for r in realizations {
        let w = r.weights();
        let basis = if n <= 512 {
            top_left_singular_vectors(w, clusters)?
        } else {
            randomized_range(w, clusters, 8, 2)
        };
        acc += &basis * (basis.transpose() * w);
    }
    Ok(AffinityMatrix::finalize(&acc))
}

/// Leading `k` left singular vectors via dense SVD.
pub fn top_left_singular_vectors(m: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
    let svd = m.clone().svd(true, false);
    let u = svd
        .u
        .ok_or_else(|| Error::EigenFailure("SVD did not produce U".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap()
    });
    let mut basis = DMatrix::zeros(m.nrows(), k);
    for (col, &idx) in order.iter().take(k).enumerate() {
        basis.set_column(col, &u.column(idx));
    }
    Ok(basis)
}

/// Randomized range finder (Gaussian sketch with power iterations): an
/// orthonormal basis approximating the span of the top `k` left singular
/// vectors.
pub fn randomized_range(
    m: &DMatrix<f64>,
    k: usize,
    oversample: usize,
    power_iters: usize,
) -> DMatrix<f64> {
    let n = m.ncols();
    let sketch_cols = (k + oversample).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_5eed);
    let omega = DMatrix::from_fn(n, sketch_cols, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut y = m * omega;
    for _ in 0..power_iters {
        y = m * (m.transpose() * y);
    }
    let q = orthonormalize(&y);
    // Project, take the top-k directions inside the sketch.
    let b = q.transpose() * m;
    let svd = b.svd(true, false);
    let u_small = svd.u.expect("svd of sketch");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap()
    });
    let mut picked = DMatrix::zeros(u_small.nrows(), k.min(u_small.ncols()));
    for (col, &idx) in order.iter().take(picked.ncols()).enumerate() {
        picked.set_column(col, &u_small.column(idx));
    }
    &q * picked
}

fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let qr = m.clone().qr();
    qr.q()
}
