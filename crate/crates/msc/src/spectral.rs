//! Normalized spectral clustering: the shared final stage of every pipeline
//! in this crate.
//!
//! Uses the symmetric normalized Laplacian with row-renormalized embedding
//! (the Ng-Jordan-Weiss form), then k-means with greedy distance-weighted
//! seeding over several restarts.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{AffinityMatrix, LabelVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct SpectralParams {
    pub clusters: usize,
    pub kmeans_restarts: usize,
    pub kmeans_max_iter: usize,
    pub seed: u64,
}

impl SpectralParams {
    pub fn new(clusters: usize, seed: u64) -> Self {
        Self {
            clusters,
            kmeans_restarts: 20,
            kmeans_max_iter: 300,
            seed,
        }
    }
}

/// `L = I - D^{-1/2} W D^{-1/2}`. Isolated vertices (zero degree) get the
/// identity row/column.
pub fn normalized_laplacian(affinity: &AffinityMatrix) -> DMatrix<f64> {
    let w = affinity.weights();
    let n = w.nrows();
    let inv_sqrt_deg: DVector<f64> = DVector::from_fn(n, |i, _| {
        let d: f64 = w.row(i).sum();
        if d > 0.0 {
            1.0 / d.sqrt()
        } else {
            0.0
        }
    });
    let mut laplacian = DMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            laplacian[(i, j)] -= inv_sqrt_deg[i] * w[(i, j)] * inv_sqrt_deg[j];
        }
    }
    laplacian
}

/// Eigenvectors of `L` for the K smallest eigenvalues, rows renormalized to
/// unit length. Zero rows (isolated vertices) stay zero.
pub fn spectral_embed(affinity: &AffinityMatrix, clusters: usize) -> Result<DMatrix<f64>> {
    let n = affinity.len();
    if clusters > n {
        return Err(Error::InvalidConfig(format!(
            "K={clusters} exceeds N={n}"
        )));
    }
    let laplacian = normalized_laplacian(affinity);
    let eigen = SymmetricEigen::new(laplacian);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[a]
            .partial_cmp(&eigen.eigenvalues[b])
            .ok_or(())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut embedding = DMatrix::zeros(n, clusters);
    for (col, &idx) in order.iter().take(clusters).enumerate() {
        embedding.set_column(col, &eigen.eigenvectors.column(idx));
    }
    for i in 0..n {
        let norm = embedding.row(i).norm();
        if norm > 0.0 {
            embedding.row_mut(i).scale_mut(1.0 / norm);
        }
    }
    Ok(embedding)
}

fn squared_distance(points: &DMatrix<f64>, i: usize, center: &DVector<f64>) -> f64 {
    let mut acc = 0.0;
    for (d, c) in center.iter().enumerate() {
        let diff = points[(i, d)] - c;
        acc += diff * diff;
    }
    acc
}

/// One k-means run: greedy distance-weighted (k-means++-style) seeding, then
/// Lloyd iterations. Returns (labels, WCSS).
fn kmeans_once(
    points: &DMatrix<f64>,
    k: usize,
    max_iter: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, f64) {
    let n = points.nrows();
    let dim = points.ncols();

    let mut centers: Vec<DVector<f64>> = Vec::with_capacity(k);
    let first = rng.gen_range(0..n);
    centers.push(points.row(first).transpose());
    let mut dist2: Vec<f64> = (0..n)
        .map(|i| squared_distance(points, i, &centers[0]))
        .collect();
    while centers.len() < k {
        let total: f64 = dist2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in dist2.iter().enumerate() {
                target -= d;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        centers.push(points.row(next).transpose());
        let last = centers.last().unwrap();
        for i in 0..n {
            dist2[i] = dist2[i].min(squared_distance(points, i, last));
        }
    }

    let mut labels = vec![0usize; n];
    for _ in 0..max_iter {
        let mut changed = false;
        for i in 0..n {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let d = squared_distance(points, i, center);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        let mut sums = vec![DVector::<f64>::zeros(dim); k];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            sums[labels[i]] += points.row(i).transpose();
            counts[labels[i]] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = &sums[c] / counts[c] as f64;
            }
        }
        if !changed {
            break;
        }
    }
    let wcss: f64 = (0..n)
        .map(|i| squared_distance(points, i, &centers[labels[i]]))
        .sum();
    (labels, wcss)
}

/// Best-of-restarts k-means; deterministic given the seed, with per-restart
/// RNG streams so restarts could run concurrently.
pub fn kmeans(points: &DMatrix<f64>, params: &SpectralParams) -> Result<LabelVector> {
    let k = params.clusters;
    if points.nrows() < k {
        return Err(Error::InvalidConfig(format!(
            "K={} exceeds point count {}",
            k,
            points.nrows()
        )));
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    for restart in 0..params.kmeans_restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(restart as u64);
        let (labels, wcss) = kmeans_once(points, k, params.kmeans_max_iter, &mut rng);
        if best.as_ref().map_or(true, |(_, w)| wcss < *w) {
            best = Some((labels, wcss));
        }
    }
    LabelVector::new(best.unwrap().0, k)
}

/// The full stage: embed, then k-means.
pub fn spectral_cluster(affinity: &AffinityMatrix, params: &SpectralParams) -> Result<LabelVector> {
    let embedding = spectral_embed(affinity, params.clusters)?;
    kmeans(&embedding, params)
}
