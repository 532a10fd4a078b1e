//! Clustering-error metric and the scaling benchmark harness.

use std::time::Instant;

use crate::affinity::{tsc_affinity, TscParams};
use crate::data::LabelVector;
use crate::error::{Error, Result};
use crate::pipeline::{sample_fibers, MscConfig};
use crate::synth::{generate_uoms, Assignment, UomsSpec};

/// Result of comparing a predicted labeling to ground truth under the best
/// matching of cluster ids.
#[derive(Debug, Clone)]
pub struct EvalReport {
    /// Fraction of misclassified points in `[0, 1]`.
    pub clustering_error: f64,
    /// Optimal injective map predicted-id -> truth-id.
    pub matched_permutation: Vec<usize>,
    /// Confusion counts, `confusion[pred][truth]`.
    pub confusion: Vec<Vec<usize>>,
}

/// Minimum-cost assignment on a square cost matrix (Kuhn-Munkres with
/// potentials, O(n^3)). Returns for each row the column it is assigned to.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut matched_row = vec![0usize; n + 1]; // column -> row (1-based)
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[matched_row[j] - 1] = j - 1;
    }
    assignment
}

/// Permutation-minimized misclassification rate: builds the K x K confusion
/// matrix and finds the id matching that maximizes agreement via optimal
/// assignment (exact, not greedy).
pub fn clustering_error(pred: &LabelVector, truth: &LabelVector, k: usize) -> Result<EvalReport> {
    if pred.len() != truth.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} labels", truth.len()),
            got: format!("{} labels", pred.len()),
        });
    }
    let n = pred.len();
    let mut confusion = vec![vec![0usize; k]; k];
    for (&p, &t) in pred.assignments().iter().zip(truth.assignments()) {
        confusion[p][t] += 1;
    }
    // Maximize agreement == minimize (n - agreement).
    let cost: Vec<Vec<f64>> = confusion
        .iter()
        .map(|row| row.iter().map(|&c| -(c as f64)).collect())
        .collect();
    let matched_permutation = min_cost_assignment(&cost);
    let agreement: usize = (0..k).map(|p| confusion[p][matched_permutation[p]]).sum();
    Ok(EvalReport {
        clustering_error: (n - agreement) as f64 / n as f64,
        matched_permutation,
        confusion,
    })
}

/// One cell of the scaling benchmark grid.
#[derive(Debug, Clone)]
pub struct BenchPoint {
    pub col_dim: usize,
    pub row_dim: usize,
    pub points: usize,
    pub trials: usize,
}

/// Timings for one grid cell: medians over repeats, seconds.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub point: BenchPoint,
    /// Affinity construction on the vectorized dataset (one TSC pass).
    pub vectorized_tsc_secs: f64,
    /// One MSC trial: fiber sampling plus TSC on both fiber matrices.
    pub msc_trial_secs: f64,
}

#[derive(Debug, Clone)]
pub struct BenchResult {
    pub rows: Vec<BenchRow>,
}

fn median(mut samples: Vec<f64>) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    samples[samples.len() / 2]
}

/// Times vectorized TSC affinity construction against a single MSC-TSC
/// trial on synthetic UOMS data, median over `repeats` with one warmup.
pub fn bench_scaling(grid: &[BenchPoint], repeats: usize, seed: u64) -> Result<BenchResult> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty benchmark grid".into()));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for point in grid {
        let spec = UomsSpec {
            clusters: 2,
            points: point.points,
            col_dim: point.col_dim,
            row_dim: point.row_dim,
            col_latent: 2.min(point.col_dim),
            row_latent: 2.min(point.row_dim),
            noise_sigma: 0.05,
            seed,
            assignment: Assignment::Balanced,
        };
        let (dataset, _) = generate_uoms(&spec)?;
        let vectorized = dataset.vectorize();
        let q = TscParams::default_q(point.points, 2);
        let params = TscParams { q };
        let cfg = MscConfig::new(2, point.trials, seed);

        let mut vec_times = Vec::new();
        let mut trial_times = Vec::new();
        for rep in 0..repeats + 1 {
            let start = Instant::now();
            let w = tsc_affinity(&vectorized, &params)?;
            let elapsed = start.elapsed().as_secs_f64();
            std::hint::black_box(w);
            if rep > 0 {
                vec_times.push(elapsed);
            }

            let start = Instant::now();
            let (cols, rows_ds, _) = sample_fibers(&dataset, rep, &cfg)?;
            let wc = tsc_affinity(&cols, &params)?;
            let wr = tsc_affinity(&rows_ds, &params)?;
            let elapsed = start.elapsed().as_secs_f64();
            std::hint::black_box((wc, wr));
            if rep > 0 {
                trial_times.push(elapsed);
            }
        }
        rows.push(BenchRow {
            point: point.clone(),
            vectorized_tsc_secs: median(vec_times),
            msc_trial_secs: median(trial_times),
        });
    }
    Ok(BenchResult { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn labels(v: Vec<usize>, k: usize) -> LabelVector {
        LabelVector::new(v, k).unwrap()
    }

    #[test]
    fn relabeling_costs_nothing() {
        let pred = labels(vec![0, 0, 1, 1], 2);
        let truth = labels(vec![1, 1, 0, 0], 2);
        let report = clustering_error(&pred, &truth, 2).unwrap();
        assert_eq!(report.clustering_error, 0.0);
        assert_eq!(report.matched_permutation, vec![1, 0]);
    }

    #[test]
    fn half_wrong_is_half() {
        let pred = labels(vec![0, 1, 0, 1], 2);
        let truth = labels(vec![0, 0, 1, 1], 2);
        let report = clustering_error(&pred, &truth, 2).unwrap();
        assert_eq!(report.clustering_error, 0.5);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let pred = labels(vec![0, 1], 2);
        let truth = labels(vec![0, 1, 0], 2);
        assert!(clustering_error(&pred, &truth, 2).is_err());
    }

    fn exhaustive_error(pred: &LabelVector, truth: &LabelVector, k: usize) -> f64 {
        // All K! bijections.
        fn permutations(k: usize) -> Vec<Vec<usize>> {
            if k == 1 {
                return vec![vec![0]];
            }
            let mut out = Vec::new();
            for rest in permutations(k - 1) {
                for pos in 0..k {
                    let mut p = rest.clone();
                    p.insert(pos, k - 1);
                    out.push(p);
                }
            }
            out
        }
        let n = pred.len();
        permutations(k)
            .into_iter()
            .map(|perm| {
                let wrong = pred
                    .assignments()
                    .iter()
                    .zip(truth.assignments())
                    .filter(|(&p, &t)| perm[p] != t)
                    .count();
                wrong as f64 / n as f64
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn assignment_matches_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for k in 1..=6 {
            for _ in 0..20 {
                let n = 12;
                let pred = labels((0..n).map(|_| rng.gen_range(0..k)).collect(), k);
                let truth = labels((0..n).map(|_| rng.gen_range(0..k)).collect(), k);
                let fast = clustering_error(&pred, &truth, k).unwrap().clustering_error;
                let slow = exhaustive_error(&pred, &truth, k);
                assert!((fast - slow).abs() < 1e-12, "K={k}: {fast} vs {slow}");
            }
        }
    }

    #[test]
    fn error_is_symmetric_and_point_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let k = 3;
        let n = 15;
        let a: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let b: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let e1 = clustering_error(&labels(a.clone(), k), &labels(b.clone(), k), k)
            .unwrap()
            .clustering_error;
        let e2 = clustering_error(&labels(b.clone(), k), &labels(a.clone(), k), k)
            .unwrap()
            .clustering_error;
        assert!((e1 - e2).abs() < 1e-12);

        let perm: Vec<usize> = {
            let mut p: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                p.swap(i, rng.gen_range(0..=i));
            }
            p
        };
        let pa: Vec<usize> = perm.iter().map(|&i| a[i]).collect();
        let pb: Vec<usize> = perm.iter().map(|&i| b[i]).collect();
        let e3 = clustering_error(&labels(pa, k), &labels(pb, k), k)
            .unwrap()
            .clustering_error;
        assert!((e1 - e3).abs() < 1e-12);
    }

    #[test]
    fn zero_error_iff_relabeling() {
        let truth = labels(vec![0, 1, 2, 0, 1, 2], 3);
        let relabel = labels(vec![2, 0, 1, 2, 0, 1], 3);
        assert_eq!(
            clustering_error(&relabel, &truth, 3).unwrap().clustering_error,
            0.0
        );
        let off = labels(vec![2, 0, 1, 2, 0, 0], 3);
        assert!(clustering_error(&off, &truth, 3).unwrap().clustering_error > 0.0);
    }

    #[test]
    fn bench_smoke_single_point() {
        let grid = [BenchPoint {
            col_dim: 8,
            row_dim: 8,
            points: 10,
            trials: 1,
        }];
        let result = bench_scaling(&grid, 1, 1).unwrap();
        assert_eq!(result.rows.len(), 1);
        assert!(result.rows[0].vectorized_tsc_secs > 0.0);
        assert!(result.rows[0].msc_trial_secs > 0.0);
    }

    #[test]
    fn bench_rejects_empty_grid() {
        assert!(bench_scaling(&[], 1, 1).is_err());
    }
}
