//! The multilinear clustering pipeline: random fiber sampling, per-trial
//! graph construction, pooling of the 2T realizations, and the final
//! spectral stage.
//!
//! Trials are embarrassingly parallel. Every random choice is drawn from an
//! RNG stream derived from `(seed, role, trial, item)`, so the output is
//! identical at any parallelism level.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::affinity::{ssc_affinity, tsc_affinity, SscParams, TscParams};
use crate::combine::{combine_addition, combine_projection, combine_quantile, combine_threshold};
use crate::data::{AffinityMatrix, Dataset, LabelVector, VectorDataset};
use crate::error::{Error, Result};
use crate::spectral::{spectral_cluster, SpectralParams};

/// Which graph builder runs on each fiber matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseMethod {
    /// TSC with the given neighbor count; `None` means `max(3, N/(6K))`.
    Tsc { q: Option<usize> },
    Ssc(SscParams),
}

/// How the 2T realizations are pooled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineRule {
    Addition,
    /// `None` defaults to `N/K - 1`.
    Threshold { q_c: Option<usize> },
    /// `None` defaults to `T` (the low median of 2T realizations).
    Quantile { level: Option<usize> },
    Projection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    WithReplacement,
    /// Per item, fiber indices do not repeat across trials until the pool
    /// is exhausted; then the pool reshuffles.
    WithoutReplacement,
}

/// Everything the orchestrator needs for one run.
#[derive(Debug, Clone)]
pub struct MscConfig {
    pub clusters: usize,
    pub trials: usize,
    pub base_method: BaseMethod,
    pub combine: CombineRule,
    pub sampling: SamplingMode,
    pub seed: u64,
    pub kmeans_restarts: usize,
}

impl MscConfig {
    /// Recommended defaults: TSC base, projection combine, sampling
    /// without replacement.
    pub fn new(clusters: usize, trials: usize, seed: u64) -> Self {
        Self {
            clusters,
            trials,
            base_method: BaseMethod::Tsc { q: None },
            combine: CombineRule::Projection,
            sampling: SamplingMode::WithoutReplacement,
            seed,
            kmeans_restarts: 20,
        }
    }
}

/// The fiber indices one trial drew: per item, which column of `A_i` and
/// which row of `A_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiberDraw {
    pub trial: usize,
    pub column_indices: Vec<usize>,
    pub row_indices: Vec<usize>,
}

// Stream-id layout for fiber RNG: tag in the top bits, then trial/cycle,
// then item.
fn fiber_stream(seed: u64, tag: u64, major: u64, item: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((tag << 56) | (major << 28) | item);
    rng
}

fn shuffled_pool(len: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..len).collect();
    for i in (1..len).rev() {
        pool.swap(i, rng.gen_range(0..=i));
    }
    pool
}

/// Index of the fiber item `i` uses in trial `t`, as a pure function of the
/// seed, so trials can be sampled in any order.
fn fiber_index(
    seed: u64,
    tag: u64,
    item: usize,
    trial: usize,
    pool_len: usize,
    mode: SamplingMode,
) -> usize {
    match mode {
        SamplingMode::WithReplacement => {
            let mut rng = fiber_stream(seed, tag, trial as u64, item as u64);
            rng.gen_range(0..pool_len)
        }
        SamplingMode::WithoutReplacement => {
            let cycle = (trial / pool_len) as u64;
            let mut rng = fiber_stream(seed, tag, cycle, item as u64);
            let pool = shuffled_pool(pool_len, &mut rng);
            pool[trial % pool_len]
        }
    }
}

const TAG_COLUMN: u64 = 1;
const TAG_ROW: u64 = 2;

/// Draws one column fiber and one row fiber per item for trial `t`,
/// returning the `D_c x N` and `D_r x N` fiber matrices plus the indices
/// used.
pub fn sample_fibers(
    dataset: &Dataset,
    trial: usize,
    cfg: &MscConfig,
) -> Result<(VectorDataset, VectorDataset, FiberDraw)> {
    let (dc, dr) = dataset.item_shape();
    let n = dataset.len();
    let mut cols = nalgebra::DMatrix::zeros(dc, n);
    let mut rows = nalgebra::DMatrix::zeros(dr, n);
    let mut column_indices = Vec::with_capacity(n);
    let mut row_indices = Vec::with_capacity(n);
    for (i, item) in dataset.items().iter().enumerate() {
        let cj = fiber_index(cfg.seed, TAG_COLUMN, i, trial, dr, cfg.sampling);
        let ri = fiber_index(cfg.seed, TAG_ROW, i, trial, dc, cfg.sampling);
        cols.set_column(i, &item.values().column(cj));
        rows.set_column(i, &item.values().row(ri).transpose());
        column_indices.push(cj);
        row_indices.push(ri);
    }
    let labels = dataset.labels().map(|l| l.to_vec());
    Ok((
        VectorDataset::new(cols, labels.clone())?,
        VectorDataset::new(rows, labels)?,
        FiberDraw {
            trial,
            column_indices,
            row_indices,
        },
    ))
}

/// What one run did: fiber draws, skipped trials, and per-stage wall time.
#[derive(Debug, Clone)]
pub struct MscReport {
    pub fiber_draws: Vec<FiberDraw>,
    pub skipped_trials: Vec<(usize, String)>,
    pub sampling_ms: f64,
    pub affinity_ms: f64,
    pub combine_ms: f64,
    pub spectral_ms: f64,
}

fn build_affinity(data: &VectorDataset, cfg: &MscConfig) -> Result<AffinityMatrix> {
    match &cfg.base_method {
        BaseMethod::Tsc { q } => {
            let q = q.unwrap_or_else(|| TscParams::default_q(data.len(), cfg.clusters));
            tsc_affinity(data, &TscParams { q })
        }
        BaseMethod::Ssc(params) => ssc_affinity(data, params),
    }
}

/// Resolved `q_c` for the threshold rule: average points per cluster minus
/// one.
pub fn default_threshold_qc(n: usize, k: usize) -> usize {
    (n / k).saturating_sub(1).max(1)
}

/// Runs the full pipeline: T trials of fiber sampling and graph
/// construction, pooling of the 2T realizations, then spectral clustering.
pub fn msc_cluster(dataset: &Dataset, cfg: &MscConfig) -> Result<(LabelVector, MscReport)> {
    let violations = dataset.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidDataset(violations));
    }
    let n = dataset.len();
    if cfg.trials < 1 {
        return Err(Error::InvalidConfig("need at least one trial".into()));
    }
    if n < cfg.clusters {
        return Err(Error::InvalidConfig(format!(
            "N={} is smaller than K={}",
            n, cfg.clusters
        )));
    }

    let start = Instant::now();
    let sampled: Vec<(VectorDataset, VectorDataset, FiberDraw)> = (0..cfg.trials)
        .map(|t| sample_fibers(dataset, t, cfg))
        .collect::<Result<_>>()?;
    let sampling_ms = start.elapsed().as_secs_f64() * 1e3;

    let start = Instant::now();
    let per_trial: Vec<(FiberDraw, Result<(AffinityMatrix, AffinityMatrix)>)> = sampled
        .into_par_iter()
        .map(|(cols, rows, draw)| {
            let result = (|| {
                let wc = build_affinity(&cols, cfg)?;
                let wr = build_affinity(&rows, cfg)?;
                Ok((wc, wr))
            })();
            (draw, result)
        })
        .collect();
    let affinity_ms = start.elapsed().as_secs_f64() * 1e3;

    let mut realizations = Vec::with_capacity(2 * cfg.trials);
    let mut fiber_draws = Vec::with_capacity(cfg.trials);
    let mut skipped_trials = Vec::new();
    for (draw, result) in per_trial {
        let trial = draw.trial;
        fiber_draws.push(draw);
        match result {
            Ok((wc, wr)) => {
                realizations.push(wc);
                realizations.push(wr);
            }
            Err(e) => skipped_trials.push((trial, e.to_string())),
        }
    }
    if realizations.is_empty() {
        return Err(Error::AllTrialsFailed(cfg.trials));
    }

    let start = Instant::now();
    let combined = match cfg.combine {
        CombineRule::Addition => combine_addition(&realizations)?,
        CombineRule::Threshold { q_c } => combine_threshold(
            &realizations,
            q_c.unwrap_or_else(|| default_threshold_qc(n, cfg.clusters)),
        )?,
        CombineRule::Quantile { level } => {
            let level = level.unwrap_or(cfg.trials).min(realizations.len());
            combine_quantile(&realizations, level)?
        }
        CombineRule::Projection => combine_projection(&realizations, cfg.clusters)?,
    };
    let combine_ms = start.elapsed().as_secs_f64() * 1e3;

    let start = Instant::now();
    let mut spectral_params = SpectralParams::new(cfg.clusters, cfg.seed);
    spectral_params.kmeans_restarts = cfg.kmeans_restarts;
    let labels = spectral_cluster(&combined, &spectral_params)?;
    let spectral_ms = start.elapsed().as_secs_f64() * 1e3;

    Ok((
        labels,
        MscReport {
            fiber_draws,
            skipped_trials,
            sampling_ms,
            affinity_ms,
            combine_ms,
            spectral_ms,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DataMatrix;
    use crate::eval::clustering_error;
    use crate::synth::{generate_uoms, Assignment, UomsSpec};
    use nalgebra::DMatrix;

    fn small_dataset() -> Dataset {
        let items = (0..4)
            .map(|i| DataMatrix::new(DMatrix::from_fn(3, 2, |r, c| (i * 10 + r * 2 + c) as f64)))
            .collect();
        Dataset::new(items, None).unwrap()
    }

    #[test]
    fn sampled_fibers_are_verbatim_fibers() {
        let d = small_dataset();
        let cfg = MscConfig::new(2, 3, 9);
        for t in 0..3 {
            let (cols, rows, draw) = sample_fibers(&d, t, &cfg).unwrap();
            for i in 0..d.len() {
                let a = d.items()[i].values();
                let expect_col = a.column(draw.column_indices[i]).clone_owned();
                assert_eq!(cols.columns().column(i).clone_owned(), expect_col);
                let expect_row = a.row(draw.row_indices[i]).transpose();
                assert_eq!(rows.columns().column(i).clone_owned(), expect_row);
            }
        }
    }

    #[test]
    fn without_replacement_exhausts_the_pool_before_repeating() {
        let d = small_dataset(); // 2 columns, 3 rows per item
        let cfg = MscConfig::new(2, 2, 5);
        let mut seen: Vec<Vec<usize>> = vec![Vec::new(); d.len()];
        for t in 0..2 {
            let (_, _, draw) = sample_fibers(&d, t, &cfg).unwrap();
            for (i, &c) in draw.column_indices.iter().enumerate() {
                seen[i].push(c);
            }
        }
        for used in &seen {
            let mut sorted = used.clone();
            sorted.sort();
            assert_eq!(sorted, vec![0, 1], "both columns used exactly once");
        }
        // Rows have a pool of 3; three trials must cover all of it.
        let cfg = MscConfig::new(2, 3, 5);
        let mut rows_seen: Vec<Vec<usize>> = vec![Vec::new(); d.len()];
        for t in 0..3 {
            let (_, _, draw) = sample_fibers(&d, t, &cfg).unwrap();
            for (i, &r) in draw.row_indices.iter().enumerate() {
                rows_seen[i].push(r);
            }
        }
        for used in &rows_seen {
            let mut sorted = used.clone();
            sorted.sort();
            assert_eq!(sorted, vec![0, 1, 2]);
        }
    }

    #[test]
    fn fiber_draws_are_deterministic() {
        let d = small_dataset();
        let cfg = MscConfig::new(2, 4, 77);
        for t in 0..4 {
            let (_, _, a) = sample_fibers(&d, t, &cfg).unwrap();
            let (_, _, b) = sample_fibers(&d, t, &cfg).unwrap();
            assert_eq!(a, b);
        }
    }

    fn uoms_dataset(seed: u64) -> Dataset {
        generate_uoms(&UomsSpec {
            clusters: 2,
            points: 20,
            col_dim: 12,
            row_dim: 12,
            col_latent: 2,
            row_latent: 2,
            noise_sigma: 0.0,
            seed,
            assignment: Assignment::Balanced,
        })
        .unwrap()
        .0
    }

    #[test]
    fn pipeline_recovers_noiseless_uoms_clusters() {
        let d = uoms_dataset(42);
        let cfg = MscConfig::new(2, 10, 42);
        let (labels, report) = msc_cluster(&d, &cfg).unwrap();
        assert!(report.skipped_trials.is_empty());
        assert_eq!(report.fiber_draws.len(), 10);
        let truth = LabelVector::new(d.labels().unwrap().to_vec(), 2).unwrap();
        let err = clustering_error(&labels, &truth, 2).unwrap().clustering_error;
        assert!(err <= 0.05, "clustering error {err}");
    }

    #[test]
    fn pipeline_is_deterministic_across_parallelism() {
        let d = uoms_dataset(7);
        let cfg = MscConfig::new(2, 6, 7);
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let pool4 = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let (a, _) = pool1.install(|| msc_cluster(&d, &cfg)).unwrap();
        let (b, _) = pool4.install(|| msc_cluster(&d, &cfg)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_configs_are_rejected() {
        let d = small_dataset();
        let mut cfg = MscConfig::new(5, 1, 0);
        assert!(msc_cluster(&d, &cfg).is_err()); // K > N
        cfg = MscConfig::new(2, 0, 0);
        assert!(msc_cluster(&d, &cfg).is_err()); // no trials
    }

    #[test]
    fn all_rules_recover_replicated_block_graph() {
        use crate::combine::combine_addition;
        use crate::data::AffinityMatrix;
        use crate::spectral::{spectral_cluster, SpectralParams};
        // 2T copies of the same block-diagonal realization must yield the
        // block partition under every rule.
        let n = 12;
        let mut w = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j && (i / 6 == j / 6) {
                    w[(i, j)] = 1.0;
                }
            }
        }
        let base = AffinityMatrix::new(w).unwrap();
        let copies: Vec<AffinityMatrix> = vec![base; 6];
        let truth = LabelVector::new((0..n).map(|i| i / 6).collect(), 2).unwrap();
        let combined = [
            combine_addition(&copies).unwrap(),
            combine_threshold(&copies, 5).unwrap(),
            combine_quantile(&copies, 3).unwrap(),
            combine_projection(&copies, 2).unwrap(),
        ];
        for w in combined {
            let labels = spectral_cluster(&w, &SpectralParams::new(2, 1)).unwrap();
            let err = clustering_error(&labels, &truth, 2).unwrap().clustering_error;
            assert_eq!(err, 0.0);
        }
    }
}
