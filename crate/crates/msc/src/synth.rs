//! Synthetic data from the union-of-subspaces (UOS) and
//! union-of-multilinear-subspaces (UOMS) generative models.
//!
//! UOS: each vector is `x_n = U_k y_n` for a random orthonormal basis `U_k`
//! and a standard-normal latent `y_n`. UOMS: each matrix is
//! `A_n = U_k Y_n V_k^T` with orthonormal column and row bases. Optional
//! additive Gaussian noise extends both models; `noise_sigma = 0` is the
//! exact model.
//!
//! Generation is a pure function of the spec. Per-item RNG streams are
//! derived from `(seed, item index)` so items may be produced in any order
//! or in parallel without changing the output.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::{DataMatrix, Dataset, VectorDataset};
use crate::error::{Error, Result};

/// How items are assigned to clusters during generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Assignment {
    /// Draw the cluster uniformly at random per item.
    Uniform,
    /// Round-robin: item `n` goes to cluster `n mod K`.
    #[default]
    Balanced,
}

/// Parameters for UOS generation.
#[derive(Debug, Clone)]
pub struct UosSpec {
    pub clusters: usize,
    pub points: usize,
    pub ambient_dim: usize,
    pub latent_dim: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    pub assignment: Assignment,
}

/// Parameters for UOMS generation. `col_dim x row_dim` is the item shape;
/// latent dimension is `col_latent * row_latent`.
#[derive(Debug, Clone)]
pub struct UomsSpec {
    pub clusters: usize,
    pub points: usize,
    pub col_dim: usize,
    pub row_dim: usize,
    pub col_latent: usize,
    pub row_latent: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    pub assignment: Assignment,
}

/// The K orthonormal bases of a UOS model.
#[derive(Debug, Clone)]
pub struct UosModel {
    pub bases: Vec<DMatrix<f64>>,
}

/// The K pairs of orthonormal column/row bases of a UOMS model.
#[derive(Debug, Clone)]
pub struct UomsModel {
    pub col_bases: Vec<DMatrix<f64>>,
    pub row_bases: Vec<DMatrix<f64>>,
}

/// RNG stream for one logical index under one seed.
fn stream(seed: u64, idx: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(idx);
    rng
}

// Stream ids: items use 0..N, bases use the top of the id space.
const BASIS_STREAM_BASE: u64 = u64::MAX - (1 << 20);

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Orthonormalizes a Gaussian matrix via QR; the sign fix on the R diagonal
/// makes the distribution uniform over the Stiefel manifold.
pub fn random_orthonormal_basis(
    rows: usize,
    cols: usize,
    rng: &mut ChaCha8Rng,
) -> Result<DMatrix<f64>> {
    if cols > rows {
        return Err(Error::InvalidConfig(format!(
            "cannot build {cols} orthonormal columns in dimension {rows}"
        )));
    }
    let g = gaussian_matrix(rows, cols, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..cols {
        if r[(j, j)] < 0.0 {
            for i in 0..rows {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    Ok(q)
}

fn assign_cluster(n: usize, k: usize, mode: Assignment, rng: &mut ChaCha8Rng) -> usize {
    match mode {
        Assignment::Balanced => n % k,
        Assignment::Uniform => rng.gen_range(0..k),
    }
}

/// Generates a UOS dataset together with the model it was drawn from.
pub fn generate_uos(spec: &UosSpec) -> Result<(VectorDataset, UosModel)> {
    if spec.clusters < 1 || spec.points < 2 {
        return Err(Error::InvalidConfig(format!(
            "need K >= 1 and N >= 2, got K={} N={}",
            spec.clusters, spec.points
        )));
    }
    if spec.latent_dim > spec.ambient_dim {
        return Err(Error::InvalidConfig(format!(
            "latent dimension {} exceeds ambient {}",
            spec.latent_dim, spec.ambient_dim
        )));
    }
    if spec.noise_sigma < 0.0 {
        return Err(Error::InvalidConfig("negative noise sigma".into()));
    }
    let bases: Vec<DMatrix<f64>> = (0..spec.clusters)
        .map(|k| {
            let mut rng = stream(spec.seed, BASIS_STREAM_BASE + k as u64);
            random_orthonormal_basis(spec.ambient_dim, spec.latent_dim, &mut rng)
        })
        .collect::<Result<_>>()?;

    let mut columns = DMatrix::zeros(spec.ambient_dim, spec.points);
    let mut labels = Vec::with_capacity(spec.points);
    for n in 0..spec.points {
        let mut rng = stream(spec.seed, n as u64);
        let k = assign_cluster(n, spec.clusters, spec.assignment, &mut rng);
        let latent: DVector<f64> =
            DVector::from_fn(spec.latent_dim, |_, _| rng.sample(StandardNormal));
        let mut x = &bases[k] * latent;
        if spec.noise_sigma > 0.0 {
            for v in x.iter_mut() {
                *v += spec.noise_sigma * rng.sample::<f64, _>(StandardNormal);
            }
        }
        columns.set_column(n, &x);
        labels.push(k);
    }
    let data = VectorDataset::new(columns, Some(labels))?;
    Ok((data, UosModel { bases }))
}

/// Generates a UOMS dataset together with the model it was drawn from.
pub fn generate_uoms(spec: &UomsSpec) -> Result<(Dataset, UomsModel)> {
    if spec.clusters < 1 || spec.points < 2 {
        return Err(Error::InvalidConfig(format!(
            "need K >= 1 and N >= 2, got K={} N={}",
            spec.clusters, spec.points
        )));
    }
    if spec.col_latent > spec.col_dim || spec.row_latent > spec.row_dim {
        return Err(Error::InvalidConfig(
            "latent dimensions must not exceed ambient dimensions".into(),
        ));
    }
    if spec.noise_sigma < 0.0 {
        return Err(Error::InvalidConfig("negative noise sigma".into()));
    }
    let mut col_bases = Vec::with_capacity(spec.clusters);
    let mut row_bases = Vec::with_capacity(spec.clusters);
    for k in 0..spec.clusters {
        let mut rng = stream(spec.seed, BASIS_STREAM_BASE + 2 * k as u64);
        col_bases.push(random_orthonormal_basis(
            spec.col_dim,
            spec.col_latent,
            &mut rng,
        )?);
        let mut rng = stream(spec.seed, BASIS_STREAM_BASE + 2 * k as u64 + 1);
        row_bases.push(random_orthonormal_basis(
            spec.row_dim,
            spec.row_latent,
            &mut rng,
        )?);
    }

    let mut items = Vec::with_capacity(spec.points);
    let mut labels = Vec::with_capacity(spec.points);
    for n in 0..spec.points {
        let mut rng = stream(spec.seed, n as u64);
        let k = assign_cluster(n, spec.clusters, spec.assignment, &mut rng);
        let latent = gaussian_matrix(spec.col_latent, spec.row_latent, &mut rng);
        let mut a = &col_bases[k] * latent * row_bases[k].transpose();
        if spec.noise_sigma > 0.0 {
            for v in a.iter_mut() {
                *v += spec.noise_sigma * rng.sample::<f64, _>(StandardNormal);
            }
        }
        items.push(DataMatrix::new(a));
        labels.push(k);
    }
    let data = Dataset::new(items, Some(labels))?;
    Ok((data, UomsModel { col_bases, row_bases }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn gram_error(u: &DMatrix<f64>) -> f64 {
        let g = u.transpose() * u;
        let eye = DMatrix::identity(u.ncols(), u.ncols());
        (g - eye).abs().max()
    }

    #[test]
    fn basis_columns_are_orthonormal() {
        let mut rng = stream(7, 0);
        let u = random_orthonormal_basis(4, 2, &mut rng).unwrap();
        assert!(gram_error(&u) <= 1e-10);
    }

    #[test]
    fn square_basis_is_orthogonal() {
        let mut rng = stream(3, 0);
        let u = random_orthonormal_basis(5, 5, &mut rng).unwrap();
        assert!(gram_error(&u) <= 1e-10);
        assert_abs_diff_eq!(u.determinant().abs(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn basis_is_deterministic_per_seed() {
        let a = random_orthonormal_basis(4, 2, &mut stream(11, 5)).unwrap();
        let b = random_orthonormal_basis(4, 2, &mut stream(11, 5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn basis_rejects_wide_request() {
        assert!(random_orthonormal_basis(2, 4, &mut stream(0, 0)).is_err());
    }

    fn uos_spec() -> UosSpec {
        UosSpec {
            clusters: 2,
            points: 12,
            ambient_dim: 10,
            latent_dim: 2,
            noise_sigma: 0.0,
            seed: 42,
            assignment: Assignment::Balanced,
        }
    }

    #[test]
    fn noiseless_uos_lies_in_its_subspace() {
        let (data, model) = generate_uos(&uos_spec()).unwrap();
        let labels = data.labels().unwrap().to_vec();
        for n in 0..data.len() {
            let u = &model.bases[labels[n]];
            let x = data.columns().column(n).clone_owned();
            let residual = &x - u * (u.transpose() * &x);
            assert!(residual.norm() <= 1e-8, "item {n}");
        }
    }

    #[test]
    fn single_line_has_rank_one() {
        let spec = UosSpec {
            clusters: 1,
            latent_dim: 1,
            ..uos_spec()
        };
        let (data, _) = generate_uos(&spec).unwrap();
        assert_eq!(data.columns().clone_owned().rank(1e-8), 1);
    }

    fn uoms_spec() -> UomsSpec {
        UomsSpec {
            clusters: 2,
            points: 10,
            col_dim: 8,
            row_dim: 6,
            col_latent: 2,
            row_latent: 3,
            noise_sigma: 0.0,
            seed: 42,
            assignment: Assignment::Balanced,
        }
    }

    #[test]
    fn noiseless_uoms_fibers_live_in_the_factor_subspaces() {
        let (data, model) = generate_uoms(&uoms_spec()).unwrap();
        let labels = data.labels().unwrap().to_vec();
        for (n, item) in data.items().iter().enumerate() {
            let u = &model.col_bases[labels[n]];
            let v = &model.row_bases[labels[n]];
            let a = item.values();
            let col_resid = a - u * (u.transpose() * a);
            let row_resid = a - (a * v) * v.transpose();
            assert!(col_resid.norm() <= 1e-8, "column space, item {n}");
            assert!(row_resid.norm() <= 1e-8, "row space, item {n}");
        }
    }

    #[test]
    fn noiseless_uoms_rank_bounded_by_latent() {
        let (data, _) = generate_uoms(&uoms_spec()).unwrap();
        for item in data.items() {
            assert!(item.values().clone().rank(1e-8) <= 2);
        }
    }

    #[test]
    fn rank_one_latent_gives_outer_products() {
        let spec = UomsSpec {
            col_latent: 1,
            row_latent: 1,
            ..uoms_spec()
        };
        let (data, _) = generate_uoms(&spec).unwrap();
        for item in data.items() {
            assert_eq!(item.values().clone().rank(1e-8), 1);
        }
    }

    #[test]
    fn vectorized_uoms_lies_in_kronecker_subspace() {
        let (data, model) = generate_uoms(&uoms_spec()).unwrap();
        let labels = data.labels().unwrap().to_vec();
        for (n, item) in data.items().iter().enumerate() {
            let u = &model.col_bases[labels[n]];
            let v = &model.row_bases[labels[n]];
            let basis = v.kronecker(u);
            let x = item.vectorized();
            let residual = &x - &basis * (basis.transpose() * &x);
            assert!(residual.norm() <= 1e-8, "item {n}");
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let (a, _) = generate_uoms(&uoms_spec()).unwrap();
        let (b, _) = generate_uoms(&uoms_spec()).unwrap();
        for (x, y) in a.items().iter().zip(b.items()) {
            assert_eq!(x.values(), y.values());
        }
        assert_eq!(a.labels(), b.labels());
    }

    #[test]
    fn uniform_assignment_stays_in_range() {
        let spec = UomsSpec {
            assignment: Assignment::Uniform,
            points: 30,
            clusters: 3,
            ..uoms_spec()
        };
        let (data, _) = generate_uoms(&spec).unwrap();
        assert!(data.labels().unwrap().iter().all(|&k| k < 3));
    }
}
