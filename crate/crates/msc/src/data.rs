//! Core data types shared by every stage of the pipeline.
//!
//! A [`Dataset`] holds `N` matrix-shaped observations of identical shape
//! `D_c x D_r` (rows are column-fiber length, columns are row-fiber length).
//! [`VectorDataset`] is the flattened form used by the vectorized baselines.
//! All types are immutable after construction and safe to share across
//! threads.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// One matrix-shaped observation, `D_c x D_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// (D_c, D_r)
    pub fn shape(&self) -> (usize, usize) {
        (self.values.nrows(), self.values.ncols())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Column-major flattening to a length `D_c * D_r` vector.
    pub fn vectorized(&self) -> DVector<f64> {
        DVector::from_column_slice(self.values.as_slice())
    }
}

/// An ordered collection of `N` same-shaped matrices, optionally labeled.
#[derive(Debug, Clone)]
pub struct Dataset {
    items: Vec<DataMatrix>,
    labels: Option<Vec<usize>>,
}

impl Dataset {
    /// Builds a dataset, rejecting it if any invariant fails.
    pub fn new(items: Vec<DataMatrix>, labels: Option<Vec<usize>>) -> Result<Self> {
        let d = Self { items, labels };
        let violations = d.validate();
        if violations.is_empty() {
            Ok(d)
        } else {
            Err(Error::InvalidDataset(violations))
        }
    }

    /// Checks every invariant, returning one human-readable violation per
    /// failure. Empty means valid.
    pub fn validate(&self) -> Vec<String> {
        let mut violations = Vec::new();
        if self.items.len() < 2 {
            violations.push(format!("need at least 2 items, got {}", self.items.len()));
        }
        if let Some(first) = self.items.first() {
            let shape = first.shape();
            if shape.0 < 1 || shape.1 < 1 {
                violations.push(format!("degenerate shape {:?}", shape));
            }
            for (i, item) in self.items.iter().enumerate() {
                if item.shape() != shape {
                    violations.push(format!(
                        "shape mismatch at index {i}: {:?} vs {:?}",
                        item.shape(),
                        shape
                    ));
                }
                if !item.is_finite() {
                    violations.push(format!("non-finite entry in item {i}"));
                }
            }
        }
        if let Some(labels) = &self.labels {
            if labels.len() != self.items.len() {
                violations.push(format!(
                    "label count {} != item count {}",
                    labels.len(),
                    self.items.len()
                ));
            }
        }
        violations
    }

    pub fn items(&self) -> &[DataMatrix] {
        &self.items
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// (D_c, D_r) of every item.
    pub fn item_shape(&self) -> (usize, usize) {
        self.items[0].shape()
    }

    /// Flattens every item column-major into the columns of a `D x N`
    /// matrix, `D = D_c * D_r`. Labels carry through.
    pub fn vectorize(&self) -> VectorDataset {
        let (dc, dr) = self.item_shape();
        let n = self.items.len();
        let mut columns = DMatrix::zeros(dc * dr, n);
        for (i, item) in self.items.iter().enumerate() {
            columns.set_column(i, &item.vectorized());
        }
        VectorDataset {
            columns,
            labels: self.labels.clone(),
        }
    }
}

/// `N` data vectors stored as the columns of a `D x N` matrix.
#[derive(Debug, Clone)]
pub struct VectorDataset {
    columns: DMatrix<f64>,
    labels: Option<Vec<usize>>,
}

impl VectorDataset {
    pub fn new(columns: DMatrix<f64>, labels: Option<Vec<usize>>) -> Result<Self> {
        if columns.ncols() < 2 {
            return Err(Error::InvalidDataset(vec![format!(
                "need at least 2 columns, got {}",
                columns.ncols()
            )]));
        }
        if let Some(pos) = columns.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(vec![format!(
                "non-finite entry at flat index {pos}"
            )]));
        }
        if let Some(l) = &labels {
            if l.len() != columns.ncols() {
                return Err(Error::InvalidDataset(vec![format!(
                    "label count {} != column count {}",
                    l.len(),
                    columns.ncols()
                )]));
            }
        }
        Ok(Self { columns, labels })
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.columns
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Number of data vectors N.
    pub fn len(&self) -> usize {
        self.columns.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.ncols() == 0
    }

    /// Ambient dimension D.
    pub fn dim(&self) -> usize {
        self.columns.nrows()
    }
}

/// A nonnegative `N x N` edge-weight matrix: one graph realization.
///
/// Row-wise thresholding produces asymmetric intermediates; those are kept
/// as plain matrices and only wrapped once symmetrized.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    weights: DMatrix<f64>,
}

impl AffinityMatrix {
    /// Wraps a finalized (symmetric, nonnegative, finite) weight matrix.
    pub fn new(weights: DMatrix<f64>) -> Result<Self> {
        if weights.nrows() != weights.ncols() {
            return Err(Error::ShapeMismatch {
                expected: "square matrix".into(),
                got: format!("{}x{}", weights.nrows(), weights.ncols()),
            });
        }
        for i in 0..weights.nrows() {
            for j in 0..weights.ncols() {
                let w = weights[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidDataset(vec![format!(
                        "affinity entry ({i},{j}) = {w} is negative or non-finite"
                    )]));
                }
                if (w - weights[(j, i)]).abs() > 1e-12 * w.abs().max(1.0) {
                    return Err(Error::InvalidDataset(vec![format!(
                        "affinity not symmetric at ({i},{j})"
                    )]));
                }
            }
        }
        Ok(Self { weights })
    }

    /// Symmetrizes by averaging and clamps negatives to zero, then wraps.
    pub fn finalize(raw: &DMatrix<f64>) -> Self {
        let sym = (raw + raw.transpose()).map(|v| (v / 2.0).max(0.0));
        Self { weights: sym }
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.nrows() == 0
    }
}

/// Cluster assignments for N points, ids in `{0..K-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    assignments: Vec<usize>,
}

impl LabelVector {
    pub fn new(assignments: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(&bad) = assignments.iter().find(|&&id| id >= k) {
            return Err(Error::InvalidConfig(format!(
                "label {bad} out of range for K={k}"
            )));
        }
        Ok(Self { assignments })
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn three_items() -> Vec<DataMatrix> {
        (0..3)
            .map(|i| DataMatrix::new(DMatrix::from_fn(4, 5, |r, c| (i + r + c) as f64)))
            .collect()
    }

    #[test]
    fn valid_dataset_has_no_violations() {
        let d = Dataset::new(three_items(), None).unwrap();
        assert!(d.validate().is_empty());
    }

    #[test]
    fn shape_mismatch_is_reported_with_index() {
        let mut items = three_items();
        items[1] = DataMatrix::new(DMatrix::zeros(4, 6));
        let err = Dataset::new(items, None).unwrap_err();
        match err {
            Error::InvalidDataset(v) => {
                assert_eq!(v.len(), 1);
                assert!(v[0].contains("index 1"), "{v:?}");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn nan_entry_names_the_item() {
        let mut items = three_items();
        let mut m = items[2].values().clone();
        m[(0, 0)] = f64::NAN;
        items[2] = DataMatrix::new(m);
        let err = Dataset::new(items, None).unwrap_err();
        match err {
            Error::InvalidDataset(v) => assert!(v[0].contains("item 2"), "{v:?}"),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn vectorize_is_column_major() {
        let a = DataMatrix::new(dmatrix![1.0, 3.0; 2.0, 4.0]);
        let b = DataMatrix::new(dmatrix![5.0, 7.0; 6.0, 8.0]);
        let d = Dataset::new(vec![a, b], None).unwrap();
        let v = d.vectorize();
        assert_eq!(v.columns().column(0).as_slice(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(v.columns().column(1).as_slice(), &[5.0, 6.0, 7.0, 8.0]);
    }

    #[test]
    fn vectorize_round_trips() {
        let d = Dataset::new(three_items(), Some(vec![0, 1, 0])).unwrap();
        let v = d.vectorize();
        let (dc, dr) = d.item_shape();
        for n in 0..d.len() {
            let col = v.columns().column(n);
            let back = DMatrix::from_column_slice(dc, dr, col.as_slice());
            assert_eq!(&back, d.items()[n].values());
        }
        assert_eq!(v.labels(), d.labels());
    }

    #[test]
    fn affinity_rejects_asymmetry_and_negatives() {
        assert!(AffinityMatrix::new(dmatrix![0.0, 1.0; 0.5, 0.0]).is_err());
        assert!(AffinityMatrix::new(dmatrix![0.0, -1.0; -1.0, 0.0]).is_err());
        assert!(AffinityMatrix::new(dmatrix![0.0, 1.0; 1.0, 0.0]).is_ok());
    }

    #[test]
    fn finalize_symmetrizes_and_clamps() {
        let raw = dmatrix![0.0, 1.0; -0.5, 0.0];
        let a = AffinityMatrix::finalize(&raw);
        assert_eq!(a.weights()[(0, 1)], a.weights()[(1, 0)]);
        assert!(a.weights().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn label_vector_bounds() {
        assert!(LabelVector::new(vec![0, 1, 2], 3).is_ok());
        assert!(LabelVector::new(vec![0, 3], 3).is_err());
    }
}
