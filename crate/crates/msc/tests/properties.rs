//! Randomized property tests for the serialization layer and the metric.

use nalgebra::DMatrix;
use proptest::prelude::*;

use msc::data::LabelVector;
use msc::eval::clustering_error;
use msc::io::{read_csv_matrix, read_labels, write_csv_matrix, write_labels};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_matrix_round_trips_exactly(
        rows in 1usize..6,
        cols in 1usize..6,
        cells in prop::collection::vec(-1e6f64..1e6, 36),
    ) {
        let m = DMatrix::from_fn(rows, cols, |r, c| cells[r * 6 + c]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        write_csv_matrix(&path, &m).unwrap();
        let back = read_csv_matrix(&path).unwrap();
        prop_assert_eq!(m, back);
    }

    #[test]
    fn labels_round_trip(labels in prop::collection::vec(0usize..10, 1..50)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.csv");
        write_labels(&path, &labels).unwrap();
        prop_assert_eq!(read_labels(&path).unwrap(), labels);
    }

    #[test]
    fn error_is_invariant_under_relabeling(
        pred in prop::collection::vec(0usize..4, 8..30),
        perm_seed in 0usize..24,
    ) {
        let k = 4;
        let truth: Vec<usize> = pred.iter().map(|&p| (p + 1) % k).collect();
        // Apply one of the 4! relabelings of the predictions.
        let mut perm: Vec<usize> = (0..k).collect();
        let mut s = perm_seed;
        for i in (1..k).rev() {
            perm.swap(i, s % (i + 1));
            s /= i + 1;
        }
        let relabeled: Vec<usize> = pred.iter().map(|&p| perm[p]).collect();
        let a = clustering_error(
            &LabelVector::new(pred, k).unwrap(),
            &LabelVector::new(truth.clone(), k).unwrap(),
            k,
        ).unwrap().clustering_error;
        let b = clustering_error(
            &LabelVector::new(relabeled, k).unwrap(),
            &LabelVector::new(truth, k).unwrap(),
            k,
        ).unwrap().clustering_error;
        prop_assert_eq!(a, b);
    }

    #[test]
    fn perfect_predictions_have_zero_error(
        truth in prop::collection::vec(0usize..5, 5..40),
    ) {
        let k = 5;
        let report = clustering_error(
            &LabelVector::new(truth.clone(), k).unwrap(),
            &LabelVector::new(truth, k).unwrap(),
            k,
        ).unwrap();
        prop_assert_eq!(report.clustering_error, 0.0);
    }
}
