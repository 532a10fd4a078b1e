//! Multilinear subspace clustering for collections of matrix-shaped data.
//!
//! Data items are matrices assumed to come from a union of multilinear
//! subspaces: each `A_n = U_k Y_n V_k^T` for cluster-specific orthonormal
//! bases. Instead of vectorizing, the pipeline repeatedly samples one random
//! column and one random row fiber per item, builds an affinity graph per
//! fiber matrix with a vector subspace-clustering method (TSC or SSC), pools
//! the resulting graph realizations, and spectral-clusters the pooled graph.
//!
//! ```
//! use msc::pipeline::{msc_cluster, MscConfig};
//! use msc::synth::{generate_uoms, Assignment, UomsSpec};
//! use msc::eval::clustering_error;
//! use msc::data::LabelVector;
//!
//! let (dataset, _model) = generate_uoms(&UomsSpec {
//!     clusters: 2,
//!     points: 20,
//!     col_dim: 12,
//!     row_dim: 12,
//!     col_latent: 2,
//!     row_latent: 2,
//!     noise_sigma: 0.0,
//!     seed: 42,
//!     assignment: Assignment::Balanced,
//! })
//! .unwrap();
//!
//! let (labels, _report) = msc_cluster(&dataset, &MscConfig::new(2, 10, 42)).unwrap();
//! let truth = LabelVector::new(dataset.labels().unwrap().to_vec(), 2).unwrap();
//! let report = clustering_error(&labels, &truth, 2).unwrap();
//! assert!(report.clustering_error <= 0.05);
//! ```

pub mod affinity;
pub mod combine;
pub mod data;
pub mod error;
pub mod eval;
pub mod io;
pub mod pipeline;
pub mod spectral;
pub mod synth;

pub use data::{AffinityMatrix, DataMatrix, Dataset, LabelVector, VectorDataset};
pub use error::{Error, Result};

// The guide's code blocks double as doc-tests so the book cannot drift from
// the library.
#[cfg(doctest)]
mod book {
    macro_rules! book_chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }
    book_chapter!(model, "../../../book/src/model.md");
    book_chapter!(generating_data, "../../../book/src/generating-data.md");
    book_chapter!(tsc, "../../../book/src/tsc.md");
    book_chapter!(ssc, "../../../book/src/ssc.md");
    book_chapter!(spectral, "../../../book/src/spectral.md");
    book_chapter!(pipeline, "../../../book/src/pipeline.md");
    book_chapter!(combining, "../../../book/src/combining.md");
    book_chapter!(evaluation, "../../../book/src/evaluation.md");
}
