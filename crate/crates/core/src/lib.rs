//! Semi-supervised classification with sample Fermat distances.
//!
//! The Fermat distance between two sample points is the smallest
//! power-`alpha` path length through the pooled (labeled and unlabeled)
//! sample, which shortens paths through dense regions. This crate builds the
//! adjacency graphs, computes the distance matrix, and provides the weighted
//! k-NN classifier and an MDS-embedding plus linear SVM classifier on top of
//! it, together with synthetic data generators and an experiment harness.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod classifiers;
pub mod datagen;
pub mod dataset;
pub mod embedding;
pub mod error;
pub mod experiment;
pub mod fermat;
pub mod io;
pub mod matrix;
pub mod point_graph;
pub mod svm;

pub use classifiers::{
    default_k, default_sigma_grid, fd_wknn_predict, naive_knn_predict, select_sigma_cv,
    theoretical_k, weighted_knn_predict, FdWknnConfig, KRule, WknnConfig,
};
pub use datagen::{
    estimate_intrinsic_dim, generate_two_moon, generate_vmf_clusters, sample_labeled_indices,
    TwoMoonModel, TwoMoonVariant, VmfClusterModel,
};
pub use dataset::LabeledDataset;
pub use embedding::{
    choose_target_dim, classical_mds, fd_svm_pipeline, fd_svm_predict, Embedding, FdSvmConfig,
    TargetDim,
};
pub use error::{FermatError, Result};
pub use fermat::{
    extend_out_of_sample, fermat_matrix, fermat_matrix_with_workers, power_path_distances,
    FermatGraph, FermatMatrix, FermatParams,
};
pub use matrix::SquareMatrix;
pub use point_graph::{
    build_complete_graph, build_knn_graph, build_knn_mst_graph, build_mst, union_graphs,
    AdjacencyGraph, Edge, GraphKind, PointCloud,
};
pub use svm::{svm_predict, train_linear_svm, LinearSvmModel};
