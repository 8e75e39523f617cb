//! Patterson-Sullivan measures on the boundaries of graph covering trees,
//! the spectral triple they induce on the free-group boundary, and zeta
//! function fingerprints for graph comparison.

pub mod boundary;
pub mod compare;
pub mod corpus;
pub mod covering;
pub mod error;
pub mod graph;
pub mod measure;
pub mod spectral;

pub use boundary::{
    boundary_distance, cross_ratio, cross_ratio_log2, pullback_measure, reconstruct_ball,
    tripod_center, BoundaryMethod, BoundaryWordApprox, Reconstruction, ReconstructionWitness,
};
pub use compare::{
    compare, enumerate_choices, fingerprint, fingerprint_set, iso_oracle, ChoiceId, CompareVerdict,
    Fingerprint, Outcome,
};
pub use covering::{
    busemann, critical_exponent, displacement, poincare_partial, ps_measure_tree, sphere_sizes,
    HashimotoMatrix, TreeMethod, TreePath,
};
pub use error::{Error, Result};
pub use graph::{
    betti, canonical_presentation, free_reduce, spanning_presentation, validate, Arrangement, Dart,
    Letter, MultiGraph, Presentation, ReducedWord, ValidationReport, VertexId,
};
pub use measure::{CylinderMeasure, PulledBackMeasure, Side};
pub use spectral::{
    detail_coefficients, detail_coefficients_gram_schmidt, dirac_eigenvalue, filtration_dim,
    genus_from_zeta, zeta_eval, zeta_one_closed, Symbol, ZetaSeries, ZetaValue,
};
