//! Good covers, the Čech coboundary, partitions of unity and the
//! Mayer–Vietoris contraction on the Čech–de Rham double complex.
//!
//! Restriction to an intersection is only a change of [`Domain`] tag: all
//! forms share the ambient coordinates, so no transition maps appear.
//!
//! [`Domain`]: crate::exterior::Domain

mod cochain;
mod cover;
mod shape;

pub use cochain::{
    check_partition, coboundary, glue_cochain0, multi_indices, mv_homotopy_k, partition_of_unity, Cochain, GluedForm,
};
pub use cover::{
    assemble_cover, guard_all, sample_region, sample_simplex, validate_cover, DeclaredSimplex, CoverSet, GoodCover, SimplexInfo, ValidationReport, Violation,
    MIN_SAMPLES, ROUND_TRIP_TOL, SUPPORT_TOL,
};
pub use shape::{Realized, Shape};

use crate::expr::ExprError;
use crate::exterior::ExteriorError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CechError {
    #[error("simplex {0} is not declared in the nerve")]
    MissingSimplex(String),
    #[error("malformed simplex {0:?}")]
    BadSimplex(Vec<usize>),
    #[error("degree mismatch: expected {expected}, found {found}")]
    Degree { expected: usize, found: usize },
    #[error("could not sample points of simplex {0:?}")]
    Sampling(Vec<usize>),
    #[error("point {0:?} lies outside every cover set")]
    OutsideCover(Vec<f64>),
    #[error("partition of unity vanishes at {0:?}")]
    PartitionVanishes(Vec<f64>),
    #[error("cochain is not δ-closed on {simplex}: {value:e}")]
    NotCocycle { simplex: String, value: f64 },
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}
