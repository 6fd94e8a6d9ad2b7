//! Reconstruction of smooth families of primitives from local ones.
//!
//! Four pipelines share the same inputs (a closed family `ω_x` and a good
//! cover) and produce a δ-closed 0-cochain of primitives:
//!
//! * [`reconstruct_deg1`] for families of 1-forms, gluing local functions
//!   with overlap constants (chain mode) or with a reference primitive
//!   (paper mode);
//! * [`reconstruct_paper_direct`] for `p ≥ 2`, consuming a reference
//!   primitive one parameter value at a time;
//! * [`reconstruct_zigzag`] for `p ≥ 2`, descending through the double
//!   complex with per-simplex homotopies, solving for constants and
//!   ascending with the Mayer–Vietoris contraction. It never consults a
//!   reference primitive, so its output is symbolic in `x`.

mod deg1;
mod family;
mod paper;
mod smooth;
mod tol;
mod verify;
mod zigzag;

pub use deg1::{extend_constants, local_primitives, overlap_constants, reconstruct_deg1, Deg1Mode, Extension};
pub use family::{linspace_cells, FamilySpec, Grid, Provider};
pub use paper::reconstruct_paper_direct;
pub use smooth::{probe_provider, probe_reconstruction, smoothness_report, AxisProbe, ProbeSpec, SmoothnessReport};
pub use tol::Tolerances;
pub use verify::{delta_closed, mismatch, oracle_spread, region_grid, residual, Check, CommonTols, Glued, Output, Reconstruction};
pub use zigzag::{min_norm_solve, reconstruct_zigzag, LinearSolve};

use crate::cech::CechError;
use crate::expr::ExprError;
use crate::exterior::ExteriorError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GlueError {
    /// Closed but not exact: overlap constants do not close up, or the
    /// constants equation has no solution.
    #[error("family is not exact: defect {defect:e} on {location}")]
    NotExact { defect: f64, location: String },
    #[error("{what} on {location} varies by {spread:e} (tolerance {tol:e})")]
    NotConstant { what: String, location: String, spread: f64, tol: f64 },
    #[error("family is not closed: |dω| = {0:e}")]
    NotClosed(f64),
    #[error("reference primitive misses ω by {0:e}")]
    ProviderResidual(f64),
    #[error("{0}")]
    Config(String),
    #[error("simplex {0} has no chart")]
    MissingChart(String),
    #[error(transparent)]
    Cech(#[from] CechError),
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}
