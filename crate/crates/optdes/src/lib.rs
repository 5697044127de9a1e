//! D-optimal experimental designs for multiple linear regression on the
//! hypercube `[-1,1]^K` with equi-correlated random coefficients.
//!
//! The random coefficient model reduces to a heteroscedastic fixed-effects
//! model whose variance function is a quadratic determined by three
//! dispersion parameters `(d0, d1, d2)`. This crate computes designs that
//! maximize the log-determinant of the information matrix, verifies any
//! candidate with an equivalence-theorem check that minimizes the
//! sensitivity function exactly over the box, and maps how the structure
//! of the optimal design (vertex-supported or with interior points)
//! depends on the dispersion parameters.
//!
//! Entry points:
//! - [`solvers::solve`] picks closed forms for `K = 2, 3` and a numeric
//!   rhombic optimizer otherwise;
//! - [`equivalence::kw_verify`] certifies or rejects arbitrary designs;
//! - [`solvers::grid_oracle`] is an independent brute-force baseline;
//! - [`regions::region_map`] and [`regions::conjecture_scan`] sweep the
//!   parameter plane.
//!
//! The `examples/` directory contains one runnable example per capability;
//! a thin `optdes` binary exposes the same operations on the command line.

pub mod cli;
pub mod config;
pub mod design;
pub mod equivalence;
pub mod error;
pub mod information;
pub mod model;
pub mod regions;
pub mod solvers;

pub use config::Tolerances;
pub use design::{DesignPoint, DiscreteDesign, Orbit, RhombicDesign};
pub use equivalence::{kw_verify, KWReport, Verdict};
pub use error::{Error, Result};
pub use information::{GammaBlocks, InfoBlocks};
pub use model::{DispersionSpec, SymPair};
pub use solvers::{Design, SolveMethod, SolveResult};
