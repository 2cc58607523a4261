//! Nearest admissible matrix pairs for discrete-time descriptor systems.
//!
//! Given a square pair `(E, A)` describing `E x(k+1) = A x(k)`, this crate
//! computes a nearby pair `(Ê, Â)` that is regular, of index at most one,
//! stable, and has `rank(Ê) = r`. Admissible rank-`r` pairs are written as
//!
//! ```text
//! Ê = W [I_r 0; 0 0] T,    Â = W [UB 0; 0 I_{n-r}] T
//! ```
//!
//! with `U` orthogonal and `B` a symmetric positive semidefinite contraction,
//! and the Frobenius distance is minimized by block coordinate descent over
//! `W`, `T` and `(U, B)`.
//!
//! Modules:
//! - [`numerics`]: rank, spectral norm, and the two feasible-set projections.
//! - [`pencil`]: regularity, finite spectrum, index and stability analysis.
//! - [`param`]: the `(W, T, U, B)` parametrization and its objective.
//! - [`solver`]: block coordinate descent, the inner fast gradient method,
//!   and the rank sweep.
//! - [`gallery`]: test instances (Grcar, scaled all-ones, fixtures).
//! - [`io`]: the plain-text matrix file format and report types.

pub mod error;
pub mod gallery;
pub mod io;
pub mod numerics;
pub mod param;
pub mod pencil;
pub mod solver;

pub use error::{Error, Result};
pub use nalgebra::DMatrix;
pub use numerics::Tolerances;
pub use param::ParamState;
pub use pencil::{AdmissibilityReport, MatrixPair, SpectrumEntry};
pub use solver::{SolveResult, SolverConfig, Termination};

/// Dense real matrix used throughout the crate.
pub type Matrix = DMatrix<f64>;
