//! Worst-case-optimal linear fusion under overlapping covariance bounds.
//!
//! The library estimates a state from stacked noisy estimates whose joint
//! error correlation is only partially known through multiple, possibly
//! overlapping bounds `W_b P W_b^T <= X_b`. It computes a fusion gain and a
//! covariance bound that are worst-case consistent for every admissible
//! correlation, via a semidefinite program over the Kahan family of
//! circumscribing ellipsoids, together with exact feasibility tests, classic
//! covariance-intersection baselines, a brute-force verification oracle, and
//! a cooperative-localization simulator.

// Links the system BLAS/LAPACK used by the semidefinite solver.
use openblas_src as _;

pub mod baselines;
pub mod error;
pub mod feasibility;
pub mod info;
pub mod linalg;
pub mod oracle;
pub mod sim;
pub mod solver;
pub mod synth;

pub use error::{OciError, Result};
pub use linalg::Tolerances;
