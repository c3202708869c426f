//! Numerical toolkit for Calabi invariants of compactly supported
//! Hamiltonian dynamics on `R^{2n}`.
//!
//! The standard symplectic form is `ω = Σ dq_i ∧ dp_i` and Hamiltonian
//! vector fields satisfy `ι_{X_H} ω = dH`, so `X_H = (∂H/∂p, −∂H/∂q)`.

pub mod calabi;
pub mod conventions;
pub mod error;
pub mod exprlang;
pub mod genfun;
pub mod geom;
pub mod hamflow;
pub mod rotations;

pub use conventions::Conventions;
pub use error::{Error, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
