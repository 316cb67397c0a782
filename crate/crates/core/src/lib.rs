//! Generalized stochastic systems and their Hilbert-space representation.
//!
//! A system is a finite configuration space, a time grid containing 0, a
//! column-stochastic transition matrix Γ(t) for every grid time with
//! Γ(0) = 𝟙, an initial distribution, and random variables. From Γ the crate
//! builds an evolution operator Θ with |Θ_ij|² = Γ_ij, density matrices and
//! Born-rule probabilities, the Kraus channel, and finally a unitary dilation
//! on N³ configurations whose unistochastic transition matrix marginalizes
//! back to Γ.
//!
//! Configuration indices are 0-based throughout the library; the CLI and the
//! JSON document format use 1-based indices where they appear.

// `!(x <= tol)` is used on purpose: NaN must fail every tolerance check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod dilation;
pub mod error;
pub mod generators;
pub mod hilbert;
pub mod linalg;
pub mod system;

pub use error::{Error, Result};
pub use system::{
    evolve_probabilities, expectation, validate_system, Condition, ProbabilityVector,
    RandomVariable, StochasticSystem, TimeGrid, TransitionMatrix, ValidationReport, Violation,
};
