//! Markovianity and divisibility diagnostics, and classification of doubly
//! stochastic and unistochastic matrices.

mod divisibility;
mod markov;
mod unistochastic;

pub use divisibility::{solve_divisibility, DivisibilityReport, FEASIBILITY_TOL, MAX_ITERATIONS};
pub use markov::{check_markov_chain, check_markov_triple};
pub use unistochastic::{
    is_doubly_stochastic, search_unistochastic, unistochastic_verdict_3x3,
    unistochastic_witness_2x2, UnistochasticityResult, Verdict, DEFAULT_MAX_ITER,
    DEFAULT_RESTARTS, WITNESS_TOL,
};
