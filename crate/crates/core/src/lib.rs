//! Exact analysis of BPWhile programs: boolean while-programs with fair coins.
//!
//! A program on a fixed input is a finite discrete-time Markov chain over
//! `(memory, line)` states. Everything in this crate works on that chain with
//! exact rational arithmetic: output distributions come from a linear solve,
//! almost-sure termination from reachability, and the privacy checks compare
//! distributions of neighboring inputs.
//!
//! The crate is `no_std` (with `alloc`); IO, the command line and file formats
//! live in the `bpwhile` companion crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod bits;
pub mod chain;
pub mod divergence;
pub mod dist;
pub mod dpcheck;
pub mod error;
pub mod interval;
pub mod lang;
pub mod params;
pub mod qbf;
pub mod random;
pub mod reach;
pub mod reductions;
pub mod solve;

pub use bits::BitString;
pub use chain::{build_chain, normalize_chain, zero_recurrent, Chain, EdgeOracle, Limits};
pub use dist::{conditional_distribution, hitting_probabilities, output_distribution, Dist, Outcome};
pub use error::Error;
pub use lang::{desugar, parse, Prob, ProgState, Program};

/// Exact rational numbers, canonical with a positive denominator.
pub type Rational = num_rational::BigRational;

pub type Result<T, E = Error> = core::result::Result<T, E>;
