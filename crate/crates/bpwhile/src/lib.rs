//! Command line, verdict records, chain dumps and the bundled corpus for
//! the `bpwhile-core` analyses.

pub mod cli;
pub mod corpus;
pub mod dump;
pub mod ops;
pub mod parallel;
pub mod record;
