//! Text dump of a chain.
//!
//! ```text
//! n 1 v 2 l 1 states 3
//! 1:0 2:0 1/2
//! ```
//!
//! The header gives input length, variable count, output length and state
//! count. Each further line is an edge `u w num/den` with states written as
//! `line:hexmemory`; a normalized chain suffixes the copy number as `#c`.
//! Edges are listed by source in chain order, then by target.

use std::fmt::Write as _;

use bpwhile_core::params::format_rational;
use bpwhile_core::Chain;

pub fn state_name(c: &Chain, i: usize) -> String {
    let base = c.state(i).label();
    match c.copy(i) {
        0 => base,
        k => format!("{base}#{k}"),
    }
}

pub fn dump_chain(c: &Chain) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "n {} v {} l {} states {}", c.n_inputs(), c.n_vars(), c.n_outputs(), c.len());
    for u in 0..c.len() {
        let mut edges: Vec<_> = c.edges(u).to_vec();
        edges.sort_by_key(|&(w, _)| w);
        for (w, p) in edges {
            let _ = writeln!(out, "{} {} {}", state_name(c, u), state_name(c, w), format_rational(&p.to_rational()));
        }
    }
    out
}
