//! Reachability and the almost-sure termination decision.
//!
//! A program terminates almost surely iff, on every input, every reachable
//! state has a path to a final state.

use alloc::collections::VecDeque;
use alloc::vec;

use crate::bits::BitString;
use crate::chain::{build_chain, Chain, Limits};
use crate::lang::{ProgState, Program};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    AlmostSure,
    NotAlmostSure,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ASTVerdict {
    pub decision: Termination,
    /// A reachable state with no path to a final state, and its input.
    pub witness: Option<(BitString, ProgState)>,
}

impl ASTVerdict {
    pub fn terminates(&self) -> bool {
        self.decision == Termination::AlmostSure
    }
}

/// Whether some final state is reachable from state `s` through
/// positive-probability edges.
pub fn can_reach_final(c: &Chain, s: usize) -> bool {
    let mut seen = vec![false; c.len()];
    let mut queue = VecDeque::from([s]);
    seen[s] = true;
    while let Some(u) = queue.pop_front() {
        if c.is_final(u) {
            return true;
        }
        for &(w, _) in c.edges(u) {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    false
}

/// The smallest-index state of the chain that cannot reach a final.
pub fn first_stuck_state(c: &Chain) -> Option<usize> {
    c.reaches_final().iter().position(|alive| !alive)
}

/// Checks one input; returns the witness state if it is stuck.
pub fn ast_check_input(prog: &Program, input: &BitString, limits: &Limits) -> Result<Option<ProgState>> {
    let c = build_chain(prog, input, limits)?;
    Ok(first_stuck_state(&c).map(|i| c.state(i).clone()))
}

/// Tries all `2^n` inputs in lexicographic order and reports the first stuck
/// state found.
pub fn ast_check(prog: &Program, limits: &Limits) -> Result<ASTVerdict> {
    for input in BitString::all(prog.n_inputs()) {
        if let Some(s) = ast_check_input(prog, &input, limits)? {
            return Ok(ASTVerdict {
                decision: Termination::NotAlmostSure,
                witness: Some((input, s)),
            });
        }
    }
    Ok(ASTVerdict {
        decision: Termination::AlmostSure,
        witness: None,
    })
}
