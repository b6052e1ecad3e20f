//! Small-step semantics: the configuration graph of a program.
//!
//! A command that draws `k` coins is executed in `k` micro-steps. The first
//! `k - 1` only record a coin in [`ProgState::pending`]; the last one draws
//! the final coin and executes the command with all `k` values. Every edge
//! therefore has probability ½ or 1.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use super::{Instr, Program};
use crate::bits::BitString;
use crate::error::Error;
use crate::{Rational, Result};

/// Transition probability of a chain edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Prob {
    Half,
    One,
}

impl Prob {
    pub fn to_rational(self) -> Rational {
        match self {
            Prob::Half => Rational::new(1.into(), 2.into()),
            Prob::One => Rational::from_integer(1.into()),
        }
    }
}

impl fmt::Display for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Prob::Half => "1/2",
            Prob::One => "1/1",
        })
    }
}

/// Coins already drawn for the command at the current line, oldest first.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coins {
    pub count: u8,
    /// The first drawn coin is the most significant of the `count` low bits.
    pub bits: u32,
}

impl Coins {
    pub const NONE: Coins = Coins { count: 0, bits: 0 };

    fn push(self, c: bool) -> Coins {
        Coins {
            count: self.count + 1,
            bits: (self.bits << 1) | c as u32,
        }
    }

    fn get(self, i: usize) -> bool {
        (self.bits >> (self.count as usize - 1 - i)) & 1 == 1
    }
}

/// A vertex of the configuration graph. Ordered by line, then memory,
/// then pending coins.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProgState {
    pub line: usize,
    pub memory: BitString,
    pub pending: Coins,
}

impl ProgState {
    /// `line:hexmemory`, with `+count:bits` appended while coins are pending.
    pub fn label(&self) -> alloc::string::String {
        let mut s = alloc::format!("{}:{}", self.line, self.memory.to_hex());
        if self.pending.count > 0 {
            s.push_str(&alloc::format!("+{}:{:b}", self.pending.count, self.pending.bits));
        }
        s
    }
}

impl fmt::Display for ProgState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Input written to the input variables, line 1, everything else false.
pub fn start_state(prog: &Program, input: &BitString) -> Result<ProgState> {
    if input.len() != prog.n_inputs() {
        return Err(Error::InputLength {
            expected: prog.n_inputs(),
            got: input.len(),
        });
    }
    let mut memory = BitString::zeros(prog.n_vars());
    for (i, v) in prog.input_vars().iter().enumerate() {
        memory.set(v.index(), input.get(i));
    }
    Ok(ProgState {
        line: 1,
        memory,
        pending: Coins::NONE,
    })
}

/// Successors of `s`. Identical successors are merged into one edge of
/// probability 1; a final state has a probability-1 self-loop.
pub fn transitions(prog: &Program, s: &ProgState) -> Result<Vec<(ProgState, Prob)>> {
    if s.memory.len() != prog.n_vars() {
        return Err(Error::InputLength {
            expected: prog.n_vars(),
            got: s.memory.len(),
        });
    }
    if s.line == prog.final_line() {
        if s.pending.count != 0 {
            return Err(Error::InvalidLine(s.line));
        }
        return Ok(vec![(s.clone(), Prob::One)]);
    }
    let instr = prog.instr(s.line).ok_or(Error::InvalidLine(s.line))?;
    let k = match instr {
        Instr::Skip { .. } => 0,
        Instr::Assign { expr, .. } => expr.coins(),
        Instr::Branch { cond, .. } => cond.coins(),
    };
    let pending = s.pending;
    if pending.count as usize >= k.max(1) {
        return Err(Error::InvalidLine(s.line));
    }
    if k == 0 {
        return Ok(vec![(execute(instr, s, pending), Prob::One)]);
    }
    let outs: [ProgState; 2] = if (pending.count as usize) + 1 < k {
        [false, true].map(|c| ProgState {
            line: s.line,
            memory: s.memory.clone(),
            pending: pending.push(c),
        })
    } else {
        [false, true].map(|c| execute(instr, s, pending.push(c)))
    };
    let [a, b] = outs;
    if a == b {
        Ok(vec![(a, Prob::One)])
    } else {
        Ok(vec![(a, Prob::Half), (b, Prob::Half)])
    }
}

fn execute(instr: &Instr, s: &ProgState, coins: Coins) -> ProgState {
    let mut next_coin = 0;
    let mut draw = || {
        let c = coins.get(next_coin);
        next_coin += 1;
        c
    };
    let (line, memory) = match instr {
        Instr::Skip { next } => (*next, s.memory.clone()),
        Instr::Assign { var, expr, next } => {
            let v = expr.eval(&s.memory, &mut draw);
            let mut m = s.memory.clone();
            m.set(var.index(), v);
            (*next, m)
        }
        Instr::Branch {
            cond,
            then_line,
            else_line,
        } => {
            let line = if cond.eval(&s.memory, &mut draw) {
                *then_line
            } else {
                *else_line
            };
            (line, s.memory.clone())
        }
    };
    ProgState {
        line,
        memory,
        pending: Coins::NONE,
    }
}
