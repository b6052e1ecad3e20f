//! Direct interpreters over the statement tree.
//!
//! [`run_with_coins`] walks the AST with an explicit coin supply and shares
//! no code with the chain construction, so it serves as an independent
//! reference for exact distributions. [`run_sample`] follows the small-step
//! semantics with seeded coins.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::semantics::{start_state, transitions};
use super::{BExpr, Cmd, Program, Stmt};
use crate::bits::BitString;
use crate::Result;

/// Result of running on a finite coin supply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunOutcome {
    Done(BitString),
    /// The coin supply ran out before the program returned.
    OutOfCoins,
    /// More than `max_steps` commands were executed.
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SampleOutcome {
    Output(BitString),
    Timeout,
}

enum Stop {
    Coins,
    Steps,
}

struct Run<'a, F> {
    mem: BitString,
    coins: &'a mut F,
    steps_left: u64,
}

impl<F: FnMut() -> Option<bool>> Run<'_, F> {
    fn tick(&mut self) -> Result<(), Stop> {
        if self.steps_left == 0 {
            return Err(Stop::Steps);
        }
        self.steps_left -= 1;
        Ok(())
    }

    fn eval(&mut self, e: &BExpr) -> Result<bool, Stop> {
        let mut short = false;
        let coins = &mut *self.coins;
        let v = e.eval(&self.mem, &mut || match coins() {
            Some(c) => c,
            None => {
                short = true;
                false
            }
        });
        if short {
            Err(Stop::Coins)
        } else {
            Ok(v)
        }
    }

    fn block(&mut self, stmts: &[Stmt]) -> Result<(), Stop> {
        for s in stmts {
            match &s.cmd {
                Cmd::Skip => self.tick()?,
                Cmd::Assign(v, e) => {
                    self.tick()?;
                    let b = self.eval(e)?;
                    self.mem.set(v.index(), b);
                }
                Cmd::If(c, t, e) => {
                    self.tick()?;
                    if self.eval(c)? {
                        self.block(t)?
                    } else {
                        self.block(e)?
                    }
                }
                Cmd::While(c, b) => loop {
                    self.tick()?;
                    if !self.eval(c)? {
                        break;
                    }
                    self.block(b)?;
                },
            }
        }
        Ok(())
    }
}

/// Runs `prog` taking coins from `coins` in evaluation order; `None` means
/// the supply is exhausted. At most `max_steps` commands are executed.
pub fn run_with_coins(
    prog: &Program,
    input: &BitString,
    coins: &mut impl FnMut() -> Option<bool>,
    max_steps: u64,
) -> Result<RunOutcome> {
    let mem = start_state(prog, input)?.memory;
    let mut run = Run {
        mem,
        coins,
        steps_left: max_steps,
    };
    Ok(match run.block(prog.body()) {
        Ok(()) => RunOutcome::Done(prog.outcome_of(&run.mem)),
        Err(Stop::Coins) => RunOutcome::OutOfCoins,
        Err(Stop::Steps) => RunOutcome::Timeout,
    })
}

/// One trajectory of the small-step semantics with coins from a ChaCha8
/// generator seeded by `seed`. Each micro-step counts towards `max_steps`.
pub fn run_sample(prog: &Program, input: &BitString, seed: u64, max_steps: u64) -> Result<SampleOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = start_state(prog, input)?;
    let fin = prog.final_line();
    for _ in 0..max_steps {
        if s.line == fin {
            break;
        }
        let mut succ = transitions(prog, &s)?;
        let pick = if succ.len() == 2 && rng.gen::<bool>() { 1 } else { 0 };
        s = succ.swap_remove(pick).0;
    }
    Ok(if s.line == fin {
        SampleOutcome::Output(prog.outcome_of(&s.memory))
    } else {
        SampleOutcome::Timeout
    })
}
