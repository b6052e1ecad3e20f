use alloc::string::String;
use core::fmt;

use crate::bits::BitString;

/// Position in source text, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("lexical error: {0}")]
    Lexical(String),
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("duplicate input variable `{0}`")]
    DuplicateInput(String),
    #[error("missing `input(...)` header")]
    MissingInput,
    #[error("missing `return(...)`")]
    MissingReturn,
    #[error("extended syntax is not allowed here: {0}")]
    Extension(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: {kind}")]
pub struct ParseError {
    pub pos: Pos,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{pos}: {msg}")]
    Desugar { pos: Pos, msg: String },
    #[error("state budget exceeded: more than {limit} reachable states")]
    StateBudget { limit: usize },
    #[error("alpha grid has {points} points, budget is {limit}")]
    GridBudget { points: u64, limit: u64 },
    #[error("program has {budget_vars} variables, more than the budget of {limit}")]
    VariableBudget { budget_vars: usize, limit: usize },
    #[error("input has length {got}, program expects {expected}")]
    InputLength { expected: usize, got: usize },
    #[error("line {0} is not a valid program line")]
    InvalidLine(usize),
    #[error("conditioning on termination is undefined: input {input} never terminates")]
    UndefinedConditioning { input: BitString },
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    /// True for errors caused by a configured resource budget.
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            Error::StateBudget { .. } | Error::GridBudget { .. } | Error::VariableBudget { .. }
        )
    }
}
