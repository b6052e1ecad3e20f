//! The BPWhile language: syntax, desugaring, and small-step semantics.
//!
//! ```text
//! b ::= true | false | random | x | b && b | b || b | !b
//! c ::= skip | x := b | c; c | if b then c else c | while b then c
//! C ::= input(x, ..., x); c; return(x, ..., x)
//! ```
//!
//! Bodies of `if`/`while` are single commands; group sequences with `{ }`
//! or `( )`. Comments start with `#`.

mod interp;
mod lexer;
mod lower;
pub(crate) mod parser;
pub(crate) mod pretty;
mod semantics;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::bits::BitString;
use crate::error::Error;
use crate::Result;

pub use interp::{run_sample, run_with_coins, RunOutcome, SampleOutcome};
pub use pretty::pretty_print;
pub use semantics::{start_state, transitions, Coins, Prob, ProgState};

/// Most coins a single command may draw.
pub const MAX_COINS_PER_COMMAND: usize = 31;

/// Index into [`Program::all_vars`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Boolean expression. `V` is [`VarId`] in resolved programs and `String`
/// while a program is being assembled.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BExpr<V = VarId> {
    Const(bool),
    /// A fresh fair coin; every occurrence is independent.
    Coin,
    Var(V),
    Not(alloc::boxed::Box<BExpr<V>>),
    And(alloc::boxed::Box<BExpr<V>>, alloc::boxed::Box<BExpr<V>>),
    Or(alloc::boxed::Box<BExpr<V>>, alloc::boxed::Box<BExpr<V>>),
}

impl<V> BExpr<V> {
    pub fn var(v: V) -> Self {
        BExpr::Var(v)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Self) -> Self {
        BExpr::Not(alloc::boxed::Box::new(e))
    }

    pub fn and(a: Self, b: Self) -> Self {
        BExpr::And(alloc::boxed::Box::new(a), alloc::boxed::Box::new(b))
    }

    pub fn or(a: Self, b: Self) -> Self {
        BExpr::Or(alloc::boxed::Box::new(a), alloc::boxed::Box::new(b))
    }

    /// Number of `random` atoms, i.e. coins drawn per evaluation.
    pub fn coins(&self) -> usize {
        match self {
            BExpr::Coin => 1,
            BExpr::Const(_) | BExpr::Var(_) => 0,
            BExpr::Not(e) => e.coins(),
            BExpr::And(a, b) | BExpr::Or(a, b) => a.coins() + b.coins(),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            BExpr::Const(_) | BExpr::Coin | BExpr::Var(_) => 1,
            BExpr::Not(e) => 1 + e.size(),
            BExpr::And(a, b) | BExpr::Or(a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn map_vars<W>(&self, f: &mut impl FnMut(&V) -> W) -> BExpr<W> {
        match self {
            BExpr::Const(b) => BExpr::Const(*b),
            BExpr::Coin => BExpr::Coin,
            BExpr::Var(v) => BExpr::Var(f(v)),
            BExpr::Not(e) => BExpr::not(e.map_vars(f)),
            BExpr::And(a, b) => BExpr::and(a.map_vars(f), b.map_vars(f)),
            BExpr::Or(a, b) => BExpr::or(a.map_vars(f), b.map_vars(f)),
        }
    }

    fn for_each_var(&self, f: &mut impl FnMut(&V)) {
        match self {
            BExpr::Var(v) => f(v),
            BExpr::Const(_) | BExpr::Coin => {}
            BExpr::Not(e) => e.for_each_var(f),
            BExpr::And(a, b) | BExpr::Or(a, b) => {
                a.for_each_var(f);
                b.for_each_var(f);
            }
        }
    }
}

impl BExpr<VarId> {
    /// Evaluates with coins taken in left-to-right order from `coins`.
    /// Both operands of `&&`/`||` are always evaluated.
    pub fn eval(&self, mem: &BitString, coins: &mut impl FnMut() -> bool) -> bool {
        match self {
            BExpr::Const(b) => *b,
            BExpr::Coin => coins(),
            BExpr::Var(v) => mem.get(v.index()),
            BExpr::Not(e) => !e.eval(mem, coins),
            BExpr::And(a, b) => {
                let x = a.eval(mem, coins);
                let y = b.eval(mem, coins);
                x && y
            }
            BExpr::Or(a, b) => {
                let x = a.eval(mem, coins);
                let y = b.eval(mem, coins);
                x || y
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Cmd<V = VarId> {
    Skip,
    Assign(V, BExpr<V>),
    If(BExpr<V>, Vec<Stmt<V>>, Vec<Stmt<V>>),
    While(BExpr<V>, Vec<Stmt<V>>),
}

/// A command with its line number. Lines are 1-based and assigned in
/// program order, one per atomic command and per `if`/`while` head.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Stmt<V = VarId> {
    pub line: usize,
    pub cmd: Cmd<V>,
}

impl<V> Stmt<V> {
    /// An unnumbered statement, for assembling programs.
    pub fn new(cmd: Cmd<V>) -> Self {
        Stmt { line: 0, cmd }
    }
}

/// Flattened control flow: one entry per line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Instr {
    Skip {
        next: usize,
    },
    Assign {
        var: VarId,
        expr: BExpr,
        next: usize,
    },
    Branch {
        cond: BExpr,
        then_line: usize,
        else_line: usize,
    },
}

/// A parsed, line-numbered BPWhile program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    input_vars: Vec<VarId>,
    output_vars: Vec<VarId>,
    all_vars: Vec<String>,
    body: Vec<Stmt>,
    code: Vec<Instr>,
}

impl Program {
    /// Resolves names, numbers lines and compiles control flow.
    ///
    /// `all_vars` lists the inputs first, then variables in order of first
    /// assignment, then variables that are only ever read.
    pub fn build(inputs: Vec<String>, body: Vec<Stmt<String>>, outputs: Vec<String>) -> Result<Self> {
        let mut index: BTreeMap<String, VarId> = BTreeMap::new();
        let mut all_vars: Vec<String> = Vec::new();
        let mut intern = |name: &String, all_vars: &mut Vec<String>| -> VarId {
            *index.entry(name.clone()).or_insert_with(|| {
                all_vars.push(name.clone());
                VarId((all_vars.len() - 1) as u32)
            })
        };
        let mut input_vars = Vec::with_capacity(inputs.len());
        for name in &inputs {
            if all_vars.contains(name) {
                return Err(Error::Param(alloc::format!("duplicate input variable `{name}`")));
            }
            input_vars.push(intern(name, &mut all_vars));
        }
        let mut assigned = Vec::new();
        collect_assigned(&body, &mut assigned);
        for name in &assigned {
            intern(name, &mut all_vars);
        }
        let mut read = Vec::new();
        collect_read(&body, &mut read);
        read.extend(outputs.iter().cloned());
        for name in &read {
            intern(name, &mut all_vars);
        }
        let output_vars = outputs.iter().map(|n| intern(n, &mut all_vars)).collect();

        let mut resolve = |n: &String| intern(n, &mut all_vars);
        let mut body = resolve_stmts(&body, &mut resolve);
        let mut next_line = 1;
        number_lines(&mut body, &mut next_line);
        let line_count = next_line - 1;
        let mut code = alloc::vec![Instr::Skip { next: 0 }; line_count];
        compile(&body, line_count + 1, &mut code)?;

        Ok(Program {
            input_vars,
            output_vars,
            all_vars,
            body,
            code,
        })
    }

    /// Input length `n`.
    pub fn n_inputs(&self) -> usize {
        self.input_vars.len()
    }

    /// Output length `l`.
    pub fn n_outputs(&self) -> usize {
        self.output_vars.len()
    }

    pub fn n_vars(&self) -> usize {
        self.all_vars.len()
    }

    pub fn n_lines(&self) -> usize {
        self.code.len()
    }

    /// Pseudo-line reached after `return`.
    pub fn final_line(&self) -> usize {
        self.code.len() + 1
    }

    pub fn input_vars(&self) -> &[VarId] {
        &self.input_vars
    }

    pub fn output_vars(&self) -> &[VarId] {
        &self.output_vars
    }

    pub fn all_vars(&self) -> &[String] {
        &self.all_vars
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.all_vars[v.index()]
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.all_vars
            .iter()
            .position(|n| n == name)
            .map(|i| VarId(i as u32))
    }

    pub fn body(&self) -> &[Stmt] {
        &self.body
    }

    pub(crate) fn instr(&self, line: usize) -> Option<&Instr> {
        line.checked_sub(1).and_then(|i| self.code.get(i))
    }

    /// Symbol count: lines, variables and expression nodes.
    pub fn size(&self) -> usize {
        let expr_nodes: usize = self
            .code
            .iter()
            .map(|i| match i {
                Instr::Skip { .. } => 0,
                Instr::Assign { expr, .. } => expr.size(),
                Instr::Branch { cond, .. } => cond.size(),
            })
            .sum();
        self.code.len() + self.all_vars.len() + expr_nodes
    }

    /// Non-input variables that are read but never assigned; they read as false.
    pub fn uninitialized_reads(&self) -> Vec<&str> {
        let mut assigned = alloc::vec![false; self.all_vars.len()];
        for v in &self.input_vars {
            assigned[v.index()] = true;
        }
        for i in &self.code {
            if let Instr::Assign { var, .. } = i {
                assigned[var.index()] = true;
            }
        }
        self.all_vars
            .iter()
            .enumerate()
            .filter(|(i, _)| !assigned[*i])
            .map(|(_, n)| n.as_str())
            .collect()
    }

    /// The body with variable names in place of ids.
    pub fn named_body(&self) -> Vec<Stmt<String>> {
        let mut name = |v: &VarId| self.all_vars[v.index()].clone();
        resolve_stmts(&self.body, &mut name)
    }

    pub fn input_names(&self) -> Vec<String> {
        self.input_vars.iter().map(|v| self.all_vars[v.index()].clone()).collect()
    }

    pub fn output_names(&self) -> Vec<String> {
        self.output_vars.iter().map(|v| self.all_vars[v.index()].clone()).collect()
    }

    /// Reads the output variables of a memory.
    pub fn outcome_of(&self, mem: &BitString) -> BitString {
        let bits: Vec<bool> = self.output_vars.iter().map(|v| mem.get(v.index())).collect();
        BitString::from_bools(&bits)
    }
}

/// Parses a core `.bpw` program.
pub fn parse(text: &str) -> Result<Program> {
    let surface = parser::parse_surface(text, parser::Mode::Core)?;
    lower::lower(surface)
}

/// Parses and desugars an extended `.bpwx` program with fixed-width
/// unsigned integer blocks.
pub fn desugar(text: &str) -> Result<Program> {
    let surface = parser::parse_surface(text, parser::Mode::Extended)?;
    lower::lower(surface)
}

fn collect_assigned(stmts: &[Stmt<String>], out: &mut Vec<String>) {
    for s in stmts {
        match &s.cmd {
            Cmd::Skip => {}
            Cmd::Assign(v, _) => {
                if !out.contains(v) {
                    out.push(v.clone())
                }
            }
            Cmd::If(_, t, e) => {
                collect_assigned(t, out);
                collect_assigned(e, out);
            }
            Cmd::While(_, b) => collect_assigned(b, out),
        }
    }
}

fn collect_read(stmts: &[Stmt<String>], out: &mut Vec<String>) {
    let mut push = |v: &String| {
        if !out.contains(v) {
            out.push(v.clone())
        }
    };
    fn walk(stmts: &[Stmt<String>], push: &mut impl FnMut(&String)) {
        for s in stmts {
            match &s.cmd {
                Cmd::Skip => {}
                Cmd::Assign(_, e) => e.for_each_var(push),
                Cmd::If(c, t, e) => {
                    c.for_each_var(push);
                    walk(t, push);
                    walk(e, push);
                }
                Cmd::While(c, b) => {
                    c.for_each_var(push);
                    walk(b, push);
                }
            }
        }
    }
    walk(stmts, &mut push);
}

pub(crate) fn resolve_stmts<V, W>(stmts: &[Stmt<V>], f: &mut impl FnMut(&V) -> W) -> Vec<Stmt<W>> {
    stmts
        .iter()
        .map(|s| Stmt {
            line: s.line,
            cmd: match &s.cmd {
                Cmd::Skip => Cmd::Skip,
                Cmd::Assign(v, e) => Cmd::Assign(f(v), e.map_vars(f)),
                Cmd::If(c, t, e) => Cmd::If(c.map_vars(f), resolve_stmts(t, f), resolve_stmts(e, f)),
                Cmd::While(c, b) => Cmd::While(c.map_vars(f), resolve_stmts(b, f)),
            },
        })
        .collect()
}

fn number_lines(stmts: &mut [Stmt], next: &mut usize) {
    for s in stmts {
        s.line = *next;
        *next += 1;
        match &mut s.cmd {
            Cmd::Skip | Cmd::Assign(..) => {}
            Cmd::If(_, t, e) => {
                number_lines(t, next);
                number_lines(e, next);
            }
            Cmd::While(_, b) => number_lines(b, next),
        }
    }
}

fn compile(stmts: &[Stmt], cont: usize, code: &mut [Instr]) -> Result<()> {
    let first_line = |list: &[Stmt]| -> Result<usize> {
        list.first()
            .map(|s| s.line)
            .ok_or_else(|| Error::Internal(String::from("empty command block")))
    };
    for (k, s) in stmts.iter().enumerate() {
        let next = stmts.get(k + 1).map_or(cont, |n| n.line);
        let instr = match &s.cmd {
            Cmd::Skip => Instr::Skip { next },
            Cmd::Assign(v, e) => {
                check_coins(e)?;
                Instr::Assign {
                    var: *v,
                    expr: e.clone(),
                    next,
                }
            }
            Cmd::If(c, t, e) => {
                check_coins(c)?;
                compile(t, next, code)?;
                compile(e, next, code)?;
                Instr::Branch {
                    cond: c.clone(),
                    then_line: first_line(t)?,
                    else_line: first_line(e)?,
                }
            }
            Cmd::While(c, b) => {
                check_coins(c)?;
                compile(b, s.line, code)?;
                Instr::Branch {
                    cond: c.clone(),
                    then_line: first_line(b)?,
                    else_line: next,
                }
            }
        };
        code[s.line - 1] = instr;
    }
    Ok(())
}

fn check_coins(e: &BExpr) -> Result<()> {
    if e.coins() > MAX_COINS_PER_COMMAND {
        return Err(Error::Param(alloc::format!(
            "an expression draws {} coins; at most {MAX_COINS_PER_COMMAND} are supported",
            e.coins()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbering_and_control_flow() {
        let p = parse(
            "input(x); c := random; while c then { c := random; skip }; \
             if x then skip else y := !x; return(x, y)",
        )
        .unwrap();
        assert_eq!(p.n_lines(), 7);
        assert_eq!(p.all_vars(), ["x", "c", "y"]);
        assert_eq!(p.final_line(), 8);
        match p.instr(2).unwrap() {
            Instr::Branch {
                then_line,
                else_line,
                ..
            } => assert_eq!((*then_line, *else_line), (3, 5)),
            other => panic!("{other:?}"),
        }
        // last statement of the loop body jumps back to the head
        assert_eq!(p.instr(4), Some(&Instr::Skip { next: 2 }));
        // both branches of the `if` continue to FINAL
        assert_eq!(p.instr(6), Some(&Instr::Skip { next: 8 }));
        assert!(matches!(p.instr(7), Some(Instr::Assign { next: 8, .. })));
    }

    #[test]
    fn read_only_variables_default_to_false() {
        let p = parse("input(x); y := z; return(y)").unwrap();
        assert_eq!(p.all_vars(), ["x", "y", "z"]);
        assert_eq!(p.uninitialized_reads(), ["z"]);
    }

    #[test]
    fn too_many_coins_rejected() {
        let mut src = alloc::string::String::from("input(x); y := random");
        for _ in 0..MAX_COINS_PER_COMMAND {
            src.push_str(" && random");
        }
        src.push_str("; return(y)");
        assert!(matches!(parse(&src), Err(Error::Param(_))));
    }
}
