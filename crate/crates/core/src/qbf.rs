//! Prenex quantified boolean formulas.
//!
//! Text form: `A x1 E x2 : (x1 & x2) | (!x1 & !x2)` with `A`/`E` for the
//! quantifiers and `& | ! ( )` in the matrix.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::Error;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantifier {
    ForAll,
    Exists,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    Var(usize),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn eval(&self, assignment: &[bool]) -> bool {
        match self {
            Formula::Var(i) => assignment[*i],
            Formula::Not(a) => !a.eval(assignment),
            Formula::And(a, b) => a.eval(assignment) && b.eval(assignment),
            Formula::Or(a, b) => a.eval(assignment) || b.eval(assignment),
        }
    }
}

/// A closed prenex formula; `Formula::Var(i)` refers to `prefix[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Qbf {
    pub prefix: Vec<(Quantifier, String)>,
    pub matrix: Formula,
}

impl Qbf {
    /// Truth value by expanding every quantifier.
    pub fn eval(&self) -> bool {
        fn go(q: &Qbf, assignment: &mut Vec<bool>) -> bool {
            let i = assignment.len();
            if i == q.prefix.len() {
                return q.matrix.eval(assignment);
            }
            let branch = |v: bool, assignment: &mut Vec<bool>| {
                assignment.push(v);
                let r = go(q, assignment);
                assignment.pop();
                r
            };
            match q.prefix[i].0 {
                Quantifier::ForAll => branch(false, assignment) && branch(true, assignment),
                Quantifier::Exists => branch(false, assignment) || branch(true, assignment),
            }
        }
        go(self, &mut Vec::new())
    }

    pub fn parse(text: &str) -> Result<Qbf> {
        let (head, body) = text
            .split_once(':')
            .ok_or_else(|| Error::Param(String::from("QBF needs `prefix : matrix`")))?;
        let words: Vec<&str> = head.split_whitespace().collect();
        if !words.len().is_multiple_of(2) {
            return Err(Error::Param(String::from("QBF prefix must be quantifier/variable pairs")));
        }
        let mut prefix = Vec::new();
        for pair in words.chunks(2) {
            let q = match pair[0] {
                "A" => Quantifier::ForAll,
                "E" => Quantifier::Exists,
                other => return Err(Error::Param(format!("unknown quantifier `{other}`"))),
            };
            let name = pair[1];
            if !is_ident(name) {
                return Err(Error::Param(format!("bad variable name `{name}`")));
            }
            if prefix.iter().any(|(_, n): &(Quantifier, String)| n == name) {
                return Err(Error::Param(format!("variable `{name}` quantified twice")));
            }
            prefix.push((q, String::from(name)));
        }
        let toks = tokenize(body)?;
        let mut p = MatrixParser {
            toks,
            at: 0,
            names: prefix.iter().map(|(_, n)| n.clone()).collect(),
        };
        let matrix = p.or()?;
        if p.at != p.toks.len() {
            return Err(Error::Param(format!("unexpected `{}` in QBF matrix", p.toks[p.at])));
        }
        Ok(Qbf { prefix, matrix })
    }
}

fn is_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn tokenize(s: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let cs: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < cs.len() {
        let c = cs[i];
        if c.is_whitespace() {
            i += 1;
        } else if "&|!()".contains(c) {
            out.push(String::from(c));
            i += 1;
        } else if c.is_ascii_alphanumeric() || c == '_' {
            let start = i;
            while i < cs.len() && (cs[i].is_ascii_alphanumeric() || cs[i] == '_') {
                i += 1;
            }
            out.push(cs[start..i].iter().collect());
        } else {
            return Err(Error::Param(format!("unexpected character `{c}` in QBF matrix")));
        }
    }
    Ok(out)
}

struct MatrixParser {
    toks: Vec<String>,
    at: usize,
    names: Vec<String>,
}

impl MatrixParser {
    fn peek(&self) -> Option<&str> {
        self.toks.get(self.at).map(String::as_str)
    }

    fn or(&mut self) -> Result<Formula> {
        let mut lhs = self.and()?;
        while self.peek() == Some("|") {
            self.at += 1;
            lhs = Formula::Or(Box::new(lhs), Box::new(self.and()?));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula> {
        let mut lhs = self.unary()?;
        while self.peek() == Some("&") {
            self.at += 1;
            lhs = Formula::And(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula> {
        let tok = self
            .peek()
            .map(String::from)
            .ok_or_else(|| Error::Param(String::from("QBF matrix ends early")))?;
        self.at += 1;
        match tok.as_str() {
            "!" => Ok(Formula::Not(Box::new(self.unary()?))),
            "(" => {
                let e = self.or()?;
                if self.peek() != Some(")") {
                    return Err(Error::Param(String::from("missing `)` in QBF matrix")));
                }
                self.at += 1;
                Ok(e)
            }
            name => self
                .names
                .iter()
                .position(|n| n == name)
                .map(Formula::Var)
                .ok_or_else(|| Error::Param(format!("variable `{name}` is not quantified"))),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Var(i) => write!(f, "v{i}"),
            Formula::Not(a) => write!(f, "!{a}"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
        }
    }
}

impl fmt::Display for Qbf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (q, name) in &self.prefix {
            let tag = match q {
                Quantifier::ForAll => "A",
                Quantifier::Exists => "E",
            };
            write!(f, "{tag} {name} ")?;
        }
        f.write_str(": ")?;
        write_matrix(&self.matrix, &self.prefix, f)
    }
}

fn write_matrix(m: &Formula, prefix: &[(Quantifier, String)], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match m {
        Formula::Var(i) => f.write_str(&prefix[*i].1),
        Formula::Not(a) => {
            f.write_str("!")?;
            write_matrix(a, prefix, f)
        }
        Formula::And(a, b) | Formula::Or(a, b) => {
            let op = if matches!(m, Formula::And(..)) { " & " } else { " | " };
            f.write_str("(")?;
            write_matrix(a, prefix, f)?;
            f.write_str(op)?;
            write_matrix(b, prefix, f)?;
            f.write_str(")")
        }
    }
}
