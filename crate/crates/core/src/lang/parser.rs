//! Recursive-descent parser producing the surface syntax tree shared by
//! `.bpw` and `.bpwx` sources.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::lexer::{lex, Tok, Token};
use crate::error::{ParseError, ParseErrorKind, Pos};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Mode {
    Core,
    Extended,
}

/// Variables standing for constant outputs.
pub(crate) const CONST_ONE: &str = "__one";
pub(crate) const CONST_ZERO: &str = "__zero";

#[derive(Debug, Clone)]
pub(crate) struct Param {
    pub name: String,
    pub width: Option<u32>,
    pub pos: Pos,
    /// Set for a constant `0`/`1` (or `false`/`true`) in `return(...)`.
    pub literal: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum CmpOp {
    Lt,
    Le,
    Eq,
    Ne,
    Gt,
    Ge,
}

#[derive(Debug, Clone)]
pub(crate) enum Atom {
    Block(String, Pos),
    Lit(u64, Pos),
}

#[derive(Debug, Clone)]
pub(crate) enum SExpr {
    Const(bool),
    Coin,
    Var(String),
    Not(Box<SExpr>),
    And(Box<SExpr>, Box<SExpr>),
    Or(Box<SExpr>, Box<SExpr>),
    Cmp(CmpOp, Atom, Atom),
}

#[derive(Debug, Clone)]
pub(crate) enum Rhs {
    Bool(SExpr),
    /// Sum of signed terms, the first one may be negated.
    Int(Vec<(bool, Atom)>),
    Uniform { lo: u64, hi: u64 },
}

#[derive(Debug, Clone)]
pub(crate) enum SStmt {
    Skip,
    Assign { target: String, rhs: Rhs },
    If { cond: SExpr, then_: Vec<Located>, else_: Vec<Located> },
    While { cond: SExpr, body: Vec<Located> },
}

#[derive(Debug, Clone)]
pub(crate) struct Located {
    pub stmt: SStmt,
    pub pos: Pos,
}

#[derive(Debug, Clone)]
pub(crate) struct Surface {
    pub inputs: Vec<Param>,
    pub decls: Vec<Param>,
    pub body: Vec<Located>,
    pub outputs: Vec<Param>,
    /// Widths of every integer block (inputs, declarations, outputs).
    pub blocks: BTreeMap<String, u32>,
}

pub(crate) fn parse_surface(text: &str, mode: Mode) -> Result<Surface, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        at: 0,
        mode,
        blocks: BTreeMap::new(),
    };
    p.program()
}

struct Parser {
    toks: Vec<Token>,
    at: usize,
    mode: Mode,
    blocks: BTreeMap<String, u32>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn err<T>(&self, kind: ParseErrorKind) -> PResult<T> {
        Err(ParseError {
            pos: self.pos(),
            kind,
        })
    }

    fn syntax<T>(&self, expected: &str) -> PResult<T> {
        self.err(ParseErrorKind::Syntax(format!(
            "expected {expected}, found {}",
            self.peek().describe()
        )))
    }

    fn extension<T>(&self, what: &str) -> PResult<T> {
        self.err(ParseErrorKind::Extension(format!(
            "{what} (integer blocks need the extended `.bpwx` syntax)"
        )))
    }

    fn expect(&mut self, t: Tok) -> PResult<Token> {
        if *self.peek() == t {
            Ok(self.bump())
        } else {
            let d = t.describe();
            self.syntax(&d)
        }
    }

    fn ident(&mut self) -> PResult<(String, Pos)> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok((s, pos))
            }
            _ => self.syntax("an identifier"),
        }
    }

    fn program(&mut self) -> PResult<Surface> {
        if *self.peek() != Tok::Input {
            return self.err(ParseErrorKind::MissingInput);
        }
        self.bump();
        self.expect(Tok::LParen)?;
        let inputs = self.params()?;
        self.expect(Tok::RParen)?;
        self.expect(Tok::Semi)?;
        let mut seen: Vec<&str> = Vec::new();
        for p in &inputs {
            if seen.contains(&p.name.as_str()) {
                return Err(ParseError {
                    pos: p.pos,
                    kind: ParseErrorKind::DuplicateInput(p.name.clone()),
                });
            }
            seen.push(&p.name);
        }
        for p in &inputs {
            if let Some(w) = p.width {
                self.blocks.insert(p.name.clone(), w);
            }
        }

        let mut decls = Vec::new();
        while *self.peek() == Tok::IntKw {
            if self.mode == Mode::Core {
                return self.extension("`int` declarations");
            }
            self.bump();
            loop {
                let (name, pos) = self.ident()?;
                self.expect(Tok::LBracket)?;
                let width = self.width()?;
                self.expect(Tok::RBracket)?;
                if self.blocks.insert(name.clone(), width).is_some() {
                    return Err(ParseError {
                        pos,
                        kind: ParseErrorKind::Syntax(format!("block `{name}` declared twice")),
                    });
                }
                decls.push(Param {
                    name,
                    width: Some(width),
                    pos,
                    literal: None,
                });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::Semi)?;
        }

        if matches!(self.peek(), Tok::Return | Tok::Eof) {
            return self.syntax("a statement");
        }
        let body = self.seq()?;
        if *self.peek() != Tok::Return {
            if *self.peek() == Tok::Eof {
                return self.err(ParseErrorKind::MissingReturn);
            }
            return self.syntax("`;` or `return`");
        }
        self.bump();
        self.expect(Tok::LParen)?;
        let outputs = self.params_with(true)?;
        self.expect(Tok::RParen)?;
        self.eat(&Tok::Semi);
        if *self.peek() != Tok::Eof {
            return self.syntax("end of input after `return(...)`");
        }
        for p in &outputs {
            if let Some(w) = p.width {
                match self.blocks.get(&p.name) {
                    Some(&bw) if bw == w => {}
                    _ => {
                        return Err(ParseError {
                            pos: p.pos,
                            kind: ParseErrorKind::Syntax(format!(
                                "`{}[{w}]` does not match a declared block",
                                p.name
                            )),
                        })
                    }
                }
            }
        }
        Ok(Surface {
            inputs,
            decls,
            body,
            outputs,
            blocks: core::mem::take(&mut self.blocks),
        })
    }

    fn width(&mut self) -> PResult<u32> {
        match *self.peek() {
            Tok::Int(w) if (1..=63).contains(&w) => {
                self.bump();
                Ok(w as u32)
            }
            Tok::Int(_) => self.err(ParseErrorKind::Syntax(String::from(
                "block width must be between 1 and 63",
            ))),
            _ => self.syntax("a block width"),
        }
    }

    fn params(&mut self) -> PResult<Vec<Param>> {
        self.params_with(false)
    }

    fn params_with(&mut self, literals: bool) -> PResult<Vec<Param>> {
        let mut out = Vec::new();
        if *self.peek() == Tok::RParen {
            return Ok(out);
        }
        loop {
            let lit = match self.peek() {
                Tok::Int(0) | Tok::False => Some(false),
                Tok::Int(1) | Tok::True => Some(true),
                _ => None,
            };
            if let (true, Some(b)) = (literals, lit) {
                let pos = self.pos();
                self.bump();
                let name = String::from(if b { CONST_ONE } else { CONST_ZERO });
                out.push(Param {
                    name,
                    width: None,
                    pos,
                    literal: Some(b),
                });
                if !self.eat(&Tok::Comma) {
                    break;
                }
                continue;
            }
            let (name, pos) = self.ident()?;
            let width = if *self.peek() == Tok::LBracket {
                if self.mode == Mode::Core {
                    return self.extension("block parameters");
                }
                self.bump();
                let w = self.width()?;
                self.expect(Tok::RBracket)?;
                Some(w)
            } else {
                None
            };
            out.push(Param {
                name,
                width,
                pos,
                literal: None,
            });
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        Ok(out)
    }

    fn starts_stmt(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Skip | Tok::If | Tok::While | Tok::Ident(_) | Tok::LBrace | Tok::LParen
        )
    }

    /// `item (; item)* ;?` where the separator may be omitted after a
    /// braced or parenthesized item.
    fn seq(&mut self) -> PResult<Vec<Located>> {
        let mut out = Vec::new();
        loop {
            let closed = self.item(&mut out)?;
            let had_semi = self.eat(&Tok::Semi);
            if !self.starts_stmt() {
                break;
            }
            if !had_semi && !closed {
                return self.syntax("`;`");
            }
        }
        Ok(out)
    }

    /// Parses one item into `out`; groups are flattened. Returns whether the
    /// item ended with a closing bracket.
    fn item(&mut self, out: &mut Vec<Located>) -> PResult<bool> {
        match self.peek() {
            Tok::LBrace => {
                self.bump();
                out.extend(self.seq()?);
                self.expect(Tok::RBrace)?;
                Ok(true)
            }
            Tok::LParen => {
                self.bump();
                out.extend(self.seq()?);
                self.expect(Tok::RParen)?;
                Ok(true)
            }
            _ => {
                let (s, closed) = self.stmt()?;
                out.push(s);
                Ok(closed)
            }
        }
    }

    /// The body of `if`/`while`: a single item.
    fn body(&mut self) -> PResult<(Vec<Located>, bool)> {
        if !self.starts_stmt() {
            return self.syntax("a statement");
        }
        let mut out = Vec::new();
        let closed = self.item(&mut out)?;
        Ok((out, closed))
    }

    fn stmt(&mut self) -> PResult<(Located, bool)> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Skip => {
                self.bump();
                Ok((Located { stmt: SStmt::Skip, pos }, false))
            }
            Tok::If => {
                self.bump();
                let cond = self.expr()?;
                self.expect(Tok::Then)?;
                let (then_, _) = self.body()?;
                if *self.peek() != Tok::Else {
                    return self.syntax("`else` (every `if` needs an `else` branch)");
                }
                self.bump();
                let (else_, closed) = self.body()?;
                Ok((Located {
                    stmt: SStmt::If { cond, then_, else_ },
                    pos,
                }, closed))
            }
            Tok::While => {
                self.bump();
                let cond = self.expr()?;
                self.expect(Tok::Then)?;
                let (body, closed) = self.body()?;
                Ok((Located {
                    stmt: SStmt::While { cond, body },
                    pos,
                }, closed))
            }
            Tok::Ident(name) => {
                self.bump();
                self.expect(Tok::Assign)?;
                let rhs = if self.blocks.contains_key(&name) {
                    self.int_rhs()?
                } else {
                    Rhs::Bool(self.expr()?)
                };
                Ok((Located {
                    stmt: SStmt::Assign { target: name, rhs },
                    pos,
                }, false))
            }
            _ => self.syntax("a statement"),
        }
    }

    fn int_rhs(&mut self) -> PResult<Rhs> {
        if *self.peek() == Tok::Uniform {
            self.bump();
            self.expect(Tok::LParen)?;
            let lo = self.int_lit()?;
            self.expect(Tok::Comma)?;
            let hi = self.int_lit()?;
            self.expect(Tok::RBracket)?;
            return Ok(Rhs::Uniform { lo, hi });
        }
        let mut terms = Vec::new();
        let negate_first = self.eat(&Tok::Minus);
        terms.push((negate_first, self.atom()?));
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    terms.push((false, self.atom()?));
                }
                Tok::Minus => {
                    self.bump();
                    terms.push((true, self.atom()?));
                }
                Tok::Star | Tok::Slash | Tok::Percent => {
                    return self.err(ParseErrorKind::Syntax(format!(
                        "operator {} is not supported on integer blocks (only + and -)",
                        self.peek().describe()
                    )))
                }
                _ => break,
            }
        }
        Ok(Rhs::Int(terms))
    }

    fn int_lit(&mut self) -> PResult<u64> {
        match *self.peek() {
            Tok::Int(v) => {
                self.bump();
                Ok(v)
            }
            _ => self.syntax("an integer constant"),
        }
    }

    fn atom(&mut self) -> PResult<Atom> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Atom::Lit(v, pos))
            }
            Tok::Ident(name) if self.blocks.contains_key(&name) => {
                self.bump();
                Ok(Atom::Block(name, pos))
            }
            Tok::Ident(name) => self.err(ParseErrorKind::Syntax(format!(
                "`{name}` is not an integer block"
            ))),
            _ => self.syntax("an integer block or constant"),
        }
    }

    fn expr(&mut self) -> PResult<SExpr> {
        let mut lhs = self.conj()?;
        while self.eat(&Tok::OrOr) {
            let rhs = self.conj()?;
            lhs = SExpr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn conj(&mut self) -> PResult<SExpr> {
        let mut lhs = self.unary()?;
        while self.eat(&Tok::AndAnd) {
            let rhs = self.unary()?;
            lhs = SExpr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<SExpr> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(SExpr::Not(Box::new(self.unary()?)))
            }
            Tok::True => {
                self.bump();
                Ok(SExpr::Const(true))
            }
            Tok::False => {
                self.bump();
                Ok(SExpr::Const(false))
            }
            Tok::Random => {
                self.bump();
                Ok(SExpr::Coin)
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Int(_) => {
                if self.mode == Mode::Core {
                    return self.extension("integer constants");
                }
                self.comparison()
            }
            Tok::Ident(name) if self.blocks.contains_key(&name) => self.comparison(),
            Tok::Ident(name) => {
                self.bump();
                if cmp_op(self.peek()).is_some() {
                    if self.mode == Mode::Core {
                        return self.extension("comparisons");
                    }
                    return self.err(ParseErrorKind::Syntax(format!(
                        "`{name}` is a boolean variable and cannot be compared"
                    )));
                }
                Ok(SExpr::Var(name))
            }
            _ => self.syntax("an expression"),
        }
    }

    fn comparison(&mut self) -> PResult<SExpr> {
        let lhs = self.atom()?;
        let Some(op) = cmp_op(self.peek()) else {
            if matches!(self.peek(), Tok::Plus | Tok::Minus | Tok::Star | Tok::Slash | Tok::Percent) {
                return self.err(ParseErrorKind::Syntax(String::from(
                    "arithmetic is not allowed inside conditions; assign it to a block first",
                )));
            }
            return self.syntax("a comparison operator");
        };
        self.bump();
        let rhs = self.atom()?;
        if matches!(self.peek(), Tok::Plus | Tok::Minus | Tok::Star | Tok::Slash | Tok::Percent) {
            return self.err(ParseErrorKind::Syntax(String::from(
                "arithmetic is not allowed inside conditions; assign it to a block first",
            )));
        }
        Ok(SExpr::Cmp(op, lhs, rhs))
    }
}

fn cmp_op(t: &Tok) -> Option<CmpOp> {
    Some(match t {
        Tok::Lt => CmpOp::Lt,
        Tok::Le => CmpOp::Le,
        Tok::EqEq => CmpOp::Eq,
        Tok::Ne => CmpOp::Ne,
        Tok::Gt => CmpOp::Gt,
        Tok::Ge => CmpOp::Ge,
        _ => return None,
    })
}
