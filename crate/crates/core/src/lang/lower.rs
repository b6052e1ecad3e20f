//! Lowering of the surface tree into core BPWhile.
//!
//! Integer blocks of width `w` become `w` boolean variables `name_{w-1}` ..
//! `name_0` (most significant first). Arithmetic is modulo `2^w` and runs
//! through ripple-carry adders over temporaries named `__t<k>`, which are
//! reset to false after each assignment so they do not inflate the state
//! space. `uniform(lo, hi]` draws `w` coins and redraws until the value
//! lies in the range.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::parser::{Atom, CmpOp, Param, Rhs, SExpr, SStmt, Surface, CONST_ONE};
use super::{BExpr, Cmd, Program, Stmt};
use crate::error::{Error, Pos};
use crate::Result;

type E = BExpr<String>;
type S = Stmt<String>;

/// A bit of an integer value: a variable or a known constant.
#[derive(Clone, Debug)]
enum Bit {
    Const(bool),
    Var(String),
}

impl Bit {
    fn expr(&self) -> E {
        match self {
            Bit::Const(b) => BExpr::Const(*b),
            Bit::Var(v) => BExpr::Var(v.clone()),
        }
    }
}

fn not(e: E) -> E {
    match e {
        BExpr::Const(b) => BExpr::Const(!b),
        BExpr::Not(inner) => *inner,
        e => BExpr::not(e),
    }
}

fn and(a: E, b: E) -> E {
    match (a, b) {
        (BExpr::Const(false), _) | (_, BExpr::Const(false)) => BExpr::Const(false),
        (BExpr::Const(true), e) | (e, BExpr::Const(true)) => e,
        (a, b) => BExpr::and(a, b),
    }
}

fn or(a: E, b: E) -> E {
    match (a, b) {
        (BExpr::Const(true), _) | (_, BExpr::Const(true)) => BExpr::Const(true),
        (BExpr::Const(false), e) | (e, BExpr::Const(false)) => e,
        (a, b) => BExpr::or(a, b),
    }
}

fn xor(a: E, b: E) -> E {
    match (a, b) {
        (BExpr::Const(x), e) | (e, BExpr::Const(x)) => {
            if x {
                not(e)
            } else {
                e
            }
        }
        (a, b) => or(and(a.clone(), not(b.clone())), and(not(a), b)),
    }
}

fn eq(a: E, b: E) -> E {
    not(xor(a, b))
}

fn maj(a: E, b: E, c: E) -> E {
    or(or(and(a.clone(), b.clone()), and(a, c.clone())), and(b, c))
}

struct Lowerer {
    blocks: BTreeMap<String, u32>,
    used: BTreeSet<String>,
    next_temp: usize,
}

pub(crate) fn lower(s: Surface) -> Result<Program> {
    let mut used = BTreeSet::new();
    collect_bool_names(&s.body, &mut used);
    for p in s.inputs.iter().chain(&s.outputs) {
        if p.literal.is_some() && (used.contains(&p.name) || s.inputs.iter().any(|i| i.name == p.name)) {
            return Err(Error::Desugar {
                pos: p.pos,
                msg: format!("constant output needs the reserved name `{}`", p.name),
            });
        }
    }
    for p in s.inputs.iter().chain(&s.outputs) {
        if p.width.is_none() && !s.blocks.contains_key(&p.name) {
            used.insert(p.name.clone());
        }
    }
    let mut lw = Lowerer {
        blocks: s.blocks.clone(),
        used,
        next_temp: 0,
    };
    // Block bit names must not collide with boolean variables.
    let bool_names = lw.used.clone();
    for (name, &w) in &s.blocks {
        for bit in lw.bit_names(name, w) {
            if bool_names.contains(&bit) {
                let pos = s
                    .inputs
                    .iter()
                    .chain(&s.decls)
                    .find(|p| &p.name == name)
                    .map_or(Pos { line: 1, col: 1 }, |p| p.pos);
                return Err(Error::Desugar {
                    pos,
                    msg: format!("bit `{bit}` of block `{name}` clashes with a boolean variable"),
                });
            }
            lw.used.insert(bit);
        }
    }

    let inputs = lw.expand_params(&s.inputs);
    let outputs = lw.expand_params(&s.outputs);
    let mut body = Vec::new();
    if s.outputs.iter().any(|p| p.literal == Some(true)) {
        body.push(Stmt::new(Cmd::Assign(String::from(CONST_ONE), BExpr::Const(true))));
    }
    body.extend(lw.stmts(&s.body)?);
    Program::build(inputs, body, outputs)
}

fn collect_bool_names(stmts: &[super::parser::Located], out: &mut BTreeSet<String>) {
    fn expr(e: &SExpr, out: &mut BTreeSet<String>) {
        match e {
            SExpr::Var(v) => {
                out.insert(v.clone());
            }
            SExpr::Not(a) => expr(a, out),
            SExpr::And(a, b) | SExpr::Or(a, b) => {
                expr(a, out);
                expr(b, out);
            }
            SExpr::Const(_) | SExpr::Coin | SExpr::Cmp(..) => {}
        }
    }
    for l in stmts {
        match &l.stmt {
            SStmt::Skip => {}
            SStmt::Assign { target, rhs } => {
                if let Rhs::Bool(e) = rhs {
                    out.insert(target.clone());
                    expr(e, out);
                }
            }
            SStmt::If { cond, then_, else_ } => {
                expr(cond, out);
                collect_bool_names(then_, out);
                collect_bool_names(else_, out);
            }
            SStmt::While { cond, body } => {
                expr(cond, out);
                collect_bool_names(body, out);
            }
        }
    }
}

impl Lowerer {
    fn bit_names(&self, name: &str, width: u32) -> Vec<String> {
        (0..width).rev().map(|i| format!("{name}_{i}")).collect()
    }

    fn expand_params(&self, params: &[Param]) -> Vec<String> {
        params
            .iter()
            .flat_map(|p| match self.blocks.get(&p.name) {
                Some(&w) => self.bit_names(&p.name, w),
                None => alloc::vec![p.name.clone()],
            })
            .collect()
    }

    fn temp(&mut self) -> String {
        loop {
            let name = format!("__t{}", self.next_temp);
            self.next_temp += 1;
            if self.used.insert(name.clone()) {
                return name;
            }
        }
    }

    fn width(&self, name: &str) -> u32 {
        self.blocks[name]
    }

    /// Bits of an atom, most significant first, zero-extended to `width`.
    fn atom_bits(&self, a: &Atom, width: u32) -> Result<Vec<Bit>> {
        match a {
            Atom::Lit(v, pos) => {
                if width < 64 && *v >> width != 0 {
                    return Err(Error::Desugar {
                        pos: *pos,
                        msg: format!("constant {v} does not fit in {width} bits"),
                    });
                }
                Ok((0..width)
                    .rev()
                    .map(|i| Bit::Const(i < 64 && (v >> i) & 1 == 1))
                    .collect())
            }
            Atom::Block(name, pos) => {
                let w = self.width(name);
                if w > width {
                    return Err(Error::Desugar {
                        pos: *pos,
                        msg: format!("block `{name}` is wider than {width} bits"),
                    });
                }
                let mut bits = alloc::vec![Bit::Const(false); (width - w) as usize];
                bits.extend(self.bit_names(name, w).into_iter().map(Bit::Var));
                Ok(bits)
            }
        }
    }

    fn stmts(&mut self, list: &[super::parser::Located]) -> Result<Vec<S>> {
        let mut out = Vec::new();
        for l in list {
            self.stmt(&l.stmt, l.pos, &mut out)?;
        }
        Ok(out)
    }

    fn stmt(&mut self, s: &SStmt, pos: Pos, out: &mut Vec<S>) -> Result<()> {
        match s {
            SStmt::Skip => out.push(Stmt::new(Cmd::Skip)),
            SStmt::Assign { target, rhs } => match rhs {
                Rhs::Bool(e) => {
                    let e = self.expr(e)?;
                    out.push(Stmt::new(Cmd::Assign(target.clone(), e)))
                }
                Rhs::Int(terms) => self.int_assign(target, terms, pos, out)?,
                Rhs::Uniform { lo, hi } => self.uniform(target, *lo, *hi, pos, out)?,
            },
            SStmt::If { cond, then_, else_ } => {
                let c = self.expr(cond)?;
                let t = self.stmts(then_)?;
                let e = self.stmts(else_)?;
                out.push(Stmt::new(Cmd::If(c, t, e)));
            }
            SStmt::While { cond, body } => {
                let c = self.expr(cond)?;
                let b = self.stmts(body)?;
                out.push(Stmt::new(Cmd::While(c, b)));
            }
        }
        Ok(())
    }

    fn int_assign(&mut self, target: &str, terms: &[(bool, Atom)], pos: Pos, out: &mut Vec<S>) -> Result<()> {
        let w = self.width(target);
        let targets = self.bit_names(target, w);
        // Literals must fit the target; wider blocks wrap modulo 2^w.
        let operand = |a: &Atom| -> Result<Vec<Bit>> {
            match a {
                Atom::Lit(..) => self.atom_bits(a, w),
                Atom::Block(name, _) => {
                    let bw = self.width(name);
                    let bits = self.atom_bits(a, bw.max(w))?;
                    Ok(bits[(bits.len() - w as usize)..].to_vec())
                }
            }
        };
        let mut ops = Vec::new();
        for (neg, a) in terms {
            ops.push((*neg, operand(a)?));
        }

        let mut temps: Vec<String> = Vec::new();
        let (first_neg, first) = ops.remove(0);
        let mut acc = if first_neg {
            let zero = alloc::vec![Bit::Const(false); w as usize];
            self.adder(&zero, &first, true, &mut temps, out)
        } else {
            first
        };
        for (neg, b) in ops {
            acc = self.adder(&acc, &b, neg, &mut temps, out);
        }
        let _ = pos;
        for (t, bit) in targets.iter().zip(&acc) {
            out.push(Stmt::new(Cmd::Assign(t.clone(), bit.expr())));
        }
        for t in temps {
            out.push(Stmt::new(Cmd::Assign(t, BExpr::Const(false))));
        }
        Ok(())
    }

    /// Emits `a + b` (or `a - b` when `subtract`) into fresh temporaries.
    fn adder(&mut self, a: &[Bit], b: &[Bit], subtract: bool, temps: &mut Vec<String>, out: &mut Vec<S>) -> Vec<Bit> {
        let w = a.len();
        let mut sum = alloc::vec![Bit::Const(false); w];
        let mut carry = Bit::Const(subtract);
        let carry_var = self.temp();
        temps.push(carry_var.clone());
        for i in (0..w).rev() {
            let x = a[i].expr();
            let y = if subtract { not(b[i].expr()) } else { b[i].expr() };
            let c = carry.expr();
            let s = xor(xor(x.clone(), y.clone()), c.clone());
            sum[i] = match s {
                BExpr::Const(v) => Bit::Const(v),
                s => {
                    let t = self.temp();
                    temps.push(t.clone());
                    out.push(Stmt::new(Cmd::Assign(t.clone(), s)));
                    Bit::Var(t)
                }
            };
            if i > 0 {
                carry = match maj(x, y, c) {
                    BExpr::Const(v) => Bit::Const(v),
                    m => {
                        out.push(Stmt::new(Cmd::Assign(carry_var.clone(), m)));
                        Bit::Var(carry_var.clone())
                    }
                };
            }
        }
        sum
    }

    fn uniform(&mut self, target: &str, lo: u64, hi: u64, pos: Pos, out: &mut Vec<S>) -> Result<()> {
        let w = self.width(target);
        if w < 64 && hi >> w != 0 {
            return Err(Error::Desugar {
                pos,
                msg: format!("uniform upper bound {hi} does not fit in {w} bits"),
            });
        }
        if lo >= hi {
            return Err(Error::Desugar {
                pos,
                msg: format!("uniform({lo}, {hi}] is empty"),
            });
        }
        let bits = self.bit_names(target, w);
        let draw: Vec<S> = bits
            .iter()
            .map(|b| Stmt::new(Cmd::Assign(b.clone(), BExpr::Coin)))
            .collect();
        let v = Atom::Block(String::from(target), pos);
        let in_range = and(
            self.compare(CmpOp::Lt, &Atom::Lit(lo, pos), &v)?,
            self.compare(CmpOp::Le, &v, &Atom::Lit(hi, pos))?,
        );
        out.extend(draw.iter().cloned());
        if !matches!(in_range, BExpr::Const(true)) {
            out.push(Stmt::new(Cmd::While(not(in_range), draw)));
        }
        Ok(())
    }

    fn compare(&self, op: CmpOp, a: &Atom, b: &Atom) -> Result<E> {
        let width_of = |x: &Atom| match x {
            Atom::Block(n, _) => Some(self.width(n)),
            Atom::Lit(..) => None,
        };
        let w = match (width_of(a), width_of(b)) {
            (Some(x), Some(y)) => x.max(y),
            (Some(x), None) | (None, Some(x)) => x,
            (None, None) => {
                let (Atom::Lit(x, _), Atom::Lit(y, _)) = (a, b) else { unreachable!() };
                return Ok(BExpr::Const(match op {
                    CmpOp::Lt => x < y,
                    CmpOp::Le => x <= y,
                    CmpOp::Eq => x == y,
                    CmpOp::Ne => x != y,
                    CmpOp::Gt => x > y,
                    CmpOp::Ge => x >= y,
                }));
            }
        };
        let x = self.atom_bits(a, w)?;
        let y = self.atom_bits(b, w)?;
        Ok(match op {
            CmpOp::Lt => less(&x, &y),
            CmpOp::Le => not(less(&y, &x)),
            CmpOp::Gt => less(&y, &x),
            CmpOp::Ge => not(less(&x, &y)),
            CmpOp::Eq => equal(&x, &y),
            CmpOp::Ne => not(equal(&x, &y)),
        })
    }

    fn expr(&self, e: &SExpr) -> Result<E> {
        Ok(match e {
            // Coins and user-written structure are kept verbatim; folding is
            // only applied to generated comparison formulas.
            SExpr::Const(b) => BExpr::Const(*b),
            SExpr::Coin => BExpr::Coin,
            SExpr::Var(v) => BExpr::Var(v.clone()),
            SExpr::Not(a) => BExpr::not(self.expr(a)?),
            SExpr::And(a, b) => BExpr::and(self.expr(a)?, self.expr(b)?),
            SExpr::Or(a, b) => BExpr::or(self.expr(a)?, self.expr(b)?),
            SExpr::Cmp(op, a, b) => self.compare(*op, a, b)?,
        })
    }
}

fn equal(x: &[Bit], y: &[Bit]) -> E {
    x.iter()
        .zip(y)
        .fold(BExpr::Const(true), |acc, (a, b)| and(acc, eq(a.expr(), b.expr())))
}

/// `x < y` for most-significant-first bit vectors of equal width.
fn less(x: &[Bit], y: &[Bit]) -> E {
    let mut result = BExpr::Const(false);
    let mut prefix_eq = BExpr::Const(true);
    for (a, b) in x.iter().zip(y) {
        let here = and(prefix_eq.clone(), and(not(a.expr()), b.expr()));
        result = or(result, here);
        prefix_eq = and(prefix_eq, eq(a.expr(), b.expr()));
        if matches!(prefix_eq, BExpr::Const(false)) {
            break;
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::super::{desugar, interp::run_with_coins, RunOutcome};
    use crate::bits::BitString;

    fn run_det(src: &str, input: &str) -> BitString {
        let p = desugar(src).unwrap();
        let input: BitString = input.parse().unwrap();
        match run_with_coins(&p, &input, &mut || None, 100_000).unwrap() {
            RunOutcome::Done(o) => o,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn arithmetic_wraps_modulo_width() {
        let src = "input(a[3], b[3]); int s[3], d[3]; s := a + b; d := a - b; return(s, d)";
        for a in 0..8u64 {
            for b in 0..8u64 {
                let mut input = BitString::zeros(6);
                input.set_slice_value(0, 3, a);
                input.set_slice_value(3, 3, b);
                let out = run_det(src, &input.to_string());
                assert_eq!(out.slice_value(0, 3), (a + b) % 8, "{a}+{b}");
                assert_eq!(out.slice_value(3, 3), (a + 8 - b) % 8, "{a}-{b}");
            }
        }
    }

    #[test]
    fn comparisons_match_integers() {
        let src = "input(a[2], b[2]); lt := a < b; le := a <= b; e := a == b; \
                   ne := a != b; gt := a > b; ge := a >= b; k := a <= 2; return(lt, le, e, ne, gt, ge, k)";
        for a in 0..4u64 {
            for b in 0..4u64 {
                let mut input = BitString::zeros(4);
                input.set_slice_value(0, 2, a);
                input.set_slice_value(2, 2, b);
                let out = run_det(src, &input.to_string());
                let want = [a < b, a <= b, a == b, a != b, a > b, a >= b, a <= 2];
                let got: alloc::vec::Vec<bool> = out.iter().collect();
                assert_eq!(got, want, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn constant_outputs() {
        let p = desugar("input(x); skip; return(1, 0, x)").unwrap();
        assert_eq!(run_det("input(x); skip; return(1, 0, x)", "1").to_string(), "101");
        assert_eq!(p.n_lines(), 2);
        let q = super::super::parse("input(x); skip; return(x, false)").unwrap();
        assert_eq!(q.n_lines(), 1);
    }

    #[test]
    fn identity_addition() {
        let src = "input(x[3]); int y[3]; y := x + 0; return(y)";
        for v in 0..8u64 {
            let out = run_det(src, &BitString::from_u64(v, 3).to_string());
            assert_eq!(out.to_u64(), v);
        }
    }

    #[test]
    fn counter_loop_terminates() {
        let src = "input(b); int c[3]; while c < 5 then c := c + 1; return(c)";
        assert_eq!(run_det(src, "0").to_u64(), 5);
    }

    #[test]
    fn rejects_overflowing_constants() {
        use crate::Error;
        assert!(matches!(
            desugar("input(b); int c[2]; c := 4; return(c)"),
            Err(Error::Desugar { .. })
        ));
        assert!(matches!(
            desugar("input(b); int c[2]; if c < 4 then skip else skip; return(c)"),
            Err(Error::Desugar { .. })
        ));
        assert!(matches!(
            desugar("input(b); int c[2]; c := uniform(0, 4]; return(c)"),
            Err(Error::Desugar { .. })
        ));
        assert!(matches!(
            desugar("input(c_0); int c[1]; c := 1; return(c)"),
            Err(Error::Desugar { .. })
        ));
    }
}
