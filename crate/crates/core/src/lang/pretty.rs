//! Canonical source form: one statement per line, 4-space indents, every
//! `if`/`while` body in braces.

use alloc::string::String;
use core::fmt::Write;

use super::{BExpr, Cmd, Program, Stmt};

pub fn pretty_print(prog: &Program) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "input({});", prog.input_names().join(", "));
    write_stmts(&prog.named_body(), 0, &mut out);
    let _ = writeln!(out, "return({});", prog.output_names().join(", "));
    out
}

fn indent(depth: usize, out: &mut String) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

/// Appends statements in canonical form at the given nesting depth.
pub(crate) fn write_stmts(list: &[Stmt<String>], depth: usize, out: &mut String) {
    for s in list {
        indent(depth, out);
        match &s.cmd {
            Cmd::Skip => out.push_str("skip;\n"),
            Cmd::Assign(v, e) => {
                let _ = writeln!(out, "{v} := {};", expr_text(e));
            }
            Cmd::If(c, t, e) => {
                let _ = writeln!(out, "if {} then {{", expr_text(c));
                write_stmts(t, depth + 1, out);
                indent(depth, out);
                out.push_str("} else {\n");
                write_stmts(e, depth + 1, out);
                indent(depth, out);
                out.push_str("}\n");
            }
            Cmd::While(c, b) => {
                let _ = writeln!(out, "while {} then {{", expr_text(c));
                write_stmts(b, depth + 1, out);
                indent(depth, out);
                out.push_str("}\n");
            }
        }
    }
}

fn prec<V>(e: &BExpr<V>) -> u8 {
    match e {
        BExpr::Or(..) => 1,
        BExpr::And(..) => 2,
        BExpr::Not(_) => 3,
        _ => 4,
    }
}

/// Renders with the fewest parentheses that preserve the tree shape;
/// `&&` and `||` associate to the left.
pub(crate) fn expr_text(e: &BExpr<String>) -> String {
    let wrap = |inner: &BExpr<String>, need: bool| {
        let s = expr_text(inner);
        if need {
            alloc::format!("({s})")
        } else {
            s
        }
    };
    match e {
        BExpr::Const(true) => String::from("true"),
        BExpr::Const(false) => String::from("false"),
        BExpr::Coin => String::from("random"),
        BExpr::Var(v) => v.clone(),
        BExpr::Not(a) => alloc::format!("!{}", wrap(a, prec(a) < 3)),
        BExpr::And(a, b) => alloc::format!("{} && {}", wrap(a, prec(a) < 2), wrap(b, prec(b) <= 2)),
        BExpr::Or(a, b) => alloc::format!("{} || {}", wrap(a, prec(a) < 1), wrap(b, prec(b) <= 1)),
    }
}
