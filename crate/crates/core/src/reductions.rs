//! Program transformations that turn termination questions into privacy
//! questions, plus the generators used as test instances.
//!
//! Every transformation emits extended source text and lowers it with
//! [`desugar`]. A wrapped program `C` is inlined: each of its variables is
//! renamed with a prefix no variable of `C` already starts with, every
//! non-input variable is reset to `false` and the inputs are copied in, so an
//! inlined copy behaves exactly like a fresh run of `C`.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive};

use crate::error::Error;
use crate::lang::pretty::write_stmts;
use crate::lang::{desugar, resolve_stmts, Program};
use crate::qbf::{Formula, Qbf, Quantifier};
use crate::{Rational, Result};

/// Largest `m` accepted by [`amplify`]; counters are `m + 1` bits wide.
pub const MAX_AMPLIFY: u32 = 16;
/// Largest exponent accepted for a dyadic `δ = a/2^m`.
pub const MAX_DELTA_BITS: u64 = 62;

/// A reduction with its parameters, as selected on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReductionSpec {
    WrapPure,
    WrapApprox { delta: Rational },
    Amplify { m: u32 },
    WrapDistinguish { e_eps: Rational, delta: Rational },
    Tqbf(Qbf),
}

impl ReductionSpec {
    /// Applies the reduction. `Tqbf` ignores `c`; every other kind needs it.
    pub fn apply(&self, c: Option<&Program>) -> Result<Program> {
        let need = || c.ok_or_else(|| Error::Param(String::from("this reduction needs a program")));
        match self {
            ReductionSpec::WrapPure => wrap_pure(need()?),
            ReductionSpec::WrapApprox { delta } => wrap_approx(need()?, delta),
            ReductionSpec::Amplify { m } => amplify(need()?, *m),
            ReductionSpec::WrapDistinguish { e_eps, delta } => {
                wrap_distinguish(need()?, e_eps, delta).map(|(p, _)| p)
            }
            ReductionSpec::Tqbf(f) => tqbf_to_bpwhile(f),
        }
    }
}

/// Name allocator for the emitted program. A block reserves its bit names.
struct Names {
    taken: BTreeSet<String>,
}

impl Names {
    fn new() -> Self {
        let mut taken = BTreeSet::new();
        taken.insert(String::from(crate::lang::parser::CONST_ONE));
        taken.insert(String::from(crate::lang::parser::CONST_ZERO));
        Names { taken }
    }

    fn fresh(&mut self, base: &str) -> String {
        let mut name = String::from(base);
        let mut k = 1;
        while self.taken.contains(&name) {
            name = format!("{base}{k}");
            k += 1;
        }
        self.taken.insert(name.clone());
        name
    }

    fn block(&mut self, base: &str, width: u32) -> String {
        let mut k = 0;
        loop {
            let name = if k == 0 { String::from(base) } else { format!("{base}{k}") };
            k += 1;
            let bits: Vec<String> = (0..width).map(|i| format!("{name}_{i}")).collect();
            if self.taken.contains(&name) || bits.iter().any(|b| self.taken.contains(b)) {
                continue;
            }
            self.taken.insert(name.clone());
            self.taken.extend(bits);
            return name;
        }
    }
}

/// A program prepared for inlining: its renamed variables are reserved in
/// the allocator and the outer program's inputs reuse its input names.
struct Inlinee<'a> {
    prog: &'a Program,
    prefix: String,
}

impl<'a> Inlinee<'a> {
    fn new(prog: &'a Program, base: &str, names: &mut Names) -> Self {
        let mut k = 0;
        let prefix = loop {
            let p = if k == 0 { format!("{base}_") } else { format!("{base}{k}_") };
            k += 1;
            let clash = prog.all_vars().iter().any(|v| v.starts_with(&p))
                || prog.all_vars().iter().any(|v| names.taken.contains(&format!("{p}{v}")));
            if !clash {
                break p;
            }
        };
        names.taken.extend(prog.all_vars().iter().map(|v| format!("{prefix}{v}")));
        Inlinee { prog, prefix }
    }

    /// Emits one fresh run of the program on the outer variables `args`.
    fn emit(&self, args: &[String], depth: usize, out: &mut String) {
        debug_assert_eq!(args.len(), self.prog.n_inputs());
        let inputs = self.prog.input_names();
        for v in self.prog.all_vars() {
            if !inputs.contains(v) {
                line(out, depth, &format!("{}{v} := false;", self.prefix));
            }
        }
        for (x, a) in inputs.iter().zip(args) {
            line(out, depth, &format!("{}{x} := {a};", self.prefix));
        }
        let body = resolve_stmts(&self.prog.named_body(), &mut |v: &String| format!("{}{v}", self.prefix));
        write_stmts(&body, depth, out);
    }
}

fn line(out: &mut String, depth: usize, text: &str) {
    for _ in 0..depth {
        out.push_str("    ");
    }
    out.push_str(text);
    out.push('\n');
}

fn emit_input(out: &mut String, names: &[String]) {
    let _ = writeln!(out, "input({});", names.join(", "));
}

fn emit_blocks(out: &mut String, blocks: &[(String, u32)]) {
    if blocks.is_empty() {
        return;
    }
    let decls: Vec<String> = blocks.iter().map(|(n, w)| format!("{n}[{w}]")).collect();
    let _ = writeln!(out, "int {};", decls.join(", "));
}

fn lower(src: &str) -> Result<Program> {
    desugar(src).map_err(|e| Error::Internal(format!("emitted program does not lower: {e}")))
}

/// Runs `c` when the extra input bit `b` is set and always returns `1`.
/// The result is `(1, 0)`-DP exactly when `c` terminates almost surely on
/// every input, and otherwise the `⊥` mass separates `b = 0` from `b = 1`.
pub fn wrap_pure(c: &Program) -> Result<Program> {
    let mut names = Names::new();
    let xs = c.input_names();
    names.taken.extend(xs.iter().cloned());
    let inner = Inlinee::new(c, "__c", &mut names);
    let b = names.fresh("b");
    let mut out = String::new();
    emit_input(&mut out, &[xs.clone(), alloc::vec![b.clone()]].concat());
    line(&mut out, 0, &format!("if {b} then {{"));
    inner.emit(&xs, 1, &mut out);
    line(&mut out, 0, "} else {");
    line(&mut out, 1, "skip;");
    line(&mut out, 0, "}");
    line(&mut out, 0, "return(1);");
    lower(&out)
}

/// Splits a dyadic `δ ∈ (0, 1)` into `(a, m)` with `δ = a/2^m`, `a` odd.
pub fn dyadic_parts(delta: &Rational) -> Result<(u64, u64)> {
    if !delta.is_positive() || *delta >= Rational::one() {
        return Err(Error::Param(format!("delta must lie in (0, 1), got {delta}")));
    }
    let m = crate::params::dyadic_exponent(delta)
        .ok_or_else(|| Error::Param(format!("delta must be dyadic a/2^m, got {delta}")))?;
    if m > MAX_DELTA_BITS {
        return Err(Error::Param(format!("delta denominator 2^{m} is too large")));
    }
    let a = delta.numer().to_u64().ok_or_else(|| Error::Internal(String::from("numerator")))?;
    Ok((a, m))
}

/// `d < a` for the big-endian bits `d` and a constant `0 < a < 2^len(d)`.
fn less_than_const(d: &[String], a: u64) -> String {
    let m = d.len();
    let bit = |i: usize| (a >> (m - 1 - i)) & 1 == 1;
    let mut terms = Vec::new();
    for i in (0..m).filter(|&i| bit(i)) {
        let mut conj: Vec<String> = (0..i)
            .map(|j| if bit(j) { d[j].clone() } else { format!("!{}", d[j]) })
            .collect();
        conj.push(format!("!{}", d[i]));
        terms.push(format!("({})", conj.join(" && ")));
    }
    terms.join(" || ")
}

/// Draws `m` coins into fresh variables and returns the condition that
/// holds with probability exactly `δ = a/2^m`.
fn emit_delta_coins(delta: &Rational, names: &mut Names, depth: usize, out: &mut String) -> Result<String> {
    let (a, m) = dyadic_parts(delta)?;
    let bits: Vec<String> = (0..m).map(|_| names.fresh("__d")).collect();
    for d in &bits {
        line(out, depth, &format!("{d} := random;"));
    }
    Ok(less_than_const(&bits, a))
}

/// The stand-alone coin gadget: returns `1` with probability `1 − δ`.
pub fn delta_rand(delta: &Rational) -> Result<Program> {
    let mut names = Names::new();
    let x = names.fresh("x");
    let r = names.fresh("r");
    let mut out = String::new();
    emit_input(&mut out, &[x]);
    let hit = emit_delta_coins(delta, &mut names, 0, &mut out)?;
    line(&mut out, 0, &format!("{r} := !({hit});"));
    line(&mut out, 0, &format!("return({r});"));
    lower(&out)
}

/// Like [`wrap_pure`], but after running `c` the program diverges with
/// probability `δ`. The result is `(1, δ)`-DP exactly when `c` terminates
/// almost surely on every input.
pub fn wrap_approx(c: &Program, delta: &Rational) -> Result<Program> {
    dyadic_parts(delta)?;
    let mut names = Names::new();
    let xs = c.input_names();
    names.taken.extend(xs.iter().cloned());
    let inner = Inlinee::new(c, "__c", &mut names);
    let b = names.fresh("b");
    let mut out = String::new();
    emit_input(&mut out, &[xs.clone(), alloc::vec![b.clone()]].concat());
    line(&mut out, 0, &format!("if {b} then {{"));
    inner.emit(&xs, 1, &mut out);
    let hit = emit_delta_coins(delta, &mut names, 1, &mut out)?;
    line(&mut out, 1, &format!("if {hit} then {{"));
    line(&mut out, 2, "while true then {");
    line(&mut out, 3, "skip;");
    line(&mut out, 2, "}");
    line(&mut out, 1, "} else {");
    line(&mut out, 2, "skip;");
    line(&mut out, 1, "}");
    line(&mut out, 0, "} else {");
    line(&mut out, 1, "skip;");
    line(&mut out, 0, "}");
    line(&mut out, 0, "return(1);");
    lower(&out)
}

/// Loss amplification: rounds of `2^m` coins, running `c` on every success
/// but the `2^m`-th, which halts with output `1`. Almost-sure termination is
/// preserved. The halting probability drops below `1/2` only once the
/// divergence probability `p` of `c` is large enough for `m`; at `m = 1` it
/// is exactly `(1-p)/(1+2p)`, so `p > 1/4` is needed.
pub fn amplify(c: &Program, m: u32) -> Result<Program> {
    if m == 0 || m > MAX_AMPLIFY {
        return Err(Error::Param(format!("amplify needs 1 <= m <= {MAX_AMPLIFY}, got {m}")));
    }
    let mut names = Names::new();
    let xs = c.input_names();
    names.taken.extend(xs.iter().cloned());
    let inner = Inlinee::new(c, "__c", &mut names);
    let width = m + 1;
    let succ = names.block("__succ", width);
    let count = names.block("__count", width);
    let done = names.fresh("__done");
    let coin = names.fresh("__coin");
    let top = 1u64 << m;
    let mut out = String::new();
    emit_input(&mut out, &xs);
    emit_blocks(&mut out, &[(succ.clone(), width), (count.clone(), width)]);
    line(&mut out, 0, &format!("{done} := false;"));
    line(&mut out, 0, &format!("while !{done} then {{"));
    line(&mut out, 1, &format!("{succ} := 0;"));
    line(&mut out, 1, &format!("{count} := 0;"));
    line(&mut out, 1, &format!("while {count} < {top} && !{done} then {{"));
    line(&mut out, 2, &format!("{count} := {count} + 1;"));
    line(&mut out, 2, &format!("{coin} := random;"));
    line(&mut out, 2, &format!("if {coin} then {{"));
    line(&mut out, 3, &format!("{succ} := {succ} + 1;"));
    line(&mut out, 3, &format!("if {succ} < {top} then {{"));
    inner.emit(&xs, 4, &mut out);
    line(&mut out, 3, "} else {");
    line(&mut out, 4, &format!("{done} := true;"));
    line(&mut out, 3, "}");
    line(&mut out, 2, "} else {");
    line(&mut out, 3, "skip;");
    line(&mut out, 2, "}");
    line(&mut out, 1, "}");
    line(&mut out, 0, "}");
    line(&mut out, 0, "return(1);");
    lower(&out)
}

/// Smallest `m ≥ 1` with `e_eps · 2^-m + δ < 1`.
pub fn distinguish_reps(e_eps: &Rational, delta: &Rational) -> Result<u32> {
    if delta.is_negative() || *delta >= Rational::one() {
        return Err(Error::Param(format!("delta must lie in [0, 1), got {delta}")));
    }
    if !e_eps.is_positive() {
        return Err(Error::Param(format!("e_eps must be positive, got {e_eps}")));
    }
    let slack = Rational::one() - delta;
    let mut m = 1u32;
    let mut scaled = e_eps / Rational::from_integer(BigInt::from(2));
    while scaled >= slack {
        m += 1;
        scaled /= Rational::from_integer(BigInt::from(2));
    }
    Ok(m)
}

/// Guards `m` sequential runs of `amplify(c, 1)` by the extra input bit,
/// with `m` minimal such that `e_eps · 2^-m + δ < 1`. If `c` terminates
/// almost surely the result always returns `1`; otherwise the halting
/// probability under `b = 1` is at most `2^-m`, which breaks
/// `(e_eps, δ)`-DP. Returns the program and `m`.
pub fn wrap_distinguish(c: &Program, e_eps: &Rational, delta: &Rational) -> Result<(Program, u32)> {
    let reps = distinguish_reps(e_eps, delta)?;
    let amp = amplify(c, 1)?;
    let mut names = Names::new();
    let xs = amp.input_names();
    names.taken.extend(xs.iter().cloned());
    let inner = Inlinee::new(&amp, "__a", &mut names);
    let b = names.fresh("b");
    let mut out = String::new();
    emit_input(&mut out, &[xs.clone(), alloc::vec![b.clone()]].concat());
    line(&mut out, 0, &format!("if {b} then {{"));
    for _ in 0..reps {
        inner.emit(&xs, 1, &mut out);
    }
    line(&mut out, 0, "} else {");
    line(&mut out, 1, "skip;");
    line(&mut out, 0, "}");
    line(&mut out, 0, "return(1);");
    Ok((lower(&out)?, reps))
}

/// Compiles a closed QBF into a program that terminates almost surely
/// exactly when the formula is true. Nested loops enumerate `x_i ∈ {0, 1}`;
/// the 2-bit counter `c_i` counts satisfied branches at depth `i`. The
/// single input bit is ignored.
pub fn tqbf_to_bpwhile(f: &Qbf) -> Result<Program> {
    let t = f.prefix.len();
    if t == 0 {
        return Err(Error::Param(String::from("QBF has no quantified variables")));
    }
    let mut names = Names::new();
    let b = names.fresh("b");
    let xs: Vec<String> = (1..=t).map(|i| names.block(&format!("__x{i}"), 2)).collect();
    let cs: Vec<String> = (1..=t).map(|i| names.block(&format!("__c{i}"), 2)).collect();
    let mut out = String::new();
    emit_input(&mut out, &[b]);
    let blocks: Vec<(String, u32)> = cs.iter().zip(&xs).flat_map(|(c, x)| [(c.clone(), 2), (x.clone(), 2)]).collect();
    emit_blocks(&mut out, &blocks);

    let accept = |i: usize| match f.prefix[i].0 {
        Quantifier::ForAll => format!("{} == 2", cs[i]),
        Quantifier::Exists => format!("{} >= 1", cs[i]),
    };
    fn matrix(e: &Formula, xs: &[String]) -> String {
        match e {
            Formula::Var(i) => format!("{} == 1", xs[*i]),
            Formula::Not(a) => format!("!({})", matrix(a, xs)),
            Formula::And(a, b) => format!("({}) && ({})", matrix(a, xs), matrix(b, xs)),
            Formula::Or(a, b) => format!("({}) || ({})", matrix(a, xs), matrix(b, xs)),
        }
    }
    fn level(i: usize, depth: usize, ctx: &Ctx, out: &mut String) {
        let (xs, cs) = (ctx.xs, ctx.cs);
        line(out, depth, &format!("{} := 0;", cs[i]));
        line(out, depth, &format!("{} := 0;", xs[i]));
        line(out, depth, &format!("while {} <= 1 then {{", xs[i]));
        if i + 1 == xs.len() {
            line(out, depth + 1, &format!("if {} then {{", ctx.phi));
            line(out, depth + 2, &format!("{} := {} + 1;", cs[i], cs[i]));
        } else {
            level(i + 1, depth + 1, ctx, out);
            line(out, depth + 1, &format!("if {} then {{", (ctx.accept)(i + 1)));
            line(out, depth + 2, &format!("{} := {} + 1;", cs[i], cs[i]));
        }
        line(out, depth + 1, "} else {");
        line(out, depth + 2, "skip;");
        line(out, depth + 1, "}");
        line(out, depth + 1, &format!("{} := {} + 1;", xs[i], xs[i]));
        line(out, depth, "}");
    }
    struct Ctx<'a> {
        xs: &'a [String],
        cs: &'a [String],
        phi: String,
        accept: &'a dyn Fn(usize) -> String,
    }
    let ctx = Ctx { xs: &xs, cs: &cs, phi: matrix(&f.matrix, &xs), accept: &accept };
    level(0, 0, &ctx, &mut out);
    line(&mut out, 0, &format!("if {} then {{", accept(0)));
    line(&mut out, 1, "skip;");
    line(&mut out, 0, "} else {");
    line(&mut out, 1, "while true then {");
    line(&mut out, 2, "skip;");
    line(&mut out, 1, "}");
    line(&mut out, 0, "}");
    line(&mut out, 0, "return(1);");
    lower(&out)
}

fn bits_for(v: &BigInt) -> u32 {
    (v.bits() as u32).max(1)
}

/// The normalizer `d = (2^{k+1} + 1)(2^k + 1)^{n-1}` of the bounded
/// geometric mechanism.
pub fn geometric_normalizer(n: u32, k: u32) -> BigInt {
    let base = (BigInt::one() << k as usize) + 1;
    ((BigInt::one() << (k as usize + 1)) + 1) * num_traits::pow(base, (n - 1) as usize)
}

/// Largest normalizer width accepted by [`geometric_source`].
pub const MAX_GEOMETRIC_BITS: u32 = 24;

/// Extended source of the bounded geometric mechanism on counts `0..=n`
/// with parameter `k`: inverse-CDF sampling against one uniform draw from
/// `(0, d]`. Neighboring counts have probability ratio at most `1 + 2^-k`.
///
/// The thresholds depend on `c - z` (or `z - c`), which is first computed
/// into a scratch block and then matched against each possible value.
pub fn geometric_source(n: u32, k: u32) -> Result<String> {
    if n == 0 || k == 0 {
        return Err(Error::Param(format!("geometric mechanism needs n, k >= 1, got n={n} k={k}")));
    }
    let d = geometric_normalizer(n, k);
    let ubits = bits_for(&d);
    if ubits > MAX_GEOMETRIC_BITS {
        return Err(Error::Param(format!("normalizer needs {ubits} bits, more than {MAX_GEOMETRIC_BITS}")));
    }
    let w = bits_for(&BigInt::from(n));
    let base: BigInt = (BigInt::one() << k as usize) + 1;
    let pow2 = |e: u32| -> BigInt { BigInt::one() << (k * e) as usize };
    let below = |t: u32| pow2(t) * num_traits::pow(base.clone(), (n - t) as usize);
    let above = |s: u32| &d - pow2(s + 1) * num_traits::pow(base.clone(), (n - 1 - s) as usize);

    let mut out = String::new();
    let _ = writeln!(out, "input(c[{w}]);");
    let _ = writeln!(out, "int u[{ubits}], z[{w}], r[{w}], t[{w}];");
    line(&mut out, 0, &format!("u := uniform(0, {d}];"));
    line(&mut out, 0, "z := 0;");
    line(&mut out, 0, &format!("r := {n};"));
    line(&mut out, 0, &format!("while z < {n} && r == {n} then {{"));
    let cases = |out: &mut String, values: &[(u32, BigInt)]| {
        for (j, (v, bound)) in values.iter().enumerate() {
            let depth = 2 + j;
            line(out, depth, &format!("if t == {v} then {{"));
            line(out, depth + 1, &format!("if u <= {bound} then {{"));
            line(out, depth + 2, "r := z;");
            line(out, depth + 1, "} else {");
            line(out, depth + 2, "skip;");
            line(out, depth + 1, "}");
            line(out, depth, "} else {");
        }
        line(out, 2 + values.len(), "skip;");
        for j in (0..values.len()).rev() {
            line(out, 2 + j, "}");
        }
    };
    line(&mut out, 1, "if z < c then {");
    line(&mut out, 2, "t := c - z;");
    let lower_cases: Vec<(u32, BigInt)> = (1..=n).map(|t| (t, below(t))).collect();
    cases(&mut out, &lower_cases);
    line(&mut out, 1, "} else {");
    line(&mut out, 2, "t := z - c;");
    let upper_cases: Vec<(u32, BigInt)> = (0..n).map(|s| (s, above(s))).collect();
    cases(&mut out, &upper_cases);
    line(&mut out, 1, "}");
    line(&mut out, 1, "t := 0;");
    line(&mut out, 1, "z := z + 1;");
    line(&mut out, 0, "}");
    line(&mut out, 0, "return(r);");
    Ok(out)
}

/// The bounded geometric mechanism, lowered. See [`geometric_source`].
pub fn geometric(n: u32, k: u32) -> Result<Program> {
    lower(&geometric_source(n, k)?)
}

/// Halts with probability `1/2`: `c := random; if c then skip else loop`.
pub fn c_half() -> Program {
    crate::lang::parse("input(x); c := random; if c then skip else while true then skip; return(x)")
        .expect("fixed source parses")
}
