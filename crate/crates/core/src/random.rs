//! Seeded generators for test instances: small programs and small QBFs.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lang::{BExpr, Cmd, Program, Stmt};
use crate::qbf::{Formula, Qbf, Quantifier};

/// Size bounds for [`random_program`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub max_vars: usize,
    pub max_lines: usize,
    pub max_inputs: usize,
    pub max_outputs: usize,
}

impl Default for Shape {
    fn default() -> Self {
        Shape { max_vars: 6, max_lines: 12, max_inputs: 2, max_outputs: 3 }
    }
}

struct Gen<'r, R> {
    rng: &'r mut R,
    vars: Vec<String>,
}

impl<R: Rng> Gen<'_, R> {
    fn var(&mut self) -> String {
        self.vars.choose(self.rng).expect("at least one variable").clone()
    }

    fn expr(&mut self, depth: u32) -> BExpr<String> {
        let roll = self.rng.gen_range(0..10);
        match roll {
            0 if depth > 0 => BExpr::not(self.expr(depth - 1)),
            1 if depth > 0 => BExpr::and(self.expr(depth - 1), self.expr(depth - 1)),
            2 if depth > 0 => BExpr::or(self.expr(depth - 1), self.expr(depth - 1)),
            3 => BExpr::Const(self.rng.gen()),
            4 | 5 => BExpr::Coin,
            _ => BExpr::Var(self.var()),
        }
    }

    /// Statements using at most `budget` lines; `budget >= 1`.
    fn block(&mut self, budget: usize) -> (Vec<Stmt<String>>, usize) {
        let mut out = Vec::new();
        let mut used = 0;
        let want = self.rng.gen_range(1..=budget.min(4));
        while used < budget && out.len() < want {
            let (s, n) = self.stmt(budget - used);
            out.push(s);
            used += n;
        }
        (out, used)
    }

    fn stmt(&mut self, budget: usize) -> (Stmt<String>, usize) {
        let roll = self.rng.gen_range(0..10);
        if roll < 2 && budget >= 3 {
            let c = self.expr(1);
            let (t, nt) = self.block((budget - 2) / 2 + 1);
            let (e, ne) = self.block((budget - 1 - nt).max(1));
            return (Stmt::new(Cmd::If(c, t, e)), 1 + nt + ne);
        }
        if roll < 4 && budget >= 2 {
            let c = self.expr(1);
            let (b, nb) = self.block(budget - 1);
            return (Stmt::new(Cmd::While(c, b)), 1 + nb);
        }
        if roll == 4 {
            return (Stmt::new(Cmd::Skip), 1);
        }
        let v = self.var();
        (Stmt::new(Cmd::Assign(v, self.expr(2))), 1)
    }
}

/// A random core program within `shape`. Loops are unrestricted, so some
/// programs diverge with positive probability.
pub fn random_program<R: Rng>(rng: &mut R, shape: &Shape) -> Program {
    let n_vars = rng.gen_range(1..=shape.max_vars.max(1));
    let vars: Vec<String> = (0..n_vars).map(|i| format!("v{i}")).collect();
    let n_inputs = rng.gen_range(1..=shape.max_inputs.max(1).min(n_vars));
    let n_outputs = rng.gen_range(1..=shape.max_outputs.max(1).min(n_vars));
    let mut outputs = vars.clone();
    outputs.shuffle(rng);
    outputs.truncate(n_outputs);
    let inputs = vars[..n_inputs].to_vec();
    let budget = rng.gen_range(1..=shape.max_lines.max(1));
    let mut g = Gen { rng, vars };
    let (body, _) = g.block(budget);
    Program::build(inputs, body, outputs).expect("generated programs are well formed")
}

/// [`random_program`] with the default shape, from a seed.
pub fn random_program_seeded(seed: u64) -> Program {
    random_program(&mut ChaCha8Rng::seed_from_u64(seed), &Shape::default())
}

fn random_formula<R: Rng>(rng: &mut R, t: usize, depth: u32) -> Formula {
    match rng.gen_range(0..6) {
        0 if depth > 0 => Formula::Not(Box::new(random_formula(rng, t, depth - 1))),
        1 | 2 if depth > 0 => Formula::And(
            Box::new(random_formula(rng, t, depth - 1)),
            Box::new(random_formula(rng, t, depth - 1)),
        ),
        3 | 4 if depth > 0 => Formula::Or(
            Box::new(random_formula(rng, t, depth - 1)),
            Box::new(random_formula(rng, t, depth - 1)),
        ),
        _ => Formula::Var(rng.gen_range(0..t)),
    }
}

/// A closed QBF with `1..=max_vars` quantified variables `x1, x2, ...`.
pub fn random_qbf<R: Rng>(rng: &mut R, max_vars: usize) -> Qbf {
    let t = rng.gen_range(1..=max_vars.max(1));
    let prefix = (1..=t)
        .map(|i| {
            let q = if rng.gen() { Quantifier::ForAll } else { Quantifier::Exists };
            (q, format!("x{i}"))
        })
        .collect();
    Qbf { prefix, matrix: random_formula(rng, t, 3) }
}

pub fn random_qbf_seeded(seed: u64, max_vars: usize) -> Qbf {
    random_qbf(&mut ChaCha8Rng::seed_from_u64(seed), max_vars)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse, pretty_print};

    #[test]
    fn programs_respect_shape() {
        let shape = Shape::default();
        for seed in 0..300 {
            let p = random_program_seeded(seed);
            assert!(p.n_vars() <= shape.max_vars, "seed {seed}");
            assert!(p.n_lines() <= shape.max_lines, "seed {seed}");
            assert!(p.n_outputs() <= shape.max_outputs);
            assert!(p.n_inputs() >= 1 && p.n_inputs() <= shape.max_inputs);
            let back = parse(&pretty_print(&p)).unwrap();
            assert_eq!(pretty_print(&back), pretty_print(&p));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(pretty_print(&random_program_seeded(7)), pretty_print(&random_program_seeded(7)));
        assert_eq!(random_qbf_seeded(3, 3), random_qbf_seeded(3, 3));
    }

    #[test]
    fn qbfs_round_trip() {
        for seed in 0..50 {
            let f = random_qbf_seeded(seed, 3);
            assert!(f.prefix.len() <= 3);
            assert_eq!(Qbf::parse(&f.to_string()).unwrap(), f);
        }
    }
}
