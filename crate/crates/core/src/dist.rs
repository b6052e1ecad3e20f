//! Exact output distributions.
//!
//! Hitting probabilities come from the expected-visit system
//! `x = e_start + Qᵀ x` over the transient states that can reach a final,
//! solved one strongly connected component at a time in topological order.
//! The probability of final `f` is `Σ_u x_u p_uf`; all finals are obtained
//! from this single solve.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::bits::BitString;
use crate::chain::{build_chain, zero_recurrent, Chain, Limits};
use crate::error::Error;
use crate::lang::Program;
use crate::solve::{bareiss_solve, sparse_solve, tarjan_scc};
use crate::{Rational, Result};

/// Components up to this size use the dense fraction-free solver.
const DENSE_LIMIT: usize = 48;

/// An observable result; `Bottom` (non-termination) sorts last.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    Bits(BitString),
    Bottom,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Bits(b) => {
                if b.is_empty() {
                    f.write_str("ε")
                } else {
                    write!(f, "{b}")
                }
            }
            Outcome::Bottom => f.write_str("⊥"),
        }
    }
}

/// Exact distribution over outcomes. Unconditioned distributions always
/// carry a `Bottom` entry, possibly zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dist {
    entries: BTreeMap<Outcome, Rational>,
}

impl Dist {
    /// Builds a distribution from label masses; `⊥` receives the remainder.
    pub fn from_terminating(masses: BTreeMap<BitString, Rational>) -> Result<Self> {
        let mut entries: BTreeMap<Outcome, Rational> = BTreeMap::new();
        let mut total = Rational::zero();
        for (k, v) in masses {
            if v.is_zero() {
                continue;
            }
            total += &v;
            entries.insert(Outcome::Bits(k), v);
        }
        let bottom = Rational::one() - total;
        if bottom < Rational::zero() {
            return Err(Error::Internal(alloc::format!("output mass exceeds 1 by {}", -bottom)));
        }
        entries.insert(Outcome::Bottom, bottom);
        Ok(Dist { entries })
    }

    /// A distribution from explicit entries; zero entries other than `⊥`
    /// are dropped.
    pub fn from_entries(entries: impl IntoIterator<Item = (Outcome, Rational)>) -> Self {
        Dist {
            entries: entries
                .into_iter()
                .filter(|(o, p)| *o == Outcome::Bottom || !p.is_zero())
                .collect(),
        }
    }

    pub fn get(&self, o: &Outcome) -> Rational {
        self.entries.get(o).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn bottom(&self) -> Rational {
        self.get(&Outcome::Bottom)
    }

    /// Whether a `⊥` entry is present (false after conditioning).
    pub fn has_bottom(&self) -> bool {
        self.entries.contains_key(&Outcome::Bottom)
    }

    /// All entries in outcome order, including a zero `⊥`.
    pub fn iter(&self) -> impl Iterator<Item = (&Outcome, &Rational)> {
        self.entries.iter()
    }

    /// Outcomes with positive probability.
    pub fn support(&self) -> impl Iterator<Item = &Outcome> {
        self.entries.iter().filter(|(_, p)| !p.is_zero()).map(|(o, _)| o)
    }

    pub fn total(&self) -> Rational {
        self.entries.values().fold(Rational::zero(), |a, b| a + b)
    }

    /// Least common multiple of all denominators.
    pub fn common_denominator(&self) -> BigInt {
        self.entries
            .values()
            .fold(BigInt::one(), |acc, p| acc.lcm(p.denom()))
    }
}

/// Hitting probability of every final state reachable with positive
/// probability from the start. Dead states (no path to a final) are
/// ignored, so the chain need not be pruned first.
pub fn hitting_probabilities(c: &Chain) -> Result<BTreeMap<usize, Rational>> {
    let alive = c.reaches_final();
    let mut hits = BTreeMap::new();
    if !alive[c.start()] {
        return Ok(hits);
    }
    if c.is_final(c.start()) {
        hits.insert(c.start(), Rational::one());
        return Ok(hits);
    }
    let transient = |u: usize| alive[u] && !c.is_final(u);
    let succ = |u: usize| -> Vec<usize> {
        if !transient(u) {
            return Vec::new();
        }
        c.edges(u).iter().map(|&(w, _)| w).filter(|&w| transient(w)).collect()
    };
    // Only the part reachable from the start matters; Tarjan from the start
    // alone visits exactly that part.
    let comps = {
        let mut order = Vec::new();
        let mut mark = vec![false; c.len()];
        let mut stack = vec![c.start()];
        mark[c.start()] = true;
        while let Some(u) = stack.pop() {
            order.push(u);
            for w in succ(u) {
                if !mark[w] {
                    mark[w] = true;
                    stack.push(w);
                }
            }
        }
        order.sort_unstable();
        let local: BTreeMap<usize, usize> = order.iter().enumerate().map(|(i, &u)| (u, i)).collect();
        let comps = tarjan_scc(order.len(), &|i| succ(order[i]).into_iter().map(|w| local[&w]).collect());
        comps
            .into_iter()
            .map(|comp| comp.into_iter().map(|i| order[i]).collect::<Vec<_>>())
            .collect::<Vec<_>>()
    };

    let mut inflow: BTreeMap<usize, Rational> = BTreeMap::new();
    inflow.insert(c.start(), Rational::one());
    for comp in comps.iter().rev() {
        let visits = solve_component(c, comp, &mut inflow)?;
        for (&u, x) in comp.iter().zip(&visits) {
            if x.is_zero() {
                continue;
            }
            for &(w, p) in c.edges(u) {
                if !alive[w] || comp.binary_search(&w).is_ok() {
                    continue;
                }
                let mass = x * p.to_rational();
                if c.is_final(w) {
                    *hits.entry(w).or_insert_with(Rational::zero) += mass;
                } else {
                    *inflow.entry(w).or_insert_with(Rational::zero) += mass;
                }
            }
        }
    }
    hits.retain(|_, v| !v.is_zero());
    Ok(hits)
}

/// Expected visit counts for one component given the mass entering it.
fn solve_component(c: &Chain, comp: &[usize], inflow: &mut BTreeMap<usize, Rational>) -> Result<Vec<Rational>> {
    let b: Vec<Rational> = comp
        .iter()
        .map(|u| inflow.remove(u).unwrap_or_else(Rational::zero))
        .collect();
    let has_self_loop = |u: usize| c.edges(u).iter().any(|&(w, _)| w == u);
    if comp.len() == 1 && !has_self_loop(comp[0]) {
        return Ok(b);
    }
    if b.iter().all(Zero::is_zero) {
        return Ok(b);
    }
    let pos = |u: usize| comp.binary_search(&u).ok();
    let singular = || Error::Internal(alloc::string::String::from("singular hitting-probability system"));
    if comp.len() <= DENSE_LIMIT {
        // 2(I - Qᵀ) x = 2b, scaled to integers.
        let n = comp.len();
        let mut a = vec![vec![BigInt::zero(); n]; n];
        for (i, row) in a.iter_mut().enumerate() {
            row[i] = BigInt::from(2);
        }
        for (j, &u) in comp.iter().enumerate() {
            for &(w, p) in c.edges(u) {
                if let Some(i) = pos(w) {
                    a[i][j] -= match p {
                        crate::lang::Prob::Half => 1,
                        crate::lang::Prob::One => 2,
                    };
                }
            }
        }
        let scale = b.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
        let rhs: Vec<BigInt> = b
            .iter()
            .map(|v| v.numer() * (&scale / v.denom()) * 2)
            .collect();
        let y = bareiss_solve(a, rhs).ok_or_else(singular)?;
        let scale = Rational::from_integer(scale);
        Ok(y.into_iter().map(|v| v / &scale).collect())
    } else {
        let mut rows: Vec<BTreeMap<usize, Rational>> = (0..comp.len())
            .map(|i| BTreeMap::from([(i, Rational::one())]))
            .collect();
        for (j, &u) in comp.iter().enumerate() {
            for &(w, p) in c.edges(u) {
                if let Some(i) = pos(w) {
                    let e = rows[i].entry(j).or_insert_with(Rational::zero);
                    *e -= p.to_rational();
                    if e.is_zero() {
                        rows[i].remove(&j);
                    }
                }
            }
        }
        sparse_solve(rows, b).ok_or_else(singular)
    }
}

/// Output distribution of a chain: hitting probabilities summed per label.
pub fn chain_distribution(c: &Chain) -> Result<Dist> {
    let hits = hitting_probabilities(c)?;
    let mut masses: BTreeMap<BitString, Rational> = BTreeMap::new();
    for (f, p) in hits {
        let label = c.label(f).expect("hits are finals").clone();
        *masses.entry(label).or_insert_with(Rational::zero) += p;
    }
    Dist::from_terminating(masses)
}

/// Exact distribution of `prog` on `input` over `{0,1}^l ∪ {⊥}`.
pub fn output_distribution(prog: &Program, input: &BitString) -> Result<Dist> {
    output_distribution_with(prog, input, &Limits::default())
}

pub fn output_distribution_with(prog: &Program, input: &BitString, limits: &Limits) -> Result<Dist> {
    let c = zero_recurrent(build_chain(prog, input, limits)?);
    chain_distribution(&c)
}

/// Conditions on termination: removes `⊥` and rescales. `input` names the
/// run in the error when all mass is on `⊥`.
pub fn conditional_distribution(d: &Dist, input: &BitString) -> Result<Dist> {
    let stay = Rational::one() - d.bottom();
    if stay.is_zero() {
        return Err(Error::UndefinedConditioning { input: input.clone() });
    }
    Ok(Dist {
        entries: d
            .entries
            .iter()
            .filter(|(o, p)| **o != Outcome::Bottom && !p.is_zero())
            .map(|(o, p)| (o.clone(), p / &stay))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::normalize_chain;
    use crate::lang::parse;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn bits(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn dist(src: &str, input: &str) -> Dist {
        output_distribution(&parse(src).unwrap(), &bits(input)).unwrap()
    }

    const RR: &str = "input(x); a := random; b := random; if a && b then r := !x else r := x; return(r)";

    #[test]
    fn coin_and_randomized_response() {
        let d = dist("input(x); y := random; return(y)", "0");
        assert_eq!(d.get(&Outcome::Bits(bits("0"))), r(1, 2));
        assert_eq!(d.get(&Outcome::Bits(bits("1"))), r(1, 2));
        let d = dist(RR, "0");
        assert_eq!(d.get(&Outcome::Bits(bits("0"))), r(3, 4));
        assert_eq!(d.get(&Outcome::Bits(bits("1"))), r(1, 4));
        assert_eq!(d.bottom(), r(0, 1));
        let d = dist(RR, "1");
        assert_eq!(d.get(&Outcome::Bits(bits("1"))), r(3, 4));
    }

    #[test]
    fn geometric_loop_and_divergence() {
        let d = dist("input(x); c := random; while c then c := random; return(x)", "1");
        assert_eq!(d.get(&Outcome::Bits(bits("1"))), r(1, 1));
        let d = dist("input(x); while true then skip; return(x)", "0");
        assert_eq!(d.bottom(), r(1, 1));
        assert_eq!(d.total(), r(1, 1));
    }

    #[test]
    fn partial_termination() {
        let d = dist(
            "input(x, b); if b then { if random && random then skip else (while true then skip) } else skip; return(1)",
            "01",
        );
        assert_eq!(d.bottom(), r(3, 4));
        assert_eq!(d.get(&Outcome::Bits(bits("1"))), r(1, 4));
    }

    #[test]
    fn large_component_uses_sparse_path() {
        let src = "input(b); int u[6]; u := uniform(0, 45]; if u <= 15 then r := true else r := false; return(r)";
        let p = crate::lang::desugar(src).unwrap();
        let d = output_distribution(&p, &bits("0")).unwrap();
        assert_eq!(d.get(&Outcome::Bits(bits("1"))), r(15, 45));
        assert_eq!(d.bottom(), r(0, 1));
    }

    #[test]
    fn normalization_preserves_distribution() {
        for src in [
            RR,
            "input(x); c := random; while c then c := random; return(c)",
            "input(x); while random then skip; y := random && x; return(y)",
        ] {
            let p = parse(src).unwrap();
            for input in ["0", "1"] {
                let c = build_chain(&p, &bits(input), &Limits::default()).unwrap();
                let before = chain_distribution(&c).unwrap();
                let after = chain_distribution(&normalize_chain(&c)).unwrap();
                assert_eq!(before, after, "{src}");
            }
        }
    }

    #[test]
    fn conditioning() {
        let input = bits("0");
        let d = Dist::from_entries([(Outcome::Bits(bits("0")), r(1, 4)), (Outcome::Bottom, r(3, 4))]);
        let c = conditional_distribution(&d, &input).unwrap();
        assert_eq!(c.get(&Outcome::Bits(bits("0"))), r(1, 1));
        assert!(!c.has_bottom());
        let d = Dist::from_entries([
            (Outcome::Bits(bits("0")), r(3, 8)),
            (Outcome::Bits(bits("1")), r(3, 8)),
            (Outcome::Bottom, r(1, 4)),
        ]);
        let c = conditional_distribution(&d, &input).unwrap();
        assert_eq!(c.get(&Outcome::Bits(bits("1"))), r(1, 2));
        let d = Dist::from_entries([(Outcome::Bottom, r(1, 1))]);
        assert!(matches!(
            conditional_distribution(&d, &input),
            Err(Error::UndefinedConditioning { .. })
        ));
    }
}
