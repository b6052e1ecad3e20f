//! Pure and approximate differential privacy.
//!
//! Both checks are pointwise: `(e^ε, δ)`-DP holds iff for every ordered
//! neighbor pair `Σ_o max(p_o − e^ε q_o, 0) ≤ δ`. With `δ = 0` this is
//! `p_o ≤ e^ε q_o` for every outcome. `e^ε` is given as a rational and
//! never converted to `ε`.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Zero};

use crate::bits::BitString;
use crate::chain::Limits;
use crate::dist::{conditional_distribution, output_distribution_with, Dist, Outcome};
use crate::error::Error;
use crate::lang::Program;
use crate::{Rational, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrivacyParams {
    pub e_eps: Rational,
    pub delta: Rational,
}

impl PrivacyParams {
    pub fn new(e_eps: Rational, delta: Rational) -> Result<Self> {
        if e_eps < Rational::zero() {
            return Err(Error::Param(alloc::format!("e^eps must be non-negative, got {e_eps}")));
        }
        if delta < Rational::zero() || delta > Rational::one() {
            return Err(Error::Param(alloc::format!("delta must lie in [0, 1], got {delta}")));
        }
        Ok(PrivacyParams { e_eps, delta })
    }

    pub fn pure(e_eps: Rational) -> Result<Self> {
        Self::new(e_eps, Rational::zero())
    }
}

/// Whether non-termination is observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// `⊥` is an outcome like any other.
    #[default]
    Sensitive,
    /// Distributions are conditioned on termination.
    Insensitive,
}

pub type NeighborFn = Arc<dyn Fn(&BitString, &BitString) -> bool + Send + Sync>;

/// Which pairs of inputs are neighbors. Every variant is symmetric and
/// irreflexive.
#[derive(Clone)]
pub enum NeighborRelation {
    /// Inputs differing in exactly one bit.
    Hamming1,
    /// Inputs equal outside the block `start..start + width` whose block
    /// values differ by one. With `max`, only inputs whose block value is at
    /// most `max` take part.
    IntAdjacent {
        start: usize,
        width: usize,
        max: Option<u64>,
    },
    Custom(NeighborFn),
}

impl fmt::Debug for NeighborRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NeighborRelation::Hamming1 => f.write_str("Hamming1"),
            NeighborRelation::IntAdjacent { start, width, max } => f
                .debug_struct("IntAdjacent")
                .field("start", start)
                .field("width", width)
                .field("max", max)
                .finish(),
            NeighborRelation::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl NeighborRelation {
    pub fn related(&self, x: &BitString, y: &BitString) -> bool {
        if x.len() != y.len() {
            return false;
        }
        match self {
            NeighborRelation::Hamming1 => x.hamming(y) == 1,
            NeighborRelation::IntAdjacent { start, width, max } => {
                let (s, w) = (*start, *width);
                if s + w > x.len() || (0..x.len()).any(|i| (i < s || i >= s + w) && x.get(i) != y.get(i)) {
                    return false;
                }
                let (a, b) = (x.slice_value(s, w), y.slice_value(s, w));
                a.abs_diff(b) == 1 && max.is_none_or(|m| a <= m && b <= m)
            }
            NeighborRelation::Custom(f) => x != y && f(x, y),
        }
    }

    /// Whether input `x` belongs to the relation's domain.
    pub fn in_domain(&self, x: &BitString) -> bool {
        match self {
            NeighborRelation::IntAdjacent {
                start,
                width,
                max: Some(m),
            } => *start + *width <= x.len() && x.slice_value(*start, *width) <= *m,
            _ => true,
        }
    }

    fn neighbors_of(&self, x: &BitString) -> Vec<BitString> {
        let mut out: Vec<BitString> = match self {
            NeighborRelation::Hamming1 => (0..x.len())
                .map(|i| {
                    let mut y = x.clone();
                    y.set(i, !x.get(i));
                    y
                })
                .collect(),
            NeighborRelation::IntAdjacent { start, width, .. } => {
                if start + width > x.len() || *width == 0 || *width > 63 {
                    return Vec::new();
                }
                let v = x.slice_value(*start, *width);
                [v.checked_sub(1), v.checked_add(1).filter(|u| u >> width == 0)]
                    .into_iter()
                    .flatten()
                    .map(|u| {
                        let mut y = x.clone();
                        y.set_slice_value(*start, *width, u);
                        y
                    })
                    .collect()
            }
            NeighborRelation::Custom(_) => BitString::all(x.len()).collect(),
        };
        out.retain(|y| self.related(x, y));
        out.sort();
        out
    }
}

/// All ordered neighbor pairs over `{0,1}^n`, in lexicographic order.
pub fn neighbor_pairs(n: usize, nb: &NeighborRelation) -> impl Iterator<Item = (BitString, BitString)> + '_ {
    BitString::all(n).flat_map(move |x| {
        let ys = nb.neighbors_of(&x);
        ys.into_iter().map(move |y| (x.clone(), y))
    })
}

/// Inputs that occur in at least one neighbor pair, in order.
pub fn neighbor_domain(n: usize, nb: &NeighborRelation) -> Vec<BitString> {
    BitString::all(n)
        .filter(|x| nb.in_domain(x) && !nb.neighbors_of(x).is_empty())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Private,
    NotPrivate,
}

/// A violated inequality `lhs > rhs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub x: BitString,
    pub x_prime: BitString,
    /// The single outcome for pure DP; the set `{o : p_o > e^ε q_o}` for
    /// approximate DP.
    pub outcomes: Vec<Outcome>,
    /// `Pr[C(x) ∈ O]`.
    pub lhs: Rational,
    /// `e^ε Pr[C(x') ∈ O] + δ`.
    pub rhs: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DPVerdict {
    pub decision: Decision,
    pub witness: Option<Witness>,
}

impl DPVerdict {
    pub fn is_private(&self) -> bool {
        self.decision == Decision::Private
    }

    fn private() -> Self {
        DPVerdict {
            decision: Decision::Private,
            witness: None,
        }
    }

    fn violated(w: Witness) -> Self {
        DPVerdict {
            decision: Decision::NotPrivate,
            witness: Some(w),
        }
    }
}

/// Distributions of the inputs in a neighbor relation's domain, computed on
/// demand and cached per input.
pub struct DistTable<'a> {
    prog: &'a Program,
    nb: NeighborRelation,
    mode: Mode,
    limits: Limits,
    raw: BTreeMap<BitString, Dist>,
    seen: BTreeMap<BitString, Dist>,
    checked: bool,
}

impl<'a> DistTable<'a> {
    pub fn new(prog: &'a Program, nb: &NeighborRelation, mode: Mode) -> Self {
        DistTable {
            prog,
            nb: nb.clone(),
            mode,
            limits: Limits::default(),
            raw: BTreeMap::new(),
            seen: BTreeMap::new(),
            checked: false,
        }
    }

    pub fn with_limits(mut self, limits: Limits) -> Self {
        self.limits = limits;
        self
    }

    pub fn program(&self) -> &Program {
        self.prog
    }

    pub fn limits(&self) -> Limits {
        self.limits
    }

    pub fn relation(&self) -> &NeighborRelation {
        &self.nb
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn domain(&self) -> Vec<BitString> {
        neighbor_domain(self.prog.n_inputs(), &self.nb)
    }

    /// Supplies an already computed unconditioned distribution.
    pub fn insert(&mut self, input: BitString, d: Dist) {
        self.raw.insert(input, d);
    }

    fn raw(&mut self, x: &BitString) -> Result<&Dist> {
        if !self.raw.contains_key(x) {
            let d = output_distribution_with(self.prog, x, &self.limits)?;
            self.raw.insert(x.clone(), d);
        }
        Ok(&self.raw[x])
    }

    /// In insensitive mode every domain input must terminate with positive
    /// probability; the first that does not is reported.
    fn check_conditioning(&mut self) -> Result<()> {
        if self.checked || self.mode == Mode::Sensitive {
            return Ok(());
        }
        for x in self.domain() {
            let d = self.raw(&x)?;
            if d.bottom() == Rational::one() {
                return Err(Error::UndefinedConditioning { input: x });
            }
        }
        self.checked = true;
        Ok(())
    }

    /// The distribution the checks compare for input `x`.
    pub fn get(&mut self, x: &BitString) -> Result<&Dist> {
        self.check_conditioning()?;
        if !self.seen.contains_key(x) {
            let raw = self.raw(x)?.clone();
            let d = match self.mode {
                Mode::Sensitive => raw,
                Mode::Insensitive => conditional_distribution(&raw, x)?,
            };
            self.seen.insert(x.clone(), d);
        }
        Ok(&self.seen[x])
    }

    pub fn pairs(&self) -> Vec<(BitString, BitString)> {
        neighbor_pairs(self.prog.n_inputs(), &self.nb).collect()
    }
}

/// First outcome with `p_o > e^ε q_o`, in outcome order.
pub fn pure_violation(p: &Dist, q: &Dist, e_eps: &Rational) -> Option<(Outcome, Rational, Rational)> {
    p.iter()
        .filter(|(_, po)| !po.is_zero())
        .map(|(o, po)| (o, po, e_eps * q.get(o)))
        .find(|(_, po, rhs)| *po > rhs)
        .map(|(o, po, rhs)| (o.clone(), po.clone(), rhs))
}

/// `Σ_o max(p_o − e^ε q_o, 0)`, stopping as soon as it exceeds `stop`.
pub fn pointwise_excess(p: &Dist, q: &Dist, e_eps: &Rational, stop: Option<&Rational>) -> Rational {
    let mut sum = Rational::zero();
    for (o, po) in p.iter() {
        let d = po - e_eps * q.get(o);
        if d > Rational::zero() {
            sum += d;
            if stop.is_some_and(|s| sum > *s) {
                break;
            }
        }
    }
    sum
}

/// The set `O = {o : p_o > e^ε q_o}` with `P(O)` and `e^ε Q(O) + δ`.
pub fn approx_witness(x: &BitString, y: &BitString, p: &Dist, q: &Dist, params: &PrivacyParams) -> Witness {
    let mut outcomes = Vec::new();
    let mut lhs = Rational::zero();
    let mut q_mass = Rational::zero();
    for (o, po) in p.iter() {
        let qo = q.get(o);
        if *po > &params.e_eps * &qo {
            outcomes.push(o.clone());
            lhs += po;
            q_mass += qo;
        }
    }
    Witness {
        x: x.clone(),
        x_prime: y.clone(),
        outcomes,
        lhs,
        rhs: &params.e_eps * q_mass + &params.delta,
    }
}

pub fn check_pure_dp(prog: &Program, e_eps: &Rational, nb: &NeighborRelation, mode: Mode) -> Result<DPVerdict> {
    let params = PrivacyParams::pure(e_eps.clone())?;
    check_pure_with(&mut DistTable::new(prog, nb, mode), &params.e_eps)
}

pub fn check_pure_with(table: &mut DistTable<'_>, e_eps: &Rational) -> Result<DPVerdict> {
    for (x, y) in table.pairs() {
        let q = table.get(&y)?.clone();
        let p = table.get(&x)?;
        if let Some((o, lhs, rhs)) = pure_violation(p, &q, e_eps) {
            return Ok(DPVerdict::violated(Witness {
                x,
                x_prime: y,
                outcomes: alloc::vec![o],
                lhs,
                rhs,
            }));
        }
    }
    Ok(DPVerdict::private())
}

pub fn check_approx_dp(prog: &Program, params: &PrivacyParams, nb: &NeighborRelation, mode: Mode) -> Result<DPVerdict> {
    check_approx_with(&mut DistTable::new(prog, nb, mode), params)
}

pub fn check_approx_with(table: &mut DistTable<'_>, params: &PrivacyParams) -> Result<DPVerdict> {
    let params = PrivacyParams::new(params.e_eps.clone(), params.delta.clone())?;
    for (x, y) in table.pairs() {
        let q = table.get(&y)?.clone();
        let p = table.get(&x)?;
        if pointwise_excess(p, &q, &params.e_eps, Some(&params.delta)) > params.delta {
            return Ok(DPVerdict::violated(approx_witness(&x, &y, p, &q, &params)));
        }
    }
    Ok(DPVerdict::private())
}
