//! Rényi divergence and the gap deciders for Rényi, concentrated and
//! truncated concentrated DP. Logarithms are base 2 throughout.
//!
//! `D_α(P‖Q) = log₂(Σ_o p_o^α q_o^(1−α)) / (α − 1)`. For integer `α` the sum
//! is computed exactly and only the logarithm is enclosed; otherwise each
//! term is `p · 2^((α−1) log₂(p/q))` in interval arithmetic.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};

use crate::bits::BitString;
use crate::dist::Dist;
use crate::dpcheck::{DistTable, Mode, NeighborRelation};
use crate::error::Error;
use crate::interval::{exp2, log2, log2_rational, sqrt, BinInterval};
use crate::lang::Program;
use crate::{Rational, Result};

/// Largest integer `α` handled by the exact-sum path.
const EXACT_ALPHA_MAX: u32 = 1024;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Divergence {
    Finite(BinInterval),
    /// Some outcome has `p > 0 = q`.
    Infinite,
}

impl Divergence {
    pub fn interval(&self) -> Option<&BinInterval> {
        match self {
            Divergence::Finite(i) => Some(i),
            Divergence::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Divergence::Infinite)
    }
}

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

/// `Σ_o p_o^α / q_o^(α−1)` for integer `α`, or `None` on a support violation.
pub fn renyi_sum_exact(p: &Dist, q: &Dist, alpha: u32) -> Option<Rational> {
    let mut sum = Rational::zero();
    for (o, po) in p.iter() {
        if po.is_zero() {
            continue;
        }
        let qo = q.get(o);
        if qo.is_zero() {
            return None;
        }
        sum += Pow::pow(po, alpha) / Pow::pow(&qo, alpha - 1);
    }
    Some(sum)
}

fn support_violated(p: &Dist, q: &Dist) -> bool {
    p.iter().any(|(o, po)| !po.is_zero() && q.get(o).is_zero())
}

fn integer_alpha(alpha: &Rational) -> Option<u32> {
    if alpha.is_integer() {
        alpha.to_integer().to_u32().filter(|&a| a <= EXACT_ALPHA_MAX)
    } else {
        None
    }
}

/// One enclosure attempt at `bits` working bits.
fn renyi_at(p: &Dist, q: &Dist, alpha: &Rational, bits: u32) -> BinInterval {
    let am1 = alpha - Rational::one();
    let inv = Rational::one() / &am1;
    let both_full = p.total() == Rational::one() && q.total() == Rational::one();
    if let Some(a) = integer_alpha(alpha) {
        let s = renyi_sum_exact(p, q, a).expect("support checked");
        return log2_rational(&s, bits).scale_signed(&inv);
    }
    let mut sum = BinInterval::from_rational(&Rational::zero(), bits);
    for (o, po) in p.iter() {
        if po.is_zero() {
            continue;
        }
        let qo = q.get(o);
        let e = log2_rational(&(po / &qo), bits).scale_signed(&am1);
        let term = exp2(&e, bits).scale(po);
        sum = sum.add(&term);
    }
    if both_full {
        // D_α ≥ 0 between distributions, so the sum is at least 1.
        sum = sum.clamp_lower(&Rational::one());
    }
    if !sum.lower().is_positive() {
        sum = sum.clamp_lower(&Rational::new(BigInt::one(), BigInt::one() << bits as usize));
    }
    log2(&sum, bits).scale_signed(&inv)
}

/// Enclosure of `D_α(P‖Q)` with width at most `2^-precision` whenever the
/// internal precision cap allows it.
pub fn renyi_divergence(p: &Dist, q: &Dist, alpha: &Rational, precision: u32) -> Result<Divergence> {
    if *alpha <= Rational::one() {
        return Err(Error::Param(alloc::format!("alpha must exceed 1, got {alpha}")));
    }
    if support_violated(p, q) {
        return Ok(Divergence::Infinite);
    }
    let cap = precision.saturating_mul(16).max(precision + 4096);
    let mut bits = precision + 8;
    loop {
        let d = renyi_at(p, q, alpha, bits);
        if d.width_at_most(precision) || bits >= cap {
            return Ok(Divergence::Finite(d));
        }
        bits = (bits * 2).min(cap);
    }
}

impl BinInterval {
    /// Product with a rational of either sign.
    pub fn scale_signed(&self, r: &Rational) -> BinInterval {
        if r.is_negative() {
            self.negate().scale(&-r)
        } else {
            self.scale(r)
        }
    }

    pub fn negate(&self) -> BinInterval {
        BinInterval::from_rational(&-self.upper(), self.bits()).hull(&BinInterval::from_rational(&-self.lower(), self.bits()))
    }

    /// Smallest interval containing both.
    pub fn hull(&self, other: &BinInterval) -> BinInterval {
        let lo = self.lower().min(other.lower());
        let hi = self.upper().max(other.upper());
        let bits = self.bits().max(other.bits());
        let (l, _) = floor_ceil(&lo, bits);
        let (_, h) = floor_ceil(&hi, bits);
        BinInterval::new(l, h, bits)
    }

    /// Raises the lower end to at least `r`.
    pub fn clamp_lower(&self, r: &Rational) -> BinInterval {
        if self.lower() >= *r {
            return self.clone();
        }
        let (l, _) = floor_ceil(r, self.bits());
        let (_, h) = floor_ceil(&self.upper().max(r.clone()), self.bits());
        BinInterval::new(l, h, self.bits())
    }
}

fn floor_ceil(r: &Rational, bits: u32) -> (BigInt, BigInt) {
    let n = r.numer() << bits as usize;
    (n.div_floor(r.denom()), -(-&n).div_floor(r.denom()))
}

/// Parameters of the gap problems.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapParams {
    /// Order for Rényi DP.
    pub alpha: Option<Rational>,
    pub rho: Rational,
    /// Truncation for tCDP.
    pub omega: Option<Rational>,
    /// The gap is `2^-eta`.
    pub eta: u32,
}

/// Resource caps for the gap deciders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GapLimits {
    /// Largest working precision in bits.
    pub max_precision: u32,
    /// Largest number of α grid points.
    pub max_grid: u64,
}

impl Default for GapLimits {
    fn default() -> Self {
        GapLimits {
            max_precision: 4096,
            max_grid: 1 << 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapDecision {
    Yes,
    No,
    /// The divergence lies inside the gap at the largest precision tried.
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapWitness {
    pub x: BitString,
    pub x_prime: BitString,
    pub alpha: Rational,
    pub divergence: Divergence,
    /// `ρα`, the bound that a yes-instance stays under.
    pub threshold: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapVerdict {
    pub decision: GapDecision,
    pub witness: Option<GapWitness>,
    /// Largest working precision used, in bits.
    pub precision: u32,
}

/// Outcome of one (pair, α) evaluation.
enum PairResult {
    Below,
    Above(Divergence),
    Unknown(Divergence),
}

fn check_point(p: &Dist, q: &Dist, alpha: &Rational, rho: &Rational, gap_bits: u32, start: u32, limits: &GapLimits) -> Result<(PairResult, u32)> {
    let threshold = rho * alpha;
    let upper_bound = &threshold + Rational::new(BigInt::one(), BigInt::one() << gap_bits as usize);
    let mut bits = start.min(limits.max_precision);
    loop {
        let d = renyi_divergence(p, q, alpha, bits)?;
        let iv = match &d {
            Divergence::Infinite => return Ok((PairResult::Above(d), bits)),
            Divergence::Finite(iv) => iv,
        };
        if iv.certainly_le(&threshold) {
            return Ok((PairResult::Below, bits));
        }
        if iv.certainly_ge(&upper_bound) {
            return Ok((PairResult::Above(d), bits));
        }
        if bits >= limits.max_precision {
            return Ok((PairResult::Unknown(d), bits));
        }
        bits = bits.saturating_mul(2).min(limits.max_precision);
    }
}

/// Initial precision: `max(64, η + 3·|program|)`.
pub fn start_precision(prog: &Program, eta: u32) -> u32 {
    let size = u32::try_from(prog.size()).unwrap_or(u32::MAX / 4);
    64u32.max(eta.saturating_add(size.saturating_mul(3)))
}

/// Runs a gap check over all neighbor pairs and the given α values.
/// A certified violation wins over an undecided pair; the witness is the
/// smallest pair, then the smallest α.
fn gap_check(table: &mut DistTable<'_>, alphas: &[Rational], rho: &Rational, gap_bits: u32, eta: u32, limits: &GapLimits) -> Result<GapVerdict> {
    let start = start_precision(table.program(), eta);
    let mut used = 0u32;
    let mut unknown: Option<GapWitness> = None;
    for (x, y) in table.pairs() {
        let q = table.get(&y)?.clone();
        let p = table.get(&x)?.clone();
        if support_violated(&p, &q) {
            return Ok(GapVerdict {
                decision: GapDecision::No,
                witness: Some(GapWitness {
                    threshold: alphas.first().map_or_else(Rational::zero, |a| rho * a),
                    alpha: alphas.first().cloned().unwrap_or_else(|| rat(2, 1)),
                    x,
                    x_prime: y,
                    divergence: Divergence::Infinite,
                }),
                precision: used,
            });
        }
        for alpha in alphas {
            let witness = |d: Divergence| GapWitness {
                x: x.clone(),
                x_prime: y.clone(),
                alpha: alpha.clone(),
                divergence: d,
                threshold: rho * alpha,
            };
            let (result, bits) = check_point(&p, &q, alpha, rho, gap_bits, start, limits)?;
            used = used.max(bits);
            match result {
                PairResult::Below => {}
                PairResult::Above(d) => {
                    return Ok(GapVerdict {
                        decision: GapDecision::No,
                        witness: Some(witness(d)),
                        precision: used,
                    })
                }
                PairResult::Unknown(d) => {
                    if unknown.is_none() {
                        unknown = Some(witness(d));
                    }
                }
            }
        }
    }
    Ok(match unknown {
        Some(w) => GapVerdict {
            decision: GapDecision::Indeterminate,
            witness: Some(w),
            precision: used,
        },
        None => GapVerdict {
            decision: GapDecision::Yes,
            witness: None,
            precision: used,
        },
    })
}

fn positive(name: &str, r: &Rational) -> Result<()> {
    if r.is_positive() {
        Ok(())
    } else {
        Err(Error::Param(alloc::format!("{name} must be positive, got {r}")))
    }
}

/// Gap Rényi DP at a single order: yes if `D_α ≤ ρα` for all neighbors,
/// no if some pair has `D_α ≥ ρα + 2^-η`.
pub fn check_gap_rdp(prog: &Program, params: &GapParams, nb: &NeighborRelation, mode: Mode) -> Result<GapVerdict> {
    check_gap_rdp_with(&mut DistTable::new(prog, nb, mode), params, &GapLimits::default())
}

pub fn check_gap_rdp_with(table: &mut DistTable<'_>, params: &GapParams, limits: &GapLimits) -> Result<GapVerdict> {
    let alpha = params
        .alpha
        .clone()
        .ok_or_else(|| Error::Param(alloc::string::String::from("Rényi DP needs alpha")))?;
    if alpha <= Rational::one() {
        return Err(Error::Param(alloc::format!("alpha must exceed 1, got {alpha}")));
    }
    positive("rho", &params.rho)?;
    gap_check(table, &[alpha], &params.rho, params.eta, params.eta, limits)
}

/// `log₂ m` for the CDP grid: the bit length of the common denominator of
/// all output probabilities, which bounds every probability ratio.
pub fn ratio_bound_bits(table: &mut DistTable<'_>) -> Result<u64> {
    let mut den = BigInt::one();
    for x in table.domain() {
        den = den.lcm(&table.get(&x)?.common_denominator());
    }
    Ok(den.bits())
}

/// Grid `{ j·2^(−η−1)/ρ : 1 < j·step < hi }`.
pub fn alpha_grid(rho: &Rational, eta: u32, hi: &Rational, max_points: u64) -> Result<Vec<Rational>> {
    let step = Rational::new(BigInt::one(), BigInt::one() << (eta as usize + 1)) / rho;
    let first: BigInt = (Rational::one() / &step).floor().to_integer() + 1;
    let last: BigInt = (hi / &step).ceil().to_integer() - 1;
    let count = if last >= first { (&last - &first + BigInt::one()).to_u64().unwrap_or(u64::MAX) } else { 0 };
    if count > max_points {
        return Err(Error::GridBudget {
            points: count,
            limit: max_points,
        });
    }
    let mut grid = Vec::with_capacity(count as usize);
    let mut j = first;
    while j <= last {
        grid.push(&step * Rational::from_integer(j.clone()));
        j += 1;
    }
    Ok(grid)
}

/// Gap concentrated DP: gap Rényi DP with gap `2^(−η−1)` at every grid order
/// in `(1, 1 + log₂ m / ρ)`.
pub fn check_gap_cdp(prog: &Program, params: &GapParams, nb: &NeighborRelation, mode: Mode) -> Result<GapVerdict> {
    check_gap_cdp_with(&mut DistTable::new(prog, nb, mode), params, &GapLimits::default())
}

pub fn check_gap_cdp_with(table: &mut DistTable<'_>, params: &GapParams, limits: &GapLimits) -> Result<GapVerdict> {
    positive("rho", &params.rho)?;
    let grid = cdp_grid(table, params, None, limits)?;
    gap_check(table, &grid, &params.rho, params.eta + 1, params.eta, limits)
}

/// Gap truncated CDP: as CDP with the grid cut to `(1, ω)`.
pub fn check_gap_tcdp(prog: &Program, params: &GapParams, nb: &NeighborRelation, mode: Mode) -> Result<GapVerdict> {
    check_gap_tcdp_with(&mut DistTable::new(prog, nb, mode), params, &GapLimits::default())
}

pub fn check_gap_tcdp_with(table: &mut DistTable<'_>, params: &GapParams, limits: &GapLimits) -> Result<GapVerdict> {
    positive("rho", &params.rho)?;
    let omega = params
        .omega
        .clone()
        .ok_or_else(|| Error::Param(alloc::string::String::from("truncated CDP needs omega")))?;
    if omega <= Rational::one() {
        return Err(Error::Param(alloc::format!("omega must exceed 1, got {omega}")));
    }
    let grid = cdp_grid(table, params, Some(&omega), limits)?;
    gap_check(table, &grid, &params.rho, params.eta + 1, params.eta, limits)
}

/// The α grid used by the CDP and tCDP checks.
pub fn cdp_grid(table: &mut DistTable<'_>, params: &GapParams, omega: Option<&Rational>, limits: &GapLimits) -> Result<Vec<Rational>> {
    let p = ratio_bound_bits(table)?;
    let mut hi = Rational::one() + Rational::from_integer(p.into()) / &params.rho;
    if let Some(w) = omega {
        if *w < hi {
            hi = w.clone();
        }
    }
    alpha_grid(&params.rho, params.eta, &hi, limits.max_grid)
}

/// Certified upper bound on `2^(ρα + log₂(1/δ)/(α−1))`, the `e^ε` at which
/// `(α, ρα)`-RDP implies `(e^ε, δ)`-DP.
pub fn rdp_to_approx_eeps(alpha: &Rational, rho: &Rational, delta: &Rational, bits: u32) -> Rational {
    let l = log2_rational(&(Rational::one() / delta), bits);
    let exponent = l
        .scale(&(Rational::one() / (alpha - Rational::one())))
        .add(&BinInterval::from_rational(&(rho * alpha), bits));
    exp2(&exponent, bits).upper()
}

/// Certified upper bound on `2^(ρ + 2√(ρ log₂(1/δ)))`, the `e^ε` at which
/// `ρ`-CDP implies `(e^ε, δ)`-DP.
pub fn cdp_to_approx_eeps(rho: &Rational, delta: &Rational, bits: u32) -> Rational {
    let l = log2_rational(&(Rational::one() / delta), bits).scale(rho);
    let root = sqrt(&l, bits).scale(&rat(2, 1));
    let exponent = root.add(&BinInterval::from_rational(rho, bits));
    exp2(&exponent, bits).upper()
}
