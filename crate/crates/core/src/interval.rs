//! Dyadic interval arithmetic with outward rounding.
//!
//! A [`BinInterval`] is `[lo, hi] · 2^-bits` with integer endpoints. Every
//! operation rounds the lower end down and the upper end up, so the true
//! value stays enclosed. Logarithms use `ln m = 2 atanh((m-1)/(m+1))` on
//! `m ∈ [1, 2)` and `ln 2 = 2 atanh(1/3)`; powers of two use the Taylor
//! series of `exp` on the fractional part. Series tails are bounded
//! explicitly.

use core::cmp::Ordering;
use core::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::Rational;

/// Extra bits carried internally by the transcendental functions.
const GUARD: u32 = 24;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinInterval {
    lo: BigInt,
    hi: BigInt,
    bits: u32,
}

fn pow2(k: u32) -> BigInt {
    BigInt::one() << k as usize
}

fn div_floor(a: &BigInt, b: &BigInt) -> BigInt {
    a.div_floor(b)
}

fn div_ceil(a: &BigInt, b: &BigInt) -> BigInt {
    -(-a).div_floor(b)
}

/// `floor(a / 2^k)`.
fn shr_floor(a: &BigInt, k: u32) -> BigInt {
    div_floor(a, &pow2(k))
}

fn shr_ceil(a: &BigInt, k: u32) -> BigInt {
    div_ceil(a, &pow2(k))
}

/// `floor(r · 2^bits)` and `ceil(r · 2^bits)`.
fn fixed(r: &Rational, bits: u32) -> (BigInt, BigInt) {
    let n = r.numer() << bits as usize;
    (div_floor(&n, r.denom()), div_ceil(&n, r.denom()))
}

impl BinInterval {
    /// `[lo, hi] · 2^-bits`; panics if `lo > hi`.
    pub fn new(lo: BigInt, hi: BigInt, bits: u32) -> Self {
        assert!(lo <= hi, "empty interval");
        BinInterval { lo, hi, bits }
    }

    pub fn from_rational(r: &Rational, bits: u32) -> Self {
        let (lo, hi) = fixed(r, bits);
        BinInterval { lo, hi, bits }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn lower(&self) -> Rational {
        Rational::new(self.lo.clone(), pow2(self.bits))
    }

    pub fn upper(&self) -> Rational {
        Rational::new(self.hi.clone(), pow2(self.bits))
    }

    pub fn width(&self) -> Rational {
        Rational::new(&self.hi - &self.lo, pow2(self.bits))
    }

    /// Whether the width is at most `2^-p`.
    pub fn width_at_most(&self, p: u32) -> bool {
        let w = &self.hi - &self.lo;
        if p >= self.bits {
            w.is_zero() || (w << (p - self.bits) as usize) <= BigInt::one()
        } else {
            w <= pow2(self.bits - p)
        }
    }

    pub fn contains(&self, r: &Rational) -> bool {
        self.lower() <= *r && *r <= self.upper()
    }

    /// Rescales to `bits` fractional bits, rounding outward.
    pub fn with_bits(&self, bits: u32) -> Self {
        match bits.cmp(&self.bits) {
            Ordering::Equal => self.clone(),
            Ordering::Greater => {
                let s = (bits - self.bits) as usize;
                BinInterval::new(&self.lo << s, &self.hi << s, bits)
            }
            Ordering::Less => {
                let s = self.bits - bits;
                BinInterval::new(shr_floor(&self.lo, s), shr_ceil(&self.hi, s), bits)
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let bits = self.bits.max(other.bits);
        let (a, b) = (self.with_bits(bits), other.with_bits(bits));
        BinInterval::new(a.lo + b.lo, a.hi + b.hi, bits)
    }

    /// Product with a non-negative rational.
    pub fn scale(&self, r: &Rational) -> Self {
        assert!(!r.is_negative(), "scale factor must be non-negative");
        BinInterval::new(
            div_floor(&(&self.lo * r.numer()), r.denom()),
            div_ceil(&(&self.hi * r.numer()), r.denom()),
            self.bits,
        )
    }

    /// Product with a non-negative interval of the same kind.
    pub fn mul_nonneg(&self, other: &Self) -> Self {
        assert!(!self.lo.is_negative() && !other.lo.is_negative());
        let s = other.bits;
        BinInterval::new(
            shr_floor(&(&self.lo * &other.lo), s),
            shr_ceil(&(&self.hi * &other.hi), s),
            self.bits,
        )
    }

    /// Interval certainly at most `r`.
    pub fn certainly_le(&self, r: &Rational) -> bool {
        self.upper() <= *r
    }

    /// Interval certainly at least `r`.
    pub fn certainly_ge(&self, r: &Rational) -> bool {
        self.lower() >= *r
    }

    /// Decimal approximation of the midpoint, for display.
    pub fn midpoint(&self) -> Rational {
        Rational::new(&self.lo + &self.hi, pow2(self.bits + 1))
    }
}

impl fmt::Display for BinInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lower(), self.upper())
    }
}

/// Enclosure of `atanh(z) · 2^g` for `0 ≤ z ≤ 1/3` given as fixed-point
/// bounds `z_lo ≤ z·2^g ≤ z_hi`.
fn atanh_fixed(z_lo: &BigInt, z_hi: &BigInt, g: u32) -> (BigInt, BigInt) {
    let two_g = 2 * g;
    let lower = {
        let z2 = z_lo * z_lo;
        let mut pw = z_lo.clone();
        let mut sum = BigInt::zero();
        let mut k = 1u32;
        while !pw.is_zero() {
            sum += &pw / BigInt::from(k);
            pw = shr_floor(&(&pw * &z2), two_g);
            k += 2;
        }
        sum
    };
    let upper = {
        if z_hi.is_zero() {
            BigInt::zero()
        } else {
            let z2 = z_hi * z_hi;
            let mut pw = z_hi.clone();
            let mut sum = BigInt::zero();
            let mut k = 1u32;
            loop {
                sum += div_ceil(&pw, &BigInt::from(k));
                if pw <= BigInt::one() {
                    // remaining terms sum to at most pw·z²/(1 − z²) ≤ pw/8
                    sum += 1;
                    break;
                }
                pw = shr_ceil(&(&pw * &z2), two_g);
                k += 2;
            }
            sum
        }
    };
    (lower, upper)
}

/// `ln 2 · 2^g`, enclosed.
fn ln2_fixed(g: u32) -> (BigInt, BigInt) {
    let one = pow2(g);
    let three = BigInt::from(3);
    let (a, b) = atanh_fixed(&div_floor(&one, &three), &div_ceil(&one, &three), g);
    (a * 2, b * 2)
}

/// Enclosure of `log₂ r` for `r > 0`.
pub fn log2_rational(r: &Rational, bits: u32) -> BinInterval {
    assert!(r.is_positive(), "log of a non-positive number");
    let g = bits + GUARD;
    let (n, d) = (r.numer(), r.denom());
    let mut k = n.bits() as i64 - d.bits() as i64;
    // m = r / 2^k ∈ [1, 2)
    let scaled = |k: i64| -> (BigInt, BigInt) {
        if k >= 0 {
            (n.clone(), d << k as usize)
        } else {
            (n << (-k) as usize, d.clone())
        }
    };
    let (mut p, mut q) = scaled(k);
    if p < q {
        k -= 1;
        (p, q) = scaled(k);
    }
    let z = Rational::new(&p - &q, &p + &q);
    let (z_lo, z_hi) = fixed(&z, g);
    let (a_lo, a_hi) = atanh_fixed(&z_lo, &z_hi, g);
    let (l_lo, l_hi) = ln2_fixed(g);
    // log₂ m = 2 atanh(z) / ln 2
    let m_lo = div_floor(&((a_lo * 2) << g as usize), &l_hi);
    let m_hi = div_ceil(&((a_hi * 2) << g as usize), &l_lo);
    let base = BigInt::from(k) << g as usize;
    BinInterval::new(base.clone() + m_lo, base + m_hi, g).with_bits(bits)
}

/// Enclosure of `2^(x / 2^g)` as fixed point at `g` bits, lower or upper.
fn exp2_point(x: &BigInt, g: u32, upper: bool) -> BigInt {
    let one = pow2(g);
    let k = div_floor(x, &one);
    let f = x - &k * &one;
    let (l_lo, l_hi) = ln2_fixed(g);
    let mut sum = one.clone();
    let mut t = one.clone();
    let mut i = 1u32;
    if upper {
        let y = shr_ceil(&(&f * &l_hi), g);
        if !y.is_zero() {
            loop {
                t = div_ceil(&(&t * &y), &(&one * BigInt::from(i)));
                sum += &t;
                if t <= BigInt::one() {
                    // y/(i+1) < 1/2, so the tail is below the last term
                    sum += &t;
                    break;
                }
                i += 1;
            }
        }
    } else {
        let y = shr_floor(&(&f * &l_lo), g);
        while !t.is_zero() {
            t = div_floor(&(&t * &y), &(&one * BigInt::from(i)));
            sum += &t;
            i += 1;
        }
    }
    let k: i64 = i64::try_from(k).expect("exponent out of range");
    if k >= 0 {
        sum << k as usize
    } else if upper {
        shr_ceil(&sum, (-k) as u32)
    } else {
        shr_floor(&sum, (-k) as u32)
    }
}

/// Enclosure of `2^x` over the interval `x`.
pub fn exp2(x: &BinInterval, bits: u32) -> BinInterval {
    let g = bits.max(x.bits) + GUARD;
    let x = x.with_bits(g);
    BinInterval::new(exp2_point(&x.lo, g, false), exp2_point(&x.hi, g, true), g).with_bits(bits)
}

/// Enclosure of `log₂` over a positive interval.
pub fn log2(x: &BinInterval, bits: u32) -> BinInterval {
    assert!(x.lo.sign() == Sign::Plus, "log of an interval touching zero");
    let lo = log2_rational(&x.lower(), bits);
    let hi = log2_rational(&x.upper(), bits);
    BinInterval::new(lo.lo, hi.hi, bits)
}

/// Enclosure of `√x` over a non-negative interval.
pub fn sqrt(x: &BinInterval, bits: u32) -> BinInterval {
    assert!(!x.lo.is_negative(), "square root of a negative number");
    // √(v / 2^(2·bits)) · 2^bits = √v
    let x = x.with_bits(2 * bits);
    let lo = x.lo.sqrt();
    let r = x.hi.sqrt();
    let hi = if &r * &r == x.hi { r } else { r + 1 };
    BinInterval::new(lo, hi, bits)
}
