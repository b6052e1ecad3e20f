//! Textual rational parameters: `a/b`, `a/2^m`, integers and decimals.

use alloc::format;
use alloc::string::String;

use num_bigint::BigInt;
use num_traits::{One, Pow, Zero};

use crate::error::Error;
use crate::{Rational, Result};

fn bad(s: &str, why: &str) -> Error {
    Error::Param(format!("`{s}`: {why}"))
}

fn integer(s: &str, whole: &str) -> Result<BigInt> {
    let t = s.trim();
    if t.is_empty() || !t.trim_start_matches('-').chars().all(|c| c.is_ascii_digit()) || t == "-" {
        return Err(bad(whole, "expected an integer"));
    }
    t.parse::<BigInt>().map_err(|_| bad(whole, "expected an integer"))
}

/// Parses `a/b`, `a/2^m`, an integer, or a decimal such as `0.375`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    if let Some((num, den)) = t.split_once('/') {
        let num = integer(num, s)?;
        let den = match den.trim().split_once('^') {
            Some((base, exp)) => {
                let base = integer(base, s)?;
                let exp: u32 = exp.trim().parse().map_err(|_| bad(s, "bad exponent"))?;
                Pow::pow(base, exp)
            }
            None => integer(den, s)?,
        };
        if den.is_zero() {
            return Err(bad(s, "zero denominator"));
        }
        return Ok(Rational::new(num, den));
    }
    if let Some((int, frac)) = t.split_once('.') {
        let neg = int.trim().starts_with('-');
        let int = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            integer(int, s)?
        };
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad(s, "bad decimal"));
        }
        let scale: BigInt = Pow::pow(BigInt::from(10), frac.len() as u32);
        let frac = Rational::new(frac.parse::<BigInt>().expect("digits"), scale);
        let mag = Rational::from_integer(num_traits::Signed::abs(&int)) + frac;
        return Ok(if neg { -mag } else { mag });
    }
    Ok(Rational::from_integer(integer(t, s)?))
}

pub fn is_dyadic(r: &Rational) -> bool {
    let d = r.denom();
    (d & (d - BigInt::one())).is_zero()
}

/// Like [`parse_rational`], but the value must have a power-of-two denominator.
pub fn parse_dyadic(s: &str) -> Result<Rational> {
    let r = parse_rational(s)?;
    if !is_dyadic(&r) {
        return Err(bad(s, "expected a dyadic rational (denominator a power of two)"));
    }
    Ok(r)
}

/// Canonical `num/den` form; integers keep the `/1`.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// `k` with `r = a / 2^k` for a dyadic `r`.
pub fn dyadic_exponent(r: &Rational) -> Option<u64> {
    is_dyadic(r).then(|| r.denom().bits() - 1)
}

pub fn parse_u32(s: &str) -> Result<u32> {
    s.trim().parse().map_err(|_| bad(s, "expected a non-negative integer"))
}
