use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::Error;

/// A fixed-length bit string packed most-significant-first.
///
/// Bit 0 is the leftmost character of the textual form, so the derived
/// ordering on equal-length strings is lexicographic and also numeric.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        BitString {
            words: alloc::vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut s = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            s.set(i, b);
        }
        s
    }

    /// The `len` low bits of `value`, most significant first.
    pub fn from_u64(value: u64, len: usize) -> Self {
        let mut s = Self::zeros(len);
        for i in 0..len {
            let shift = len - 1 - i;
            s.set(i, shift < 64 && (value >> shift) & 1 == 1);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / 64] >> (63 - i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (63 - i % 64);
        if v {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Numeric value of the bits in `start..start + width`, first bit most significant.
    pub fn slice_value(&self, start: usize, width: usize) -> u64 {
        (start..start + width).fold(0u64, |acc, i| (acc << 1) | self.get(i) as u64)
    }

    pub fn set_slice_value(&mut self, start: usize, width: usize, value: u64) {
        for k in 0..width {
            let shift = width - 1 - k;
            self.set(start + k, shift < 64 && (value >> shift) & 1 == 1);
        }
    }

    /// Value as an integer; only meaningful for strings of at most 64 bits.
    pub fn to_u64(&self) -> u64 {
        self.slice_value(0, self.len.min(64))
    }

    pub fn hamming(&self, other: &BitString) -> usize {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// Hex rendering of the packed bits, padded to whole nibbles with zeros.
    pub fn to_hex(&self) -> String {
        let nibbles = self.len.div_ceil(4);
        let mut out = String::with_capacity(nibbles.max(1));
        for n in 0..nibbles {
            let mut v = 0u8;
            for k in 0..4 {
                let i = n * 4 + k;
                v = (v << 1) | (i < self.len && self.get(i)) as u8;
            }
            out.push(char::from_digit(v as u32, 16).unwrap());
        }
        if out.is_empty() {
            out.push('-');
        }
        out
    }

    /// All bit strings of length `n` in lexicographic order.
    pub fn all(n: usize) -> impl Iterator<Item = BitString> {
        assert!(n < 64, "cannot enumerate 2^{n} bit strings");
        (0..1u64 << n).map(move |v| BitString::from_u64(v, n))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Param(alloc::format!("not a bit string: `{s}`"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BitString::from_bools(&bits))
    }
}
