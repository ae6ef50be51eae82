//! Prime moduli and the per-field constants the sliced kernels need.
//!
//! An element of F_p is stored in its natural binary encoding using
//! r = floor(log2 p) + 1 bits, so 2^(r-1) <= p < 2^r. Two families matter:
//! Mersenne moduli (p = 2^r - 1), where a carry out of the top bit re-enters
//! at bit 0 via a circular plane shift, and everything else, where the wrap
//! instead adds the correction constant 2^r - p.

use crate::error::{Error, Result};

/// Largest supported modulus (exclusive). Keeps r <= 31 so products and
/// intermediate sums of digits stay comfortably inside u64.
pub const MAX_MODULUS: u64 = 1 << 31;

/// A prime modulus p >= 3 together with the constants derived from its
/// binary shape. Cheap to copy; every vector carries one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldSpec {
    p: u64,
    r: u32,
    /// 2^r - p for non-Mersenne moduli, 0 for Mersenne ones (the Mersenne
    /// wrap is a plane rotation and needs no additive correction).
    correction: u64,
}

impl FieldSpec {
    pub fn new(p: u64) -> Result<FieldSpec> {
        if p >= MAX_MODULUS {
            return Err(Error::ModulusTooLarge(p));
        }
        if p < 3 || !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        let r = 64 - p.leading_zeros();
        let correction = if p == (1u64 << r) - 1 { 0 } else { (1u64 << r) - p };
        Ok(FieldSpec { p, r, correction })
    }

    /// The modulus p.
    #[inline]
    pub fn modulus(&self) -> u64 {
        self.p
    }

    /// Bits per element, r = floor(log2 p) + 1.
    #[inline]
    pub fn bit_width(&self) -> u32 {
        self.r
    }

    /// True iff p = 2^r - 1.
    #[inline]
    pub fn is_mersenne(&self) -> bool {
        self.correction == 0
    }

    /// The correction vector f = 2^r - p as a bit mask (bit j = f_j).
    /// All-zero for Mersenne moduli.
    #[inline]
    pub fn correction_mask(&self) -> u64 {
        self.correction
    }

    #[inline]
    pub(crate) fn correction_bit(&self, j: u32) -> bool {
        (self.correction >> j) & 1 == 1
    }

    #[inline]
    pub(crate) fn modulus_bit(&self, j: u32) -> bool {
        (self.p >> j) & 1 == 1
    }

    /// Bit indices where the binary expansion of p has ones, ascending.
    /// For Mersenne moduli this is every index 0..r.
    pub fn one_positions(&self) -> Vec<u32> {
        (0..self.r).filter(|&j| self.modulus_bit(j)).collect()
    }

    /// (a + b) mod p on plain digits.
    #[inline]
    pub fn add_digits(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p { s - self.p } else { s }
    }

    /// (a - b) mod p on plain digits.
    #[inline]
    pub fn sub_digits(&self, a: u64, b: u64) -> u64 {
        if a >= b { a - b } else { a + self.p - b }
    }

    /// a * b mod p on plain digits.
    #[inline]
    pub fn mul_digits(&self, a: u64, b: u64) -> u64 {
        a * b % self.p
    }

    /// Multiplicative inverse of a nonzero digit, via Fermat.
    pub fn inv_digit(&self, a: u64) -> u64 {
        debug_assert!(a != 0 && a < self.p);
        let mut base = a % self.p;
        let mut exp = self.p - 2;
        let mut acc = 1u64;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base % self.p;
            }
            base = base * base % self.p;
            exp >>= 1;
        }
        acc
    }
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    if p.is_multiple_of(2) {
        return p == 2;
    }
    let mut d = 3u64;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}
