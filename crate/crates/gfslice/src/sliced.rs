//! Sliced-bit storage: n field elements held as r bit planes.
//!
//! Plane j, bit i is bit j of element i (bit 0 = least significant). A column
//! across the planes is the natural binary encoding of one element, so any
//! number of elements can share one storage word per plane and the logical
//! kernels in `arith` act on all of them at once.
//!
//! Storage words are `u32` or `u64`; the choice is a type parameter, so mixing
//! widths in one operation is rejected at compile time. Bits at positions >= n
//! in the last word of every plane are kept zero (tail invariant), which is
//! what lets weights be read off with plain population counts.

use std::fmt;
use std::ops::{BitAnd, BitAndAssign, BitOr, BitOrAssign, BitXor, BitXorAssign, Not};

use crate::error::{Error, Result};
use crate::field::FieldSpec;

mod sealed {
    pub trait Sealed {}
    impl Sealed for u32 {}
    impl Sealed for u64 {}
}

/// Storage word for bit planes. Implemented for `u32` and `u64` only.
pub trait Word:
    sealed::Sealed
    + Copy
    + Eq
    + fmt::Debug
    + Send
    + Sync
    + BitAnd<Output = Self>
    + BitOr<Output = Self>
    + BitXor<Output = Self>
    + Not<Output = Self>
    + BitAndAssign
    + BitOrAssign
    + BitXorAssign
    + 'static
{
    const BITS: usize;
    const ZERO: Self;
    const ONES: Self;
    fn count_ones(self) -> u32;
    /// One-hot word with only `bit` set. `bit < Self::BITS`.
    fn one_hot(bit: usize) -> Self;
    /// Word with bits 0..count set; `count <= Self::BITS`.
    fn low_mask(count: usize) -> Self;
}

impl Word for u32 {
    const BITS: usize = 32;
    const ZERO: Self = 0;
    const ONES: Self = u32::MAX;
    #[inline]
    fn count_ones(self) -> u32 {
        u32::count_ones(self)
    }
    #[inline]
    fn one_hot(bit: usize) -> Self {
        1u32 << bit
    }
    #[inline]
    fn low_mask(count: usize) -> Self {
        if count >= 32 { u32::MAX } else { (1u32 << count) - 1 }
    }
}

impl Word for u64 {
    const BITS: usize = 64;
    const ZERO: Self = 0;
    const ONES: Self = u64::MAX;
    #[inline]
    fn count_ones(self) -> u32 {
        u64::count_ones(self)
    }
    #[inline]
    fn one_hot(bit: usize) -> Self {
        1u64 << bit
    }
    #[inline]
    fn low_mask(count: usize) -> Self {
        if count >= 64 { u64::MAX } else { (1u64 << count) - 1 }
    }
}

/// Runtime selector for the storage word, for callers that pick the width
/// from configuration rather than at the type level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WordWidth {
    W32,
    W64,
}

impl WordWidth {
    pub fn bits(self) -> u32 {
        match self {
            WordWidth::W32 => 32,
            WordWidth::W64 => 64,
        }
    }
}

impl fmt::Display for WordWidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.bits())
    }
}

/// One vector of digits in [0, p-1], stored as plain integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseVector {
    field: FieldSpec,
    digits: Vec<u64>,
}

impl DenseVector {
    pub fn new(field: FieldSpec, digits: Vec<u64>) -> Result<DenseVector> {
        if let Some(&d) = digits.iter().find(|&&d| d >= field.modulus()) {
            return Err(Error::DigitOutOfRange { digit: d, p: field.modulus() });
        }
        Ok(DenseVector { field, digits })
    }

    #[inline]
    pub fn field(&self) -> FieldSpec {
        self.field
    }

    #[inline]
    pub fn digits(&self) -> &[u64] {
        &self.digits
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.digits.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    /// Number of nonzero digits.
    pub fn weight(&self) -> u64 {
        self.digits.iter().filter(|&&d| d != 0).count() as u64
    }
}

/// n field elements as r bit planes of `ceil(n / W::BITS)` words each.
/// Planes are stored back to back in one buffer, plane 0 first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlicedVector<W: Word> {
    field: FieldSpec,
    n: usize,
    stride: usize,
    planes: Vec<W>,
}

impl<W: Word> SlicedVector<W> {
    /// All-zero vector of length n.
    pub fn zero(field: FieldSpec, n: usize) -> SlicedVector<W> {
        let stride = n.div_ceil(W::BITS);
        SlicedVector {
            field,
            n,
            stride,
            planes: vec![W::ZERO; stride * field.bit_width() as usize],
        }
    }

    /// Transpose a dense vector into bit planes.
    pub fn pack(v: &DenseVector) -> SlicedVector<W> {
        let mut out = SlicedVector::zero(v.field(), v.len());
        for (i, &digit) in v.digits().iter().enumerate() {
            out.set_element(i, digit);
        }
        out
    }

    /// Transpose back to digits. Inverse of `pack` on normalized vectors.
    pub fn unpack(&self) -> DenseVector {
        let digits: Vec<u64> = (0..self.n).map(|i| self.element(i)).collect();
        debug_assert!(
            digits.iter().all(|&d| d < self.field.modulus()),
            "unnormalized column leaked out of a kernel"
        );
        DenseVector { field: self.field, digits }
    }

    /// Number of nonzero elements: a column is zero exactly when every plane
    /// bit is zero, so the weight is the popcount of the OR of all planes.
    pub fn weight(&self) -> u64 {
        let r = self.field.bit_width() as usize;
        let mut total = 0u64;
        for i in 0..self.stride {
            let mut acc = W::ZERO;
            for j in 0..r {
                acc |= self.planes[j * self.stride + i];
            }
            total += acc.count_ones() as u64;
        }
        total
    }

    #[inline]
    pub fn field(&self) -> FieldSpec {
        self.field
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub(crate) fn stride(&self) -> usize {
        self.stride
    }

    #[inline]
    pub(crate) fn plane(&self, j: u32) -> &[W] {
        let s = self.stride;
        &self.planes[j as usize * s..(j as usize + 1) * s]
    }

    #[inline]
    pub(crate) fn plane_mut(&mut self, j: u32) -> &mut [W] {
        let s = self.stride;
        &mut self.planes[j as usize * s..(j as usize + 1) * s]
    }

    #[inline]
    pub(crate) fn planes_raw(&self) -> &[W] {
        &self.planes
    }

    #[inline]
    pub(crate) fn planes_raw_mut(&mut self) -> &mut [W] {
        &mut self.planes
    }

    /// Mask selecting the live bits of the last word (all-ones when n is a
    /// multiple of the word width or the vector is empty).
    pub(crate) fn tail_mask(&self) -> W {
        let rem = self.n % W::BITS;
        if rem == 0 { W::ONES } else { W::low_mask(rem) }
    }

    /// Clear bits at positions >= n in the last word of every plane.
    pub(crate) fn clear_tail(&mut self) {
        if self.stride == 0 {
            return;
        }
        let mask = self.tail_mask();
        let s = self.stride;
        for j in 0..self.field.bit_width() as usize {
            self.planes[j * s + s - 1] &= mask;
        }
    }

    pub(crate) fn copy_from(&mut self, other: &SlicedVector<W>) {
        debug_assert_eq!(self.n, other.n);
        debug_assert_eq!(self.field, other.field);
        self.planes.copy_from_slice(&other.planes);
    }

    fn set_element(&mut self, i: usize, digit: u64) {
        let word = i / W::BITS;
        let bit = i % W::BITS;
        let s = self.stride;
        for j in 0..self.field.bit_width() {
            if (digit >> j) & 1 == 1 {
                self.planes[j as usize * s + word] |= W::one_hot(bit);
            }
        }
    }

    pub(crate) fn element(&self, i: usize) -> u64 {
        let word = i / W::BITS;
        let bit = i % W::BITS;
        let mut value = 0u64;
        for j in 0..self.field.bit_width() {
            if self.planes[j as usize * self.stride + word] & W::one_hot(bit) != W::ZERO {
                value |= 1 << j;
            }
        }
        value
    }
}

/// One bit per coordinate marking it nonzero; output of the isometric
/// (weight-only) operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonzeroMask<W: Word> {
    n: usize,
    words: Vec<W>,
}

impl<W: Word> NonzeroMask<W> {
    pub(crate) fn from_words(n: usize, words: Vec<W>) -> NonzeroMask<W> {
        debug_assert_eq!(words.len(), n.div_ceil(W::BITS));
        NonzeroMask { n, words }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn words(&self) -> &[W] {
        &self.words
    }

    /// Number of set bits, i.e. the Hamming weight the mask stands for.
    pub fn weight(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Bit i of the mask.
    pub fn bit(&self, i: usize) -> bool {
        self.words[i / W::BITS] & W::one_hot(i % W::BITS) != W::ZERO
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(p: u64) -> FieldSpec {
        FieldSpec::new(p).unwrap()
    }

    #[test]
    fn pack_matches_worked_f3_layout() {
        // Digits (2,0,1) over F3: plane 0 (low bits) = (0,0,1), plane 1 = (1,0,0).
        let v = DenseVector::new(f(3), vec![2, 0, 1]).unwrap();
        let s: SlicedVector<u64> = SlicedVector::pack(&v);
        assert_eq!(s.plane(0), &[0b100]);
        assert_eq!(s.plane(1), &[0b001]);
    }

    #[test]
    fn pack_matches_worked_f7_layout() {
        // Digits (5,6) over F7: planes are bit0=(1,0), bit1=(0,1), bit2=(1,1).
        let v = DenseVector::new(f(7), vec![5, 6]).unwrap();
        let s: SlicedVector<u64> = SlicedVector::pack(&v);
        assert_eq!(s.plane(0), &[0b01]);
        assert_eq!(s.plane(1), &[0b10]);
        assert_eq!(s.plane(2), &[0b11]);
    }

    #[test]
    fn unpack_single_element() {
        // F7 column (0,0,1) decodes to 4.
        let v = DenseVector::new(f(7), vec![4]).unwrap();
        let s: SlicedVector<u32> = SlicedVector::pack(&v);
        assert_eq!(s.unpack().digits(), &[4]);
    }

    #[test]
    fn round_trip_across_word_boundaries() {
        let field = f(13);
        for n in [0usize, 1, 31, 32, 33, 63, 64, 65, 130] {
            let digits: Vec<u64> = (0..n as u64).map(|i| i * 7 % 13).collect();
            let v = DenseVector::new(field, digits.clone()).unwrap();
            let s64: SlicedVector<u64> = SlicedVector::pack(&v);
            let s32: SlicedVector<u32> = SlicedVector::pack(&v);
            assert_eq!(s64.unpack().digits(), &digits[..]);
            assert_eq!(s32.unpack().digits(), &digits[..]);
            assert_eq!(s64.weight(), v.weight());
            assert_eq!(s32.weight(), v.weight());
        }
    }

    #[test]
    fn weight_examples() {
        let v = DenseVector::new(f(3), vec![2, 0, 1]).unwrap();
        let s: SlicedVector<u64> = SlicedVector::pack(&v);
        assert_eq!(s.weight(), 2);
        let zeros = DenseVector::new(f(13), vec![0; 100]).unwrap();
        let z: SlicedVector<u64> = SlicedVector::pack(&zeros);
        assert_eq!(z.weight(), 0);
    }

    #[test]
    fn tail_stays_zero_and_out_of_weight() {
        // n = 70 over u64: second word has 6 live bits, the rest must be zero.
        let field = f(7);
        let digits = vec![6u64; 70];
        let v = DenseVector::new(field, digits).unwrap();
        let s: SlicedVector<u64> = SlicedVector::pack(&v);
        for j in 0..3 {
            assert_eq!(s.plane(j)[1] & !s.tail_mask(), 0);
        }
        assert_eq!(s.weight(), 70);
    }

    #[test]
    fn rejects_out_of_range_digits() {
        assert!(matches!(
            DenseVector::new(f(7), vec![0, 7]),
            Err(Error::DigitOutOfRange { digit: 7, p: 7 })
        ));
    }

    #[test]
    fn mask_weight_counts_bits() {
        let m: NonzeroMask<u64> = NonzeroMask::from_words(70, vec![u64::MAX, 0b110111]);
        assert_eq!(m.weight(), 64 + 5);
        assert!(m.bit(0) && m.bit(64) && !m.bit(67));
    }
}
