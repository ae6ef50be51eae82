//! Field arithmetic on sliced vectors, built entirely from word-wide
//! AND/OR/XOR/NOT.
//!
//! Addition comes in four flavors picked by `add`: straight-line circuits for
//! F_3 and F_7, a carry-rotation loop for other Mersenne moduli, and a
//! carry-shift loop with correction constant for everything else. Subtraction
//! is addition of the negation; for Mersenne moduli negation is bitwise
//! complement (p - x = NOT x on r bits) plus a fixup that returns the all-ones
//! column to zero.
//!
//! Scalar multiples by powers of two are circular plane shifts, which makes
//! v + h*w cheap for every h over F_3 and F_7. The isometric variants skip
//! the sum's digits altogether and return only the nonzero-coordinate mask,
//! which is all a weight computation needs.

use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::sliced::{DenseVector, NonzeroMask, SlicedVector, Word};

/// Trace of one generic-adder run: how many carry-resolution passes the loop
/// took and how many lanes the final wrap fixup cleared (lanes whose raw sum
/// landed exactly on the bit pattern of p).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CarryTrace {
    pub loop_iterations: u32,
    pub wrap_fixups: u64,
}

fn check_pair<W: Word>(v: &SlicedVector<W>, w: &SlicedVector<W>) -> Result<()> {
    if v.field() != w.field() {
        return Err(Error::FieldMismatch {
            left: v.field().modulus(),
            right: w.field().modulus(),
        });
    }
    if v.len() != w.len() {
        return Err(Error::LengthMismatch { left: v.len(), right: w.len() });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Straight-line kernels for F_3 and F_7.
// ---------------------------------------------------------------------------

/// One word of the F_3 adder. The carry out of the top bit is worth
/// 4 = 1 (mod 3), so it re-enters at bit 0; the final AND/XOR pair maps the
/// all-ones column (value 3) back to zero.
#[inline]
fn add3_words<W: Word>(a0: W, a1: W, b0: W, b1: W) -> (W, W) {
    let s0 = a0 ^ b0;
    let c0 = a0 & b0;
    let s1 = a1 ^ b1 ^ c0;
    let c1 = a1 & b1;
    let s0 = s0 ^ c1;
    let t = s0 & s1;
    (s0 ^ t, s1 ^ t)
}

/// One word of the F_7 adder: a 3-bit ripple add, the top carry folded back
/// into bit 0 (8 = 1 mod 7) with its own short ripple, then the all-ones
/// fixup.
#[inline]
fn add7_words<W: Word>(a0: W, a1: W, a2: W, b0: W, b1: W, b2: W) -> (W, W, W) {
    let s0 = a0 ^ b0;
    let c0 = a0 & b0;
    let s1 = a1 ^ b1 ^ c0;
    let c1 = (a1 & b1) | (a1 & c0) | (b1 & c0);
    let s2 = a2 ^ b2 ^ c1;
    let c2 = (a2 & b2) | (a2 & c1) | (b2 & c1);
    let c0 = s0 & c2;
    let s0 = s0 ^ c2;
    let c1 = s1 & c0;
    let s1 = s1 ^ c0;
    let s2 = s2 ^ c1;
    let t = s0 & s1 & s2;
    (s0 ^ t, s1 ^ t, s2 ^ t)
}

/// Mersenne negation of one F_7 column set: complement, then return the
/// all-ones pattern (the old zero) to zero. Also keeps tail bits clear.
#[inline]
fn neg7_words<W: Word>(b0: W, b1: W, b2: W) -> (W, W, W) {
    let m0 = !b0;
    let m1 = !b1;
    let m2 = !b2;
    let t = m0 & m1 & m2;
    (m0 ^ t, m1 ^ t, m2 ^ t)
}

/// v + 2^rot * w over F_3, written into `out`. `rot` selects the plane
/// rotation of w (rot = 1 is multiplication by 2, i.e. negation).
pub(crate) fn add_f3_planes<W: Word>(stride: usize, v: &[W], w: &[W], rot: u32, out: &mut [W]) {
    debug_assert!(rot < 2);
    let (w0, w1) = if rot == 0 { (0, stride) } else { (stride, 0) };
    for i in 0..stride {
        let (s0, s1) = add3_words(v[i], v[stride + i], w[w0 + i], w[w1 + i]);
        out[i] = s0;
        out[stride + i] = s1;
    }
}

/// v + 2^rot * w over F_7.
pub(crate) fn add_f7_planes<W: Word>(stride: usize, v: &[W], w: &[W], rot: u32, out: &mut [W]) {
    debug_assert!(rot < 3);
    let w0 = ((3 - rot) % 3) as usize * stride;
    let w1 = ((4 - rot) % 3) as usize * stride;
    let w2 = ((5 - rot) % 3) as usize * stride;
    for i in 0..stride {
        let (s0, s1, s2) = add7_words(
            v[i],
            v[stride + i],
            v[2 * stride + i],
            w[w0 + i],
            w[w1 + i],
            w[w2 + i],
        );
        out[i] = s0;
        out[stride + i] = s1;
        out[2 * stride + i] = s2;
    }
}

/// v - 2^rot * w over F_7 (negation fused into the operand loads).
pub(crate) fn sub_f7_planes<W: Word>(stride: usize, v: &[W], w: &[W], rot: u32, out: &mut [W]) {
    debug_assert!(rot < 3);
    let w0 = ((3 - rot) % 3) as usize * stride;
    let w1 = ((4 - rot) % 3) as usize * stride;
    let w2 = ((5 - rot) % 3) as usize * stride;
    for i in 0..stride {
        let (n0, n1, n2) = neg7_words(w[w0 + i], w[w1 + i], w[w2 + i]);
        let (s0, s1, s2) =
            add7_words(v[i], v[stride + i], v[2 * stride + i], n0, n1, n2);
        out[i] = s0;
        out[stride + i] = s1;
        out[2 * stride + i] = s2;
    }
}

// ---------------------------------------------------------------------------
// Generic kernels.
// ---------------------------------------------------------------------------

/// Working buffers for the generic carry loops, reusable across calls.
#[derive(Debug, Default)]
pub(crate) struct GenericScratch<W> {
    d: Vec<W>,
    e: Vec<W>,
    nd: Vec<W>,
    ne: Vec<W>,
    carry: Vec<W>,
}

impl<W: Word> GenericScratch<W> {
    pub(crate) fn new() -> GenericScratch<W> {
        GenericScratch { d: Vec::new(), e: Vec::new(), nd: Vec::new(), ne: Vec::new(), carry: Vec::new() }
    }

    fn resize(&mut self, planes: usize, stride: usize) {
        let len = planes * stride;
        self.d.clear();
        self.d.resize(len, W::ZERO);
        self.e.clear();
        self.e.resize(len, W::ZERO);
        self.nd.clear();
        self.nd.resize(len, W::ZERO);
        self.ne.clear();
        self.ne.resize(len, W::ZERO);
        self.carry.clear();
        self.carry.resize(stride, W::ZERO);
    }
}

/// Carry-rotation adder for any Mersenne modulus. Each pass replaces the pair
/// (value, carries) by (xor, rotated carries): a carry out of plane j lands in
/// plane j+1, and the top carry wraps to plane 0 because 2^r = 1 (mod p).
/// Ends with the all-ones fixup mapping the p pattern to zero.
pub(crate) fn mersenne_add_kernel<W: Word>(
    field: FieldSpec,
    stride: usize,
    v: &[W],
    w: &[W],
    out: &mut [W],
    scratch: &mut GenericScratch<W>,
) -> Result<CarryTrace> {
    let r = field.bit_width() as usize;
    scratch.resize(r, stride);
    for idx in 0..r * stride {
        scratch.d[idx] = v[idx] ^ w[idx];
        scratch.e[idx] = v[idx] & w[idx];
    }
    // Per lane, the value d + 2e never increases and drops below p at the
    // first wrapped carry, after which the top carry bit stays clear; between
    // wraps the lowest carry bit strictly climbs. Hence at most 2r + 1 passes
    // on normalized inputs; the cap flags a bug, not a slow case.
    let cap = 2 * r as u32 + 2;
    let mut iterations = 0u32;
    loop {
        let mut any = W::ZERO;
        for &e in scratch.e.iter() {
            any |= e;
        }
        if any == W::ZERO {
            break;
        }
        if iterations >= cap {
            return Err(Error::Internal(format!(
                "carry loop exceeded {cap} passes for p={}",
                field.modulus()
            )));
        }
        iterations += 1;
        for j in 0..r {
            let src = (j + r - 1) % r;
            for i in 0..stride {
                let d = scratch.d[j * stride + i];
                let e = scratch.e[src * stride + i];
                scratch.nd[j * stride + i] = d ^ e;
                scratch.ne[j * stride + i] = d & e;
            }
        }
        std::mem::swap(&mut scratch.d, &mut scratch.nd);
        std::mem::swap(&mut scratch.e, &mut scratch.ne);
    }
    let mut fixups = 0u64;
    for i in 0..stride {
        let mut t = W::ONES;
        for j in 0..r {
            t &= scratch.d[j * stride + i];
        }
        fixups += t.count_ones() as u64;
        for j in 0..r {
            out[j * stride + i] = scratch.d[j * stride + i] ^ t;
        }
    }
    Ok(CarryTrace { loop_iterations: iterations, wrap_fixups: fixups })
}

/// Carry-shift adder for non-Mersenne moduli. Carries shift up one plane per
/// pass; a carry leaving the top plane is worth 2^r = 2^r - p (mod p), so the
/// correction constant f = 2^r - p is added back through a full-adder step.
/// The printed fixup clears lanes that land exactly on the bit pattern of p
/// (or a superset of it); a final conditional subtract-p pass, done as a
/// ripple add of f with a carry-select, normalizes the remaining lanes whose
/// raw sum sits strictly between p and 2^r.
pub(crate) fn any_add_kernel<W: Word>(
    field: FieldSpec,
    stride: usize,
    v: &[W],
    w: &[W],
    out: &mut [W],
    scratch: &mut GenericScratch<W>,
) -> Result<CarryTrace> {
    let r = field.bit_width() as usize;
    scratch.resize(r, stride);
    for idx in 0..r * stride {
        scratch.d[idx] = v[idx] ^ w[idx];
        scratch.e[idx] = v[idx] & w[idx];
    }
    // Same 2r + 1 bound as the Mersenne loop (one wrap event at most, then
    // plain carry propagation), reached in practice: p = 13 needs r + 1
    // passes for some pairs.
    let cap = 2 * r as u32 + 2;
    let mut iterations = 0u32;
    loop {
        let mut any = W::ZERO;
        for &e in scratch.e.iter() {
            any |= e;
        }
        if any == W::ZERO {
            break;
        }
        if iterations >= cap {
            return Err(Error::Internal(format!(
                "carry loop exceeded {cap} passes for p={}",
                field.modulus()
            )));
        }
        iterations += 1;
        let top = r - 1;
        for j in 0..r {
            for i in 0..stride {
                let d = scratch.d[j * stride + i];
                // Shifted carry: zero enters plane 0, the top carry drops out
                // of the shift and re-enters as eps * f.
                let ph = if j == 0 { W::ZERO } else { scratch.e[(j - 1) * stride + i] };
                let eps = if field.correction_bit(j as u32) {
                    scratch.e[top * stride + i]
                } else {
                    W::ZERO
                };
                scratch.nd[j * stride + i] = d ^ ph ^ eps;
                scratch.ne[j * stride + i] = (d & ph) | (d & eps) | (ph & eps);
            }
        }
        std::mem::swap(&mut scratch.d, &mut scratch.nd);
        std::mem::swap(&mut scratch.e, &mut scratch.ne);
    }
    // Printed fixup: AND the planes at the one-bits of p; lanes where that
    // AND is set hold p's bits as a subset and lose exactly p via the xor.
    let mut fixups = 0u64;
    for i in 0..stride {
        let mut t = W::ONES;
        for j in 0..r {
            if field.modulus_bit(j as u32) {
                t &= scratch.d[j * stride + i];
            }
        }
        fixups += t.count_ones() as u64;
        if t != W::ZERO {
            for j in 0..r {
                if field.modulus_bit(j as u32) {
                    scratch.d[j * stride + i] ^= t;
                }
            }
        }
    }
    // Conditional subtract: d + f overflows r bits exactly when d >= p.
    // Lanes that overflow take the rippled sum (= d - p), the rest keep d.
    for c in scratch.carry.iter_mut() {
        *c = W::ZERO;
    }
    for j in 0..r {
        for i in 0..stride {
            let d = scratch.d[j * stride + i];
            let c = scratch.carry[i];
            if field.correction_bit(j as u32) {
                scratch.nd[j * stride + i] = !(d ^ c);
                scratch.carry[i] = d | c;
            } else {
                scratch.nd[j * stride + i] = d ^ c;
                scratch.carry[i] = d & c;
            }
        }
    }
    for j in 0..r {
        for i in 0..stride {
            let m = scratch.carry[i];
            out[j * stride + i] =
                (scratch.nd[j * stride + i] & m) | (scratch.d[j * stride + i] & !m);
        }
    }
    Ok(CarryTrace { loop_iterations: iterations, wrap_fixups: fixups })
}

/// Copy w into `out` with planes rotated up by `rot` (multiply by 2^rot,
/// Mersenne moduli only).
pub(crate) fn rotate_into<W: Word>(r: usize, stride: usize, w: &[W], rot: u32, out: &mut [W]) {
    for j in 0..r {
        let src = (j + r - rot as usize) % r;
        out[j * stride..(j + 1) * stride].copy_from_slice(&w[src * stride..(src + 1) * stride]);
    }
}

/// Rotate and negate in one pass: out = -(2^rot * w) over a Mersenne modulus.
pub(crate) fn rotate_negate_into<W: Word>(r: usize, stride: usize, w: &[W], rot: u32, out: &mut [W]) {
    for i in 0..stride {
        let mut t = W::ONES;
        for j in 0..r {
            let src = (j + r - rot as usize) % r;
            let m = !w[src * stride + i];
            out[j * stride + i] = m;
            t &= m;
        }
        for j in 0..r {
            out[j * stride + i] ^= t;
        }
    }
}

/// Mersenne negation kernel: complement every plane, then clear the lanes
/// that became all-ones (the old zeros). The same fixup re-zeroes the tail.
pub(crate) fn mersenne_negate_planes<W: Word>(r: usize, stride: usize, w: &[W], out: &mut [W]) {
    for i in 0..stride {
        let mut t = W::ONES;
        for j in 0..r {
            let m = !w[j * stride + i];
            out[j * stride + i] = m;
            t &= m;
        }
        for j in 0..r {
            out[j * stride + i] ^= t;
        }
    }
}

// ---------------------------------------------------------------------------
// Public adders.
// ---------------------------------------------------------------------------

/// (v + w) per coordinate, with the best adder for the field: straight-line
/// circuits for p = 3 and p = 7, the carry-rotation loop for other Mersenne
/// moduli, and the carry-shift loop otherwise.
pub fn add<W: Word>(v: &SlicedVector<W>, w: &SlicedVector<W>) -> Result<SlicedVector<W>> {
    add_forced(v, w, false)
}

/// `add` with an escape hatch that routes p = 3 and p = 7 through the generic
/// carry loops, for cross-checking the specializations.
pub fn add_forced<W: Word>(
    v: &SlicedVector<W>,
    w: &SlicedVector<W>,
    force_generic: bool,
) -> Result<SlicedVector<W>> {
    check_pair(v, w)?;
    let field = v.field();
    if !force_generic {
        match field.modulus() {
            3 => return add_f3(v, w),
            7 => return add_f7(v, w),
            _ => {}
        }
    }
    if field.is_mersenne() {
        add_generic_mersenne(v, w)
    } else {
        add_generic_any(v, w)
    }
}

/// Nine-operation F_3 adder.
pub fn add_f3<W: Word>(v: &SlicedVector<W>, w: &SlicedVector<W>) -> Result<SlicedVector<W>> {
    check_pair(v, w)?;
    if v.field().modulus() != 3 {
        return Err(Error::WrongField { expected: 3, got: v.field().modulus() });
    }
    let mut out = SlicedVector::zero(v.field(), v.len());
    add_f3_planes(v.stride(), v.planes_raw(), w.planes_raw(), 0, out.planes_raw_mut());
    Ok(out)
}

/// Straight-line F_7 adder.
pub fn add_f7<W: Word>(v: &SlicedVector<W>, w: &SlicedVector<W>) -> Result<SlicedVector<W>> {
    check_pair(v, w)?;
    if v.field().modulus() != 7 {
        return Err(Error::WrongField { expected: 7, got: v.field().modulus() });
    }
    let mut out = SlicedVector::zero(v.field(), v.len());
    add_f7_planes(v.stride(), v.planes_raw(), w.planes_raw(), 0, out.planes_raw_mut());
    Ok(out)
}

/// Carry-rotation adder for any Mersenne modulus.
pub fn add_generic_mersenne<W: Word>(
    v: &SlicedVector<W>,
    w: &SlicedVector<W>,
) -> Result<SlicedVector<W>> {
    Ok(add_generic_mersenne_traced(v, w)?.0)
}

/// `add_generic_mersenne`, also reporting the carry-loop trace.
pub fn add_generic_mersenne_traced<W: Word>(
    v: &SlicedVector<W>,
    w: &SlicedVector<W>,
) -> Result<(SlicedVector<W>, CarryTrace)> {
    check_pair(v, w)?;
    let field = v.field();
    if !field.is_mersenne() {
        return Err(Error::NotMersenne(field.modulus()));
    }
    let mut out = SlicedVector::zero(field, v.len());
    let mut scratch = GenericScratch::new();
    let trace = mersenne_add_kernel(
        field,
        v.stride(),
        v.planes_raw(),
        w.planes_raw(),
        out.planes_raw_mut(),
        &mut scratch,
    )?;
    Ok((out, trace))
}

/// Carry-shift adder for non-Mersenne moduli.
pub fn add_generic_any<W: Word>(
    v: &SlicedVector<W>,
    w: &SlicedVector<W>,
) -> Result<SlicedVector<W>> {
    Ok(add_generic_any_traced(v, w)?.0)
}

/// `add_generic_any`, also reporting the carry-loop trace.
pub fn add_generic_any_traced<W: Word>(
    v: &SlicedVector<W>,
    w: &SlicedVector<W>,
) -> Result<(SlicedVector<W>, CarryTrace)> {
    check_pair(v, w)?;
    let field = v.field();
    if field.is_mersenne() {
        return Err(Error::IsMersenne(field.modulus()));
    }
    let mut out = SlicedVector::zero(field, v.len());
    let mut scratch = GenericScratch::new();
    let trace = any_add_kernel(
        field,
        v.stride(),
        v.planes_raw(),
        w.planes_raw(),
        out.planes_raw_mut(),
        &mut scratch,
    )?;
    Ok((out, trace))
}

// ---------------------------------------------------------------------------
// Negation, subtraction, rotation, scalar combination.
// ---------------------------------------------------------------------------

/// (-v) per coordinate. Mersenne moduli: bitwise complement plus the all-ones
/// fixup; p = 3 shortcuts to a plane swap. Other moduli go through a dense
/// round trip.
pub fn negate<W: Word>(v: &SlicedVector<W>) -> Result<SlicedVector<W>> {
    let field = v.field();
    let mut out = SlicedVector::zero(field, v.len());
    if field.modulus() == 3 {
        out.plane_mut(0).copy_from_slice(v.plane(1));
        out.plane_mut(1).copy_from_slice(v.plane(0));
        return Ok(out);
    }
    if field.is_mersenne() {
        mersenne_negate_planes(
            field.bit_width() as usize,
            v.stride(),
            v.planes_raw(),
            out.planes_raw_mut(),
        );
        return Ok(out);
    }
    let p = field.modulus();
    let digits: Vec<u64> =
        v.unpack().digits().iter().map(|&d| if d == 0 { 0 } else { p - d }).collect();
    Ok(SlicedVector::pack(&DenseVector::new(field, digits)?))
}

/// (v - w) per coordinate, as v + (-w).
pub fn sub<W: Word>(v: &SlicedVector<W>, w: &SlicedVector<W>) -> Result<SlicedVector<W>> {
    check_pair(v, w)?;
    add_forced(v, &negate(w)?, false)
}

/// Multiply w by 2^shift over a Mersenne modulus: plane j of the result is
/// plane (j - shift) mod r of w. Normalized inputs stay normalized because a
/// rotated column is all-ones only if the input column was.
pub fn rotate_planes<W: Word>(w: &SlicedVector<W>, shift: u32) -> Result<SlicedVector<W>> {
    let field = w.field();
    if !field.is_mersenne() {
        return Err(Error::NotMersenne(field.modulus()));
    }
    let r = field.bit_width();
    if shift >= r {
        return Err(Error::ShiftOutOfRange { shift, planes: r });
    }
    let mut out = SlicedVector::zero(field, w.len());
    for j in 0..r {
        out.plane_mut(j).copy_from_slice(w.plane((j + r - shift) % r));
    }
    debug_assert!(
        out.unpack().digits().iter().all(|&d| d < field.modulus()),
        "rotation produced an out-of-range column"
    );
    Ok(out)
}

/// v + h*w for a scalar h in [1, p-1]. Over Mersenne moduli h or p - h is
/// often a power of two, turning the product into a plane rotation followed
/// by one add or subtract; remaining cases fall back to h-fold addition.
pub fn combine<W: Word>(
    v: &SlicedVector<W>,
    h: u64,
    w: &SlicedVector<W>,
) -> Result<SlicedVector<W>> {
    check_pair(v, w)?;
    let field = v.field();
    let p = field.modulus();
    if h == 0 || h >= p {
        return Err(Error::ScalarOutOfRange { scalar: h, p });
    }
    if field.is_mersenne() {
        if h.is_power_of_two() {
            let rotated = rotate_planes(w, h.trailing_zeros())?;
            return add_forced(v, &rotated, false);
        }
        if (p - h).is_power_of_two() {
            let rotated = rotate_planes(w, (p - h).trailing_zeros())?;
            return sub(v, &rotated);
        }
    }
    let mut acc = add_forced(v, w, false)?;
    for _ in 1..h {
        acc = add_forced(&acc, w, false)?;
    }
    Ok(acc)
}

/// (v + w, v - w) over F_3 in one pass over the operands. The difference is
/// the sum with w's planes swapped, so both results share every load.
pub fn addsub_f3<W: Word>(
    v: &SlicedVector<W>,
    w: &SlicedVector<W>,
) -> Result<(SlicedVector<W>, SlicedVector<W>)> {
    check_pair(v, w)?;
    if v.field().modulus() != 3 {
        return Err(Error::WrongField { expected: 3, got: v.field().modulus() });
    }
    let stride = v.stride();
    let mut sum = SlicedVector::zero(v.field(), v.len());
    let mut diff = SlicedVector::zero(v.field(), v.len());
    let vp = v.planes_raw();
    let wp = w.planes_raw();
    let sp = sum.planes_raw_mut();
    let dp = diff.planes_raw_mut();
    for i in 0..stride {
        let (v0, v1) = (vp[i], vp[stride + i]);
        let (w0, w1) = (wp[i], wp[stride + i]);
        let (s0, s1) = add3_words(v0, v1, w0, w1);
        let (d0, d1) = add3_words(v0, v1, w1, w0);
        sp[i] = s0;
        sp[stride + i] = s1;
        dp[i] = d0;
        dp[stride + i] = d1;
    }
    Ok((sum, diff))
}

// ---------------------------------------------------------------------------
// Isometric (weight-only) operations.
// ---------------------------------------------------------------------------

/// Mask of coordinates where v and w differ, which is exactly where v - w is
/// nonzero. Valid for every modulus.
pub fn isometric_sub_mask<W: Word>(
    v: &SlicedVector<W>,
    w: &SlicedVector<W>,
) -> Result<NonzeroMask<W>> {
    check_pair(v, w)?;
    let stride = v.stride();
    let r = v.field().bit_width() as usize;
    let vp = v.planes_raw();
    let wp = w.planes_raw();
    let mut words = vec![W::ZERO; stride];
    for i in 0..stride {
        let mut acc = W::ZERO;
        for j in 0..r {
            acc |= vp[j * stride + i] ^ wp[j * stride + i];
        }
        words[i] = acc;
    }
    Ok(NonzeroMask::from_words(v.len(), words))
}

/// Mask of coordinates where v + w is nonzero, computed without the sum.
/// F_3 uses (v0|w0) ^ (v1|w1). Other Mersenne moduli use the complement
/// identity: the sum is zero exactly when both are zero or w is the bitwise
/// complement of v, so OR-of-XNOR and OR-of-OR detect it. Non-Mersenne moduli
/// compute the sum and OR its planes.
pub fn isometric_add_mask<W: Word>(
    v: &SlicedVector<W>,
    w: &SlicedVector<W>,
) -> Result<NonzeroMask<W>> {
    check_pair(v, w)?;
    let field = v.field();
    let stride = v.stride();
    let r = field.bit_width() as usize;
    let vp = v.planes_raw();
    let wp = w.planes_raw();
    let mut words = vec![W::ZERO; stride];
    if field.modulus() == 3 {
        for i in 0..stride {
            words[i] = (vp[i] | wp[i]) ^ (vp[stride + i] | wp[stride + i]);
        }
        return Ok(NonzeroMask::from_words(v.len(), words));
    }
    if field.is_mersenne() {
        for i in 0..stride {
            let mut same = W::ZERO;
            let mut nonzero = W::ZERO;
            for j in 0..r {
                let a = vp[j * stride + i];
                let b = wp[j * stride + i];
                // XNOR picks up the tail as all-ones, but the OR term is zero
                // there, so the AND keeps tail bits clear.
                same |= !(a ^ b);
                nonzero |= a | b;
            }
            words[i] = same & nonzero;
        }
        return Ok(NonzeroMask::from_words(v.len(), words));
    }
    let sum = add_generic_any(v, w)?;
    let sp = sum.planes_raw();
    for i in 0..stride {
        let mut acc = W::ZERO;
        for j in 0..r {
            acc |= sp[j * stride + i];
        }
        words[i] = acc;
    }
    Ok(NonzeroMask::from_words(v.len(), words))
}

// Weight-only kernels for the enumeration inner loop: same formulas as the
// mask operations, popcounted on the fly, with the rotation folded into the
// second operand's plane indices.

pub(crate) fn iso_add_weight_f3<W: Word>(stride: usize, v: &[W], w: &[W], rot: u32) -> u64 {
    let (w0, w1) = if rot == 0 { (0, stride) } else { (stride, 0) };
    let mut total = 0u64;
    for i in 0..stride {
        let m = (v[i] | w[w0 + i]) ^ (v[stride + i] | w[w1 + i]);
        total += m.count_ones() as u64;
    }
    total
}

pub(crate) fn iso_add_weight_mersenne<W: Word>(
    r: usize,
    stride: usize,
    v: &[W],
    w: &[W],
    rot: u32,
) -> u64 {
    let mut total = 0u64;
    for i in 0..stride {
        let mut same = W::ZERO;
        let mut nonzero = W::ZERO;
        for j in 0..r {
            let src = (j + r - rot as usize) % r;
            let a = v[j * stride + i];
            let b = w[src * stride + i];
            same |= !(a ^ b);
            nonzero |= a | b;
        }
        total += (same & nonzero).count_ones() as u64;
    }
    total
}

pub(crate) fn iso_sub_weight<W: Word>(r: usize, stride: usize, v: &[W], w: &[W], rot: u32) -> u64 {
    let mut total = 0u64;
    for i in 0..stride {
        let mut acc = W::ZERO;
        for j in 0..r {
            let src = (j + r - rot as usize) % r;
            acc |= v[j * stride + i] ^ w[src * stride + i];
        }
        total += acc.count_ones() as u64;
    }
    total
}

/// Fused F_3 pair: weights of v + w and v - w from one pass over the planes.
pub(crate) fn iso_addsub_weights_f3<W: Word>(stride: usize, v: &[W], w: &[W]) -> (u64, u64) {
    let mut add_w = 0u64;
    let mut sub_w = 0u64;
    for i in 0..stride {
        let (v0, v1) = (v[i], v[stride + i]);
        let (w0, w1) = (w[i], w[stride + i]);
        add_w += ((v0 | w0) ^ (v1 | w1)).count_ones() as u64;
        sub_w += ((v0 ^ w0) | (v1 ^ w1)).count_ones() as u64;
    }
    (add_w, sub_w)
}

// ---------------------------------------------------------------------------
// The F_3 redundant ("00 spare") encoding: 0 = (1,1), 1 = (0,1), 2 = (1,0),
// which happens to be the bitwise complement of the natural encoding. Its
// six-operation adder is kept as a benchmark reference.
// ---------------------------------------------------------------------------

/// F_3 vector in the redundant encoding. Tail columns hold (0,0), which the
/// adder maps to (0,0), so tails survive arithmetic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KatF3Vector<W: Word> {
    n: usize,
    stride: usize,
    planes: Vec<W>,
}

impl<W: Word> KatF3Vector<W> {
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
    pub(crate) fn planes_raw(&self) -> &[W] {
        &self.planes
    }

    #[inline]
    pub(crate) fn planes_raw_mut(&mut self) -> &mut [W] {
        &mut self.planes
    }
}

/// Re-encode a natural-encoding F_3 vector into the redundant encoding
/// (bitwise complement of both planes, tails cleared).
pub fn kat_encode<W: Word>(v: &SlicedVector<W>) -> Result<KatF3Vector<W>> {
    if v.field().modulus() != 3 {
        return Err(Error::WrongField { expected: 3, got: v.field().modulus() });
    }
    let stride = v.stride();
    let mut planes = vec![W::ZERO; 2 * stride];
    let tail = v.tail_mask();
    for j in 0..2usize {
        for i in 0..stride {
            let mut m = !v.planes_raw()[j * stride + i];
            if i == stride - 1 {
                m &= tail;
            }
            planes[j * stride + i] = m;
        }
    }
    Ok(KatF3Vector { n: v.len(), stride, planes })
}

/// Decode back to the natural encoding.
pub fn kat_decode<W: Word>(v: &KatF3Vector<W>) -> Result<SlicedVector<W>> {
    let field = FieldSpec::new(3)?;
    let mut out = SlicedVector::zero(field, v.n);
    for j in 0..2u32 {
        let src = &v.planes[j as usize * v.stride..(j as usize + 1) * v.stride];
        for (dst, &s) in out.plane_mut(j).iter_mut().zip(src) {
            *dst = !s;
        }
    }
    out.clear_tail();
    Ok(out)
}

/// Six-operation F_3 adder in the redundant encoding.
pub fn add_f3_kat<W: Word>(a: &KatF3Vector<W>, b: &KatF3Vector<W>) -> Result<KatF3Vector<W>> {
    if a.n != b.n {
        return Err(Error::LengthMismatch { left: a.n, right: b.n });
    }
    let stride = a.stride;
    let mut planes = vec![W::ZERO; 2 * stride];
    kat_add_planes(stride, &a.planes, &b.planes, &mut planes);
    Ok(KatF3Vector { n: a.n, stride, planes })
}

#[inline]
pub(crate) fn kat_add_planes<W: Word>(stride: usize, a: &[W], b: &[W], out: &mut [W]) {
    for i in 0..stride {
        let (a0, a1) = (a[i], a[stride + i]);
        let (b0, b1) = (b[i], b[stride + i]);
        let t0 = a0 ^ b0;
        let t1 = a1 ^ b1;
        let u0 = t0 ^ a1;
        let u1 = t1 ^ a0;
        out[i] = t1 | u0;
        out[stride + i] = t0 | u1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sliced::DenseVector;

    fn field(p: u64) -> FieldSpec {
        FieldSpec::new(p).unwrap()
    }

    fn sv(p: u64, digits: &[u64]) -> SlicedVector<u64> {
        SlicedVector::pack(&DenseVector::new(field(p), digits.to_vec()).unwrap())
    }

    fn digits(v: &SlicedVector<u64>) -> Vec<u64> {
        v.unpack().digits().to_vec()
    }

    #[test]
    fn mersenne_trace_five_plus_two() {
        // 5 + 2 = 7 over F_7: carries vanish immediately, the all-ones fixup
        // maps the raw pattern to zero.
        let (sum, trace) = add_generic_mersenne_traced(&sv(7, &[5]), &sv(7, &[2])).unwrap();
        assert_eq!(digits(&sum), vec![0]);
        assert_eq!(trace.loop_iterations, 0);
        assert_eq!(trace.wrap_fixups, 1);
    }

    #[test]
    fn mersenne_trace_five_plus_six() {
        // 5 + 6 = 4 over F_7 takes exactly three carry passes and no fixup.
        let (sum, trace) = add_generic_mersenne_traced(&sv(7, &[5]), &sv(7, &[6])).unwrap();
        assert_eq!(digits(&sum), vec![4]);
        assert_eq!(trace.loop_iterations, 3);
        assert_eq!(trace.wrap_fixups, 0);
    }

    #[test]
    fn any_trace_ten_plus_nine() {
        // 10 + 9 = 8 over F_11 takes exactly four carry passes; the raw
        // result is already reduced so the fixup stays idle.
        let (sum, trace) = add_generic_any_traced(&sv(11, &[10]), &sv(11, &[9])).unwrap();
        assert_eq!(digits(&sum), vec![8]);
        assert_eq!(trace.loop_iterations, 4);
        assert_eq!(trace.wrap_fixups, 0);
    }

    #[test]
    fn any_adder_normalizes_midrange_sums() {
        // Raw sums strictly between p and 2^r never see a top carry; the
        // conditional subtract has to reduce them. 5 + 7 = 12 over F_11.
        let (sum, trace) = add_generic_any_traced(&sv(11, &[5]), &sv(11, &[7])).unwrap();
        assert_eq!(digits(&sum), vec![1]);
        assert_eq!(trace.wrap_fixups, 0);
        // 6 + 8 = 14 over F_13 exits the loop without iterating at all.
        let (sum, trace) = add_generic_any_traced(&sv(13, &[6]), &sv(13, &[8])).unwrap();
        assert_eq!(digits(&sum), vec![1]);
        assert_eq!(trace.loop_iterations, 0);
    }

    #[test]
    fn exhaustive_pairs_small_fields() {
        for p in [3u64, 5, 7, 11, 13, 31] {
            for a in 0..p {
                for b in 0..p {
                    let v = sv(p, &[a]);
                    let w = sv(p, &[b]);
                    let want = (a + b) % p;
                    assert_eq!(digits(&add(&v, &w).unwrap()), vec![want], "{a}+{b} mod {p}");
                    assert_eq!(
                        digits(&add_forced(&v, &w, true).unwrap()),
                        vec![want],
                        "generic {a}+{b} mod {p}"
                    );
                    let diff = (p + a - b) % p;
                    assert_eq!(digits(&sub(&v, &w).unwrap()), vec![diff], "{a}-{b} mod {p}");
                }
                let v = sv(p, &[a]);
                let neg = (p - a) % p;
                assert_eq!(digits(&negate(&v).unwrap()), vec![neg], "-{a} mod {p}");
            }
        }
    }

    #[test]
    fn carry_loops_stay_within_bound() {
        // Mersenne moduli resolve carries within r passes; the carry-shift
        // loop can need up to r + 1 more (p = 13 hits r + 1), but never the
        // 2r + 1 ceiling plus one that trips the internal-error cap.
        for p in [3u64, 7, 31, 5, 11, 13, 19, 29] {
            let f = field(p);
            let r = f.bit_width();
            let mut worst = 0;
            for a in 0..p {
                for b in 0..p {
                    let v = sv(p, &[a]);
                    let w = sv(p, &[b]);
                    let trace = if f.is_mersenne() {
                        add_generic_mersenne_traced(&v, &w).unwrap().1
                    } else {
                        add_generic_any_traced(&v, &w).unwrap().1
                    };
                    worst = worst.max(trace.loop_iterations);
                    assert!(trace.loop_iterations <= 2 * r + 1, "p={p} {a}+{b}: {trace:?}");
                }
            }
            if f.is_mersenne() {
                assert!(worst <= r, "p={p} worst={worst}");
            }
        }
    }

    #[test]
    fn vectorized_addition_matches_scalar() {
        // 200 lanes crossing word boundaries, both widths.
        let p = 7u64;
        let a: Vec<u64> = (0..200).map(|i| (i * 3 + 1) % p).collect();
        let b: Vec<u64> = (0..200).map(|i| (i * 5 + 2) % p).collect();
        let want: Vec<u64> = a.iter().zip(&b).map(|(x, y)| (x + y) % p).collect();
        let v64 = sv(p, &a);
        let w64 = sv(p, &b);
        assert_eq!(digits(&add(&v64, &w64).unwrap()), want);
        let dv_a = DenseVector::new(field(p), a).unwrap();
        let dv_b = DenseVector::new(field(p), b).unwrap();
        let v32: SlicedVector<u32> = SlicedVector::pack(&dv_a);
        let w32: SlicedVector<u32> = SlicedVector::pack(&dv_b);
        assert_eq!(add(&v32, &w32).unwrap().unpack().digits(), &want[..]);
    }

    #[test]
    fn rotation_is_doubling() {
        // F_7: 2*3 = 6 maps (1,1,0) to (0,1,1); 4*3 = 5 maps it to (1,0,1).
        let w = sv(7, &[3]);
        assert_eq!(digits(&rotate_planes(&w, 1).unwrap()), vec![6]);
        assert_eq!(digits(&rotate_planes(&w, 2).unwrap()), vec![5]);
        for p in [3u64, 7, 31] {
            let f = field(p);
            for x in 0..p {
                for s in 0..f.bit_width() {
                    let got = digits(&rotate_planes(&sv(p, &[x]), s).unwrap())[0];
                    assert_eq!(got, x * (1 << s) % p, "p={p} x={x} s={s}");
                }
            }
        }
        assert!(matches!(
            rotate_planes(&sv(7, &[1]), 3),
            Err(Error::ShiftOutOfRange { .. })
        ));
        assert!(matches!(rotate_planes(&sv(11, &[1]), 1), Err(Error::NotMersenne(11))));
    }

    #[test]
    fn combine_covers_every_scalar() {
        for p in [3u64, 7, 11, 31] {
            for a in 0..p {
                for b in 0..p {
                    for h in 1..p {
                        let got = digits(&combine(&sv(p, &[a]), h, &sv(p, &[b])).unwrap());
                        assert_eq!(got, vec![(a + h * b) % p], "p={p} {a}+{h}*{b}");
                    }
                }
            }
        }
    }

    #[test]
    fn combine_scalar_three_is_subtract_rotate() {
        // Over F_7, v + 3w = v - 4w, and 4 = 2^2 is a plane rotation.
        let v = sv(7, &[0, 1, 2, 3, 4, 5, 6]);
        let w = sv(7, &[3, 3, 3, 5, 5, 5, 1]);
        let direct = combine(&v, 3, &w).unwrap();
        let via_sub = sub(&v, &rotate_planes(&w, 2).unwrap()).unwrap();
        assert_eq!(digits(&direct), digits(&via_sub));
    }

    #[test]
    fn addsub_pairs_match_separate_ops() {
        let v = sv(3, &[0, 1, 2, 2, 1, 0, 1]);
        let w = sv(3, &[1, 1, 1, 2, 0, 2, 2]);
        let (sum, diff) = addsub_f3(&v, &w).unwrap();
        assert_eq!(digits(&sum), digits(&add(&v, &w).unwrap()));
        assert_eq!(digits(&diff), digits(&sub(&v, &w).unwrap()));
    }

    #[test]
    fn kat_adder_matches_field_addition() {
        for a in 0..3u64 {
            for b in 0..3u64 {
                let va = sv(3, &[a]);
                let vb = sv(3, &[b]);
                let sum = add_f3_kat(&kat_encode(&va).unwrap(), &kat_encode(&vb).unwrap()).unwrap();
                assert_eq!(digits(&kat_decode(&sum).unwrap()), vec![(a + b) % 3]);
            }
        }
        // Round trip and vector case.
        let a: Vec<u64> = (0..150).map(|i| i % 3).collect();
        let b: Vec<u64> = (0..150).map(|i| (i * 2 + 1) % 3).collect();
        let va = sv(3, &a);
        let vb = sv(3, &b);
        assert_eq!(digits(&kat_decode(&kat_encode(&va).unwrap()).unwrap()), a);
        let sum = add_f3_kat(&kat_encode(&va).unwrap(), &kat_encode(&vb).unwrap()).unwrap();
        assert_eq!(digits(&kat_decode(&sum).unwrap()), digits(&add(&va, &vb).unwrap()));
    }

    #[test]
    fn sub_mask_flags_differing_coordinates() {
        let v = sv(3, &[1, 2, 0]);
        let w = sv(3, &[1, 0, 0]);
        let mask = isometric_sub_mask(&v, &w).unwrap();
        assert_eq!(mask.weight(), 1);
        assert!(!mask.bit(0) && mask.bit(1) && !mask.bit(2));
    }

    #[test]
    fn add_mask_matches_exact_sum_exhaustively() {
        for p in [3u64, 7, 31, 11, 13] {
            for a in 0..p {
                for b in 0..p {
                    let v = sv(p, &[a]);
                    let w = sv(p, &[b]);
                    let mask = isometric_add_mask(&v, &w).unwrap();
                    assert_eq!(mask.weight(), u64::from((a + b) % p != 0), "p={p} {a}+{b}");
                }
            }
        }
    }

    #[test]
    fn mismatched_operands_are_rejected() {
        let v = sv(7, &[1, 2]);
        assert!(matches!(add(&v, &sv(7, &[1])), Err(Error::LengthMismatch { .. })));
        assert!(matches!(add(&v, &sv(3, &[1, 2])), Err(Error::FieldMismatch { .. })));
        assert!(matches!(add_f3(&v, &v), Err(Error::WrongField { expected: 3, .. })));
        assert!(matches!(add_f7(&sv(3, &[1]), &sv(3, &[1])), Err(Error::WrongField { .. })));
        assert!(matches!(add_generic_any(&v, &v), Err(Error::IsMersenne(7))));
        assert!(matches!(
            add_generic_mersenne(&sv(11, &[1]), &sv(11, &[1])),
            Err(Error::NotMersenne(11))
        ));
        assert!(matches!(combine(&v, 0, &v), Err(Error::ScalarOutOfRange { .. })));
        assert!(matches!(combine(&v, 7, &v), Err(Error::ScalarOutOfRange { .. })));
    }

    #[test]
    fn empty_vectors_are_fine() {
        let v = sv(7, &[]);
        assert_eq!(digits(&add(&v, &v).unwrap()), Vec::<u64>::new());
        assert_eq!(isometric_add_mask(&v, &v).unwrap().weight(), 0);
    }
}
