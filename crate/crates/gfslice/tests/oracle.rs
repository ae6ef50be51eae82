//! Cross-checks of the sliced kernels against plain integer arithmetic.
//!
//! Every oracle here is computed with ordinary `u64` operations (`%`, `*`,
//! comparisons), never through the code under test, so a shared bug cannot
//! cancel out.

use gfslice::arith;
use gfslice::{DenseVector, FieldSpec, GeneratorMatrix, SlicedVector, Word};
use proptest::prelude::*;

const PRIMES: &[u64] = &[3, 5, 7, 11, 13, 17, 31, 97, 127, 769, 8191];
const MERSENNE_PRIMES: &[u64] = &[3, 7, 31, 127, 8191];

fn field(p: u64) -> FieldSpec {
    FieldSpec::new(p).unwrap()
}

fn packed<W: Word>(p: u64, digits: &[u64]) -> SlicedVector<W> {
    SlicedVector::pack(&DenseVector::new(field(p), digits.to_vec()).unwrap())
}

fn digits_of<W: Word>(v: &SlicedVector<W>) -> Vec<u64> {
    v.unpack().digits().to_vec()
}

/// xorshift64* over a nonzero state; enough to pick pseudo-random digits for
/// the plain (non-proptest) sampling tests without pulling in a generator.
struct Sampler(u64);

impl Sampler {
    fn next_digit(&mut self, p: u64) -> u64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        self.0.wrapping_mul(0x2545_f491_4f6c_dd1d) % p
    }
}

/// All p^2 ordered digit pairs as two length-p^2 operand vectors.
fn all_pairs(p: u64) -> (Vec<u64>, Vec<u64>) {
    let mut left = Vec::with_capacity((p * p) as usize);
    let mut right = Vec::with_capacity((p * p) as usize);
    for a in 0..p {
        for b in 0..p {
            left.push(a);
            right.push(b);
        }
    }
    (left, right)
}

fn check_sum_digits(p: u64, left: &[u64], right: &[u64], got: &DenseVector) {
    for ((&a, &b), &s) in left.iter().zip(right).zip(got.digits()) {
        assert_eq!(s, (a + b) % p, "p={p}: {a} + {b} gave {s}");
    }
}

#[test]
fn f13_full_addition_table() {
    let (left, right) = all_pairs(13);
    let v64: SlicedVector<u64> = packed(13, &left);
    let w64: SlicedVector<u64> = packed(13, &right);
    let v32: SlicedVector<u32> = packed(13, &left);
    let w32: SlicedVector<u32> = packed(13, &right);
    for force_generic in [false, true] {
        let s64 = arith::add_forced(&v64, &w64, force_generic).unwrap();
        let s32 = arith::add_forced(&v32, &w32, force_generic).unwrap();
        check_sum_digits(13, &left, &right, &s64.unpack());
        assert_eq!(s64.unpack().digits(), s32.unpack().digits());
    }
}

#[test]
fn exhaustive_tables_small_primes() {
    for &p in &[3, 5, 7, 11, 17, 31, 127] {
        let (left, right) = all_pairs(p);
        let v: SlicedVector<u64> = packed(p, &left);
        let w: SlicedVector<u64> = packed(p, &right);
        for force_generic in [false, true] {
            let sum = arith::add_forced(&v, &w, force_generic).unwrap();
            check_sum_digits(p, &left, &right, &sum.unpack());
        }
        let diff = arith::sub(&v, &w).unwrap();
        for ((&a, &b), &d) in left.iter().zip(&right).zip(diff.unpack().digits()) {
            assert_eq!(d, (p + a - b) % p, "p={p}: {a} - {b} gave {d}");
        }
        let neg = arith::negate(&w).unwrap();
        for (&b, &d) in right.iter().zip(neg.unpack().digits()) {
            assert_eq!(d, if b == 0 { 0 } else { p - b }, "p={p}: -{b} gave {d}");
        }
    }
}

#[test]
fn f769_exhaustive_addition() {
    // Exercises the carry-shift adder's worst observed case: the carry loop
    // needs r + 7 passes on some operand pairs at p = 769.
    let (left, right) = all_pairs(769);
    let v: SlicedVector<u64> = packed(769, &left);
    let w: SlicedVector<u64> = packed(769, &right);
    let (sum, trace) = arith::add_generic_any_traced(&v, &w).unwrap();
    check_sum_digits(769, &left, &right, &sum.unpack());
    let r = field(769).bit_width();
    assert!(
        trace.loop_iterations <= 2 * r + 1,
        "carry loop took {} passes, bound is {}",
        trace.loop_iterations,
        2 * r + 1
    );
}

#[test]
fn mersenne_8191_random_sums() {
    let p = 8191u64;
    let mut rng = Sampler(0x9e37_79b9_7f4a_7c15);
    let n = 4096;
    let left: Vec<u64> = (0..n).map(|_| rng.next_digit(p)).collect();
    let right: Vec<u64> = (0..n).map(|_| rng.next_digit(p)).collect();
    let v: SlicedVector<u64> = packed(p, &left);
    let w: SlicedVector<u64> = packed(p, &right);
    let (sum, trace) = arith::add_generic_mersenne_traced(&v, &w).unwrap();
    check_sum_digits(p, &left, &right, &sum.unpack());
    assert!(trace.loop_iterations <= field(p).bit_width());
}

#[test]
fn widest_supported_mersenne_modulus() {
    let p = 2_147_483_647u64;
    let f = field(p);
    assert!(f.is_mersenne());
    assert_eq!(f.bit_width(), 31);
    let mut rng = Sampler(42);
    let mut left = vec![0, 0, 1, p - 1, p - 1, p / 2];
    let mut right = vec![0, p - 1, p - 1, p - 1, 1, p / 2 + 1];
    for _ in 0..500 {
        left.push(rng.next_digit(p));
        right.push(rng.next_digit(p));
    }
    let v: SlicedVector<u64> = packed(p, &left);
    let w: SlicedVector<u64> = packed(p, &right);
    let sum = arith::add(&v, &w).unwrap();
    check_sum_digits(p, &left, &right, &sum.unpack());
}

fn prime() -> impl Strategy<Value = u64> {
    prop::sample::select(PRIMES.to_vec())
}

fn mersenne_prime() -> impl Strategy<Value = u64> {
    prop::sample::select(MERSENNE_PRIMES.to_vec())
}

/// A prime together with 1 to 150 digits below it. Lengths past 128 make the
/// vectors span multiple words for both storage widths.
fn vector(p: impl Strategy<Value = u64>) -> impl Strategy<Value = (u64, Vec<u64>)> {
    p.prop_flat_map(|p| (Just(p), prop::collection::vec(0..p, 1..=150)))
}

fn pair(p: impl Strategy<Value = u64>) -> impl Strategy<Value = (u64, Vec<u64>, Vec<u64>)> {
    p.prop_flat_map(|p| {
        (1usize..=150).prop_flat_map(move |n| {
            (
                Just(p),
                prop::collection::vec(0..p, n),
                prop::collection::vec(0..p, n),
            )
        })
    })
}

fn triple(
    p: impl Strategy<Value = u64>,
) -> impl Strategy<Value = (u64, Vec<u64>, Vec<u64>, Vec<u64>)> {
    p.prop_flat_map(|p| {
        (1usize..=100).prop_flat_map(move |n| {
            (
                Just(p),
                prop::collection::vec(0..p, n),
                prop::collection::vec(0..p, n),
                prop::collection::vec(0..p, n),
            )
        })
    })
}

proptest! {
    #[test]
    fn pack_unpack_round_trip((p, digits) in vector(prime())) {
        let v64: SlicedVector<u64> = packed(p, &digits);
        let v32: SlicedVector<u32> = packed(p, &digits);
        prop_assert_eq!(digits_of(&v64), &digits[..]);
        prop_assert_eq!(digits_of(&v32), &digits[..]);
    }

    #[test]
    fn weight_counts_nonzero_digits((p, digits) in vector(prime())) {
        let expected = digits.iter().filter(|&&d| d != 0).count() as u64;
        let v: SlicedVector<u64> = packed(p, &digits);
        prop_assert_eq!(v.weight(), expected);
    }

    #[test]
    fn addition_matches_integer_oracle((p, a, b) in pair(prime())) {
        let v64: SlicedVector<u64> = packed(p, &a);
        let w64: SlicedVector<u64> = packed(p, &b);
        let v32: SlicedVector<u32> = packed(p, &a);
        let w32: SlicedVector<u32> = packed(p, &b);
        let s64 = arith::add(&v64, &w64).unwrap();
        let s32 = arith::add(&v32, &w32).unwrap();
        let expected: Vec<u64> = a.iter().zip(&b).map(|(&x, &y)| (x + y) % p).collect();
        prop_assert_eq!(digits_of(&s64), &expected[..]);
        prop_assert_eq!(digits_of(&s32), &expected[..]);
    }

    #[test]
    fn addition_commutes((p, a, b) in pair(prime())) {
        let v: SlicedVector<u64> = packed(p, &a);
        let w: SlicedVector<u64> = packed(p, &b);
        let vw = arith::add(&v, &w).unwrap();
        let wv = arith::add(&w, &v).unwrap();
        prop_assert_eq!(digits_of(&vw), digits_of(&wv));
    }

    #[test]
    fn addition_associates((p, a, b, c) in triple(prime())) {
        let u: SlicedVector<u64> = packed(p, &a);
        let v: SlicedVector<u64> = packed(p, &b);
        let w: SlicedVector<u64> = packed(p, &c);
        let left = arith::add(&arith::add(&u, &v).unwrap(), &w).unwrap();
        let right = arith::add(&u, &arith::add(&v, &w).unwrap()).unwrap();
        prop_assert_eq!(digits_of(&left), digits_of(&right));
    }

    #[test]
    fn negation_is_involutive_and_cancels((p, digits) in vector(prime())) {
        let v: SlicedVector<u64> = packed(p, &digits);
        let neg = arith::negate(&v).unwrap();
        let back = arith::negate(&neg).unwrap();
        prop_assert_eq!(digits_of(&back), &digits[..]);
        let zero = arith::add(&v, &neg).unwrap();
        prop_assert_eq!(zero.weight(), 0);
    }

    #[test]
    fn subtraction_agrees_with_negated_addition((p, a, b) in pair(prime())) {
        let v: SlicedVector<u64> = packed(p, &a);
        let w: SlicedVector<u64> = packed(p, &b);
        let direct = arith::sub(&v, &w).unwrap();
        let expected: Vec<u64> = a.iter().zip(&b).map(|(&x, &y)| (p + x - y) % p).collect();
        prop_assert_eq!(digits_of(&direct), &expected[..]);
    }

    #[test]
    fn rotation_composes_and_scales_by_powers_of_two(
        (p, digits) in vector(mersenne_prime()),
        s in 0u32..8,
        t in 0u32..8,
    ) {
        let r = field(p).bit_width();
        let (s, t) = (s % r, t % r);
        let v: SlicedVector<u64> = packed(p, &digits);
        let once = arith::rotate_planes(&v, s).unwrap();
        let expected: Vec<u64> = digits
            .iter()
            .map(|&d| d * (1u64 << s) % p)
            .collect();
        prop_assert_eq!(digits_of(&once), &expected[..]);
        let twice = arith::rotate_planes(&once, t).unwrap();
        let fused = arith::rotate_planes(&v, (s + t) % r).unwrap();
        prop_assert_eq!(digits_of(&twice), digits_of(&fused));
    }

    #[test]
    fn combine_matches_scalar_oracle((p, a, b) in pair(prime()), h_raw in 1u64..1000) {
        let h = 1 + h_raw % (p - 1);
        let v: SlicedVector<u64> = packed(p, &a);
        let w: SlicedVector<u64> = packed(p, &b);
        let got = arith::combine(&v, h, &w).unwrap();
        let expected: Vec<u64> =
            a.iter().zip(&b).map(|(&x, &y)| (x + h * y) % p).collect();
        prop_assert_eq!(digits_of(&got), &expected[..]);
    }

    #[test]
    fn masks_match_exact_operations((p, a, b) in pair(prime())) {
        let v: SlicedVector<u64> = packed(p, &a);
        let w: SlicedVector<u64> = packed(p, &b);
        let sum = arith::add(&v, &w).unwrap().unpack();
        let diff = arith::sub(&v, &w).unwrap().unpack();
        let add_mask = arith::isometric_add_mask(&v, &w).unwrap();
        let sub_mask = arith::isometric_sub_mask(&v, &w).unwrap();
        prop_assert_eq!(add_mask.weight(), sum.weight());
        prop_assert_eq!(sub_mask.weight(), diff.weight());
        for i in 0..a.len() {
            prop_assert_eq!(add_mask.bit(i), sum.digits()[i] != 0);
            prop_assert_eq!(sub_mask.bit(i), diff.digits()[i] != 0);
        }
    }

    #[test]
    fn addsub_f3_matches_separate_ops((_, a, b) in pair(Just(3u64))) {
        let v: SlicedVector<u64> = packed(3, &a);
        let w: SlicedVector<u64> = packed(3, &b);
        let (sum, diff) = arith::addsub_f3(&v, &w).unwrap();
        let plain_sum = arith::add(&v, &w).unwrap();
        let plain_diff = arith::sub(&v, &w).unwrap();
        prop_assert_eq!(digits_of(&sum), digits_of(&plain_sum));
        prop_assert_eq!(digits_of(&diff), digits_of(&plain_diff));
    }

    #[test]
    fn kat_round_trip_and_addition((_, a, b) in pair(Just(3u64))) {
        let v: SlicedVector<u64> = packed(3, &a);
        let w: SlicedVector<u64> = packed(3, &b);
        let kv = arith::kat_encode(&v).unwrap();
        let kw = arith::kat_encode(&w).unwrap();
        prop_assert_eq!(digits_of(&arith::kat_decode(&kv).unwrap()), &a[..]);
        let ks = arith::add_f3_kat(&kv, &kw).unwrap();
        let expected: Vec<u64> = a.iter().zip(&b).map(|(&x, &y)| (x + y) % 3).collect();
        prop_assert_eq!(digits_of(&arith::kat_decode(&ks).unwrap()), expected);
    }

    #[test]
    fn carry_traces_stay_bounded((p, a, b) in pair(prime())) {
        let v: SlicedVector<u64> = packed(p, &a);
        let w: SlicedVector<u64> = packed(p, &b);
        let r = field(p).bit_width();
        if field(p).is_mersenne() {
            let (_, trace) = arith::add_generic_mersenne_traced(&v, &w).unwrap();
            prop_assert!(trace.loop_iterations <= r);
        } else {
            let (_, trace) = arith::add_generic_any_traced(&v, &w).unwrap();
            prop_assert!(trace.loop_iterations <= 2 * r + 1);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generator_matrix_text_round_trip(
        p in prop::sample::select(vec![3u64, 5, 7, 11, 13]),
        k in 1usize..=5,
        extra in 0usize..=5,
        seed in any::<u64>(),
    ) {
        let g = GeneratorMatrix::random(field(p), k, k + extra, seed).unwrap();
        let text = g.to_text();
        let parsed = GeneratorMatrix::parse(&text).unwrap();
        prop_assert_eq!(parsed.field().modulus(), p);
        prop_assert_eq!(parsed.rows(), g.rows());
        prop_assert_eq!(parsed.to_text(), text);
    }
}
