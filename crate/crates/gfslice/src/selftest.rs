//! Built-in diagnostics: exhaustive adder checks against plain modular
//! arithmetic, mask and encoding soundness, a deliberate-mutation check on
//! the F_3 carry fold, and small end-to-end distance computations. Deep mode
//! extends the exhaustive range and sweeps a batch of random codes against
//! brute force.

use std::io::Write;

use crate::arith::{
    add, add_f3_kat, add_forced, isometric_add_mask, isometric_sub_mask, kat_decode, kat_encode,
    negate, rotate_planes,
};
use crate::code::GeneratorMatrix;
use crate::engine::{brute_force_min_weight, minimum_weight, EngineOptions};
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::sliced::{DenseVector, SlicedVector, WordWidth};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelftestSummary {
    pub checks: usize,
    pub failures: usize,
    /// Random codes cross-checked against brute force (deep mode only).
    pub codes_verified: usize,
}

impl SelftestSummary {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Run the diagnostics, writing one `ok`/`FAIL` line per check to `sink`.
/// A failed check is recorded, not returned as an error; `Err` means the
/// harness itself could not run (for example, the sink rejected a write).
pub fn run(deep: bool, sink: &mut dyn Write) -> Result<SelftestSummary> {
    let mut summary = SelftestSummary { checks: 0, failures: 0, codes_verified: 0 };

    let shallow_primes: &[u64] = &[3, 5, 7];
    let deep_primes: &[u64] = &[11, 13, 31];

    check(&mut summary, sink, "field tables for small primes", check_field_tables)?;
    check(&mut summary, sink, "pack/unpack round trips", check_round_trips)?;
    check(&mut summary, sink, "adders match modular arithmetic (p in {3,5,7})", || {
        check_adders(shallow_primes)
    })?;
    if deep {
        check(&mut summary, sink, "adders match modular arithmetic (p in {11,13,31})", || {
            check_adders(deep_primes)
        })?;
    }
    check(&mut summary, sink, "carry fold mutation is caught", check_carry_fold_mutation)?;
    check(&mut summary, sink, "nonzero masks match exact sums", check_masks)?;
    check(&mut summary, sink, "negation and rotation laws", check_negation_rotation)?;
    check(&mut summary, sink, "redundant F_3 encoding round trips", check_kat)?;
    check(&mut summary, sink, "known distances", check_known_distances)?;
    if deep {
        let verified = check_sweep(&mut summary, sink)?;
        summary.codes_verified = verified;
        emit(sink, &format!("codes verified: {verified}"))?;
    }
    Ok(summary)
}

fn emit(sink: &mut dyn Write, line: &str) -> Result<()> {
    writeln!(sink, "{line}")
        .map_err(|e| Error::Internal(format!("selftest output sink failed: {e}")))
}

fn check(
    summary: &mut SelftestSummary,
    sink: &mut dyn Write,
    name: &str,
    body: impl FnOnce() -> std::result::Result<(), String>,
) -> Result<()> {
    summary.checks += 1;
    match body() {
        Ok(()) => emit(sink, &format!("ok   {name}")),
        Err(detail) => {
            summary.failures += 1;
            emit(sink, &format!("FAIL {name}: {detail}"))
        }
    }
}

fn field(p: u64) -> FieldSpec {
    FieldSpec::new(p).expect("selftest primes are valid")
}

fn sv(p: u64, digits: &[u64]) -> SlicedVector<u64> {
    SlicedVector::pack(&DenseVector::new(field(p), digits.to_vec()).expect("digits in range"))
}

fn check_field_tables() -> std::result::Result<(), String> {
    let expect: &[(u64, u32, bool)] =
        &[(3, 2, true), (5, 3, false), (7, 3, true), (11, 4, false), (31, 5, true)];
    for &(p, r, mersenne) in expect {
        let f = field(p);
        if f.bit_width() != r || f.is_mersenne() != mersenne {
            return Err(format!(
                "p={p}: got r={}, mersenne={}",
                f.bit_width(),
                f.is_mersenne()
            ));
        }
    }
    if FieldSpec::new(9).is_ok() || FieldSpec::new(2).is_ok() {
        return Err("composite or binary modulus accepted".into());
    }
    Ok(())
}

fn check_round_trips() -> std::result::Result<(), String> {
    for p in [3u64, 7, 13] {
        for n in [0usize, 1, 63, 64, 65, 200] {
            let digits: Vec<u64> = (0..n as u64).map(|i| (i * 11 + 3) % p).collect();
            let dense = DenseVector::new(field(p), digits.clone()).map_err(|e| e.to_string())?;
            let s64: SlicedVector<u64> = SlicedVector::pack(&dense);
            let s32: SlicedVector<u32> = SlicedVector::pack(&dense);
            if s64.unpack().digits() != digits || s32.unpack().digits() != digits {
                return Err(format!("p={p} n={n}: round trip mismatch"));
            }
        }
    }
    Ok(())
}

fn check_adders(primes: &[u64]) -> std::result::Result<(), String> {
    for &p in primes {
        for a in 0..p {
            for b in 0..p {
                let v = sv(p, &[a]);
                let w = sv(p, &[b]);
                let want = (a + b) % p;
                for force in [false, true] {
                    let got = add_forced(&v, &w, force).map_err(|e| e.to_string())?;
                    if got.unpack().digits() != [want] {
                        return Err(format!(
                            "p={p}: {a}+{b} gave {:?} (force_generic={force})",
                            got.unpack().digits()
                        ));
                    }
                }
            }
        }
    }
    Ok(())
}

/// The F_3 adder folds the wrapped carry in with XOR. Folding with AND
/// instead still satisfies most pairs; 2 + 2 is the witness that separates
/// the two, so verify the broken fold fails there and the real one does not.
fn check_carry_fold_mutation() -> std::result::Result<(), String> {
    fn fold(a: u64, b: u64, broken: bool) -> u64 {
        let (a0, a1) = (a & 1, a >> 1);
        let (b0, b1) = (b & 1, b >> 1);
        let s0 = a0 ^ b0;
        let c0 = a0 & b0;
        let s1 = a1 ^ b1 ^ c0;
        let c1 = a1 & b1;
        let s0 = if broken { s0 & c1 } else { s0 ^ c1 };
        let t = s0 & s1;
        ((s0 ^ t) | ((s1 ^ t) << 1)) & 3
    }
    for a in 0..3u64 {
        for b in 0..3u64 {
            if fold(a, b, false) != (a + b) % 3 {
                return Err(format!("correct fold wrong at {a}+{b}"));
            }
        }
    }
    if fold(2, 2, true) == 1 {
        return Err("broken fold was not caught by 2+2".into());
    }
    Ok(())
}

fn check_masks() -> std::result::Result<(), String> {
    for p in [3u64, 7, 11] {
        for a in 0..p {
            for b in 0..p {
                let v = sv(p, &[a]);
                let w = sv(p, &[b]);
                let add_mask = isometric_add_mask(&v, &w).map_err(|e| e.to_string())?;
                let sub_mask = isometric_sub_mask(&v, &w).map_err(|e| e.to_string())?;
                if add_mask.weight() != u64::from((a + b) % p != 0) {
                    return Err(format!("p={p}: add mask wrong at {a}+{b}"));
                }
                if sub_mask.weight() != u64::from(a != b) {
                    return Err(format!("p={p}: sub mask wrong at {a}-{b}"));
                }
            }
        }
        // Vector case: mask weight equals the exact sum's weight.
        let digits_a: Vec<u64> = (0..150u64).map(|i| i % p).collect();
        let digits_b: Vec<u64> = (0..150u64).map(|i| (i * 2 + 1) % p).collect();
        let v = sv(p, &digits_a);
        let w = sv(p, &digits_b);
        let exact = add(&v, &w).map_err(|e| e.to_string())?;
        let mask = isometric_add_mask(&v, &w).map_err(|e| e.to_string())?;
        if mask.weight() != exact.weight() {
            return Err(format!("p={p}: vector add mask weight mismatch"));
        }
    }
    Ok(())
}

fn check_negation_rotation() -> std::result::Result<(), String> {
    for p in [3u64, 7, 31, 11] {
        for x in 0..p {
            let v = sv(p, &[x]);
            let neg = negate(&v).map_err(|e| e.to_string())?;
            let zero = add(&v, &neg).map_err(|e| e.to_string())?;
            if zero.weight() != 0 {
                return Err(format!("p={p}: {x} + (-{x}) is nonzero"));
            }
        }
        if field(p).is_mersenne() {
            let r = field(p).bit_width();
            for x in 0..p {
                for s in 0..r {
                    let got = rotate_planes(&sv(p, &[x]), s).map_err(|e| e.to_string())?;
                    if got.unpack().digits() != [(x << s) % p] {
                        return Err(format!("p={p}: rotation by {s} wrong at {x}"));
                    }
                }
            }
        }
    }
    Ok(())
}

fn check_kat() -> std::result::Result<(), String> {
    for a in 0..3u64 {
        for b in 0..3u64 {
            let va = sv(3, &[a]);
            let vb = sv(3, &[b]);
            let ka = kat_encode(&va).map_err(|e| e.to_string())?;
            let kb = kat_encode(&vb).map_err(|e| e.to_string())?;
            let sum = add_f3_kat(&ka, &kb).map_err(|e| e.to_string())?;
            let decoded = kat_decode(&sum).map_err(|e| e.to_string())?;
            if decoded.unpack().digits() != [(a + b) % 3] {
                return Err(format!("redundant adder wrong at {a}+{b}"));
            }
        }
    }
    let digits: Vec<u64> = (0..100u64).map(|i| i % 3).collect();
    let v = sv(3, &digits);
    let round = kat_decode(&kat_encode(&v).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    if round.unpack().digits() != digits {
        return Err("encode/decode round trip failed".into());
    }
    Ok(())
}

fn check_known_distances() -> std::result::Result<(), String> {
    let cases: &[(u64, &[&[u64]], u64)] = &[
        (3, &[&[1, 0, 1, 1], &[0, 1, 1, 2]], 3),
        (3, &[&[1, 0, 1, 1], &[0, 1, 2, 2]], 2),
        (7, &[&[1, 1, 1, 1, 1]], 5),
    ];
    for &(p, rows, want) in cases {
        let g = GeneratorMatrix::new(field(p), rows.iter().map(|r| r.to_vec()).collect())
            .map_err(|e| e.to_string())?;
        for early_termination in [false, true] {
            let options = EngineOptions { early_termination, ..EngineOptions::default() };
            let result = minimum_weight(&g, &options).map_err(|e| e.to_string())?;
            if result.distance != want {
                return Err(format!(
                    "p={p}: distance {} != {want} (early_termination={early_termination})",
                    result.distance
                ));
            }
        }
    }
    Ok(())
}

fn check_sweep(summary: &mut SelftestSummary, sink: &mut dyn Write) -> Result<usize> {
    const SHAPES: &[(u64, usize, usize)] = &[
        (3, 4, 9),
        (3, 5, 11),
        (5, 3, 8),
        (5, 4, 9),
        (7, 3, 8),
        (7, 4, 9),
        (11, 3, 7),
        (13, 3, 7),
    ];
    const CODES: usize = 200;
    let mut verified = 0usize;
    let mut first_failure: Option<String> = None;
    for index in 0..CODES {
        let (p, k, n) = SHAPES[index % SHAPES.len()];
        let seed = index as u64;
        let outcome = (|| -> std::result::Result<(), String> {
            let g = GeneratorMatrix::random(field(p), k, n, seed).map_err(|e| e.to_string())?;
            let want = brute_force_min_weight(&g).map_err(|e| e.to_string())?;
            let options = EngineOptions {
                threads: 1 + index % 2,
                use_isometric: index % 3 != 0,
                early_termination: index % 5 != 0,
                word_width: if index % 7 < 4 { WordWidth::W64 } else { WordWidth::W32 },
                force_generic_arith: false,
            };
            let result = minimum_weight(&g, &options).map_err(|e| e.to_string())?;
            if result.distance != want {
                return Err(format!(
                    "p={p} k={k} n={n} seed={seed}: engine {} != brute force {want}",
                    result.distance
                ));
            }
            Ok(())
        })();
        match outcome {
            Ok(()) => verified += 1,
            Err(detail) => first_failure = first_failure.or(Some(detail)),
        }
    }
    summary.checks += 1;
    match first_failure {
        None => emit(sink, &format!("ok   random codes match brute force ({verified}/{CODES})"))?,
        Some(detail) => {
            summary.failures += 1;
            emit(
                sink,
                &format!(
                    "FAIL random codes match brute force ({verified}/{CODES}): first failure {detail}"
                ),
            )?;
        }
    }
    Ok(verified)
}
