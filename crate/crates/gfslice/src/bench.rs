//! Vector-addition micro-benchmarks: the sliced kernels against byte-wise
//! and packed-integer baselines, on identical pseudorandom data.
//!
//! Every method computes the same per-coordinate sums, so the checksums agree
//! across methods and double as a correctness check; only the seconds differ.
//! Timing covers the addition loop alone, with operands and results
//! preallocated and each result fed through `black_box` so the work cannot be
//! optimized away.

use std::fmt;
use std::hint::black_box;
use std::str::FromStr;
use std::time::Instant;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::arith::{
    add_f3_planes, add_f7_planes, any_add_kernel, kat_add_planes, kat_decode, kat_encode,
    mersenne_add_kernel, GenericScratch,
};
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::sliced::{DenseVector, SlicedVector, Word};

/// All operand data derives from this fixed seed, so runs are reproducible
/// and checksums are comparable across methods.
const DATA_SEED: u64 = 0x5eed_add5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Sliced kernels on 64-bit words, best adder for the field.
    Sliced64,
    /// Sliced kernels on 32-bit words.
    Sliced32,
    /// One byte per digit, compare-and-subtract reduction.
    Contig8,
    /// One byte per digit, `%` reduction.
    Contig8Mod,
    /// floor(32 / r) digits packed per 32-bit word, extracted digit-wise.
    Contig32,
    /// The redundant F_3 encoding and its six-operation adder (p = 3 only).
    Kat3,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Sliced64,
        Method::Sliced32,
        Method::Contig8,
        Method::Contig8Mod,
        Method::Contig32,
        Method::Kat3,
    ];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Method::Sliced64 => "sliced64",
            Method::Sliced32 => "sliced32",
            Method::Contig8 => "contig8",
            Method::Contig8Mod => "contig8mod",
            Method::Contig32 => "contig32",
            Method::Kat3 => "kat3",
        };
        f.write_str(name)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        match s {
            "sliced64" => Ok(Method::Sliced64),
            "sliced32" => Ok(Method::Sliced32),
            "contig8" => Ok(Method::Contig8),
            "contig8mod" => Ok(Method::Contig8Mod),
            "contig32" => Ok(Method::Contig32),
            "kat3" => Ok(Method::Kat3),
            other => Err(Error::InvalidParameter(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Workload {
    pub p: u64,
    /// Coordinates per vector.
    pub len: usize,
    /// Operand pairs; reps cycle through them.
    pub vectors: usize,
    /// Additions performed (one vector pair each).
    pub reps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchResult {
    pub seconds: f64,
    /// FNV-1a over the little-endian result digits, method independent.
    pub checksum: u64,
}

pub fn run(method: Method, workload: &Workload) -> Result<BenchResult> {
    let field = FieldSpec::new(workload.p)?;
    if workload.len == 0 || workload.vectors == 0 || workload.reps == 0 {
        return Err(Error::InvalidParameter(
            "len, vectors, and reps must all be at least 1".into(),
        ));
    }
    match method {
        Method::Kat3 if field.modulus() != 3 => Err(Error::InvalidParameter(
            "method kat3 requires p = 3".into(),
        )),
        Method::Contig8 | Method::Contig8Mod if field.modulus() > 127 => {
            Err(Error::InvalidParameter(
                "byte-wise methods require p <= 127".into(),
            ))
        }
        Method::Sliced64 => run_sliced::<u64>(field, workload),
        Method::Sliced32 => run_sliced::<u32>(field, workload),
        Method::Contig8 => run_contig8(field, workload, false),
        Method::Contig8Mod => run_contig8(field, workload, true),
        Method::Contig32 => run_contig32(field, workload),
        Method::Kat3 => run_kat3(workload),
    }
}

/// Operand digits for the whole workload: `2 * vectors` rows of `len` digits.
fn operand_digits(field: FieldSpec, workload: &Workload) -> Vec<Vec<u64>> {
    let p = field.modulus();
    let mut rng = ChaCha12Rng::seed_from_u64(DATA_SEED);
    let zone = u64::MAX - u64::MAX % p;
    let mut draw = move || loop {
        let x = rng.next_u64();
        if x < zone {
            return x % p;
        }
    };
    (0..2 * workload.vectors)
        .map(|_| (0..workload.len).map(|_| draw()).collect())
        .collect()
}

fn fnv1a(checksum: &mut u64, digit: u64) {
    for byte in (digit as u32).to_le_bytes() {
        *checksum ^= byte as u64;
        *checksum = checksum.wrapping_mul(0x0000_0100_0000_01b3);
    }
}

fn checksum_digits<'a>(rows: impl Iterator<Item = &'a [u64]>) -> u64 {
    let mut checksum = 0xcbf2_9ce4_8422_2325u64;
    for row in rows {
        for &d in row {
            fnv1a(&mut checksum, d);
        }
    }
    checksum
}

fn run_sliced<W: Word>(field: FieldSpec, workload: &Workload) -> Result<BenchResult> {
    let digits = operand_digits(field, workload);
    let mut a = Vec::with_capacity(workload.vectors);
    let mut b = Vec::with_capacity(workload.vectors);
    for pair in digits.chunks(2) {
        a.push(SlicedVector::<W>::pack(&DenseVector::new(field, pair[0].clone())?));
        b.push(SlicedVector::<W>::pack(&DenseVector::new(field, pair[1].clone())?));
    }
    let mut out: Vec<SlicedVector<W>> =
        (0..workload.vectors).map(|_| SlicedVector::zero(field, workload.len)).collect();
    let stride = a[0].stride();
    let mut scratch = GenericScratch::new();
    let p = field.modulus();
    let mersenne = field.is_mersenne();

    let start = Instant::now();
    for rep in 0..workload.reps {
        let i = rep % workload.vectors;
        let (av, bv) = (a[i].planes_raw(), b[i].planes_raw());
        let ov = out[i].planes_raw_mut();
        match p {
            3 => add_f3_planes(stride, av, bv, 0, ov),
            7 => add_f7_planes(stride, av, bv, 0, ov),
            _ if mersenne => {
                mersenne_add_kernel(field, stride, av, bv, ov, &mut scratch)?;
            }
            _ => {
                any_add_kernel(field, stride, av, bv, ov, &mut scratch)?;
            }
        }
        black_box(out[i].planes_raw());
    }
    let seconds = start.elapsed().as_secs_f64();

    let unpacked: Vec<Vec<u64>> = out.iter().map(|v| v.unpack().digits().to_vec()).collect();
    Ok(BenchResult { seconds, checksum: checksum_digits(unpacked.iter().map(|r| r.as_slice())) })
}

fn run_contig8(field: FieldSpec, workload: &Workload, with_mod: bool) -> Result<BenchResult> {
    let digits = operand_digits(field, workload);
    let p8 = field.modulus() as u8;
    let rows8: Vec<Vec<u8>> =
        digits.iter().map(|row| row.iter().map(|&d| d as u8).collect()).collect();
    let (a, b): (Vec<_>, Vec<_>) = rows8
        .chunks(2)
        .map(|pair| (pair[0].clone(), pair[1].clone()))
        .unzip();
    let mut out: Vec<Vec<u8>> = vec![vec![0u8; workload.len]; workload.vectors];

    let start = Instant::now();
    if with_mod {
        for rep in 0..workload.reps {
            let i = rep % workload.vectors;
            let (av, bv) = (&a[i], &b[i]);
            for ((o, &x), &y) in out[i].iter_mut().zip(av).zip(bv) {
                *o = (x + y) % p8;
            }
            black_box(&out[i]);
        }
    } else {
        for rep in 0..workload.reps {
            let i = rep % workload.vectors;
            let (av, bv) = (&a[i], &b[i]);
            for ((o, &x), &y) in out[i].iter_mut().zip(av).zip(bv) {
                let s = x + y;
                // Select s or s - p without a branch.
                let over = ((s >= p8) as u8).wrapping_neg();
                *o = s - (p8 & over);
            }
            black_box(&out[i]);
        }
    }
    let seconds = start.elapsed().as_secs_f64();

    let unpacked: Vec<Vec<u64>> =
        out.iter().map(|row| row.iter().map(|&d| d as u64).collect()).collect();
    Ok(BenchResult { seconds, checksum: checksum_digits(unpacked.iter().map(|r| r.as_slice())) })
}

fn run_contig32(field: FieldSpec, workload: &Workload) -> Result<BenchResult> {
    let digits = operand_digits(field, workload);
    let r = field.bit_width();
    let per_word = (32 / r) as usize;
    let words = workload.len.div_ceil(per_word);
    let mask = (1u32 << r) - 1;
    let p32 = field.modulus() as u32;
    let pack = |row: &[u64]| -> Vec<u32> {
        let mut packed = vec![0u32; words];
        for (j, &d) in row.iter().enumerate() {
            packed[j / per_word] |= (d as u32) << (r * (j % per_word) as u32);
        }
        packed
    };
    let packed: Vec<Vec<u32>> = digits.iter().map(|row| pack(row)).collect();
    let (a, b): (Vec<_>, Vec<_>) = packed
        .chunks(2)
        .map(|pair| (pair[0].clone(), pair[1].clone()))
        .unzip();
    let mut out: Vec<Vec<u32>> = vec![vec![0u32; words]; workload.vectors];

    let start = Instant::now();
    for rep in 0..workload.reps {
        let i = rep % workload.vectors;
        let (av, bv) = (&a[i], &b[i]);
        for ((o, &x), &y) in out[i].iter_mut().zip(av).zip(bv) {
            let mut word = 0u32;
            for d in 0..per_word as u32 {
                let shift = r * d;
                let s = ((x >> shift) & mask) + ((y >> shift) & mask);
                let over = ((s >= p32) as u32).wrapping_neg();
                word |= (s - (p32 & over)) << shift;
            }
            *o = word;
        }
        black_box(&out[i]);
    }
    let seconds = start.elapsed().as_secs_f64();

    let unpacked: Vec<Vec<u64>> = out
        .iter()
        .map(|row| {
            (0..workload.len)
                .map(|j| ((row[j / per_word] >> (r * (j % per_word) as u32)) & mask) as u64)
                .collect()
        })
        .collect();
    Ok(BenchResult { seconds, checksum: checksum_digits(unpacked.iter().map(|r| r.as_slice())) })
}

fn run_kat3(workload: &Workload) -> Result<BenchResult> {
    let field = FieldSpec::new(3)?;
    let digits = operand_digits(field, workload);
    let mut a = Vec::with_capacity(workload.vectors);
    let mut b = Vec::with_capacity(workload.vectors);
    for pair in digits.chunks(2) {
        let av = SlicedVector::<u64>::pack(&DenseVector::new(field, pair[0].clone())?);
        let bv = SlicedVector::<u64>::pack(&DenseVector::new(field, pair[1].clone())?);
        a.push(kat_encode(&av)?);
        b.push(kat_encode(&bv)?);
    }
    let zero = SlicedVector::<u64>::zero(field, workload.len);
    let mut out: Vec<_> = (0..workload.vectors).map(|_| kat_encode(&zero).unwrap()).collect();
    let stride = a[0].stride();

    let start = Instant::now();
    for rep in 0..workload.reps {
        let i = rep % workload.vectors;
        let (av, bv) = (a[i].planes_raw(), b[i].planes_raw());
        kat_add_planes(stride, av, bv, out[i].planes_raw_mut());
        black_box(out[i].planes_raw());
    }
    let seconds = start.elapsed().as_secs_f64();

    let unpacked: Vec<Vec<u64>> = out
        .iter()
        .map(|v| Ok(kat_decode(v)?.unpack().digits().to_vec()))
        .collect::<Result<_>>()?;
    Ok(BenchResult { seconds, checksum: checksum_digits(unpacked.iter().map(|r| r.as_slice())) })
}
