//! Generator matrices of linear codes over F_p: construction, a plain text
//! file format, seeded random sampling, and the sequence of row-reduced
//! matrices with disjoint information sets that drives the minimum-weight
//! search.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::field::FieldSpec;

const RANDOM_ROW_RETRY_LIMIT: u32 = 1000;

/// k x n generator matrix with entries in [0, p-1], rows spanning the code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorMatrix {
    field: FieldSpec,
    k: usize,
    n: usize,
    rows: Vec<Vec<u64>>,
}

impl GeneratorMatrix {
    pub fn new(field: FieldSpec, rows: Vec<Vec<u64>>) -> Result<GeneratorMatrix> {
        let k = rows.len();
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        let n = rows[0].len();
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        for row in &rows {
            if row.len() != n {
                return Err(Error::LengthMismatch { left: n, right: row.len() });
            }
            if let Some(&d) = row.iter().find(|&&d| d >= field.modulus()) {
                return Err(Error::DigitOutOfRange { digit: d, p: field.modulus() });
            }
        }
        Ok(GeneratorMatrix { field, k, n, rows })
    }

    #[inline]
    pub fn field(&self) -> FieldSpec {
        self.field
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn rows(&self) -> &[Vec<u64>] {
        &self.rows
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.rows[i]
    }

    /// Parse the text format: optional '#' comment lines at the top, then
    /// `p <int>`, `k <int>`, `n <int>`, then k rows of n digits. Blank lines
    /// are skipped anywhere; comments are only allowed before the header.
    pub fn parse(text: &str) -> Result<GeneratorMatrix> {
        let mut header_done = false;
        let mut fields: Vec<(u64, usize)> = Vec::new();
        let mut rows: Vec<Vec<u64>> = Vec::new();
        let mut row_lines: Vec<usize> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('#') {
                if header_done {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "comments are only allowed before the header".into(),
                    });
                }
                continue;
            }
            if fields.len() < 3 {
                let key = ["p", "k", "n"][fields.len()];
                let mut parts = line.split_whitespace();
                let (Some(found), Some(value), None) = (parts.next(), parts.next(), parts.next())
                else {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("expected `{key} <integer>`"),
                    });
                };
                if found != key {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("expected `{key} <integer>`, found `{found}`"),
                    });
                }
                let value: u64 = value.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("`{value}` is not a valid integer"),
                })?;
                fields.push((value, line_no));
                header_done = fields.len() == 3;
                continue;
            }
            let row: Vec<u64> = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<u64>().map_err(|_| Error::Parse {
                        line: line_no,
                        message: format!("`{tok}` is not a valid digit"),
                    })
                })
                .collect::<Result<_>>()?;
            rows.push(row);
            row_lines.push(line_no);
        }
        if fields.len() < 3 {
            return Err(Error::Parse {
                line: text.lines().count() + 1,
                message: "incomplete header: need `p`, `k`, and `n`".into(),
            });
        }
        let (p, p_line) = fields[0];
        let (k, _) = fields[1];
        let (n, n_line) = fields[2];
        let field = FieldSpec::new(p)
            .map_err(|e| Error::Parse { line: p_line, message: e.to_string() })?;
        let k = k as usize;
        let n = n as usize;
        if rows.len() != k {
            return Err(Error::Parse {
                line: row_lines.last().copied().unwrap_or(n_line),
                message: format!("expected {k} rows, found {}", rows.len()),
            });
        }
        for (row, &line_no) in rows.iter().zip(&row_lines) {
            if row.len() != n {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {n} digits, found {}", row.len()),
                });
            }
            if let Some(&d) = row.iter().find(|&&d| d >= p) {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("digit {d} is outside [0, {}]", p - 1),
                });
            }
        }
        GeneratorMatrix::new(field, rows)
    }

    /// Serialize to the text format, byte for byte deterministic: header, one
    /// row per line, single spaces, trailing newline, no comments.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("p {}\nk {}\nn {}\n", self.field.modulus(), self.k, self.n));
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|d| d.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    /// Sample a uniform full-rank k x n matrix, deterministically from the
    /// seed. Rows are drawn one at a time and redrawn (bounded retries) while
    /// they are linearly dependent on the rows above.
    pub fn random(field: FieldSpec, k: usize, n: usize, seed: u64) -> Result<GeneratorMatrix> {
        if k == 0 || n == 0 {
            return Err(Error::InvalidParameter("k and n must be at least 1".into()));
        }
        if k > n {
            return Err(Error::InvalidParameter(format!(
                "k = {k} exceeds n = {n}, no full-rank generator exists"
            )));
        }
        let p = field.modulus();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        // Uniform digit by rejection on the top incomplete block of u64, so
        // the stream of digits depends only on the seed, not the platform.
        let zone = u64::MAX - u64::MAX % p;
        let mut draw = move || loop {
            let x = rng.next_u64();
            if x < zone {
                return x % p;
            }
        };
        let mut rows: Vec<Vec<u64>> = Vec::with_capacity(k);
        // Echelon basis of the accepted rows: (pivot column, normalized row).
        let mut basis: Vec<(usize, Vec<u64>)> = Vec::new();
        for _ in 0..k {
            let mut attempts = 0u32;
            loop {
                attempts += 1;
                if attempts > RANDOM_ROW_RETRY_LIMIT {
                    return Err(Error::RetryLimit { k, attempts: attempts as usize });
                }
                let row: Vec<u64> = (0..n).map(|_| draw()).collect();
                let mut reduced = row.clone();
                for (pivot, basis_row) in &basis {
                    let factor = reduced[*pivot];
                    if factor != 0 {
                        for (x, &b) in reduced.iter_mut().zip(basis_row) {
                            *x = field.sub_digits(*x, field.mul_digits(factor, b));
                        }
                    }
                }
                let Some(pivot) = reduced.iter().position(|&d| d != 0) else {
                    continue;
                };
                let inv = field.inv_digit(reduced[pivot]);
                for x in reduced.iter_mut() {
                    *x = field.mul_digits(*x, inv);
                }
                basis.push((pivot, reduced));
                rows.push(row);
                break;
            }
        }
        GeneratorMatrix::new(field, rows)
    }
}

/// One row-reduced matrix in the sequence: row equivalent to the generator,
/// with unit columns (an identity pattern) at the columns of `info_set`.
/// The first `rank` rows are the pivot rows in info-set order; any remaining
/// rows have their support inside the information sets of earlier matrices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GammaMatrix {
    field: FieldSpec,
    rows: Vec<Vec<u64>>,
    info_set: Vec<usize>,
}

impl GammaMatrix {
    #[inline]
    pub fn field(&self) -> FieldSpec {
        self.field
    }

    #[inline]
    pub fn rows(&self) -> &[Vec<u64>] {
        &self.rows
    }

    /// Pivot columns, ascending.
    #[inline]
    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }

    /// Number of pivots; equals k for every matrix except possibly the last.
    #[inline]
    pub fn rank(&self) -> usize {
        self.info_set.len()
    }
}

/// The sequence of row-reduced matrices with pairwise disjoint information
/// sets. Construction keeps taking fresh copies of G and eliminating on
/// still-unused columns; it stops after the first matrix whose rank falls
/// short of k, because later rounds cannot reach rank k either and their
/// matrices would only weaken the lower bound's per-stage guarantee.
#[derive(Debug, Clone)]
pub struct GammaSet {
    matrices: Vec<GammaMatrix>,
}

impl GammaSet {
    /// Requires G to have rank k; rank-deficient generators are rejected
    /// rather than silently searching a smaller code.
    pub fn build(g: &GeneratorMatrix) -> Result<GammaSet> {
        let field = g.field();
        let k = g.k();
        let n = g.n();
        let mut used = vec![false; n];
        let mut matrices: Vec<GammaMatrix> = Vec::new();
        loop {
            let mut work = g.rows().to_vec();
            let mut pivots: Vec<(usize, usize)> = Vec::new(); // (column, row)
            let mut row_used = vec![false; k];
            for c in 0..n {
                if used[c] || pivots.len() == k {
                    continue;
                }
                let Some(i) = (0..k).find(|&i| !row_used[i] && work[i][c] != 0) else {
                    continue;
                };
                row_used[i] = true;
                let inv = field.inv_digit(work[i][c]);
                for x in work[i].iter_mut() {
                    *x = field.mul_digits(*x, inv);
                }
                let pivot_row = work[i].clone();
                for (i2, other) in work.iter_mut().enumerate() {
                    if i2 == i || other[c] == 0 {
                        continue;
                    }
                    let factor = other[c];
                    for (x, &pv) in other.iter_mut().zip(&pivot_row) {
                        let delta = field.mul_digits(factor, pv);
                        *x = field.sub_digits(*x, delta);
                    }
                }
                pivots.push((c, i));
            }
            let rank = pivots.len();
            if rank == 0 {
                break;
            }
            if matrices.is_empty() && rank < k {
                return Err(Error::RankDeficient { rank, k });
            }
            for &(c, _) in &pivots {
                used[c] = true;
            }
            // Pivot rows first, in info-set order, then the leftover rows.
            let mut rows: Vec<Vec<u64>> = Vec::with_capacity(k);
            for &(_, i) in &pivots {
                rows.push(std::mem::take(&mut work[i]));
            }
            for (i, row) in work.into_iter().enumerate() {
                if !row_used[i] {
                    rows.push(row);
                }
            }
            let info_set: Vec<usize> = pivots.iter().map(|&(c, _)| c).collect();
            let partial = rank < k;
            matrices.push(GammaMatrix { field, rows, info_set });
            if partial {
                break;
            }
        }
        Ok(GammaSet { matrices })
    }

    #[inline]
    pub fn matrices(&self) -> &[GammaMatrix] {
        &self.matrices
    }

    /// Number of matrices, the m of the lower bound.
    #[inline]
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    /// Rank of the last matrix, the k_m of the lower bound.
    pub fn last_rank(&self) -> usize {
        self.matrices.last().map_or(0, |m| m.rank())
    }
}
