//! `gfslice`: generate random linear codes, compute their minimum distance,
//! benchmark the addition kernels, and run the built-in diagnostics.
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid input (bad parameters,
//! unreadable or malformed files, exceeded budgets), 3 computational failure
//! (failed diagnostics, brute-force disagreement, internal errors).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use gfslice::bench::{self, Method, Workload};
use gfslice::engine::{self, EngineOptions, MinWeightResult, BRUTE_FORCE_BUDGET};
use gfslice::{selftest, Error, FieldSpec, GeneratorMatrix, WordWidth};

#[derive(Parser)]
#[command(
    name = "gfslice",
    version,
    about = "Bit-sliced prime-field arithmetic and minimum distance of random linear codes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write random full-rank generator matrices to text files
    Gen(GenArgs),
    /// Compute the minimum distance of the code spanned by a generator matrix
    Mindist(MindistArgs),
    /// Time the addition kernels against contiguous-storage baselines
    BenchAdd(BenchAddArgs),
    /// Run the built-in diagnostics
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Field modulus (an odd prime)
    #[arg(long)]
    p: u64,
    /// Code dimension (rows)
    #[arg(long)]
    k: usize,
    /// Code length (columns)
    #[arg(long)]
    n: usize,
    /// Seed for the matrix generator; file i of a batch uses seed + i
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; batches insert _000, _001, ... before the extension
    #[arg(long)]
    out: PathBuf,
    /// Number of matrices to generate
    #[arg(long, default_value_t = 1)]
    count: usize,
}

#[derive(Copy, Clone, ValueEnum)]
enum WidthArg {
    #[value(name = "32")]
    W32,
    #[value(name = "64")]
    W64,
}

#[derive(Args)]
struct MindistArgs {
    /// Generator matrix file
    file: PathBuf,
    /// Worker threads for the enumeration passes
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Storage word width in bits
    #[arg(long, value_enum, default_value = "64")]
    width: WidthArg,
    /// Materialize every codeword instead of using the weight-only kernels
    #[arg(long)]
    no_isometric: bool,
    /// Always finish every enumeration pass
    #[arg(long)]
    no_early_termination: bool,
    /// Route all additions through the generic carry-loop adders
    #[arg(long)]
    force_generic: bool,
    /// Print a JSON document on stdout instead of `mindist <d>`
    #[arg(long)]
    json: bool,
    /// Cross-check the result against exhaustive enumeration
    #[arg(long)]
    verify_brute_force: bool,
    /// Codeword limit for --verify-brute-force
    #[arg(long, default_value_t = BRUTE_FORCE_BUDGET)]
    budget: u64,
}

#[derive(Args)]
struct BenchAddArgs {
    /// Field moduli to benchmark
    #[arg(long, value_delimiter = ',', default_values_t = vec![3u64, 7, 13])]
    p: Vec<u64>,
    /// Methods to run (default: every method the modulus supports)
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Coordinates per vector
    #[arg(long, default_value_t = 4096)]
    len: usize,
    /// Operand pairs cycled through
    #[arg(long, default_value_t = 8)]
    vectors: usize,
    /// Additions per measurement
    #[arg(long, default_value_t = 50_000)]
    reps: usize,
}

#[derive(Args)]
struct SelftestArgs {
    /// Also run the extended exhaustive checks and the random-code sweep
    #[arg(long)]
    deep: bool,
}

/// Exit code plus message for a failed run.
type Failure = (i32, String);

fn lib_err(e: Error) -> Failure {
    let code = match e {
        Error::Internal(_) => 3,
        _ => 2,
    };
    (code, e.to_string())
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    (2, format!("{}: {e}", path.display()))
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let outcome = match cli.command {
        Command::Gen(args) => run_gen(&args),
        Command::Mindist(args) => run_mindist(&args),
        Command::BenchAdd(args) => run_bench_add(&args),
        Command::Selftest(args) => run_selftest(&args),
    };
    if let Err((code, message)) = outcome {
        eprintln!("error: {message}");
        std::process::exit(code);
    }
}

// ---------------------------------------------------------------------------
// gen
// ---------------------------------------------------------------------------

/// `base_003.ext` for `base.ext`; the suffix goes before the extension.
fn numbered(base: &Path, i: usize) -> PathBuf {
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("");
    let name = match base.extension().and_then(|s| s.to_str()) {
        Some(ext) => format!("{stem}_{i:03}.{ext}"),
        None => format!("{stem}_{i:03}"),
    };
    base.with_file_name(name)
}

fn run_gen(args: &GenArgs) -> Result<(), Failure> {
    if args.count == 0 {
        return Err((2, "count must be at least 1".into()));
    }
    let field = FieldSpec::new(args.p).map_err(lib_err)?;
    for i in 0..args.count {
        let seed = args.seed.wrapping_add(i as u64);
        let gen = GeneratorMatrix::random(field, args.k, args.n, seed).map_err(lib_err)?;
        let path = if args.count == 1 { args.out.clone() } else { numbered(&args.out, i) };
        fs::write(&path, gen.to_text()).map_err(|e| io_err(&path, e))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// mindist
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct StageJson {
    g: usize,
    l: u64,
    u: u64,
    visited: u64,
}

#[derive(Serialize)]
struct OptionsJson {
    threads: usize,
    word_width: u32,
    isometric: bool,
    early_termination: bool,
    force_generic: bool,
}

#[derive(Serialize)]
struct MindistJson {
    p: u64,
    k: usize,
    n: usize,
    d: u64,
    elapsed_seconds: f64,
    codewords_visited: u64,
    stages: Vec<StageJson>,
    options: OptionsJson,
}

fn report(gen: &GeneratorMatrix, result: &MinWeightResult, elapsed: f64, threads: usize) {
    eprintln!("[{}, {}] code over F_{}", gen.n(), gen.k(), gen.field().modulus());
    for stage in &result.stages {
        let best = if stage.upper == u64::MAX { "-".into() } else { stage.upper.to_string() };
        let note = if stage.completed { "" } else { " (aborted early)" };
        eprintln!(
            "stage g={}: floor {}, best {best}, visited {}{note}",
            stage.g, stage.lower, stage.visited
        );
    }
    eprintln!(
        "minimum distance {} ({} codewords in {:.3} s, {} thread(s))",
        result.distance, result.visited, elapsed, threads
    );
}

fn run_mindist(args: &MindistArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.file).map_err(|e| io_err(&args.file, e))?;
    let gen = GeneratorMatrix::parse(&text).map_err(lib_err)?;
    let options = EngineOptions {
        threads: args.threads,
        use_isometric: !args.no_isometric,
        early_termination: !args.no_early_termination,
        word_width: match args.width {
            WidthArg::W32 => WordWidth::W32,
            WidthArg::W64 => WordWidth::W64,
        },
        force_generic_arith: args.force_generic,
    };
    let start = Instant::now();
    let result = engine::minimum_weight(&gen, &options).map_err(lib_err)?;
    let elapsed = start.elapsed().as_secs_f64();
    report(&gen, &result, elapsed, args.threads);

    if args.verify_brute_force {
        let brute =
            engine::brute_force_min_weight_with_budget(&gen, args.budget).map_err(lib_err)?;
        if brute != result.distance {
            return Err((
                3,
                format!("engine found distance {} but brute force found {brute}", result.distance),
            ));
        }
        eprintln!("brute force agrees");
    }

    if args.json {
        let doc = MindistJson {
            p: gen.field().modulus(),
            k: gen.k(),
            n: gen.n(),
            d: result.distance,
            elapsed_seconds: elapsed,
            codewords_visited: result.visited,
            stages: result
                .stages
                .iter()
                .map(|s| StageJson { g: s.g, l: s.lower, u: s.upper, visited: s.visited })
                .collect(),
            options: OptionsJson {
                threads: args.threads,
                word_width: match args.width {
                    WidthArg::W32 => 32,
                    WidthArg::W64 => 64,
                },
                isometric: !args.no_isometric,
                early_termination: !args.no_early_termination,
                force_generic: args.force_generic,
            },
        };
        let rendered = serde_json::to_string_pretty(&doc)
            .map_err(|e| (3, format!("could not serialize result: {e}")))?;
        println!("{rendered}");
    } else {
        println!("mindist {}", result.distance);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// bench-add
// ---------------------------------------------------------------------------

fn supports(method: Method, p: u64) -> bool {
    match method {
        Method::Kat3 => p == 3,
        Method::Contig8 | Method::Contig8Mod => p <= 127,
        _ => true,
    }
}

fn run_bench_add(args: &BenchAddArgs) -> Result<(), Failure> {
    let requested: Option<Vec<Method>> = match &args.methods {
        Some(names) => Some(
            names
                .iter()
                .map(|name| name.parse::<Method>().map_err(lib_err))
                .collect::<Result<_, _>>()?,
        ),
        None => None,
    };
    println!("{:<11} {:>10} {:>11} {:>11}  checksum", "method", "p", "seconds", "Melem/s");
    for &p in &args.p {
        let methods = requested.clone().unwrap_or_else(|| {
            Method::ALL.iter().copied().filter(|&m| supports(m, p)).collect()
        });
        for method in methods {
            if !supports(method, p) {
                return Err((2, format!("method {method} does not support p = {p}")));
            }
            let workload = Workload { p, len: args.len, vectors: args.vectors, reps: args.reps };
            let result = bench::run(method, &workload).map_err(lib_err)?;
            let rate = (args.len as f64) * (args.reps as f64) / result.seconds / 1e6;
            println!(
                "{:<11} {:>10} {:>11.4} {:>11.1}  {:016x}",
                method.to_string(),
                p,
                result.seconds,
                rate,
                result.checksum
            );
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// selftest
// ---------------------------------------------------------------------------

fn run_selftest(args: &SelftestArgs) -> Result<(), Failure> {
    let mut stdout = std::io::stdout().lock();
    let summary = selftest::run(args.deep, &mut stdout).map_err(lib_err)?;
    writeln!(stdout, "selftest: {} checks, {} failures", summary.checks, summary.failures)
        .map_err(|e| (3, format!("stdout failed: {e}")))?;
    if summary.passed() {
        Ok(())
    } else {
        Err((3, format!("{} of {} checks failed", summary.failures, summary.checks)))
    }
}
