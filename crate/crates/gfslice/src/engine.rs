//! Minimum Hamming weight of a linear code by staged enumeration.
//!
//! Stage g visits every combination of g rows of each row-reduced matrix with
//! scalar coefficients (1, a_2, ..., a_g), a_t nonzero, reusing the partial
//! sum of the first t rows across the whole subtree below it. The running
//! minimum is an upper bound on the distance; after a completed stage g,
//! every codeword still unseen has at least g+1 nonzero message positions on
//! each full-rank information set, which yields a floor that rises with g.
//! The search stops when the floor reaches the running minimum.
//!
//! The floor established by *completed* stages is also sound to test during a
//! stage: anything the rest of the stage could find is still unseen, so once
//! the running minimum falls to the established floor the final answer is
//! already decided and the stage may be abandoned (early termination). This
//! keeps the reported distance independent of thread timing; only the visit
//! count of the abandoned stage varies.

use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};

use crate::arith::{
    add_f3_planes, add_f7_planes, any_add_kernel, iso_add_weight_f3, iso_add_weight_mersenne,
    iso_addsub_weights_f3, iso_sub_weight, mersenne_add_kernel, rotate_into, rotate_negate_into,
    sub_f7_planes, GenericScratch,
};
use crate::code::{GammaMatrix, GammaSet, GeneratorMatrix};
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::sliced::{DenseVector, SlicedVector, Word, WordWidth};

/// Visits between abort-flag checks in a worker.
const CHECK_INTERVAL: u64 = 1 << 16;

/// Default ceiling on brute-force message counts.
pub const BRUTE_FORCE_BUDGET: u64 = 20_000_000;

#[derive(Debug, Clone)]
pub struct EngineOptions {
    /// Worker threads per enumeration pass; 0 and 1 both mean single-threaded.
    pub threads: usize,
    /// Evaluate the innermost combination through the weight-only kernels
    /// instead of materializing the sum.
    pub use_isometric: bool,
    /// Abandon a stage once the result is decided by the established floor.
    pub early_termination: bool,
    /// Storage word for the sliced vectors.
    pub word_width: WordWidth,
    /// Route all additions through the generic carry-loop adders and exact
    /// sums, as a reference configuration for testing.
    pub force_generic_arith: bool,
}

impl Default for EngineOptions {
    fn default() -> EngineOptions {
        EngineOptions {
            threads: 1,
            use_isometric: true,
            early_termination: true,
            word_width: WordWidth::W64,
            force_generic_arith: false,
        }
    }
}

/// Weight floor for codewords untouched after completing stage g of an
/// enumeration over m matrices with pairwise disjoint information sets, the
/// last of rank k_m (the others of rank k): such a codeword carries at least
/// g+1 nonzero message coordinates on each full-rank information set, and at
/// least (g+1) - (k - k_m) on the last one.
pub fn lower_bound(g: usize, m: usize, k: usize, k_m: usize) -> u64 {
    debug_assert!(m >= 1 && k_m <= k);
    let full = (m as u64 - 1) * (g as u64 + 1);
    let partial = (g as i64 + 1) - (k as i64 - k_m as i64);
    full + partial.max(0) as u64
}

/// One stage of the search as reported to callers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageRecord {
    /// Combination size of the stage.
    pub g: usize,
    /// Floor established once the stage (or a previous one) completed.
    pub lower: u64,
    /// Running minimum weight after the stage.
    pub upper: u64,
    /// Codewords visited during the stage.
    pub visited: u64,
    /// False when early termination abandoned the stage partway.
    pub completed: bool,
}

#[derive(Debug, Clone)]
pub struct MinWeightResult {
    pub distance: u64,
    /// Total codewords visited across all stages.
    pub visited: u64,
    pub stages: Vec<StageRecord>,
}

/// Outcome of one enumeration pass over a single matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StagePass {
    /// Minimum weight among visited combinations; `u64::MAX` when the matrix
    /// has fewer than g rows and the pass is empty.
    pub best_weight: u64,
    pub visited: u64,
}

/// Minimum Hamming weight of the code spanned by G, which equals its minimum
/// distance. Requires G to have rank k.
pub fn minimum_weight(gen: &GeneratorMatrix, options: &EngineOptions) -> Result<MinWeightResult> {
    match options.word_width {
        WordWidth::W32 => minimum_weight_impl::<u32>(gen, options),
        WordWidth::W64 => minimum_weight_impl::<u64>(gen, options),
    }
}

/// Enumerate stage g of one matrix: every combination of g rows with scalar
/// coefficients (1, a_2, ..., a_g). Deterministic for any thread count; the
/// early-termination option is ignored here.
pub fn enumerate_stage(
    gamma: &GammaMatrix,
    g: usize,
    options: &EngineOptions,
) -> Result<StagePass> {
    match options.word_width {
        WordWidth::W32 => enumerate_stage_impl::<u32>(gamma, g, options),
        WordWidth::W64 => enumerate_stage_impl::<u64>(gamma, g, options),
    }
}

/// Evaluate all p^k - 1 nonzero messages directly. Refuses jobs whose
/// message count exceeds `budget` (see `BRUTE_FORCE_BUDGET` for the default).
pub fn brute_force_min_weight(gen: &GeneratorMatrix) -> Result<u64> {
    brute_force_min_weight_with_budget(gen, BRUTE_FORCE_BUDGET)
}

pub fn brute_force_min_weight_with_budget(gen: &GeneratorMatrix, budget: u64) -> Result<u64> {
    let p = gen.field().modulus();
    let messages = (p as u128)
        .checked_pow(gen.k() as u32)
        .map(|t| t - 1)
        .unwrap_or(u128::MAX);
    if messages > budget as u128 {
        return Err(Error::BudgetExceeded { needed: messages, budget });
    }
    // Odometer over messages; each digit bump is +1 mod p (the wrap from
    // p-1 to 0 included), so the codeword follows by adding that row once.
    let mut message = vec![0u64; gen.k()];
    let mut codeword = vec![0u64; gen.n()];
    let mut best = u64::MAX;
    for _ in 0..messages {
        for (i, digit) in message.iter_mut().enumerate() {
            for (c, &x) in codeword.iter_mut().zip(gen.row(i)) {
                *c += x;
                if *c >= p {
                    *c -= p;
                }
            }
            *digit += 1;
            if *digit < p {
                break;
            }
            *digit = 0;
        }
        let weight = codeword.iter().filter(|&&c| c != 0).count() as u64;
        if weight != 0 && weight < best {
            best = weight;
        }
    }
    if best == u64::MAX {
        // Every nonzero message mapped to zero: the matrix is all zeros.
        return Err(Error::RankDeficient { rank: 0, k: gen.k() });
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Internals.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    F3,
    F7,
    Mersenne,
    Any,
}

fn field_kind(field: FieldSpec, force_generic: bool) -> Kind {
    if force_generic {
        return if field.is_mersenne() { Kind::Mersenne } else { Kind::Any };
    }
    match field.modulus() {
        3 => Kind::F3,
        7 => Kind::F7,
        _ if field.is_mersenne() => Kind::Mersenne,
        _ => Kind::Any,
    }
}

/// How to apply one scalar coefficient h: rotate-and-add when h is a power of
/// two (Mersenne), rotate-and-subtract when p - h is, h-fold addition
/// otherwise. Indexed by h; entry 0 is a filler.
#[derive(Debug, Clone, Copy)]
enum CoeffPlan {
    AddRot(u32),
    SubRot(u32),
    Repeat(u64),
}

fn build_plans(field: FieldSpec) -> Vec<CoeffPlan> {
    let p = field.modulus();
    let mut plans = vec![CoeffPlan::AddRot(0); p as usize];
    for h in 2..p {
        plans[h as usize] = if field.is_mersenne() && h.is_power_of_two() {
            CoeffPlan::AddRot(h.trailing_zeros())
        } else if field.is_mersenne() && (p - h).is_power_of_two() {
            CoeffPlan::SubRot((p - h).trailing_zeros())
        } else {
            CoeffPlan::Repeat(h)
        };
    }
    plans
}

fn pack_rows<W: Word>(field: FieldSpec, rows: &[Vec<u64>]) -> Result<Vec<SlicedVector<W>>> {
    rows.iter()
        .map(|row| Ok(SlicedVector::pack(&DenseVector::new(field, row.clone())?)))
        .collect()
}

/// Shared state of one enumeration pass, borrowed by every worker.
struct PassCtx<'a, W: Word> {
    field: FieldSpec,
    kind: Kind,
    stride: usize,
    g: usize,
    rows: &'a [SlicedVector<W>],
    plans: &'a [CoeffPlan],
    use_iso: bool,
    next_i1: &'a AtomicUsize,
    best: &'a AtomicU64,
    visited: &'a AtomicU64,
    abort: &'a AtomicBool,
    /// Early-termination floor; 0 disables (weights are always >= 1).
    et_threshold: u64,
}

enum Flow {
    More,
    Stop,
}

/// Per-worker buffers: the partial-sum stack (level t holds the sum of the
/// first t+1 chosen rows) plus scratch for repeated addition and the generic
/// carry loops.
struct Workspace<W: Word> {
    stack: Vec<SlicedVector<W>>,
    spare: SlicedVector<W>,
    scratch: GenericScratch<W>,
    local_visited: u64,
    since_check: u64,
    u_local: u64,
}

impl<W: Word> Workspace<W> {
    fn new(field: FieldSpec, n: usize, g: usize, initial_best: u64) -> Workspace<W> {
        Workspace {
            stack: (0..g).map(|_| SlicedVector::zero(field, n)).collect(),
            spare: SlicedVector::zero(field, n),
            scratch: GenericScratch::new(),
            local_visited: 0,
            since_check: 0,
            u_local: initial_best,
        }
    }

    #[inline]
    fn visit(&mut self, ctx: &PassCtx<'_, W>, weight: u64) -> Result<Flow> {
        if weight == 0 {
            return Err(Error::Internal(
                "visited a zero-weight combination of independent rows".into(),
            ));
        }
        self.local_visited += 1;
        if weight < self.u_local {
            let prev = ctx.best.fetch_min(weight, Ordering::Relaxed);
            self.u_local = prev.min(weight);
        }
        self.since_check += 1;
        if self.since_check >= CHECK_INTERVAL {
            self.since_check = 0;
            if ctx.abort.load(Ordering::Relaxed) {
                return Ok(Flow::Stop);
            }
            let u = ctx.best.load(Ordering::Relaxed);
            if u < self.u_local {
                self.u_local = u;
            }
            if ctx.et_threshold > 0 && u <= ctx.et_threshold {
                ctx.abort.store(true, Ordering::Relaxed);
                return Ok(Flow::Stop);
            }
        }
        Ok(Flow::More)
    }

    /// stack[t] = stack[t-1] + h * rows[i], with h described by `plan`.
    fn combine_level(
        &mut self,
        ctx: &PassCtx<'_, W>,
        t: usize,
        i: usize,
        plan: CoeffPlan,
    ) -> Result<()> {
        let (head, tail) = self.stack.split_at_mut(t);
        combine_into(
            ctx.kind,
            ctx.field,
            ctx.stride,
            plan,
            &head[t - 1],
            &ctx.rows[i],
            &mut tail[0],
            &mut self.spare,
            &mut self.scratch,
        )
    }

    /// Weight of stack[t-1] + h * rows[i] straight from the mask kernels,
    /// when the plan admits one.
    #[inline]
    fn iso_weight(&self, ctx: &PassCtx<'_, W>, t: usize, i: usize, plan: CoeffPlan) -> Option<u64> {
        let v = self.stack[t - 1].planes_raw();
        let w = ctx.rows[i].planes_raw();
        let r = ctx.field.bit_width() as usize;
        match (ctx.kind, plan) {
            (Kind::F3, CoeffPlan::AddRot(s)) => Some(iso_add_weight_f3(ctx.stride, v, w, s)),
            (Kind::F3, CoeffPlan::SubRot(s)) => {
                Some(iso_add_weight_f3(ctx.stride, v, w, (s + 1) % 2))
            }
            (Kind::F7 | Kind::Mersenne, CoeffPlan::AddRot(s)) => {
                Some(iso_add_weight_mersenne(r, ctx.stride, v, w, s))
            }
            (Kind::F7 | Kind::Mersenne, CoeffPlan::SubRot(s)) => {
                Some(iso_sub_weight(r, ctx.stride, v, w, s))
            }
            _ => None,
        }
    }

    fn descend(&mut self, ctx: &PassCtx<'_, W>, t: usize, prev: usize) -> Result<Flow> {
        let remaining = ctx.g - t - 1;
        let last = ctx.rows.len() - 1 - remaining;
        let p = ctx.field.modulus();
        for i in prev + 1..=last {
            if t == ctx.g - 1 {
                if ctx.use_iso && ctx.kind == Kind::F3 {
                    // Fused pair: weights of S + row and S - row in one pass.
                    let (wa, ws) = iso_addsub_weights_f3(
                        ctx.stride,
                        self.stack[t - 1].planes_raw(),
                        ctx.rows[i].planes_raw(),
                    );
                    if let Flow::Stop = self.visit(ctx, wa)? {
                        return Ok(Flow::Stop);
                    }
                    if let Flow::Stop = self.visit(ctx, ws)? {
                        return Ok(Flow::Stop);
                    }
                    continue;
                }
                for h in 1..p {
                    let plan = ctx.plans[h as usize];
                    let iso = if ctx.use_iso { self.iso_weight(ctx, t, i, plan) } else { None };
                    let weight = match iso {
                        Some(weight) => weight,
                        None => {
                            self.combine_level(ctx, t, i, plan)?;
                            self.stack[t].weight()
                        }
                    };
                    if let Flow::Stop = self.visit(ctx, weight)? {
                        return Ok(Flow::Stop);
                    }
                }
            } else {
                for h in 1..p {
                    self.combine_level(ctx, t, i, ctx.plans[h as usize])?;
                    if let Flow::Stop = self.descend(ctx, t + 1, i)? {
                        return Ok(Flow::Stop);
                    }
                }
            }
        }
        Ok(Flow::More)
    }
}

#[allow(clippy::too_many_arguments)]
fn combine_into<W: Word>(
    kind: Kind,
    field: FieldSpec,
    stride: usize,
    plan: CoeffPlan,
    src: &SlicedVector<W>,
    row: &SlicedVector<W>,
    dst: &mut SlicedVector<W>,
    spare: &mut SlicedVector<W>,
    scratch: &mut GenericScratch<W>,
) -> Result<()> {
    let v = src.planes_raw();
    let w = row.planes_raw();
    match kind {
        Kind::F3 => {
            match plan {
                CoeffPlan::AddRot(s) => add_f3_planes(stride, v, w, s, dst.planes_raw_mut()),
                CoeffPlan::SubRot(s) => {
                    add_f3_planes(stride, v, w, (s + 1) % 2, dst.planes_raw_mut())
                }
                CoeffPlan::Repeat(_) => unreachable!("every F_3 scalar is a rotation"),
            }
            Ok(())
        }
        Kind::F7 => {
            match plan {
                CoeffPlan::AddRot(s) => add_f7_planes(stride, v, w, s, dst.planes_raw_mut()),
                CoeffPlan::SubRot(s) => sub_f7_planes(stride, v, w, s, dst.planes_raw_mut()),
                CoeffPlan::Repeat(_) => unreachable!("every F_7 scalar is a rotation"),
            }
            Ok(())
        }
        Kind::Mersenne => {
            let r = field.bit_width() as usize;
            match plan {
                CoeffPlan::AddRot(0) => {
                    mersenne_add_kernel(field, stride, v, w, dst.planes_raw_mut(), scratch)?;
                }
                CoeffPlan::AddRot(s) => {
                    rotate_into(r, stride, w, s, spare.planes_raw_mut());
                    mersenne_add_kernel(
                        field,
                        stride,
                        v,
                        spare.planes_raw(),
                        dst.planes_raw_mut(),
                        scratch,
                    )?;
                }
                CoeffPlan::SubRot(s) => {
                    rotate_negate_into(r, stride, w, s, spare.planes_raw_mut());
                    mersenne_add_kernel(
                        field,
                        stride,
                        v,
                        spare.planes_raw(),
                        dst.planes_raw_mut(),
                        scratch,
                    )?;
                }
                CoeffPlan::Repeat(h) => {
                    mersenne_add_kernel(field, stride, v, w, dst.planes_raw_mut(), scratch)?;
                    for _ in 1..h {
                        mersenne_add_kernel(
                            field,
                            stride,
                            dst.planes_raw(),
                            w,
                            spare.planes_raw_mut(),
                            scratch,
                        )?;
                        std::mem::swap(dst, spare);
                    }
                }
            }
            Ok(())
        }
        Kind::Any => {
            match plan {
                CoeffPlan::AddRot(0) => {
                    any_add_kernel(field, stride, v, w, dst.planes_raw_mut(), scratch)?;
                }
                CoeffPlan::Repeat(h) => {
                    any_add_kernel(field, stride, v, w, dst.planes_raw_mut(), scratch)?;
                    for _ in 1..h {
                        any_add_kernel(
                            field,
                            stride,
                            dst.planes_raw(),
                            w,
                            spare.planes_raw_mut(),
                            scratch,
                        )?;
                        std::mem::swap(dst, spare);
                    }
                }
                CoeffPlan::AddRot(_) | CoeffPlan::SubRot(_) => {
                    unreachable!("rotations exist only for Mersenne moduli")
                }
            }
            Ok(())
        }
    }
}

fn worker_run<W: Word>(ctx: &PassCtx<'_, W>) -> Result<()> {
    let n = ctx.rows[0].len();
    let mut ws = Workspace::new(ctx.field, n, ctx.g, ctx.best.load(Ordering::Relaxed));
    let rows = ctx.rows.len();
    loop {
        if ctx.abort.load(Ordering::Relaxed) {
            break;
        }
        let i1 = ctx.next_i1.fetch_add(1, Ordering::Relaxed);
        if i1 + ctx.g > rows {
            break;
        }
        let flow = if ctx.g == 1 {
            ws.visit(ctx, ctx.rows[i1].weight())?
        } else {
            ws.stack[0].copy_from(&ctx.rows[i1]);
            ws.descend(ctx, 1, i1)?
        };
        if let Flow::Stop = flow {
            break;
        }
        // Subtree boundary: cheap place to test the floor without waiting
        // for the visit-count checkpoint.
        if ctx.et_threshold > 0 && ctx.best.load(Ordering::Relaxed) <= ctx.et_threshold {
            ctx.abort.store(true, Ordering::Relaxed);
            break;
        }
    }
    ctx.visited.fetch_add(ws.local_visited, Ordering::Relaxed);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_pass<W: Word>(
    field: FieldSpec,
    kind: Kind,
    rows: &[SlicedVector<W>],
    plans: &[CoeffPlan],
    g: usize,
    use_iso: bool,
    threads: usize,
    best: &AtomicU64,
    et_threshold: u64,
    abort: &AtomicBool,
) -> Result<u64> {
    if rows.is_empty() || g > rows.len() {
        return Ok(0);
    }
    let next_i1 = AtomicUsize::new(0);
    let visited = AtomicU64::new(0);
    let ctx = PassCtx {
        field,
        kind,
        stride: rows[0].stride(),
        g,
        rows,
        plans,
        use_iso,
        next_i1: &next_i1,
        best,
        visited: &visited,
        abort,
        et_threshold,
    };
    let threads = threads.max(1);
    if threads == 1 {
        worker_run(&ctx)?;
    } else {
        std::thread::scope(|scope| -> Result<()> {
            let handles: Vec<_> = (0..threads).map(|_| scope.spawn(|| worker_run(&ctx))).collect();
            let mut first_err = None;
            for handle in handles {
                match handle.join() {
                    Ok(Ok(())) => {}
                    Ok(Err(e)) => first_err = first_err.or(Some(e)),
                    Err(_) => {
                        first_err =
                            first_err.or(Some(Error::Internal("enumeration worker panicked".into())))
                    }
                }
            }
            match first_err {
                Some(e) => Err(e),
                None => Ok(()),
            }
        })?;
    }
    Ok(visited.load(Ordering::Relaxed))
}

fn minimum_weight_impl<W: Word>(
    gen: &GeneratorMatrix,
    options: &EngineOptions,
) -> Result<MinWeightResult> {
    let gamma = GammaSet::build(gen)?;
    let field = gen.field();
    let (k, n) = (gen.k(), gen.n());
    let m = gamma.len();
    let k_m = gamma.last_rank();
    let kind = field_kind(field, options.force_generic_arith);
    let plans = build_plans(field);
    let use_iso = options.use_isometric && !options.force_generic_arith;
    let packed: Vec<Vec<SlicedVector<W>>> = gamma
        .matrices()
        .iter()
        .map(|mat| pack_rows(field, mat.rows()))
        .collect::<Result<_>>()?;

    // Singleton bound seeds the minimum; stage 1 replaces it with real
    // codeword weights immediately.
    let best = AtomicU64::new((n - k + 1) as u64);
    let mut established = lower_bound(0, m, k, k_m);
    let mut stages = Vec::new();
    let mut total_visited = 0u64;
    for g in 1..=k {
        if best.load(Ordering::Relaxed) <= established {
            break;
        }
        let abort = AtomicBool::new(false);
        let et_threshold = if options.early_termination { established } else { 0 };
        let mut stage_visited = 0u64;
        let mut completed = true;
        for (idx, rows) in packed.iter().enumerate() {
            stage_visited += run_pass(
                field,
                kind,
                rows,
                &plans,
                g,
                use_iso,
                options.threads,
                &best,
                et_threshold,
                &abort,
            )?;
            if abort.load(Ordering::Relaxed) {
                completed = false;
                break;
            }
            if et_threshold > 0
                && idx + 1 < m
                && best.load(Ordering::Relaxed) <= et_threshold
            {
                completed = false;
                break;
            }
        }
        if completed {
            established = lower_bound(g, m, k, k_m);
        }
        stages.push(StageRecord {
            g,
            lower: established,
            upper: best.load(Ordering::Relaxed),
            visited: stage_visited,
            completed,
        });
        total_visited += stage_visited;
        if !completed {
            break;
        }
    }
    Ok(MinWeightResult {
        distance: best.load(Ordering::Relaxed),
        visited: total_visited,
        stages,
    })
}

fn enumerate_stage_impl<W: Word>(
    gamma: &GammaMatrix,
    g: usize,
    options: &EngineOptions,
) -> Result<StagePass> {
    if g == 0 {
        return Err(Error::InvalidParameter("stage size must be at least 1".into()));
    }
    let field = gamma.field();
    let rows: Vec<SlicedVector<W>> = pack_rows(field, gamma.rows())?;
    let plans = build_plans(field);
    let kind = field_kind(field, options.force_generic_arith);
    let use_iso = options.use_isometric && !options.force_generic_arith;
    let best = AtomicU64::new(u64::MAX);
    let abort = AtomicBool::new(false);
    let visited = run_pass(
        field,
        kind,
        &rows,
        &plans,
        g,
        use_iso,
        options.threads,
        &best,
        0,
        &abort,
    )?;
    Ok(StagePass { best_weight: best.load(Ordering::Relaxed), visited })
}
