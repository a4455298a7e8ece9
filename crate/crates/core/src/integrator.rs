//! Riemann sums, variation and strong-gap sums, the S* double sum, and the
//! refinement loop that turns a gauge scheme into an integral estimate.
//!
//! All sums run in item order through [`PairwiseSum`]. Items are evaluated
//! in aligned chunks that may be processed on several threads; the
//! reduction tree depends only on the item count, so results are bit-stable
//! across thread counts.

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gauges::{graded_gauge, pointwise_min, singularity_gauge, Gauge, GaugeError, Grading, SingularSet};
use crate::geometry::{Interval, Point};
use crate::partitions::{
    cousin_partition, cousin_visit, CousinOptions, Discipline, PartitionError, TagStrategy, TaggedInterval,
    TaggedPartition, DEFAULT_DEPTH_BUDGET,
};
use crate::sum::PairwiseSum;
use crate::value::{EvalError, Integrand, IntervalFunction, Norm, VectorValue};

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_STABILITY_WINDOW: usize = 3;
pub const DEFAULT_MAX_DEPTH: usize = 40;

/// log2 of the evaluation chunk size.
const CHUNK_LEVEL: usize = 12;
const CHUNK: usize = 1 << CHUNK_LEVEL;
/// Chunks buffered before a parallel flush.
const CHUNKS_PER_FLUSH: usize = 16;

#[derive(Debug, Error)]
pub enum IntegrateError {
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Gauge(#[from] GaugeError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("partitions cover different domains")]
    DomainMismatch,
    #[error("codomain dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("refinement did not settle within {steps} steps (last gap {gap:?})")]
    NotConverged { steps: usize, gap: Option<f64> },
}

// FNV-1a over whole words; only used to recognise a repeated partition.
const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Running sums over a stream of tagged items.
struct Sweep<'a, const D: usize> {
    f: &'a dyn Integrand<D>,
    big_f: Option<&'a dyn IntervalFunction<D>>,
    norm: Norm,
    dim: usize,
    buffer: Vec<TaggedInterval<D>>,
    riemann: PairwiseSum,
    variation: PairwiseSum,
    gap: PairwiseSum,
    cells: u64,
    mesh: f64,
    fingerprint: u64,
}

struct ChunkSums {
    riemann: Vec<f64>,
    variation: f64,
    gap: f64,
}

impl<'a, const D: usize> Sweep<'a, D> {
    fn new(f: &'a dyn Integrand<D>, big_f: Option<&'a dyn IntervalFunction<D>>, norm: Norm) -> Self {
        let dim = f.codomain_dim();
        Sweep {
            f,
            big_f,
            norm,
            dim,
            buffer: Vec::new(),
            riemann: PairwiseSum::new(dim),
            variation: PairwiseSum::new(1),
            gap: PairwiseSum::new(1),
            cells: 0,
            mesh: 0.0,
            fingerprint: FNV_OFFSET,
        }
    }

    fn push(&mut self, it: TaggedInterval<D>) -> Result<(), IntegrateError> {
        for a in 0..D {
            for word in [it.tag[a], it.cell.lo()[a], it.cell.hi()[a]] {
                self.fingerprint = (self.fingerprint ^ word.to_bits()).wrapping_mul(FNV_PRIME);
            }
        }
        self.cells += 1;
        self.mesh = self.mesh.max(it.cell.diameter());
        self.buffer.push(it);
        if self.buffer.len() == CHUNK * CHUNKS_PER_FLUSH {
            self.flush_chunks()?;
        }
        Ok(())
    }

    /// Evaluate one item into `term` (the Riemann term) and return its
    /// variation and strong-gap terms.
    fn item_terms(
        &self,
        it: &TaggedInterval<D>,
        out: &mut [f64],
        term: &mut [f64],
        fi: &mut [f64],
    ) -> Result<(f64, f64), IntegrateError> {
        self.f.eval(&it.tag, out)?;
        if out.iter().any(|x| !x.is_finite()) {
            return Err(EvalError::NonFinite { at: it.tag.to_vec() }.into());
        }
        let m = it.cell.measure();
        for (t, o) in term.iter_mut().zip(out.iter()) {
            *t = o * m;
        }
        let gap = match self.big_f {
            Some(big_f) => {
                big_f.eval(&it.cell, fi)?;
                self.norm.of_diff(term, fi)
            }
            None => 0.0,
        };
        Ok((self.norm.of(out) * m, gap))
    }

    fn chunk_sums(&self, items: &[TaggedInterval<D>]) -> Result<ChunkSums, IntegrateError> {
        let mut r = PairwiseSum::new(self.dim);
        let mut v = PairwiseSum::new(1);
        let mut g = PairwiseSum::new(1);
        let (mut out, mut term, mut fi) = (vec![0.0; self.dim], vec![0.0; self.dim], vec![0.0; self.dim]);
        for it in items {
            let (var, gap) = self.item_terms(it, &mut out, &mut term, &mut fi)?;
            r.push(&term);
            v.push_scalar(var);
            if self.big_f.is_some() {
                g.push_scalar(gap);
            }
        }
        Ok(ChunkSums { riemann: r.total(), variation: v.total_scalar(), gap: g.total_scalar() })
    }

    /// Evaluate and absorb all complete chunks in the buffer.
    fn flush_chunks(&mut self) -> Result<(), IntegrateError> {
        let full = self.buffer.len() / CHUNK * CHUNK;
        if full == 0 {
            return Ok(());
        }
        let this = &*self;
        let sums: Vec<ChunkSums> = if full > CHUNK {
            this.buffer[..full].par_chunks(CHUNK).map(|c| this.chunk_sums(c)).collect::<Result<_, _>>()?
        } else {
            vec![this.chunk_sums(&this.buffer[..full])?]
        };
        for s in sums {
            self.riemann.push_block(CHUNK_LEVEL, &s.riemann);
            self.variation.push_block(CHUNK_LEVEL, &[s.variation]);
            if self.big_f.is_some() {
                self.gap.push_block(CHUNK_LEVEL, &[s.gap]);
            }
        }
        self.buffer.drain(..full);
        Ok(())
    }

    fn finish(mut self) -> Result<SweepTotals, IntegrateError> {
        self.flush_chunks()?;
        let tail = std::mem::take(&mut self.buffer);
        let (mut out, mut term, mut fi) = (vec![0.0; self.dim], vec![0.0; self.dim], vec![0.0; self.dim]);
        for it in &tail {
            let (var, gap) = self.item_terms(it, &mut out, &mut term, &mut fi)?;
            self.riemann.push(&term);
            self.variation.push_scalar(var);
            if self.big_f.is_some() {
                self.gap.push_scalar(gap);
            }
        }
        Ok(SweepTotals {
            riemann: VectorValue(self.riemann.total()),
            variation: self.variation.total_scalar(),
            gap: self.gap.total_scalar(),
            cells: self.cells,
            mesh: self.mesh,
            fingerprint: self.fingerprint,
        })
    }
}

struct SweepTotals {
    riemann: VectorValue,
    variation: f64,
    gap: f64,
    cells: u64,
    mesh: f64,
    fingerprint: u64,
}

fn sweep_partition<const D: usize>(
    f: &dyn Integrand<D>,
    p: &TaggedPartition<D>,
    big_f: Option<&dyn IntervalFunction<D>>,
    norm: Norm,
) -> Result<SweepTotals, IntegrateError> {
    let mut s = Sweep::new(f, big_f, norm);
    for it in p.items() {
        s.push(*it)?;
    }
    s.finish()
}

/// `Σ f(t)|I|`.
pub fn riemann_sum<const D: usize>(f: &dyn Integrand<D>, p: &TaggedPartition<D>) -> Result<VectorValue, IntegrateError> {
    Ok(sweep_partition(f, p, None, Norm::Euclid)?.riemann)
}

/// `Σ ‖f(t)‖|I|`.
pub fn variation_sum<const D: usize>(
    f: &dyn Integrand<D>,
    p: &TaggedPartition<D>,
    norm: Norm,
) -> Result<f64, IntegrateError> {
    Ok(sweep_partition(f, p, None, norm)?.variation)
}

/// `Σ ‖f(t)|I| - F(I)‖`.
pub fn strong_gap<const D: usize>(
    f: &dyn Integrand<D>,
    p: &TaggedPartition<D>,
    big_f: &dyn IntervalFunction<D>,
    norm: Norm,
) -> Result<f64, IntegrateError> {
    if big_f.codomain_dim() != f.codomain_dim() {
        return Err(IntegrateError::DimensionMismatch(f.codomain_dim(), big_f.codomain_dim()));
    }
    Ok(sweep_partition(f, p, Some(big_f), norm)?.gap)
}

/// Sums over the partition the generator would produce, computed while the
/// items stream by.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamedSums {
    pub riemann: VectorValue,
    pub variation: f64,
    pub strong_gap: Option<f64>,
    pub cells: u64,
    pub mesh: f64,
}

/// [`riemann_sum`], [`variation_sum`] and (with `big_f`) [`strong_gap`] over
/// `cousin_partition(domain, gauge, ..)` without materializing it.
pub fn streamed_sums<const D: usize>(
    f: &dyn Integrand<D>,
    domain: &Interval<D>,
    gauge: &Gauge<D>,
    discipline: Discipline,
    strategy: &TagStrategy,
    big_f: Option<&dyn IntervalFunction<D>>,
    norm: Norm,
) -> Result<StreamedSums, IntegrateError> {
    let t = stream(f, domain, gauge, discipline, strategy, big_f, norm, DEFAULT_DEPTH_BUDGET)?;
    Ok(StreamedSums {
        riemann: t.riemann,
        variation: t.variation,
        strong_gap: big_f.map(|_| t.gap),
        cells: t.cells,
        mesh: t.mesh,
    })
}

#[allow(clippy::too_many_arguments)]
fn stream<const D: usize>(
    f: &dyn Integrand<D>,
    domain: &Interval<D>,
    gauge: &Gauge<D>,
    discipline: Discipline,
    strategy: &TagStrategy,
    big_f: Option<&dyn IntervalFunction<D>>,
    norm: Norm,
    depth_budget: u32,
) -> Result<SweepTotals, IntegrateError> {
    let mut s = Sweep::new(f, big_f, norm);
    cousin_visit(domain, gauge, discipline, strategy, CousinOptions { depth_budget }, |it| s.push(it))?;
    s.finish()
}

/// One refinement step, through the cache when the options carry one.
fn step_totals<const D: usize>(
    f: &dyn Integrand<D>,
    domain: &Interval<D>,
    gauge: &Gauge<D>,
    discipline: Discipline,
    opts: &IntegrateOptions<D>,
    step: usize,
) -> Result<SweepTotals, IntegrateError> {
    let Some(cache) = &opts.cache else {
        return stream(f, domain, gauge, discipline, &opts.tags, None, opts.norm, opts.depth_budget);
    };
    let mut s = Sweep::new(f, None, opts.norm);
    if let Some(items) = cache.get(step) {
        for it in items.iter() {
            s.push(*it)?;
        }
        return s.finish();
    }
    let room = cache.room();
    let mut kept = Some(Vec::new());
    cousin_visit(domain, gauge, discipline, &opts.tags, CousinOptions { depth_budget: opts.depth_budget }, |it| {
        if let Some(v) = kept.as_mut() {
            if v.len() < room {
                v.push(it);
            } else {
                kept = None;
            }
        }
        s.push(it)
    })?;
    if let Some(v) = kept {
        cache.insert(step, v);
    }
    s.finish()
}

/// `ΣΣ ‖f(t) - f(s)‖ |I ∩ J|` over items `(t, I)` of `p` and `(s, J)` of `q`.
/// Pairs whose intersection has measure zero contribute nothing.
pub fn sstar_double_sum<const D: usize>(
    f: &dyn Integrand<D>,
    p: &TaggedPartition<D>,
    q: &TaggedPartition<D>,
    norm: Norm,
) -> Result<f64, IntegrateError> {
    if p.domain() != q.domain() {
        return Err(IntegrateError::DomainMismatch);
    }
    let values = |part: &TaggedPartition<D>| -> Result<Vec<VectorValue>, IntegrateError> {
        part.items().par_iter().map(|it| f.eval_vec(&it.tag).map_err(IntegrateError::from)).collect()
    };
    let fp = values(p)?;
    let fq = values(q)?;
    // q sorted by lower x edge; a cell of p can only meet cells whose lower
    // edge lies within one q-mesh to its left
    let mut order: Vec<usize> = (0..q.len()).collect();
    order.sort_by(|&a, &b| q.items()[a].cell.lo()[0].total_cmp(&q.items()[b].cell.lo()[0]).then(a.cmp(&b)));
    let lows: Vec<f64> = order.iter().map(|&j| q.items()[j].cell.lo()[0]).collect();
    let q_width = q.items().iter().map(|it| it.cell.width(0)).fold(0.0, f64::max);
    let per_item: Vec<f64> = p
        .items()
        .par_iter()
        .enumerate()
        .map(|(i, it)| {
            let start = lows.partition_point(|&x| x < it.cell.lo()[0] - q_width);
            let end = lows.partition_point(|&x| x < it.cell.hi()[0]);
            let mut hits: Vec<(usize, f64)> = Vec::new();
            for &j in &order[start..end] {
                if let Some(o) = it.cell.intersect(&q.items()[j].cell) {
                    let m = o.measure();
                    if m > 0.0 {
                        hits.push((j, m));
                    }
                }
            }
            hits.sort_unstable_by_key(|h| h.0);
            let mut s = PairwiseSum::new(1);
            for (j, m) in hits {
                s.push_scalar(norm.of_diff(&fp[i].0, &fq[j].0) * m);
            }
            s.total_scalar()
        })
        .collect();
    let mut total = PairwiseSum::new(1);
    for v in per_item {
        total.push_scalar(v);
    }
    Ok(total.total_scalar())
}

/// How gauges are refined from one step to the next.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradedProfile {
    pub grading: Grading,
    /// Radius granted on the singular set at step 0.
    pub anchor_start: f64,
    /// The on-set radius at step `k` is `anchor_start * 2^(-anchor_rate * k)`.
    pub anchor_rate: f64,
}

impl GradedProfile {
    pub fn at_set(&self, k: usize) -> f64 {
        self.anchor_start * (-(self.anchor_rate * k as f64)).exp2()
    }
}

type GaugeMaker<const D: usize> = Arc<dyn Fn(usize) -> Result<Gauge<D>, GaugeError> + Send + Sync>;

/// A sequence of gauges `δ_0, δ_1, ...` for the refinement loop.
#[derive(Clone)]
pub struct Scheme<const D: usize> {
    label: String,
    make: GaugeMaker<D>,
}

impl<const D: usize> std::fmt::Debug for Scheme<D> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scheme").field("label", &self.label).finish()
    }
}

impl<const D: usize> Scheme<D> {
    pub fn from_fn(
        label: impl Into<String>,
        make: impl Fn(usize) -> Result<Gauge<D>, GaugeError> + Send + Sync + 'static,
    ) -> Self {
        Scheme { label: label.into(), make: Arc::new(make) }
    }

    /// `δ_k ≡ diam(domain) * 2^-k`: step 0 is the whole domain, step `k` the
    /// uniform `2^k` grid on each axis of a square domain.
    pub fn halving(domain: Interval<D>) -> Self {
        let r0 = domain.diameter();
        Self::from_fn("halving", move |k| Gauge::constant(domain, r0 * (-(k as f64)).exp2()))
    }

    /// [`Scheme::halving`] combined by pointwise minimum with a fixed
    /// singularity gauge around `points`.
    pub fn halving_with_singularity(domain: Interval<D>, points: Vec<Point<D>>, decay: f64) -> Result<Self, GaugeError> {
        let r0 = domain.diameter();
        let sing = singularity_gauge(domain, &points, r0, decay)?;
        Ok(Self::from_fn("halving+singularity", move |k| {
            pointwise_min(&Gauge::constant(domain, r0 * (-(k as f64)).exp2())?, &sing)
        }))
    }

    /// Graded gauges around `set` whose on-set radius shrinks with `k`.
    pub fn graded(domain: Interval<D>, set: SingularSet, profile: GradedProfile) -> Self {
        Self::from_fn("graded", move |k| graded_gauge(domain, &set, profile.grading.clone(), profile.at_set(k)))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn gauge(&self, k: usize) -> Result<Gauge<D>, GaugeError> {
        (self.make)(k)
    }
}

/// Interval function to measure the strong gap against.
/// Items kept by a [`PartitionCache`] unless the caller picks another limit.
pub const DEFAULT_CACHE_ITEMS: usize = 1 << 23;

/// Partitions of a scheme by step. Integrations that share one cache must use
/// the same scheme, domain, discipline, tags and depth budget; each step is
/// then generated once. Steps that would push the total past `max_items` are
/// not kept.
pub struct PartitionCache<const D: usize> {
    max_items: usize,
    state: Mutex<(HashMap<usize, Arc<Vec<TaggedInterval<D>>>>, usize)>,
}

impl<const D: usize> PartitionCache<D> {
    pub fn new(max_items: usize) -> Self {
        PartitionCache { max_items, state: Mutex::new((HashMap::new(), 0)) }
    }

    /// Items currently held.
    pub fn items(&self) -> usize {
        self.state.lock().expect("partition cache poisoned").1
    }

    fn get(&self, step: usize) -> Option<Arc<Vec<TaggedInterval<D>>>> {
        self.state.lock().expect("partition cache poisoned").0.get(&step).cloned()
    }

    fn room(&self) -> usize {
        self.max_items.saturating_sub(self.items())
    }

    fn insert(&self, step: usize, items: Vec<TaggedInterval<D>>) {
        let mut st = self.state.lock().expect("partition cache poisoned");
        if st.0.contains_key(&step) || st.1 + items.len() > self.max_items {
            return;
        }
        st.1 += items.len();
        st.0.insert(step, Arc::new(items));
    }
}

impl<const D: usize> std::fmt::Debug for PartitionCache<D> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PartitionCache").field("max_items", &self.max_items).field("items", &self.items()).finish()
    }
}

#[derive(Clone, Default)]
pub enum StrongGapRequest<const D: usize> {
    #[default]
    None,
    /// Closed form.
    Exact(Arc<dyn IntervalFunction<D>>),
    /// `F(I) = interval_estimate(f, I)` at a tenth of the tolerance.
    Estimated,
}

#[derive(Clone)]
pub struct IntegrateOptions<const D: usize> {
    pub tags: TagStrategy,
    pub stability_window: usize,
    /// Last refinement step attempted.
    pub max_depth: usize,
    pub depth_budget: u32,
    pub norm: Norm,
    pub strong_gap: StrongGapRequest<D>,
    pub cache: Option<Arc<PartitionCache<D>>>,
}

impl<const D: usize> Default for IntegrateOptions<D> {
    fn default() -> Self {
        IntegrateOptions {
            tags: TagStrategy::Center,
            stability_window: DEFAULT_STABILITY_WINDOW,
            max_depth: DEFAULT_MAX_DEPTH,
            depth_budget: DEFAULT_DEPTH_BUDGET,
            norm: Norm::Euclid,
            strong_gap: StrongGapRequest::None,
            cache: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub depth: usize,
    pub cells: u64,
    pub estimate: VectorValue,
    /// Change from the previous step; absent at step 0.
    pub gap: Option<f64>,
    pub variation: f64,
    pub mesh: f64,
    /// The partition equals the previous one; the step does not count
    /// towards stability.
    pub repeated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    /// `max_depth` steps ran without settling.
    StepBudget,
    /// The partition generator ran out of bisection depth.
    DepthBudget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapSource {
    Exact,
    Estimated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongGapRecord {
    pub value: f64,
    pub source: GapSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    pub value: VectorValue,
    pub cauchy_gap: Option<f64>,
    /// Last step computed.
    pub depth: usize,
    /// First step of the run that the stability window confirmed, when
    /// converged.
    pub settled_depth: Option<usize>,
    pub cells: u64,
    pub converged: bool,
    pub stop: StopReason,
    pub tolerance: f64,
    pub stability_window: usize,
    pub discipline: Discipline,
    pub scheme: String,
    pub trace: Vec<TraceRow>,
    pub strong_gap: Option<StrongGapRecord>,
}

impl IntegralResult {
    /// Trace as CSV: `depth,cells,estimate_0..estimate_{d-1},gap`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        let d = self.value.dim();
        let mut header = vec!["depth".to_string(), "cells".to_string()];
        header.extend((0..d).map(|i| format!("estimate_{i}")));
        header.push("gap".into());
        out.write_record(&header)?;
        for row in &self.trace {
            let mut rec = vec![row.depth.to_string(), row.cells.to_string()];
            rec.extend(row.estimate.0.iter().map(|x| x.to_string()));
            rec.push(row.gap.map(|g| g.to_string()).unwrap_or_default());
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Refine along `scheme` until `stability_window` consecutive new partitions
/// change the estimate by at most `tol * max(1, ‖estimate‖)`.
///
/// Running out of steps or bisection depth is reported through `converged`
/// and `stop`, not as an error.
pub fn integrate<const D: usize>(
    f: &dyn Integrand<D>,
    domain: &Interval<D>,
    discipline: Discipline,
    scheme: &Scheme<D>,
    tol: f64,
    opts: &IntegrateOptions<D>,
) -> Result<IntegralResult, IntegrateError> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(IntegrateError::InvalidTolerance(tol));
    }
    let window = opts.stability_window.max(1);
    let mut trace: Vec<TraceRow> = Vec::new();
    let mut last_fingerprint: Option<(u64, u64)> = None;
    let mut distinct_steps: Vec<usize> = Vec::new();
    let mut streak = 0usize;
    let mut stop = StopReason::StepBudget;
    let mut last_gauge: Option<Gauge<D>> = None;
    let mut cauchy_gap = None;
    for k in 0..=opts.max_depth {
        let gauge = scheme.gauge(k)?;
        let totals = match step_totals(f, domain, &gauge, discipline, opts, k) {
            Ok(t) => t,
            Err(IntegrateError::Partition(PartitionError::DepthExceeded { .. })) => {
                stop = StopReason::DepthBudget;
                break;
            }
            Err(e) => return Err(e),
        };
        let repeated = last_fingerprint == Some((totals.fingerprint, totals.cells));
        let gap = trace.last().map(|prev| totals.riemann.distance(&prev.estimate, opts.norm));
        if !repeated {
            distinct_steps.push(k);
            if let Some(g) = gap {
                cauchy_gap = Some(g);
                if g <= tol * totals.riemann.norm(opts.norm).max(1.0) {
                    streak += 1;
                } else {
                    streak = 0;
                }
            }
        }
        last_fingerprint = Some((totals.fingerprint, totals.cells));
        trace.push(TraceRow {
            depth: k,
            cells: totals.cells,
            estimate: totals.riemann,
            gap,
            variation: totals.variation,
            mesh: totals.mesh,
            repeated,
        });
        last_gauge = Some(gauge);
        if streak >= window {
            stop = StopReason::Converged;
            break;
        }
    }
    let Some(last) = trace.last().cloned() else {
        return Err(IntegrateError::NotConverged { steps: 0, gap: None });
    };
    let converged = stop == StopReason::Converged;
    let settled_depth = converged.then(|| distinct_steps[distinct_steps.len() - 1 - window]);
    let strong_gap = match (&opts.strong_gap, &last_gauge) {
        (StrongGapRequest::None, _) | (_, None) => None,
        (req, Some(g)) => {
            let est = EstimatedIntervalFunction { f, discipline, tol: tol / 10.0 };
            let (big_f, source): (&dyn IntervalFunction<D>, GapSource) = match req {
                StrongGapRequest::Exact(big_f) => (big_f.as_ref(), GapSource::Exact),
                _ => (&est, GapSource::Estimated),
            };
            let totals = stream(f, domain, g, discipline, &opts.tags, Some(big_f), opts.norm, opts.depth_budget)?;
            Some(StrongGapRecord { value: totals.gap, source })
        }
    };
    Ok(IntegralResult {
        value: last.estimate,
        cauchy_gap,
        depth: last.depth,
        settled_depth,
        cells: last.cells,
        converged,
        stop,
        tolerance: tol,
        stability_window: window,
        discipline,
        scheme: scheme.label().to_string(),
        trace,
        strong_gap,
    })
}

/// The partition used at step `k` of `scheme`.
pub fn partition_at<const D: usize>(
    domain: &Interval<D>,
    discipline: Discipline,
    scheme: &Scheme<D>,
    k: usize,
    opts: &IntegrateOptions<D>,
) -> Result<TaggedPartition<D>, IntegrateError> {
    let g = scheme.gauge(k)?;
    Ok(cousin_partition(domain, &g, discipline, &opts.tags, CousinOptions { depth_budget: opts.depth_budget })?)
}

/// The integral of `f` over a sub-interval, by the halving scheme with
/// default options. Fails if the refinement does not settle.
pub fn interval_estimate<const D: usize>(
    f: &dyn Integrand<D>,
    cell: &Interval<D>,
    discipline: Discipline,
    tol: f64,
) -> Result<VectorValue, IntegrateError> {
    let r = integrate(f, cell, discipline, &Scheme::halving(*cell), tol, &IntegrateOptions::default())?;
    if !r.converged {
        return Err(IntegrateError::NotConverged { steps: r.depth, gap: r.cauchy_gap });
    }
    Ok(r.value)
}

/// `I -> interval_estimate(f, I)`.
pub struct EstimatedIntervalFunction<'a, const D: usize> {
    pub f: &'a dyn Integrand<D>,
    pub discipline: Discipline,
    pub tol: f64,
}

impl<const D: usize> IntervalFunction<D> for EstimatedIntervalFunction<'_, D> {
    fn codomain_dim(&self) -> usize {
        self.f.codomain_dim()
    }

    fn eval(&self, cell: &Interval<D>, out: &mut [f64]) -> Result<(), EvalError> {
        let v = interval_estimate(self.f, cell, self.discipline, self.tol).map_err(|e| EvalError::Failed {
            at: cell.center().to_vec(),
            reason: e.to_string(),
        })?;
        out.copy_from_slice(&v.0);
        Ok(())
    }
}
