//! Tagged partitions, their validation, the Cousin-lemma generator, product
//! partitions and tag strategies.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gauges::{Anchor, Gauge, GaugeError};
use crate::geometry::{ball_contains, box_contains, product, Interval, Point};
use crate::nullset::NullSet;
use crate::sum::PairwiseSum;

/// Bisection depth budget per axis; cells can shrink to `2^-40` of the
/// domain width.
pub const DEFAULT_DEPTH_BUDGET: u32 = 40;

/// Offset of the null-avoiding tag from the cell center, as a fraction of the
/// cell width. Irrational, so shifted dyadic centers avoid small rationals.
pub const NULL_AVOIDING_OFFSET: f64 = std::f64::consts::SQRT_2 / 4.0;

/// Retries of the null-avoiding offset, halving it each time.
pub const NULL_AVOIDING_RETRIES: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Discipline {
    /// Tags anywhere in the domain.
    McShane,
    /// Tags in their own cell (Henstock-Kurzweil).
    Hk,
}

#[derive(Debug, Error)]
pub enum PartitionError {
    #[error("cell {lo:?}..{hi:?} is still not fine after {budget} bisections")]
    DepthExceeded { lo: Vec<f64>, hi: Vec<f64>, budget: u32 },
    #[error("gauge error: {0}")]
    Gauge(#[from] GaugeError),
    #[error("gauge domain does not contain the partition domain")]
    DomainMismatch,
    #[error("tag strategy {0} requires the McShane discipline")]
    StrategyRequiresMcShane(&'static str),
    #[error("no section partition for outer item {index}")]
    FamilyMissing { index: usize },
    #[error("section partitions must share one domain and discipline")]
    FamilyMismatch,
    #[error("malformed partition line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaggedInterval<const D: usize> {
    pub tag: Point<D>,
    pub cell: Interval<D>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaggedPartition<const D: usize> {
    domain: Interval<D>,
    discipline: Discipline,
    items: Vec<TaggedInterval<D>>,
}

impl<const D: usize> TaggedPartition<D> {
    /// Wrap items without checking them; see [`validate`].
    pub fn new(domain: Interval<D>, discipline: Discipline, items: Vec<TaggedInterval<D>>) -> Self {
        TaggedPartition { domain, discipline, items }
    }

    pub fn domain(&self) -> &Interval<D> {
        &self.domain
    }

    pub fn discipline(&self) -> Discipline {
        self.discipline
    }

    pub fn items(&self) -> &[TaggedInterval<D>] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Largest cell diameter (max norm).
    pub fn mesh(&self) -> f64 {
        self.items.iter().map(|it| it.cell.diameter()).fold(0.0, f64::max)
    }
}

/// Which corner the fixed-corner strategy uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Corner {
    Lower,
    Upper,
}

/// How the generator picks tags. Everything except `Center` is McShane only.
#[derive(Debug, Clone, PartialEq)]
pub enum TagStrategy {
    Center,
    /// Shift the tag off the center by an irrational fraction of the width,
    /// retrying with halved offsets while the tag lands in the set or is not
    /// fine, and fall back to the center.
    NullAvoiding(NullSet),
    /// Every tag at the chosen corner of its cell; cells are bisected until
    /// the corner tag is fine.
    Corner(Corner),
    /// Adversarial: a cell that meets the set must be tagged on the set; the
    /// center is not offered for such cells.
    OnSet(NullSet),
}

impl TagStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            TagStrategy::Center => "center",
            TagStrategy::NullAvoiding(_) => "null-avoiding",
            TagStrategy::Corner(_) => "corner",
            TagStrategy::OnSet(_) => "on-set",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CousinOptions {
    pub depth_budget: u32,
}

impl Default for CousinOptions {
    fn default() -> Self {
        CousinOptions { depth_budget: DEFAULT_DEPTH_BUDGET }
    }
}

enum Decision<const D: usize> {
    Tag(Point<D>),
    Split([bool; D]),
}

struct Generator<'a, const D: usize> {
    gauge: &'a Gauge<D>,
    constant: Option<f64>,
    anchors: Vec<Anchor<D>>,
    strategy: &'a TagStrategy,
    budget: u32,
}

impl<const D: usize> Generator<'_, D> {
    fn radii(&self, t: &Point<D>) -> Result<[f64; D], GaugeError> {
        match self.constant {
            // generator tags never leave the domain
            Some(r) => Ok([r; D]),
            None => self.gauge.eval_axes(t),
        }
    }

    fn fits(&self, cell: &Interval<D>, t: &Point<D>) -> Result<bool, GaugeError> {
        Ok(box_contains(cell, t, &self.radii(t)?))
    }

    /// The tag a strict strategy insists on for this cell, if any.
    fn strict_tag(&self, cell: &Interval<D>) -> Option<Point<D>> {
        match self.strategy {
            TagStrategy::Corner(Corner::Lower) => Some(*cell.lo()),
            TagStrategy::Corner(Corner::Upper) => Some(*cell.hi()),
            TagStrategy::OnSet(z) => z.point_in(cell),
            TagStrategy::Center | TagStrategy::NullAvoiding(_) => None,
        }
    }

    /// Axes on which the cell reaches past the axis radii at `t`.
    fn failing(&self, cell: &Interval<D>, t: &Point<D>) -> Result<[bool; D], GaugeError> {
        let r = self.radii(t)?;
        let reach = cell.reach_from(t);
        let mut axes = [false; D];
        for a in 0..D {
            axes[a] = reach[a] >= r[a];
        }
        Ok(axes)
    }

    /// Tag the cell or say which axes to bisect.
    ///
    /// Candidates in order: anchors of the gauge that meet the cell, the
    /// strict strategy's tag (no other candidate follows it), the
    /// null-avoiding offsets, the center. Splits go along the axes on which
    /// the center fails, or failing that those on which the strict tag
    /// fails.
    fn decide(&self, cell: &Interval<D>) -> Result<Decision<D>, GaugeError> {
        for a in &self.anchors {
            if let Some(t) = a.tag_in(cell) {
                if self.fits(cell, &t)? {
                    return Ok(Decision::Tag(t));
                }
            }
        }
        let center = cell.center();
        let strict = self.strict_tag(cell);
        let mut strict_failing = [true; D];
        if let Some(p) = strict {
            strict_failing = self.failing(cell, &p)?;
            if !strict_failing.contains(&true) {
                return Ok(Decision::Tag(p));
            }
        } else if let TagStrategy::NullAvoiding(z) = self.strategy {
            let mut off = NULL_AVOIDING_OFFSET;
            for _ in 0..=NULL_AVOIDING_RETRIES {
                let mut t = center;
                for (a, ta) in t.iter_mut().enumerate() {
                    *ta += off * cell.width(a);
                }
                let t = cell.clamp(&t);
                if !z.contains(&t) && self.fits(cell, &t)? {
                    return Ok(Decision::Tag(t));
                }
                off *= 0.5;
            }
        }
        let center_failing = self.failing(cell, &center)?;
        if !center_failing.contains(&true) {
            if strict.is_none() {
                return Ok(Decision::Tag(center));
            }
            return Ok(Decision::Split(strict_failing));
        }
        Ok(Decision::Split(center_failing))
    }

    fn visit<E, F>(&self, cell: Interval<D>, levels: [u32; D], emit: &mut F) -> Result<(), E>
    where
        E: From<PartitionError>,
        F: FnMut(TaggedInterval<D>) -> Result<(), E>,
    {
        let axes = match self.decide(&cell).map_err(PartitionError::from)? {
            Decision::Tag(tag) => return emit(TaggedInterval { tag, cell }),
            Decision::Split(axes) => axes,
        };
        let mut next = levels;
        for a in 0..D {
            if axes[a] {
                next[a] += 1;
                if next[a] > self.budget {
                    return Err(PartitionError::DepthExceeded {
                        lo: cell.lo_vec(),
                        hi: cell.hi_vec(),
                        budget: self.budget,
                    }
                    .into());
                }
            }
        }
        let count = axes.iter().filter(|&&b| b).count();
        for i in 0..1usize << count {
            self.visit(cell.child(axes, i), next, emit)?;
        }
        Ok(())
    }
}

/// Generate a δ-fine partition of `domain` by bisection and hand each item to
/// `emit` in depth-first order (axis 0 fastest among siblings), without
/// materializing the partition.
///
/// For every cell the generator tries, in order: the anchors of the gauge
/// that meet the cell, the strategy's tags, and the center (not offered for
/// cells the on-set strategy claims). The first tag whose axis radii contain
/// the cell is accepted. Otherwise the cell is bisected along the axes on
/// which the center fails; for isotropic gauges on square cells this is the
/// usual quadtree split.
pub fn cousin_visit<const D: usize, E, F>(
    domain: &Interval<D>,
    gauge: &Gauge<D>,
    discipline: Discipline,
    strategy: &TagStrategy,
    opts: CousinOptions,
    mut emit: F,
) -> Result<(), E>
where
    E: From<PartitionError>,
    F: FnMut(TaggedInterval<D>) -> Result<(), E>,
{
    if !gauge.domain().contains_interval(domain) {
        return Err(PartitionError::DomainMismatch.into());
    }
    if discipline == Discipline::Hk && *strategy != TagStrategy::Center {
        return Err(PartitionError::StrategyRequiresMcShane(strategy.name()).into());
    }
    let anchors = gauge.anchors();
    let gen = Generator { gauge, constant: gauge.constant_radius(), anchors, strategy, budget: opts.depth_budget };
    gen.visit(*domain, [0; D], &mut emit)
}

/// Materialized [`cousin_visit`].
pub fn cousin_partition<const D: usize>(
    domain: &Interval<D>,
    gauge: &Gauge<D>,
    discipline: Discipline,
    strategy: &TagStrategy,
    opts: CousinOptions,
) -> Result<TaggedPartition<D>, PartitionError> {
    let mut items = Vec::new();
    cousin_visit(domain, gauge, discipline, strategy, opts, |it| {
        items.push(it);
        Ok::<(), PartitionError>(())
    })?;
    Ok(TaggedPartition::new(*domain, discipline, items))
}

/// `true` iff every cell lies in the open ball `B(tag, δ(tag))`.
pub fn is_delta_fine<const D: usize>(p: &TaggedPartition<D>, gauge: &Gauge<D>) -> Result<bool, GaugeError> {
    for it in p.items() {
        if !ball_contains(&it.cell, &it.tag, gauge.eval(&it.tag)?) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Outcome of [`validate`]. `is_valid` summarizes the individual findings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub full: bool,
    pub overlapping_pairs: Vec<(usize, usize)>,
    pub cells_outside_domain: Vec<usize>,
    pub tags_outside_domain: Vec<usize>,
    pub tags_outside_cells: Vec<usize>,
    pub measure_sum: f64,
    pub cover_deficit: f64,
    pub cover_tolerance: f64,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.overlapping_pairs.is_empty()
            && self.cells_outside_domain.is_empty()
            && self.tags_outside_domain.is_empty()
            && self.tags_outside_cells.is_empty()
            && (!self.full || self.cover_deficit <= self.cover_tolerance)
    }
}

/// Check pairwise non-overlap, containment in the domain, tag placement for
/// the discipline, and (when `full`) that the cell measures add up to the
/// domain measure within a pairwise-summation rounding allowance.
pub fn validate<const D: usize>(p: &TaggedPartition<D>, full: bool) -> ValidityReport {
    let dom = p.domain();
    let mut cells_outside_domain = Vec::new();
    let mut tags_outside_domain = Vec::new();
    let mut tags_outside_cells = Vec::new();
    let mut sum = PairwiseSum::new(1);
    for (i, it) in p.items().iter().enumerate() {
        if !dom.contains_interval(&it.cell) {
            cells_outside_domain.push(i);
        }
        if !dom.contains_point(&it.tag) {
            tags_outside_domain.push(i);
        }
        if p.discipline() == Discipline::Hk && !it.cell.contains_point(&it.tag) {
            tags_outside_cells.push(i);
        }
        sum.push_scalar(it.cell.measure());
    }
    let measure_sum = sum.total_scalar();
    let n = p.len().max(2) as f64;
    let cover_tolerance = 4.0 * f64::EPSILON * dom.measure() * n.log2().ceil();
    ValidityReport {
        full,
        overlapping_pairs: overlapping_pairs(p.items()),
        cells_outside_domain,
        tags_outside_domain,
        tags_outside_cells,
        measure_sum,
        cover_deficit: (dom.measure() - measure_sum).abs(),
        cover_tolerance,
    }
}

fn key(x: f64) -> i64 {
    // order-preserving map of finite doubles to integers
    let b = x.to_bits() as i64;
    if b < 0 {
        b ^ i64::MAX
    } else {
        b
    }
}

/// Pairs of items whose interiors intersect. Exact for valid input and
/// reports at least one pair whenever an overlap exists.
fn overlapping_pairs<const D: usize>(items: &[TaggedInterval<D>]) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| items[a].cell.lo()[0].total_cmp(&items[b].cell.lo()[0]).then(a.cmp(&b)));
    let mut pairs = Vec::new();
    match D {
        1 => {
            let mut reach: Option<(f64, usize)> = None;
            for &i in &order {
                let c = &items[i].cell;
                if let Some((hi, j)) = reach {
                    if c.lo()[0] < hi {
                        pairs.push((j.min(i), j.max(i)));
                    }
                }
                if reach.map_or(true, |(hi, _)| c.hi()[0] > hi) {
                    reach = Some((c.hi()[0], i));
                }
            }
        }
        2 => {
            // sweep along x; active cells are keyed by their lower y edge
            let mut active: BTreeMap<(i64, usize), (f64, usize)> = BTreeMap::new();
            let mut expiry: BinaryHeap<Reverse<(i64, usize, i64)>> = BinaryHeap::new();
            for &i in &order {
                let c = &items[i].cell;
                while let Some(Reverse((xh, j, ylo))) = expiry.peek().copied() {
                    if xh <= key(c.lo()[0]) {
                        expiry.pop();
                        active.remove(&(ylo, j));
                    } else {
                        break;
                    }
                }
                let (ylo, yhi) = (c.lo()[1], c.hi()[1]);
                if let Some((_, &(ph, j))) = active.range(..(key(ylo), usize::MAX)).next_back() {
                    if ph > ylo {
                        pairs.push((j.min(i), j.max(i)));
                    }
                }
                for (&(k, _), &(_, j)) in active.range((key(ylo), 0)..) {
                    if k >= key(yhi) {
                        break;
                    }
                    if !pairs.contains(&(j.min(i), j.max(i))) {
                        pairs.push((j.min(i), j.max(i)));
                    }
                }
                active.insert((key(ylo), i), (yhi, i));
                expiry.push(Reverse((key(c.hi()[0]), i, key(ylo))));
            }
        }
        _ => {
            for a in 0..items.len() {
                for b in a + 1..items.len() {
                    if !items[a].cell.nonoverlapping(&items[b].cell) {
                        pairs.push((a, b));
                    }
                }
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

/// `Q = {((t1, t2), I1 x I2)}` with `families[i]` the partition of the second
/// factor attached to the `i`-th item of `pi`.
pub fn product_partition(
    pi: &TaggedPartition<1>,
    families: &[TaggedPartition<1>],
) -> Result<TaggedPartition<2>, PartitionError> {
    if families.len() < pi.len() {
        return Err(PartitionError::FamilyMissing { index: families.len() });
    }
    let Some(first) = families.first() else {
        return Ok(TaggedPartition::new(
            product(pi.domain(), &Interval::<1>::unit()),
            pi.discipline(),
            Vec::new(),
        ));
    };
    let y_domain = *first.domain();
    let mut items = Vec::new();
    for (it1, fam) in pi.items().iter().zip(families) {
        if *fam.domain() != y_domain || fam.discipline() != pi.discipline() {
            return Err(PartitionError::FamilyMismatch);
        }
        for it2 in fam.items() {
            items.push(TaggedInterval { tag: [it1.tag[0], it2.tag[0]], cell: product(&it1.cell, &it2.cell) });
        }
    }
    Ok(TaggedPartition::new(product(pi.domain(), &y_domain), pi.discipline(), items))
}

/// The one-dimensional partition of the second factor by all distinct y-edges
/// of the cells of `p`.
pub fn second_coord_refinement(p: &TaggedPartition<2>) -> Vec<Interval<1>> {
    let mut edges: Vec<f64> = Vec::with_capacity(2 * p.len() + 2);
    edges.push(p.domain().lo()[1]);
    edges.push(p.domain().hi()[1]);
    for it in p.items() {
        edges.push(it.cell.lo()[1]);
        edges.push(it.cell.hi()[1]);
    }
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    edges.windows(2).map(|w| Interval::<1>::new(w[0], w[1]).expect("sorted distinct edges")).collect()
}

/// Replace each tag by the strategy's choice for its cell. With a gauge, a
/// new tag is only taken when the item stays fine; otherwise the old tag is
/// kept.
pub fn retag<const D: usize>(
    p: &TaggedPartition<D>,
    strategy: &TagStrategy,
    gauge: Option<&Gauge<D>>,
) -> Result<TaggedPartition<D>, PartitionError> {
    if p.discipline() == Discipline::Hk && *strategy != TagStrategy::Center {
        return Err(PartitionError::StrategyRequiresMcShane(strategy.name()));
    }
    let fine = |it: &TaggedInterval<D>, t: &Point<D>| -> Result<bool, GaugeError> {
        match gauge {
            None => Ok(true),
            Some(g) => Ok(ball_contains(&it.cell, t, g.eval(t)?)),
        }
    };
    let mut items = Vec::with_capacity(p.len());
    for it in p.items() {
        let center = it.cell.center();
        let mut candidates: Vec<Point<D>> = Vec::new();
        match strategy {
            TagStrategy::Center => {}
            TagStrategy::NullAvoiding(z) => {
                let mut off = NULL_AVOIDING_OFFSET;
                for _ in 0..=NULL_AVOIDING_RETRIES {
                    let mut t = center;
                    for (a, ta) in t.iter_mut().enumerate() {
                        *ta += off * it.cell.width(a);
                    }
                    let t = it.cell.clamp(&t);
                    if !z.contains(&t) {
                        candidates.push(t);
                    }
                    off *= 0.5;
                }
            }
            TagStrategy::Corner(Corner::Lower) => candidates.push(*it.cell.lo()),
            TagStrategy::Corner(Corner::Upper) => candidates.push(*it.cell.hi()),
            TagStrategy::OnSet(z) => candidates.extend(z.point_in(&it.cell)),
        }
        candidates.push(center);
        let mut tag = it.tag;
        for c in candidates {
            if fine(it, &c)? {
                tag = c;
                break;
            }
        }
        items.push(TaggedInterval { tag, cell: it.cell });
    }
    Ok(TaggedPartition::new(*p.domain(), p.discipline(), items))
}

#[derive(Serialize, Deserialize)]
struct ItemLine {
    tag: Vec<f64>,
    cell: Vec<[f64; 2]>,
}

/// One JSON object per line: `{"tag":[..],"cell":[[lo,hi],..]}`.
pub fn write_jsonl<const D: usize, W: Write>(p: &TaggedPartition<D>, mut w: W) -> Result<(), PartitionError> {
    for it in p.items() {
        let line = ItemLine {
            tag: it.tag.to_vec(),
            cell: (0..D).map(|a| [it.cell.lo()[a], it.cell.hi()[a]]).collect(),
        };
        serde_json::to_writer(&mut w, &line).map_err(io::Error::from)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl<const D: usize, R: BufRead>(
    r: R,
    domain: Interval<D>,
    discipline: Discipline,
) -> Result<TaggedPartition<D>, PartitionError> {
    let mut items = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: ItemLine =
            serde_json::from_str(&line).map_err(|e| PartitionError::Parse { line: n + 1, reason: e.to_string() })?;
        if parsed.tag.len() != D || parsed.cell.len() != D {
            return Err(PartitionError::Parse { line: n + 1, reason: format!("expected dimension {D}") });
        }
        let mut tag = [0.0; D];
        tag.copy_from_slice(&parsed.tag);
        let mut lo = [0.0; D];
        let mut hi = [0.0; D];
        for a in 0..D {
            lo[a] = parsed.cell[a][0];
            hi[a] = parsed.cell[a][1];
        }
        let cell = Interval::from_bounds(lo, hi)
            .map_err(|e| PartitionError::Parse { line: n + 1, reason: e.to_string() })?;
        items.push(TaggedInterval { tag, cell });
    }
    Ok(TaggedPartition::new(domain, discipline, items))
}
