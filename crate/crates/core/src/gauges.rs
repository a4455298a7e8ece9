//! Gauges: strictly positive functions `δ` on an interval, built from a small
//! set of composable forms.
//!
//! Besides the scalar value, a gauge reports per-axis radii via
//! [`Gauge::eval_axes`]; every axis radius is at most the scalar value, so a
//! cell that fits the axis radii is δ-fine. Isotropic forms return the scalar
//! on every axis. Forms tied to a singular set also expose *anchors*, points
//! or lines the partition generator tries as tags first.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{dist_max, Interval, Point};
use crate::partitions::{PartitionError, TaggedPartition};
use crate::value::{EvalError, Integrand, Norm};

#[derive(Debug, Clone, Error)]
pub enum GaugeError {
    #[error("gauge value {value} at {at:?} is not strictly positive")]
    NonPositive { at: Vec<f64>, value: f64 },
    #[error("point {at:?} lies outside the gauge domain")]
    OutsideDomain { at: Vec<f64> },
    #[error("gauge domains differ")]
    DomainMismatch,
    #[error("invalid gauge parameter: {0}")]
    InvalidParameter(String),
    #[error("negative weight {w} at {at:?}")]
    NegativeWeight { at: Vec<f64>, w: f64 },
    #[error("section family has an empty partition at t1={t1}")]
    EmptyFamily { t1: f64 },
    #[error("section family failed at t1={t1}: {source}")]
    Family { t1: f64, source: Arc<PartitionError> },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Which branch of the level-set construction a weight value falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelBranch {
    /// `w = 0`: the fallback constant applies.
    Fallback,
    /// `1/(n+1) <= w < 1/n`, with `n = 0` meaning `w >= 1`.
    Level(u64),
}

/// Classify a nonnegative weight. Boundary values are resolved by checking
/// the defining inequality in floating point for the computed branch and its
/// two neighbours.
pub fn level_set_branch(w: f64) -> Option<LevelBranch> {
    if !(w >= 0.0) || !w.is_finite() {
        return None;
    }
    if w == 0.0 {
        return Some(LevelBranch::Fallback);
    }
    if w >= 1.0 {
        return Some(LevelBranch::Level(0));
    }
    let inv = 1.0 / w;
    if !inv.is_finite() || inv >= 1.8e19 {
        return Some(LevelBranch::Level(u64::MAX - 1));
    }
    let guess = (inv.ceil() as u64).saturating_sub(1).max(1);
    let holds = |n: u64| n >= 1 && 1.0 / (n as f64 + 1.0) <= w && w < 1.0 / n as f64;
    for n in [guess, guess.saturating_sub(1), guess + 1] {
        if holds(n) {
            return Some(LevelBranch::Level(n));
        }
    }
    Some(LevelBranch::Level(guess))
}

/// A sequence of gauges `δ_n`, evaluated as `(n, t) -> δ_n(t)`.
#[derive(Clone)]
pub struct GaugeSeq<const D: usize> {
    f: Arc<dyn Fn(u64, &Point<D>) -> f64 + Send + Sync>,
}

impl<const D: usize> GaugeSeq<D> {
    pub fn from_fn(f: impl Fn(u64, &Point<D>) -> f64 + Send + Sync + 'static) -> Self {
        GaugeSeq { f: Arc::new(f) }
    }

    /// Constant gauges `δ_n ≡ c(n)`.
    pub fn constants(c: impl Fn(u64) -> f64 + Send + Sync + 'static) -> Self {
        Self::from_fn(move |n, _| c(n))
    }

    /// Gauges from a list; indices past the end reuse the last entry.
    pub fn from_gauges(gauges: Vec<Gauge<D>>) -> Result<Self, GaugeError> {
        if gauges.is_empty() {
            return Err(GaugeError::InvalidParameter("empty gauge sequence".into()));
        }
        Ok(Self::from_fn(move |n, t| {
            let i = (n as usize).min(gauges.len() - 1);
            gauges[i].eval(t).unwrap_or(0.0)
        }))
    }

    pub fn eval(&self, n: u64, t: &Point<D>) -> f64 {
        (self.f)(n, t)
    }
}

/// Singular set for graded and anchored gauges: points and axis-parallel
/// hyperplanes (`coordinate[axis] = value`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SingularSet {
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
    #[serde(default)]
    pub lines: Vec<AxisLine>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisLine {
    pub axis: usize,
    pub value: f64,
}

impl SingularSet {
    pub fn points_1d(xs: &[f64]) -> Self {
        SingularSet { points: xs.iter().map(|&x| vec![x]).collect(), lines: vec![] }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.lines.is_empty()
    }

    /// The singular coordinates seen by the one-dimensional factor `axis`:
    /// hyperplanes orthogonal to it and the point coordinates on it.
    pub fn project(&self, axis: usize) -> SingularSet {
        let mut xs: Vec<f64> = self.lines.iter().filter(|l| l.axis == axis).map(|l| l.value).collect();
        xs.extend(self.points.iter().filter_map(|p| p.get(axis).copied()));
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        SingularSet::points_1d(&xs)
    }

    /// The singular coordinates of the section `coordinate[fixed_axis] = value`
    /// along the remaining axis of a planar set.
    pub fn section(&self, fixed_axis: usize, value: f64) -> SingularSet {
        let free = 1 - fixed_axis;
        let mut xs: Vec<f64> = self.lines.iter().filter(|l| l.axis == free).map(|l| l.value).collect();
        xs.extend(self.points.iter().filter(|p| p.len() == 2 && p[fixed_axis] == value).map(|p| p[free]));
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        SingularSet::points_1d(&xs)
    }

    fn anchors<const D: usize>(&self) -> Vec<Anchor<D>> {
        let mut out = Vec::new();
        for p in &self.points {
            if p.len() == D {
                let mut q = [0.0; D];
                q.copy_from_slice(p);
                out.push(Anchor::Point(q));
            }
        }
        for l in &self.lines {
            if l.axis < D {
                out.push(Anchor::Hyperplane { axis: l.axis, value: l.value });
            }
        }
        out
    }
}

/// A location the partition generator offers as a tag before the strategy
/// tags, when it meets the cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Anchor<const D: usize> {
    Point(Point<D>),
    Hyperplane { axis: usize, value: f64 },
}

impl<const D: usize> Anchor<D> {
    /// The anchor tag for `cell`, if the anchor meets it.
    pub fn tag_in(&self, cell: &Interval<D>) -> Option<Point<D>> {
        match *self {
            Anchor::Point(p) => cell.contains_point(&p).then_some(p),
            Anchor::Hyperplane { axis, value } => {
                if cell.lo()[axis] <= value && value <= cell.hi()[axis] {
                    let mut c = cell.center();
                    c[axis] = value;
                    Some(c)
                } else {
                    None
                }
            }
        }
    }
}

/// Radius law `r(d) = min(cap, min_j c_j d^{e_j})` away from the singular set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grading {
    pub terms: Vec<(f64, f64)>,
    pub cap: f64,
}

impl Grading {
    pub fn radius(&self, d: f64) -> f64 {
        let r = self.terms.iter().fold(self.cap, |r, &(c, e)| r.min(c * d.powf(e)));
        r.max(f64::MIN_POSITIVE)
    }

    fn validate(&self) -> Result<(), GaugeError> {
        let ok = self.cap > 0.0
            && self.cap.is_finite()
            && self.terms.iter().all(|&(c, e)| c > 0.0 && c.is_finite() && e >= 0.0 && e.is_finite());
        if ok {
            Ok(())
        } else {
            Err(GaugeError::InvalidParameter(format!("bad grading {self:?}")))
        }
    }
}

/// Per-tag section partitions, looked up by the outer tag `t1`.
#[derive(Clone)]
pub struct SectionFamily {
    inner: Arc<FamilyInner>,
}

enum FamilyInner {
    /// Keyed by the exact bits of `t1`; tags that are not listed fall back to
    /// the default gauge.
    Table(HashMap<u64, Arc<TaggedPartition<1>>>),
    Generator {
        make: Box<dyn Fn(f64) -> Result<TaggedPartition<1>, PartitionError> + Send + Sync>,
        cache: Mutex<HashMap<u64, Arc<TaggedPartition<1>>>>,
    },
}

impl SectionFamily {
    pub fn from_pairs(pairs: Vec<(f64, TaggedPartition<1>)>) -> Result<Self, GaugeError> {
        let mut table = HashMap::new();
        for (t1, p) in pairs {
            if p.items().is_empty() {
                return Err(GaugeError::EmptyFamily { t1 });
            }
            table.insert(t1.to_bits(), Arc::new(p));
        }
        Ok(SectionFamily { inner: Arc::new(FamilyInner::Table(table)) })
    }

    /// A family defined at every `t1`, generated on demand and memoized so
    /// repeated lookups return the same partition.
    pub fn generated(
        make: impl Fn(f64) -> Result<TaggedPartition<1>, PartitionError> + Send + Sync + 'static,
    ) -> Self {
        SectionFamily {
            inner: Arc::new(FamilyInner::Generator { make: Box::new(make), cache: Mutex::new(HashMap::new()) }),
        }
    }

    pub fn get(&self, t1: f64) -> Result<Option<Arc<TaggedPartition<1>>>, GaugeError> {
        match &*self.inner {
            FamilyInner::Table(t) => Ok(t.get(&t1.to_bits()).cloned()),
            FamilyInner::Generator { make, cache } => {
                if let Some(p) = cache.lock().expect("family cache poisoned").get(&t1.to_bits()) {
                    return Ok(Some(p.clone()));
                }
                let p = make(t1).map_err(|e| GaugeError::Family { t1, source: Arc::new(e) })?;
                if p.items().is_empty() {
                    return Err(GaugeError::EmptyFamily { t1 });
                }
                let p = Arc::new(p);
                let mut c = cache.lock().expect("family cache poisoned");
                Ok(Some(c.entry(t1.to_bits()).or_insert(p).clone()))
            }
        }
    }
}

type PointFn<const D: usize> = Arc<dyn Fn(&Point<D>) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Form<const D: usize> {
    Constant(f64),
    Min(Gauge<D>, Gauge<D>),
    Scaled(Gauge<D>, f64),
    LevelSet { weight: PointFn<D>, seq: GaugeSeq<D>, fallback: f64 },
    NormLevel { f: Arc<dyn Integrand<D>>, norm: Norm, seq: GaugeSeq<D> },
    Section { parent: Gauge<2>, fixed_axis: usize, value: f64 },
    TagMin { family: SectionFamily, parent: Gauge<2>, default: Gauge<1> },
    Singularity { points: Vec<Point<D>>, base: f64, decay: f64 },
    Graded { anchors: Vec<Anchor<D>>, grading: Grading, at_set: f64 },
    Custom(PointFn<D>),
}

/// Name of the outermost form, for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeKind {
    Constant,
    Min,
    Scaled,
    LevelSet,
    NormLevel,
    Section,
    TagMin,
    Singularity,
    Graded,
    Custom,
}

/// A gauge on `domain`. Cheap to clone.
#[derive(Clone)]
pub struct Gauge<const D: usize> {
    domain: Interval<D>,
    form: Arc<Form<D>>,
}

impl<const D: usize> fmt::Debug for Gauge<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Gauge").field("domain", &self.domain).field("kind", &self.kind()).finish()
    }
}

/// Floor of the isotropic singularity gauge at a singular point, relative to
/// `base`. Twice `2^-40`, so that with the strict ball inequality the cell of
/// width `2^-40` at the singular point is fine within the default depth
/// budget.
pub const SINGULAR_FLOOR: f64 = 1.0 / (1u64 << 39) as f64;

impl<const D: usize> Gauge<D> {
    fn wrap(domain: Interval<D>, form: Form<D>) -> Self {
        Gauge { domain, form: Arc::new(form) }
    }

    pub fn constant(domain: Interval<D>, r: f64) -> Result<Self, GaugeError> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(GaugeError::InvalidParameter(format!("constant gauge needs r > 0, got {r}")));
        }
        Ok(Self::wrap(domain, Form::Constant(r)))
    }

    /// Arbitrary positive function. Positivity is checked on evaluation.
    pub fn from_fn(domain: Interval<D>, f: impl Fn(&Point<D>) -> f64 + Send + Sync + 'static) -> Self {
        Self::wrap(domain, Form::Custom(Arc::new(f)))
    }

    /// `factor * δ`, e.g. to halve every cell of the generated partition.
    pub fn scaled(&self, factor: f64) -> Result<Self, GaugeError> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(GaugeError::InvalidParameter(format!("scale factor {factor}")));
        }
        Ok(Self::wrap(self.domain, Form::Scaled(self.clone(), factor)))
    }

    pub fn domain(&self) -> &Interval<D> {
        &self.domain
    }

    /// The radius of a constant gauge.
    pub fn constant_radius(&self) -> Option<f64> {
        match &*self.form {
            Form::Constant(r) => Some(*r),
            _ => None,
        }
    }

    pub fn kind(&self) -> GaugeKind {
        match &*self.form {
            Form::Constant(_) => GaugeKind::Constant,
            Form::Min(..) => GaugeKind::Min,
            Form::Scaled(..) => GaugeKind::Scaled,
            Form::LevelSet { .. } => GaugeKind::LevelSet,
            Form::NormLevel { .. } => GaugeKind::NormLevel,
            Form::Section { .. } => GaugeKind::Section,
            Form::TagMin { .. } => GaugeKind::TagMin,
            Form::Singularity { .. } => GaugeKind::Singularity,
            Form::Graded { .. } => GaugeKind::Graded,
            Form::Custom(_) => GaugeKind::Custom,
        }
    }

    /// `δ(t)`. Fails outside the domain or when the value is not strictly
    /// positive.
    pub fn eval(&self, t: &Point<D>) -> Result<f64, GaugeError> {
        if !self.domain.contains_point(t) {
            return Err(GaugeError::OutsideDomain { at: t.to_vec() });
        }
        let v = self.raw(t)?;
        check_positive(t, v)
    }

    /// Per-axis radii, each at most [`Gauge::eval`].
    pub fn eval_axes(&self, t: &Point<D>) -> Result<[f64; D], GaugeError> {
        if !self.domain.contains_point(t) {
            return Err(GaugeError::OutsideDomain { at: t.to_vec() });
        }
        let r = self.raw_axes(t)?;
        for &v in &r {
            check_positive(t, v)?;
        }
        Ok(r)
    }

    fn raw(&self, t: &Point<D>) -> Result<f64, GaugeError> {
        Ok(match &*self.form {
            Form::Constant(r) => *r,
            Form::Min(a, b) => a.raw(t)?.min(b.raw(t)?),
            Form::Scaled(g, s) => g.raw(t)? * s,
            Form::LevelSet { weight, seq, fallback } => {
                let w = weight(t);
                match level_set_branch(w) {
                    None => return Err(GaugeError::NegativeWeight { at: t.to_vec(), w }),
                    Some(LevelBranch::Fallback) => *fallback,
                    Some(LevelBranch::Level(n)) => seq.eval(n, t),
                }
            }
            Form::NormLevel { f, norm, seq } => {
                let mut out = vec![0.0; f.codomain_dim()];
                f.eval(t, &mut out)?;
                let v = norm.of(&out);
                if !v.is_finite() {
                    return Err(EvalError::NonFinite { at: t.to_vec() }.into());
                }
                seq.eval(v.floor() as u64 + 1, t)
            }
            Form::Section { parent, fixed_axis, value } => parent.eval(&lift(t[0], *fixed_axis, *value))?,
            Form::TagMin { family, parent, default } => match family.get(t[0])? {
                Some(p) => {
                    let mut m = f64::INFINITY;
                    for item in p.items() {
                        m = m.min(parent.eval(&[t[0], item.tag[0]])?);
                    }
                    m
                }
                None => default.eval(&[t[0]])?,
            },
            Form::Singularity { points, base, decay } => {
                let d = points.iter().map(|p| dist_max(t, p)).fold(f64::INFINITY, f64::min);
                let floor = base * SINGULAR_FLOOR;
                if d == 0.0 {
                    floor
                } else {
                    base * (decay * d).min(1.0)
                }
            }
            Form::Graded { .. } => self.raw_axes(t)?.iter().fold(0.0, |m: f64, &r| m.max(r)),
            Form::Custom(f) => f(t),
        })
    }

    fn raw_axes(&self, t: &Point<D>) -> Result<[f64; D], GaugeError> {
        Ok(match &*self.form {
            Form::Min(a, b) => {
                let (ra, rb) = (a.raw_axes(t)?, b.raw_axes(t)?);
                let mut r = [0.0; D];
                for i in 0..D {
                    r[i] = ra[i].min(rb[i]);
                }
                r
            }
            Form::Scaled(g, s) => g.raw_axes(t)?.map(|r| r * s),
            Form::Graded { anchors, grading, at_set } => {
                if anchors.is_empty() {
                    return Ok([grading.cap; D]);
                }
                let mut r = [f64::INFINITY; D];
                for a in anchors {
                    match *a {
                        Anchor::Point(p) => {
                            let d = dist_max(t, &p);
                            let rr = if d == 0.0 { *at_set } else { grading.radius(d) };
                            for ri in r.iter_mut() {
                                *ri = ri.min(rr);
                            }
                        }
                        Anchor::Hyperplane { axis, value } => {
                            let d = (t[axis] - value).abs();
                            let rr = if d == 0.0 { *at_set } else { grading.radius(d) };
                            for (i, ri) in r.iter_mut().enumerate() {
                                *ri = ri.min(if i == axis { rr } else { grading.cap });
                            }
                        }
                    }
                }
                r
            }
            _ => [self.raw(t)?; D],
        })
    }

    /// Anchors contributed by singular forms anywhere in the composition.
    pub fn anchors(&self) -> Vec<Anchor<D>> {
        let mut out = Vec::new();
        self.collect_anchors(&mut out);
        out
    }

    fn collect_anchors(&self, out: &mut Vec<Anchor<D>>) {
        match &*self.form {
            Form::Min(a, b) => {
                a.collect_anchors(out);
                b.collect_anchors(out);
            }
            Form::Scaled(g, _) => g.collect_anchors(out),
            Form::Singularity { points, .. } => out.extend(points.iter().map(|p| Anchor::Point(*p))),
            Form::Graded { anchors, .. } => out.extend(anchors.iter().copied()),
            // both forms only exist for D = 1
            Form::Section { parent, fixed_axis, value } => {
                for a in parent.anchors() {
                    match a {
                        Anchor::Point(p) if p[*fixed_axis] == *value => out.push(Anchor::Point([p[1 - fixed_axis]; D])),
                        Anchor::Hyperplane { axis, value: v } if axis != *fixed_axis => {
                            out.push(Anchor::Point([v; D]))
                        }
                        _ => {}
                    }
                }
            }
            Form::TagMin { parent, .. } => {
                for a in parent.anchors() {
                    match a {
                        Anchor::Point(p) => out.push(Anchor::Point([p[0]; D])),
                        Anchor::Hyperplane { axis: 0, value } => out.push(Anchor::Point([value; D])),
                        Anchor::Hyperplane { .. } => {}
                    }
                }
            }
            _ => {}
        }
    }
}

fn check_positive<const D: usize>(t: &Point<D>, v: f64) -> Result<f64, GaugeError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(GaugeError::NonPositive { at: t.to_vec(), value: v })
    }
}

fn lift(free: f64, fixed_axis: usize, value: f64) -> Point<2> {
    if fixed_axis == 0 {
        [value, free]
    } else {
        [free, value]
    }
}

/// Gauge from a weight `w >= 0` and a gauge sequence: `δ(t) = δ_n(t)` on
/// `{1/(n+1) <= w < 1/n}` (with `{w >= 1}` as level 0) and `1` where `w = 0`.
pub fn level_set_gauge<const D: usize>(
    domain: Interval<D>,
    weight: impl Fn(&Point<D>) -> f64 + Send + Sync + 'static,
    seq: GaugeSeq<D>,
) -> Gauge<D> {
    Gauge::wrap(domain, Form::LevelSet { weight: Arc::new(weight), seq, fallback: 1.0 })
}

/// `δ(t) = δ_n(t)` with `n = floor(‖f(t)‖) + 1`.
pub fn norm_level_gauge<const D: usize>(
    domain: Interval<D>,
    f: Arc<dyn Integrand<D>>,
    norm: Norm,
    seq: GaugeSeq<D>,
) -> Gauge<D> {
    Gauge::wrap(domain, Form::NormLevel { f, norm, seq })
}

pub fn pointwise_min<const D: usize>(a: &Gauge<D>, b: &Gauge<D>) -> Result<Gauge<D>, GaugeError> {
    if a.domain != b.domain {
        return Err(GaugeError::DomainMismatch);
    }
    Ok(Gauge::wrap(a.domain, Form::Min(a.clone(), b.clone())))
}

/// `t2 -> Δ(t1, t2)` on the second factor.
pub fn section_gauge(delta: &Gauge<2>, t1: f64) -> Result<Gauge<1>, GaugeError> {
    section_gauge_at(delta, 0, t1)
}

/// Section of a planar gauge with coordinate `fixed_axis` held at `value`.
pub fn section_gauge_at(delta: &Gauge<2>, fixed_axis: usize, value: f64) -> Result<Gauge<1>, GaugeError> {
    if fixed_axis > 1 {
        return Err(GaugeError::InvalidParameter(format!("axis {fixed_axis}")));
    }
    let fixed_side = delta.domain.side(fixed_axis);
    if !fixed_side.contains_point(&[value]) {
        return Err(GaugeError::OutsideDomain { at: vec![value] });
    }
    let domain = delta.domain.side(1 - fixed_axis);
    Ok(Gauge::wrap(domain, Form::Section { parent: delta.clone(), fixed_axis, value }))
}

/// `δ1(t1) = min over tags t2 of family(t1) of Δ(t1, t2)`, and `default(t1)`
/// where the family has no partition for `t1`.
pub fn tag_min_gauge(family: SectionFamily, delta: &Gauge<2>, default: &Gauge<1>) -> Result<Gauge<1>, GaugeError> {
    if default.domain != delta.domain.side(0) {
        return Err(GaugeError::DomainMismatch);
    }
    Ok(Gauge::wrap(
        default.domain,
        Form::TagMin { family, parent: delta.clone(), default: default.clone() },
    ))
}

/// `δ(t) = base * min(1, decay * dist(t, S))` off `S`, and
/// `base * SINGULAR_FLOOR` on `S`.
pub fn singularity_gauge<const D: usize>(
    domain: Interval<D>,
    points: &[Point<D>],
    base: f64,
    decay: f64,
) -> Result<Gauge<D>, GaugeError> {
    if !(base > 0.0 && base.is_finite()) || !(decay > 0.0 && decay <= 1.0) {
        return Err(GaugeError::InvalidParameter(format!("base={base}, decay={decay}")));
    }
    if points.is_empty() {
        return Err(GaugeError::InvalidParameter("empty singular set".into()));
    }
    Ok(Gauge::wrap(domain, Form::Singularity { points: points.to_vec(), base, decay }))
}

/// Anisotropic graded gauge around a singular set. Away from the set the
/// radius follows `grading` in the distance to each anchor; for a hyperplane
/// anchor only the orthogonal axis is graded and the others get `cap`. On the
/// set itself the radius is `at_set`, not capped, so the anchored cell can be
/// larger than its neighbours.
pub fn graded_gauge<const D: usize>(
    domain: Interval<D>,
    set: &SingularSet,
    grading: Grading,
    at_set: f64,
) -> Result<Gauge<D>, GaugeError> {
    grading.validate()?;
    if !(at_set > 0.0 && at_set.is_finite()) {
        return Err(GaugeError::InvalidParameter(format!("at_set={at_set}")));
    }
    Ok(Gauge::wrap(domain, Form::Graded { anchors: set.anchors(), grading, at_set }))
}
