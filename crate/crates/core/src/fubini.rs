//! Sections, the truncation `f0 = f·1_{[a,b]∖Z}`, iterated integrals in both
//! orders, and their comparison with the double integral.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::scheme_for;
use crate::gauges::SingularSet;
use crate::geometry::{Interval, Point};
use crate::integrator::{
    integrate, GradedProfile, IntegralResult, IntegrateError, IntegrateOptions, PartitionCache, Scheme,
    DEFAULT_CACHE_ITEMS, DEFAULT_MAX_DEPTH,
};
use crate::nullset::NullSet;
use crate::partitions::{Discipline, TagStrategy};
use crate::value::{EvalError, Integrand, Norm};

#[derive(Debug, Error)]
pub enum FubiniError {
    #[error("coordinate {value} outside [{lo}, {hi}]")]
    OutsideDomain { value: f64, lo: f64, hi: f64 },
    #[error("tolerances must be positive and finite")]
    InvalidTolerance,
    #[error("{stage}: {source}")]
    Integrate {
        stage: &'static str,
        #[source]
        source: IntegrateError,
    },
}

/// Which variable the inner integral runs over last: `Xy` integrates over
/// `y` first and then over `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Order {
    Xy,
    Yx,
}

impl Order {
    /// The axis held fixed by the inner integral.
    fn fixed_axis(self) -> usize {
        match self {
            Order::Xy => 0,
            Order::Yx => 1,
        }
    }
}

/// `s -> f(t1, s)` or `s -> f(s, t2)`.
pub struct Section {
    f: Arc<dyn Integrand<2>>,
    fixed_axis: usize,
    value: f64,
}

impl Section {
    fn new(f: Arc<dyn Integrand<2>>, domain: &Interval<2>, fixed_axis: usize, value: f64) -> Result<Self, FubiniError> {
        let (lo, hi) = (domain.lo()[fixed_axis], domain.hi()[fixed_axis]);
        if !(lo <= value && value <= hi) {
            return Err(FubiniError::OutsideDomain { value, lo, hi });
        }
        Ok(Section { f, fixed_axis, value })
    }

    fn point(&self, s: f64) -> Point<2> {
        if self.fixed_axis == 0 {
            [self.value, s]
        } else {
            [s, self.value]
        }
    }
}

impl Integrand<1> for Section {
    fn codomain_dim(&self) -> usize {
        self.f.codomain_dim()
    }

    fn eval(&self, t: &Point<1>, out: &mut [f64]) -> Result<(), EvalError> {
        self.f.eval(&self.point(t[0]), out)
    }
}

/// `f_{t1}` on the second factor of `domain`.
pub fn section_x(f: Arc<dyn Integrand<2>>, domain: &Interval<2>, t1: f64) -> Result<Section, FubiniError> {
    Section::new(f, domain, 0, t1)
}

/// `f_{t2}` on the first factor of `domain`.
pub fn section_y(f: Arc<dyn Integrand<2>>, domain: &Interval<2>, t2: f64) -> Result<Section, FubiniError> {
    Section::new(f, domain, 1, t2)
}

/// `f` with the value set to zero on `(Z1 x R) ∪ (R x Z2)`.
pub struct Truncated {
    f: Arc<dyn Integrand<2>>,
    z1: NullSet,
    z2: NullSet,
}

impl Truncated {
    /// The exceptional set as a planar null set.
    pub fn exceptional_set(&self) -> NullSet {
        NullSet::cylinders(self.z1.clone(), self.z2.clone())
    }
}

impl Integrand<2> for Truncated {
    fn codomain_dim(&self) -> usize {
        self.f.codomain_dim()
    }

    fn eval(&self, t: &Point<2>, out: &mut [f64]) -> Result<(), EvalError> {
        if self.z1.contains(&t[..1]) || self.z2.contains(&t[1..]) {
            out.fill(0.0);
            return Ok(());
        }
        self.f.eval(t, out)
    }
}

pub fn truncate_f0(f: Arc<dyn Integrand<2>>, z1: NullSet, z2: NullSet) -> Truncated {
    Truncated { f, z1, z2 }
}

/// Settings shared by the inner and outer integrations.
#[derive(Clone)]
pub struct NestedSettings {
    pub discipline: Discipline,
    pub tags: TagStrategy,
    pub norm: Norm,
    pub max_depth: usize,
    /// Singular set of the planar integrand; sections and projections of it
    /// select the one-dimensional schemes.
    pub singular: SingularSet,
    pub profile: Option<GradedProfile>,
}

impl NestedSettings {
    pub fn new(discipline: Discipline) -> Self {
        NestedSettings {
            discipline,
            tags: TagStrategy::Center,
            norm: Norm::Euclid,
            max_depth: DEFAULT_MAX_DEPTH,
            singular: SingularSet::default(),
            profile: None,
        }
    }

    fn options<const D: usize>(&self) -> IntegrateOptions<D> {
        IntegrateOptions { tags: self.tags.clone(), max_depth: self.max_depth, norm: self.norm, ..Default::default() }
    }
}

/// `t -> ∫ f_t`, the inner integral of one order, memoized on the exact
/// bits of `t`.
pub struct InnerIntegral {
    f: Arc<dyn Integrand<2>>,
    domain: Interval<2>,
    order: Order,
    tol: f64,
    settings: NestedSettings,
    memo: Mutex<HashMap<u64, Vec<f64>>>,
    computed: AtomicU64,
    /// Sections with the same singular coordinates share their partitions.
    partitions: Mutex<HashMap<Vec<u64>, Arc<PartitionCache<1>>>>,
}

impl InnerIntegral {
    pub fn new(
        f: Arc<dyn Integrand<2>>,
        domain: Interval<2>,
        order: Order,
        tol: f64,
        settings: NestedSettings,
    ) -> Result<Self, FubiniError> {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(FubiniError::InvalidTolerance);
        }
        Ok(InnerIntegral {
            f,
            domain,
            order,
            tol,
            settings,
            memo: Mutex::new(HashMap::new()),
            computed: AtomicU64::new(0),
            partitions: Mutex::new(HashMap::new()),
        })
    }

    /// Number of distinct points at which a section was integrated.
    pub fn evaluations(&self) -> u64 {
        self.computed.load(Ordering::Relaxed)
    }

    /// The full inner integration at `t`.
    pub fn section_result(&self, t: f64) -> Result<IntegralResult, FubiniError> {
        let fixed = self.order.fixed_axis();
        let section = Section::new(self.f.clone(), &self.domain, fixed, t)?;
        let side = self.domain.side(1 - fixed);
        let singular = self.settings.singular.section(fixed, t);
        let scheme = scheme_for(side, &singular, self.settings.profile.as_ref());
        let key: Vec<u64> = singular.points.iter().flatten().map(|x| x.to_bits()).collect();
        let cache = self
            .partitions
            .lock()
            .expect("partition caches poisoned")
            .entry(key)
            .or_insert_with(|| Arc::new(PartitionCache::new(DEFAULT_CACHE_ITEMS)))
            .clone();
        let opts = IntegrateOptions { cache: Some(cache), ..self.settings.options() };
        integrate(&section, &side, self.settings.discipline, &scheme, self.tol, &opts)
            .map_err(|source| FubiniError::Integrate { stage: "inner", source })
    }
}

impl Integrand<1> for InnerIntegral {
    fn codomain_dim(&self) -> usize {
        self.f.codomain_dim()
    }

    fn eval(&self, t: &Point<1>, out: &mut [f64]) -> Result<(), EvalError> {
        let key = t[0].to_bits();
        if let Some(v) = self.memo.lock().expect("memo poisoned").get(&key) {
            out.copy_from_slice(v);
            return Ok(());
        }
        let r = self.section_result(t[0]).map_err(|e| EvalError::Failed { at: t.to_vec(), reason: e.to_string() })?;
        if !r.converged {
            return Err(EvalError::Failed {
                at: t.to_vec(),
                reason: format!("inner integral did not settle ({:?} at step {})", r.stop, r.depth),
            });
        }
        out.copy_from_slice(&r.value.0);
        let mut memo = self.memo.lock().expect("memo poisoned");
        if memo.insert(key, r.value.0).is_none() {
            self.computed.fetch_add(1, Ordering::Relaxed);
        }
        Ok(())
    }
}

pub fn inner_integral(
    f: Arc<dyn Integrand<2>>,
    domain: Interval<2>,
    order: Order,
    tol: f64,
    settings: NestedSettings,
) -> Result<InnerIntegral, FubiniError> {
    InnerIntegral::new(f, domain, order, tol, settings)
}

#[derive(Clone)]
pub struct FubiniOptions {
    pub settings: NestedSettings,
    pub tol_outer: f64,
    pub tol_inner: f64,
}

impl FubiniOptions {
    /// Inner tolerance a tenth of the outer one.
    pub fn new(discipline: Discipline, tol_outer: f64) -> Self {
        FubiniOptions { settings: NestedSettings::new(discipline), tol_outer, tol_inner: tol_outer / 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FubiniReport {
    pub double: IntegralResult,
    pub iterated_xy: IntegralResult,
    pub iterated_yx: IntegralResult,
    pub gap_xy: f64,
    pub gap_yx: f64,
    /// `10·(tol_outer + tol_inner·(b1 - a1))`.
    pub bound_xy: f64,
    /// `10·(tol_outer + tol_inner·(b2 - a2))`.
    pub bound_yx: f64,
    pub within_bound: bool,
    pub truncation_used: NullSet,
    pub tol_outer: f64,
    pub tol_inner: f64,
    pub inner_evaluations_xy: u64,
    pub inner_evaluations_yx: u64,
}

impl FubiniReport {
    pub fn table(&self) -> String {
        let mut s = String::new();
        let row = |s: &mut String, name: &str, r: &IntegralResult, gap: Option<(f64, f64)>| {
            let gap = gap.map_or_else(String::new, |(g, b)| format!("{g:.3e} / {b:.3e}"));
            let _ = writeln!(
                s,
                "{name:<12} {:<28} {:>6} {:>10} {:<9} {gap}",
                r.value.to_string(),
                r.depth,
                r.cells,
                if r.converged { "yes" } else { "no" }
            );
        };
        let _ = writeln!(s, "{:<12} {:<28} {:>6} {:>10} {:<9} gap / bound", "", "value", "depth", "cells", "settled");
        row(&mut s, "double", &self.double, None);
        row(&mut s, "iterated xy", &self.iterated_xy, Some((self.gap_xy, self.bound_xy)));
        row(&mut s, "iterated yx", &self.iterated_yx, Some((self.gap_yx, self.bound_yx)));
        let _ = writeln!(s, "tolerances: outer {:e}, inner {:e}", self.tol_outer, self.tol_inner);
        let _ = writeln!(s, "within bound: {}", self.within_bound);
        s
    }
}

/// Integrate `f` over `domain`, then `f0 = truncate_f0(f, z1, z2)` in both
/// iterated orders, and compare.
pub fn fubini_compare(
    f: Arc<dyn Integrand<2>>,
    domain: &Interval<2>,
    z1: &NullSet,
    z2: &NullSet,
    opts: &FubiniOptions,
) -> Result<FubiniReport, FubiniError> {
    let ok = |t: f64| t > 0.0 && t.is_finite();
    if !ok(opts.tol_outer) || !ok(opts.tol_inner) {
        return Err(FubiniError::InvalidTolerance);
    }
    let s = &opts.settings;
    let scheme: Scheme<2> = scheme_for(*domain, &s.singular, s.profile.as_ref());
    let double = integrate(f.as_ref(), domain, s.discipline, &scheme, opts.tol_outer, &s.options())
        .map_err(|source| FubiniError::Integrate { stage: "double", source })?;

    let f0: Arc<dyn Integrand<2>> = Arc::new(truncate_f0(f, z1.clone(), z2.clone()));
    let iterated = |order: Order| -> Result<(IntegralResult, u64), FubiniError> {
        let inner = InnerIntegral::new(f0.clone(), *domain, order, opts.tol_inner, s.clone())?;
        let outer_axis = order.fixed_axis();
        let side = domain.side(outer_axis);
        let outer_scheme = scheme_for(side, &s.singular.project(outer_axis), s.profile.as_ref());
        let stage = match order {
            Order::Xy => "iterated xy",
            Order::Yx => "iterated yx",
        };
        let r = integrate(&inner, &side, s.discipline, &outer_scheme, opts.tol_outer, &s.options())
            .map_err(|source| FubiniError::Integrate { stage, source })?;
        Ok((r, inner.evaluations()))
    };
    let (iterated_xy, inner_evaluations_xy) = iterated(Order::Xy)?;
    let (iterated_yx, inner_evaluations_yx) = iterated(Order::Yx)?;

    let gap_xy = iterated_xy.value.distance(&double.value, s.norm);
    let gap_yx = iterated_yx.value.distance(&double.value, s.norm);
    let bound_xy = 10.0 * (opts.tol_outer + opts.tol_inner * domain.width(0));
    let bound_yx = 10.0 * (opts.tol_outer + opts.tol_inner * domain.width(1));
    Ok(FubiniReport {
        within_bound: gap_xy <= bound_xy && gap_yx <= bound_yx,
        double,
        iterated_xy,
        iterated_yx,
        gap_xy,
        gap_yx,
        bound_xy,
        bound_yx,
        truncation_used: NullSet::cylinders(z1.clone(), z2.clone()),
        tol_outer: opts.tol_outer,
        tol_inner: opts.tol_inner,
        inner_evaluations_xy,
        inner_evaluations_yx,
    })
}

/// Integrate the indicator of `z` over `domain` with the halving scheme.
pub fn nullset_integral_check<const D: usize>(
    z: &NullSet,
    domain: &Interval<D>,
    discipline: Discipline,
    strategy: &TagStrategy,
    tol: f64,
    max_depth: usize,
) -> Result<IntegralResult, IntegrateError> {
    let set = z.clone();
    let indicator = crate::value::scalar_fn(move |t: &Point<D>| set.indicator(t));
    let opts = IntegrateOptions { tags: strategy.clone(), max_depth, ..Default::default() };
    integrate(indicator.as_ref(), domain, discipline, &Scheme::halving(*domain), tol, &opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::scalar_fn;

    fn unit() -> Interval<2> {
        Interval::<2>::unit()
    }

    #[test]
    fn sections_pass_through() {
        let f = scalar_fn(|t: &[f64; 2]| t[0] * t[1]);
        let s = section_y(f.clone(), &unit(), 0.5).unwrap();
        assert_eq!(s.eval_vec(&[0.4]).unwrap().0, vec![0.2]);
        let s = section_x(f.clone(), &unit(), 0.0).unwrap();
        assert_eq!(s.eval_vec(&[0.7]).unwrap().0, vec![0.0]);
        assert!(matches!(section_x(f, &unit(), 1.5), Err(FubiniError::OutsideDomain { .. })));
    }

    #[test]
    fn truncation_zeroes_lines_only() {
        let f = scalar_fn(|_: &[f64; 2]| 7.0);
        let f0 = truncate_f0(f, NullSet::points_1d(&[0.5]), NullSet::Empty);
        assert_eq!(f0.eval_vec(&[0.5, 0.3]).unwrap().0, vec![0.0]);
        assert_eq!(f0.eval_vec(&[0.25, 0.5]).unwrap().0, vec![7.0]);
        assert!(f0.exceptional_set().contains(&[0.5, 0.9]));
    }

    #[test]
    fn inner_integral_of_sum_and_memo() {
        let f = scalar_fn(|t: &[f64; 2]| t[0] + t[1]);
        let g = inner_integral(f, unit(), Order::Xy, 1e-10, NestedSettings::new(Discipline::McShane)).unwrap();
        let v = g.eval_vec(&[0.3]).unwrap().0[0];
        assert!((v - 0.8).abs() < 1e-12);
        g.eval_vec(&[0.3]).unwrap();
        assert_eq!(g.evaluations(), 1);
    }

    #[test]
    fn product_compare() {
        let f = scalar_fn(|t: &[f64; 2]| t[0] * t[1]);
        let r = fubini_compare(f, &unit(), &NullSet::Empty, &NullSet::Empty, &FubiniOptions::new(Discipline::McShane, 1e-6))
            .unwrap();
        assert!(r.within_bound, "{}", r.table());
        assert!((r.double.value.0[0] - 0.25).abs() < 1e-5);
    }

    #[test]
    fn zero_gives_zero_everywhere() {
        let f = scalar_fn(|_: &[f64; 2]| 0.0);
        let r = fubini_compare(f, &unit(), &NullSet::Empty, &NullSet::Empty, &FubiniOptions::new(Discipline::Hk, 1e-6))
            .unwrap();
        assert_eq!((r.gap_xy, r.gap_yx), (0.0, 0.0));
        assert_eq!(r.iterated_xy.value.0, vec![0.0]);
    }

    #[test]
    fn indicator_of_line_with_offset_tags_vanishes() {
        let z = NullSet::VerticalLines { xs: vec![0.5] };
        let r = nullset_integral_check(&z, &unit(), Discipline::McShane, &TagStrategy::NullAvoiding(z.clone()), 1e-6, 6)
            .unwrap();
        assert!(r.trace.iter().all(|row| row.estimate.0 == vec![0.0]));
    }
}
