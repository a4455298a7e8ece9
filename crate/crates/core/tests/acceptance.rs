//! Acceptance criteria, one PASS/FAIL line each. Run with
//! `cargo test --test acceptance`; the process exits non-zero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use gaugeint::corpus::{lookup, registry, Body, Class, CorpusFunction, GRID_X, GRID_Y};
use gaugeint::fubini::{fubini_compare, nullset_integral_check, truncate_f0, FubiniOptions};
use gaugeint::gauges::{
    level_set_gauge, section_gauge, singularity_gauge, tag_min_gauge, Gauge, GaugeSeq, SectionFamily,
};
use gaugeint::geometry::{Interval, Point};
use gaugeint::integrator::{integrate, sstar_double_sum, streamed_sums, IntegrateOptions, Scheme};
use gaugeint::nullset::{NullSet, RationalModel};
use gaugeint::partitions::{
    cousin_partition, is_delta_fine, product_partition, second_coord_refinement, validate, Corner, CousinOptions,
    Discipline, TagStrategy, TaggedPartition,
};
use gaugeint::value::{Integrand, Norm};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

// Criterion 1
const C1_TOL_OUTER: f64 = 1e-6;
const C1_TOL_INNER: f64 = 1e-7;
const C1_SECONDS: f64 = 10.0;
// Criterion 2
const C2_TOL: f64 = 1e-3;
const C2_GAP: f64 = 1e-3;
const C2_SECONDS: f64 = 60.0;
// Criterion 3
const C3_ERROR: f64 = 1e-4;
const C3_GROWTH: f64 = 1.2;
const C3_FIRST: usize = 8;
const C3_LAST: usize = 20;
const C3_STRIDE: usize = 4;
// Criterion 4
const C4_DEPTH_2D: usize = 10;
const C4_DEPTH_1D: usize = 20;
const C4_EPSILONS: [f64; 2] = [1e-2, 1e-4];
const C4_WEIGHT_X: f64 = 1.0;
const C4_WEIGHT_Y: f64 = 0.4;
// Criterion 5
const C5_TOL: f64 = 1e-6;
const C5_BOUND: f64 = 2e-6;
// Criterion 6
const C6_PAIRS: usize = 50;
const C6_RATIO: (f64, f64) = (0.3, 0.7);
const C6_HALVING_DEPTHS: [usize; 2] = [4, 5];
// Criterion 7
const C7_FIRST: usize = 2;
const C7_LAST: usize = 12;
const C7_FINAL_GAP: f64 = 1e-5;
// Criterion 8
const C8_COUSIN: usize = 10_000;
const C8_PRODUCT: usize = 1_000;
const C8_REFINE: usize = 1_000;
/// Nested partitions near a singular point need a few levels past the default
/// budget: sections at tags within 2^-40 of it resolve finer than that, and
/// the tag-min gauge inherits their radii.
const C8_NESTED_BUDGET: u32 = 60;
// Criterion 9
const C9_AGREEMENT: f64 = 1e-4;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn planar(e: &CorpusFunction) -> Option<(Arc<dyn Integrand<2>>, Interval<2>, NullSet, NullSet)> {
    match &e.body {
        Body::Two { f, domain, z1, z2, .. } => Some((f.clone(), *domain, z1.clone(), z2.clone())),
        Body::One { .. } => None,
    }
}

fn c1_fubini_mcshane() -> Outcome {
    let mut lines = Vec::new();
    for e in registry().iter().filter(|e| matches!(e.class, Class::Bochner | Class::NullPerturbed)) {
        let Some((f, dom, z1, z2)) = planar(e) else { continue };
        let mut opts = FubiniOptions::new(Discipline::McShane, C1_TOL_OUTER);
        opts.tol_inner = C1_TOL_INNER;
        opts.settings.tags = e.default_tags();
        opts.settings.singular = e.singular.clone();
        opts.settings.profile = e.profile.clone();
        let bound = 10.0 * (C1_TOL_OUTER + C1_TOL_INNER * dom.width(0));
        let start = Instant::now();
        let r = fubini_compare(f, &dom, &z1, &z2, &opts).map_err(|x| format!("{}: {x}", e.id))?;
        let secs = start.elapsed().as_secs_f64();
        ensure(r.gap_xy <= bound && r.gap_yx <= bound, || {
            format!("{}: gaps {:.2e}/{:.2e} exceed {bound:.2e}", e.id, r.gap_xy, r.gap_yx)
        })?;
        ensure(secs <= C1_SECONDS, || format!("{}: {secs:.1}s over {C1_SECONDS}s", e.id))?;
        lines.push(format!("{} {:.1e}/{:.1e} {secs:.1}s", e.id, r.gap_xy, r.gap_yx));
    }
    Ok(lines.join(", "))
}

fn c2_fubini_hk() -> Outcome {
    let e = lookup("hk2d_product").map_err(err)?;
    let (f, dom, z1, z2) = planar(e).ok_or("hk2d_product is planar")?;
    let mut opts = FubiniOptions::new(Discipline::Hk, C2_TOL);
    opts.settings.singular = e.singular.clone();
    opts.settings.profile = e.profile.clone();
    let start = Instant::now();
    let r = fubini_compare(f, &dom, &z1, &z2, &opts).map_err(err)?;
    let secs = start.elapsed().as_secs_f64();
    ensure(r.gap_xy <= C2_GAP && r.gap_yx <= C2_GAP, || {
        format!("gaps {:.2e}/{:.2e} exceed {C2_GAP:e}", r.gap_xy, r.gap_yx)
    })?;
    ensure(secs <= C2_SECONDS, || format!("{secs:.1}s over {C2_SECONDS}s"))?;
    Ok(format!("gaps {:.2e}/{:.2e}, {secs:.1}s", r.gap_xy, r.gap_yx))
}

fn c3_hk_only_1d() -> Outcome {
    let e = lookup("hk1d_cos").map_err(err)?;
    let (f, dom) = e.one().map_err(err)?;
    let scheme = e.scheme_1d().map_err(err)?;
    let r = integrate(f.as_ref(), &dom, Discipline::Hk, &scheme, e.recommended_tol, &IntegrateOptions::default())
        .map_err(err)?;
    let error = (r.value.0[0] + 1.0).abs();
    ensure(r.converged && error <= C3_ERROR, || {
        format!("value {} (converged {}), error {error:.2e}", r.value.0[0], r.converged)
    })?;
    let mut var = Vec::new();
    for k in 0..=C3_LAST + C3_STRIDE {
        let g = scheme.gauge(k).map_err(err)?;
        let s = streamed_sums(f.as_ref(), &dom, &g, Discipline::Hk, &TagStrategy::Center, None, Norm::Euclid)
            .map_err(err)?;
        var.push(s.variation);
    }
    let mut worst = f64::INFINITY;
    for k in C3_FIRST..=C3_LAST {
        let ratio = var[k + C3_STRIDE] / var[k];
        worst = worst.min(ratio);
        ensure(ratio >= C3_GROWTH, || {
            format!("variation {:.3} at step {k} to {:.3} at step {}", var[k], var[k + C3_STRIDE], k + C3_STRIDE)
        })?;
    }
    Ok(format!(
        "error {error:.2e} at step {}, smallest variation growth over {C3_STRIDE} steps {worst:.3}",
        r.depth
    ))
}

fn grid_weight(t: &Point<2>) -> f64 {
    if t[0] == GRID_X {
        C4_WEIGHT_X
    } else if t[1] == GRID_Y {
        C4_WEIGHT_Y
    } else {
        0.0
    }
}

/// Smallest denominator `q` with `x = fl(p/q)` in the rational model, with
/// dyadics ranked by level after all small denominators.
fn rational_rank(x: f64, model: &RationalModel) -> Option<u32> {
    if let Some(q) = (1..=model.max_denominator).find(|&q| ((x * q as f64).round() / q as f64) == x) {
        return Some(q as u32);
    }
    (0..=model.max_dyadic_level)
        .find(|&l| (x * f64::powi(2.0, l as i32)).fract() == 0.0)
        .map(|l| model.max_denominator as u32 + l)
}

fn c4_null_sets() -> Outcome {
    // exact zeros at every depth with null-avoiding tags
    let grid = lookup("grid_null2d").map_err(err)?;
    let (f2, dom2, _, _) = planar(grid).ok_or("grid_null2d is planar")?;
    let tags2 = TagStrategy::NullAvoiding(grid.null_set.clone());
    let halving2 = Scheme::halving(dom2);
    for k in 0..=C4_DEPTH_2D {
        let g = halving2.gauge(k).map_err(err)?;
        let s = streamed_sums(f2.as_ref(), &dom2, &g, Discipline::McShane, &tags2, None, Norm::Euclid).map_err(err)?;
        ensure(s.riemann.0[0] == 0.0, || format!("grid_null2d sum {} at depth {k}", s.riemann.0[0]))?;
    }
    let dir = lookup("dirichlet1d").map_err(err)?;
    let (f1, dom1) = dir.one().map_err(err)?;
    let tags1 = TagStrategy::NullAvoiding(dir.null_set.clone());
    let halving1 = Scheme::halving(dom1);
    for k in 0..=C4_DEPTH_1D {
        let g = halving1.gauge(k).map_err(err)?;
        let s = streamed_sums(f1.as_ref(), &dom1, &g, Discipline::McShane, &tags1, None, Norm::Euclid).map_err(err)?;
        ensure(s.riemann.0[0] == 0.0, || format!("dirichlet1d sum {} at depth {k}", s.riemann.0[0]))?;
    }
    let r2 = nullset_integral_check(&grid.null_set, &dom2, Discipline::McShane, &tags2, 1e-12, C4_DEPTH_2D)
        .map_err(err)?;
    let r1 = nullset_integral_check(&dir.null_set, &dom1, Discipline::McShane, &tags1, 1e-12, C4_DEPTH_1D)
        .map_err(err)?;
    for (id, r) in [("grid_null2d", &r2), ("dirichlet1d", &r1)] {
        ensure(r.trace.iter().all(|row| row.estimate.0[0] == 0.0), || format!("{id}: non-zero trace row"))?;
    }

    // level-set gauge; cells meeting the lines are forced to take tags on them
    let mut lines = vec![format!("zero through depth {C4_DEPTH_2D} (2D) and {C4_DEPTH_1D} (1D)")];
    for eps in C4_EPSILONS {
        // a fine partition tagged on a line lies in a strip of width 2 δ_n
        // around it, so 4 δ_n bounds the weighted sum for both lines together
        let seq = GaugeSeq::constants(move |n| eps / (4.0 * (n as f64 + 1.0) * ((n + 1) as f64).exp2()));
        let gauge = level_set_gauge(dom2, grid_weight, seq);
        let on_set = TagStrategy::OnSet(grid.null_set.clone());
        let g = streamed_sums(f2.as_ref(), &dom2, &gauge, Discipline::McShane, &on_set, None, Norm::Euclid)
            .map_err(err)?;
        let v = g.riemann.0[0];
        ensure(v > 0.0 && v <= eps, || format!("grid_null2d level-set sum {v:e} for eps {eps:e}"))?;

        let model = match &dir.null_set {
            NullSet::Rationals { model } => *model,
            other => return Err(format!("dirichlet1d null set {other:?}")),
        };
        // rank q puts at most q points at radius c/q^3
        let seq = GaugeSeq::from_fn(move |n, t: &Point<1>| {
            let c = eps / (4.0 * (n as f64 + 1.0) * ((n + 1) as f64).exp2());
            let q = rational_rank(t[0], &model).unwrap_or(1) as f64;
            c / (q * q * q)
        });
        let set = dir.null_set.clone();
        let gauge = level_set_gauge(dom1, move |t: &Point<1>| set.indicator(t), seq);
        let s = streamed_sums(f1.as_ref(), &dom1, &gauge, Discipline::McShane, &tags1, None, Norm::Euclid)
            .map_err(err)?;
        ensure(s.riemann.0[0] <= eps, || format!("dirichlet1d level-set sum {:e}", s.riemann.0[0]))?;
        lines.push(format!("eps {eps:e}: grid {v:.2e} over {} cells, dirichlet {:e}", g.cells, s.riemann.0[0]));
    }
    Ok(lines.join("; "))
}

fn c5_truncation() -> Outcome {
    let e = lookup("line_mass2d").map_err(err)?;
    let (f, dom, z1, z2) = planar(e).ok_or("line_mass2d is planar")?;
    let scheme = e.scheme_2d().map_err(err)?;
    let opts = IntegrateOptions { tags: e.default_tags(), ..Default::default() };
    let full = integrate(f.as_ref(), &dom, Discipline::McShane, &scheme, C5_TOL, &opts).map_err(err)?;
    let f0 = truncate_f0(f.clone(), z1, z2);
    let trunc = integrate(&f0, &dom, Discipline::McShane, &scheme, C5_TOL, &opts).map_err(err)?;
    let d = full.value.distance(&trunc.value, Norm::Euclid);
    ensure(full.converged && trunc.converged && d <= C5_BOUND, || {
        format!("f {} vs f0 {}, difference {d:e}", full.value, trunc.value)
    })?;
    Ok(format!("difference {d:.2e}"))
}

/// Random gauge and tag strategy. Tags stay inside their cells. Corner tags
/// are paired with constant gauges only: next to a singular point the corner
/// of a cell can sit one width away from it, where the radius is at most
/// that width, so no amount of bisection makes it fine.
fn random_pair<const D: usize>(rng: &mut ChaCha8Rng, dom: Interval<D>, null: &NullSet) -> (Gauge<D>, TagStrategy) {
    let diam = dom.diameter();
    if rng.gen_bool(0.5) {
        let g = Gauge::constant(dom, diam * rng.gen_range(-6.0f64..-1.0).exp2()).unwrap();
        let s = match rng.gen_range(0..4) {
            0 => TagStrategy::Center,
            1 => TagStrategy::Corner(Corner::Lower),
            2 => TagStrategy::Corner(Corner::Upper),
            _ => TagStrategy::NullAvoiding(null.clone()),
        };
        (g, s)
    } else {
        // singular points sit on the dyadic grid of the domain so they become
        // cell corners; a generic point needs neighbours as fine as its
        // distance to the grid lines
        let mut p = [0.0; D];
        for (i, x) in p.iter_mut().enumerate() {
            *x = dom.lo()[i] + dom.width(i) * rng.gen_range(0..=16) as f64 / 16.0;
        }
        // the floor at the point is a 2^-39 fraction of the base, so the base
        // is at least the diameter; with base * decay >= 1/2 a cell one width
        // away from the point is fine when tagged at its center
        let g = singularity_gauge(dom, &[p], diam.max(1.0), rng.gen_range(0.5..=1.0)).unwrap();
        let s = if rng.gen_bool(0.5) { TagStrategy::Center } else { TagStrategy::NullAvoiding(null.clone()) };
        (g, s)
    }
}

fn sstar_pairs<const D: usize>(
    rng: &mut ChaCha8Rng,
    f: &dyn Integrand<D>,
    dom: Interval<D>,
    lip: f64,
) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for _ in 0..C6_PAIRS {
        let make = |rng: &mut ChaCha8Rng| {
            let (g, s) = random_pair(rng, dom, &NullSet::Empty);
            cousin_partition(&dom, &g, Discipline::McShane, &s, CousinOptions::default()).map_err(err)
        };
        let p = make(rng)?;
        let q = make(rng)?;
        let sum = sstar_double_sum(f, &p, &q, Norm::Euclid).map_err(err)?;
        let bound = lip * (p.mesh() + q.mesh()) * dom.measure();
        ensure(sum <= bound, || format!("sum {sum:e} above bound {bound:e}"))?;
        if bound > 0.0 {
            worst = worst.max(sum / bound);
        }
    }
    Ok(worst)
}

fn sstar_halving<const D: usize>(f: &dyn Integrand<D>, dom: Interval<D>, lip: f64) -> Result<f64, String> {
    let scheme = Scheme::halving(dom);
    let mut normalized = Vec::new();
    for k in C6_HALVING_DEPTHS {
        let g = scheme.gauge(k).map_err(err)?;
        let part = |s: TagStrategy| cousin_partition(&dom, &g, Discipline::McShane, &s, CousinOptions::default());
        let p = part(TagStrategy::Center).map_err(err)?;
        let q = part(TagStrategy::Corner(Corner::Lower)).map_err(err)?;
        let sum = sstar_double_sum(f, &p, &q, Norm::Euclid).map_err(err)?;
        normalized.push(sum / (lip * dom.measure()));
    }
    Ok(normalized[1] / normalized[0])
}

fn c6_sstar() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut lines = Vec::new();
    for e in registry() {
        let Some(lip) = e.lipschitz_for(Norm::Euclid) else { continue };
        let (worst, ratio) = match &e.body {
            Body::One { f, domain, .. } => (
                sstar_pairs(&mut rng, f.as_ref(), *domain, lip)?,
                (lip > 0.0).then(|| sstar_halving(f.as_ref(), *domain, lip)).transpose()?,
            ),
            Body::Two { f, domain, .. } => (
                sstar_pairs(&mut rng, f.as_ref(), *domain, lip)?,
                (lip > 0.0).then(|| sstar_halving(f.as_ref(), *domain, lip)).transpose()?,
            ),
        };
        if let Some(r) = ratio {
            ensure(r >= C6_RATIO.0 && r <= C6_RATIO.1, || format!("{}: halving ratio {r:.3}", e.id))?;
        }
        lines.push(match ratio {
            Some(r) => format!("{} max {worst:.2} ratio {r:.2}", e.id),
            None => format!("{} max {worst:.2}", e.id),
        });
    }
    Ok(lines.join(", "))
}

fn strong_gaps<const D: usize>(
    f: &dyn Integrand<D>,
    dom: Interval<D>,
    big_f: &dyn gaugeint::value::IntervalFunction<D>,
) -> Result<Vec<f64>, String> {
    let scheme = Scheme::halving(dom);
    (0..=C7_LAST + 2)
        .map(|k| {
            let g = scheme.gauge(k).map_err(err)?;
            let s = streamed_sums(f, &dom, &g, Discipline::McShane, &TagStrategy::Center, Some(big_f), Norm::Euclid)
                .map_err(err)?;
            Ok(s.strong_gap.expect("requested"))
        })
        .collect()
}

fn c7_strong_gap() -> Outcome {
    let mut lines = Vec::new();
    for e in registry().iter().filter(|e| e.class == Class::Bochner) {
        let gaps = match &e.body {
            Body::One { f, domain, primitive: Some(p) } => strong_gaps(f.as_ref(), *domain, p.as_ref())?,
            Body::Two { f, domain, primitive: Some(p), .. } => strong_gaps(f.as_ref(), *domain, p.as_ref())?,
            _ => continue,
        };
        for k in C7_FIRST..=C7_LAST {
            ensure(gaps[k + 2] <= gaps[k], || {
                format!("{}: gap {:e} at depth {} above {:e} at depth {k}", e.id, gaps[k + 2], k + 2, gaps[k])
            })?;
        }
        let last = gaps[C7_LAST + 2];
        ensure(last <= C7_FINAL_GAP, || format!("{}: final gap {last:e}", e.id))?;
        lines.push(format!("{} {last:.1e}", e.id));
    }
    Ok(lines.join(", "))
}

fn random_box<const D: usize>(rng: &mut ChaCha8Rng) -> Interval<D> {
    let mut lo = [0.0; D];
    let mut hi = [0.0; D];
    for i in 0..D {
        // dyadic corners keep bisection exact
        lo[i] = rng.gen_range(-8i32..8) as f64 / 4.0;
        hi[i] = lo[i] + rng.gen_range(1i32..8) as f64 / 4.0;
    }
    Interval::from_bounds(lo, hi).unwrap()
}

fn random_discipline(rng: &mut ChaCha8Rng) -> Discipline {
    if rng.gen_bool(0.5) {
        Discipline::McShane
    } else {
        Discipline::Hk
    }
}

fn cousin_case<const D: usize>(rng: &mut ChaCha8Rng) -> Result<TaggedPartition<D>, String> {
    let dom = random_box::<D>(rng);
    let d = random_discipline(rng);
    let (g, s) = random_pair(rng, dom, &NullSet::rationals());
    let s = if d == Discipline::Hk { TagStrategy::Center } else { s };
    let p = cousin_partition(&dom, &g, d, &s, CousinOptions::default()).map_err(err)?;
    let report = validate(&p, true);
    ensure(report.is_valid(), || format!("invalid partition: {report:?}"))?;
    ensure(is_delta_fine(&p, &g).map_err(err)?, || "partition not fine".into())?;
    Ok(p)
}

fn product_case(rng: &mut ChaCha8Rng) -> Result<usize, String> {
    let dom = random_box::<2>(rng);
    let d = random_discipline(rng);
    let (delta, s) = random_pair(rng, dom, &NullSet::rationals());
    let s = if d == Discipline::Hk { TagStrategy::Center } else { s };
    let (s1, s2) = (s.clone(), s);
    let (dx, dy) = (dom.side(0), dom.side(1));
    let (sec_delta, sec_s2) = (delta.clone(), s2.clone());
    let family = SectionFamily::generated(move |t1| {
        let g = section_gauge(&sec_delta, t1).expect("t1 in the first factor");
        cousin_partition(&dy, &g, d, &sec_s2, CousinOptions { depth_budget: C8_NESTED_BUDGET })
    });
    let default = Gauge::constant(dx, dx.diameter()).map_err(err)?;
    let tag_min = tag_min_gauge(family.clone(), &delta, &default).map_err(err)?;
    let pi = cousin_partition(&dx, &tag_min, d, &s1, CousinOptions { depth_budget: C8_NESTED_BUDGET }).map_err(err)?;
    let mut families = Vec::with_capacity(pi.len());
    for it in pi.items() {
        let fam = family.get(it.tag[0]).map_err(err)?.ok_or("generated family is total")?;
        let bound = tag_min.eval(&it.tag).map_err(err)?;
        for inner in fam.items() {
            let big = delta.eval(&[it.tag[0], inner.tag[0]]).map_err(err)?;
            ensure(bound <= big, || format!("tag-min {bound:e} above section value {big:e}"))?;
        }
        families.push((*fam).clone());
    }
    let q = product_partition(&pi, &families).map_err(err)?;
    let expected: usize = families.iter().map(|f| f.len()).sum();
    ensure(q.len() == expected, || format!("{} cells, expected {expected}", q.len()))?;
    let report = validate(&q, true);
    ensure(report.is_valid(), || format!("product partition invalid: {report:?}"))?;
    ensure(is_delta_fine(&q, &delta).map_err(err)?, || "product partition not fine for the planar gauge".into())?;
    Ok(q.len())
}

fn refinement_case(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let p = cousin_case::<2>(rng)?;
    let dy = p.domain().side(1);
    let ys = second_coord_refinement(&p);
    ensure(ys.first().map(|i| i.lo()[0]) == Some(dy.lo()[0]), || "refinement misses the lower end".into())?;
    ensure(ys.last().map(|i| i.hi()[0]) == Some(dy.hi()[0]), || "refinement misses the upper end".into())?;
    for w in ys.windows(2) {
        ensure(w[0].hi()[0] == w[1].lo()[0], || "refinement has a gap or overlap".into())?;
    }
    for it in p.items() {
        let factor = it.cell.side(1);
        for j in &ys {
            let meets = j.intersect(&factor).is_some_and(|o| o.measure() > 0.0);
            ensure(!meets || factor.contains_interval(j), || format!("{j:?} straddles {factor:?}"))?;
        }
    }
    Ok(())
}

fn c8_structure() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut cells = 0usize;
    for i in 0..C8_COUSIN {
        cells += if i % 2 == 0 { cousin_case::<1>(&mut rng)?.len() } else { cousin_case::<2>(&mut rng)?.len() };
    }
    let mut product_cells = 0usize;
    for _ in 0..C8_PRODUCT {
        product_cells += product_case(&mut rng)?;
    }
    for _ in 0..C8_REFINE {
        refinement_case(&mut rng)?;
    }
    Ok(format!(
        "{C8_COUSIN} cousin partitions ({cells} cells), {C8_PRODUCT} products ({product_cells} cells), {C8_REFINE} refinements"
    ))
}

fn c9_oracle() -> Outcome {
    let fixture = common::load_fixture();
    let mut worst: (f64, &str) = (0.0, "");
    for e in registry() {
        let Some(_) = &e.exact_double else { continue };
        let oracle = fixture.get(e.id).ok_or_else(|| format!("{} missing from the oracle fixture", e.id))?;
        let opts1 = IntegrateOptions { tags: e.default_tags(), ..Default::default() };
        let opts2 = IntegrateOptions { tags: e.default_tags(), ..Default::default() };
        let r = match &e.body {
            Body::One { f, domain, .. } => {
                integrate(f.as_ref(), domain, e.discipline(), &e.scheme_1d().map_err(err)?, e.recommended_tol, &opts1)
            }
            Body::Two { f, domain, .. } => {
                integrate(f.as_ref(), domain, e.discipline(), &e.scheme_2d().map_err(err)?, e.recommended_tol, &opts2)
            }
        }
        .map_err(|x| format!("{}: {x}", e.id))?;
        let d = common::max_abs_diff(&r.value.0, &oracle.value);
        ensure(r.converged && d <= C9_AGREEMENT, || {
            format!("{}: {} vs oracle {:?} (converged {})", e.id, r.value, oracle.value, r.converged)
        })?;
        if d >= worst.0 {
            worst = (d, e.id);
        }
    }
    Ok(format!("largest difference {:.2e} ({})", worst.0, worst.1))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("Fubini equality, McShane", c1_fubini_mcshane),
        ("Fubini equality, HK", c2_fubini_hk),
        ("HK-only 1D value and divergent variation", c3_hk_only_1d),
        ("null sets", c4_null_sets),
        ("truncation invariance", c5_truncation),
        ("S* double sum bound", c6_sstar),
        ("strong gap decay", c7_strong_gap),
        ("structural invariants", c8_structure),
        ("oracle agreement", c9_oracle),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {n}: {name} [{secs:.1}s] {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {n}: {name} [{secs:.1}s] {detail}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
