//! Registry of named test integrands with their exact values and metadata.

use std::f64::consts::{FRAC_PI_4, PI};
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gauges::{AxisLine, Grading, SingularSet};
use crate::geometry::Interval;
use crate::integrator::{GradedProfile, Scheme};
use crate::nullset::NullSet;
use crate::partitions::{Discipline, TagStrategy};
use crate::value::{scalar_fn, FnIntegrand, FnIntervalFunction, Integrand, IntervalFunction, Norm, VectorValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Class {
    /// Absolutely integrable; McShane and HK agree.
    Bochner,
    /// HK integrable but not absolutely integrable.
    HkOnly,
    /// Equals a registered base entry off a declared null set.
    NullPerturbed,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("unknown corpus id {0:?}")]
    UnknownId(String),
    #[error("corpus entry {id} has dimension {actual}, expected {expected}")]
    WrongDimension { id: String, expected: usize, actual: usize },
}

pub type InnerFn = Arc<dyn Fn(f64) -> VectorValue + Send + Sync>;

pub enum Body {
    One {
        f: Arc<dyn Integrand<1>>,
        domain: Interval<1>,
        primitive: Option<Arc<dyn IntervalFunction<1>>>,
    },
    Two {
        f: Arc<dyn Integrand<2>>,
        domain: Interval<2>,
        primitive: Option<Arc<dyn IntervalFunction<2>>>,
        /// First-factor points whose sections may misbehave.
        z1: NullSet,
        /// Second-factor points whose sections may misbehave.
        z2: NullSet,
        /// `t1 -> ∫ f(t1, y) dy`.
        inner_xy: Option<InnerFn>,
        /// `t2 -> ∫ f(x, t2) dx`.
        inner_yx: Option<InnerFn>,
    },
}

pub struct CorpusFunction {
    pub id: &'static str,
    pub class: Class,
    pub notes: &'static str,
    pub codomain: usize,
    pub exact_double: Option<VectorValue>,
    pub base: Option<&'static str>,
    /// Where the entry differs from its base (null-perturbed entries) or
    /// the set it indicates.
    pub null_set: NullSet,
    pub singular: SingularSet,
    pub profile: Option<GradedProfile>,
    /// Per-component Lipschitz constants for the max norm on the domain.
    pub lipschitz: Option<Vec<f64>>,
    /// Tolerance the entry is expected to reach in reasonable time.
    pub recommended_tol: f64,
    pub body: Body,
}

impl CorpusFunction {
    pub fn dim(&self) -> usize {
        match self.body {
            Body::One { .. } => 1,
            Body::Two { .. } => 2,
        }
    }

    /// HK for HK-only entries, McShane otherwise.
    pub fn discipline(&self) -> Discipline {
        match self.class {
            Class::HkOnly => Discipline::Hk,
            _ => Discipline::McShane,
        }
    }

    /// Null-avoiding tags when the null set is dense, centers otherwise.
    /// Bisection centers never lie on the corpus lines past step 0.
    pub fn default_tags(&self) -> TagStrategy {
        if has_rationals(&self.null_set) {
            TagStrategy::NullAvoiding(self.null_set.clone())
        } else {
            TagStrategy::Center
        }
    }

    pub fn lipschitz_for(&self, norm: Norm) -> Option<f64> {
        self.lipschitz.as_ref().map(|l| norm.combine_lipschitz(l))
    }

    pub fn one(&self) -> Result<(&Arc<dyn Integrand<1>>, Interval<1>), CorpusError> {
        match &self.body {
            Body::One { f, domain, .. } => Ok((f, *domain)),
            Body::Two { .. } => Err(self.wrong_dim(1)),
        }
    }

    pub fn two(&self) -> Result<(&Arc<dyn Integrand<2>>, Interval<2>), CorpusError> {
        match &self.body {
            Body::Two { f, domain, .. } => Ok((f, *domain)),
            Body::One { .. } => Err(self.wrong_dim(2)),
        }
    }

    fn wrong_dim(&self, expected: usize) -> CorpusError {
        CorpusError::WrongDimension { id: self.id.to_string(), expected, actual: self.dim() }
    }

    pub fn scheme_1d(&self) -> Result<Scheme<1>, CorpusError> {
        let (_, domain) = self.one()?;
        Ok(scheme_for(domain, &self.singular, self.profile.as_ref()))
    }

    pub fn scheme_2d(&self) -> Result<Scheme<2>, CorpusError> {
        let (_, domain) = self.two()?;
        Ok(scheme_for(domain, &self.singular, self.profile.as_ref()))
    }

    pub fn summary(&self) -> CorpusSummary {
        let (domain, z1, z2) = match &self.body {
            Body::One { domain, .. } => (vec![[domain.lo()[0], domain.hi()[0]]], NullSet::Empty, NullSet::Empty),
            Body::Two { domain, z1, z2, .. } => (
                (0..2).map(|a| [domain.lo()[a], domain.hi()[a]]).collect(),
                z1.clone(),
                z2.clone(),
            ),
        };
        CorpusSummary {
            id: self.id.to_string(),
            dim: self.dim(),
            codomain: self.codomain,
            class: self.class,
            domain,
            exact_double: self.exact_double.clone(),
            base: self.base.map(str::to_string),
            null_set: self.null_set.clone(),
            z1,
            z2,
            singular: self.singular.clone(),
            lipschitz: self.lipschitz.clone(),
            recommended_tol: self.recommended_tol,
            notes: self.notes.to_string(),
        }
    }
}

fn has_rationals(z: &NullSet) -> bool {
    match z {
        NullSet::Rationals { .. } => true,
        NullSet::Cylinders { first, second } => has_rationals(first) || has_rationals(second),
        NullSet::Union { parts } => parts.iter().any(has_rationals),
        _ => false,
    }
}

/// Serializable description of an entry, as listed by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub id: String,
    pub dim: usize,
    pub codomain: usize,
    pub class: Class,
    pub domain: Vec<[f64; 2]>,
    pub exact_double: Option<VectorValue>,
    pub base: Option<String>,
    pub null_set: NullSet,
    pub z1: NullSet,
    pub z2: NullSet,
    pub singular: SingularSet,
    pub lipschitz: Option<Vec<f64>>,
    pub recommended_tol: f64,
    pub notes: String,
}

/// Graded scheme when a profile is given for a non-empty singular set,
/// halving combined with a singularity gauge for singular points without a
/// profile, plain halving otherwise.
pub fn scheme_for<const D: usize>(
    domain: Interval<D>,
    singular: &SingularSet,
    profile: Option<&GradedProfile>,
) -> Scheme<D> {
    if singular.is_empty() {
        return Scheme::halving(domain);
    }
    if let Some(p) = profile {
        return Scheme::graded(domain, singular.clone(), p.clone());
    }
    let points: Vec<[f64; D]> = singular
        .points
        .iter()
        .filter(|p| p.len() == D)
        .map(|p| {
            let mut q = [0.0; D];
            q.copy_from_slice(p);
            q
        })
        .collect();
    if points.is_empty() {
        return Scheme::halving(domain);
    }
    Scheme::halving_with_singularity(domain, points, 1.0).unwrap_or_else(|_| Scheme::halving(domain))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ListFilter {
    pub class: Option<Class>,
    pub dim: Option<usize>,
}

pub fn registry() -> &'static [CorpusFunction] {
    static REG: OnceLock<Vec<CorpusFunction>> = OnceLock::new();
    REG.get_or_init(build)
}

pub fn lookup(id: &str) -> Result<&'static CorpusFunction, CorpusError> {
    registry().iter().find(|e| e.id == id).ok_or_else(|| CorpusError::UnknownId(id.to_string()))
}

pub fn list(filter: &ListFilter) -> Vec<CorpusSummary> {
    registry()
        .iter()
        .filter(|e| filter.class.map_or(true, |c| c == e.class))
        .filter(|e| filter.dim.map_or(true, |d| d == e.dim()))
        .map(CorpusFunction::summary)
        .collect()
}

/// `F(x) = x^2 cos(pi / x^2)`, `F(0) = 0`.
pub fn hk_primitive(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x * (PI / (x * x)).cos()
    }
}

/// `F'(x) = 2x cos(pi/x^2) + (2 pi / x) sin(pi/x^2)`, `F'(0) = 0`.
pub fn hk_derivative(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        let a = PI / (x * x);
        2.0 * x * a.cos() + 2.0 * PI / x * a.sin()
    }
}

/// Smooth factor of the planar HK entry.
pub fn hk_smooth(y: f64) -> f64 {
    1.0 / (1.0 + y * y)
}

/// Height of the spike on the line `x = 1/2`.
pub const LINE_SPIKE: f64 = 1000.0;

/// Lines of the grid null set.
pub const GRID_X: f64 = 0.5;
pub const GRID_Y: f64 = 1.0 / 3.0;

const CONST2D: [f64; 2] = [1.5, -0.5];

/// Composite 5-point Gauss-Legendre rule.
fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    const X: [f64; 5] = [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_08,
        0.236_926_885_056_189_08,
    ];
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for i in 0..panels {
        let m = a + (i as f64 + 0.5) * h;
        total += X.iter().zip(&W).map(|(x, w)| w * f(m + 0.5 * h * x)).sum::<f64>() * 0.5 * h;
    }
    total
}

/// `∫_a^b e^{-x^2} dx` in closed form.
fn gauss_mass(a: f64, b: f64) -> f64 {
    0.5 * PI.sqrt() * (libm::erf(b) - libm::erf(a))
}

fn half_sq(lo: f64, hi: f64) -> f64 {
    0.5 * (hi * hi - lo * lo)
}

fn vector_fn<const D: usize>(
    dim: usize,
    f: impl Fn(&[f64; D], &mut [f64]) + Send + Sync + 'static,
) -> Arc<dyn Integrand<D>> {
    Arc::new(FnIntegrand::new(dim, f))
}

fn interval_fn<const D: usize>(
    dim: usize,
    f: impl Fn(&Interval<D>, &mut [f64]) + Send + Sync + 'static,
) -> Option<Arc<dyn IntervalFunction<D>>> {
    Some(Arc::new(FnIntervalFunction::new(dim, f)))
}

fn inner(f: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static) -> Option<InnerFn> {
    Some(Arc::new(move |t| VectorValue(f(t))))
}

fn planar(
    f: Arc<dyn Integrand<2>>,
    primitive: Option<Arc<dyn IntervalFunction<2>>>,
    inner_xy: Option<InnerFn>,
    inner_yx: Option<InnerFn>,
) -> Body {
    Body::Two {
        f,
        domain: Interval::<2>::unit(),
        primitive,
        z1: NullSet::Empty,
        z2: NullSet::Empty,
        inner_xy,
        inner_yx,
    }
}

fn entry(id: &'static str, class: Class, codomain: usize, exact: Vec<f64>, body: Body) -> CorpusFunction {
    CorpusFunction {
        id,
        class,
        notes: "",
        codomain,
        exact_double: Some(VectorValue(exact)),
        base: None,
        null_set: NullSet::Empty,
        singular: SingularSet::default(),
        profile: None,
        lipschitz: None,
        recommended_tol: 1e-6,
        body,
    }
}

fn build() -> Vec<CorpusFunction> {
    let unit1 = Interval::<1>::unit();
    let gauss_1d = gauss_legendre(|x| (-x * x).exp(), 0.0, 1.0, 64);
    let gauss_lip = 2.0 * 2f64.sqrt() * (-0.5f64).exp();
    let sin1 = 1f64.sin();
    let mut v = Vec::new();

    v.push(CorpusFunction {
        notes: "identically zero",
        lipschitz: Some(vec![0.0]),
        ..entry(
            "zero2d",
            Class::Bochner,
            1,
            vec![0.0],
            planar(scalar_fn(|_| 0.0), interval_fn(1, |_, o| o[0] = 0.0), inner(|_| vec![0.0]), inner(|_| vec![0.0])),
        )
    });

    v.push(CorpusFunction {
        notes: "constant vector (1.5, -0.5)",
        lipschitz: Some(vec![0.0, 0.0]),
        ..entry(
            "const2d",
            Class::Bochner,
            2,
            CONST2D.to_vec(),
            planar(
                vector_fn(2, |_, o| o.copy_from_slice(&CONST2D)),
                interval_fn(2, |c: &Interval<2>, o| {
                    let m = c.measure();
                    o[0] = CONST2D[0] * m;
                    o[1] = CONST2D[1] * m;
                }),
                inner(|_| CONST2D.to_vec()),
                inner(|_| CONST2D.to_vec()),
            ),
        )
    });

    v.push(CorpusFunction {
        notes: "x*y",
        lipschitz: Some(vec![2.0]),
        ..entry(
            "poly_xy",
            Class::Bochner,
            1,
            vec![0.25],
            planar(
                scalar_fn(|t| t[0] * t[1]),
                interval_fn(1, |c: &Interval<2>, o| {
                    o[0] = half_sq(c.lo()[0], c.hi()[0]) * half_sq(c.lo()[1], c.hi()[1])
                }),
                inner(|t| vec![0.5 * t]),
                inner(|t| vec![0.5 * t]),
            ),
        )
    });

    v.push(CorpusFunction {
        notes: "x+y",
        lipschitz: Some(vec![2.0]),
        ..entry(
            "sum_xy",
            Class::Bochner,
            1,
            vec![1.0],
            planar(
                scalar_fn(|t| t[0] + t[1]),
                interval_fn(1, |c: &Interval<2>, o| {
                    let (x0, x1, y0, y1) = (c.lo()[0], c.hi()[0], c.lo()[1], c.hi()[1]);
                    o[0] = half_sq(x0, x1) * (y1 - y0) + (x1 - x0) * half_sq(y0, y1)
                }),
                inner(|t| vec![t + 0.5]),
                inner(|t| vec![t + 0.5]),
            ),
        )
    });

    v.push(CorpusFunction {
        notes: "exp(-x^2-y^2); exact value from a Gauss-Legendre rule squared",
        lipschitz: Some(vec![gauss_lip]),
        ..entry(
            "gauss2d",
            Class::Bochner,
            1,
            vec![gauss_1d * gauss_1d],
            planar(
                scalar_fn(|t| (-t[0] * t[0] - t[1] * t[1]).exp()),
                interval_fn(1, |c: &Interval<2>, o| {
                    o[0] = gauss_mass(c.lo()[0], c.hi()[0]) * gauss_mass(c.lo()[1], c.hi()[1])
                }),
                inner(move |t| vec![(-t * t).exp() * gauss_1d]),
                inner(move |t| vec![(-t * t).exp() * gauss_1d]),
            ),
        )
    });

    v.push(CorpusFunction {
        notes: "(x+y, x*y)",
        lipschitz: Some(vec![2.0, 2.0]),
        ..entry(
            "vector2d",
            Class::Bochner,
            2,
            vec![1.0, 0.25],
            planar(
                vector_fn(2, |t, o| {
                    o[0] = t[0] + t[1];
                    o[1] = t[0] * t[1];
                }),
                interval_fn(2, |c: &Interval<2>, o| {
                    let (x0, x1, y0, y1) = (c.lo()[0], c.hi()[0], c.lo()[1], c.hi()[1]);
                    o[0] = half_sq(x0, x1) * (y1 - y0) + (x1 - x0) * half_sq(y0, y1);
                    o[1] = half_sq(x0, x1) * half_sq(y0, y1);
                }),
                inner(|t| vec![t + 0.5, 0.5 * t]),
                inner(|t| vec![t + 0.5, 0.5 * t]),
            ),
        )
    });

    v.push(CorpusFunction {
        notes: "cos(x)(1+y), base of line_mass2d",
        lipschitz: Some(vec![2.0 * sin1 + 1.0]),
        ..entry(
            "line_smooth2d",
            Class::Bochner,
            1,
            vec![1.5 * sin1],
            planar(
                scalar_fn(|t| t[0].cos() * (1.0 + t[1])),
                interval_fn(1, |c: &Interval<2>, o| {
                    let (x0, x1, y0, y1) = (c.lo()[0], c.hi()[0], c.lo()[1], c.hi()[1]);
                    o[0] = (x1.sin() - x0.sin()) * ((y1 - y0) + half_sq(y0, y1))
                }),
                inner(|t| vec![1.5 * t.cos()]),
                inner(move |t| vec![sin1 * (1.0 + t)]),
            ),
        )
    });

    v.push(CorpusFunction {
        notes: "identically zero on [0,1], base of dirichlet1d",
        lipschitz: Some(vec![0.0]),
        ..entry(
            "zero1d",
            Class::Bochner,
            1,
            vec![0.0],
            Body::One { f: scalar_fn(|_| 0.0), domain: unit1, primitive: interval_fn(1, |_, o| o[0] = 0.0) },
        )
    });

    let q = NullSet::rationals();
    let q_eval = q.clone();
    v.push(CorpusFunction {
        notes: "indicator of the rationals (modelled), zero almost everywhere",
        base: Some("zero1d"),
        null_set: q,
        ..entry(
            "dirichlet1d",
            Class::NullPerturbed,
            1,
            vec![0.0],
            Body::One {
                f: scalar_fn(move |t| q_eval.indicator(t)),
                domain: unit1,
                primitive: interval_fn(1, |_, o| o[0] = 0.0),
            },
        )
    });

    v.push(CorpusFunction {
        notes: "cos(x)(1+y) plus a spike of height 1000 on x = 1/2",
        base: Some("line_smooth2d"),
        null_set: NullSet::VerticalLines { xs: vec![GRID_X] },
        ..entry(
            "line_mass2d",
            Class::NullPerturbed,
            1,
            vec![1.5 * sin1],
            Body::Two {
                f: scalar_fn(|t| t[0].cos() * (1.0 + t[1]) + if t[0] == GRID_X { LINE_SPIKE } else { 0.0 }),
                domain: Interval::<2>::unit(),
                primitive: interval_fn(1, |c: &Interval<2>, o| {
                    let (x0, x1, y0, y1) = (c.lo()[0], c.hi()[0], c.lo()[1], c.hi()[1]);
                    o[0] = (x1.sin() - x0.sin()) * ((y1 - y0) + half_sq(y0, y1))
                }),
                z1: NullSet::points_1d(&[GRID_X]),
                z2: NullSet::Empty,
                inner_xy: inner(|t| vec![1.5 * t.cos() + if t == GRID_X { LINE_SPIKE } else { 0.0 }]),
                inner_yx: inner(move |t| vec![sin1 * (1.0 + t)]),
            },
        )
    });

    let grid = NullSet::cylinders(NullSet::points_1d(&[GRID_X]), NullSet::points_1d(&[GRID_Y]));
    let grid_eval = grid.clone();
    v.push(CorpusFunction {
        notes: "indicator of the lines x = 1/2 and y = 1/3",
        base: Some("zero2d"),
        null_set: grid,
        ..entry(
            "grid_null2d",
            Class::NullPerturbed,
            1,
            vec![0.0],
            Body::Two {
                f: scalar_fn(move |t| grid_eval.indicator(t)),
                domain: Interval::<2>::unit(),
                primitive: interval_fn(1, |_, o| o[0] = 0.0),
                z1: NullSet::points_1d(&[GRID_X]),
                z2: NullSet::points_1d(&[GRID_Y]),
                inner_xy: inner(|t| vec![if t == GRID_X { 1.0 } else { 0.0 }]),
                inner_yx: inner(|t| vec![if t == GRID_Y { 1.0 } else { 0.0 }]),
            },
        )
    });

    v.push(CorpusFunction {
        notes: "F' for F(x) = x^2 cos(pi/x^2); integrable only in the HK sense",
        singular: SingularSet::points_1d(&[0.0]),
        profile: Some(GradedProfile {
            grading: Grading { terms: vec![(5e-4, 2.0), (5e-2, 3.0)], cap: 1.0 },
            anchor_start: 16.0,
            anchor_rate: 0.5,
        }),
        recommended_tol: 5e-4,
        ..entry(
            "hk1d_cos",
            Class::HkOnly,
            1,
            vec![hk_primitive(1.0) - hk_primitive(0.0)],
            Body::One {
                f: scalar_fn(|t| hk_derivative(t[0])),
                domain: unit1,
                primitive: interval_fn(1, |c: &Interval<1>, o| o[0] = hk_primitive(c.hi()[0]) - hk_primitive(c.lo()[0])),
            },
        )
    });

    v.push(CorpusFunction {
        notes: "F'(x) / (1 + y^2) with F(x) = x^2 cos(pi/x^2); singular along x = 0",
        singular: SingularSet { points: vec![], lines: vec![AxisLine { axis: 0, value: 0.0 }] },
        profile: Some(GradedProfile {
            grading: Grading { terms: vec![(2e-3, 2.0), (0.15, 3.0)], cap: 1.0 / 32.0 },
            anchor_start: 1.0,
            anchor_rate: 1.0,
        }),
        recommended_tol: 1e-3,
        ..entry(
            "hk2d_product",
            Class::HkOnly,
            1,
            vec![-FRAC_PI_4],
            planar(
                scalar_fn(|t| hk_derivative(t[0]) * hk_smooth(t[1])),
                interval_fn(1, |c: &Interval<2>, o| {
                    o[0] = (hk_primitive(c.hi()[0]) - hk_primitive(c.lo()[0])) * (c.hi()[1].atan() - c.lo()[1].atan())
                }),
                inner(|t| vec![hk_derivative(t) * FRAC_PI_4]),
                inner(|t| vec![-hk_smooth(t)]),
            ),
        )
    });

    v
}
