//! Vector values, norms, and the integrand and interval-function traits.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Interval, Point};

/// Element of R^d. Integrals and Riemann sums are reported in this form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VectorValue(pub Vec<f64>);

impl VectorValue {
    pub fn zeros(d: usize) -> Self {
        VectorValue(vec![0.0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self, norm: Norm) -> f64 {
        norm.of(&self.0)
    }

    /// `norm(self - other)`.
    pub fn distance(&self, other: &VectorValue, norm: Norm) -> f64 {
        norm.of_diff(&self.0, &other.0)
    }
}

impl From<Vec<f64>> for VectorValue {
    fn from(v: Vec<f64>) -> Self {
        VectorValue(v)
    }
}

impl fmt::Display for VectorValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// Norm on the codomain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    #[default]
    Euclid,
    Max,
    Sum,
}

impl Norm {
    #[inline]
    pub fn of(self, v: &[f64]) -> f64 {
        match self {
            Norm::Euclid => {
                if v.len() == 1 {
                    v[0].abs()
                } else {
                    v.iter().map(|x| x * x).sum::<f64>().sqrt()
                }
            }
            Norm::Max => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            Norm::Sum => v.iter().map(|x| x.abs()).sum(),
        }
    }

    #[inline]
    pub fn of_diff(self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match (self, a.len()) {
            (_, 1) => (a[0] - b[0]).abs(),
            (Norm::Euclid, _) => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            (Norm::Max, _) => a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs())),
            (Norm::Sum, _) => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        }
    }

    /// Lipschitz constant of a map whose components have constants `per_component`.
    pub fn combine_lipschitz(self, per_component: &[f64]) -> f64 {
        match self {
            Norm::Euclid => per_component.iter().map(|l| l * l).sum::<f64>().sqrt(),
            Norm::Max => per_component.iter().fold(0.0, |m: f64, l| m.max(*l)),
            Norm::Sum => per_component.iter().sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("non-finite value at {at:?}")]
    NonFinite { at: Vec<f64> },
    #[error("evaluation failed at {at:?}: {reason}")]
    Failed { at: Vec<f64>, reason: String },
}

/// A function `f: domain -> R^d`.
pub trait Integrand<const D: usize>: Send + Sync {
    fn codomain_dim(&self) -> usize;

    /// Write `f(t)` into `out` (length `codomain_dim`).
    fn eval(&self, t: &Point<D>, out: &mut [f64]) -> Result<(), EvalError>;

    fn eval_vec(&self, t: &Point<D>) -> Result<VectorValue, EvalError> {
        let mut out = vec![0.0; self.codomain_dim()];
        self.eval(t, &mut out)?;
        Ok(VectorValue(out))
    }
}

/// Integrand backed by a closure writing into the output slice.
pub struct FnIntegrand<F> {
    dim: usize,
    f: F,
}

impl<F> FnIntegrand<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnIntegrand { dim, f }
    }
}

impl<const D: usize, F> Integrand<D> for FnIntegrand<F>
where
    F: Fn(&Point<D>, &mut [f64]) + Send + Sync,
{
    fn codomain_dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn eval(&self, t: &Point<D>, out: &mut [f64]) -> Result<(), EvalError> {
        (self.f)(t, out);
        Ok(())
    }
}

/// Shorthand for a real-valued integrand.
pub fn scalar_fn<const D: usize>(f: impl Fn(&Point<D>) -> f64 + Send + Sync + 'static) -> Arc<dyn Integrand<D>> {
    Arc::new(FnIntegrand::new(1, move |t: &Point<D>, out: &mut [f64]| out[0] = f(t)))
}

impl<const D: usize, T: Integrand<D> + ?Sized> Integrand<D> for Arc<T> {
    fn codomain_dim(&self) -> usize {
        (**self).codomain_dim()
    }

    #[inline]
    fn eval(&self, t: &Point<D>, out: &mut [f64]) -> Result<(), EvalError> {
        (**self).eval(t, out)
    }
}

/// An additive function of intervals, `F(I)` in `R^d`.
pub trait IntervalFunction<const D: usize>: Send + Sync {
    fn codomain_dim(&self) -> usize;
    fn eval(&self, cell: &Interval<D>, out: &mut [f64]) -> Result<(), EvalError>;
}

/// Interval function backed by a closure.
pub struct FnIntervalFunction<F> {
    dim: usize,
    f: F,
}

impl<F> FnIntervalFunction<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnIntervalFunction { dim, f }
    }
}

impl<const D: usize, F> IntervalFunction<D> for FnIntervalFunction<F>
where
    F: Fn(&Interval<D>, &mut [f64]) + Send + Sync,
{
    fn codomain_dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, cell: &Interval<D>, out: &mut [f64]) -> Result<(), EvalError> {
        (self.f)(cell, out);
        Ok(())
    }
}
