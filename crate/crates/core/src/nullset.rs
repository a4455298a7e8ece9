//! Structurally null sets: finite point sets, axis-parallel lines, a countable
//! dense model of the rationals, and unions of these.

use serde::{Deserialize, Serialize};

use crate::geometry::{Interval, Point};

/// Membership model for the rationals in `[0,1]`-scale arithmetic.
///
/// Every finite double is a dyadic rational, so membership in Q has to be
/// modelled. A point is "rational" here when it is a dyadic of level at most
/// `max_dyadic_level`, or equals `fl(p/q)` for some `q <= max_denominator`.
/// Both families are countable, and a generic shifted tag misses them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalModel {
    pub max_dyadic_level: u32,
    pub max_denominator: u64,
}

impl Default for RationalModel {
    fn default() -> Self {
        RationalModel { max_dyadic_level: 44, max_denominator: 64 }
    }
}

impl RationalModel {
    pub fn contains(&self, x: f64) -> bool {
        if !x.is_finite() {
            return false;
        }
        let scaled = x * f64::powi(2.0, self.max_dyadic_level as i32);
        if scaled.fract() == 0.0 {
            return true;
        }
        (1..=self.max_denominator).any(|q| {
            let p = (x * q as f64).round();
            p / q as f64 == x
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NullSet {
    Empty,
    /// Finitely many points; each point has the ambient dimension.
    Points { points: Vec<Vec<f64>> },
    /// Lines `x = c` in the plane.
    VerticalLines { xs: Vec<f64> },
    /// Lines `y = c` in the plane.
    HorizontalLines { ys: Vec<f64> },
    /// The rationals of the real line, see [`RationalModel`].
    Rationals { model: RationalModel },
    /// `(first x R) ∪ (R x second)` for one-dimensional null sets `first`
    /// and `second`.
    Cylinders { first: Box<NullSet>, second: Box<NullSet> },
    Union { parts: Vec<NullSet> },
}

impl NullSet {
    pub fn points_1d(xs: &[f64]) -> Self {
        NullSet::Points { points: xs.iter().map(|&x| vec![x]).collect() }
    }

    pub fn rationals() -> Self {
        NullSet::Rationals { model: RationalModel::default() }
    }

    pub fn cylinders(first: NullSet, second: NullSet) -> Self {
        NullSet::Cylinders { first: Box::new(first), second: Box::new(second) }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            NullSet::Empty => true,
            NullSet::Points { points } => points.is_empty(),
            NullSet::VerticalLines { xs } => xs.is_empty(),
            NullSet::HorizontalLines { ys } => ys.is_empty(),
            NullSet::Rationals { .. } => false,
            NullSet::Cylinders { first, second } => first.is_empty() && second.is_empty(),
            NullSet::Union { parts } => parts.iter().all(NullSet::is_empty),
        }
    }

    /// Membership of `t`; the slice length is the ambient dimension.
    pub fn contains(&self, t: &[f64]) -> bool {
        match self {
            NullSet::Empty => false,
            NullSet::Points { points } => points.iter().any(|p| p.as_slice() == t),
            NullSet::VerticalLines { xs } => t.len() >= 2 && xs.contains(&t[0]),
            NullSet::HorizontalLines { ys } => t.len() >= 2 && ys.contains(&t[1]),
            NullSet::Rationals { model } => t.iter().all(|&x| model.contains(x)),
            NullSet::Cylinders { first, second } => {
                t.len() == 2 && (first.contains(&t[..1]) || second.contains(&t[1..]))
            }
            NullSet::Union { parts } => parts.iter().any(|p| p.contains(t)),
        }
    }

    /// Indicator `1_Z(t)`.
    pub fn indicator(&self, t: &[f64]) -> f64 {
        if self.contains(t) {
            1.0
        } else {
            0.0
        }
    }

    /// Some point of the set inside the closed cell, if one is known. Used by
    /// the adversarial on-set tag strategy.
    pub fn point_in<const D: usize>(&self, cell: &Interval<D>) -> Option<Point<D>> {
        let c = cell.center();
        match self {
            NullSet::Empty => None,
            NullSet::Points { points } => points.iter().find_map(|p| {
                if p.len() != D {
                    return None;
                }
                let mut q = [0.0; D];
                q.copy_from_slice(p);
                cell.contains_point(&q).then_some(q)
            }),
            NullSet::VerticalLines { xs } if D == 2 => xs
                .iter()
                .find(|&&x| cell.lo()[0] <= x && x <= cell.hi()[0])
                .map(|&x| with_coord(c, 0, x)),
            NullSet::HorizontalLines { ys } if D == 2 => ys
                .iter()
                .find(|&&y| cell.lo()[1] <= y && y <= cell.hi()[1])
                .map(|&y| with_coord(c, 1, y)),
            NullSet::VerticalLines { .. } | NullSet::HorizontalLines { .. } => None,
            NullSet::Rationals { model } => {
                // the center of a bisection cell is dyadic
                c.iter().all(|&x| model.contains(x)).then_some(c)
            }
            NullSet::Cylinders { first, second } if D == 2 => {
                let x_side = cell.side(0);
                let y_side = cell.side(1);
                if let Some(x) = first.point_in(&x_side) {
                    return Some(with_coord(c, 0, x[0]));
                }
                second.point_in(&y_side).map(|y| with_coord(c, 1, y[0]))
            }
            NullSet::Cylinders { .. } => None,
            NullSet::Union { parts } => parts.iter().find_map(|p| p.point_in(cell)),
        }
    }
}

fn with_coord<const D: usize>(mut p: Point<D>, axis: usize, value: f64) -> Point<D> {
    p[axis] = value;
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_model() {
        let q = RationalModel::default();
        assert!(q.contains(0.5));
        assert!(q.contains(1.0 / 3.0));
        assert!(q.contains(0.0));
        assert!(!q.contains(std::f64::consts::FRAC_1_SQRT_2));
        assert!(!q.contains(0.25 + std::f64::consts::SQRT_2 / 64.0));
    }

    #[test]
    fn grid_lines() {
        let z = NullSet::cylinders(NullSet::points_1d(&[0.5]), NullSet::points_1d(&[1.0 / 3.0]));
        assert!(z.contains(&[0.5, 0.9]));
        assert!(z.contains(&[0.1, 1.0 / 3.0]));
        assert!(!z.contains(&[0.1, 0.2]));
        let cell = Interval::<2>::from_coords((0.25, 0.5), (0.0, 0.25)).unwrap();
        assert_eq!(z.point_in(&cell), Some([0.5, 0.125]));
        let cell = Interval::<2>::from_coords((0.0, 0.25), (0.25, 0.5)).unwrap();
        assert_eq!(z.point_in(&cell), Some([0.125, 1.0 / 3.0]));
    }

    #[test]
    fn serde_shape() {
        let z = NullSet::VerticalLines { xs: vec![0.5] };
        let s = serde_json::to_string(&z).unwrap();
        assert_eq!(s, r#"{"kind":"vertical_lines","xs":[0.5]}"#);
        assert_eq!(serde_json::from_str::<NullSet>(&s).unwrap(), z);
    }
}
