//! Closed axis-aligned boxes in one or two dimensions, max-norm balls, and
//! the containment tests the partition generator relies on.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// A point of R^D.
pub type Point<const D: usize> = [f64; D];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("degenerate interval on axis {axis}: lo={lo}, hi={hi}")]
    Degenerate { axis: usize, lo: f64, hi: f64 },
    #[error("non-finite bound on axis {axis}")]
    NonFinite { axis: usize },
    #[error("ball radius must be positive and finite, got {0}")]
    BadRadius(f64),
}

/// Closed box `[lo_0, hi_0] x ... x [lo_{D-1}, hi_{D-1}]` with `lo < hi` on
/// every axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<const D: usize> {
    lo: [f64; D],
    hi: [f64; D],
}

pub type Interval1 = Interval<1>;
pub type Interval2 = Interval<2>;

impl Interval<1> {
    pub fn new(lo: f64, hi: f64) -> Result<Self, GeometryError> {
        Self::from_bounds([lo], [hi])
    }
}

impl Interval<2> {
    /// The product `x x y`.
    pub fn new(x: Interval<1>, y: Interval<1>) -> Self {
        Interval { lo: [x.lo[0], y.lo[0]], hi: [x.hi[0], y.hi[0]] }
    }

    pub fn from_coords(x: (f64, f64), y: (f64, f64)) -> Result<Self, GeometryError> {
        Self::from_bounds([x.0, y.0], [x.1, y.1])
    }
}

impl<const D: usize> Interval<D> {
    pub fn from_bounds(lo: [f64; D], hi: [f64; D]) -> Result<Self, GeometryError> {
        for axis in 0..D {
            if !lo[axis].is_finite() || !hi[axis].is_finite() {
                return Err(GeometryError::NonFinite { axis });
            }
            if lo[axis] >= hi[axis] {
                return Err(GeometryError::Degenerate { axis, lo: lo[axis], hi: hi[axis] });
            }
        }
        Ok(Interval { lo, hi })
    }

    /// The unit cube `[0,1]^D`.
    pub fn unit() -> Self {
        Interval { lo: [0.0; D], hi: [1.0; D] }
    }

    #[inline]
    pub fn lo(&self) -> &[f64; D] {
        &self.lo
    }

    #[inline]
    pub fn hi(&self) -> &[f64; D] {
        &self.hi
    }

    /// The factor on `axis` as a one-dimensional interval.
    pub fn side(&self, axis: usize) -> Interval<1> {
        Interval { lo: [self.lo[axis]], hi: [self.hi[axis]] }
    }

    #[inline]
    pub fn width(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    /// Lebesgue measure: the product of the side lengths.
    #[inline]
    pub fn measure(&self) -> f64 {
        let mut m = 1.0;
        for axis in 0..D {
            m *= self.width(axis);
        }
        m
    }

    /// Max-norm diameter, i.e. the longest side.
    pub fn diameter(&self) -> f64 {
        (0..D).map(|a| self.width(a)).fold(0.0, f64::max)
    }

    #[inline]
    pub fn center(&self) -> Point<D> {
        let mut c = [0.0; D];
        for axis in 0..D {
            c[axis] = 0.5 * (self.lo[axis] + self.hi[axis]);
        }
        c
    }

    /// Closed-box membership.
    #[inline]
    pub fn contains_point(&self, t: &Point<D>) -> bool {
        (0..D).all(|a| self.lo[a] <= t[a] && t[a] <= self.hi[a])
    }

    pub fn contains_interval(&self, other: &Interval<D>) -> bool {
        (0..D).all(|a| self.lo[a] <= other.lo[a] && other.hi[a] <= self.hi[a])
    }

    /// Clamp a point into the box coordinatewise.
    pub fn clamp(&self, t: &Point<D>) -> Point<D> {
        let mut c = *t;
        for axis in 0..D {
            c[axis] = c[axis].clamp(self.lo[axis], self.hi[axis]);
        }
        c
    }

    /// Per-axis distance from `t` to the farthest point of the box.
    #[inline]
    pub fn reach_from(&self, t: &Point<D>) -> [f64; D] {
        let mut r = [0.0; D];
        for axis in 0..D {
            r[axis] = (self.hi[axis] - t[axis]).max(t[axis] - self.lo[axis]);
        }
        r
    }

    /// Split every axis flagged in `axes` at its midpoint. Children are
    /// returned with axis 0 varying fastest.
    pub fn bisect(&self, axes: [bool; D]) -> Vec<Interval<D>> {
        let mut out = vec![*self];
        for axis in 0..D {
            if !axes[axis] {
                continue;
            }
            let mid = 0.5 * (self.lo[axis] + self.hi[axis]);
            let mut next = Vec::with_capacity(out.len() * 2);
            for half in 0..2 {
                for cell in &out {
                    let mut c = *cell;
                    if half == 0 {
                        c.hi[axis] = mid;
                    } else {
                        c.lo[axis] = mid;
                    }
                    next.push(c);
                }
            }
            out = next;
        }
        out
    }

    /// Child `index` of [`Interval::bisect`] without building the others:
    /// bit `j` of `index` selects the upper half along the `j`-th flagged
    /// axis.
    pub fn child(&self, axes: [bool; D], index: usize) -> Interval<D> {
        let mut c = *self;
        let mut bit = 0;
        for axis in 0..D {
            if !axes[axis] {
                continue;
            }
            let mid = 0.5 * (self.lo[axis] + self.hi[axis]);
            if index >> bit & 1 == 0 {
                c.hi[axis] = mid;
            } else {
                c.lo[axis] = mid;
            }
            bit += 1;
        }
        c
    }

    /// Intersection as a possibly degenerate closed box, or `None` when the
    /// boxes are disjoint.
    pub fn intersect(&self, other: &Interval<D>) -> Option<Overlap<D>> {
        let mut lo = [0.0; D];
        let mut hi = [0.0; D];
        for axis in 0..D {
            lo[axis] = self.lo[axis].max(other.lo[axis]);
            hi[axis] = self.hi[axis].min(other.hi[axis]);
            if lo[axis] > hi[axis] {
                return None;
            }
        }
        Some(Overlap { lo, hi })
    }

    /// True when the interiors are disjoint.
    pub fn nonoverlapping(&self, other: &Interval<D>) -> bool {
        self.intersect(other).map_or(true, |o| o.measure() == 0.0)
    }

    pub fn lo_vec(&self) -> Vec<f64> {
        self.lo.to_vec()
    }

    pub fn hi_vec(&self) -> Vec<f64> {
        self.hi.to_vec()
    }
}

/// Product of two one-dimensional intervals.
pub fn product(x: &Interval<1>, y: &Interval<1>) -> Interval<2> {
    Interval::<2>::new(*x, *y)
}

/// Closed box that may be degenerate; the result of [`Interval::intersect`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overlap<const D: usize> {
    pub lo: [f64; D],
    pub hi: [f64; D],
}

impl<const D: usize> Overlap<D> {
    pub fn measure(&self) -> f64 {
        (0..D).map(|a| self.hi[a] - self.lo[a]).product()
    }

    pub fn is_degenerate(&self) -> bool {
        (0..D).any(|a| self.hi[a] <= self.lo[a])
    }
}

/// Open max-norm ball `B(center, radius)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball<const D: usize> {
    center: Point<D>,
    radius: f64,
}

impl<const D: usize> Ball<D> {
    pub fn new(center: Point<D>, radius: f64) -> Result<Self, GeometryError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(GeometryError::BadRadius(radius));
        }
        Ok(Ball { center, radius })
    }

    pub fn center(&self) -> &Point<D> {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Whether the closed box lies inside the open ball.
    pub fn contains(&self, cell: &Interval<D>) -> bool {
        ball_contains(cell, &self.center, self.radius)
    }
}

/// `I ⊂ B(t, r)` for the open max-norm ball; the inequality is strict.
#[inline]
pub fn ball_contains<const D: usize>(cell: &Interval<D>, t: &Point<D>, r: f64) -> bool {
    cell.reach_from(t).iter().all(|&d| d < r)
}

/// Axis-wise variant of [`ball_contains`]: the reach along axis `a` must be
/// strictly below `radii[a]`.
#[inline]
pub fn box_contains<const D: usize>(cell: &Interval<D>, t: &Point<D>, radii: &[f64; D]) -> bool {
    let reach = cell.reach_from(t);
    (0..D).all(|a| reach[a] < radii[a])
}

/// Max-norm distance.
pub fn dist_max<const D: usize>(a: &Point<D>, b: &Point<D>) -> f64 {
    (0..D).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max)
}

impl<const D: usize> Serialize for Interval<D> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let sides: Vec<[f64; 2]> = (0..D).map(|a| [self.lo[a], self.hi[a]]).collect();
        sides.serialize(s)
    }
}

impl<'de, const D: usize> Deserialize<'de> for Interval<D> {
    fn deserialize<De: Deserializer<'de>>(d: De) -> Result<Self, De::Error> {
        let sides: Vec<[f64; 2]> = Vec::deserialize(d)?;
        if sides.len() != D {
            return Err(De::Error::custom(format!("expected {D} sides, got {}", sides.len())));
        }
        let mut lo = [0.0; D];
        let mut hi = [0.0; D];
        for (a, s) in sides.iter().enumerate() {
            lo[a] = s[0];
            hi[a] = s[1];
        }
        Interval::from_bounds(lo, hi).map_err(De::Error::custom)
    }
}
