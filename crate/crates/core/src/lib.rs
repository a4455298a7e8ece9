//! Gauge (McShane and Henstock-Kurzweil) integration on one- and
//! two-dimensional intervals, with partition generators, gauge constructions,
//! Fubini-type comparisons and a corpus of test integrands.

pub mod cli;
pub mod corpus;
pub mod fubini;
pub mod geometry;
pub mod gauges;
pub mod integrator;
pub mod nullset;
pub mod partitions;
pub mod sum;
pub mod value;

pub use geometry::{Interval, Interval1, Interval2, Point};
pub use partitions::{Discipline, TagStrategy, TaggedInterval, TaggedPartition};
pub use value::{Integrand, Norm, VectorValue};
