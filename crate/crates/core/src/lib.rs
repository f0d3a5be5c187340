//! Numerical information geometry in chart coordinates.
//!
//! The crate models statistical manifolds as a metric field together with a
//! pair of torsion-free dual connections, equivalently a symmetric cubic
//! tensor. On top of that it provides:
//!
//! - the probability simplex with its Fisher metric and e/m connections ([`simplex`]),
//! - exponential and mixture families ([`families`]),
//! - geometry generated by two-point divergences ([`divergence`]),
//! - geodesic shooting and canonical divergences ([`geodesic`]),
//! - warped products of statistical manifolds ([`warped`]).
//!
//! Christoffel symbols are stored as [`Rank3`] with layout `[k][i][j]` for
//! Γ^k_ij; fully covariant tensors use `[i][j][k]`.

// Index loops mirror the tensor formulas; negated comparisons deliberately
// treat NaN as a failed check.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod divergence;
pub mod error;
pub mod families;
pub mod fd;
pub mod geodesic;
pub mod geometry;
pub mod simplex;
pub mod sweep;
pub mod tensor;
pub mod warped;

pub use divergence::{DivergenceFn, DivergenceSteps};
pub use error::{GeomError, Result};
pub use fd::FdStep;
pub use geodesic::{GeodesicPath, ShootingConfig};
pub use geometry::{
    ChartPoint, ConnectionField, CubicTensorField, ManifoldModel, MetricField, TangentVector,
};
pub use tensor::Rank3;
pub use warped::{WarpSpec, WarpWeight, WarpedPoint};
