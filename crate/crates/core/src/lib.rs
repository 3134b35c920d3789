//! Coordinate calculus of jet bundles, flag jets and spaces of Cauchy data.
//!
//! The crate provides an exact symbolic kernel ([`expr`]), multi-index
//! combinatorics ([`multiindex`]), the linear algebra of planes and flags
//! ([`grassmann`]), truncated jet charts with prolongation and total
//! derivatives ([`jetspace`]), the equations of involutive planes of a
//! distribution ([`involutive`]), flag-jet and Cauchy-data coordinate
//! systems with their structural projections ([`flag`], [`cauchy`]), and
//! first-order variational machinery with transversality conditions and a
//! two-curve shortest-segment solver ([`variational`]).
//!
//! Numeric code is generic over the floating-point scalar through
//! [`Scalar`]; chart transforms are generic over any commutative-ring-like
//! scalar ([`CoordScalar`]) and so run exactly on rationals. Concrete
//! `f64` aliases for the main point types live at the crate root.

pub mod cauchy;
pub mod coords;
pub mod expr;
pub mod flag;
pub mod grassmann;
pub mod involutive;
pub mod jetspace;
pub mod multiindex;
pub mod numeric;
pub mod variational;

use std::fmt;

/// Floating-point scalar for numeric evaluation: `f32` or `f64`.
pub trait Scalar:
    num_traits::Float + num_traits::FromPrimitive + fmt::Debug + fmt::Display + 'static
{
}

impl<T> Scalar for T where
    T: num_traits::Float + num_traits::FromPrimitive + fmt::Debug + fmt::Display + 'static
{
}

/// Scalar admissible in chart transforms: ring operations suffice, so both
/// floats and exact rationals qualify. Transforms between the chart
/// systems are polynomial with integer coefficients and are therefore
/// exact bijections over a [`CoordScalar`] like [`expr::Rational`].
pub trait CoordScalar:
    Clone
    + PartialEq
    + fmt::Debug
    + num_traits::Zero
    + num_traits::One
    + std::ops::Sub<Output = Self>
    + std::ops::Neg<Output = Self>
{
}

impl<T> CoordScalar for T where
    T: Clone
        + PartialEq
        + fmt::Debug
        + num_traits::Zero
        + num_traits::One
        + std::ops::Sub<Output = Self>
        + std::ops::Neg<Output = Self>
{
}

pub use expr::{Expr, Rational};
pub use multiindex::MultiIndex;

/// `f64` lane of the generic types, matching the command-line tool.
pub type PlaneF64 = grassmann::Plane<f64>;
pub type LinearFlagF64 = grassmann::LinearFlag<f64>;
pub type JetPointF64 = jetspace::JetPoint<f64>;
pub type FlagPointIF64 = flag::FlagPointI<f64>;
pub type FlagPointIIF64 = flag::FlagPointII<f64>;
pub type InvPlanePointF64 = flag::InvPlanePoint<f64>;
pub type CauchyPointF64 = cauchy::CauchyPoint<f64>;
pub type CauchyPointAltF64 = cauchy::CauchyPointAlt<f64>;
pub type ColumbusSolutionF64 = variational::ColumbusSolution<f64>;

