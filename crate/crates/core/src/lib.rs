//! Numerics for the liberation flow of a pair of projections.
//!
//! A pair `(P, Q)` of projections with traces `α, β`, the second one rotated
//! by a free unitary Brownian motion `U_t`, is described by the spectral
//! measure `μ_t` of `Q U_t P U_t* Q` on `[0, 1]`. This crate provides
//!
//! * [`measures`]: spectral measures (atoms plus Chebyshev or cell densities),
//!   presets, parsing and JSON I/O;
//! * [`moment_flow`]: the moment hierarchy and its adaptive integration;
//! * [`transform`]: Cauchy transforms, Stieltjes inversion, the stationary
//!   Jacobi law, the transport equation and contour masses;
//! * [`subordination`]: the subordination solver for trace-½ pairs, giving
//!   transforms and densities at any time;
//! * [`entropy`]: logarithmic energy, projection entropy, free Fisher
//!   information and its time integral;
//! * [`rmt`]: finite-dimensional simulation with unitary Brownian motion and
//!   a self-contained Hermitian eigensolver ([`linalg`]).
//!
//! The moment right-hand side is generic over any [`Scalar`] (exact
//! rationals included) and the integrator over floating-point types; the
//! analytic and random-matrix layers work in `f64`, named by the aliases
//! below.

// Negated comparisons such as `!(x >= 0.0)` are used on purpose: they also
// reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cells;
pub mod chebyshev;
pub mod entropy;
pub mod error;
pub mod linalg;
pub mod measures;
pub mod moment_flow;
pub mod ode;
pub mod params;
pub mod rmt;
pub mod subordination;
pub mod transform;

/// Real scalar of the analytic and random-matrix layers.
pub type Real = f64;

/// Complex scalar of the analytic and random-matrix layers.
pub type Complex = num_complex::Complex<Real>;

/// Moment vector in double precision.
pub type Moments = moment_flow::MomentVector<Real>;

/// Scalars the moment hierarchy can be written over: any commutative ring
/// with small integer and real constants (`f32`, `f64`, exact rationals).
pub trait Scalar: Clone + std::fmt::Debug + num_traits::Num + num_traits::FromPrimitive {}

impl<T> Scalar for T where T: Clone + std::fmt::Debug + num_traits::Num + num_traits::FromPrimitive {}
