//! The moment hierarchy of the liberation flow.
//!
//! With `g_n(t) = τ((q p_t q)^n)` and `g_0 = α + β`, the moments obey the
//! lower-triangular quadratic system
//!
//! ```text
//! g1' = −g1 + αβ
//! gn' = −n g_n + n g_0 g_{n−1} − n Σ_{j=1}^{n−1} g_j g_{n−j} + n Σ_{j=2}^{n−1} g_{j−1} g_{n−j},   n ≥ 2,
//! ```
//!
//! equivalently `gn' = −n [g_n + Σ_{j=1}^{n−1} (g_j − g_{j−1}) g_{n−j}]` for
//! `n ≥ 2`. Each `g_n` is a finite combination of `t^k e^{−jt}`, and the
//! truncation to the first `N` moments is closed.
//!
//! The right-hand side is generic over any commutative ring with small
//! integer constants (floats, exact rationals); integration is generic over
//! [`num_traits::Float`].

use crate::error::{Error, Result};
use crate::measures::SpectralMeasure;
use crate::ode::{integrate, OdeConfig};
use crate::params::TraceParams;
use crate::Scalar;
use num_traits::{Float, FromPrimitive};

/// Default truncation order.
pub const DEFAULT_ORDER: usize = 64;

/// Truncated moment sequence `(g_1, …, g_N)` plus the stored constant `g_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector<T> {
    g0: T,
    g: Vec<T>,
}

impl<T: Scalar> MomentVector<T> {
    /// `g0` must equal `α + β`; `g[n−1]` holds `g_n`.
    pub fn new(g0: T, g: Vec<T>) -> Self {
        Self { g0, g }
    }

    pub fn g0(&self) -> &T {
        &self.g0
    }

    /// `(g_1, …, g_N)`.
    pub fn moments(&self) -> &[T] {
        &self.g
    }

    /// `g_n` for `1 ≤ n ≤ N`.
    pub fn get(&self, n: usize) -> &T {
        &self.g[n - 1]
    }

    pub fn order(&self) -> usize {
        self.g.len()
    }
}

impl MomentVector<f64> {
    /// Moments of a `ν`- or `μ`-level measure (they agree for `n ≥ 1`).
    pub fn from_measure(m: &SpectralMeasure, p: &TraceParams, order: usize) -> Self {
        Self::new(p.alpha() + p.beta(), m.moments(order))
    }
}

/// Coefficients entering the right-hand side: `g_0 = α+β` and `αβ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowCoefficients<T> {
    pub sum: T,
    pub product: T,
}

impl<T: Scalar> FlowCoefficients<T> {
    /// Converts the trace parameters into the scalar type.
    pub fn from_params(p: &TraceParams) -> Option<Self> {
        Some(Self { sum: T::from_f64(p.alpha() + p.beta())?, product: T::from_f64(p.alpha() * p.beta())? })
    }
}

/// Right-hand side of the moment system, written in its expanded form.
/// `out` receives `(g_1', …, g_N')`.
pub fn moment_rhs<T: Scalar>(g: &[T], c: &FlowCoefficients<T>, out: &mut [T]) {
    let n_max = g.len();
    assert_eq!(out.len(), n_max, "output length must match the truncation order");
    if n_max == 0 {
        return;
    }
    out[0] = c.product.clone() - g[0].clone();
    for n in 2..=n_max {
        let nn = T::from_usize(n).expect("small integer");
        let mut quad = T::zero();
        for j in 1..n {
            quad = quad + g[j - 1].clone() * g[n - j - 1].clone();
        }
        let mut shifted = T::zero();
        for j in 2..n {
            shifted = shifted + g[j - 2].clone() * g[n - j - 1].clone();
        }
        out[n - 1] = nn * (c.sum.clone() * g[n - 2].clone() - g[n - 1].clone() - quad + shifted);
    }
}

/// Right-hand side in the compact telescoped form
/// `g_n' = −n [g_n + Σ (g_j − g_{j−1}) g_{n−j}]`, `g_0 = α+β`.
pub fn moment_rhs_compact<T: Scalar>(g: &[T], c: &FlowCoefficients<T>, out: &mut [T]) {
    let n_max = g.len();
    assert_eq!(out.len(), n_max, "output length must match the truncation order");
    if n_max == 0 {
        return;
    }
    let at = |k: usize| if k == 0 { c.sum.clone() } else { g[k - 1].clone() };
    out[0] = c.product.clone() - g[0].clone();
    for n in 2..=n_max {
        let nn = T::from_usize(n).expect("small integer");
        let mut acc = at(n);
        for j in 1..n {
            acc = acc + (at(j) - at(j - 1)) * at(n - j);
        }
        out[n - 1] = T::zero() - nn * acc;
    }
}

/// Integrates the truncated system from `g(0)` to time `t ≥ 0` with local
/// error tolerance `tol`.
pub fn evolve_moments<T>(g0: &MomentVector<T>, p: &TraceParams, t: T, tol: T) -> Result<MomentVector<T>>
where
    T: Scalar + Float + FromPrimitive,
{
    evolve_moments_observed(g0, p, t, tol, |_, _| {})
}

/// As [`evolve_moments`], reporting `(t, g)` after every accepted step.
pub fn evolve_moments_observed<T, O>(
    g0: &MomentVector<T>,
    p: &TraceParams,
    t: T,
    tol: T,
    observer: O,
) -> Result<MomentVector<T>>
where
    T: Scalar + Float + FromPrimitive,
    O: FnMut(T, &[T]),
{
    if !(t >= T::zero()) {
        return Err(Error::InvalidParameter("evolution time must be nonnegative".into()));
    }
    if !(tol > T::zero()) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let c = FlowCoefficients::<T>::from_params(p)
        .ok_or_else(|| Error::InvalidParameter("trace parameters not representable".into()))?;
    let drift = T::from_f64(1e-9).expect("representable") * (T::one() + c.sum.abs());
    if (g0.g0 - c.sum).abs() > drift {
        return Err(Error::InvalidParameter("stored g0 does not equal α+β".into()));
    }
    if g0.g.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("moments must be finite".into()));
    }
    let y = integrate(|_, y, d| moment_rhs(y, &c, d), T::zero(), &g0.g, t, &OdeConfig::with_tol(tol), observer)?;
    Ok(MomentVector::new(g0.g0, y))
}

/// Moment vectors at each of the increasing times in `times`.
pub fn evolve_on_grid(
    g0: &MomentVector<f64>,
    p: &TraceParams,
    times: &[f64],
    tol: f64,
) -> Result<Vec<MomentVector<f64>>> {
    let mut out = Vec::with_capacity(times.len());
    let mut current = g0.clone();
    let mut t_prev = 0.0;
    for &t in times {
        if t < t_prev {
            return Err(Error::InvalidParameter("times must be nondecreasing".into()));
        }
        current = evolve_moments(&current, p, t - t_prev, tol)?;
        t_prev = t;
        out.push(current.clone());
    }
    Ok(out)
}

/// Closed form of the first moment: `g1(0) e^{−t} + αβ (1 − e^{−t})`.
pub fn g1_closed_form<T: Float>(g1_0: T, alpha: T, beta: T, t: T) -> T {
    let e = (-t).exp();
    g1_0 * e + alpha * beta * (T::one() - e)
}

/// Moments of the free unitary Brownian motion:
/// `τ(u_t^k) = e^{−kt/2} Σ_{j=0}^{k−1} (−t)^j/j! · C(k, j+1) · k^{j−1}`.
pub fn fubm_moment(k: u32, t: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let kf = k as f64;
    let mut sum = 0.0;
    let mut term = 1.0 / kf; // (−t)^j/j! · k^{j−1} at j = 0
    let mut binom = kf; // C(k, j+1) at j = 0
    for j in 0..k {
        sum += term * binom;
        let jf = j as f64;
        term *= -t * kf / (jf + 1.0);
        binom *= (kf - jf - 1.0) / (jf + 2.0);
    }
    (-kf * t / 2.0).exp() * sum
}
