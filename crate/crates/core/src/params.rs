//! Trace parameters of a projection pair.

use crate::error::{Error, Result};

/// Traces `α = τ(p)`, `β = τ(q)` of two projections together with the traces
/// of the four intersections `p∧q`, `p∧q⊥`, `p⊥∧q`, `p⊥∧q⊥`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceParams {
    alpha: f64,
    beta: f64,
    a11: f64,
    a10: f64,
    a01: f64,
    a00: f64,
}

impl TraceParams {
    /// Parameters of a pair in general position: the intersection traces take
    /// their minimal values `max{α+β−1,0}`, `max{α−β,0}`, `max{β−α,0}`,
    /// `max{1−α−β,0}`.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        check_unit("alpha", alpha)?;
        check_unit("beta", beta)?;
        Ok(Self {
            alpha,
            beta,
            a11: (alpha + beta - 1.0).max(0.0),
            a10: (alpha - beta).max(0.0),
            a01: (beta - alpha).max(0.0),
            a00: (1.0 - alpha - beta).max(0.0),
        })
    }

    /// Parameters with explicitly supplied intersection traces
    /// `(α11, α10, α01, α00)`. No zero pattern is enforced here; consumers
    /// that need general position check it themselves.
    pub fn with_intersections(alpha: f64, beta: f64, a: [f64; 4]) -> Result<Self> {
        check_unit("alpha", alpha)?;
        check_unit("beta", beta)?;
        for (name, v) in ["a11", "a10", "a01", "a00"].iter().zip(a) {
            check_unit(name, v)?;
        }
        Ok(Self { alpha, beta, a11: a[0], a10: a[1], a01: a[2], a00: a[3] })
    }

    /// The symmetric pair `α = β = ½`.
    pub fn half() -> Self {
        Self::new(0.5, 0.5).expect("1/2 is admissible")
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `min{α, β}`: the mass of the moving part of the spectral measure.
    pub fn min(&self) -> f64 {
        self.alpha.min(self.beta)
    }

    /// Drift coefficient `a = 2·min{α,β} − 1`.
    pub fn a(&self) -> f64 {
        2.0 * self.min() - 1.0
    }

    /// Drift coefficient `b = |α − β|`.
    pub fn b(&self) -> f64 {
        (self.alpha - self.beta).abs()
    }

    pub fn a11(&self) -> f64 {
        self.a11
    }

    pub fn a10(&self) -> f64 {
        self.a10
    }

    pub fn a01(&self) -> f64 {
        self.a01
    }

    pub fn a00(&self) -> f64 {
        self.a00
    }

    /// True when `α00·α11 = α10·α01 = 0`.
    pub fn in_general_position(&self) -> bool {
        self.a00 * self.a11 == 0.0 && self.a10 * self.a01 == 0.0
    }

    /// True for the trace-½ case in which the subordination machinery applies.
    pub fn is_half(&self) -> bool {
        self.alpha == 0.5 && self.beta == 0.5
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {v} is not in [0, 1]")))
    }
}
