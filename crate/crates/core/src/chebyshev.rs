//! Densities sampled on Chebyshev–Gauss nodes of an interval `[lo, hi]`.
//!
//! A density `ρ` is represented through `q(x) = ρ(x)·√((x−lo)(hi−x))`, the
//! density with its square-root endpoint weight absorbed. On the nodes
//! `x_k = lo + (hi−lo)(1+cos θ_k)/2`, `θ_k = (2k+1)π/(2n)`, the values of `q`
//! define a degree `n−1` interpolant `q(s) = Σ c_j T_j(s)` in the reduced
//! variable `s = (2x−lo−hi)/(hi−lo)`. Every linear functional used by the
//! crate — mass, moments, Cauchy transform, log potential, self-energy — is
//! then available in closed form for the interpolant:
//!
//! * `∫ T_j(s) / (√(1−s²)(ζ−s)) ds = π r^j / S`, with `S = √(ζ−1)√(ζ+1)` and
//!   `r = ζ − S = 1/(ζ+S)`;
//! * `∫ ln|ζ−s| T_j(s)/√(1−s²) ds = π ln|(ζ+S)/2|` for `j = 0` and
//!   `−(π/j) Re r^j` for `j ≥ 1`.
//!
//! These formulas remain exact arbitrarily close to the support, which is what
//! boundary-value computations (Hilbert transforms, subordination on the real
//! line) need.

use crate::error::{Error, Result};
use crate::Complex;
use std::f64::consts::PI;

/// Chebyshev–Gauss angle of the `k`-th node in increasing-`x` order.
#[inline]
pub fn node_angle(k: usize, n: usize) -> f64 {
    (2 * (n - 1 - k) + 1) as f64 * PI / (2 * n) as f64
}

/// Chebyshev–Gauss nodes on `[lo, hi]`, strictly increasing.
pub fn nodes(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * 0.5 * (1.0 + node_angle(k, n).cos())).collect()
}

/// One density piece on Chebyshev–Gauss nodes of `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevPiece {
    lo: f64,
    hi: f64,
    values: Vec<f64>,
    coeffs: Vec<f64>,
}

impl ChebyshevPiece {
    /// Builds a piece from density values at the nodes of [`nodes`].
    pub fn from_values(lo: f64, hi: f64, values: Vec<f64>) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidParameter(format!("empty interval [{lo}, {hi}]")));
        }
        if values.is_empty() {
            return Err(Error::InvalidParameter("Chebyshev piece needs at least one node".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite density value {v}")));
        }
        let n = values.len();
        let half = 0.5 * (hi - lo);
        let q: Vec<f64> = (0..n).map(|k| values[k] * half * node_angle(k, n).sin()).collect();
        let coeffs = chebyshev_coefficients(&q);
        Ok(Self { lo, hi, values, coeffs })
    }

    /// Samples a density function at the nodes.
    pub fn from_density(lo: f64, hi: f64, n: usize, rho: impl Fn(f64) -> f64) -> Result<Self> {
        let values = nodes(lo, hi, n).into_iter().map(rho).collect();
        Self::from_values(lo, hi, values)
    }

    /// Samples the weighted density `q(x) = ρ(x)√((x−lo)(hi−x))` at the nodes.
    /// Use this for densities with inverse-square-root endpoint blow-up.
    pub fn from_weighted(lo: f64, hi: f64, n: usize, q: impl Fn(f64) -> f64) -> Result<Self> {
        let half = 0.5 * (hi - lo);
        let values = (0..n)
            .map(|k| {
                let th = node_angle(k, n);
                let x = lo + half * (1.0 + th.cos());
                q(x) / (half * th.sin())
            })
            .collect();
        Self::from_values(lo, hi, values)
    }

    /// Builds a piece from weighted values `q(x_k)` at the nodes.
    pub fn from_weighted_values(lo: f64, hi: f64, q: &[f64]) -> Result<Self> {
        let n = q.len();
        let half = 0.5 * (hi - lo);
        let values = q.iter().enumerate().map(|(k, v)| v / (half * node_angle(k, n).sin())).collect();
        Self::from_values(lo, hi, values)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Density values at the nodes.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Chebyshev coefficients of the weighted density `q`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn nodes(&self) -> Vec<f64> {
        nodes(self.lo, self.hi, self.len())
    }

    /// Quadrature weights: `∫ f ρ dx ≈ Σ_k w_k f(x_k) ρ(x_k)`.
    pub fn weights(&self) -> Vec<f64> {
        let n = self.len();
        let half = 0.5 * (self.hi - self.lo);
        (0..n).map(|k| PI / n as f64 * half * node_angle(k, n).sin()).collect()
    }

    /// Total mass `π c_0`.
    pub fn mass(&self) -> f64 {
        PI * self.coeffs[0]
    }

    /// `∫ f dρ` by the Gauss–Chebyshev rule attached to the nodes.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes().iter().zip(self.weights()).zip(&self.values).map(|((&x, w), &v)| w * v * f(x)).sum()
    }

    /// Weighted density `q` of the interpolant at `x ∈ [lo, hi]`.
    pub fn weighted_at(&self, x: f64) -> f64 {
        clenshaw(&self.coeffs, self.reduce_real(x).clamp(-1.0, 1.0))
    }

    /// Interpolated density at `x`; zero outside `[lo, hi]`.
    pub fn density_at(&self, x: f64) -> f64 {
        if x <= self.lo || x >= self.hi {
            return 0.0;
        }
        self.weighted_at(x) / ((x - self.lo) * (self.hi - x)).sqrt()
    }

    /// Resamples the interpolant on `n` nodes (exact when `n ≥ len`).
    pub fn resample(&self, n: usize) -> Result<Self> {
        Self::from_weighted(self.lo, self.hi, n, |x| self.weighted_at(x))
    }

    fn reduce_real(&self, x: f64) -> f64 {
        (2.0 * x - self.lo - self.hi) / (self.hi - self.lo)
    }

    fn reduce(&self, z: Complex) -> Complex {
        (z * 2.0 - (self.lo + self.hi)) / (self.hi - self.lo)
    }

    /// `S = √(ζ−1)√(ζ+1)` with the upper-boundary convention on `(−1, 1)`.
    fn root(zeta: Complex) -> Result<Complex> {
        if zeta.im == 0.0 {
            let s = zeta.re;
            if s.abs() < 1.0 {
                return Ok(Complex::new(0.0, (1.0 - s * s).sqrt()));
            }
            if s.abs() == 1.0 {
                return Err(Error::Domain("evaluation at a piece endpoint".into()));
            }
        }
        Ok((zeta - 1.0).sqrt() * (zeta + 1.0).sqrt())
    }

    /// Cauchy transform `∫ ρ(x)/(z−x) dx`. Real `z` inside `(lo, hi)` yields
    /// the boundary value from the upper half-plane.
    pub fn cauchy(&self, z: Complex) -> Result<Complex> {
        let zeta = self.reduce(z);
        let s = Self::root(zeta)?;
        let r = (zeta + s).inv();
        let p = horner(&self.coeffs, r);
        Ok(p / s * (2.0 * PI / (self.hi - self.lo)))
    }

    /// Cauchy transform together with its `z`-derivative.
    pub fn cauchy_with_derivative(&self, z: Complex) -> Result<(Complex, Complex)> {
        let zeta = self.reduce(z);
        let s = Self::root(zeta)?;
        let r = (zeta + s).inv();
        let (p, dp) = horner_with_derivative(&self.coeffs, r);
        let scale = 2.0 / (self.hi - self.lo);
        let g = p / s * (PI * scale);
        // d/dζ [r^j / S] = −r^j (j/S² + ζ/S³)
        let jsum = dp * r;
        let dg = -(jsum / (s * s) + p * zeta / (s * s * s)) * (PI * scale * scale);
        Ok((g, dg))
    }

    /// Logarithmic potential `∫ ln|y−x| ρ(x) dx` at a real point `y`.
    pub fn log_potential(&self, y: f64) -> f64 {
        let zeta = Complex::new(self.reduce_real(y), 0.0);
        let s = if zeta.re.abs() <= 1.0 {
            Complex::new(0.0, (1.0 - zeta.re * zeta.re).max(0.0).sqrt())
        } else {
            (zeta - 1.0).sqrt() * (zeta + 1.0).sqrt()
        };
        let w = zeta + s;
        let r = w.inv();
        let half = 0.5 * (self.hi - self.lo);
        let mut acc = self.mass() * half.ln() + PI * self.coeffs[0] * (w.norm() / 2.0).ln();
        let mut rj = Complex::new(1.0, 0.0);
        for (j, c) in self.coeffs.iter().enumerate().skip(1) {
            rj *= r;
            acc -= PI / j as f64 * c * rj.re;
        }
        acc
    }

    /// Self-energy `∬ ln|x−y| ρ(x)ρ(y) dx dy`, exact for the interpolant:
    /// `m² ln(L/2) − (π²/2) Σ_{j≥1} c_j²/j`, with `L = (hi−lo)/2`.
    pub fn self_energy(&self) -> f64 {
        let m = self.mass();
        let half = 0.5 * (self.hi - self.lo);
        let tail: f64 = self.coeffs.iter().enumerate().skip(1).map(|(j, c)| c * c / j as f64).sum();
        m * m * (half / 2.0).ln() - 0.5 * PI * PI * tail
    }
}

/// Discrete cosine coefficients of values at Chebyshev–Gauss nodes ordered by
/// increasing `x` (i.e. decreasing angle).
fn chebyshev_coefficients(q: &[f64]) -> Vec<f64> {
    let n = q.len();
    // cos(j θ_k) with θ_k = (2m+1)π/(2n) depends only on j(2m+1) mod 4n.
    let table: Vec<f64> = (0..4 * n).map(|i| (i as f64 * PI / (2 * n) as f64).cos()).collect();
    let mut c = vec![0.0; n];
    for (j, cj) in c.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, qk) in q.iter().enumerate() {
            let m = n - 1 - k;
            acc += qk * table[(j * (2 * m + 1)) % (4 * n)];
        }
        *cj = acc * 2.0 / n as f64;
    }
    c[0] *= 0.5;
    c
}

/// `Σ c_j T_j(s)` by Clenshaw's recurrence.
pub fn clenshaw(c: &[f64], s: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &cj in c.iter().skip(1).rev() {
        let b0 = 2.0 * s * b1 - b2 + cj;
        b2 = b1;
        b1 = b0;
    }
    c[0] + s * b1 - b2
}

fn horner(c: &[f64], r: Complex) -> Complex {
    c.iter().rev().fold(Complex::new(0.0, 0.0), |acc, &cj| acc * r + cj)
}

/// Returns `(p(r), p'(r))` for `p(r) = Σ c_j r^j`.
fn horner_with_derivative(c: &[f64], r: Complex) -> (Complex, Complex) {
    let mut p = Complex::new(0.0, 0.0);
    let mut dp = Complex::new(0.0, 0.0);
    for &cj in c.iter().rev() {
        dp = dp * r + p;
        p = p * r + cj;
    }
    (p, dp)
}
