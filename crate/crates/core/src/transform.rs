//! Cauchy transforms of the flow: the moment series, Stieltjes inversion, the
//! steady state and its Jacobi law, the transport PDE and contour masses.
//!
//! The shifted transform `G(t,z) = G_{μ_t}(z) − (1−min{α,β})/z` is the Cauchy
//! transform of the moving part `ν_t` and satisfies
//! `∂_t G = ∂_z [ z(z−1) G² − (az+b) G ]`.

use crate::chebyshev::ChebyshevPiece;
use crate::error::{Error, Result};
use crate::measures::{Atom, DensityGrid, DensityPiece, SpectralMeasure, ATOM_FLOOR};
use crate::moment_flow::{evolve_moments, MomentVector};
use crate::params::TraceParams;
use crate::Complex;
use std::f64::consts::PI;

/// Radius margin required by the moment series: `|z| ≥ 1 + SERIES_MARGIN`.
pub const SERIES_MARGIN: f64 = 1e-3;

/// Jacobi densities are clipped to zero this close to the support edges.
pub const EDGE_CLIP: f64 = 1e-12;

/// Tolerance below which a negative inverted density is reported.
pub const NEGATIVE_DENSITY_TOL: f64 = 1e-6;

/// Distances `ε` at which `G(x+iε)` is sampled, and the degree of the
/// polynomial extrapolation to `ε = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonSchedule {
    levels: Vec<f64>,
    order: usize,
}

impl EpsilonSchedule {
    /// Uses the `order + 1` smallest of the given positive levels.
    pub fn new(mut levels: Vec<f64>, order: usize) -> Result<Self> {
        if levels.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::InvalidParameter("epsilon levels must be positive".into()));
        }
        levels.sort_by(|a, b| b.total_cmp(a));
        levels.dedup();
        if levels.len() < order + 1 {
            return Err(Error::InvalidParameter(format!(
                "order {order} extrapolation needs {} distinct levels",
                order + 1
            )));
        }
        let keep = levels.split_off(levels.len() - (order + 1));
        Ok(Self { levels: keep, order })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Extrapolates `f(ε)` to `ε = 0` (Neville's scheme).
    pub fn extrapolate<T>(&self, mut f: impl FnMut(f64) -> Result<T>) -> Result<T>
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Sub<Output = T> + std::ops::Add<Output = T>,
    {
        let eps = &self.levels;
        let mut p: Vec<T> = eps.iter().map(|&e| f(e)).collect::<Result<_>>()?;
        let n = p.len();
        for m in 1..n {
            for i in 0..n - m {
                let (ei, ej) = (eps[i], eps[i + m]);
                // value at 0 of the line through (ei, p[i+1]) and (ej, p[i])
                p[i] = p[i + 1] * (ei / (ei - ej)) - p[i] * (ej / (ei - ej));
            }
        }
        Ok(p[0])
    }
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self { levels: vec![1e-2, 5e-3, 2.5e-3], order: 2 }
    }
}

/// Cauchy transform `∫ dm(x)/(z−x)` of a measure.
pub fn cauchy(m: &SpectralMeasure, z: Complex) -> Result<Complex> {
    m.cauchy(z)
}

/// Truncated Laurent series `min/z + Σ_{n=1}^{N} g_n / z^{n+1}` of the shifted
/// transform, valid for `|z| ≥ 1 + SERIES_MARGIN`.
pub fn shifted_g_series(g: &MomentVector<f64>, p: &TraceParams, z: Complex) -> Result<Complex> {
    if z.norm() < 1.0 + SERIES_MARGIN {
        return Err(Error::Domain(format!("|z| = {} is inside the series disc", z.norm())));
    }
    let w = z.inv();
    let mut acc = Complex::new(0.0, 0.0);
    for gn in g.moments().iter().rev() {
        acc = (acc + gn) * w;
    }
    Ok((acc + p.min()) * w)
}

/// Bound on the truncation error of [`shifted_g_series`] at modulus `r`
/// (moments of the moving part never exceed its mass).
pub fn series_tail_bound(order: usize, p: &TraceParams, r: f64) -> f64 {
    p.min() * r.powi(-(order as i32) - 2) / (1.0 - 1.0 / r)
}

/// Shifted transform `G(t, z)` built from moments evolved from `g0`.
pub fn moment_series_field(g0: &MomentVector<f64>, p: &TraceParams, t: f64, z: Complex, tol: f64) -> Result<Complex> {
    let g = evolve_moments(g0, p, t, tol)?;
    shifted_g_series(&g, p, z)
}

/// Density `−(1/π) lim Im G(x+iε)` by polynomial extrapolation in `ε`.
/// Small negative values within [`NEGATIVE_DENSITY_TOL`] are clipped to zero.
pub fn stieltjes_density(g: impl Fn(Complex) -> Result<Complex>, x: f64, sched: &EpsilonSchedule) -> Result<f64> {
    let v = sched.extrapolate(|e| Ok(-g(Complex::new(x, e))?.im / PI))?;
    if v < -NEGATIVE_DENSITY_TOL {
        return Err(Error::NegativeDensity { x, value: v });
    }
    Ok(v.max(0.0))
}

/// Hilbert transform `(1/π) p.v. ∫ ρ(y)/(x−y) dy` as `(1/π) Re G(x+i0)` with
/// the same extrapolation in `ε`.
pub fn hilbert(rho: &DensityGrid, x: f64, sched: &EpsilonSchedule) -> Result<f64> {
    sched.extrapolate(|e| Ok(rho.cauchy(Complex::new(x, e))?.re / PI))
}

/// Edges `r± = α+β−2αβ ± 2√(αβ(1−α)(1−β))` of the Jacobi support.
pub fn jacobi_edges(p: &TraceParams) -> (f64, f64) {
    let (a, b) = (p.alpha(), p.beta());
    let c = a + b - 2.0 * a * b;
    let s = 2.0 * (a * b * (1.0 - a) * (1.0 - b)).sqrt();
    ((c - s).max(0.0), (c + s).min(1.0))
}

/// Absolutely continuous part of the Jacobi law,
/// `√((r+−x)(x−r−)) / (2π x(1−x))` on `[r−, r+]`, clipped near the edges.
pub fn jacobi_density(p: &TraceParams, x: f64) -> f64 {
    let (lo, hi) = jacobi_edges(p);
    if x <= lo + EDGE_CLIP || x >= hi - EDGE_CLIP {
        return 0.0;
    }
    ((hi - x) * (x - lo)).sqrt() / (2.0 * PI * x * (1.0 - x))
}

/// Limit law `μ_∞ = (1−min)δ₀ + max{α+β−1,0}δ₁ + density` (`μ`-level), the
/// density sampled on `n` Chebyshev–Gauss nodes of `[r−, r+]`.
pub fn jacobi_limit(p: &TraceParams, n: usize) -> Result<SpectralMeasure> {
    let (lo, hi) = jacobi_edges(p);
    let atoms = vec![
        Atom { location: 0.0, mass: 1.0 - p.min() },
        Atom { location: 1.0, mass: (p.alpha() + p.beta() - 1.0).max(0.0) },
    ];
    let grid = if hi - lo > ATOM_FLOOR {
        let piece = ChebyshevPiece::from_weighted(lo, hi, n, |x| (hi - x) * (x - lo) / (2.0 * PI * x * (1.0 - x)))?;
        DensityGrid::new(vec![DensityPiece::Chebyshev(piece)])?
    } else {
        DensityGrid::empty()
    };
    SpectralMeasure::new(atoms, grid)
}

/// Stationary shifted transform: the root of
/// `z(z−1)G² − (az+b)G − m(1−m) = 0`, `m = min{α,β}`, with `G ~ m/z` at
/// infinity, i.e. `((az+b) + √((z−r+)(z−r−))) / (2z(z−1))`.
pub fn steady_g(p: &TraceParams, z: Complex) -> Result<Complex> {
    let (lo, hi) = jacobi_edges(p);
    let root = (z - hi).sqrt() * (z - lo).sqrt();
    if root.norm() < 1e-14 {
        return Err(Error::BranchAmbiguity(format!("z = {z} is a support edge")));
    }
    let den = z * (z - 1.0) * 2.0;
    if den.norm() == 0.0 {
        return Err(Error::PoleAtZ(z.re));
    }
    Ok((z * p.a() + p.b() + root) / den)
}

/// Finite-difference residual of the transport PDE,
/// `∂_t G − ∂_z[z(z−1)G² − (az+b)G]`, with central differences of step `h`
/// refined once by Richardson extrapolation (`h` and `h/2`).
pub fn pde_residual(
    g: impl Fn(f64, Complex) -> Result<Complex>,
    p: &TraceParams,
    t: f64,
    z: Complex,
    h: f64,
) -> Result<Complex> {
    if !(h > 0.0 && t - h >= 0.0) {
        return Err(Error::InvalidParameter(format!("step {h} incompatible with t = {t}")));
    }
    let flux = |w: Complex| -> Result<Complex> {
        let v = g(t, w)?;
        Ok(w * (w - 1.0) * v * v - (w * p.a() + p.b()) * v)
    };
    let residual = |h: f64| -> Result<Complex> {
        let dt = (g(t + h, z)? - g(t - h, z)?) / (2.0 * h);
        let dz = (flux(z + h)? - flux(z - h)?) / (2.0 * h);
        Ok(dt - dz)
    };
    let (r1, r2) = (residual(h)?, residual(h / 2.0)?);
    Ok((r2 * 4.0 - r1) / 3.0)
}

/// Velocity `2G x(1−x) + a x + b` of a support edge (characteristic speed).
pub fn edge_velocity(g: f64, x: f64, p: &TraceParams) -> f64 {
    2.0 * g * x * (1.0 - x) + p.a() * x + p.b()
}

/// Mass enclosed by the circle `|z − center| = radius`:
/// `(1/2πi) ∮ G dz` by the `n`-point trapezoidal rule (offset by half a step
/// so no node lies on the real axis).
pub fn contour_mass(g: impl Fn(Complex) -> Result<Complex>, center: f64, radius: f64, n: usize) -> Result<f64> {
    if !(radius > 0.0) || n < 4 {
        return Err(Error::InvalidParameter("contour needs a positive radius and at least 4 nodes".into()));
    }
    let mut acc = Complex::new(0.0, 0.0);
    for k in 0..n {
        let th = 2.0 * PI * (k as f64 + 0.5) / n as f64;
        let e = Complex::from_polar(radius, th);
        acc += g(Complex::new(center, 0.0) + e)? * e;
    }
    Ok(acc.re / n as f64)
}
