//! Subordination for the trace-½ flow.
//!
//! With `α = β = ½` write `H(z) = √z√(z−1) G(z)` for the shifted transform of
//! `ν` and let `M(w) = ½e^{−2w}(e^{2w}+½)²`, `L = M^{−1}` on the strip
//! `S = {Re w > ½ln½, 0 < Im w < π/2}`, so that `L(z) = ½ln(z−½+√z√(z−1))`.
//! The transform of `ν_t` is subordinated to that of `ν_0`:
//!
//! ```text
//! H_t(z) = H_0(f_t(z)),   L(f_t(z)) = L(z) + t H_0(f_t(z)).
//! ```
//!
//! The fixed point is solved in the strip coordinate `ℓ = L(f_t(z))`, i.e.
//! `ℓ = L(z) + t H_0(M(ℓ))`. Working in `ℓ` keeps the unknown bounded (the
//! point `f_t(z)` itself grows like `e^t`), removes every logarithm from the
//! iteration, and turns the constraint `f_t(z) ∈ ℂ⁺` into `ℓ ∈ S`.
//!
//! Each solve is a damped Newton iteration with backtracking that keeps `ℓ`
//! inside the closed strip, falling back to damped Picard iteration
//! `ℓ ← (1−λ)ℓ + λ(L(z) + tH_0(M(ℓ)))` with `λ` halved on failure. Far targets
//! are reached by continuation in `t` (Euler predictor along
//! `dℓ/dt = H/(1 − tH_0'M')`), and real boundary points by continuation in
//! `ε` along `x + iε`.

use crate::chebyshev::{self, ChebyshevPiece};
use crate::error::{Error, Result};
use crate::measures::{DensityGrid, DensityPiece, SpectralMeasure};
use crate::Complex;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

/// Left boundary `½ ln ½` of the strip.
pub const STRIP_LEFT: f64 = -0.346_573_590_279_972_65;

/// Default fixed-point tolerance.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Distances of the boundary approach `x + iε`.
pub const EPSILON_LADDER: [f64; 5] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

const MAX_NEWTON: usize = 60;
const MAX_PICARD: usize = 500;
const MIN_LAMBDA: f64 = 1.0 / 64.0;
const MIN_DT: f64 = 1e-9;

/// `M(w) = ½e^{2w} + ½ + ⅛e^{−2w}`.
pub fn map_m(w: Complex) -> Complex {
    let e = (w * 2.0).exp();
    e * 0.5 + 0.5 + e.inv() * 0.125
}

/// `M'(w) = e^{2w} − ¼e^{−2w}`.
pub fn map_m_derivative(w: Complex) -> Complex {
    let e = (w * 2.0).exp();
    e - e.inv() * 0.25
}

/// `√z √(z−1)` with the upper-boundary convention on `[0, 1]`; analytic on
/// `ℂ ∖ [0, 1]`.
pub fn sqrt_prod(z: Complex) -> Complex {
    if z.im == 0.0 && (0.0..=1.0).contains(&z.re) {
        return Complex::new(0.0, (z.re * (1.0 - z.re)).sqrt());
    }
    z.sqrt() * (z - 1.0).sqrt()
}

/// `L(z) = ½ ln(z − ½ + √z√(z−1))`, the inverse of `M` on the strip.
/// Real points of `(0, 1]` are read as upper boundary values; real `z ≤ 0`
/// lie on the cut.
pub fn map_l(z: Complex) -> Result<Complex> {
    if z.im == 0.0 && z.re <= 0.0 {
        return Err(Error::BranchCut(format!("{z}")));
    }
    Ok((z - 0.5 + sqrt_prod(z)).ln() * 0.5)
}

/// Upper boundary value of `L` at `x ∈ [0, 1]`: `½ln½ + i·arccos(2x−1)/2`.
pub fn map_l_edge(x: f64) -> Complex {
    Complex::new(STRIP_LEFT, 0.5 * (2.0 * x - 1.0).clamp(-1.0, 1.0).acos())
}

/// `L'(z) = 1 / (2√z√(z−1))`.
pub fn map_l_derivative(z: Complex) -> Complex {
    (sqrt_prod(z) * 2.0).inv()
}

/// Whether `w` lies in the open strip `S`.
pub fn in_strip(w: Complex) -> bool {
    w.re > STRIP_LEFT && w.im > 0.0 && w.im < FRAC_PI_2
}

fn in_closed_strip(w: Complex) -> bool {
    const SLACK: f64 = 1e-13;
    w.re >= STRIP_LEFT - SLACK && w.im >= -SLACK && w.im <= FRAC_PI_2 + SLACK
}

/// `H_0(z) = √z√(z−1) G_{ν₀}(z)`.
pub fn h0_eval(nu0: &SpectralMeasure, z: Complex) -> Result<Complex> {
    Ok(sqrt_prod(z) * nu0.cauchy(z)?)
}

/// `H_0` and its derivative.
pub fn h0_with_derivative(nu0: &SpectralMeasure, z: Complex) -> Result<(Complex, Complex)> {
    let s = sqrt_prod(z);
    let (g, dg) = nu0.cauchy_with_derivative(z)?;
    let ds = (z * 2.0 - 1.0) / (s * 2.0);
    Ok((s * g, ds * g + s * dg))
}

/// Trace-½ subordination problem: initial moving part `ν₀` (mass ½) and time.
#[derive(Debug, Clone)]
pub struct SubordinationProblem {
    nu0: SpectralMeasure,
    t: f64,
    tol: f64,
}

impl SubordinationProblem {
    pub fn new(nu0: SpectralMeasure, t: f64) -> Result<Self> {
        let mass = nu0.total_mass();
        if (mass - 0.5).abs() > 1e-10 {
            return Err(Error::MassMismatch { expected: 0.5, found: mass });
        }
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!("time {t} must be finite and nonnegative")));
        }
        Ok(Self { nu0, t, tol: DEFAULT_TOL })
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn nu0(&self) -> &SpectralMeasure {
        &self.nu0
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Same initial measure, different time.
    pub fn at_time(&self, t: f64) -> Result<Self> {
        Ok(Self::new(self.nu0.clone(), t)?.with_tol(self.tol))
    }

    /// Semigroup restart: re-poses the problem from `ν_{t0}`, sampled from its
    /// boundary values on `n` Chebyshev–Gauss nodes of `[0, 1]`, with the
    /// remaining time `t − t0`. Useful when `ν₀` is singular and `ν_{t0}` is
    /// already smooth.
    pub fn restarted(&self, t0: f64, n: usize) -> Result<Self> {
        if !(t0 > 0.0 && t0 < self.t) {
            return Err(Error::InvalidParameter(format!("restart time {t0} not in (0, {})", self.t)));
        }
        let mut sweep = BoundarySweep::new(self.nu0.clone(), chebyshev::nodes(0.0, 1.0, n), self.tol);
        let states = sweep.at(t0)?;
        // q = ρ √(x(1−x)) = Re H / π
        let q: Vec<f64> = states.iter().map(|s| (s.h.re / PI).max(0.0)).collect();
        let piece = ChebyshevPiece::from_weighted_values(0.0, 1.0, &q)?;
        let grid = DensityGrid::new(vec![DensityPiece::Chebyshev(piece)])?;
        let m = grid.mass();
        let nu = SpectralMeasure::new(vec![], grid.scaled(0.5 / m)?)?;
        Ok(Self::new(nu, self.t - t0)?.with_tol(self.tol))
    }
}

/// Solution of the fixed point at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubordinationState {
    /// `f_t(z)`.
    pub f: Complex,
    /// `H_t(z) = H_0(f_t(z))`.
    pub h: Complex,
    /// Strip coordinate `ℓ = L(f_t(z))`.
    pub ell: Complex,
    /// Total iterations spent (Newton and Picard, over all continuation steps).
    pub iterations: usize,
    pub converged: bool,
}

/// Where `L(z)` is taken.
#[derive(Debug, Clone, Copy)]
enum Anchor {
    Interior(Complex),
    Edge(f64),
}

impl Anchor {
    fn l(&self) -> Result<Complex> {
        match *self {
            Anchor::Interior(z) => map_l(z),
            Anchor::Edge(x) => Ok(map_l_edge(x)),
        }
    }
}

struct Solver<'a> {
    nu0: &'a SpectralMeasure,
    tol: f64,
    iterations: usize,
}

impl<'a> Solver<'a> {
    fn residual(&self, ell: Complex, lz: Complex, t: f64) -> Result<(Complex, Complex)> {
        let h = h0_eval(self.nu0, map_m(ell))?;
        Ok((ell - lz - h * t, h))
    }

    fn converged(&self, f: Complex, ell: Complex) -> bool {
        f.norm() <= self.tol * ell.norm().max(1.0)
    }

    /// Newton with strip-preserving backtracking.
    fn newton(&mut self, mut ell: Complex, lz: Complex, t: f64) -> Option<Complex> {
        let (mut f, _) = self.residual(ell, lz, t).ok()?;
        for _ in 0..MAX_NEWTON {
            self.iterations += 1;
            if self.converged(f, ell) {
                return Some(ell);
            }
            let zeta = map_m(ell);
            let (_, dh) = h0_with_derivative(self.nu0, zeta).ok()?;
            let jac = Complex::new(1.0, 0.0) - dh * map_m_derivative(ell) * t;
            let step = f / jac;
            if !step.is_finite() {
                return None;
            }
            let mut lambda = 1.0;
            loop {
                let trial = ell - step * lambda;
                if in_closed_strip(trial) {
                    if let Ok((ft, _)) = self.residual(trial, lz, t) {
                        if ft.is_finite() && ft.norm() < f.norm() * (1.0 - 1e-4 * lambda) + 1e-300 {
                            ell = trial;
                            f = ft;
                            break;
                        }
                    }
                }
                lambda *= 0.5;
                if lambda < 1e-10 {
                    return None;
                }
            }
        }
        self.converged(f, ell).then_some(ell)
    }

    /// Damped Picard iteration in the strip coordinate.
    fn picard(&mut self, start: Complex, lz: Complex, t: f64) -> Option<Complex> {
        let mut lambda = 1.0;
        while lambda >= MIN_LAMBDA {
            let mut ell = start;
            let mut ok = false;
            for _ in 0..MAX_PICARD {
                self.iterations += 1;
                let Ok((f, h)) = self.residual(ell, lz, t) else { break };
                if self.converged(f, ell) {
                    ok = true;
                    break;
                }
                let next = ell * (1.0 - lambda) + (lz + h * t) * lambda;
                if !next.is_finite() || !in_closed_strip(next) {
                    break;
                }
                ell = next;
            }
            if ok {
                return Some(ell);
            }
            lambda *= 0.5;
        }
        None
    }

    fn solve(&mut self, start: Complex, lz: Complex, t: f64) -> Option<Complex> {
        self.newton(start, lz, t).or_else(|| self.picard(start, lz, t))
    }

    /// `dℓ/dt` at a solution.
    fn tangent(&self, ell: Complex, t: f64) -> Option<Complex> {
        let zeta = map_m(ell);
        let (h, dh) = h0_with_derivative(self.nu0, zeta).ok()?;
        let v = h / (Complex::new(1.0, 0.0) - dh * map_m_derivative(ell) * t);
        v.is_finite().then_some(v)
    }

    /// Continuation in time from a solution `ell0` at `t0` to `t1 ≥ t0`.
    fn continue_in_time(&mut self, mut ell: Complex, lz: Complex, mut t: f64, t1: f64) -> Result<Complex> {
        let mut dt = t1 - t;
        while t < t1 {
            let step = dt.min(t1 - t);
            let guess = match self.tangent(ell, t) {
                Some(v) => {
                    let g = ell + v * step;
                    if in_closed_strip(g) {
                        g
                    } else {
                        ell
                    }
                }
                None => ell,
            };
            let next_t = if step >= t1 - t { t1 } else { t + step };
            match self.solve(guess, lz, next_t).or_else(|| self.solve(ell, lz, next_t)) {
                Some(e) => {
                    ell = e;
                    t = next_t;
                    dt = step * 2.0;
                }
                None => {
                    dt = step * 0.5;
                    if dt < MIN_DT * t1.max(1.0) {
                        let (f, _) = self.residual(ell, lz, t)?;
                        return Err(Error::NoConvergence { iterations: self.iterations, residual: f.norm() });
                    }
                }
            }
        }
        Ok(ell)
    }

    fn state(&self, ell: Complex, converged: bool) -> Result<SubordinationState> {
        let f = map_m(ell);
        Ok(SubordinationState { f, h: h0_eval(self.nu0, f)?, ell, iterations: self.iterations, converged })
    }
}

/// Solves for `f_t(z)` and `H_t(z)` at a point off the real axis (or real
/// `z > 1`), by continuation in time from `t = 0`. Lower half-plane points are
/// handled by conjugate symmetry.
pub fn solve_subordinator(prob: &SubordinationProblem, z: Complex, tol: f64) -> Result<SubordinationState> {
    if z.im < 0.0 {
        let s = solve_subordinator(prob, z.conj(), tol)?;
        return Ok(SubordinationState { f: s.f.conj(), h: s.h.conj(), ell: s.ell.conj(), ..s });
    }
    if z.im == 0.0 && z.re <= 1.0 {
        return Err(Error::Domain(format!("{z} lies on the real support line; use density_at")));
    }
    let mut solver = Solver { nu0: &prob.nu0, tol, iterations: 0 };
    let lz = map_l(z)?;
    let ell = solver.continue_in_time(lz, lz, 0.0, prob.t)?;
    solver.state(ell, true)
}

/// Shifted transform `G_t(z) = H_t(z) / (√z√(z−1))` of `ν_t` at a point off
/// the real axis.
pub fn flow_cauchy(prob: &SubordinationProblem, z: Complex) -> Result<Complex> {
    let s = solve_subordinator(prob, z, prob.tol)?;
    Ok(s.h / sqrt_prod(z))
}

/// Upper boundary value of `H_t` at `x ∈ (0, 1)`: approach along `x + iε`
/// over [`EPSILON_LADDER`], then a final solve on the edge itself, accepted
/// only when it converges inside the closed strip.
pub fn boundary_state(prob: &SubordinationProblem, x: f64) -> Result<SubordinationState> {
    boundary_state_from(prob, x, None).map(|(s, _)| s)
}

/// Boundary solve; `hint` is a solution `(t0, ℓ)` on the first rung of the
/// ε-ladder at an earlier time. Also returns the first-rung solution at `t`.
///
/// Only interior solutions are continued in time: they are unique and smooth
/// in `t`. On the edge itself the fixed-point equation can have spurious
/// roots, and where the support edge sweeps past `x` the boundary value has a
/// square-root kink in `t`, so the edge is only ever entered from the last
/// rung of the ladder.
fn boundary_state_from(
    prob: &SubordinationProblem,
    x: f64,
    hint: Option<(f64, Complex)>,
) -> Result<(SubordinationState, Complex)> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("boundary point {x} outside (0, 1)")));
    }
    let t = prob.t;
    let mut solver = Solver { nu0: &prob.nu0, tol: prob.tol, iterations: 0 };
    let edge = Anchor::Edge(x).l()?;
    let top = Anchor::Interior(Complex::new(x, EPSILON_LADDER[0])).l()?;
    if t == 0.0 {
        return Ok((solver.state(edge, true)?, top));
    }
    let first = match hint {
        Some((t0, ell0)) if t0 <= t => {
            solver.continue_in_time(ell0, top, t0, t).or_else(|_| solver.continue_in_time(top, top, 0.0, t))?
        }
        _ => solver.continue_in_time(top, top, 0.0, t)?,
    };
    let mut ell = first;
    for eps in &EPSILON_LADDER[1..] {
        let lz = Anchor::Interior(Complex::new(x, *eps)).l()?;
        ell = match solver.solve(ell, lz, t) {
            Some(e) => e,
            None => solver.continue_in_time(lz, lz, 0.0, t)?,
        };
    }
    let state = match solver.newton(ell, edge, t) {
        Some(e) => solver.state(e, true)?,
        None => solver.state(ell, false)?,
    };
    Ok((state, first))
}

/// Density of `ν_t` at `x ∈ (0, 1)`: `Re H_t(x) / (π√(x(1−x)))`.
pub fn density_at(prob: &SubordinationProblem, x: f64) -> Result<f64> {
    let s = boundary_state(prob, x)?;
    Ok((s.h.re / (PI * (x * (1.0 - x)).sqrt())).max(0.0))
}

/// Whether `w` lies in `Ω_t = {w : L(w) − tH_0(w) ∈ S}`, the image of `f_t`.
pub fn in_omega(prob: &SubordinationProblem, w: Complex) -> Result<bool> {
    Ok(in_strip(map_l(w)? - h0_eval(&prob.nu0, w)? * prob.t))
}

/// Boundary values of `H_t` on a fixed set of nodes for many times, reusing
/// each node's first-rung solution as the starting point for later times.
#[derive(Debug, Clone)]
pub struct BoundarySweep {
    nu0: SpectralMeasure,
    nodes: Vec<f64>,
    tol: f64,
    cache: BTreeMap<u64, Vec<Complex>>,
}

impl BoundarySweep {
    pub fn new(nu0: SpectralMeasure, nodes: Vec<f64>, tol: f64) -> Self {
        Self { nu0, nodes, tol, cache: BTreeMap::new() }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// States at time `t` on every node (computed in parallel over nodes).
    pub fn at(&mut self, t: f64) -> Result<Vec<SubordinationState>> {
        let key = t.to_bits();
        let prev = self.cache.range(..=key).next_back().map(|(k, v)| (f64::from_bits(*k), v.clone()));
        let prob = SubordinationProblem::new(self.nu0.clone(), t)?.with_tol(self.tol);
        let solved: Vec<(SubordinationState, Complex)> = self
            .nodes
            .par_iter()
            .enumerate()
            .map(|(i, &x)| boundary_state_from(&prob, x, prev.as_ref().map(|(t0, ells)| (*t0, ells[i]))))
            .collect::<Result<_>>()?;
        self.cache.insert(key, solved.iter().map(|(_, first)| *first).collect());
        Ok(solved.into_iter().map(|(s, _)| s).collect())
    }
}
