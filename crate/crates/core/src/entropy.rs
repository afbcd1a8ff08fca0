//! Logarithmic energy, projection free entropy, liberation Fisher information
//! and the mutual free information along the trace-½ flow.
//!
//! Normalisations used throughout (`ν̂ = ν / min{α,β}` is the moving part
//! rescaled to mass one):
//!
//! * `Σ(ρ) = ∬ ln|u−v| ρ(u)ρ(v) du dv`;
//! * `χ_proj(ν̂) = ¼Σ(ν̂) + ½(α₁₀+α₀₁)∫ln x dν̂ + ½(α₁₁+α₀₀)∫ln(1−x) dν̂ − C`;
//! * `fisher(ρ̂) = ∫ φ² ρ̂ x(1−x) dx` with `φ = Hρ̂ + (α₀₁+α₁₀)/x + (α₀₀+α₁₁)/(1−x)`
//!   and `Hρ(x) = (1/π) p.v.∫ ρ(y)/(x−y) dy`;
//! * along the flow, `φ*(t) = ∫ (φ^t)² ρ^t x(1−x) dx` with
//!   `φ^t = −2 Im H_t/√(x(1−x))` and `ρ^t = 2 Re H_t/(π√(x(1−x)))`, so that
//!   `dχ_proj/dt = ½φ*` and `φ*(0) = π²·fisher(ρ̂⁰)`.
//!
//! On the Chebyshev–Gauss nodes of `[0, 1]` the last integral is the plain
//! average `φ*(t) = (8/n) Σ_k (Im H_k)² Re H_k`.

use crate::cells::CellPiece;
use crate::chebyshev::{self, ChebyshevPiece};
use crate::error::{Error, Result};
use crate::measures::{DensityGrid, DensityPiece, SpectralMeasure};
use crate::params::TraceParams;
use crate::subordination::{BoundarySweep, SubordinationProblem};
use gauss_quad::GaussLegendre;
use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;

/// Nodes used to sample boundary values of `H_t`.
pub const DEFAULT_PROFILE_NODES: usize = 256;

/// Lower cutoff used when `ν₀` has atoms and `i*` is infinite.
pub const DEFAULT_LOWER_CUTOFF: f64 = 1e-2;

/// Profile values below this are treated as rounding noise in the tail fit.
pub const TAIL_NOISE_FLOOR: f64 = 1e-13;

/// Relative gap between a grid and its refinement above which a Fisher
/// integral is declared divergent.
pub const DIVERGENCE_GAP: f64 = 1e-2;

const PANEL_ORDER: usize = 8;
const MAX_PANEL_DEPTH: usize = 10;
const TAIL_SAMPLES: usize = 10;

/// How the profile beyond `t_max` is accounted for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TailModel {
    /// Fit `ln φ*` linearly near `t_max` and integrate the fitted exponential.
    #[default]
    ExpFit,
    /// Ignore the tail.
    Drop,
}

/// Entropy configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyConfig {
    /// Additive constant `C(α,β)` of `χ_proj`.
    pub c_const: f64,
    /// Truncation horizon of the time integral.
    pub t_max: f64,
    pub tail_model: TailModel,
    /// Chebyshev–Gauss nodes for the boundary sweep.
    pub nodes: usize,
    /// Lower limit of the time integral; defaults to `0`, or to
    /// [`DEFAULT_LOWER_CUTOFF`] when `ν₀` has atoms.
    pub lower_cutoff: Option<f64>,
    /// Absolute tolerance (per unit time) of the adaptive time quadrature.
    pub quad_tol: f64,
    /// Relative tolerance of the adaptive time quadrature.
    pub quad_rel: f64,
    /// Maximum number of profile evaluations; once spent, remaining panels
    /// are accepted as they stand and the error estimate says so.
    pub max_evaluations: usize,
}

impl Default for EntropyConfig {
    fn default() -> Self {
        Self {
            c_const: 0.0,
            t_max: 20.0,
            tail_model: TailModel::ExpFit,
            nodes: DEFAULT_PROFILE_NODES,
            lower_cutoff: None,
            quad_tol: 1e-9,
            quad_rel: 1e-6,
            max_evaluations: 4000,
        }
    }
}

impl EntropyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_max = {} must be positive", self.t_max)));
        }
        if self.nodes < 8 {
            return Err(Error::InvalidParameter("at least 8 profile nodes are required".into()));
        }
        if let Some(c) = self.lower_cutoff {
            if !(c >= 0.0 && c < self.t_max) {
                return Err(Error::InvalidParameter(format!("lower cutoff {c} not in [0, t_max)")));
            }
        }
        Ok(())
    }
}

/// `φ*` sampled at increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiProfile {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// `Σ` of an atom-free density: exact self-energies of the pieces plus cross
/// terms. Cross terms between two histogram pieces are exact; otherwise one
/// piece is integrated against the other's logarithmic potential, choosing
/// the Chebyshev piece as the integrator since its rule resolves the edges.
pub fn grid_log_energy(rho: &DensityGrid) -> f64 {
    let pieces = rho.pieces();
    let mut acc = 0.0;
    for (i, a) in pieces.iter().enumerate() {
        acc += a.self_energy();
        for b in &pieces[i + 1..] {
            acc += 2.0 * cross_energy(a, b);
        }
    }
    acc
}

fn cross_energy(a: &DensityPiece, b: &DensityPiece) -> f64 {
    match (a, b) {
        (DensityPiece::Cells(x), DensityPiece::Cells(y)) => x.cross_energy(y),
        (DensityPiece::Cells(_), DensityPiece::Chebyshev(_)) => b.integrate(|y| a.log_potential(y)),
        _ => a.integrate(|y| b.log_potential(y)),
    }
}

/// `Σ` of a measure; `−∞` as soon as an atom is present.
pub fn log_energy(m: &SpectralMeasure) -> f64 {
    if m.atoms().is_empty() {
        grid_log_energy(m.grid())
    } else {
        f64::NEG_INFINITY
    }
}

/// `∫ ln|x − y| dm(x)`, `−∞` if an atom sits at `y`.
fn measure_log_potential(m: &SpectralMeasure, y: f64) -> f64 {
    let mut acc = m.grid().log_potential(y);
    for a in m.atoms() {
        acc += a.mass * (a.location - y).abs().ln();
    }
    acc
}

/// Projection free entropy of a mass-one angle measure.
pub fn chi_proj(nu_hat: &SpectralMeasure, p: &TraceParams, cfg: &EntropyConfig) -> Result<f64> {
    if !p.in_general_position() || p.a00() * p.a11() != 0.0 || p.a10() * p.a01() != 0.0 {
        return Err(Error::GeneralPositionViolated);
    }
    let mass = nu_hat.total_mass();
    if (mass - 1.0).abs() > 1e-8 {
        return Err(Error::MassMismatch { expected: 1.0, found: mass });
    }
    let mut chi = 0.25 * log_energy(nu_hat) - cfg.c_const;
    let w0 = 0.5 * (p.a10() + p.a01());
    if w0 != 0.0 {
        chi += w0 * measure_log_potential(nu_hat, 0.0);
    }
    let w1 = 0.5 * (p.a11() + p.a00());
    if w1 != 0.0 {
        chi += w1 * measure_log_potential(nu_hat, 1.0);
    }
    Ok(chi)
}

fn refine(piece: &DensityPiece) -> Result<DensityPiece> {
    Ok(match piece {
        DensityPiece::Chebyshev(c) => DensityPiece::Chebyshev(c.resample(2 * c.len())?),
        DensityPiece::Cells(c) => {
            let mut edges = Vec::with_capacity(2 * c.len() + 1);
            let mut values = Vec::with_capacity(2 * c.len());
            for (w, &v) in c.edges().windows(2).zip(c.values()) {
                edges.push(w[0]);
                edges.push(0.5 * (w[0] + w[1]));
                values.extend([v, v]);
            }
            edges.push(c.hi());
            DensityPiece::Cells(CellPiece::new(edges, values)?)
        }
    })
}

fn fisher_quadrature(rho: &DensityGrid, c0: f64, c1: f64) -> Result<f64> {
    let mut acc = 0.0;
    for piece in rho.pieces() {
        let err = RefCell::new(None);
        acc += piece.integrate(|x| {
            let h = match rho.cauchy(crate::Complex::new(x, 0.0)) {
                Ok(g) => g.re / PI,
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    0.0
                }
            };
            let phi = h + c0 / x + c1 / (1.0 - x);
            phi * phi * x * (1.0 - x)
        });
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
    }
    Ok(acc)
}

/// Liberation Fisher information of a mass-one density. The quadrature is
/// repeated on a refined grid; a relative change above [`DIVERGENCE_GAP`]
/// (the integral failing the Cauchy criterion) is reported as divergence.
pub fn fisher(rho_hat: &DensityGrid, p: &TraceParams) -> Result<f64> {
    let mass = rho_hat.mass();
    if (mass - 1.0).abs() > 1e-6 {
        return Err(Error::MassMismatch { expected: 1.0, found: mass });
    }
    let c0 = p.a01() + p.a10();
    let c1 = p.a00() + p.a11();
    let coarse = fisher_quadrature(rho_hat, c0, c1)?;
    let fine_grid = DensityGrid::new(rho_hat.pieces().iter().map(refine).collect::<Result<_>>()?)?;
    let fine = fisher_quadrature(&fine_grid, c0, c1)?;
    if !fine.is_finite() || (fine - coarse).abs() > DIVERGENCE_GAP * fine.abs().max(1e-12) {
        return Err(Error::DivergentIntegral(format!("fisher quadrature {coarse} vs refined {fine}")));
    }
    Ok(fine)
}

/// Boundary quantities of the trace-½ flow on a fixed Chebyshev–Gauss grid,
/// with continuation reused across requested times.
#[derive(Debug, Clone)]
pub struct FlowSampler {
    sweep: BoundarySweep,
    phi_cache: HashMap<u64, f64>,
}

impl FlowSampler {
    /// Samples the flow started from `ν₀ = prob.nu0()` on `n` nodes.
    pub fn new(prob: &SubordinationProblem, n: usize) -> Self {
        let sweep = BoundarySweep::new(prob.nu0().clone(), chebyshev::nodes(0.0, 1.0, n), prob.tol());
        Self { sweep, phi_cache: HashMap::new() }
    }

    /// `φ*(t) = (8/n) Σ_k (Im H_k)² Re H_k`.
    pub fn phi_star(&mut self, t: f64) -> Result<f64> {
        if let Some(&v) = self.phi_cache.get(&t.to_bits()) {
            return Ok(v);
        }
        let states = self.sweep.at(t)?;
        let n = states.len() as f64;
        let v = 8.0 / n * states.iter().map(|s| s.h.im * s.h.im * s.h.re.max(0.0)).sum::<f64>();
        self.phi_cache.insert(t.to_bits(), v);
        Ok(v)
    }

    /// Normalised angle measure `ν̂^t` (mass one up to interpolation error),
    /// with weighted density `q^t = 2 Re H_t / π`.
    pub fn nu_hat(&mut self, t: f64) -> Result<SpectralMeasure> {
        let states = self.sweep.at(t)?;
        let q: Vec<f64> = states.iter().map(|s| (2.0 * s.h.re / PI).max(0.0)).collect();
        let piece = ChebyshevPiece::from_weighted_values(0.0, 1.0, &q)?;
        SpectralMeasure::new(vec![], DensityGrid::new(vec![DensityPiece::Chebyshev(piece)])?)
    }

    /// `χ_proj(ν̂^t) = ¼Σ(ν̂^t) − C` (trace ½).
    pub fn chi_proj(&mut self, t: f64, c_const: f64) -> Result<f64> {
        Ok(0.25 * log_energy(&self.nu_hat(t)?) - c_const)
    }
}

/// `φ*` of the flow started from `prob.nu0()` at each of `times` (the
/// problem's own time is not used).
pub fn phi_profile(prob: &SubordinationProblem, times: &[f64]) -> Result<PhiProfile> {
    if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::InvalidParameter("profile times must be nonnegative and increasing".into()));
    }
    let mut sampler = FlowSampler::new(prob, DEFAULT_PROFILE_NODES);
    let values = times.iter().map(|&t| sampler.phi_star(t)).collect::<Result<_>>()?;
    Ok(PhiProfile { times: times.to_vec(), values })
}

/// Outcome of an `i*` computation.
#[derive(Debug, Clone, PartialEq)]
pub struct IStar {
    /// `½∫ φ* dt` over `[lower, t_max]` plus the tail.
    pub value: f64,
    /// The tail contribution beyond `t_max`.
    pub tail: f64,
    /// Lower limit actually used.
    pub lower: f64,
    /// Set when the integral was cut off above `0` because `φ*` is not
    /// integrable at `0` (atomic `ν₀`), i.e. the true value is `+∞`.
    pub truncated: bool,
    /// Sum of the accepted panel-refinement differences (on `½∫`).
    pub error_estimate: f64,
    /// Profile evaluations spent.
    pub evaluations: usize,
}

struct Panels<'a> {
    sampler: &'a mut FlowSampler,
    rule: GaussLegendre,
    tol: f64,
    rel: f64,
    budget: usize,
    evaluations: usize,
    error: f64,
}

impl Panels<'_> {
    fn panel(&mut self, a: f64, b: f64) -> Result<f64> {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        let mut acc = 0.0;
        for (x, w) in self.rule.iter() {
            acc += w * self.sampler.phi_star(c + h * x)?;
        }
        self.evaluations += PANEL_ORDER;
        Ok(h * acc)
    }

    fn adaptive(&mut self, a: f64, b: f64, whole: f64, depth: usize) -> Result<f64> {
        let m = 0.5 * (a + b);
        let left = self.panel(a, m)?;
        let right = self.panel(m, b)?;
        let split = left + right;
        let gap = (split - whole).abs();
        let tol = (self.tol * (b - a)).max(self.rel * split.abs());
        if gap <= tol || depth >= MAX_PANEL_DEPTH || self.evaluations >= self.budget {
            self.error += gap;
            return Ok(split);
        }
        Ok(self.adaptive(a, m, left, depth + 1)? + self.adaptive(m, b, right, depth + 1)?)
    }
}

fn tail_estimate(sampler: &mut FlowSampler, t_max: f64) -> Result<f64> {
    let window = if t_max >= 4.0 { 2.0 } else { 0.5 * t_max };
    let mut pts = Vec::with_capacity(TAIL_SAMPLES);
    for k in 0..TAIL_SAMPLES {
        let t = t_max - window + window * k as f64 / (TAIL_SAMPLES - 1) as f64;
        let v = sampler.phi_star(t)?;
        if v > TAIL_NOISE_FLOOR {
            pts.push((t, v.ln()));
        }
    }
    if sampler.phi_star(t_max)? <= TAIL_NOISE_FLOOR || pts.len() < 3 {
        return Ok(0.0);
    }
    let n = pts.len() as f64;
    let (st, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t, b + y));
    let (mt, my) = (st / n, sy / n);
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + (t - mt) * (y - my), b + (t - mt).powi(2)));
    let rate = sxy / sxx;
    if !(rate < 0.0) {
        return Err(Error::TailDivergence { rate });
    }
    let at_end = (my + rate * (t_max - mt)).exp();
    Ok(0.5 * at_end / -rate)
}

/// Mutual free information `i* = ½∫₀^∞ φ*(t) dt` of the flow started from
/// `prob.nu0()`: adaptive Gauss–Legendre panels over `(lower, t_max]` on a
/// geometric breakpoint grid, plus the tail model beyond `t_max`.
pub fn istar(prob: &SubordinationProblem, cfg: &EntropyConfig) -> Result<IStar> {
    cfg.validate()?;
    let atomic = !prob.nu0().atoms().is_empty();
    let lower = match cfg.lower_cutoff {
        Some(c) => c,
        None if atomic => DEFAULT_LOWER_CUTOFF.min(0.5 * cfg.t_max),
        None => 0.0,
    };
    let mut sampler = FlowSampler::new(prob, cfg.nodes);
    let mut breaks = vec![lower];
    let mut b = (1.0f64 / 16.0).max(2.0 * lower);
    while b < cfg.t_max {
        if b > lower {
            breaks.push(b);
        }
        b *= 2.0;
    }
    breaks.push(cfg.t_max);
    let rule = GaussLegendre::new(PANEL_ORDER.try_into().expect("nonzero order"));
    let mut panels = Panels {
        sampler: &mut sampler,
        rule,
        tol: cfg.quad_tol,
        rel: cfg.quad_rel,
        budget: cfg.max_evaluations,
        evaluations: 0,
        error: 0.0,
    };
    let mut integral = 0.0;
    for w in breaks.windows(2) {
        let whole = panels.panel(w[0], w[1])?;
        integral += panels.adaptive(w[0], w[1], whole, 0)?;
    }
    let (error, evaluations) = (0.5 * panels.error, panels.evaluations);
    let tail = match cfg.tail_model {
        TailModel::ExpFit => tail_estimate(&mut sampler, cfg.t_max)?,
        TailModel::Drop => 0.0,
    };
    Ok(IStar {
        value: 0.5 * integral + tail,
        tail,
        lower,
        truncated: atomic && lower > 0.0,
        error_estimate: error,
        evaluations,
    })
}

/// Central difference of `χ_proj` against `½φ*` at time `t`: returns
/// `([χ(t+h) − χ(t−h)]/2h, ½φ*(t))`.
pub fn check_derivative_identity(prob: &SubordinationProblem, t: f64, h: f64) -> Result<(f64, f64)> {
    if !(h > 0.0 && t > h) {
        return Err(Error::InvalidParameter(format!("need t > h > 0, got t = {t}, h = {h}")));
    }
    let mut sampler = FlowSampler::new(prob, DEFAULT_PROFILE_NODES);
    let before = sampler.chi_proj(t - h, 0.0)?;
    let rhs = 0.5 * sampler.phi_star(t)?;
    let after = sampler.chi_proj(t + h, 0.0)?;
    Ok(((after - before) / (2.0 * h), rhs))
}
