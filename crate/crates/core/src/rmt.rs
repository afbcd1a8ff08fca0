//! Random-matrix oracle: Brownian motion on `U(d)`, Haar unitaries, and the
//! empirical angle spectrum of `Q U_t P U_t* Q`.
//!
//! Brownian motion uses the exponential Euler scheme
//! `U_{k+1} = U_k exp(iΔX_k)` with GUE increments normalised so that
//! `E[(1/d) Tr ΔX²] = Δt`; it is unitary at every step and agrees weakly to
//! first order with `dU = iU dX − ½U dt`.

use crate::cells::CellPiece;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, hermitian_eigenvalues, CMatrix, HermitianMatrix, UnitaryMatrix};
use crate::measures::{Atom, DensityGrid, DensityPiece, SpectralMeasure};
use crate::params::TraceParams;
use crate::Complex;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

/// Histogram bins of [`EmpiricalAngles::measure`].
pub const DEFAULT_BINS: usize = 200;

/// Eigenvalues within this distance of `0` or `1` are counted as atoms.
pub const ATOM_TOL: f64 = 1e-8;

/// Reproducible random stream: ChaCha8 keyed by `seed`, on stream `stream`.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Independent child stream number `index` (same seed).
    pub fn substream(&self, index: u64) -> Self {
        Self::new(self.seed, (self.stream << 32) ^ (index + 1))
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

/// GUE increment: off-diagonal complex entries of variance `dt/d`, diagonal
/// real entries of variance `dt/d`.
pub fn gue_increment(d: usize, dt: f64, rng: &mut RngStream) -> Result<HermitianMatrix> {
    if d == 0 || !(dt >= 0.0) {
        return Err(Error::InvalidParameter(format!("gue_increment needs d ≥ 1 and dt ≥ 0 (d = {d}, dt = {dt})")));
    }
    let mut m = CMatrix::zeros(d, d);
    let diag = (dt / d as f64).sqrt();
    let offd = (dt / (2.0 * d as f64)).sqrt();
    for i in 0..d {
        m[(i, i)] = Complex::new(diag * rng.normal(), 0.0);
        for j in i + 1..d {
            let z = Complex::new(rng.normal(), rng.normal()) * offd;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    Ok(HermitianMatrix::from_trusted(m))
}

/// Haar unitary: Householder QR of a complex Ginibre matrix with the phases
/// of `diag R` moved into `Q`.
pub fn haar_unitary(d: usize, rng: &mut RngStream) -> Result<UnitaryMatrix> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut g = CMatrix::from_fn(d, d, |_, _| Complex::new(0.0, 0.0));
    for i in 0..d {
        for j in 0..d {
            g[(i, j)] = Complex::new(rng.normal(), rng.normal()) * s;
        }
    }
    let mut reflectors: Vec<(usize, Vec<Complex>, f64)> = Vec::with_capacity(d);
    let mut phases = vec![Complex::new(1.0, 0.0); d];
    for k in 0..d {
        let x: Vec<Complex> = (k..d).map(|i| g[(i, k)]).collect();
        let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { Complex::new(1.0, 0.0) };
        let alpha = -phase * norm;
        phases[k] = alpha / alpha.norm();
        let mut v = x;
        v[0] -= alpha;
        let vn: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vn == 0.0 {
            continue;
        }
        let beta = 2.0 / vn;
        // G[k.., k..] ← (I − β v v*) G[k.., k..]
        let mut proj = vec![Complex::new(0.0, 0.0); d - k];
        for (ii, vi) in v.iter().enumerate() {
            let cv = vi.conj();
            for (acc, x) in proj.iter_mut().zip(&g.row(k + ii)[k..]) {
                *acc += cv * x;
            }
        }
        for (ii, vi) in v.iter().enumerate() {
            let coef = vi * beta;
            for (x, pj) in g.row_mut(k + ii)[k..].iter_mut().zip(&proj) {
                *x -= coef * pj;
            }
        }
        reflectors.push((k, v, beta));
    }
    // Q = H_0 ⋯ H_{d−1} · diag(phases)
    let mut q = CMatrix::identity(d);
    q.scale_columns(&phases);
    for (k, v, beta) in reflectors.iter().rev() {
        let mut proj = vec![Complex::new(0.0, 0.0); d];
        for (ii, vi) in v.iter().enumerate() {
            let cv = vi.conj();
            for (acc, x) in proj.iter_mut().zip(q.row(k + ii)) {
                *acc += cv * x;
            }
        }
        for (ii, vi) in v.iter().enumerate() {
            let coef = vi * *beta;
            for (x, pj) in q.row_mut(k + ii).iter_mut().zip(&proj) {
                *x -= coef * pj;
            }
        }
    }
    Ok(UnitaryMatrix::from_trusted(q))
}

/// `U ← U exp(iΔX)` for one GUE increment of variance `dt`.
fn ubm_step(u: &CMatrix, d: usize, dt: f64, rng: &mut RngStream) -> Result<CMatrix> {
    let x = gue_increment(d, dt, rng)?;
    let (values, v) = hermitian_eigen(&x)?;
    let v = v.into_matrix();
    let mut uv = u.matmul(&v);
    let phases: Vec<Complex> = values.iter().map(|&l| Complex::new(0.0, l).exp()).collect();
    uv.scale_columns(&phases);
    Ok(uv.matmul_adjoint(&v))
}

/// Unitary Brownian motion at time `t` by `steps` exponential Euler steps.
pub fn evolve_ubm(d: usize, t: f64, steps: usize, rng: &mut RngStream) -> Result<UnitaryMatrix> {
    if steps == 0 || d == 0 || !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "evolve_ubm needs d, steps ≥ 1 and t ≥ 0 (d = {d}, steps = {steps}, t = {t})"
        )));
    }
    let mut u = CMatrix::identity(d);
    if t == 0.0 {
        return Ok(UnitaryMatrix::from_trusted(u));
    }
    let dt = t / steps as f64;
    for _ in 0..steps {
        u = ubm_step(&u, d, dt, rng)?;
    }
    Ok(UnitaryMatrix::from_trusted(u))
}

/// How `Q` is placed relative to `P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    /// `P` and `Q` are coordinate projections on the leading coordinates
    /// (`Q = P` when the traces agree).
    Equal,
    /// `Q` is a coordinate projection conjugated by an independent Haar unitary.
    HaarFree,
}

/// Pooled spectra of `Q U_t P U_t* Q` over independent trials.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalAngles {
    pub d: usize,
    pub trials: usize,
    /// All `d·trials` eigenvalues, trial by trial.
    pub eigenvalues: Vec<f64>,
    /// Trial means of `(1/d) Tr U_t` and `(1/d) Tr U_t²`.
    pub trace_moments: [Complex; 2],
}

impl EmpiricalAngles {
    /// `(1/(d·trials)) Σ λ^k`.
    pub fn moment(&self, k: u32) -> f64 {
        self.eigenvalues.iter().map(|l| l.powi(k as i32)).sum::<f64>() / self.eigenvalues.len() as f64
    }

    /// Fraction of eigenvalues within `tol` of `1`.
    pub fn atom_mass_at_one(&self, tol: f64) -> f64 {
        atom_mass_at_one(&self.eigenvalues, tol)
    }

    /// Counts of eigenvalues: atoms at `0` and `1` (within [`ATOM_TOL`]) and
    /// the rest in `bins` equal cells of `[0, 1]`.
    pub fn histogram(&self, bins: usize) -> Result<Histogram> {
        if bins == 0 {
            return Err(Error::InvalidParameter("at least one bin is required".into()));
        }
        let mut h = Histogram { counts: vec![0; bins], at_zero: 0, at_one: 0, total: self.eigenvalues.len() };
        for &l in &self.eigenvalues {
            if l.abs() <= ATOM_TOL {
                h.at_zero += 1;
            } else if (l - 1.0).abs() <= ATOM_TOL {
                h.at_one += 1;
            } else {
                let k = ((l.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
                h.counts[k] += 1;
            }
        }
        Ok(h)
    }

    /// Spectral measure built from [`histogram`](Self::histogram): atoms at
    /// `0` and `1`, the rest as a piecewise-constant density.
    pub fn measure(&self, bins: usize) -> Result<SpectralMeasure> {
        let h = self.histogram(bins)?;
        let n = h.total as f64;
        let edges = h.edges();
        let width = 1.0 / bins as f64;
        let values: Vec<f64> = h.counts.iter().map(|&c| c as f64 / (n * width)).collect();
        let grid = if h.counts.iter().all(|&c| c == 0) {
            DensityGrid::empty()
        } else {
            DensityGrid::new(vec![DensityPiece::Cells(CellPiece::new(edges, values)?)])?
        };
        let atoms = [(0.0, h.at_zero), (1.0, h.at_one)]
            .into_iter()
            .filter(|&(_, c)| c > 0)
            .map(|(location, c)| Atom { location, mass: c as f64 / n })
            .collect();
        SpectralMeasure::new(atoms, grid)
    }
}

/// Eigenvalue counts in equal bins of `[0, 1]`, with the atoms at the
/// endpoints counted separately.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    pub counts: Vec<usize>,
    pub at_zero: usize,
    pub at_one: usize,
    /// Number of eigenvalues, atoms included.
    pub total: usize,
}

impl Histogram {
    /// Bin edges `k / bins`.
    pub fn edges(&self) -> Vec<f64> {
        let bins = self.counts.len();
        (0..=bins).map(|k| k as f64 / bins as f64).collect()
    }
}

/// Fraction of `values` within `tol` of `1`.
pub fn atom_mass_at_one(values: &[f64], tol: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().filter(|&&l| (l - 1.0).abs() <= tol).count() as f64 / values.len() as f64
}

fn rank(x: f64, d: usize) -> usize {
    (x * d as f64).round() as usize
}

fn one_trial(
    d: usize,
    rp: usize,
    rq: usize,
    t: f64,
    steps: usize,
    coupling: Coupling,
    mut rng: RngStream,
) -> Result<(Vec<f64>, [Complex; 2])> {
    let frame = match coupling {
        Coupling::Equal => None,
        Coupling::HaarFree => Some(haar_unitary(d, &mut rng)?.into_matrix()),
    };
    let u = evolve_ubm(d, t, steps, &mut rng)?.into_matrix();
    let df = d as f64;
    let tr1 = u.trace() / df;
    let tr2 = (0..d).map(|i| (0..d).map(|k| u[(i, k)] * u[(k, i)]).sum::<Complex>()).sum::<Complex>() / df;
    // Nonzero spectrum of Q U P U* Q = that of B B*, B = (V* U)[Q rows, P cols].
    let w = match &frame {
        None => u,
        Some(v) => v.adjoint().matmul(&u),
    };
    let mut eig = Vec::with_capacity(d);
    if rq > 0 && rp > 0 {
        let b = w.block(0, 0, rq, rp);
        let m = b.matmul_adjoint(&b);
        // a Gram product is Hermitian up to round-off; symmetrise exactly
        let sym = CMatrix::from_fn(rq, rq, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
        let bbt = HermitianMatrix::from_trusted(sym);
        eig.extend(hermitian_eigenvalues(&bbt)?);
    }
    eig.resize(d, 0.0);
    eig.sort_by(f64::total_cmp);
    Ok((eig, [tr1, tr2]))
}

/// Simulates `trials` independent copies of `Q U_t P U_t* Q` with ranks
/// `round(αd)`, `round(βd)`. Trial `k` draws from `rng.substream(k)`; results
/// are combined in trial order, so they do not depend on thread scheduling.
pub fn empirical_angle_measure(
    d: usize,
    p: &TraceParams,
    t: f64,
    steps: usize,
    trials: usize,
    coupling: Coupling,
    rng: &RngStream,
) -> Result<EmpiricalAngles> {
    if trials == 0 {
        return Err(Error::InvalidParameter("at least one trial is required".into()));
    }
    let (rp, rq) = (rank(p.alpha(), d), rank(p.beta(), d));
    let runs: Vec<(Vec<f64>, [Complex; 2])> = (0..trials)
        .into_par_iter()
        .map(|k| one_trial(d, rp, rq, t, steps, coupling, rng.substream(k as u64)))
        .collect::<Result<_>>()?;
    let mut eigenvalues = Vec::with_capacity(d * trials);
    let mut tm = [Complex::new(0.0, 0.0); 2];
    for (eig, tr) in runs {
        eigenvalues.extend(eig);
        tm[0] += tr[0];
        tm[1] += tr[1];
    }
    let nt = trials as f64;
    Ok(EmpiricalAngles { d, trials, eigenvalues, trace_moments: [tm[0] / nt, tm[1] / nt] })
}
