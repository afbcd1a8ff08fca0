//! Spectral measures on `[0, 1]`: atoms plus sampled densities, the preset
//! initial conditions, the `μ`/`ν` level split, and JSON serialisation.
//!
//! A pair of projections with traces `α, β` has a spectral measure `μ` of mass
//! one whose atom at `0` carries at least `1 − min{α,β}`. That static part
//! never moves under the flow; the moving part `ν = μ − (1−min{α,β})δ₀` has
//! mass `min{α,β}`. Both levels are represented by [`SpectralMeasure`].

use crate::cells::CellPiece;
use crate::chebyshev::{self, ChebyshevPiece};
use crate::error::{Error, Result};
use crate::params::TraceParams;
use crate::Complex;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

/// Atoms lighter than this are dropped.
pub const ATOM_FLOOR: f64 = 1e-12;

/// Default number of Chebyshev–Gauss nodes for sampled densities.
pub const DEFAULT_NODES: usize = 512;

/// Tolerance used when matching masses between levels.
pub const MASS_TOL: f64 = 1e-10;

/// A point mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// One sampled piece of a density.
#[derive(Debug, Clone, PartialEq)]
pub enum DensityPiece {
    /// Values at Chebyshev–Gauss nodes of an interval.
    Chebyshev(ChebyshevPiece),
    /// Piecewise-constant values on cells (histograms).
    Cells(CellPiece),
}

macro_rules! dispatch {
    ($self:ident, $p:ident => $e:expr) => {
        match $self {
            DensityPiece::Chebyshev($p) => $e,
            DensityPiece::Cells($p) => $e,
        }
    };
}

impl DensityPiece {
    pub fn lo(&self) -> f64 {
        dispatch!(self, p => p.lo())
    }

    pub fn hi(&self) -> f64 {
        dispatch!(self, p => p.hi())
    }

    pub fn nodes(&self) -> Vec<f64> {
        dispatch!(self, p => p.nodes())
    }

    pub fn values(&self) -> &[f64] {
        dispatch!(self, p => p.values())
    }

    pub fn mass(&self) -> f64 {
        dispatch!(self, p => p.mass())
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        dispatch!(self, p => p.integrate(f))
    }

    pub fn density_at(&self, x: f64) -> f64 {
        dispatch!(self, p => p.density_at(x))
    }

    pub fn cauchy(&self, z: Complex) -> Result<Complex> {
        dispatch!(self, p => p.cauchy(z))
    }

    pub fn cauchy_with_derivative(&self, z: Complex) -> Result<(Complex, Complex)> {
        dispatch!(self, p => p.cauchy_with_derivative(z))
    }

    pub fn log_potential(&self, y: f64) -> f64 {
        dispatch!(self, p => p.log_potential(y))
    }

    pub fn self_energy(&self) -> f64 {
        dispatch!(self, p => p.self_energy())
    }

    /// `∫ x^k dρ`.
    pub fn moment(&self, k: u32) -> f64 {
        match self {
            DensityPiece::Chebyshev(p) => p.integrate(|x| x.powi(k as i32)),
            DensityPiece::Cells(p) => p.moment(k),
        }
    }

    fn scaled(&self, c: f64) -> Result<Self> {
        Ok(match self {
            DensityPiece::Chebyshev(p) => DensityPiece::Chebyshev(ChebyshevPiece::from_values(
                p.lo(),
                p.hi(),
                p.values().iter().map(|v| v * c).collect(),
            )?),
            DensityPiece::Cells(p) => {
                DensityPiece::Cells(CellPiece::new(p.edges().to_vec(), p.values().iter().map(|v| v * c).collect())?)
            }
        })
    }
}

/// The absolutely continuous part of a measure: disjoint sampled pieces in
/// increasing order inside `[0, 1]`. Possibly empty.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DensityGrid {
    pieces: Vec<DensityPiece>,
}

impl DensityGrid {
    pub fn new(pieces: Vec<DensityPiece>) -> Result<Self> {
        for p in &pieces {
            if p.lo() < 0.0 || p.hi() > 1.0 {
                return Err(Error::InvalidParameter(format!("density piece [{}, {}] leaves [0, 1]", p.lo(), p.hi())));
            }
            if let Some(v) = p.values().iter().find(|&&v| v < 0.0) {
                return Err(Error::InvalidParameter(format!("negative density value {v}")));
            }
        }
        if pieces.windows(2).any(|w| w[0].hi() > w[1].lo()) {
            return Err(Error::InvalidParameter("density pieces overlap or are unsorted".into()));
        }
        Ok(Self { pieces })
    }

    /// A single Chebyshev piece on `[0, 1]`.
    pub fn chebyshev(values: Vec<f64>) -> Result<Self> {
        Self::new(vec![DensityPiece::Chebyshev(ChebyshevPiece::from_values(0.0, 1.0, values)?)])
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn pieces(&self) -> &[DensityPiece] {
        &self.pieces
    }

    /// All nodes, strictly increasing.
    pub fn nodes(&self) -> Vec<f64> {
        self.pieces.iter().flat_map(|p| p.nodes()).collect()
    }

    /// All values, aligned with [`Self::nodes`].
    pub fn values(&self) -> Vec<f64> {
        self.pieces.iter().flat_map(|p| p.values().iter().copied()).collect()
    }

    pub fn mass(&self) -> f64 {
        self.pieces.iter().map(DensityPiece::mass).sum()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.pieces.iter().map(|p| p.integrate(&f)).sum()
    }

    pub fn density_at(&self, x: f64) -> f64 {
        self.pieces.iter().map(|p| p.density_at(x)).sum()
    }

    pub fn cauchy(&self, z: Complex) -> Result<Complex> {
        self.pieces.iter().try_fold(Complex::new(0.0, 0.0), |acc, p| Ok(acc + p.cauchy(z)?))
    }

    pub fn cauchy_with_derivative(&self, z: Complex) -> Result<(Complex, Complex)> {
        let mut g = Complex::new(0.0, 0.0);
        let mut dg = Complex::new(0.0, 0.0);
        for p in &self.pieces {
            let (a, b) = p.cauchy_with_derivative(z)?;
            g += a;
            dg += b;
        }
        Ok((g, dg))
    }

    /// `∫ ln|y−x| dρ(x)`.
    pub fn log_potential(&self, y: f64) -> f64 {
        self.pieces.iter().map(|p| p.log_potential(y)).sum()
    }

    /// Multiplies the density by `c ≥ 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.pieces.iter().map(|p| p.scaled(c)).collect::<Result<_>>()?)
    }
}

/// Level of a spectral measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    /// Full measure `μ`, total mass one.
    Mu,
    /// Moving part `ν`, total mass `min{α,β}`.
    Nu,
}

/// A finite positive measure on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpectralMeasure {
    atoms: Vec<Atom>,
    grid: DensityGrid,
}

impl SpectralMeasure {
    /// Validates atoms (in `[0,1]`, nonnegative) and drops those below
    /// [`ATOM_FLOOR`]. Atoms are kept sorted by location.
    pub fn new(atoms: Vec<Atom>, grid: DensityGrid) -> Result<Self> {
        let mut kept = Vec::with_capacity(atoms.len());
        for a in atoms {
            if !(a.location.is_finite() && (0.0..=1.0).contains(&a.location)) {
                return Err(Error::InvalidParameter(format!("atom at {} outside [0, 1]", a.location)));
            }
            if !(a.mass.is_finite() && a.mass >= 0.0) {
                return Err(Error::InvalidParameter(format!("atom mass {} is negative", a.mass)));
            }
            if a.mass >= ATOM_FLOOR {
                kept.push(a);
            }
        }
        kept.sort_by(|a, b| a.location.total_cmp(&b.location));
        Ok(Self { atoms: kept, grid })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn grid(&self) -> &DensityGrid {
        &self.grid
    }

    /// Mass of the atom at `x` (exact location match), zero if absent.
    pub fn atom_mass_at(&self, x: f64) -> f64 {
        self.atoms.iter().filter(|a| a.location == x).map(|a| a.mass).sum()
    }

    /// Total mass: atoms plus density quadrature.
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum::<f64>() + self.grid.mass()
    }

    /// `∫ f dm`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms.iter().map(|a| a.mass * f(a.location)).sum::<f64>() + self.grid.integrate(&f)
    }

    /// Moments `∫ x^n dm` for `n = 1..=order`.
    pub fn moments(&self, order: usize) -> Vec<f64> {
        (1..=order as u32)
            .map(|k| {
                self.atoms.iter().map(|a| a.mass * a.location.powi(k as i32)).sum::<f64>()
                    + self.grid.pieces().iter().map(|p| p.moment(k)).sum::<f64>()
            })
            .collect()
    }

    /// Cauchy transform `G(z) = ∫ dm(x)/(z−x)`.
    pub fn cauchy(&self, z: Complex) -> Result<Complex> {
        let mut g = self.grid.cauchy(z)?;
        for a in &self.atoms {
            if z.im == 0.0 && z.re == a.location {
                return Err(Error::PoleAtZ(a.location));
            }
            g += a.mass / (z - a.location);
        }
        Ok(g)
    }

    /// Cauchy transform and its derivative.
    pub fn cauchy_with_derivative(&self, z: Complex) -> Result<(Complex, Complex)> {
        let (mut g, mut dg) = self.grid.cauchy_with_derivative(z)?;
        for a in &self.atoms {
            if z.im == 0.0 && z.re == a.location {
                return Err(Error::PoleAtZ(a.location));
            }
            let w = (z - a.location).inv();
            g += a.mass * w;
            dg -= a.mass * w * w;
        }
        Ok((g, dg))
    }

    /// Adds the static atom `(1 − min{α,β})δ₀`, turning a `ν` into a `μ`.
    pub fn with_static_atom(&self, p: &TraceParams) -> Result<Self> {
        let mut atoms = self.atoms.clone();
        let extra = 1.0 - p.min();
        match atoms.iter_mut().find(|a| a.location == 0.0) {
            Some(a) => a.mass += extra,
            None => atoms.push(Atom { location: 0.0, mass: extra }),
        }
        Self::new(atoms, self.grid.clone())
    }

    /// Multiplies the whole measure by `c ≥ 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let atoms = self.atoms.iter().map(|a| Atom { location: a.location, mass: a.mass * c }).collect();
        Self::new(atoms, self.grid.scaled(c)?)
    }

    /// Checks the total mass against the level's requirement.
    pub fn check_level(&self, p: &TraceParams, level: Level) -> Result<()> {
        let expected = match level {
            Level::Mu => 1.0,
            Level::Nu => p.min(),
        };
        let found = self.total_mass();
        if (found - expected).abs() > MASS_TOL {
            return Err(Error::MassMismatch { expected, found });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&MeasureJson::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str::<MeasureJson>(s)?.try_into()
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(std::fs::write(path, self.to_json()?)?)
    }
}

/// Removes the static atom `(1−min{α,β})δ₀` from a `μ`-level measure.
pub fn split_static_atom(mu: &SpectralMeasure, p: &TraceParams) -> Result<SpectralMeasure> {
    let static_mass = 1.0 - p.min();
    let at_zero = mu.atom_mass_at(0.0);
    if at_zero < static_mass - MASS_TOL {
        return Err(Error::MassMismatch { expected: static_mass, found: at_zero });
    }
    let atoms = mu
        .atoms()
        .iter()
        .map(|a| if a.location == 0.0 { Atom { location: 0.0, mass: (a.mass - static_mass).max(0.0) } } else { *a })
        .collect();
    SpectralMeasure::new(atoms, mu.grid().clone())
}

/// Named initial conditions.
#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    /// All moving mass at `1` (the pair starts with `p ≤ q`).
    Bernoulli,
    /// All moving mass at a point `x0`.
    Point(f64),
    /// Lebesgue density on `[0, 1]`.
    Uniform,
    /// Arcsine density `1/(π√(x(1−x)))`.
    Arcsine,
    /// Uniform density on `[a,b] ∪ [c,d]`.
    TwoBump([f64; 4]),
}

/// Builds a preset measure at the requested level with `n` density nodes.
/// The moving part always carries mass `min{α,β}` exactly (densities are
/// normalised against their own quadrature). Densities are stored as
/// weighted Chebyshev pieces; flat densities, whose weight is not polynomial,
/// are then accurate to `O(n⁻²)` in moments and transforms.
pub fn preset(name: &Preset, p: &TraceParams, level: Level, n: usize) -> Result<SpectralMeasure> {
    let m = p.min();
    let nu = match name {
        Preset::Bernoulli => SpectralMeasure::new(vec![Atom { location: 1.0, mass: m }], DensityGrid::empty())?,
        Preset::Point(x0) => SpectralMeasure::new(vec![Atom { location: *x0, mass: m }], DensityGrid::empty())?,
        Preset::Uniform => single_piece(ChebyshevPiece::from_density(0.0, 1.0, n, |_| 1.0)?, m)?,
        Preset::Arcsine => single_piece(ChebyshevPiece::from_weighted(0.0, 1.0, n, |_| 1.0 / PI)?, m)?,
        Preset::TwoBump([a, b, c, d]) => {
            if !(0.0 <= *a && a < b && b < c && c < d && *d <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "two_bump needs 0 ≤ a < b < c < d ≤ 1, got {a},{b},{c},{d}"
                )));
            }
            let half = (n / 2).max(1);
            let p1 = ChebyshevPiece::from_density(*a, *b, half, |_| 1.0)?;
            let p2 = ChebyshevPiece::from_density(*c, *d, half, |_| 1.0)?;
            let total = p1.mass() + p2.mass();
            let grid = DensityGrid::new(vec![DensityPiece::Chebyshev(p1), DensityPiece::Chebyshev(p2)])?;
            SpectralMeasure::new(vec![], grid.scaled(m / total)?)?
        }
    };
    match level {
        Level::Nu => Ok(nu),
        Level::Mu => nu.with_static_atom(p),
    }
}

fn single_piece(piece: ChebyshevPiece, mass: f64) -> Result<SpectralMeasure> {
    let scale = mass / piece.mass();
    let grid = DensityGrid::new(vec![DensityPiece::Chebyshev(piece)])?.scaled(scale)?;
    SpectralMeasure::new(vec![], grid)
}

/// A parsed, not yet instantiated, measure specification.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureSpec {
    Preset(Preset),
    File(String),
}

impl MeasureSpec {
    /// Instantiates the specification. Files are converted to the requested
    /// level by adding or removing the static atom when their mass says so.
    pub fn build(&self, p: &TraceParams, level: Level, n: usize) -> Result<SpectralMeasure> {
        match self {
            MeasureSpec::Preset(name) => preset(name, p, level, n),
            MeasureSpec::File(path) => {
                let m = SpectralMeasure::read(path)?;
                let mass = m.total_mass();
                let is_mu = (mass - 1.0).abs() <= MASS_TOL;
                let is_nu = (mass - p.min()).abs() <= MASS_TOL;
                let out = match (level, is_mu, is_nu) {
                    (Level::Mu, true, _) | (Level::Nu, _, true) => m,
                    (Level::Mu, false, true) => m.with_static_atom(p)?,
                    (Level::Nu, true, false) => split_static_atom(&m, p)?,
                    _ => {
                        let expected = if level == Level::Mu { 1.0 } else { p.min() };
                        return Err(Error::MassMismatch { expected, found: mass });
                    }
                };
                Ok(out)
            }
        }
    }
}

/// Parses `bernoulli`, `uniform`, `arcsine`, `point:x0`,
/// `two_bump:a,b,c,d` or `file:path`.
pub fn parse_measure_spec(s: &str) -> Result<MeasureSpec> {
    let parse_err = |position: usize, message: String| Error::Parse { position, message };
    let (head, tail) = match s.find(':') {
        Some(i) => (&s[..i], Some((i + 1, &s[i + 1..]))),
        None => (s, None),
    };
    let numbers = |offset: usize, body: &str| -> Result<Vec<f64>> {
        let mut out = Vec::new();
        let mut pos = offset;
        for tok in body.split(',') {
            let v: f64 = tok.trim().parse().map_err(|_| parse_err(pos, format!("expected a number, found {tok:?}")))?;
            out.push(v);
            pos += tok.len() + 1;
        }
        Ok(out)
    };
    match (head, tail) {
        ("bernoulli", None) => Ok(MeasureSpec::Preset(Preset::Bernoulli)),
        ("uniform", None) => Ok(MeasureSpec::Preset(Preset::Uniform)),
        ("arcsine", None) => Ok(MeasureSpec::Preset(Preset::Arcsine)),
        ("point", Some((off, body))) => {
            let v = numbers(off, body)?;
            match v.as_slice() {
                [x0] if (0.0..=1.0).contains(x0) => Ok(MeasureSpec::Preset(Preset::Point(*x0))),
                _ => Err(parse_err(off, "point needs one location in [0, 1]".into())),
            }
        }
        ("two_bump", Some((off, body))) => {
            let v = numbers(off, body)?;
            match v.as_slice() {
                [a, b, c, d] => Ok(MeasureSpec::Preset(Preset::TwoBump([*a, *b, *c, *d]))),
                _ => Err(parse_err(off, format!("two_bump needs 4 numbers, found {}", v.len()))),
            }
        }
        ("file", Some((off, body))) => {
            if body.is_empty() {
                Err(parse_err(off, "empty file name".into()))
            } else {
                Ok(MeasureSpec::File(body.to_string()))
            }
        }
        (name, Some((off, _))) if ["bernoulli", "uniform", "arcsine"].contains(&name) => {
            Err(parse_err(off - 1, format!("{name} takes no arguments")))
        }
        _ => Err(parse_err(0, format!("unknown measure {head:?}"))),
    }
}

#[derive(Serialize, Deserialize)]
struct AtomJson {
    x: f64,
    m: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum PieceJson {
    Chebyshev { lo: f64, hi: f64, len: usize },
    Cells { edges: Vec<f64> },
}

#[derive(Serialize, Deserialize)]
struct GridJson {
    nodes: Vec<f64>,
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pieces: Option<Vec<PieceJson>>,
}

#[derive(Serialize, Deserialize)]
struct MeasureJson {
    atoms: Vec<AtomJson>,
    grid: GridJson,
}

impl From<&SpectralMeasure> for MeasureJson {
    fn from(m: &SpectralMeasure) -> Self {
        let pieces = m
            .grid
            .pieces()
            .iter()
            .map(|p| match p {
                DensityPiece::Chebyshev(c) => PieceJson::Chebyshev { lo: c.lo(), hi: c.hi(), len: c.len() },
                DensityPiece::Cells(c) => PieceJson::Cells { edges: c.edges().to_vec() },
            })
            .collect();
        MeasureJson {
            atoms: m.atoms.iter().map(|a| AtomJson { x: a.location, m: a.mass }).collect(),
            grid: GridJson { nodes: m.grid.nodes(), values: m.grid.values(), pieces: Some(pieces) },
        }
    }
}

impl TryFrom<MeasureJson> for SpectralMeasure {
    type Error = Error;

    fn try_from(j: MeasureJson) -> Result<Self> {
        let GridJson { nodes, values, pieces } = j.grid;
        if nodes.len() != values.len() {
            return Err(Error::InvalidParameter("grid nodes and values differ in length".into()));
        }
        let layout = match pieces {
            Some(p) => p,
            None => infer_layout(&nodes)?,
        };
        let mut out = Vec::with_capacity(layout.len());
        let mut offset = 0;
        for piece in layout {
            let (len, built) = match piece {
                PieceJson::Chebyshev { lo, hi, len } => {
                    let v = values.get(offset..offset + len).ok_or_else(short_grid)?;
                    (len, DensityPiece::Chebyshev(ChebyshevPiece::from_values(lo, hi, v.to_vec())?))
                }
                PieceJson::Cells { edges } => {
                    let len = edges.len().saturating_sub(1);
                    let v = values.get(offset..offset + len).ok_or_else(short_grid)?;
                    (len, DensityPiece::Cells(CellPiece::new(edges, v.to_vec())?))
                }
            };
            offset += len;
            out.push(built);
        }
        if offset != values.len() {
            return Err(short_grid());
        }
        let atoms = j.atoms.into_iter().map(|a| Atom { location: a.x, mass: a.m }).collect();
        SpectralMeasure::new(atoms, DensityGrid::new(out)?)
    }
}

fn short_grid() -> Error {
    Error::InvalidParameter("grid layout does not match the number of values".into())
}

/// Layout for grids without explicit pieces: Chebyshev–Gauss nodes on `[0,1]`
/// are recognised as such; any other strictly increasing node set is read as
/// cell midpoints.
fn infer_layout(nodes: &[f64]) -> Result<Vec<PieceJson>> {
    let n = nodes.len();
    if n == 0 {
        return Ok(vec![]);
    }
    if !nodes.windows(2).all(|w| w[0] < w[1]) || nodes[0] <= 0.0 || nodes[n - 1] >= 1.0 {
        return Err(Error::InvalidParameter("grid nodes must increase strictly inside (0, 1)".into()));
    }
    let cheb = chebyshev::nodes(0.0, 1.0, n);
    if cheb.iter().zip(nodes).all(|(a, b)| (a - b).abs() <= 1e-13) {
        return Ok(vec![PieceJson::Chebyshev { lo: 0.0, hi: 1.0, len: n }]);
    }
    let mut edges = Vec::with_capacity(n + 1);
    edges.push(0.0);
    edges.extend(nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    edges.push(1.0);
    Ok(vec![PieceJson::Cells { edges }])
}
