//! Batch scenario runner for the `liberation` library.
//!
//! Every subcommand takes flat `--key value` flags; `--config path` reads the
//! same keys from a `key = value` file, and flags given on the command line
//! override the file. Exit codes: `0` success, `2` invalid input, `3` a
//! solver did not converge (partial output is kept and flagged in the status
//! report). The status report `{"ok":…,"warnings":[…]}` goes to `--status`
//! when given and to standard error otherwise.

// Negated comparisons such as `!(x >= 0.0)` are used on purpose: they also
// reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod output;

use clap::{Args, Parser, Subcommand, ValueEnum};
use liberation::entropy::{chi_proj, istar, EntropyConfig, FlowSampler, TailModel};
use liberation::error::Error;
use liberation::measures::{parse_measure_spec, preset, Level, Preset, SpectralMeasure};
use liberation::moment_flow::{evolve_moments, evolve_moments_observed, MomentVector};
use liberation::params::TraceParams;
use liberation::rmt::{empirical_angle_measure, Coupling, RngStream};
use liberation::subordination::{flow_cauchy, sqrt_prod, BoundarySweep, SubordinationProblem};
use liberation::transform::{jacobi_density, jacobi_limit, shifted_g_series};
use liberation::Complex;
use output::{num, row, Provenance, Status};
use serde_json::json;
use std::f64::consts::PI;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "liberation",
    version,
    about = "Liberation flow of projection pairs: moments, densities, entropy, random matrices"
)]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Moment trajectory `t,g1,…,gN`.
    Evolve(EvolveArgs),
    /// Density of the flow on a grid (trace ½ only): `x,rho_t,re_H,im_H,converged`.
    Density(DensityArgs),
    /// Stationary (Jacobi) density `x,rho`.
    Jacobi(JacobiArgs),
    /// Entropy profile `t,phi,chi_proj` (trace ½ only).
    Entropy(EntropyArgs),
    /// Integrated Fisher information against the entropy difference (JSON report).
    Unify(UnifyArgs),
    /// Random-matrix histogram `bin_left,bin_right,count` with an atoms sidecar.
    Rmt(RmtArgs),
    /// Subordination against the moment series: `t,re_z,im_z,re_G,im_G,re_G_series,im_G_series,abs_diff`.
    Crosscheck(CrosscheckArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Trace of the first projection.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Trace of the second projection.
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Output file (standard output when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Status report file (standard error when absent).
    #[arg(long)]
    status: Option<PathBuf>,
    /// `key = value` scenario file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvolveArgs {
    #[command(flatten)]
    common: Common,
    /// Initial measure: bernoulli, uniform, arcsine, point:x, two_bump:a,b,c,d, file:path.
    #[arg(long, default_value = "bernoulli")]
    init: String,
    /// Output times: `start:step:stop`, a comma list, or a single time.
    #[arg(long, default_value = "0:0.1:1")]
    t: String,
    /// Truncation order N.
    #[arg(long, default_value_t = 64)]
    order: usize,
    /// Local error tolerance of the integrator.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Write one row per accepted integrator step instead of the time grid.
    #[arg(long)]
    accepted_steps: bool,
}

#[derive(Debug, Args)]
struct DensityArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "uniform")]
    init: String,
    /// Time of the density.
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// Number of equally spaced midpoints in (0, 1).
    #[arg(long, default_value_t = 200)]
    points: usize,
    /// Nodes used to discretise the initial density.
    #[arg(long, default_value_t = 256)]
    nodes: usize,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

#[derive(Debug, Args)]
struct JacobiArgs {
    #[command(flatten)]
    common: Common,
    /// Number of equally spaced midpoints in (0, 1).
    #[arg(long, default_value_t = 400)]
    points: usize,
    /// Also write the full stationary measure as JSON.
    #[arg(long)]
    measure_out: Option<PathBuf>,
    #[arg(long, default_value_t = 512)]
    nodes: usize,
}

#[derive(Debug, Args)]
struct EntropyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "uniform")]
    init: String,
    /// Profile times: `start:step:stop`, a comma list, or a single time.
    #[arg(long, default_value = "0:0.25:4")]
    t: String,
    #[arg(long, default_value_t = 256)]
    nodes: usize,
    /// Additive constant of the projection entropy.
    #[arg(long, default_value_t = 0.0)]
    c: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Tail {
    Exp,
    Drop,
}

#[derive(Debug, Args)]
struct UnifyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "uniform")]
    init: String,
    /// Truncation horizon of the time integral.
    #[arg(long, default_value_t = 20.0)]
    tmax: f64,
    #[arg(long, default_value_t = 256)]
    nodes: usize,
    #[arg(long, default_value_t = 0.0)]
    c: f64,
    #[arg(long, value_enum, default_value = "exp")]
    tail: Tail,
    /// Lower limit of the time integral (default 0, or 1e-2 for atomic starts).
    #[arg(long)]
    lower_cutoff: Option<f64>,
    #[arg(long, default_value_t = 1e-9)]
    quad_tol: f64,
    #[arg(long, default_value_t = 4000)]
    max_evaluations: usize,
    /// Number of equally spaced profile samples in the report.
    #[arg(long, default_value_t = 41)]
    profile_points: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CouplingArg {
    Equal,
    #[value(name = "haar_free", alias = "haar-free")]
    HaarFree,
}

#[derive(Debug, Args)]
struct RmtArgs {
    #[command(flatten)]
    common: Common,
    /// Matrix dimension.
    #[arg(long, default_value_t = 256)]
    d: usize,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, value_enum, default_value = "equal")]
    coupling: CouplingArg,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Time steps (default ⌈100·t⌉).
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, default_value_t = 200)]
    bins: usize,
    /// Atoms sidecar (default: next to `--out` as `<stem>.atoms.json`).
    #[arg(long)]
    atoms_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CrosscheckArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "bernoulli")]
    init: String,
    #[arg(long, default_value_t = 0.5)]
    t: f64,
    /// Radius of the circle of test points around ½.
    #[arg(long, default_value_t = 2.0)]
    radius: f64,
    #[arg(long, default_value_t = 20)]
    points: usize,
    /// Truncation order of the moment series.
    #[arg(long, default_value_t = 96)]
    order: usize,
    #[arg(long, default_value_t = 1e-13)]
    tol: f64,
    /// Largest acceptable disagreement; larger values are reported as warnings.
    #[arg(long, default_value_t = 1e-6)]
    threshold: f64,
    #[arg(long, default_value_t = 256)]
    nodes: usize,
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Lib(#[from] Error),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(
                Error::NoConvergence { .. }
                | Error::StepFailure { .. }
                | Error::DivergentIntegral(_)
                | Error::TailDivergence { .. },
            ) => EXIT_NO_CONVERGENCE,
            _ => EXIT_INVALID,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Collects output lines so that a failing run can still write what it has.
#[derive(Default)]
struct Run {
    lines: Vec<String>,
    warnings: Vec<String>,
}

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn run(argv: Vec<OsString>) -> i32 {
    let argv = match with_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            report_status(None, &Status { ok: false, warnings: vec![e.to_string()] });
            return EXIT_INVALID;
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let flags: Vec<String> = argv.iter().skip(2).map(|s| s.to_string_lossy().into_owned()).collect();
    let name = argv.get(1).map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let prov = Provenance::new(&name, flags);
    let common = match &cli.command {
        Command::Evolve(a) => &a.common,
        Command::Density(a) => &a.common,
        Command::Jacobi(a) => &a.common,
        Command::Entropy(a) => &a.common,
        Command::Unify(a) => &a.common,
        Command::Rmt(a) => &a.common,
        Command::Crosscheck(a) => &a.common,
    };
    let mut state = Run::default();
    let result = match &cli.command {
        Command::Evolve(a) => evolve(a, &mut state),
        Command::Density(a) => density(a, &mut state),
        Command::Jacobi(a) => jacobi(a, &prov, &mut state),
        Command::Entropy(a) => entropy(a, &mut state),
        Command::Unify(a) => unify(a, &prov, &mut state),
        Command::Rmt(a) => rmt(a, &prov, &mut state),
        Command::Crosscheck(a) => crosscheck(a, &mut state),
    };
    let (code, ok) = match &result {
        Ok(()) => (EXIT_OK, true),
        Err(e) => {
            eprintln!("error: {e}");
            state.warnings.push(e.to_string());
            if !state.lines.is_empty() {
                state.warnings.push("output is partial".into());
            }
            (e.exit_code(), false)
        }
    };
    if !state.lines.is_empty() {
        let mut text = prov.header();
        text.push('\n');
        for l in &state.lines {
            text.push_str(l);
            text.push('\n');
        }
        if let Err(e) = output::emit(common.out.as_deref(), &text) {
            eprintln!("error: cannot write output: {e}");
            state.warnings.push(format!("cannot write output: {e}"));
            report_status(common.status.as_deref(), &Status { ok: false, warnings: state.warnings });
            return EXIT_INVALID;
        }
    }
    report_status(common.status.as_deref(), &Status { ok, warnings: state.warnings });
    code
}

fn report_status(path: Option<&Path>, status: &Status) {
    let text = serde_json::to_string(status).expect("status serialises");
    match path {
        Some(p) => {
            if let Err(e) = std::fs::write(p, text + "\n") {
                eprintln!("error: cannot write status: {e}");
            }
        }
        None => eprintln!("{text}"),
    }
}

/// Splices the `--config` file, if any, in front of the command-line flags.
fn with_config(argv: Vec<OsString>) -> CliResult<Vec<OsString>> {
    if argv.len() < 2 {
        return Ok(argv);
    }
    let Some(path) = config::find_config(&argv[2..]) else {
        return Ok(argv);
    };
    let file = config::read(Path::new(&path))?;
    if file.iter().any(|(k, _)| k == "config") {
        return Err(CliError::Invalid("config files cannot include other config files".into()));
    }
    Ok(config::merge(argv[0].clone(), argv[1].clone(), &file, &argv[2..]))
}

fn params(c: &Common) -> CliResult<TraceParams> {
    Ok(TraceParams::new(c.alpha, c.beta)?)
}

/// Trace-½ commands need `α = β = ½`.
fn half_params(c: &Common, command: &str) -> CliResult<TraceParams> {
    let p = params(c)?;
    if !p.is_half() {
        return Err(CliError::Invalid(format!("{command} is available for alpha = beta = 0.5 only")));
    }
    Ok(p)
}

fn moving_part(spec: &str, p: &TraceParams, nodes: usize) -> CliResult<SpectralMeasure> {
    Ok(parse_measure_spec(spec)?.build(p, Level::Nu, nodes)?)
}

/// `start:step:stop`, a comma-separated list, or one value; nondecreasing and
/// nonnegative.
fn parse_grid(s: &str) -> CliResult<Vec<f64>> {
    let bad = |m: &str| CliError::Invalid(format!("time grid {s:?}: {m}"));
    let number = |t: &str| t.trim().parse::<f64>().map_err(|_| bad(&format!("{t:?} is not a number")));
    let grid = if s.contains(':') {
        let parts: Vec<f64> = s.split(':').map(number).collect::<CliResult<_>>()?;
        let [start, step, stop] = parts[..] else { return Err(bad("expected start:step:stop")) };
        if !(step > 0.0) || stop < start {
            return Err(bad("step must be positive and stop ≥ start"));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        let mut g: Vec<f64> = (0..=n).map(|k| start + step * k as f64).collect();
        if stop - g[n] > 1e-9 * step {
            g.push(stop);
        }
        g
    } else {
        s.split(',').map(number).collect::<CliResult<_>>()?
    };
    if grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(bad("times must be finite, nonnegative and nondecreasing"));
    }
    Ok(grid)
}

fn evolve(a: &EvolveArgs, run: &mut Run) -> CliResult<()> {
    let p = params(&a.common)?;
    if a.order == 0 {
        return Err(CliError::Invalid("order must be positive".into()));
    }
    let times = parse_grid(&a.t)?;
    let nu = moving_part(&a.init, &p, 256)?;
    let g0 = MomentVector::from_measure(&nu, &p, a.order);
    let header = std::iter::once("t".to_string()).chain((1..=a.order).map(|n| format!("g{n}"))).collect::<Vec<_>>();
    run.lines.push(header.join(","));
    let line = |t: f64, g: &[f64]| format!("{},{}", num(t), row(g));
    if a.accepted_steps {
        let stop = *times.last().expect("grid is nonempty");
        // the observer reports the initial state as well
        let mut rows = Vec::new();
        let res = evolve_moments_observed(&g0, &p, stop, a.tol, |t, g| rows.push(line(t, g)));
        run.lines.extend(rows);
        res?;
        return Ok(());
    }
    let mut current = g0;
    let mut t_prev = 0.0;
    for &t in &times {
        current = evolve_moments(&current, &p, t - t_prev, a.tol)?;
        t_prev = t;
        run.lines.push(line(t, current.moments()));
    }
    Ok(())
}

fn midpoints(n: usize) -> CliResult<Vec<f64>> {
    if n == 0 {
        return Err(CliError::Invalid("at least one grid point is required".into()));
    }
    Ok((0..n).map(|k| (k as f64 + 0.5) / n as f64).collect())
}

fn density(a: &DensityArgs, run: &mut Run) -> CliResult<()> {
    let p = half_params(&a.common, "density")?;
    if !(a.t >= 0.0) {
        return Err(CliError::Invalid("time must be nonnegative".into()));
    }
    let nu = moving_part(&a.init, &p, a.nodes)?;
    let xs = midpoints(a.points)?;
    let states = BoundarySweep::new(nu, xs.clone(), a.tol).at(a.t)?;
    run.lines.push("x,rho_t,re_H,im_H,converged".into());
    let mut unconverged = 0;
    for (x, s) in xs.iter().zip(&states) {
        let rho = (s.h.re / (PI * (x * (1.0 - x)).sqrt())).max(0.0);
        unconverged += usize::from(!s.converged);
        run.lines.push(format!("{},{},{},{},{}", num(*x), num(rho), num(s.h.re), num(s.h.im), s.converged));
    }
    if unconverged > 0 {
        run.warnings.push(format!("{unconverged} boundary values fell back to the smallest interior offset"));
    }
    Ok(())
}

fn jacobi(a: &JacobiArgs, prov: &Provenance, run: &mut Run) -> CliResult<()> {
    let p = params(&a.common)?;
    run.lines.push("x,rho".into());
    for x in midpoints(a.points)? {
        run.lines.push(format!("{},{}", num(x), num(jacobi_density(&p, x))));
    }
    if let Some(path) = &a.measure_out {
        let m = jacobi_limit(&p, a.nodes)?;
        let mut value: serde_json::Value = serde_json::from_str(&m.to_json()?).map_err(|e| Error::Io(e.to_string()))?;
        value["provenance"] = json!(prov);
        std::fs::write(path, serde_json::to_string_pretty(&value).expect("serialisable") + "\n")?;
    }
    Ok(())
}

fn entropy(a: &EntropyArgs, run: &mut Run) -> CliResult<()> {
    let p = half_params(&a.common, "entropy")?;
    let times = parse_grid(&a.t)?;
    let nu = moving_part(&a.init, &p, a.nodes)?;
    let prob = SubordinationProblem::new(nu, 0.0)?;
    let mut sampler = FlowSampler::new(&prob, a.nodes);
    run.lines.push("t,phi,chi_proj".into());
    for t in times {
        let phi = sampler.phi_star(t)?;
        let chi = sampler.chi_proj(t, a.c)?;
        run.lines.push(format!("{},{},{}", num(t), num(phi), num(chi)));
    }
    Ok(())
}

fn unify(a: &UnifyArgs, prov: &Provenance, run: &mut Run) -> CliResult<()> {
    let p = half_params(&a.common, "unify")?;
    let nu = moving_part(&a.init, &p, a.nodes)?;
    let prob = SubordinationProblem::new(nu.clone(), 0.0)?;
    let cfg = EntropyConfig {
        c_const: a.c,
        t_max: a.tmax,
        tail_model: match a.tail {
            Tail::Exp => TailModel::ExpFit,
            Tail::Drop => TailModel::Drop,
        },
        nodes: a.nodes,
        lower_cutoff: a.lower_cutoff,
        quad_tol: a.quad_tol,
        max_evaluations: a.max_evaluations,
        ..Default::default()
    };
    let i = istar(&prob, &cfg)?;
    let chi0 = chi_proj(&nu.scaled(1.0 / p.min())?, &p, &cfg)?;
    let arcsine = preset(&Preset::Arcsine, &p, Level::Nu, a.nodes)?.scaled(1.0 / p.min())?;
    let chi_inf = chi_proj(&arcsine, &p, &cfg)?;
    let gap = i.value - (chi_inf - chi0);
    if i.truncated {
        run.warnings.push(format!("integral starts at t = {} (atomic initial measure)", i.lower));
    }
    if !chi0.is_finite() {
        run.warnings.push("initial projection entropy is -inf; ftc_gap is undefined".into());
    }
    let mut sampler = FlowSampler::new(&prob, a.nodes);
    let count = a.profile_points.max(2);
    let mut profile = Vec::with_capacity(count);
    for k in 0..count {
        let t = a.tmax * k as f64 / (count - 1) as f64;
        profile.push(json!({ "t": t, "phi": sampler.phi_star(t)? }));
    }
    let finite = |x: f64| if x.is_finite() { json!(x) } else { serde_json::Value::Null };
    let report = json!({
        "istar": i.value,
        "chi_proj_t0": finite(chi0),
        "chi_proj_inf": chi_inf,
        "ftc_gap": finite(gap),
        "tail": i.tail,
        "lower": i.lower,
        "truncated": i.truncated,
        "error_estimate": i.error_estimate,
        "evaluations": i.evaluations,
        "profile": profile,
        "provenance": prov,
    });
    output::emit(a.common.out.as_deref(), &(serde_json::to_string_pretty(&report).expect("serialisable") + "\n"))?;
    Ok(())
}

fn rmt(a: &RmtArgs, prov: &Provenance, run: &mut Run) -> CliResult<()> {
    let p = params(&a.common)?;
    if !(a.t >= 0.0 && a.t.is_finite()) {
        return Err(CliError::Invalid("time must be finite and nonnegative".into()));
    }
    let steps = a.steps.unwrap_or_else(|| ((100.0 * a.t).ceil() as usize).max(1));
    let coupling = match a.coupling {
        CouplingArg::Equal => Coupling::Equal,
        CouplingArg::HaarFree => Coupling::HaarFree,
    };
    let e = empirical_angle_measure(a.d, &p, a.t, steps, a.trials, coupling, &RngStream::new(a.seed, 0))?;
    let h = e.histogram(a.bins)?;
    run.lines.push("bin_left,bin_right,count".into());
    let edges = h.edges();
    for (k, c) in h.counts.iter().enumerate() {
        run.lines.push(format!("{},{},{c}", num(edges[k]), num(edges[k + 1])));
    }
    let n = h.total as f64;
    let sidecar = json!({
        "atoms": [
            { "x": 0.0, "m": h.at_zero as f64 / n, "count": h.at_zero },
            { "x": 1.0, "m": h.at_one as f64 / n, "count": h.at_one },
        ],
        "eigenvalues": h.total,
        "trace_moments": {
            "tau_u": [e.trace_moments[0].re, e.trace_moments[0].im],
            "tau_u2": [e.trace_moments[1].re, e.trace_moments[1].im],
        },
        "steps": steps,
        "provenance": prov,
    });
    let path = a.atoms_out.clone().or_else(|| a.common.out.as_deref().map(|o| output::sidecar(o, "atoms.json")));
    match path {
        Some(path) => std::fs::write(path, serde_json::to_string_pretty(&sidecar).expect("serialisable") + "\n")?,
        None => run.warnings.push("no --out or --atoms-out given; atoms sidecar not written".into()),
    }
    Ok(())
}

fn crosscheck(a: &CrosscheckArgs, run: &mut Run) -> CliResult<()> {
    let p = half_params(&a.common, "crosscheck")?;
    if !(a.radius > 0.5 && a.points > 0) {
        return Err(CliError::Invalid("radius must exceed 1/2 and points must be positive".into()));
    }
    let nu = moving_part(&a.init, &p, a.nodes)?;
    let prob = SubordinationProblem::new(nu.clone(), a.t)?.with_tol(a.tol);
    let g = evolve_moments(&MomentVector::from_measure(&nu, &p, a.order), &p, a.t, 1e-13)?;
    run.lines.push("t,re_z,im_z,re_G,im_G,re_G_series,im_G_series,abs_diff".into());
    let mut worst: f64 = 0.0;
    for k in 0..a.points {
        let th = 2.0 * PI * (k as f64 + 0.5) / a.points as f64;
        let z = Complex::new(0.5 + a.radius * th.cos(), a.radius * th.sin());
        let sub = flow_cauchy(&prob, z)?;
        let series = match shifted_g_series(&g, &p, z) {
            Ok(v) => v,
            Err(e) => return Err(CliError::Invalid(format!("moment series at {z}: {e}"))),
        };
        // compare in the H normalisation, where both sides are O(1)
        let diff = (sqrt_prod(z) * (sub - series)).norm();
        worst = worst.max(diff);
        run.lines.push(row(&[a.t, z.re, z.im, sub.re, sub.im, series.re, series.im, diff]));
    }
    if worst > a.threshold {
        run.warnings.push(format!("largest disagreement {worst:e} exceeds threshold {:e}", a.threshold));
    }
    Ok(())
}
