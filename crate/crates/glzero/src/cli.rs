//! Command-line front end: argument parsing, dispatch, and artifact writing.
//!
//! Every artifact is deterministic: JSON outputs are wrapped in a
//! [`ResultEnvelope`] that echoes the parsed configuration and the seed, CSV
//! floats use the shortest round-trip formatting, and no timing or host
//! information is ever written.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::asym::{self, ECurve, GTable};
use crate::cell;
use crate::domain::{self, DomainProblem, GLState, Geometry, Mode};
use crate::energy1d;
use crate::expr::Expr;
use crate::grid::Grid1D;
use crate::io::{self, ResultEnvelope};
use crate::montgomery;
use crate::plot::{self, PlotKind};
use crate::strip::{self, StripGrid};
use crate::{Error, Result};

/// Numerics for a hierarchy of effective models of superconductivity near a
/// vanishing magnetic field: transverse spectral problem, reduced 1D energy,
/// strip and cell models, and the 2D Ginzburg-Landau functional.
#[derive(Debug, Parser)]
#[command(name = "glzero", version, max_term_width = 100)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Lowest eigenvalue of the transverse operator -d2/dt2 + (t^2/2 + tau)^2.
    Montgomery(MontgomeryArgs),
    /// Reduced 1D energy at a field strength b: minimize over the shift alpha.
    E1d(E1dArgs),
    /// Strip model: per-length ground energy E(L) and the matching check
    /// against the reduced 1D energy.
    Strip(StripArgs),
    /// Periodic cell model: bulk energy density g(b) extrapolated in the cell
    /// radius.
    Cell(CellArgs),
    /// Minimize the 2D Ginzburg-Landau energy on a disc or rectangle.
    Domain(DomainArgs),
    /// Compare a computed state against the asymptotic leading-order formulas.
    Verify(VerifyArgs),
    /// Run a parameter sweep from a JSON config and aggregate rows into CSV.
    Sweep(SweepArgs),
    /// Render a CSV artifact as an SVG plot.
    Plot(PlotArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct MontgomeryArgs {
    /// Sample lambda(tau) on this interval, written as "lo,hi".
    #[arg(long = "tau-range", value_name = "LO,HI", allow_hyphen_values = true)]
    pub tau_range: Option<String>,
    /// Number of tau samples (endpoints included).
    #[arg(long, default_value_t = 29)]
    pub samples: usize,
    /// Locate the minimum of lambda(tau) instead of sampling a curve.
    #[arg(long)]
    pub minimize: bool,
    /// Tolerance on tau for the minimization.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Half-width of the computational interval [-T, T].
    #[arg(long = "T", default_value_t = 12.0)]
    pub truncation: f64,
    /// Number of grid nodes.
    #[arg(long, default_value_t = 4801)]
    pub n: usize,
    /// Output path (CSV for a curve, JSON for the minimum).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct E1dArgs {
    /// Single field strength b.
    #[arg(long, conflicts_with = "b_range")]
    pub b: Option<f64>,
    /// Batch mode: sample b on this interval, written as "lo,hi".
    #[arg(long = "b-range", value_name = "LO,HI")]
    pub b_range: Option<String>,
    /// Number of b samples in batch mode.
    #[arg(long, default_value_t = 26)]
    pub samples: usize,
    /// Tolerance on alpha for the inner minimization.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    /// Half-width of the computational interval [-T, T].
    #[arg(long = "T", default_value_t = 12.0)]
    pub truncation: f64,
    /// Number of grid nodes.
    #[arg(long, default_value_t = 1201)]
    pub n: usize,
    /// Output path (JSON for a single b, CSV for a range).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct StripArgs {
    /// Strip length parameter L.
    #[arg(long = "L")]
    pub l: Option<f64>,
    /// Half-length resolutions used for the finite-size fit, e.g. "4,8,16".
    #[arg(long = "R", default_value = "4,8,16", value_name = "R1,R2,...")]
    pub r: String,
    /// Tabulate E(L) over an L range instead of a single point.
    #[arg(long)]
    pub table: bool,
    /// L interval for --table, written as "lo,hi" (geometric spacing).
    #[arg(long = "L-range", value_name = "LO,HI", default_value = "0.05,3")]
    pub l_range: String,
    /// Number of L samples for --table.
    #[arg(long, default_value_t = 24)]
    pub samples: usize,
    /// Compare the strip energy against its reduced 1D prediction at one L.
    #[arg(long)]
    pub conjecture: bool,
    /// Inner solver tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Also persist the minimizing field at the largest R (single-L mode).
    #[arg(long = "field-out")]
    pub field_out: Option<PathBuf>,
    /// Output path (JSON for a single L or --conjecture, CSV for --table).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CellArgs {
    /// b interval, written as "lo,hi".
    #[arg(long = "b-range", default_value = "0.05,1.3", value_name = "LO,HI")]
    pub b_range: String,
    /// Number of b samples (endpoints included).
    #[arg(long, default_value_t = 26)]
    pub samples: usize,
    /// Cell radii used for the extrapolation, e.g. "8,16,32".
    #[arg(long = "r", default_value = "8,16,32", value_name = "R1,R2,...")]
    pub r: String,
    /// Output CSV path (columns b,g,envelope,r_max).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct DomainArgs {
    /// Domain shape: "disc" or "rect".
    #[arg(long, default_value = "disc")]
    pub geometry: String,
    /// Disc radius (with --geometry disc).
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    /// Rectangle corners "x0,x1,y0,y1" (with --geometry rect).
    #[arg(long, value_name = "X0,X1,Y0,Y1", allow_hyphen_values = true)]
    pub rect: Option<String>,
    /// Field profile B0(x1,x2), e.g. "x1" or "x1*x1 - 0.5".
    #[arg(long = "B0")]
    pub b0: String,
    /// Ginzburg-Landau parameter kappa.
    #[arg(long)]
    pub kappa: f64,
    /// Field scale sigma; the applied field is H = sigma * kappa^2.
    #[arg(long, conflicts_with = "h_field")]
    pub sigma: Option<f64>,
    /// Applied field H given directly instead of through sigma.
    #[arg(long = "H")]
    pub h_field: Option<f64>,
    /// "fixed" keeps the vector potential at its applied value; "full"
    /// also minimizes over the potential.
    #[arg(long, default_value = "fixed")]
    pub mode: String,
    /// Mesh spacing override; default is (kappa*H)^(-1/3) / 8.
    #[arg(long)]
    pub spacing: Option<f64>,
    /// Solver tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Seed for the initial-guess noise.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Bins for the decay profile in the report.
    #[arg(long, default_value_t = 24)]
    pub bins: usize,
    /// Binary state output: one JSON header line, then the psi and potential
    /// deviation fields as little-endian f64 re/im pairs.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON report with energy parts, residuals, masses, and the decay fit.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Also write the problem description JSON consumed by `verify`.
    #[arg(long = "problem-out")]
    pub problem_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    /// Problem description JSON: {"geometry": .., "b0": .., "kappa": ..,
    /// "sigma": ..} (or "h_field" in place of "sigma").
    #[arg(long)]
    pub problem: PathBuf,
    /// Binary state produced by `domain --out`. When absent the state is
    /// recomputed from the problem description.
    #[arg(long)]
    pub state: Option<PathBuf>,
    /// E(L) table CSV (columns L,E) from `strip --table`.
    #[arg(long)]
    pub ecurve: PathBuf,
    /// g(b) table CSV (columns b,g) from `cell`.
    #[arg(long)]
    pub gtable: PathBuf,
    /// Re-solve and verify at these kappa values (sigma held fixed),
    /// reporting the normalized-gap trend.
    #[arg(long = "kappa-sweep", value_name = "K1,K2,...")]
    pub kappa_sweep: Option<String>,
    /// Solver tolerance for recomputed states.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Seed for recomputed states.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output report JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    /// Sweep configuration JSON.
    #[arg(long)]
    pub config: PathBuf,
    /// Aggregated CSV output.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PlotArgs {
    /// Input CSV produced by another subcommand.
    #[arg(long)]
    pub csv: PathBuf,
    /// Plot kind: ecurve | gtable | decay | verify.
    #[arg(long)]
    pub kind: String,
    /// Output SVG path.
    #[arg(long)]
    pub out: PathBuf,
}

/// Parse "a,b" into a pair with a < b.
fn parse_range(s: &str, what: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() == 2 {
        if let (Ok(a), Ok(b)) = (parts[0].parse::<f64>(), parts[1].parse::<f64>()) {
            if a < b && a.is_finite() && b.is_finite() {
                return Ok((a, b));
            }
        }
    }
    Err(Error::invalid(format!(
        "{what} must be \"lo,hi\" with lo < hi, got {s:?}"
    )))
}

/// Parse "a,b,c,..." into a list of finite floats.
fn parse_list(s: &str, what: &str) -> Result<Vec<f64>> {
    let vals: std::result::Result<Vec<f64>, _> =
        s.split(',').map(|p| p.trim().parse::<f64>()).collect();
    match vals {
        Ok(v) if !v.is_empty() && v.iter().all(|x| x.is_finite()) => Ok(v),
        _ => Err(Error::invalid(format!(
            "{what} must be a comma-separated list of numbers, got {s:?}"
        ))),
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Geometric spacing, appropriate when the interval spans decades.
fn geomspace(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if lo <= 0.0 {
        return Err(Error::invalid("geometric range requires lo > 0"));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let ratio = (hi / lo).ln() / (n - 1) as f64;
    Ok((0..n).map(|i| lo * (ratio * i as f64).exp()).collect())
}

fn config_of<T: Serialize>(args: &T) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(args)?)
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Montgomery(a) => cmd_montgomery(a),
        Cmd::E1d(a) => cmd_e1d(a),
        Cmd::Strip(a) => cmd_strip(a),
        Cmd::Cell(a) => cmd_cell(a),
        Cmd::Domain(a) => cmd_domain(a),
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::Sweep(a) => cmd_sweep(a),
        Cmd::Plot(a) => cmd_plot(a),
    }
}

fn cmd_montgomery(a: MontgomeryArgs) -> Result<()> {
    let grid = Grid1D::new(a.truncation, a.n)?;
    if a.minimize {
        let m = montgomery::minimize_lambda(&grid, a.tol)?;
        let payload = json!({
            "tau0": m.tau0,
            "lambda0": m.lambda0,
            "err": m.err,
            "grid": { "T": a.truncation, "n": a.n },
        });
        ResultEnvelope::new(config_of(&a)?, 0, payload).write(&a.out)?;
        return Ok(());
    }
    let range = a
        .tau_range
        .as_deref()
        .ok_or_else(|| Error::invalid("either --tau-range or --minimize is required"))?;
    let (lo, hi) = parse_range(range, "--tau-range")?;
    if a.samples < 2 {
        return Err(Error::invalid("--samples must be >= 2"));
    }
    let taus = linspace(lo, hi, a.samples);
    let rows: Result<Vec<Vec<f64>>> = taus
        .par_iter()
        .map(|&tau| {
            let (lambda, err) = montgomery::lambda_extrapolated(tau, &grid)?;
            Ok(vec![tau, lambda, err])
        })
        .collect();
    io::write_csv(&a.out, &["tau", "lambda", "err"], &rows?)
}

fn cmd_e1d(a: E1dArgs) -> Result<()> {
    let grid = Grid1D::new(a.truncation, a.n)?;
    if let Some(b) = a.b {
        let m = energy1d::minimize_over_alpha(b, &grid, a.tol)?;
        let payload = json!({
            "b": m.b,
            "alpha0": m.alpha0,
            "e1d": m.e1d,
            "fh_residual": m.fh_residual,
            "z1": m.z1,
            "z2": m.z2,
            "flat_landscape": m.flat_landscape,
        });
        ResultEnvelope::new(config_of(&a)?, 0, payload).write(&a.out)?;
        return Ok(());
    }
    let range = a
        .b_range
        .as_deref()
        .ok_or_else(|| Error::invalid("either --b or --b-range is required"))?;
    let (lo, hi) = parse_range(range, "--b-range")?;
    if a.samples < 2 {
        return Err(Error::invalid("--samples must be >= 2"));
    }
    let rows: Result<Vec<Vec<f64>>> = linspace(lo, hi, a.samples)
        .par_iter()
        .map(|&b| {
            let m = energy1d::minimize_over_alpha(b, &grid, a.tol)?;
            Ok(vec![
                m.b,
                m.alpha0.unwrap_or(f64::NAN),
                m.e1d,
                m.fh_residual,
                m.z1,
                m.z2,
            ])
        })
        .collect();
    io::write_csv(
        &a.out,
        &["b", "alpha0", "e1d", "fh_residual", "z1", "z2"],
        &rows?,
    )
}

fn cmd_strip(a: StripArgs) -> Result<()> {
    let r_list = parse_list(&a.r, "--R")?;
    let need_out = |o: &Option<PathBuf>| -> Result<PathBuf> {
        o.clone()
            .ok_or_else(|| Error::invalid("--out is required"))
    };
    if a.conjecture {
        let l = a
            .l
            .ok_or_else(|| Error::invalid("--conjecture requires --L"))?;
        let rec = strip::check_conjecture(l, &r_list)?;
        let payload = json!({
            "L": rec.l,
            "e_strip": rec.e_strip,
            "e_1d": rec.e_1d,
            "gap_abs": rec.gap_abs,
            "gap_rel": rec.gap_rel,
        });
        let env = ResultEnvelope::new(config_of(&a)?, 0, payload);
        match &a.out {
            Some(p) => env.write(p)?,
            None => print!("{}", env.to_json()?),
        }
        return Ok(());
    }
    if a.table {
        let (lo, hi) = parse_range(&a.l_range, "--L-range")?;
        if a.samples < 2 {
            return Err(Error::invalid("--samples must be >= 2"));
        }
        let rows: Result<Vec<Vec<f64>>> = geomspace(lo, hi, a.samples)?
            .par_iter()
            .map(|&l| {
                let pt = strip::estimate_e(l, &r_list, a.tol)?;
                Ok(vec![pt.l, pt.e, pt.err, pt.fit_c])
            })
            .collect();
        return io::write_csv(&need_out(&a.out)?, &["L", "E", "err", "fit_c"], &rows?);
    }
    let l = a
        .l
        .ok_or_else(|| Error::invalid("one of --L, --table, or --conjecture is required"))?;
    let pt = strip::estimate_e(l, &r_list, a.tol)?;
    if let Some(field_path) = &a.field_out {
        let r = *r_list.last().expect("r_list is non-empty");
        let grid = StripGrid::for_params(l, r)?;
        let m = strip::minimize_strip(l, &grid, None, a.tol)?;
        let header = json!({
            "L": l,
            "R": grid.r,
            "M": grid.m,
            "nx": grid.nx,
            "ny": grid.ny,
            "hx": grid.hx,
            "hy": grid.hy,
        });
        io::write_field(field_path, header, &[("u", &m.u)])?;
    }
    let payload = json!({
        "L": pt.l,
        "E": pt.e,
        "err": pt.err,
        "fit_c": pt.fit_c,
        "r_list": pt.r_list,
    });
    ResultEnvelope::new(config_of(&a)?, 0, payload).write(&need_out(&a.out)?)
}

fn cmd_cell(a: CellArgs) -> Result<()> {
    let (lo, hi) = parse_range(&a.b_range, "--b-range")?;
    if a.samples < 2 {
        return Err(Error::invalid("--samples must be >= 2"));
    }
    let r_list = parse_list(&a.r, "--r")?;
    let r_max = *r_list.last().expect("r_list is non-empty");
    let rows: Result<Vec<Vec<f64>>> = linspace(lo, hi, a.samples)
        .par_iter()
        .map(|&b| {
            let row = cell::estimate_g(b, &r_list)?;
            Ok(vec![row.b, row.g_est, row.envelope, r_max])
        })
        .collect();
    io::write_csv(&a.out, &["b", "g", "envelope", "r_max"], &rows?)
}

fn parse_geometry(shape: &str, radius: f64, rect: Option<&str>) -> Result<Geometry> {
    match shape {
        "disc" => {
            if radius <= 0.0 {
                return Err(Error::invalid("--radius must be positive"));
            }
            Ok(Geometry::Disc { radius })
        }
        "rect" => {
            let spec = rect.ok_or_else(|| Error::invalid("--geometry rect requires --rect"))?;
            let v = parse_list(spec, "--rect")?;
            if v.len() != 4 || v[0] >= v[1] || v[2] >= v[3] {
                return Err(Error::invalid(
                    "--rect must be \"x0,x1,y0,y1\" with x0 < x1 and y0 < y1",
                ));
            }
            Ok(Geometry::Rect {
                x0: v[0],
                x1: v[1],
                y0: v[2],
                y1: v[3],
            })
        }
        other => Err(Error::invalid(format!(
            "unknown geometry {other:?} (expected \"disc\" or \"rect\")"
        ))),
    }
}

fn parse_mode(s: &str) -> Result<Mode> {
    match s {
        "fixed" | "fixed_a" => Ok(Mode::FixedA),
        "full" => Ok(Mode::Full),
        other => Err(Error::invalid(format!(
            "unknown mode {other:?} (expected \"fixed\" or \"full\")"
        ))),
    }
}

/// Report payload shared by `domain --report` and sweep rows.
fn state_report(p: &DomainProblem, state: &GLState, bins: usize) -> serde_json::Value {
    let scale4 = 4.0 * p.kappa / p.h_field;
    let mass2 = domain::order_mass(p, state, 2, None::<fn(f64, f64) -> bool>);
    let mass4 = domain::order_mass(p, state, 4, None::<fn(f64, f64) -> bool>);
    let decay = if p.gamma.is_empty() {
        serde_json::Value::Null
    } else {
        match domain::decay_profile(p, state, bins) {
            Ok(d) => json!({
                "bin_width": d.bin_width,
                "mass": d.mass,
                "total_mass": d.total_mass,
                "m_hat": d.m_hat,
            }),
            Err(_) => serde_json::Value::Null,
        }
    };
    json!({
        "energy_total": state.energy_total,
        "parts": state.parts,
        "residuals": state.residuals,
        "sup_psi": state.sup_psi,
        "mass2": mass2,
        "mass4": mass4,
        "gamma_length": asym::gamma_length(p),
        "c_min": p.c_min,
        "mass_fraction_within": if p.gamma.is_empty() {
            serde_json::Value::Null
        } else {
            json!({
                "distance": scale4,
                "fraction": domain::mass_fraction_within(p, state, scale4),
            })
        },
        "bandwidth90": if p.gamma.is_empty() {
            serde_json::Value::Null
        } else {
            json!(domain::mass_bandwidth(p, state, 0.90))
        },
        "decay": decay,
    })
}

fn state_header(
    geometry: &Geometry,
    b0: &str,
    p: &DomainProblem,
    mode: Mode,
    seed: u64,
) -> serde_json::Value {
    json!({
        "geometry": geometry,
        "b0": b0,
        "kappa": p.kappa,
        "h_field": p.h_field,
        "mode": mode,
        "seed": seed,
        "nx": p.nx,
        "ny": p.ny,
        "hx": p.hx,
        "hy": p.hy,
        "x0": p.x0,
        "y0": p.y0,
    })
}

fn cmd_domain(a: DomainArgs) -> Result<()> {
    let geometry = parse_geometry(&a.geometry, a.radius, a.rect.as_deref())?;
    let b0 = Expr::parse(&a.b0)?;
    let h_field = match (a.sigma, a.h_field) {
        (Some(s), None) => s * a.kappa * a.kappa,
        (None, Some(h)) => h,
        _ => return Err(Error::invalid("exactly one of --sigma or --H is required")),
    };
    let mode = parse_mode(&a.mode)?;
    let p = domain::build_problem(geometry, &b0, a.kappa, h_field, a.spacing)?;
    let state = domain::minimize_gl(&p, mode, a.tol, a.seed)?;

    let a_field: Vec<Complex64> = state
        .a_dev
        .iter()
        .map(|&(ax, ay)| Complex64::new(ax, ay))
        .collect();
    io::write_field(
        &a.out,
        state_header(&geometry, &a.b0, &p, mode, a.seed),
        &[("psi", &state.psi), ("a", &a_field)],
    )?;
    if let Some(report_path) = &a.report {
        let payload = state_report(&p, &state, a.bins);
        ResultEnvelope::new(config_of(&a)?, a.seed, payload).write(report_path)?;
    }
    if let Some(problem_path) = &a.problem_out {
        let prob = json!({
            "geometry": geometry,
            "b0": a.b0,
            "kappa": a.kappa,
            "h_field": h_field,
        });
        let mut s = serde_json::to_string_pretty(&prob)?;
        s.push('\n');
        std::fs::write(problem_path, s)?;
    }
    Ok(())
}

/// Problem description consumed by `verify` and `sweep`.
#[derive(Debug, Clone, serde::Deserialize)]
struct ProblemSpec {
    geometry: Geometry,
    b0: String,
    kappa: f64,
    #[serde(default)]
    sigma: Option<f64>,
    #[serde(default)]
    h_field: Option<f64>,
}

impl ProblemSpec {
    fn h_at(&self, kappa: f64) -> Result<f64> {
        match (self.sigma, self.h_field) {
            (Some(s), None) => Ok(s * kappa * kappa),
            (None, Some(h)) => Ok(h),
            _ => Err(Error::invalid(
                "problem must give exactly one of \"sigma\" or \"h_field\"",
            )),
        }
    }

    fn build(&self, kappa: f64) -> Result<DomainProblem> {
        let b0 = Expr::parse(&self.b0)?;
        domain::build_problem(self.geometry, &b0, kappa, self.h_at(kappa)?, None)
    }
}

fn read_problem(path: &Path) -> Result<ProblemSpec> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn read_ecurve(path: &Path) -> Result<ECurve> {
    let (header, rows) = io::read_csv(path)?;
    let l = io::csv_column(&header, &rows, "L")?;
    let e = io::csv_column(&header, &rows, "E")?;
    let pts: Vec<(f64, f64)> = l.into_iter().zip(e).collect();
    ECurve::new(&pts)
}

fn read_gtable(path: &Path) -> Result<GTable> {
    let (header, rows) = io::read_csv(path)?;
    let b = io::csv_column(&header, &rows, "b")?;
    let g = io::csv_column(&header, &rows, "g")?;
    let pts: Vec<(f64, f64)> = b.into_iter().zip(g).collect();
    GTable::new(&pts)
}

fn load_state(p: &DomainProblem, path: &Path) -> Result<GLState> {
    let file = io::read_field(path)?;
    let mut psi = None;
    let mut a = None;
    for (name, data) in file.blocks {
        match name.as_str() {
            "psi" => psi = Some(data),
            "a" => a = Some(data),
            _ => {}
        }
    }
    let psi = psi.ok_or_else(|| Error::invalid("state file has no \"psi\" block"))?;
    let a = a.ok_or_else(|| Error::invalid("state file has no \"a\" block"))?;
    let a_dev: Vec<(f64, f64)> = a.iter().map(|z| (z.re, z.im)).collect();
    let mode: Mode = serde_json::from_value(
        file.header
            .get("mode")
            .cloned()
            .unwrap_or_else(|| json!("fixed_a")),
    )?;
    domain::rebuild_state(p, psi, a_dev, mode)
}

fn cmd_verify(a: VerifyArgs) -> Result<()> {
    let spec = read_problem(&a.problem)?;
    let ecurve = read_ecurve(&a.ecurve)?;
    let gtable = read_gtable(&a.gtable)?;

    let p = spec.build(spec.kappa)?;
    let state = match &a.state {
        Some(path) => load_state(&p, path)?,
        None => domain::minimize_gl(&p, Mode::FixedA, a.tol, a.seed)?,
    };
    let point = asym::verify(&p, &state, &ecurve, &gtable)?;

    let sweep = match &a.kappa_sweep {
        None => serde_json::Value::Null,
        Some(list) => {
            let kappas = parse_list(list, "--kappa-sweep")?;
            if spec.sigma.is_none() {
                return Err(Error::invalid(
                    "--kappa-sweep requires a problem given through \"sigma\"",
                ));
            }
            let reports: Result<Vec<_>> = kappas
                .par_iter()
                .map(|&k| {
                    let pk = spec.build(k)?;
                    let sk = domain::minimize_gl(&pk, Mode::FixedA, a.tol, a.seed)?;
                    asym::verify(&pk, &sk, &ecurve, &gtable)
                })
                .collect();
            let reports = reports?;
            let gaps: Vec<f64> = reports.iter().map(|r| r.gap_normalized).collect();
            let non_increasing = gaps.windows(2).all(|w| w[1] <= w[0] * 1.10);
            json!({
                "kappa": kappas,
                "reports": reports,
                "gap_normalized": gaps,
                "gap_trend_non_increasing": non_increasing,
            })
        }
    };
    let payload = json!({ "point": point, "sweep": sweep });
    ResultEnvelope::new(config_of(&a)?, a.seed, payload).write(&a.out)
}

/// Sweep configuration: one Ginzburg-Landau solve per kappa value.
#[derive(Debug, Clone, serde::Deserialize)]
struct SweepConfig {
    geometry: Geometry,
    b0: String,
    sigma: f64,
    kappa: Vec<f64>,
    #[serde(default = "default_mode_str")]
    mode: String,
    #[serde(default = "default_tol")]
    tol: f64,
    #[serde(default = "default_seed")]
    seed: u64,
}

fn default_mode_str() -> String {
    "fixed".to_owned()
}
fn default_tol() -> f64 {
    1e-8
}
fn default_seed() -> u64 {
    1
}

const SWEEP_HEADER: [&str; 13] = [
    "kappa",
    "H",
    "energy",
    "kinetic",
    "quadratic",
    "quartic",
    "magnetic",
    "sup_psi",
    "mass2",
    "mass4",
    "m_hat",
    "frac4",
    "bw90",
];

fn sweep_row(cfg: &SweepConfig, mode: Mode, kappa: f64) -> Result<Vec<f64>> {
    let b0 = Expr::parse(&cfg.b0)?;
    let h_field = cfg.sigma * kappa * kappa;
    let p = domain::build_problem(cfg.geometry, &b0, kappa, h_field, None)?;
    let state = domain::minimize_gl(&p, mode, cfg.tol, cfg.seed)?;
    let mass2 = domain::order_mass(&p, &state, 2, None::<fn(f64, f64) -> bool>);
    let mass4 = domain::order_mass(&p, &state, 4, None::<fn(f64, f64) -> bool>);
    let (m_hat, frac4, bw90) = if p.gamma.is_empty() {
        (f64::NAN, f64::NAN, f64::NAN)
    } else {
        let d = domain::decay_profile(&p, &state, 24)?;
        let scale4 = 4.0 * kappa / h_field;
        (
            d.m_hat,
            domain::mass_fraction_within(&p, &state, scale4),
            domain::mass_bandwidth(&p, &state, 0.90),
        )
    };
    Ok(vec![
        kappa,
        h_field,
        state.energy_total,
        state.parts.kinetic,
        state.parts.quadratic,
        state.parts.quartic,
        state.parts.magnetic,
        state.sup_psi,
        mass2,
        mass4,
        m_hat,
        frac4,
        bw90,
    ])
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.config)?;
    let cfg: SweepConfig = serde_json::from_str(&text)?;
    if cfg.kappa.is_empty() {
        return Err(Error::invalid("sweep config has an empty kappa grid"));
    }
    let mode = parse_mode(&cfg.mode)?;

    let results: Vec<(f64, Result<Vec<f64>>)> = cfg
        .kappa
        .par_iter()
        .map(|&k| (k, sweep_row(&cfg, mode, k)))
        .collect();

    // Deterministic order: sort by the grid key, independent of scheduling.
    let mut results = results;
    results.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut rows = Vec::with_capacity(results.len());
    let mut first_err: Option<Error> = None;
    for (k, res) in results {
        match res {
            Ok(row) => rows.push(row),
            Err(e) => {
                // Failed points keep their row, marked with NaNs, so partial
                // sweeps still aggregate; the run exits nonzero afterwards.
                let mut row = vec![f64::NAN; SWEEP_HEADER.len()];
                row[0] = k;
                rows.push(row);
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    io::write_csv(&a.out, &SWEEP_HEADER, &rows)?;
    match first_err {
        Some(e) => Err(Error::NoConvergence(format!(
            "sweep completed with failures; first: {e}"
        ))),
        None => Ok(()),
    }
}

fn cmd_plot(a: PlotArgs) -> Result<()> {
    let kind: PlotKind = a.kind.parse()?;
    let text = std::fs::read_to_string(&a.csv)?;
    let svg = plot::plot(&text, kind)?;
    std::fs::write(&a.out, svg)?;
    Ok(())
}
