//! Command-line front end. Each command writes one pretty-printed JSON
//! report (and, where noted, a CSV next to it) and returns an exit code.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{GeoError, Result};
use crate::families::{
    f_lambda_chart, h_on_grid, min_h_on_grid, plane_normal_family, prop_point, scan_lambda, vertical_family,
    PropParams,
};
use crate::foliation::{
    check_geodesic_field, classify_chart, critical_point_scan, nondegeneracy_eigencheck, psi_rank, ring_minima,
    FoliationChart, GridSpec, UnitField, FD_STEP, VERDICT_TOL,
};
use crate::geodesic::{gauss, gauss_differential, velocity_rank, matrix_rank2, GaussSign};
use crate::foliation::chart_tangents;
use crate::lorentz::{boundary_chart, HPoint, MinkVec};

pub const SCHEMA: &str = "geofoliate.report/1";
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Default angle tolerance (radians) for the eigenvector check.
pub const EIGEN_ANGLE_TOL: f64 = 1e-5;
/// Number of seeded points used for field checks in `classify`.
pub const FIELD_SAMPLES: usize = 64;
/// Grid used to pick `λ = λ_max / 2` when `--lambda` is omitted.
pub const DEFAULT_SCAN_GRID: GridSpec = GridSpec { rows: 200, cols: 200 };

#[derive(Parser, Debug)]
#[command(name = "geofoliate", version, about = "Sampled checks of geodesic foliations of hyperbolic 3-space")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Classify the tangent planes of a family's chart.
    Classify(CommonArgs),
    /// Bisect for the largest λ keeping h_λ positive on the grid.
    ScanLambda(CommonArgs),
    /// Boundary images and Gauss-map Jacobian ranks.
    Gauss(CommonArgs),
    /// Local minima of the squared distance from a base point.
    Critical(CommonArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Classify(_) => "classify",
            Command::ScanLambda(_) => "scan-lambda",
            Command::Gauss(_) => "gauss",
            Command::Critical(_) => "critical",
        }
    }

    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::Classify(a) | Command::ScanLambda(a) | Command::Gauss(a) | Command::Critical(a) => a,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Vertical,
    PlaneNormal,
    Prop,
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Example family (scan-lambda always uses prop).
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    /// α0 in radians, inside (0, π/2).
    #[arg(long, default_value_t = PropParams::DEFAULT_ALPHA0)]
    pub alpha0: f64,
    #[arg(long, default_value_t = PropParams::DEFAULT_DELTA)]
    pub delta: f64,
    /// λ for the prop family; defaults to half the scanned maximum.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Grid as NxM.
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<GridSpec>,
    /// Verdict tolerance.
    #[arg(long, default_value_t = VERDICT_TOL)]
    pub tol: f64,
    /// Base point in hyperboloid coordinates x0 x1 x2 x3.
    #[arg(long, num_args = 4, value_names = ["X0", "X1", "X2", "X3"], allow_negative_numbers = true)]
    pub base_point: Option<Vec<f64>>,
    /// Report path; a CSV, if any, is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_grid(s: &str) -> std::result::Result<GridSpec, String> {
    GridSpec::parse(s).map_err(|e| e.to_string())
}

/// Validated configuration shared by all commands.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: &'static str,
    pub family: Family,
    pub alpha0: f64,
    pub delta: f64,
    pub lambda: Option<f64>,
    pub grid: GridSpec,
    pub tol: f64,
    pub base_point: HPoint,
    pub out: PathBuf,
    pub seed: u64,
}

impl RunConfig {
    pub fn from_command(cmd: &Command) -> Result<Self> {
        let a = cmd.args();
        let name = cmd.name();
        let family = match (cmd, a.family) {
            (Command::ScanLambda(_), None | Some(Family::Prop)) => Family::Prop,
            (Command::ScanLambda(_), Some(f)) => {
                return Err(GeoError::InvalidParameter(format!("scan-lambda needs the prop family, got {f:?}")))
            }
            (_, Some(f)) => f,
            (_, None) => return Err(GeoError::InvalidParameter("--family is required".into())),
        };
        if !(a.tol > 0.0 && a.tol.is_finite()) {
            return Err(GeoError::InvalidParameter(format!("tolerance must be positive, got {}", a.tol)));
        }
        // Validates alpha0 and delta even when lambda is still unknown.
        PropParams::new(a.alpha0, a.lambda.unwrap_or(1.0), a.delta)?;
        let grid = a.grid.unwrap_or(match cmd {
            Command::Classify(_) | Command::Gauss(_) => GridSpec { rows: 20, cols: 20 },
            Command::ScanLambda(_) => DEFAULT_SCAN_GRID,
            Command::Critical(_) => GridSpec { rows: 40, cols: 40 },
        });
        let base_point = match &a.base_point {
            Some(c) => HPoint::new(MinkVec::try_new(c[0], c[1], c[2], c[3])?)?,
            None if family == Family::Prop => prop_point(2.0, 0.0),
            None => HPoint::ORIGIN,
        };
        Ok(RunConfig {
            command: name,
            family,
            alpha0: a.alpha0,
            delta: a.delta,
            lambda: a.lambda,
            grid,
            tol: a.tol,
            base_point,
            out: a.out.clone().unwrap_or_else(|| PathBuf::from(format!("{name}.json"))),
            seed: a.seed,
        })
    }

    pub fn csv_path(&self) -> PathBuf {
        self.out.with_extension("csv")
    }

    fn header(&self, lambda: Option<f64>) -> Value {
        json!({
            "schema": SCHEMA,
            "tool_version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "family": self.family,
            "params": {
                "alpha0": self.alpha0,
                "delta": self.delta,
                "lambda": lambda,
            },
            "grid": self.grid.to_string(),
            "tolerances": { "verdict": self.tol, "fd_step": FD_STEP, "eigen_angle": EIGEN_ANGLE_TOL },
            "base_point": self.base_point.coords(),
            "seed": self.seed,
        })
    }
}

/// Output of one command: the report, an optional CSV body and the exit code.
#[derive(Clone, Debug)]
pub struct CommandOutput {
    pub report: Value,
    pub csv: Option<String>,
    pub exit_code: i32,
}

struct Subject {
    chart: FoliationChart,
    field: Option<UnitField>,
    lambda: Option<f64>,
    lambda_note: Option<&'static str>,
}

fn subject(cfg: &RunConfig) -> Result<Subject> {
    Ok(match cfg.family {
        Family::Vertical => {
            let (f, c) = vertical_family();
            Subject { chart: c, field: Some(f), lambda: None, lambda_note: None }
        }
        Family::PlaneNormal => {
            let (f, c) = plane_normal_family();
            Subject { chart: c, field: Some(f), lambda: None, lambda_note: None }
        }
        Family::Prop => {
            let (lambda, note) = match cfg.lambda {
                Some(l) => (l, None),
                None => (
                    scan_lambda(cfg.alpha0, cfg.delta, &DEFAULT_SCAN_GRID)?.lambda_max / 2.0,
                    Some("half of lambda_max from a 200x200 scan"),
                ),
            };
            let p = PropParams::new(cfg.alpha0, lambda, cfg.delta)?;
            Subject { chart: f_lambda_chart(&p), field: None, lambda: Some(lambda), lambda_note: note }
        }
    })
}

pub fn cmd_classify(cfg: &RunConfig) -> Result<CommandOutput> {
    let s = subject(cfg)?;
    let report = classify_chart(&s.chart, &cfg.grid, cfg.tol);
    let field_checks = match &s.field {
        Some(field) => {
            let pts = field.sample_points(FIELD_SAMPLES, cfg.seed, 0.1);
            let residual = check_geodesic_field(field, &pts);
            let eig: Vec<Value> = pts
                .iter()
                .take(8)
                .map(|p| match nondegeneracy_eigencheck(field, p, EIGEN_ANGLE_TOL) {
                    Ok(e) => json!({ "point": p.coords(), "result": e }),
                    Err(e) => json!({ "point": p.coords(), "error": e.to_string() }),
                })
                .collect();
            json!({ "samples": pts.len(), "geodesic_residual": residual, "eigencheck": eig })
        }
        None => Value::Null,
    };
    let mut out = cfg.header(s.lambda);
    out["lambda_note"] = json!(s.lambda_note);
    out["aggregate"] = json!(report.aggregate);
    out["failures"] = json!(report.failures);
    out["field_checks"] = field_checks;
    out["classification"] = serde_json::to_value(&report).expect("serialisable");
    let exit_code = if report.failures > 0 { EXIT_NUMERIC } else { EXIT_OK };
    Ok(CommandOutput { report: out, csv: None, exit_code })
}

pub fn cmd_scan_lambda(cfg: &RunConfig) -> Result<CommandOutput> {
    let scan = scan_lambda(cfg.alpha0, cfg.delta, &cfg.grid)?;
    let at_max = scan.params_at(scan.lambda_max)?;
    let twice = scan.params_at(2.0 * scan.lambda_max)?;
    let mut csv = String::from("r,t,h_value\n");
    for (r, t, h) in h_on_grid(&at_max, &cfg.grid) {
        writeln!(csv, "{r},{t},{h}").expect("write to string");
    }
    let mut out = cfg.header(Some(scan.lambda_max));
    out["lambda_max"] = json!(scan.lambda_max);
    out["min_h_at_lambda_max"] = json!(scan.min_h_at_max);
    out["min_h_at_twice_lambda_max"] = json!(min_h_on_grid(&twice, &cfg.grid));
    out["schedule"] = serde_json::to_value(&scan.schedule).expect("serialisable");
    out["csv_rows"] = json!(cfg.grid.len());
    Ok(CommandOutput { report: out, csv: Some(csv), exit_code: EXIT_OK })
}

fn dist3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn min_pairwise(pts: &[[f64; 3]]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            m = m.min(dist3(&pts[i], &pts[j]));
        }
    }
    m
}

fn min_cross(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| dist3(x, y)))
        .fold(f64::INFINITY, f64::min)
}

pub fn cmd_gauss(cfg: &RunConfig) -> Result<CommandOutput> {
    use rayon::prelude::*;
    let s = subject(cfg)?;
    let pts = cfg.grid.cell_centers(s.chart.domain());
    type Row = Result<([f64; 3], [f64; 3], usize, usize, bool)>;
    let rows: Vec<Row> = pts
        .par_iter()
        .map(|&p| {
            let g = s.chart.eval(p.0, p.1);
            let fw = boundary_chart(&gauss(&g, GaussSign::Forward));
            let bw = boundary_chart(&gauss(&g, GaussSign::Backward));
            let rf = matrix_rank2(&gauss_differential(&s.chart, p, GaussSign::Forward)?);
            let rb = matrix_rank2(&gauss_differential(&s.chart, p, GaussSign::Backward)?);
            let (x1, x2) = chart_tangents(&s.chart, p)?;
            let agrees = velocity_rank(&x1, &x2, GaussSign::Forward) == rf && velocity_rank(&x1, &x2, GaussSign::Backward) == rb;
            Ok((fw, bw, rf, rb, agrees))
        })
        .collect();
    let mut csv = String::from("a,b,forward_x,forward_y,forward_z,backward_x,backward_y,backward_z,rank_forward,rank_backward\n");
    let (mut fws, mut bws, mut failures, mut disagreements) = (Vec::new(), Vec::new(), 0usize, 0usize);
    let mut rank_counts = [[0usize; 3]; 2];
    for (p, row) in pts.iter().zip(&rows) {
        match row {
            Ok((fw, bw, rf, rb, agrees)) => {
                writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{},{},{}",
                    p.0, p.1, fw[0], fw[1], fw[2], bw[0], bw[1], bw[2], rf, rb
                )
                .expect("write to string");
                fws.push(*fw);
                bws.push(*bw);
                rank_counts[0][*rf] += 1;
                rank_counts[1][*rb] += 1;
                disagreements += usize::from(!agrees);
            }
            Err(_) => failures += 1,
        }
    }
    let mut out = cfg.header(s.lambda);
    out["lambda_note"] = json!(s.lambda_note);
    out["samples"] = json!(pts.len());
    out["failures"] = json!(failures);
    out["rank_counts"] = json!({ "forward": rank_counts[0], "backward": rank_counts[1] });
    out["velocity_rank_disagreements"] = json!(disagreements);
    out["forward_min_pairwise_distance"] = json!(min_pairwise(&fws));
    out["backward_min_pairwise_distance"] = json!(min_pairwise(&bws));
    out["forward_backward_min_distance"] = json!(min_cross(&fws, &bws));
    let exit_code = if failures > 0 { EXIT_NUMERIC } else { EXIT_OK };
    Ok(CommandOutput { report: out, csv: Some(csv), exit_code })
}

pub fn cmd_critical(cfg: &RunConfig) -> Result<CommandOutput> {
    let s = subject(cfg)?;
    let minima = critical_point_scan(&s.chart, &cfg.base_point, &cfg.grid);
    let rings = ring_minima(&s.chart, &cfg.base_point, &cfg.grid);
    let monotone = rings.windows(2).all(|w| w[1] >= w[0]);
    let ranks: Vec<Value> = minima
        .iter()
        .map(|m| match psi_rank(&s.chart, (m.params[0], m.params[1])) {
            Ok(r) => json!(r),
            Err(e) => json!(e.to_string()),
        })
        .collect();
    let mut out = cfg.header(s.lambda);
    out["lambda_note"] = json!(s.lambda_note);
    out["minima"] = serde_json::to_value(&minima).expect("serialisable");
    out["psi_rank_at_minima"] = json!(ranks);
    out["ring_minima"] = json!(rings);
    out["ring_minima_monotone"] = json!(monotone);
    Ok(CommandOutput { report: out, csv: None, exit_code: EXIT_OK })
}

pub fn execute(cfg: &RunConfig) -> Result<CommandOutput> {
    match cfg.command {
        "classify" => cmd_classify(cfg),
        "scan-lambda" => cmd_scan_lambda(cfg),
        "gauss" => cmd_gauss(cfg),
        "critical" => cmd_critical(cfg),
        other => Err(GeoError::InvalidParameter(format!("unknown command {other}"))),
    }
}

fn write_outputs(cfg: &RunConfig, out: &CommandOutput) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(&out.report).expect("serialisable");
    text.push('\n');
    write_file(&cfg.out, &text)?;
    if let Some(csv) = &out.csv {
        write_file(&cfg.csv_path(), csv)?;
    }
    Ok(())
}

fn write_file(path: &Path, body: &str) -> std::io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, body)
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let cfg = match RunConfig::from_command(&cli.command) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let out = match execute(&cfg) {
        Ok(o) => o,
        Err(e @ GeoError::InvalidParameter(_)) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
        Err(e) => {
            eprintln!("numerical failure: {e}");
            return EXIT_NUMERIC;
        }
    };
    if let Err(e) = write_outputs(&cfg, &out) {
        eprintln!("error: cannot write {}: {e}", cfg.out.display());
        return EXIT_CONFIG;
    }
    if let Some(v) = out.report.get("aggregate").filter(|v| !v.is_null()) {
        println!("aggregate: {}", v.as_str().unwrap_or_default());
    }
    println!("report: {}", cfg.out.display());
    if out.csv.is_some() {
        println!("csv: {}", cfg.csv_path().display());
    }
    out.exit_code
}
