//! Command-line entry point: loads norm specs, runs computations and the
//! verification suite, and emits machine-first JSON reports (CSV on request).
//!
//! Exit codes: 0 success, 1 invariant violation, 2 input error.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use hesslab::acceptance::run_all;
use hesslab::constructions::{build_glued, polar_chart_2d, two_d_isometry, GluedNorm};
use hesslab::error::Error;
use hesslab::isometry::{classify, Classification, ThetaSample};
use hesslab::legendre::{dual_norm, verify_hessian_isometry, LegendreMap};
use hesslab::norms::{NormSpec, Point};
use hesslab::profile::{grid_csv, grid_report, validity_intervals};
use hesslab::tensors::{
    cartan_csv, cartan_tensor, curvature_csv, curvature_tensor, fundamental_tensor, matrix_csv,
};

#[derive(Parser)]
#[command(
    name = "hesslab",
    about = "Hessian geometry of Minkowski norms: tensors, Legendre duality, isometry classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// norm-spec JSON file
    #[arg(long)]
    spec: Option<PathBuf>,
    /// second input file (second norm spec, or angle-sample file for classify)
    #[arg(long)]
    spec2: Option<PathBuf>,
    /// evaluation point as comma-separated coordinates
    #[arg(long)]
    point: Option<String>,
    /// number of random samples
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// seed of the deterministic sample generator
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// acceptance tolerance of the command's invariant check
    #[arg(long)]
    tol: Option<f64>,
    /// write the report to this path (.csv selects CSV where supported)
    #[arg(long)]
    out: Option<PathBuf>,
    /// parameter band as `lo,hi`
    #[arg(long)]
    band: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the fundamental, Cartan and curvature tensors at a point
    Tensors(Common),
    /// Check that the Legendre transform is a Hessian isometry onto the dual
    LegendreCheck(Common),
    /// Scan a profile norm over its theta grid: metric, curvature, genericity
    ProfileScan(Common),
    /// Classify sampled angle data of an orbit-preserving isometry
    Classify(Common),
    /// Build the glued two-band norm pair and verify its nonlinear isometry
    Glue(Common),
    /// 2-D polar chart: indicatrix arclength and the chart-matching isometry
    Polar2d(Common),
    /// Run the full verification suite
    Acceptance(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, result) = match &cli.command {
        Command::Tensors(c) => (c, cmd_tensors(c)),
        Command::LegendreCheck(c) => (c, cmd_legendre_check(c)),
        Command::ProfileScan(c) => (c, cmd_profile_scan(c)),
        Command::Classify(c) => (c, cmd_classify(c)),
        Command::Glue(c) => (c, cmd_glue(c)),
        Command::Polar2d(c) => (c, cmd_polar2d(c)),
        Command::Acceptance(c) => (c, cmd_acceptance(c)),
    };
    match result {
        Ok(Outcome { report, violated }) => {
            println!("{report}");
            if let Some(path) = &common.out {
                if let Err(e) = std::fs::write(path, &report) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
            if violated {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

struct Outcome {
    report: String,
    violated: bool,
}

type CmdResult = Result<Outcome, Error>;

// ---------------------------------------------------------------------------
// shared plumbing

fn require_spec(c: &Common) -> Result<NormSpec, Error> {
    let path = c
        .spec
        .as_ref()
        .ok_or_else(|| Error::Parse("--spec is required for this command".into()))?;
    let spec = NormSpec::from_json_file(path)?;
    spec.validate()?;
    Ok(spec)
}

fn parse_point(c: &Common, n: usize) -> Result<Point, Error> {
    let raw = c
        .point
        .as_ref()
        .ok_or_else(|| Error::Parse("--point is required for this command".into()))?;
    let coords: Result<Vec<f64>, _> = raw.split(',').map(|s| s.trim().parse::<f64>()).collect();
    let coords = coords.map_err(|e| Error::Parse(format!("bad --point: {e}")))?;
    if coords.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: coords.len() });
    }
    Point::new(coords)
}

fn parse_band(c: &Common, default: (f64, f64)) -> Result<(f64, f64), Error> {
    match &c.band {
        None => Ok(default),
        Some(raw) => {
            let parts: Vec<&str> = raw.split(',').collect();
            if parts.len() != 2 {
                return Err(Error::Parse("bad --band: expected `lo,hi`".into()));
            }
            let lo = parts[0].trim().parse::<f64>().map_err(|e| Error::Parse(format!("bad --band: {e}")))?;
            let hi = parts[1].trim().parse::<f64>().map_err(|e| Error::Parse(format!("bad --band: {e}")))?;
            if lo >= hi {
                return Err(Error::Parse("bad --band: need lo < hi".into()));
            }
            Ok((lo, hi))
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-12);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

fn random_points(seed: u64, n: usize, count: usize) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v = DVector::from_fn(n, |_, _| gaussian(&mut rng));
        if v.norm() > 0.3 {
            out.push(Point::from_vector(v).unwrap());
        }
    }
    out
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Error> {
    Ok(serde_json::to_string_pretty(value)?)
}

fn rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

// ---------------------------------------------------------------------------
// tensors

#[derive(Serialize)]
struct TensorsReport {
    point: Vec<f64>,
    fundamental: Vec<Vec<f64>>,
    cartan_max_abs: f64,
    curvature_max_abs: f64,
    curvature_symmetry_residual: f64,
    curvature_bianchi_residual: f64,
    curvature: Vec<CurvEntry>,
}

#[derive(Serialize)]
struct CurvEntry {
    i: usize,
    j: usize,
    k: usize,
    l: usize,
    value: f64,
}

fn cmd_tensors(c: &Common) -> CmdResult {
    let spec = require_spec(c)?;
    let y = parse_point(c, spec.dim())?;
    let g = fundamental_tensor(&spec, &y)?;
    let cart = cartan_tensor(&spec, &y)?;
    let r = curvature_tensor(&spec, &y)?;
    let n = y.dim();
    if c.out.as_ref().is_some_and(|p| p.extension().is_some_and(|e| e == "csv")) {
        let mut report = String::new();
        report.push_str(&matrix_csv(&g.g));
        report.push('\n');
        report.push_str(&cartan_csv(&cart));
        report.push('\n');
        report.push_str(&curvature_csv(&r));
        return Ok(Outcome { report, violated: false });
    }
    let mut entries = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let v = r.get(i, j, k, l);
                    if v != 0.0 {
                        entries.push(CurvEntry { i, j, k, l, value: v });
                    }
                }
            }
        }
    }
    let report = TensorsReport {
        point: y.as_slice().to_vec(),
        fundamental: rows(&g.g),
        cartan_max_abs: cart.max_abs(),
        curvature_max_abs: r.max_abs(),
        curvature_symmetry_residual: r.symmetry_residual(),
        curvature_bianchi_residual: r.bianchi_residual(),
        curvature: entries,
    };
    Ok(Outcome { report: to_json(&report)?, violated: false })
}

// ---------------------------------------------------------------------------
// legendre-check

#[derive(Serialize)]
struct LegendreReport {
    samples: usize,
    seed: u64,
    tol: f64,
    max_residual: f64,
    residuals: Vec<f64>,
}

fn cmd_legendre_check(c: &Common) -> CmdResult {
    let spec = require_spec(c)?;
    let tol = c.tol.unwrap_or(1e-6);
    let dual = dual_norm(&spec);
    let map = LegendreMap(spec.clone());
    let samples = random_points(c.seed, spec.dim(), c.samples);
    let rep = verify_hessian_isometry(&map, &spec, &dual, &samples)?;
    let violated = rep.max_residual > tol;
    let report = LegendreReport {
        samples: c.samples,
        seed: c.seed,
        tol,
        max_residual: rep.max_residual,
        residuals: rep.residuals,
    };
    Ok(Outcome { report: to_json(&report)?, violated })
}

// ---------------------------------------------------------------------------
// profile-scan

#[derive(Serialize)]
struct ProfileScanReport {
    band: (f64, f64),
    grid: usize,
    validity_intervals: Vec<(f64, f64)>,
    rows: Vec<ScanRow>,
}

#[derive(Serialize)]
struct ScanRow {
    theta: f64,
    g_rr: f64,
    g_rt: f64,
    g_tt: f64,
    g_pp: f64,
    c_ttt: f64,
    c_tpp: f64,
    curvature: f64,
    genericity: f64,
}

fn cmd_profile_scan(c: &Common) -> CmdResult {
    let spec = require_spec(c)?;
    let NormSpec::Profile { f, .. } = &spec else {
        return Err(Error::InvalidSpec("profile-scan needs a profile spec".into()));
    };
    let band = parse_band(c, (0.05, PI - 0.05))?;
    let grid = c.samples.max(2);
    let thetas: Vec<f64> = (0..grid)
        .map(|i| band.0 + (band.1 - band.0) * i as f64 / (grid - 1) as f64)
        .collect();
    let rows = grid_report(f, &thetas)?;
    let validity = validity_intervals(f, 4000)?;
    if c.out.as_ref().is_some_and(|p| p.extension().is_some_and(|e| e == "csv")) {
        return Ok(Outcome { report: grid_csv(&rows), violated: false });
    }
    let report = ProfileScanReport {
        band,
        grid,
        validity_intervals: validity.intervals.clone(),
        rows: rows
            .into_iter()
            .map(|r| ScanRow {
                theta: r.theta,
                g_rr: r.g_rr,
                g_rt: r.g_rt,
                g_tt: r.g_tt,
                g_pp: r.g_pp,
                c_ttt: r.c_ttt,
                c_tpp: r.c_tpp,
                curvature: r.r_tppt,
                genericity: r.genericity,
            })
            .collect(),
    };
    Ok(Outcome { report: to_json(&report)?, violated: false })
}

// ---------------------------------------------------------------------------
// classify

#[derive(serde::Deserialize)]
struct SampleFile {
    samples: Vec<SampleRow>,
}

#[derive(serde::Deserialize)]
struct SampleRow {
    t: f64,
    theta: f64,
    dtheta: f64,
}

#[derive(Serialize)]
struct ClassifyReport {
    band: (f64, f64),
    samples: usize,
    verdict: String,
    ratio: Option<f64>,
    segments: Vec<(f64, f64, String)>,
}

fn cmd_classify(c: &Common) -> CmdResult {
    let spec = require_spec(c)?;
    let NormSpec::Profile { f, .. } = &spec else {
        return Err(Error::InvalidSpec("classify needs a profile spec".into()));
    };
    let path = c
        .spec2
        .as_ref()
        .ok_or_else(|| Error::Parse("--spec2 must point to the angle-sample JSON file".into()))?;
    let text = std::fs::read_to_string(path)?;
    let file: SampleFile = serde_json::from_str(&text)?;
    let samples: Vec<ThetaSample> = file
        .samples
        .iter()
        .map(|s| ThetaSample { t: s.t, theta: s.theta, dtheta: s.dtheta })
        .collect();
    let lo = samples.iter().map(|s| s.t).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.t).fold(f64::NEG_INFINITY, f64::max);
    let band = parse_band(c, (lo - 1e-9, hi + 1e-9))?;
    let tol = c.tol.unwrap_or(1e-6);
    let verdict = classify(f, &samples, band, tol, 1e-3)?;
    let (name, ratio, segments) = match &verdict {
        Classification::Linear { a, .. } => ("linear".to_string(), Some(*a), Vec::new()),
        Classification::Legendre { a, .. } => ("legendre".to_string(), Some(*a), Vec::new()),
        Classification::Glued { segments } => (
            "glued".to_string(),
            None,
            segments
                .iter()
                .map(|(lo, hi, b)| (*lo, *hi, format!("{b:?}").to_lowercase()))
                .collect(),
        ),
        Classification::Indeterminate => ("indeterminate".to_string(), None, Vec::new()),
    };
    let violated = matches!(verdict, Classification::Indeterminate);
    let report = ClassifyReport {
        band,
        samples: samples.len(),
        verdict: name,
        ratio,
        segments,
    };
    Ok(Outcome { report: to_json(&report)?, violated })
}

// ---------------------------------------------------------------------------
// glue

#[derive(Serialize)]
struct GlueReport {
    u1: (f64, f64),
    u2: (f64, f64),
    eps1: f64,
    eps2: f64,
    tol: f64,
    isometry_max_residual: f64,
    nonlinearity_witness: f64,
    boundary_jumps: Vec<f64>,
    spec_json: serde_json::Value,
}

fn cmd_glue(c: &Common) -> CmdResult {
    let glued = match &c.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            GluedNorm::from_json_str(&text)?
        }
        None => build_glued((0.4, 0.9), (1.8, 2.4), 0.05, 0.04)?,
    };
    let tol = c.tol.unwrap_or(1e-7);
    let map = glued.map();
    let mut samples = Vec::new();
    let m = c.samples.max(10);
    for i in 0..m {
        let t = 0.15 + (PI - 0.3) * (i as f64 + 0.5) / m as f64;
        let r = 0.8 + 0.05 * (i % 5) as f64;
        samples.push(hesslab::profile::chart3_to_cartesian(r, t, 0.37 * (i as f64 + 1.0))?);
    }
    let rep = verify_hessian_isometry(&map, &glued.f1, &glued.f2, &samples)?;
    let witness = hesslab::legendre::nonlinearity_witness(&map, &samples)?;
    let mut jumps = Vec::new();
    for edge in [glued.u2.0, glued.u2.1] {
        jumps.push(hesslab::constructions::boundary_jump(glued.f2_profile(), edge)?);
    }
    let violated = rep.max_residual > tol;
    let report = GlueReport {
        u1: glued.u1,
        u2: glued.u2,
        eps1: glued.eps1,
        eps2: glued.eps2,
        tol,
        isometry_max_residual: rep.max_residual,
        nonlinearity_witness: witness,
        boundary_jumps: jumps,
        spec_json: serde_json::from_str(&glued.to_json_string()?)?,
    };
    Ok(Outcome { report: to_json(&report)?, violated })
}

// ---------------------------------------------------------------------------
// polar2d

#[derive(Serialize)]
struct Polar2dReport {
    arclength: f64,
    arclength2: Option<f64>,
    isometry: Option<IsometrySummary>,
    obstruction: Option<String>,
}

#[derive(Serialize)]
struct IsometrySummary {
    samples: usize,
    max_residual: f64,
}

fn cmd_polar2d(c: &Common) -> CmdResult {
    let spec = require_spec(c)?;
    if spec.dim() != 2 {
        return Err(Error::InvalidSpec("polar2d needs 2-D specs".into()));
    }
    let tol = c.tol.unwrap_or(1e-10);
    let chart = polar_chart_2d(&spec, tol)?;
    let mut report = Polar2dReport {
        arclength: chart.arclength,
        arclength2: None,
        isometry: None,
        obstruction: None,
    };
    let mut violated = false;
    if let Some(path2) = &c.spec2 {
        let spec2 = NormSpec::from_json_file(path2)?;
        spec2.validate()?;
        if spec2.dim() != 2 {
            return Err(Error::InvalidSpec("polar2d needs 2-D specs".into()));
        }
        report.arclength2 = Some(polar_chart_2d(&spec2, tol)?.arclength);
        match two_d_isometry(&spec, &spec2) {
            Ok(iso) => {
                let samples = random_points(c.seed, 2, c.samples);
                let rep = verify_hessian_isometry(&iso, &spec, &spec2, &samples)?;
                violated = rep.max_residual > 1e-6;
                report.isometry = Some(IsometrySummary {
                    samples: c.samples,
                    max_residual: rep.max_residual,
                });
            }
            Err(Error::LengthMismatch(a, b)) => {
                report.obstruction = Some(format!(
                    "indicatrix lengths differ: {a} vs {b}; no chart-matching isometry"
                ));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Outcome { report: to_json(&report)?, violated })
}

// ---------------------------------------------------------------------------
// acceptance

#[derive(Serialize)]
struct AcceptanceReport {
    seed: u64,
    passed: usize,
    failed: usize,
    criteria: Vec<AcceptanceEntry>,
}

#[derive(Serialize)]
struct AcceptanceEntry {
    index: usize,
    name: String,
    passed: bool,
    detail: String,
}

fn cmd_acceptance(c: &Common) -> CmdResult {
    let results = run_all(c.seed);
    for r in &results {
        eprintln!("{}", r.line());
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    let report = AcceptanceReport {
        seed: c.seed,
        passed: results.len() - failed,
        failed,
        criteria: results
            .into_iter()
            .map(|r| AcceptanceEntry {
                index: r.index,
                name: r.name.to_string(),
                passed: r.passed,
                detail: r.detail,
            })
            .collect(),
    };
    Ok(Outcome { report: to_json(&report)?, violated: failed > 0 })
}
