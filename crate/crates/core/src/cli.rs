//! `fracnd` command-line front end.
//!
//! Exit codes: 0 certified-stable or query success, 1 not-certified,
//! 2 falsified-unstable, 64 usage error, 65 input format error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use num_complex::Complex64;

use crate::format::{
    self, AnalysisReport, CertificateJson, DecaySummary, FormatError, MembershipResult,
    OracleSummaries, PointJson, ScanSummary, Timings, Verdict,
};
use crate::lmi::{self, CertificateForm, SynthesisError, SynthesisOptions, Tolerances};
use crate::model::{ComplexPoint, HybridRoesserModel};
use crate::oracle::{self, ScanConfig, SimulationGrid};
use crate::region::RegionDescriptor;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_CERTIFIED: i32 = 1;
pub const EXIT_FALSIFIED: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;

pub const SEED_ENV: &str = "FRACND_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "fracnd",
    version,
    about = "Stability certificates for hybrid fractional Roesser systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize and verify a certificate, then run the determinant scan.
    Check(CheckArgs),
    /// Re-verify a certificate (bare or embedded in a report).
    Verify(VerifyArgs),
    /// Sample the stability region and look for roots of det(H(rho) - A).
    Scan(ScanArgs),
    /// Simulate a (1+1)-D model and test for decay.
    Simulate(SimulateArgs),
    /// Test points for membership in the stability region.
    Region(RegionArgs),
}

#[derive(Debug, Args)]
struct ScanOpts {
    /// Total number of region samples.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Outer modulus bound; defaults to 2 (1 + |A|_inf).
    #[arg(long)]
    radius_cap: Option<f64>,
    #[arg(long, default_value_t = 0.25)]
    boundary_fraction: f64,
    /// Worker threads for the scan; defaults to available parallelism.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    model: PathBuf,
    #[arg(long, default_value = "theorem2")]
    form: CertificateForm,
    /// Margin for strict inequalities; defaults to 1e-6 (1 + |A|_2).
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long, default_value_t = 5000)]
    max_iterations: usize,
    /// Skip the determinant scan.
    #[arg(long)]
    no_scan: bool,
    #[command(flatten)]
    scan: ScanOpts,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    model: PathBuf,
    /// Certificate or report file.
    #[arg(long)]
    cert: PathBuf,
    /// Margin used for both tolerances unless overridden.
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    eps_z: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    eps_p: Option<f64>,
}

#[derive(Debug, Args)]
struct ScanArgs {
    model: PathBuf,
    #[command(flatten)]
    scan: ScanOpts,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    model: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    h: f64,
    #[arg(long, default_value_t = 400)]
    steps_t: usize,
    #[arg(long, default_value_t = 20)]
    steps_j: usize,
    /// Value of every component of x1(0, j).
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    x1: f64,
    /// Value of every component of x2(0, 0); x2(t, 0) is zero for t > 0.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    x2: f64,
    #[arg(long, default_value_t = 0.1)]
    tail: f64,
    #[arg(long, default_value_t = 0.01)]
    ratio: f64,
    /// Write the trajectory as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RegionArgs {
    model: PathBuf,
    /// Comma-separated coordinates, e.g. "1,1" or "0.5+0.2j,2".
    #[arg(long = "point", required = true, allow_hyphen_values = true)]
    points: Vec<String>,
    /// Absolute membership slack; defaults to 1e-10 (1 + |rho_i|^2) per coordinate.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<crate::error::Error> for Failure {
    fn from(e: crate::error::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

struct Outcome {
    report: AnalysisReport,
    code: i32,
}

fn load_model(path: &Path) -> Result<HybridRoesserModel, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    format::parse_model(&text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn seed_from_env() -> Result<u64, Failure> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            Failure::Usage(format!("{SEED_ENV} must be an unsigned integer, got `{v}`"))
        }),
        Err(_) => Ok(0),
    }
}

fn new_report(m: &HybridRoesserModel, command: &str) -> AnalysisReport {
    AnalysisReport {
        fingerprint: format::model_fingerprint(m),
        command: command.to_string(),
        verdict: None,
        certificate: None,
        residuals: None,
        synthesis_slack: None,
        oracles: OracleSummaries::default(),
        membership: Vec::new(),
        warnings: m.warnings(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        timings: Timings {
            total_ms: 0.0,
            synthesis_ms: None,
            scan_ms: None,
            simulation_ms: None,
        },
    }
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn run_scan(m: &HybridRoesserModel, opts: &ScanOpts) -> Result<ScanSummary, Failure> {
    if opts.samples == 0 {
        return Err(Failure::Usage("--samples must be positive".into()));
    }
    let mut cfg = ScanConfig::with_budget(m, opts.samples, seed_from_env()?);
    if let Some(cap) = opts.radius_cap {
        cfg.radius_cap = cap;
    }
    cfg.boundary_fraction = opts.boundary_fraction;
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let points = oracle::sample_region(&RegionDescriptor::for_model(m), &cfg)?;
    let res = scan_points(m, &points, opts.jobs)?;
    Ok(ScanSummary {
        samples: res.samples,
        min_abs_delta: res.min_abs_delta,
        argmin: PointJson::from_point(&res.argmin),
        threshold: res.threshold,
        falsified: res.falsified(),
    })
}

#[cfg(feature = "parallel")]
fn scan_points(
    m: &HybridRoesserModel,
    points: &[ComplexPoint],
    jobs: Option<usize>,
) -> Result<oracle::ScanResult, Failure> {
    match jobs {
        Some(0) => Err(Failure::Usage("--jobs must be positive".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Failure::Usage(e.to_string()))?;
            Ok(pool.install(|| oracle::det_scan(m, points))?)
        }
        None => Ok(oracle::det_scan(m, points)?),
    }
}

#[cfg(not(feature = "parallel"))]
fn scan_points(
    m: &HybridRoesserModel,
    points: &[ComplexPoint],
    _jobs: Option<usize>,
) -> Result<oracle::ScanResult, Failure> {
    Ok(oracle::det_scan(m, points)?)
}

fn check(args: &CheckArgs) -> Result<Outcome, Failure> {
    let start = Instant::now();
    let m = load_model(&args.model)?;
    let mut report = new_report(&m, "check");
    let margin = args.margin.unwrap_or_else(|| lmi::default_margin(&m));
    if !margin.is_finite() || margin <= 0.0 {
        return Err(Failure::Usage("--margin must be positive".into()));
    }
    let mut opts = SynthesisOptions {
        margin: Some(margin),
        ..SynthesisOptions::default()
    };
    opts.solver.max_iterations = args.max_iterations;

    let t = Instant::now();
    let synthesized = lmi::synthesize_certificate(&m, args.form, &opts);
    report.timings.synthesis_ms = Some(ms_since(t));
    let mut verdict = match synthesized {
        Ok(cert) => {
            let rep = lmi::verify_certificate(&m, &cert, &Tolerances::strict(margin))?;
            let accepted = rep.accepted;
            report.certificate = Some(CertificateJson::from_certificate(&cert));
            report.residuals = Some(rep);
            if accepted {
                Verdict::CertifiedStable
            } else {
                Verdict::NotCertified
            }
        }
        Err(SynthesisError::Infeasible { best_slack }) => {
            report.synthesis_slack = Some(best_slack);
            Verdict::NotCertified
        }
        Err(SynthesisError::Model(e)) => return Err(e.into()),
        Err(e) => {
            if let SynthesisError::Solver(crate::sdpcore::SdpError::IterationLimit {
                best_slack,
                ..
            }) = &e
            {
                report.synthesis_slack = Some(*best_slack);
            }
            report.warnings.push(e.to_string());
            Verdict::NotCertified
        }
    };

    if !args.no_scan {
        let t = Instant::now();
        let scan = run_scan(&m, &args.scan)?;
        report.timings.scan_ms = Some(ms_since(t));
        if scan.falsified {
            verdict = Verdict::FalsifiedUnstable;
        }
        report.oracles.scan = Some(scan);
    }
    report.verdict = Some(verdict);
    report.timings.total_ms = ms_since(start);
    Ok(Outcome {
        report,
        code: verdict_code(verdict),
    })
}

fn verdict_code(v: Verdict) -> i32 {
    match v {
        Verdict::CertifiedStable => EXIT_OK,
        Verdict::NotCertified => EXIT_NOT_CERTIFIED,
        Verdict::FalsifiedUnstable => EXIT_FALSIFIED,
    }
}

fn verify(args: &VerifyArgs) -> Result<Outcome, Failure> {
    let start = Instant::now();
    let m = load_model(&args.model)?;
    let text = std::fs::read_to_string(&args.cert)
        .map_err(|e| Failure::Data(format!("{}: {e}", args.cert.display())))?;
    let cert = format::parse_certificate(&text)
        .map_err(|e| Failure::Data(format!("{}: {e}", args.cert.display())))?;
    let margin = args.margin.unwrap_or_else(|| lmi::default_margin(&m));
    let tol = Tolerances {
        eps_z: args.eps_z.unwrap_or(margin),
        eps_p: args.eps_p.unwrap_or(margin),
    };
    let rep = lmi::verify_certificate(&m, &cert, &tol)?;
    let verdict = if rep.accepted {
        Verdict::CertifiedStable
    } else {
        Verdict::NotCertified
    };
    let mut report = new_report(&m, "verify");
    report.certificate = Some(CertificateJson::from_certificate(&cert));
    report.residuals = Some(rep);
    report.verdict = Some(verdict);
    report.timings.total_ms = ms_since(start);
    Ok(Outcome {
        report,
        code: verdict_code(verdict),
    })
}

fn scan(args: &ScanArgs) -> Result<Outcome, Failure> {
    let start = Instant::now();
    let m = load_model(&args.model)?;
    let mut report = new_report(&m, "scan");
    let summary = run_scan(&m, &args.scan)?;
    report.timings.scan_ms = Some(ms_since(start));
    let code = if summary.falsified {
        report.verdict = Some(Verdict::FalsifiedUnstable);
        EXIT_FALSIFIED
    } else {
        EXIT_OK
    };
    report.oracles.scan = Some(summary);
    report.timings.total_ms = ms_since(start);
    Ok(Outcome { report, code })
}

fn simulate(args: &SimulateArgs) -> Result<Outcome, Failure> {
    let start = Instant::now();
    let m = load_model(&args.model)?;
    let n1 = m.n_continuous();
    let n2 = m.n() - n1;
    let grid = SimulationGrid::uniform(
        args.h,
        args.steps_t,
        args.steps_j,
        DVector::from_element(n1, args.x1),
        DVector::from_element(n2, args.x2),
    );
    let traj = oracle::simulate_1p1(&m, &grid)?;
    let decay = oracle::decay_check(&traj, args.tail, args.ratio)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    if let Some(path) = &args.csv {
        let file = std::fs::File::create(path)
            .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
        traj.write_csv(std::io::BufWriter::new(file))
            .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    }
    let mut report = new_report(&m, "simulate");
    report.oracles.decay = Some(DecaySummary {
        h: args.h,
        steps_t: args.steps_t,
        steps_j: args.steps_j,
        tail_fraction: args.tail,
        ratio: args.ratio,
        m_head: decay.m_head,
        m_tail: decay.m_tail,
        decays: decay.decays,
    });
    report.timings.simulation_ms = Some(ms_since(start));
    report.timings.total_ms = ms_since(start);
    Ok(Outcome {
        report,
        code: EXIT_OK,
    })
}

/// Parses `a`, `bj`, `a+bj`, `a-bj` (`i` is accepted for `j`).
pub fn parse_complex(text: &str) -> Option<Complex64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return None;
    }
    let Some(body) = s.strip_suffix(['j', 'i']) else {
        return s.parse().ok().map(|re| Complex64::new(re, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let imag = |t: &str| -> Option<f64> {
        match t {
            "" | "+" => Some(1.0),
            "-" => Some(-1.0),
            _ => t.parse().ok(),
        }
    };
    match split {
        Some(i) => Some(Complex64::new(body[..i].parse().ok()?, imag(&body[i..])?)),
        None => Some(Complex64::new(0.0, imag(body)?)),
    }
}

fn parse_point(text: &str) -> Option<ComplexPoint> {
    text.split(',')
        .map(parse_complex)
        .collect::<Option<Vec<_>>>()
        .map(ComplexPoint::new)
}

fn region(args: &RegionArgs) -> Result<Outcome, Failure> {
    let start = Instant::now();
    let m = load_model(&args.model)?;
    let d = RegionDescriptor::for_model(&m);
    let mut report = new_report(&m, "region");
    for text in &args.points {
        let p = parse_point(text)
            .ok_or_else(|| Failure::Usage(format!("cannot parse point `{text}`")))?;
        if p.len() != m.k() {
            return Err(Failure::Usage(format!(
                "point `{text}` has {} coordinates, model has {}",
                p.len(),
                m.k()
            )));
        }
        let inside = match args.tol {
            Some(tol) => d.in_region(&p, tol)?,
            None => d.contains(&p)?,
        };
        report.membership.push(MembershipResult {
            point: PointJson::from_point(&p),
            in_region: inside,
        });
    }
    report.timings.total_ms = ms_since(start);
    Ok(Outcome {
        report,
        code: EXIT_OK,
    })
}

fn summary_line(r: &AnalysisReport) -> String {
    let mut parts = vec![format!("fracnd {}", r.command)];
    if let Some(v) = r.verdict {
        parts.push(format!(
            "verdict: {}",
            serde_json::to_value(v).unwrap_or_default()
        ));
    }
    if let Some(res) = &r.residuals {
        parts.push(format!("lambda_max(Z) = {:.6e}", res.lambda_max_z));
    }
    if let Some(s) = &r.oracles.scan {
        parts.push(format!(
            "min |Delta| = {:.3e} over {} samples",
            s.min_abs_delta, s.samples
        ));
    }
    if let Some(d) = &r.oracles.decay {
        parts.push(format!(
            "decay {} (tail {:.3e} / head {:.3e})",
            d.decays, d.m_tail, d.m_head
        ));
    }
    for p in &r.membership {
        parts.push(format!(
            "{:?}+{:?}j in region: {}",
            p.point.re, p.point.im, p.in_region
        ));
    }
    parts.join("\n  ")
}

/// Parses `args`, runs the subcommand, writes the JSON report to `out` and
/// diagnostics to `err`. Returns the process exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write, human: bool) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = write!(err, "{e}");
            return code;
        }
    };
    let result = match &cli.command {
        Command::Check(a) => check(a),
        Command::Verify(a) => verify(a),
        Command::Scan(a) => scan(a),
        Command::Simulate(a) => simulate(a),
        Command::Region(a) => region(a),
    };
    match result {
        Ok(outcome) => {
            let json = serde_json::to_string_pretty(&outcome.report).expect("report serializes");
            let _ = writeln!(out, "{json}");
            for w in &outcome.report.warnings {
                let _ = writeln!(err, "warning: {w}");
            }
            if human {
                let _ = writeln!(err, "{}", summary_line(&outcome.report));
            }
            outcome.code
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Data(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_DATA
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    use std::io::IsTerminal;
    let human = std::io::stderr().is_terminal();
    run_with(
        args,
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
        human,
    )
}
