use clap::{Args, Parser, Subcommand, ValueEnum};
use curvegeom::curve_core::{detect_inflexions, sample_curve, CurveSamples, CurveSpec};
use curvegeom::framing::{any_normal, frenet_frame, parallel_transport_frame};
use curvegeom::global_geometry::{summarize_with, Convergence, GeometrySummary};
use curvegeom::strip_family::{boundary_csv, strip_boundary, Edge, Handedness, StripParams};
use curvegeom::sweep_engine::{rows_to_csv, rows_to_json, run_sweep, write_atomic, SweepConfig};
use curvegeom::{fmt12, GeomError};
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "curvegeom", version, about = "Twist, writhe and linking of closed space curves")]
struct Cli {
    /// Diagnostics on standard error.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Length, curvature and torsion ranges, inflexions.
    Info(InfoArgs),
    /// Twist, phase, writhe, linking and both CWF residuals as JSON.
    Summary(SummaryArgs),
    /// Like summary, but only the exit code.
    Check(SummaryArgs),
    /// Sweep the strip width and write the table.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum EdgeArg {
    Plus,
    Minus,
}

#[derive(Clone, Copy, ValueEnum)]
enum HandArg {
    Right,
    Left,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum FrameArg {
    Frenet,
    Parallel,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Clone)]
struct Source {
    /// Half-twist count of a strip.
    #[arg(long)]
    n: Option<u32>,
    /// Strip half-width.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_enum, default_value = "plus")]
    edge: EdgeArg,
    #[arg(long, value_enum, default_value = "right")]
    handedness: HandArg,
    /// Fourier-curve JSON file instead of a strip.
    #[arg(long)]
    curve: Option<PathBuf>,
    /// Grid size, a power of two in [64, 16384].
    #[arg(long, default_value_t = 2048)]
    m: usize,
}

#[derive(Args)]
struct InfoArgs {
    #[command(flatten)]
    source: Source,
    /// Curvature below which a local minimum counts as an inflexion.
    #[arg(long, default_value_t = 1e-3)]
    inflexion_tol: f64,
    /// Also write the sampled curve as CSV (t,x,y,z,kappa,tau).
    #[arg(long)]
    export: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SummaryArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Ribbon offset; defaults to 1e-3 times the curve length.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, value_enum, default_value = "frenet")]
    frame: FrameArg,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 1)]
    n: u32,
    #[arg(long)]
    alpha_min: Option<f64>,
    #[arg(long)]
    alpha_max: Option<f64>,
    #[arg(long, default_value_t = 40)]
    steps: usize,
    /// Skip |a| below this, a = (alpha - alpha_c) / alpha_c.
    #[arg(long, default_value_t = 0.005)]
    exclude: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 2048)]
    m: usize,
    #[arg(long, default_value_t = 16384)]
    m_max: usize,
    #[arg(long, value_enum, default_value = "plus")]
    edge: EdgeArg,
    #[arg(long, value_enum, default_value = "right")]
    handedness: HandArg,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Output file; a JSON mirror is written next to a CSV output.
    #[arg(long)]
    output: Option<PathBuf>,
}

enum Failure {
    Validation(String),
    Input(GeomError),
    Numerical(GeomError),
    Io(String),
}

impl From<GeomError> for Failure {
    fn from(e: GeomError) -> Self {
        match e {
            GeomError::Io(m) => Failure::Io(m),
            e if e.is_numerical() => Failure::Numerical(e),
            e => Failure::Input(e),
        }
    }
}

impl Failure {
    fn report(&self) -> ExitCode {
        let (exit, code, message) = match self {
            Failure::Validation(m) => (2, "validation", m.clone()),
            Failure::Input(e) => (2, e.code(), e.to_string()),
            Failure::Numerical(e) => (3, e.code(), e.to_string()),
            Failure::Io(m) => (4, "io", m.clone()),
        };
        eprintln!("{}", json!({ "code": code, "message": message }));
        ExitCode::from(exit)
    }
}

fn validate_m(m: usize) -> Result<(), Failure> {
    if !m.is_power_of_two() || !(64..=16384).contains(&m) {
        return Err(Failure::Validation(format!("m = {m} must be a power of two in [64, 16384]")));
    }
    Ok(())
}

fn edge(e: EdgeArg) -> Edge {
    match e {
        EdgeArg::Plus => Edge::Plus,
        EdgeArg::Minus => Edge::Minus,
    }
}

fn hand(h: HandArg) -> Handedness {
    match h {
        HandArg::Right => Handedness::Right,
        HandArg::Left => Handedness::Left,
    }
}

fn load(src: &Source, verbose: bool) -> Result<CurveSamples, Failure> {
    validate_m(src.m)?;
    let spec = match (&src.curve, src.n, src.alpha) {
        (Some(path), None, None) => CurveSpec::from_json_file(path)?,
        (None, Some(n), Some(alpha)) => {
            let p = StripParams { n, alpha, radius: 1.0, handedness: hand(src.handedness) };
            p.validate()?;
            if p.is_wide() && verbose {
                eprintln!("{}", json!({ "code": "warning", "message": "alpha >= R: the strip surface self-intersects" }));
            }
            strip_boundary(&p, edge(src.edge))
        }
        _ => {
            return Err(Failure::Validation(
                "give either --curve FILE or both --n and --alpha".into(),
            ))
        }
    };
    Ok(sample_curve(&spec, src.m)?)
}

/// Round every float in a JSON tree to 12 significant digits.
fn round_floats(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            fmt12(x)
                .parse::<f64>()
                .ok()
                .and_then(serde_json::Number::from_f64)
                .map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_floats).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, x)| (k, round_floats(x))).collect()),
        other => other,
    }
}

fn emit(value: Value, output: &Option<PathBuf>) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(&round_floats(value)).map_err(|e| Failure::Io(e.to_string()))?;
    text.push('\n');
    match output {
        Some(path) => write_atomic(path, &text).map_err(Failure::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn cmd_info(args: &InfoArgs, verbose: bool) -> Result<(), Failure> {
    if !(args.inflexion_tol > 0.0) {
        return Err(Failure::Validation("inflexion tolerance must be > 0".into()));
    }
    let s = load(&args.source, verbose)?;
    let report = detect_inflexions(&s, args.inflexion_tol);
    let taus: Vec<f64> = s.tau.iter().copied().filter(|t| t.is_finite()).collect();
    let tau_min = taus.iter().copied().fold(f64::INFINITY, f64::min);
    let tau_max = taus.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let int_tau = s.integrated_torsion().ok();
    if let Some(path) = &args.export {
        write_atomic(path, &boundary_csv(&s))?;
    }
    let value = json!({
        "label": s.spec.label(),
        "period": s.period(),
        "m": s.m,
        "length": s.length,
        "kappa_min": s.min_kappa(),
        "kappa_max": s.max_kappa(),
        "tau_min": finite_or_null(tau_min),
        "tau_max": finite_or_null(tau_max),
        "int_tau": int_tau,
        "inflexions": report,
    });
    emit(value, &args.output)
}

fn run_summary(args: &SummaryArgs, verbose: bool) -> Result<GeometrySummary, Failure> {
    if !(args.tol > 0.0) {
        return Err(Failure::Validation("tol must be > 0".into()));
    }
    let s = load(&args.source, verbose)?;
    let frame = match args.frame {
        FrameArg::Frenet => frenet_frame(&s)?,
        FrameArg::Parallel => parallel_transport_frame(&s, any_normal(&s.tangent(0))),
    };
    let eps = args.epsilon.unwrap_or(1e-3 * s.length);
    let conv = Convergence { tol: args.tol, m_max: 1 << 14 };
    Ok(summarize_with(&s, &frame, eps, &conv)?)
}

fn residuals_ok(g: &GeometrySummary, tol: f64) -> bool {
    g.converged && g.lk_residual < tol && g.cwf_residual.abs() < tol && g.cwf_g_residual.abs() < tol
}

fn residual_failure(g: &GeometrySummary) -> Failure {
    Failure::Numerical(GeomError::NotConverged {
        quantity: format!(
            "CWF balance (Lk residual {:e}, cwf {:e}, cwf_g {:e})",
            g.lk_residual, g.cwf_residual, g.cwf_g_residual
        ),
        delta: g.cwf_residual.abs().max(g.lk_delta).max(g.wr_delta),
        m: g.lk_m.max(g.wr_m),
    })
}

fn cmd_summary(args: &SummaryArgs, verbose: bool) -> Result<(), Failure> {
    let g = run_summary(args, verbose)?;
    emit(serde_json::to_value(&g).map_err(|e| Failure::Io(e.to_string()))?, &args.output)?;
    if residuals_ok(&g, args.tol) {
        Ok(())
    } else {
        Err(residual_failure(&g))
    }
}

fn cmd_check(args: &SummaryArgs, verbose: bool) -> Result<(), Failure> {
    let g = run_summary(args, verbose)?;
    if residuals_ok(&g, args.tol) {
        Ok(())
    } else {
        Err(residual_failure(&g))
    }
}

fn cmd_sweep(args: &SweepArgs, verbose: bool) -> Result<(), Failure> {
    validate_m(args.m)?;
    if !args.m_max.is_power_of_two() || args.m_max < args.m || args.m_max > 1 << 14 {
        return Err(Failure::Validation(format!("m-max = {} must be a power of two in [m, 16384]", args.m_max)));
    }
    let mut config = SweepConfig::default_for(args.n);
    config.steps = args.steps;
    config.exclude_radius = args.exclude;
    config.tol = args.tol;
    config.m_initial = args.m;
    config.m_max = args.m_max;
    config.edge = edge(args.edge);
    config.handedness = hand(args.handedness);
    if let Some(a) = args.alpha_min {
        config.alpha_min = a;
    }
    if let Some(a) = args.alpha_max {
        config.alpha_max = a;
    }
    let rows = run_sweep(&config)?;
    if verbose {
        for r in rows.iter().filter(|r| r.error.is_some()) {
            eprintln!("{}", json!({ "code": "row_failed", "message": format!("alpha = {}: {}", r.alpha, r.error.as_deref().unwrap_or("")) }));
        }
    }
    let body = match args.format {
        Format::Csv => rows_to_csv(&rows),
        Format::Json => rows_to_json(&rows),
    };
    match &args.output {
        Some(path) => {
            write_atomic(path, &body)?;
            if args.format == Format::Csv {
                write_atomic(&path.with_extension("json"), &rows_to_json(&rows))?;
            }
        }
        None => print!("{body}"),
    }
    let good = rows.iter().filter(|r| r.converged).count();
    if rows.is_empty() || 10 * good < 9 * rows.len() {
        return Err(Failure::Numerical(GeomError::NotConverged {
            quantity: format!("sweep ({good} of {} rows converged)", rows.len()),
            delta: f64::NAN,
            m: config.m_max,
        }));
    }
    Ok(())
}

fn configure_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("CURVEGEOM_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Failure::Validation(format!("CURVEGEOM_THREADS = {v:?} is not a positive integer")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Validation(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let verbose = cli.verbose > 0;
    let result = configure_threads().and_then(|_| match &cli.command {
        Command::Info(a) => cmd_info(a, verbose),
        Command::Summary(a) => cmd_summary(a, verbose),
        Command::Check(a) => cmd_check(a, verbose),
        Command::Sweep(a) => cmd_sweep(a, verbose),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}
