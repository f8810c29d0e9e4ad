//! Command-line front end: kernel evaluation tables, verification suites,
//! and expansion computations, all as deterministic CSV.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 usage/parse error,
//! 3 numerical non-convergence.

use clap::{Args, Parser, Subcommand};
use oseenflow::error::KernelError;
use oseenflow::expansion::{
    beta_coefficients, expansion_closure, manufactured_flow, FlowOrders,
};
use oseenflow::geometry::{MultiIndex, PhysParams, Point3};
use oseenflow::oseen_tensor::{oseen_e, oseen_pressure};
use oseenflow::scalar_kernels::{
    heat_kernel, newton, oseen_resolvent_scalar, oseen_scalar, phi,
};
use oseenflow::stokes_rotating::{gamma, stokes_t, z_tensor, TimeQuadratureConfig};
use oseenflow::verify;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_VERIFY_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NONCONVERGENCE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "oseenflow",
    about = "Oseen and rotating-Oseen fundamental solutions: evaluation, verification, far-field expansion",
    long_about = "Evaluates the fundamental solutions of the Oseen and rotating-Oseen systems, \
                  runs the numerical verification suites (kernel identities, Fourier pairings, \
                  decay-rate fits, expansion closure), and computes far-field expansion \
                  coefficients for manufactured flows.\n\n\
                  All numeric CSV output uses 17 significant digits ('.' decimal) and is \
                  byte-identical across repeated runs with the same configuration. If the \
                  OSEENFLOW_OUT_DIR environment variable is set, relative --out paths are \
                  resolved under it.\n\n\
                  Exit codes: 0 pass, 1 verification failure, 2 usage/parse error, \
                  3 numerical non-convergence."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Reynolds-like translation speed (> 0)
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    /// Taylor-like angular speed (!= 0)
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// Relative tolerance of the Z time quadrature
    #[arg(long = "tol-rel", default_value_t = 1e-9)]
    tol_rel: f64,
    /// Absolute tolerance of the Z time quadrature
    #[arg(long = "tol-abs", default_value_t = 1e-12)]
    tol_abs: f64,
    /// Flat key=value config file ('#' comments); flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also write the CSV to this file (resolved under OSEENFLOW_OUT_DIR if relative)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a kernel at one or more points; one CSV row per point.
    ///
    /// CSV schemas (header row included):
    ///   N, phi:        x1,x2,x3,value
    ///   O:             x1,x2,x3,value
    ///   O_lambda:      x1,x2,x3,lambda,value
    ///   K:             x1,x2,x3,t,value
    ///   E:             x1,x2,x3,e11,e12,e13,e21,e22,e23,e31,e32,e33
    ///   E4:            x1,x2,x3,e41,e42,e43
    ///   T:             x1,x2,x3,t,t11,...,t33
    ///   gamma:         x1,x2,x3,y1,y2,y3,t,g11,...,g33
    ///   Z:             x1,x2,x3,y1,y2,y3,z11,...,z33,est_err
    Eval(EvalArgs),
    /// Run a verification suite; CSV rows suite,name,lhs,rhs,err,tol,pass.
    /// Exits 0 iff every check passes.
    Verify(VerifyArgs),
    /// Far-field expansion of a manufactured flow described by a key=value
    /// spec file (keys: y0, c, epsilon, S0, linearized; optional n_theta,
    /// n_phi, n_vol).
    ///
    /// CSV: record,x1,x2,x3,beta1,beta2,beta3,flux,u1,u2,u3,lead1,lead2,
    /// lead3,fluxterm1,fluxterm2,fluxterm3,g1,g2,g3,closure_rel_err
    ///
    /// Flow construction sums many kernel quadratures, so the time
    /// quadrature runs at no tighter than rel 1e-7 / abs 1e-10 here.
    Expand(ExpandArgs),
}

#[derive(Args)]
struct EvalArgs {
    /// Kernel name: N | O | O_lambda | K | phi | E | E4 | T | gamma | Z
    #[arg(long)]
    kernel: String,
    /// Evaluation point "x1,x2,x3" (repeatable)
    #[arg(long = "point", allow_hyphen_values = true)]
    points: Vec<String>,
    /// Field point for Z / gamma (repeatable)
    #[arg(long = "x", allow_hyphen_values = true)]
    xs: Vec<String>,
    /// Source point for Z / gamma
    #[arg(long = "y", allow_hyphen_values = true)]
    y: Option<String>,
    /// Time argument for K, T, gamma
    #[arg(long)]
    t: Option<f64>,
    /// Resolvent parameter for O_lambda
    #[arg(long)]
    lambda: Option<f64>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite name: identity | fourier | decay | expansion
    suite: String,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct ExpandArgs {
    /// Flow spec file (key=value lines)
    #[arg(long)]
    flow: PathBuf,
    /// Evaluation point "x1,x2,x3" (repeatable)
    #[arg(long = "point", allow_hyphen_values = true)]
    points: Vec<String>,
    #[command(flatten)]
    common: CommonArgs,
}

/// Session configuration merged from the config file and flags.
struct RunConfig {
    params: PhysParams,
    cfg: TimeQuadratureConfig,
    out: Option<PathBuf>,
}

fn parse_key_value_file(path: &PathBuf) -> Result<BTreeMap<String, String>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!(
                "{}:{}: expected key=value, got '{raw}'",
                path.display(),
                lineno + 1
            ));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

impl RunConfig {
    fn build(common: &CommonArgs, argv: &[String]) -> Result<RunConfig, String> {
        let mut tau = common.tau;
        let mut rho = common.rho;
        let mut tol_rel = common.tol_rel;
        let mut tol_abs = common.tol_abs;
        let mut out = common.out.clone();
        if let Some(path) = &common.config {
            let map = parse_key_value_file(path)?;
            let flag_given = |flag: &str| argv.iter().any(|a| a == flag || a.starts_with(&format!("{flag}=")));
            for (key, value) in &map {
                match key.as_str() {
                    "tau" if !flag_given("--tau") => {
                        tau = value.parse().map_err(|e| format!("config tau: {e}"))?
                    }
                    "rho" if !flag_given("--rho") => {
                        rho = value.parse().map_err(|e| format!("config rho: {e}"))?
                    }
                    "tol_rel" if !flag_given("--tol-rel") => {
                        tol_rel = value.parse().map_err(|e| format!("config tol_rel: {e}"))?
                    }
                    "tol_abs" if !flag_given("--tol-abs") => {
                        tol_abs = value.parse().map_err(|e| format!("config tol_abs: {e}"))?
                    }
                    "out" if out.is_none() => out = Some(PathBuf::from(value)),
                    _ => {}
                }
            }
        }
        let params = PhysParams::new(tau, rho).map_err(|e| e.to_string())?;
        let cfg = TimeQuadratureConfig {
            rel_tol: tol_rel,
            abs_tol: tol_abs,
            ..Default::default()
        };
        Ok(RunConfig { params, cfg, out })
    }

    fn resolved_out(&self) -> Option<PathBuf> {
        self.out.as_ref().map(|p| {
            if p.is_relative() {
                if let Ok(dir) = std::env::var("OSEENFLOW_OUT_DIR") {
                    return PathBuf::from(dir).join(p);
                }
            }
            p.clone()
        })
    }
}

fn parse_point(s: &str) -> Result<Point3, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("point '{s}' must have three comma-separated coordinates"));
    }
    let mut v = [0.0; 3];
    for (slot, part) in v.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|e| format!("bad coordinate '{part}' in '{s}': {e}"))?;
    }
    let p = Point3(v);
    if !p.is_finite() {
        return Err(format!("point '{s}' has non-finite coordinates"));
    }
    Ok(p)
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn emit(csv: &str, run: &RunConfig) -> Result<(), String> {
    print!("{csv}");
    if let Some(path) = run.resolved_out() {
        std::fs::write(&path, csv).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    Ok(())
}

fn exit_for(err: &KernelError) -> ExitCode {
    match err {
        KernelError::NonConvergence { .. } => ExitCode::from(EXIT_NONCONVERGENCE),
        _ => ExitCode::from(EXIT_USAGE),
    }
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

pub fn run() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders help/version itself; usage errors exit 2
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Command::Eval(args) => cmd_eval(args, &argv),
        Command::Verify(args) => cmd_verify(args, &argv),
        Command::Expand(args) => cmd_expand(args, &argv),
    }
}

fn cmd_eval(args: EvalArgs, argv: &[String]) -> ExitCode {
    let run = match RunConfig::build(&args.common, argv) {
        Ok(r) => r,
        Err(e) => return usage_error(&e),
    };
    let p = run.params;
    let mut csv = String::new();

    let parse_points = |list: &[String]| -> Result<Vec<Point3>, String> {
        if list.is_empty() {
            return Err("no evaluation points given (use --point or --x)".into());
        }
        list.iter().map(|s| parse_point(s)).collect()
    };

    let result: Result<(), KernelError> = (|| {
        match args.kernel.as_str() {
            "N" | "phi" | "O" => {
                let pts = parse_points(&args.points).map_err(invalid)?;
                csv.push_str("x1,x2,x3,value\n");
                for x in pts {
                    let v = match args.kernel.as_str() {
                        "N" => newton(&x)?,
                        "O" => oseen_scalar(&x, &p)?,
                        _ => phi(&x, &p, MultiIndex::ZERO)?,
                    };
                    let _ = writeln!(csv, "{},{},{},{}", fmt(x[0]), fmt(x[1]), fmt(x[2]), fmt(v));
                }
            }
            "O_lambda" => {
                let lambda = args.lambda.ok_or_else(|| invalid("O_lambda needs --lambda"))?;
                let pts = parse_points(&args.points).map_err(invalid)?;
                csv.push_str("x1,x2,x3,lambda,value\n");
                for x in pts {
                    let v = oseen_resolvent_scalar(&x, lambda, &p)?;
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{}",
                        fmt(x[0]),
                        fmt(x[1]),
                        fmt(x[2]),
                        fmt(lambda),
                        fmt(v)
                    );
                }
            }
            "K" => {
                let t = args.t.ok_or_else(|| invalid("K needs --t"))?;
                let pts = parse_points(&args.points).map_err(invalid)?;
                csv.push_str("x1,x2,x3,t,value\n");
                for x in pts {
                    let v = heat_kernel(&x, t, MultiIndex::ZERO, 0)?;
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{}",
                        fmt(x[0]),
                        fmt(x[1]),
                        fmt(x[2]),
                        fmt(t),
                        fmt(v)
                    );
                }
            }
            "E" => {
                let pts = parse_points(&args.points).map_err(invalid)?;
                csv.push_str("x1,x2,x3,e11,e12,e13,e21,e22,e23,e31,e32,e33\n");
                for x in pts {
                    let e = oseen_e(&x, &p, false)?.velocity;
                    let mut row = format!("{},{},{}", fmt(x[0]), fmt(x[1]), fmt(x[2]));
                    for j in 0..3 {
                        for k in 0..3 {
                            let _ = write!(row, ",{}", fmt(e.0[j][k]));
                        }
                    }
                    let _ = writeln!(csv, "{row}");
                }
            }
            "E4" => {
                let pts = parse_points(&args.points).map_err(invalid)?;
                csv.push_str("x1,x2,x3,e41,e42,e43\n");
                for x in pts {
                    let e4 = oseen_pressure(&x)?;
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{},{}",
                        fmt(x[0]),
                        fmt(x[1]),
                        fmt(x[2]),
                        fmt(e4[0]),
                        fmt(e4[1]),
                        fmt(e4[2])
                    );
                }
            }
            "T" => {
                let t = args.t.ok_or_else(|| invalid("T needs --t"))?;
                let pts = parse_points(&args.points).map_err(invalid)?;
                csv.push_str("x1,x2,x3,t,t11,t12,t13,t21,t22,t23,t31,t32,t33\n");
                for x in pts {
                    let tv = stokes_t(&x, t, MultiIndex::ZERO, 0)?;
                    let mut row =
                        format!("{},{},{},{}", fmt(x[0]), fmt(x[1]), fmt(x[2]), fmt(t));
                    for j in 0..3 {
                        for k in 0..3 {
                            let _ = write!(row, ",{}", fmt(tv.0[j][k]));
                        }
                    }
                    let _ = writeln!(csv, "{row}");
                }
            }
            "gamma" => {
                let t = args.t.ok_or_else(|| invalid("gamma needs --t"))?;
                let xs = parse_points(&args.xs).map_err(invalid)?;
                let y = parse_point(args.y.as_deref().unwrap_or("0,0,0")).map_err(invalid)?;
                csv.push_str("x1,x2,x3,y1,y2,y3,t,g11,g12,g13,g21,g22,g23,g31,g32,g33\n");
                for x in xs {
                    let g = gamma(&x, &y, t, &p, MultiIndex::ZERO)?;
                    let mut row = format!(
                        "{},{},{},{},{},{},{}",
                        fmt(x[0]),
                        fmt(x[1]),
                        fmt(x[2]),
                        fmt(y[0]),
                        fmt(y[1]),
                        fmt(y[2]),
                        fmt(t)
                    );
                    for j in 0..3 {
                        for k in 0..3 {
                            let _ = write!(row, ",{}", fmt(g.0[j][k]));
                        }
                    }
                    let _ = writeln!(csv, "{row}");
                }
            }
            "Z" => {
                let xs = parse_points(&args.xs).map_err(invalid)?;
                let y = parse_point(args.y.as_deref().unwrap_or("0,0,0")).map_err(invalid)?;
                csv.push_str(
                    "x1,x2,x3,y1,y2,y3,z11,z12,z13,z21,z22,z23,z31,z32,z33,est_err\n",
                );
                for x in xs {
                    let z = z_tensor(&x, &y, &p, &run.cfg, false, false)?;
                    let mut row = format!(
                        "{},{},{},{},{},{}",
                        fmt(x[0]),
                        fmt(x[1]),
                        fmt(x[2]),
                        fmt(y[0]),
                        fmt(y[1]),
                        fmt(y[2])
                    );
                    for j in 0..3 {
                        for k in 0..3 {
                            let _ = write!(row, ",{}", fmt(z.value.0[j][k]));
                        }
                    }
                    let _ = write!(row, ",{}", fmt(z.estimated_error));
                    let _ = writeln!(csv, "{row}");
                }
            }
            other => {
                return Err(invalid(format!(
                    "unknown kernel '{other}' (expected N|O|O_lambda|K|phi|E|E4|T|gamma|Z)"
                )))
            }
        }
        Ok(())
    })();

    match result {
        Ok(()) => {
            if let Err(e) = emit(&csv, &run) {
                return usage_error(&e);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_for(&e)
        }
    }
}

fn invalid<S: Into<String>>(msg: S) -> KernelError {
    KernelError::InvalidParameter(msg.into())
}

fn cmd_verify(args: VerifyArgs, argv: &[String]) -> ExitCode {
    let run = match RunConfig::build(&args.common, argv) {
        Ok(r) => r,
        Err(e) => return usage_error(&e),
    };
    let rows = match verify::run_suite(&args.suite, &run.params) {
        Ok(rows) => rows,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_for(&e);
        }
    };
    let mut csv = String::from("suite,name,lhs,rhs,err,tol,pass\n");
    let mut all_pass = true;
    for r in &rows {
        all_pass &= r.pass;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            r.suite,
            r.name,
            fmt(r.lhs),
            fmt(r.rhs),
            fmt(r.err),
            fmt(r.tol),
            r.pass
        );
    }
    if let Err(e) = emit(&csv, &run) {
        return usage_error(&e);
    }
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFY_FAIL)
    }
}

fn cmd_expand(args: ExpandArgs, argv: &[String]) -> ExitCode {
    let run = match RunConfig::build(&args.common, argv) {
        Ok(r) => r,
        Err(e) => return usage_error(&e),
    };
    let spec = match parse_key_value_file(&args.flow) {
        Ok(s) => s,
        Err(e) => return usage_error(&e),
    };
    let header = "record,x1,x2,x3,beta1,beta2,beta3,flux,u1,u2,u3,lead1,lead2,lead3,\
                  fluxterm1,fluxterm2,fluxterm3,g1,g2,g3,closure_rel_err\n";
    let mut csv = String::from(header);
    if spec.is_empty() {
        // empty flow spec: no coefficients to report
        if let Err(e) = emit(&csv, &run) {
            return usage_error(&e);
        }
        return ExitCode::SUCCESS;
    }

    let get_point = |key: &str| -> Result<Point3, String> {
        spec.get(key)
            .ok_or_else(|| format!("flow spec missing '{key}'"))
            .and_then(|s| parse_point(s))
    };
    let get_f64 = |key: &str| -> Result<f64, String> {
        spec.get(key)
            .ok_or_else(|| format!("flow spec missing '{key}'"))
            .and_then(|s| s.parse().map_err(|e| format!("flow spec {key}: {e}")))
    };
    let build = || -> Result<_, String> {
        let y0 = get_point("y0")?;
        let c = get_point("c")?;
        let eps = get_f64("epsilon")?;
        let s0 = get_f64("S0")?;
        let linearized = spec
            .get("linearized")
            .map(|s| s.parse::<bool>().map_err(|e| format!("flow spec linearized: {e}")))
            .transpose()?
            .unwrap_or(true);
        if !linearized {
            return Err("only linearized manufactured flows are supported".into());
        }
        let orders = FlowOrders {
            n_theta: spec.get("n_theta").map(|s| s.parse()).transpose().map_err(|e| format!("n_theta: {e}"))?.unwrap_or(12),
            n_phi: spec.get("n_phi").map(|s| s.parse()).transpose().map_err(|e| format!("n_phi: {e}"))?.unwrap_or(24),
            n_vol: spec.get("n_vol").map(|s| s.parse()).transpose().map_err(|e| format!("n_vol: {e}"))?.unwrap_or(12),
        };
        Ok((y0, c, eps, s0, orders))
    };
    let (y0, c, eps, s0, orders) = match build() {
        Ok(v) => v,
        Err(e) => return usage_error(&e),
    };

    let flow_cfg = TimeQuadratureConfig {
        rel_tol: run.cfg.rel_tol.max(1e-7),
        abs_tol: run.cfg.abs_tol.max(1e-10),
        ..run.cfg
    };
    let flow = match manufactured_flow(&y0, &c, eps, s0, &run.params, &flow_cfg, &orders) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_for(&e);
        }
    };
    let coeff = match beta_coefficients(&flow, &run.params) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_for(&e);
        }
    };
    let blank = String::new();
    let _ = writeln!(
        csv,
        "coefficients,,,,{},{},{},{},{blank},{blank},{blank},{blank},{blank},{blank},{blank},{blank},{blank},{blank},{blank},{blank},{blank}",
        fmt(coeff.beta[0]),
        fmt(coeff.beta[1]),
        fmt(coeff.beta[2]),
        fmt(coeff.flux),
    );

    let mut had_point_error = false;
    let mut had_nonconvergence = false;
    for raw in &args.points {
        let x = match parse_point(raw) {
            Ok(x) => x,
            Err(e) => return usage_error(&e),
        };
        match expansion_closure(&x, &flow, &run.params, &flow_cfg) {
            Ok(report) => {
                let mut row = format!("point,{},{},{}", fmt(x[0]), fmt(x[1]), fmt(x[2]));
                row.push_str(",,,,"); // beta and flux columns stay empty
                for v in [report.velocity, report.leading, report.flux_term, report.remainder] {
                    let _ = write!(row, ",{},{},{}", fmt(v[0]), fmt(v[1]), fmt(v[2]));
                }
                let _ = write!(row, ",{}", fmt(report.rel_err));
                let _ = writeln!(csv, "{row}");
            }
            Err(KernelError::PointInsideSphere { radius, s0 }) => {
                let _ = writeln!(
                    csv,
                    "error_point_inside_sphere,{},{},{},,,,,,,,,,,,,,,,,",
                    fmt(x[0]),
                    fmt(x[1]),
                    fmt(x[2])
                );
                eprintln!(
                    "error: evaluation point ({},{},{}) lies inside the sphere (|x| = {radius} <= S0 = {s0})",
                    x[0], x[1], x[2]
                );
                had_point_error = true;
            }
            Err(e @ KernelError::NonConvergence { .. }) => {
                eprintln!("error: {e}");
                had_nonconvergence = true;
            }
            Err(e) => {
                eprintln!("error: {e}");
                return exit_for(&e);
            }
        }
    }
    if let Err(e) = emit(&csv, &run) {
        return usage_error(&e);
    }
    if had_nonconvergence {
        ExitCode::from(EXIT_NONCONVERGENCE)
    } else if had_point_error {
        ExitCode::from(EXIT_USAGE)
    } else {
        ExitCode::SUCCESS
    }
}
