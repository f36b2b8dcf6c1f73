//! Command-line surface: spec loading, subcommand dispatch, and the
//! cross-method comparison harness.
//!
//! Exit codes: 0 success, 1 usage, 2 spec/schema/file errors,
//! 3 numerical failures (including comparison-tolerance violations).

use crate::bessel;
use crate::detz;
use crate::error::{Error, Result};
use crate::operator::OperatorSpec;
use crate::regfit::{ExpansionBasis};
use crate::spectral;
use crate::trace;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::io::Write as _;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser)]
#[command(
    name = "cuspdet",
    version,
    about = "Zeta-determinants of Sturm-Liouville operators with quadratic potential growth"
)]
struct Cli {
    /// Log level (overrides the CUSPDET_LOG environment variable).
    #[arg(long, global = true)]
    log_level: Option<String>,
    /// Print the table of numerical defaults as JSON and exit.
    #[arg(long)]
    show_defaults: bool,
    /// Seed recorded in outputs for randomized property runs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BesselKind {
    I,
    K,
    Iprime,
    Kprime,
    Product,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RegimeArg {
    Auto,
    Series,
    LargeArg,
    Uniform,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DetMethod {
    Wronskian,
    Trace,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate modified Bessel functions I, K and derivatives.
    Bessel {
        #[arg(long)]
        order: f64,
        #[arg(long)]
        x: f64,
        #[arg(long, value_enum, default_value_t = BesselKind::K)]
        kind: BesselKind,
        #[arg(long, value_enum, default_value_t = RegimeArg::Auto)]
        regime: RegimeArg,
        /// Print the natural log of the value instead of the value.
        #[arg(long)]
        scaled: bool,
    },
    /// Fit an asymptotic expansion basis to CSV samples (x, f).
    Fit {
        /// CSV file of samples; stdin when omitted.
        #[arg(long)]
        samples: Option<PathBuf>,
        /// Basis term as alpha:k (repeatable, ordered).
        #[arg(long = "term", required = true, allow_hyphen_values = true)]
        terms: Vec<String>,
        /// Remainder exponent of the basis.
        #[arg(long, allow_hyphen_values = true)]
        remainder: f64,
    },
    /// Resolvent trace on a z-grid, optionally with the expansion fit.
    Trace {
        #[arg(long)]
        spec: PathBuf,
        /// Geometric grid lo:hi:n; the module default grid when omitted.
        #[arg(long)]
        z_grid: Option<String>,
        /// Also fit and print the trace expansion coefficients (JSON).
        #[arg(long)]
        fit: bool,
    },
    /// Zeta-regularized determinant.
    Detz {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_enum, default_value_t = DetMethod::Both)]
        method: DetMethod,
        /// Override the spec's shift ν.
        #[arg(long)]
        nu: Option<f64>,
    },
    /// Finite-difference eigenvalues on a truncated domain.
    Eigs {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        n: usize,
        /// Skip the truncation guard (diagnostics only).
        #[arg(long)]
        unguarded: bool,
    },
    /// Eigenvalue counting function vs the Weyl curve (CSV).
    Weyl {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        lambda_max: f64,
    },
    /// Cross-method consistency matrix; nonzero exit on any failure.
    Compare {
        /// Write the CSV table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Tolerance override name=value; known names: cross_method.
        #[arg(long = "tol")]
        tolerances: Vec<String>,
    },
}

/// Versioned table of every numerical default, for audit.
#[derive(Serialize)]
struct Defaults {
    version: &'static str,
    trace_z_grid: &'static str,
    trace_split: &'static str,
    det_z_split: &'static str,
    det_tail_basis: &'static str,
    lim_fit_basis: &'static str,
    x_max_rule: &'static str,
    fd_defaults: &'static str,
    condition_ceiling: f64,
    tail_residual_ceiling: f64,
    cross_method_tolerance: f64,
}

fn defaults() -> Defaults {
    Defaults {
        version: env!("CARGO_PKG_VERSION"),
        trace_z_grid: "25 geometric points on [20, 400] * max(1, mu*a)",
        trace_split: "X* = 20 * (1 + z) / mu, algebraic IK tail beyond",
        det_z_split: "40 * max(1, mu*a); fit window 1.5 decades above",
        det_tail_basis: "{(0,1),(0,0),(-1,0),(-2,1),(-2,0),(-3,1),(-3,0),(-4,1),(-4,0)}",
        lim_fit_basis: "{(1,1),(1,0),(0,1),(0,0),(-1,0),(-2,0)}",
        x_max_rule: "solve 2*mu*X + ln(mu*X) = 16*ln(10), capped at 1e3/mu; potential W-tail cutoff at 1e-14",
        fd_defaults: "(R, n) = (40/mu, 8000) for 200 eigenvalues at mu=a=1; guard R^2 mu^2 >= 4*lambda_count",
        condition_ceiling: crate::regfit::CONDITION_CEILING,
        tail_residual_ceiling: crate::regfit::TAIL_RESIDUAL_CEILING,
        cross_method_tolerance: 1e-3,
    }
}

/// Entry point; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap handles --help/--version as "errors" with successful exit.
            let code = if e.exit_code() == 0 { EXIT_OK } else { EXIT_USAGE };
            let _ = e.print();
            return code;
        }
    };
    init_logging(cli.log_level.as_deref());
    if cli.show_defaults {
        println!("{}", serde_json::to_string_pretty(&defaults()).unwrap());
        return EXIT_OK;
    }
    let Some(command) = cli.command else {
        eprintln!("error: a subcommand is required (see --help)");
        return EXIT_USAGE;
    };
    match dispatch(command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Spec(_) | Error::Io(_) | Error::Json(_) | Error::Csv(_) => EXIT_SCHEMA,
        _ => EXIT_NUMERICAL,
    }
}

fn init_logging(level: Option<&str>) {
    let env = env_logger::Env::new().filter_or("CUSPDET_LOG", "warn");
    let mut builder = env_logger::Builder::from_env(env);
    if let Some(l) = level {
        builder.parse_filters(l);
    }
    let _ = builder.try_init();
}

fn load_spec(path: &PathBuf) -> Result<OperatorSpec> {
    let text = std::fs::read_to_string(path)?;
    let spec: OperatorSpec =
        serde_json::from_str(&text).map_err(|e| Error::spec(format!("{}: {e}", path.display())))?;
    spec.validate()?;
    Ok(spec)
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Bessel { order, x, kind, regime, scaled } => cmd_bessel(order, x, kind, regime, scaled),
        Command::Fit { samples, terms, remainder } => cmd_fit(samples, &terms, remainder),
        Command::Trace { spec, z_grid, fit } => cmd_trace(&spec, z_grid.as_deref(), fit),
        Command::Detz { spec, method, nu } => cmd_detz(&spec, method, nu),
        Command::Eigs { spec, count, r, n, unguarded } => cmd_eigs(&spec, count, r, n, unguarded),
        Command::Weyl { spec, lambda_max } => cmd_weyl(&spec, lambda_max),
        Command::Compare { out, tolerances } => cmd_compare(out, &tolerances),
    }
}

#[derive(Serialize)]
struct BesselOut {
    order: f64,
    x: f64,
    kind: &'static str,
    regime: String,
    value: f64,
    est_rel_err: f64,
}

fn cmd_bessel(order: f64, x: f64, kind: BesselKind, regime: RegimeArg, scaled: bool) -> Result<i32> {
    let (value_ln, regime_name, est): (crate::Scaled, String, f64) = match regime {
        RegimeArg::Auto | RegimeArg::Series => {
            let ev = bessel::engine::bessel_ik(order, x)?;
            let v = match kind {
                BesselKind::I => ev.i,
                BesselKind::K => ev.k,
                BesselKind::Iprime => ev.ip,
                BesselKind::Kprime => ev.kp,
                BesselKind::Product => ev.i.mul(ev.k),
            };
            let name = if ev.series_branch { "series" } else { "continued_fraction" };
            (v, name.to_string(), ev.est_rel_err)
        }
        RegimeArg::LargeArg => {
            let (v, est) = match kind {
                BesselKind::I | BesselKind::Iprime => bessel::i_large_arg(order, x, 12)?,
                BesselKind::K | BesselKind::Kprime => bessel::k_large_arg(order, x, 12)?,
                BesselKind::Product => {
                    let (i, e1) = bessel::i_large_arg(order, x, 12)?;
                    let (k, e2) = bessel::k_large_arg(order, x, 12)?;
                    (i.mul(k), e1 + e2)
                }
            };
            if matches!(kind, BesselKind::Iprime | BesselKind::Kprime) {
                return Err(Error::domain("large-arg regime does not provide derivatives"));
            }
            (v, "large_arg".to_string(), est)
        }
        RegimeArg::Uniform => {
            // Uniform expansion variables: argument = order * t.
            let t = x / order;
            let (v, est) = match kind {
                BesselKind::I => bessel::uniform_i(order, t, 3)?,
                BesselKind::K => bessel::uniform_k(order, t, 3)?,
                BesselKind::Product => {
                    let (p, e) = bessel::uniform_product(order, t, 2)?;
                    (crate::Scaled::from_f64(p), e)
                }
                _ => return Err(Error::domain("uniform regime does not provide derivatives")),
            };
            (v, "uniform".to_string(), est)
        }
    };
    let out = BesselOut {
        order,
        x,
        kind: match kind {
            BesselKind::I => "i",
            BesselKind::K => "k",
            BesselKind::Iprime => "iprime",
            BesselKind::Kprime => "kprime",
            BesselKind::Product => "product",
        },
        regime: regime_name,
        value: if scaled { value_ln.ln_abs() } else { value_ln.value() },
        est_rel_err: est,
    };
    println!("{}", serde_json::to_string(&out)?);
    Ok(EXIT_OK)
}

fn parse_terms(terms: &[String]) -> Result<Vec<(f64, u32)>> {
    terms
        .iter()
        .map(|t| {
            let (a, k) = t
                .split_once(':')
                .ok_or_else(|| Error::spec(format!("basis term '{t}' must be alpha:k")))?;
            Ok((
                a.parse::<f64>().map_err(|_| Error::spec(format!("bad exponent in '{t}'")))?,
                k.parse::<u32>().map_err(|_| Error::spec(format!("bad log power in '{t}'")))?,
            ))
        })
        .collect()
}

fn cmd_fit(samples: Option<PathBuf>, terms: &[String], remainder: f64) -> Result<i32> {
    let reader: Box<dyn std::io::Read> = match samples {
        Some(p) => Box::new(std::fs::File::open(p)?),
        None => Box::new(std::io::stdin()),
    };
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(false).from_reader(reader);
    let mut data = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() < 2 {
            return Err(Error::spec("sample rows must be x,f"));
        }
        let x: f64 = rec[0].trim().parse().map_err(|_| Error::spec("bad sample x"))?;
        let f: f64 = rec[1].trim().parse().map_err(|_| Error::spec("bad sample f"))?;
        data.push((x, f));
    }
    let basis = ExpansionBasis::new(parse_terms(terms)?, remainder)?;
    let model = crate::regfit::fit_expansion(&data, &basis)?;
    println!("{}", serde_json::to_string_pretty(&serde_json::json!({
        "terms": basis.terms,
        "coefficients": model.coeffs,
        "condition_number": model.condition_number,
        "residual_rms": model.residual_rms,
        "fit_window": model.fit_window,
    }))?);
    Ok(EXIT_OK)
}

fn parse_z_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::spec("--z-grid must be lo:hi:n"));
    }
    let lo: f64 = parts[0].parse().map_err(|_| Error::spec("bad z-grid lo"))?;
    let hi: f64 = parts[1].parse().map_err(|_| Error::spec("bad z-grid hi"))?;
    let n: usize = parts[2].parse().map_err(|_| Error::spec("bad z-grid n"))?;
    if !(lo > 0.0 && hi > lo && n >= 2) {
        return Err(Error::spec("z-grid requires 0 < lo < hi and n >= 2"));
    }
    Ok((0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect())
}

fn cmd_trace(spec_path: &PathBuf, z_grid: Option<&str>, fit: bool) -> Result<i32> {
    let spec = load_spec(spec_path)?;
    let grid = match z_grid {
        Some(s) => parse_z_grid(s)?,
        None => trace::default_z_grid(&spec),
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "z,trace")?;
    for &z in &grid {
        let t = trace::resolvent_trace(&spec, z)?;
        writeln!(out, "{z},{t}")?;
    }
    if fit {
        let exp = trace::fit_trace_expansion(&spec, &grid)?;
        writeln!(
            out,
            "{}",
            serde_json::to_string(&serde_json::json!({
                "b0": exp.b0,
                "a0": exp.a0,
                "a1": exp.a1,
                "coefficients": exp.extra.coeffs,
                "condition_number": exp.extra.condition_number,
                "residual_rms": exp.extra.residual_rms,
                "fit_window": exp.fit_window,
            }))?
        )?;
    }
    Ok(EXIT_OK)
}

fn cmd_detz(spec_path: &PathBuf, method: DetMethod, nu: Option<f64>) -> Result<i32> {
    let mut spec = load_spec(spec_path)?;
    if let Some(n) = nu {
        if n < 0.0 {
            return Err(Error::spec("nu must be >= 0"));
        }
        spec.nu = n;
    }
    let mut results = Vec::new();
    if matches!(method, DetMethod::Wronskian | DetMethod::Both) {
        results.push(detz::detz_wronskian(&spec)?);
    }
    if matches!(method, DetMethod::Trace | DetMethod::Both) {
        results.push(detz::detz_trace_integral(&spec)?);
    }
    println!("{}", serde_json::to_string_pretty(&results)?);
    Ok(EXIT_OK)
}

fn cmd_eigs(spec_path: &PathBuf, count: usize, r: f64, n: usize, unguarded: bool) -> Result<i32> {
    let spec = load_spec(spec_path)?;
    let d = if unguarded {
        spectral::fd_eigenvalues_unguarded(&spec, r, n, count)?
    } else {
        spectral::fd_eigenvalues(&spec, r, n, count)?
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "index,lambda,tolerance")?;
    for (i, (l, t)) in d.eigs.iter().zip(&d.tolerances).enumerate() {
        writeln!(out, "{},{l},{t}", i + 1)?;
    }
    Ok(EXIT_OK)
}

fn cmd_weyl(spec_path: &PathBuf, lambda_max: f64) -> Result<i32> {
    let spec = load_spec(spec_path)?;
    let w = spectral::weyl_check(&spec, lambda_max)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "lambda,count,weyl_model")?;
    for (lam, count, model) in &w.samples {
        writeln!(out, "{lam},{count},{model}")?;
    }
    Ok(EXIT_OK)
}

fn parse_tolerances(tolerances: &[String]) -> Result<f64> {
    let mut cross_method = 1e-3;
    for t in tolerances {
        let (name, value) = t
            .split_once('=')
            .ok_or_else(|| Error::spec(format!("tolerance override '{t}' must be name=value")))?;
        match name {
            "cross_method" => {
                cross_method =
                    value.parse().map_err(|_| Error::spec(format!("bad tolerance value '{value}'")))?;
            }
            other => return Err(Error::spec(format!("unknown tolerance name '{other}'"))),
        }
    }
    Ok(cross_method)
}

/// The comparison matrix: model specs across (μ, a, bc, ν) plus one
/// perturbed potential cell per boundary condition at (1, 1).
pub fn comparison_matrix() -> Vec<OperatorSpec> {
    use crate::operator::{BoundaryCondition::*, Potential};
    let mut specs = Vec::new();
    for &mu in &[0.5, 1.0, 2.0] {
        for &a in &[0.5, 1.0] {
            for bc in [Dirichlet, GeneralizedNeumann { alpha: 0.0 }, GeneralizedNeumann { alpha: 1.0 }] {
                for &nu in &[1.0, 2.0] {
                    specs.push(OperatorSpec::model(a, mu, bc, nu));
                }
            }
        }
    }
    for bc in [Dirichlet, GeneralizedNeumann { alpha: 0.0 }] {
        let mut s = OperatorSpec::model(1.0, 1.0, bc, 1.0);
        s.potential = Potential::power_exp(0.3, 0.5, 1.0);
        specs.push(s);
    }
    specs
}

fn cmd_compare(out_path: Option<PathBuf>, tolerances: &[String]) -> Result<i32> {
    use rayon::prelude::*;
    let tol = parse_tolerances(tolerances)?;
    let specs = comparison_matrix();
    let rows: Vec<Result<(usize, String, bool)>> = specs
        .par_iter()
        .enumerate()
        .map(|(i, spec)| {
            let dw = detz::detz_wronskian(spec)?;
            let dt = detz::detz_trace_integral(spec)?;
            let rel = ((dt.value - dw.value) / dw.value).abs();
            let pass = rel < tol;
            let bc = match spec.bc {
                crate::operator::BoundaryCondition::Dirichlet => "dirichlet".to_string(),
                crate::operator::BoundaryCondition::GeneralizedNeumann { alpha } => {
                    format!("neumann({alpha})")
                }
            };
            let pot = if spec.potential.is_zero() { "zero" } else { "perturbed" };
            Ok((
                i,
                format!(
                    "{},{},{bc},{pot},{},{:.12e},{:.12e},{rel:.3e},{}",
                    spec.mu,
                    spec.a,
                    spec.nu,
                    dw.value,
                    dt.value,
                    if pass { "pass" } else { "fail" }
                ),
                pass,
            ))
        })
        .collect();

    let mut ordered = Vec::with_capacity(rows.len());
    let mut all_pass = true;
    for r in rows {
        let (i, line, pass) = r?;
        all_pass &= pass;
        ordered.push((i, line));
    }
    ordered.sort_by_key(|(i, _)| *i);

    let header = "mu,a,bc,potential,nu,det_wronskian,det_trace,rel_diff,status";
    let body: String = std::iter::once(header.to_string())
        .chain(ordered.into_iter().map(|(_, l)| l))
        .collect::<Vec<_>>()
        .join("\n");
    match out_path {
        Some(p) => std::fs::write(p, body + "\n")?,
        None => println!("{body}"),
    }
    Ok(if all_pass { EXIT_OK } else { EXIT_NUMERICAL })
}
