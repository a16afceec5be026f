//! `hyperperiodic`: configuration-driven front end for the periodic
//! hyperbolic solver.
//!
//! Exit codes: 0 success, 1 configuration or parse error, 2 standing
//! assumptions violated, 3 resonance or divergence, 4 dense size guard.

mod config;
mod error;
mod json;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use hyperperiodic::diagnostics::{kernel_dimension, sweep_epsilon, EpsFamily};
use hyperperiodic::resonance::analyze;
use hyperperiodic::solver::{assemble_dense, check_size, System};
use hyperperiodic::{validate, Grid, GridSpec, Solver};
use serde::Serialize;

use crate::config::{parse_grid, RunConfig};
use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "hyperperiodic",
    version,
    about = "Time-periodic solutions of 1D hyperbolic equations with Robin boundary conditions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the standing assumptions on the grid.
    Validate(Common),
    /// Evaluate the non-resonance conditions and loop factors.
    Resonance(Common),
    /// Solve and write the solution table.
    Solve(SolveArgs),
    /// Estimate the kernel dimension of the dense collocation operator.
    Kernel(Common),
    /// Solve a family of problems over the eps values of the [sweep] section.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct Common {
    /// INI run configuration.
    config: PathBuf,
    /// Write the JSON report to this path.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Override the [grid] section, e.g. 65x64.
    #[arg(long, value_name = "NXxNT", value_parser = grid_arg)]
    grid: Option<GridSpec>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// Write x,t,w,u1,u2 rows to this CSV file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report the error against the [manufactured] exact solution.
    #[arg(long)]
    compare_manufactured: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Write eps,sup_err,deriv_est rows to this CSV file.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn grid_arg(text: &str) -> Result<GridSpec, String> {
    parse_grid(text).map_err(|e| e.to_string())
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn write_json(path: Option<&Path>, value: &impl Serialize) -> Result<(), CliError> {
    if let Some(path) = path {
        let text = json::to_string(value).map_err(|e| CliError::Config(format!("json: {e}")))?;
        let mut out = create(path)?;
        out.write_all(text.as_bytes())?;
        out.flush()?;
    }
    Ok(())
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        RunConfig::load(&self.config, self.grid)
    }
}

/// Refuses to continue past violated standing assumptions.
fn require_valid(cfg: &RunConfig) -> Result<(), CliError> {
    let report = validate(&cfg.spec, cfg.grid);
    if report.passed {
        Ok(())
    } else {
        Err(hyperperiodic::Error::AssumptionsViolated(report.failures).into())
    }
}

fn cmd_validate(args: &Common) -> Result<u8, CliError> {
    let cfg = args.load()?;
    let report = validate(&cfg.spec, cfg.grid);
    println!("grid: {}x{}, T = {}", report.nx, report.nt, report.period);
    println!("min a: {:.6e}", report.min_a);
    println!("C = int a(0,t) r0(t) dt: {:.6e}", report.c_value);
    if report.passed {
        println!("validation: pass");
    } else {
        println!("validation: failed");
        for f in &report.failures {
            println!("  {f}");
        }
    }
    write_json(args.json.as_deref(), &report)?;
    Ok(if report.passed { 0 } else { 2 })
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "holds"
    } else {
        "fails"
    }
}

fn cmd_resonance(args: &Common) -> Result<u8, CliError> {
    let cfg = args.load()?;
    require_valid(&cfg)?;
    let r = analyze(&cfg.spec, cfg.grid);
    println!("{:>3} {:>24} {:>24} {:>24} {:>24}", "l", "q_l", "q_l'", "q+_l", "q+_l'");
    for l in 0..=r.k {
        println!(
            "{l:>3} {:>24.16e} {:>24.16e} {:>24.16e} {:>24.16e}",
            r.factors.q[l], r.factors.q_prime[l], r.factors_plus.q[l], r.factors_plus.q_prime[l]
        );
    }
    println!(
        "small: {} (min |integral| {:.6e})",
        verdict(r.small.passed),
        r.small.min_abs
    );
    println!(
        "small+: {} (min |integral| {:.6e})",
        verdict(r.small_plus.passed),
        r.small_plus.min_abs
    );
    for (name, ok) in [
        ("small1", r.small1),
        ("small11", r.small11),
        ("small111", r.small111),
        ("small1111", r.small1111),
    ] {
        println!("{name}: {}", verdict(ok));
    }
    if let Some(s) = r.stationary_value {
        println!("stationary integral: {s:.16e}");
    }
    let holding = r.holding();
    println!(
        "holding: {}",
        if holding.is_empty() {
            "none".into()
        } else {
            holding.join(", ")
        }
    );
    for w in &r.warnings {
        println!("warning: {w}");
    }
    write_json(args.json.as_deref(), &r)?;
    Ok(0)
}

#[derive(Serialize)]
struct ManufacturedError {
    sup_abs: f64,
    sup_rel: f64,
}

#[derive(Serialize)]
struct SolveReport {
    #[serde(flatten)]
    summary: hyperperiodic::solver::SolveSummary,
    manufactured_error: Option<ManufacturedError>,
}

fn cmd_solve(args: &SolveArgs) -> Result<u8, CliError> {
    let cfg = args.common.load()?;
    if args.compare_manufactured && cfg.manufactured.is_none() {
        return Err(CliError::Config(
            "--compare-manufactured needs a [manufactured] section".into(),
        ));
    }
    require_valid(&cfg)?;
    let result = Solver::<f64>::new(&cfg.spec, cfg.grid, cfg.solve)?.solve()?;
    let summary = result.summary();
    println!(
        "strategy: {:?}, iterations: {}, deflated modes: {}",
        summary.strategy_used, summary.iterations, summary.deflated
    );
    println!("final update: {:.6e}", summary.final_update);
    println!("representation residual: {:.6e}", summary.rep_residual);
    for w in &summary.warnings {
        println!("warning: {w}");
    }
    let manufactured_error = match (&cfg.manufactured, args.compare_manufactured) {
        (Some(mp), true) => {
            let (sup_abs, sup_rel) = mp.error(&result.w);
            println!("sup error: {sup_abs:.6e} (relative {sup_rel:.6e})");
            Some(ManufacturedError { sup_abs, sup_rel })
        }
        _ => None,
    };
    if let Some(path) = &args.out {
        let mut out = create(path)?;
        result.write_csv(&mut out)?;
        out.flush()?;
    }
    write_json(
        args.common.json.as_deref(),
        &SolveReport {
            summary,
            manufactured_error,
        },
    )?;
    if !result.converged {
        return Err(CliError::Diverged(format!(
            "solver did not converge: final update {:.3e}, residual {:.3e}",
            result.final_update, result.rep_residual
        )));
    }
    println!("converged");
    Ok(0)
}

fn cmd_kernel(args: &Common) -> Result<u8, CliError> {
    let cfg = args.load()?;
    check_size(2 * cfg.grid.len())?;
    require_valid(&cfg)?;
    let system = System::<f64>::build(&cfg.spec.compile(), Grid::new(cfg.grid, cfg.spec.period));
    let report = kernel_dimension(&assemble_dense(&system)?, cfg.kernel_threshold)?;
    println!("kernel dimension: {}", report.dimension);
    println!("sigma max: {:.6e}", report.sigma_max);
    println!("sigma min: {:.6e}", report.sigma_min);
    println!("sigma min / sigma max: {:.6e}", report.ratio);
    let tail: Vec<String> = report.tail.iter().map(|s| format!("{s:.6e}")).collect();
    println!("smallest singular values: {}", tail.join(" "));
    write_json(args.json.as_deref(), &report)?;
    Ok(0)
}

fn cmd_sweep(args: &SweepArgs) -> Result<u8, CliError> {
    let cfg = args.common.load()?;
    let eps = cfg
        .sweep_eps
        .clone()
        .ok_or_else(|| CliError::Config("sweep needs a [sweep] section with an eps list".into()))?;
    let family = EpsFamily::new(cfg.spec.clone(), eps)?;
    if !family.depends_on_eps() {
        println!("note: no coefficient references eps; every instance solves the same problem");
    }
    let report = sweep_epsilon::<f64>(&family, cfg.grid, cfg.solve)?;
    for row in &report.rows {
        println!(
            "eps {:.6e}: sup diff {:.6e}, derivative {:.6e}, {} iterations",
            row.eps, row.sup_err, row.deriv_est, row.iterations
        );
    }
    println!(
        "max pairwise diff: {:.6e} (tol {:.3e})",
        report.max_pairwise_diff, cfg.solve.tol_abs
    );
    if let Some(l) = report.lipschitz {
        println!("lipschitz estimate: {l:.6e}");
    }
    if let Some(r) = &report.richardson {
        println!(
            "richardson at eps {}: C0 rel diff {:.3e}, t-derivative {:.3e}, x-derivative {:.3e} ({})",
            r.center,
            r.rel_diff_c0,
            r.rel_diff_c1_t,
            r.rel_diff_c1_x,
            if r.consistent { "consistent" } else { "inconsistent" }
        );
    }
    if let Some(path) = &args.out {
        let mut out = create(path)?;
        report.write_csv(&mut out)?;
        out.flush()?;
    }
    write_json(args.common.json.as_deref(), &report)?;
    if report.rows.iter().any(|r| !r.converged) {
        return Err(CliError::Diverged("some sweep instances did not converge".into()));
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            return ExitCode::from(if ok { 0 } else { 1 });
        }
    };
    let outcome = match &cli.command {
        Command::Validate(a) => cmd_validate(a),
        Command::Resonance(a) => cmd_resonance(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Kernel(a) => cmd_kernel(a),
        Command::Sweep(a) => cmd_sweep(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
