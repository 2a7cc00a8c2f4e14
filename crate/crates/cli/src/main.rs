use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use philap_cli::{
    export_all, read_profile, solve_one, sweep_problem, Config, ConfigError, Problem,
};
use philap_core::{delta2_index, luxemburg_norm, GridFunction, RadialGrid};

const EXIT_HYPOTHESIS: u8 = 2;
const EXIT_NONCONVERGENCE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "philap",
    version,
    about = "Ordered positive solutions of Φ-Laplacian problems"
)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory for reports and profiles.
    #[arg(long, global = true, value_name = "DIR", default_value = "philap-out")]
    out: PathBuf,
    /// λ for `solve`.
    #[arg(long, global = true, value_name = "X")]
    lambda: Option<f64>,
    /// Suppress the summary on stdout.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the hypotheses on φ and f.
    Validate,
    /// Solve at one λ (`--lambda`).
    Solve,
    /// Sweep λ and bracket the threshold.
    Sweep,
    /// Luxemburg norm of an `r,u` profile file.
    Norm { profile: PathBuf },
    /// Sampled Δ₂ diagnostics for φ and its conjugate.
    Delta2,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if cli.quiet {
        "warn"
    } else {
        "info"
    }))
    .init();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let hypothesis = e
                .downcast_ref::<ConfigError>()
                .is_some_and(ConfigError::is_hypothesis_failure);
            ExitCode::from(if hypothesis { EXIT_HYPOTHESIS } else { 1 })
        }
    }
}

fn load(cli: &Cli) -> Result<Config> {
    let Some(path) = &cli.config else {
        bail!("--config PATH is required");
    };
    Ok(Config::from_path(path)?)
}

fn run(cli: &Cli) -> Result<u8> {
    let config = load(cli)?;
    match &cli.command {
        Command::Validate => validate(cli, &config),
        Command::Solve => {
            let Some(lambda) = cli.lambda else {
                bail!("solve needs --lambda X");
            };
            if !(lambda.is_finite() && lambda >= 0.0) {
                bail!("--lambda must be finite and non-negative, got {lambda}");
            }
            let problem = Problem::new(config)?;
            let outcome = solve_one(&problem, lambda);
            finish(cli, &outcome)
        }
        Command::Sweep => {
            let problem = Problem::new(config)?;
            let outcome = sweep_problem(&problem);
            finish(cli, &outcome)
        }
        Command::Norm { profile } => {
            let nf = config.nfunction()?;
            let (r, u) =
                read_profile(profile).with_context(|| format!("reading {}", profile.display()))?;
            let grid = Arc::new(RadialGrid::from_nodes(r, config.domain.dimension)?);
            let u = GridFunction::new(grid, u)?;
            let norm = luxemburg_norm(&nf, &u, config.solver.norm_tol)?;
            println!("{norm}");
            Ok(0)
        }
        Command::Delta2 => {
            let nf = config.nfunction()?;
            let s = &config.solver;
            let report = delta2_index(&nf, s.delta2_t_min, s.delta2_t_max, s.delta2_samples)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(0)
        }
    }
}

fn validate(cli: &Cli, config: &Config) -> Result<u8> {
    let mut ok = true;
    match config.nfunction.validate() {
        Ok(()) => {
            let h = config.nfunction.check_hypotheses();
            ok &= h.all();
            if !cli.quiet {
                println!("phi: t*phi(t) -> 0 at 0: {}", h.vanishes_at_zero);
                println!("phi: t*phi(t) -> inf at inf: {}", h.unbounded);
                println!(
                    "phi: t*phi(t) strictly increasing: {}",
                    h.strictly_increasing
                );
            }
        }
        Err(e) => {
            ok = false;
            if !cli.quiet {
                println!("phi: {e}");
            }
        }
    }
    match config.bumps() {
        Ok(bn) => {
            if !cli.quiet {
                println!("f: valid, m = {}", bn.m());
            }
        }
        Err(ConfigError::Nonlinearity(e)) if !e.violations().is_empty() => {
            ok = false;
            if !cli.quiet {
                for v in e.violations() {
                    println!("f: violated {v:?}");
                }
            }
        }
        Err(e) => return Err(e.into()),
    }
    Ok(if ok { 0 } else { EXIT_HYPOTHESIS })
}

fn finish(cli: &Cli, outcome: &philap_cli::SweepOutcome) -> Result<u8> {
    export_all(outcome, &cli.out).with_context(|| format!("exporting to {}", cli.out.display()))?;
    let report = &outcome.report;
    if !cli.quiet {
        for p in &report.points {
            let sups: Vec<String> = p
                .energy
                .iter()
                .map(|e| format!("{:.6}", e.sup_norm))
                .collect();
            println!(
                "lambda {:>12}  ordering {:<5}  energy sups [{}]  radial roots {}{}",
                p.lambda,
                p.ordering_ok,
                sups.join(", "),
                p.radial.len(),
                if p.inconclusive { "  inconclusive" } else { "" }
            );
        }
        match report.lambda_bar {
            Some(b) => println!("lambda_bar in ({}, {}]", b.lo, b.hi),
            None if report.points.len() > 1 => println!("lambda_bar not found"),
            None => {}
        }
        for f in &report.findings {
            println!("finding: {f}");
        }
        println!("wrote {}", cli.out.display());
    }
    Ok(if report.any_inconclusive() {
        EXIT_NONCONVERGENCE
    } else {
        0
    })
}
