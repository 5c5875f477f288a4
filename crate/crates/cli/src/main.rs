use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use meanfield::harness::study::{
    direct_sequence, legendre_stage, pressure_stage, reference_values,
};
use meanfield::harness::{
    emit_report, parse_config, run_convergence_study, ExperimentConfig, ReportPaths,
};
use meanfield::ncpoly::Rectangle;
use meanfield::varprinciple::solve_rate_form;
use meanfield::Execution;

#[derive(Parser)]
#[command(
    name = "meanfield",
    version,
    about = "Mean-field pressures, rate functions and variational values"
)]
struct Cli {
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Run every stage on the calling thread.
    #[arg(long, global = true)]
    serial: bool,
    /// Output directory for CSV/JSON files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Tolerance override, e.g. `--tol gap=5e-3` (repeatable).
    #[arg(long = "tol", value_name = "KEY=VALUE", global = true)]
    tol: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extrapolated pressure surface on the tilt grid.
    Pressure { config: PathBuf },
    /// Rate function on the x-y grid.
    Legendre { config: PathBuf },
    /// Finite-volume mean-field values for every configured volume.
    Direct { config: PathBuf },
    /// Variational value from the rate form.
    Variational { config: PathBuf },
    /// Full convergence study; exit code 0 iff every check passes.
    Study { config: PathBuf },
    /// Reference values of the selected oracles.
    Oracles { config: PathBuf },
}

impl Command {
    fn config(&self) -> &PathBuf {
        match self {
            Command::Pressure { config }
            | Command::Legendre { config }
            | Command::Direct { config }
            | Command::Variational { config }
            | Command::Study { config }
            | Command::Oracles { config } => config,
        }
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli.command.config();
    let mut cfg = parse_config(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(t) = cli.threads {
        cfg.run.threads = t;
    }
    if cli.serial {
        cfg.run.execution = Execution::Serial;
    }
    for item in &cli.tol {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| anyhow!("--tol expects KEY=VALUE, got `{item}`"))?;
        let value: f64 = value
            .trim()
            .parse()
            .with_context(|| format!("--tol {key}"))?;
        cfg.tolerances.set(key.trim(), value)?;
    }
    Ok(cfg)
}

fn out_file(cli: &Cli, cfg: &ExperimentConfig, name: &str) -> Option<PathBuf> {
    cli.out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .map(|d| d.join(name))
}

fn create(path: &PathBuf) -> Result<std::fs::File> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    Ok(std::fs::File::create(path)?)
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = load(cli)?;
    let exec = cfg.run.execution;
    let model = cfg.model.build()?;
    let staged = |f: &(dyn Fn() -> Result<bool> + Sync)| exec.with_threads(cfg.run.threads, f);
    match &cli.command {
        Command::Pressure { .. } => staged(&|| {
            let ps = pressure_stage(&cfg, &model, exec)?;
            println!(
                "volumes {:?}  max extrapolation error {:.3e}  convexity violation {:.3e}",
                ps.volumes(),
                ps.max_error(),
                ps.convexity_violation()
            );
            match out_file(cli, &cfg, "pressure.csv") {
                Some(p) => {
                    ps.write_csv(create(&p)?)?;
                    println!("wrote {}", p.display());
                }
                None => ps.write_csv(std::io::stdout().lock())?,
            }
            Ok(true)
        }),
        Command::Legendre { .. } => staged(&|| {
            let ps = pressure_stage(&cfg, &model, exec)?;
            let rf = legendre_stage(&cfg, &ps, exec)?;
            let flagged = rf.points().iter().filter(|p| p.at_boundary).count();
            println!(
                "error bound {:.3e}  boundary points {flagged}",
                rf.error_bound()
            );
            match out_file(cli, &cfg, "rate.csv") {
                Some(p) => {
                    rf.write_csv(create(&p)?)?;
                    println!("wrote {}", p.display());
                }
                None => rf.write_csv(std::io::stdout().lock())?,
            }
            Ok(true)
        }),
        Command::Direct { .. } => staged(&|| {
            println!("{:>8} {:>20} {:>20}", "sites", "direct", "pressure(0,0)");
            for (n, d, p) in direct_sequence(&cfg, &model, exec)? {
                println!("{n:>8} {d:>20.12} {p:>20.12}");
            }
            Ok(true)
        }),
        Command::Variational { .. } => staged(&|| {
            let ps = pressure_stage(&cfg, &model, exec)?;
            let rf = legendre_stage(&cfg, &ps, exec)?;
            let res = solve_rate_form(
                &rf,
                &model.g,
                &Rectangle::from_observables(&model.x, &model.y),
            )?;
            println!("{}", res.to_json()?);
            Ok(true)
        }),
        Command::Oracles { .. } => {
            for (name, v) in reference_values(&cfg, &model)? {
                println!("{name:<24} {v:.12}");
            }
            Ok(true)
        }
        Command::Study { .. } => {
            let report = run_convergence_study(&cfg)?;
            println!(
                "{:>8} {:>16} {:>16} {:>12}",
                "sites", "direct", "variational", "gap"
            );
            for r in &report.rows {
                println!(
                    "{:>8} {:>16.10} {:>16.10} {:>12.3e}",
                    r.sites, r.direct, r.variational, r.gap
                );
            }
            for b in &report.blocks {
                println!(
                    "block |V| = {:<4} certified lower bound {:.10}",
                    b.sites, b.certified
                );
            }
            for o in &report.oracles {
                println!(
                    "oracle {:<22} reference {:.10}  deviation {:.3e}",
                    o.name, o.reference, o.deviation
                );
            }
            for c in &report.checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                println!(
                    "[{tag}] {}: {:.3e} (tolerance {:.3e})",
                    c.name, c.value, c.tolerance
                );
            }
            let paths = ReportPaths::resolve(&cfg.output, cli.out.as_deref(), &cfg.name);
            emit_report(&report, &paths)?;
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
