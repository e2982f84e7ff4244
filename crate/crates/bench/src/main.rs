use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use relq_bench::{
    demand_pmf, run_experiment, write_pmf, write_rows, ConfigError, ExperimentConfig, MethodSet, RunOptions,
};
use relq_core::{McsTableF64, SppParamsF64, SppTarget};

#[derive(Parser)]
#[command(name = "relq", version, about = "Resource loss queue experiments")]
struct Cli {
    /// TOML configuration; reference values when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Simulation seed, overrides `sim.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    method: Option<MethodSet>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Record wall time per row. Output then differs between runs.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Demand law for the configured radio and rate.
    Pmf,
    /// Analytic evaluation of the base point.
    Solve,
    /// Simulation of the base point.
    Simulate,
    /// Full parameter grid.
    Sweep,
    /// SPP parameters fitted to the configured traffic moments.
    FitSpp,
    /// Print the effective configuration.
    Config,
}

enum Failure {
    Config(String),
    Numerical(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self::Config(format!("output: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Self::Config(format!("output: {e}"))
    }
}

fn classify(e: relq_core::Error) -> Failure {
    let row = relq_bench::RowError::from(e);
    if row.numerical {
        Failure::Numerical(row.message)
    } else {
        Failure::Config(row.message)
    }
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Config(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => ExperimentConfig::default(),
    };
    let out_path = cli.out.clone().or_else(|| cfg.output.path.clone().map(PathBuf::from));
    let opts = RunOptions { method: cli.method, seed: cli.seed, jobs: cli.jobs, timing: cli.timing };

    match cli.command {
        Command::Config => {
            sink(&out_path)?.write_all(cfg.to_toml().as_bytes())?;
        }
        Command::Pmf => {
            let mcs = match &cfg.demand.mcs_table {
                Some(p) => McsTableF64::from_csv_path(p).map_err(classify)?,
                None => McsTableF64::default(),
            };
            let info = demand_pmf(&cfg, cfg.demand.rate_mbps, cfg.radio.blocker_density, &mcs).map_err(classify)?;
            write_pmf(&info, cfg.demand.rate_mbps, sink(&out_path)?)?;
        }
        Command::FitSpp => {
            let t = &cfg.traffic;
            let target = SppTarget::from_rate(t.lambda_a, t.cov, t.cov_convention, t.beta_a).map_err(classify)?;
            let lambda2 = t.lambda_2.unwrap_or(5.0 * t.lambda_a);
            let spp = if t.lambda_2_search {
                SppParamsF64::fit_with_search(&target, lambda2)
            } else {
                SppParamsF64::fit(&target, lambda2)
            }
            .map_err(classify)?;
            let m = spp.moments();
            let mut w = csv::Writer::from_writer(sink(&out_path)?);
            w.write_record([
                "lambda_a",
                "cov",
                "cov_convention",
                "beta_a",
                "lambda1",
                "lambda2",
                "r1",
                "r2",
                "cov_amplitude",
                "cov_canonical",
            ])?;
            w.write_record([
                m.arrival_rate.to_string(),
                t.cov.to_string(),
                t.cov_convention.name().to_string(),
                m.lag1_nacf.to_string(),
                spp.lambda1.to_string(),
                spp.lambda2.to_string(),
                spp.r1.to_string(),
                spp.r2.to_string(),
                m.cov_amplitude.to_string(),
                m.cov_canonical.to_string(),
            ])?;
            w.flush()?;
        }
        Command::Solve | Command::Simulate | Command::Sweep => {
            let single = !matches!(cli.command, Command::Sweep);
            if single {
                cfg.sweep.clear();
            }
            let opts = match cli.command {
                Command::Solve => RunOptions { method: Some(cli.method.unwrap_or(MethodSet::Analytic)), ..opts },
                Command::Simulate => RunOptions { method: Some(MethodSet::Sim), ..opts },
                _ => opts,
            };
            let rows = run_experiment(&cfg, &opts)?;
            write_rows(&rows, sink(&out_path)?)?;
            if single {
                if let Some(e) = rows.iter().find_map(|r| r.status.as_ref().err()) {
                    return Err(if e.numerical {
                        Failure::Numerical(e.message.clone())
                    } else {
                        Failure::Config(e.message.clone())
                    });
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    // Usage errors are configuration errors; clap would exit with 2.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("relq: configuration error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("relq: numerical failure: {m}");
            ExitCode::from(2)
        }
    }
}
