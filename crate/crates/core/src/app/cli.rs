//! Command-line interface.

use std::ffi::OsString;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use super::csv::write_timeseries;
use super::format::{load_network, load_scenario, Scenario};
use super::report::{RunReport, RunStatus};
use crate::compressor::{CompressorModel, ModelKind};
use crate::error::{Error, Result};
use crate::network::{validate_topology, GlobalSystem, NetworkSpec};
use crate::timeloop::{simulate, steady_solution, RunStats, SolverConfig, TimeSeries};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NONCONVERGENCE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

/// Compressor model override; `none` fuses every station into a junction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelChoice {
    None,
    Kind(ModelKind),
}

impl FromStr for ModelChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "none" {
            Ok(ModelChoice::None)
        } else {
            s.parse().map(ModelChoice::Kind)
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "phgas",
    version,
    about = "Transient simulation of gas pipeline networks with compressor stations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a network file and print its topology report.
    Validate {
        /// Network description (JSON).
        network: PathBuf,
    },
    /// Solve the steady state for the inputs at t = 0 and write a one-row CSV.
    Steady {
        /// Network description (JSON).
        network: PathBuf,
        /// Scenario with boundary and setpoint profiles (JSON).
        scenario: PathBuf,
        #[command(flatten)]
        options: RunOptions,
    },
    /// Run the transient simulation and write the time series as CSV.
    Run {
        /// Network description (JSON).
        network: PathBuf,
        /// Scenario with boundary and setpoint profiles (JSON).
        scenario: PathBuf,
        #[command(flatten)]
        options: RunOptions,
    },
}

#[derive(Debug, Args)]
struct RunOptions {
    /// Output file (standard output if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Time step in s, overriding the scenario.
    #[arg(long)]
    dt: Option<f64>,
    /// Cells per pipe, overriding the network file.
    #[arg(long)]
    cells: Option<usize>,
    /// Compressor model for every station: none, fc-av, fc-am, fp-av or fp-am.
    #[arg(long, value_parser = |s: &str| s.parse::<ModelChoice>().map_err(|e| e.to_string()))]
    model: Option<ModelChoice>,
    /// Newton tolerance on the scaled residual.
    #[arg(long)]
    tol: Option<f64>,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        e if e.is_solver_failure() => EXIT_NONCONVERGENCE,
        Error::Step { .. } | Error::NonPhysicalState(_) | Error::NonFinite(_) | Error::InfeasibleFlow { .. } => {
            EXIT_NONCONVERGENCE
        }
        _ => EXIT_VALIDATION,
    }
}

struct Prepared {
    spec: NetworkSpec,
    scenario: Scenario,
    cfg: SolverConfig,
}

fn prepare(network: &Path, scenario: &Path, options: &RunOptions) -> Result<Prepared> {
    let mut spec = load_network(network)?;
    let scn = load_scenario(scenario, &spec)?;
    if let Some(n) = options.cells {
        spec = spec.with_cells(n);
    }
    match options.model {
        Some(ModelChoice::None) => spec = spec.without_compressors(),
        Some(ModelChoice::Kind(kind)) => spec = spec.with_model(kind),
        None => {}
    }
    let mut cfg = scn.solver_config();
    if let Some(dt) = options.dt {
        cfg.dt = dt;
    }
    if let Some(tol) = options.tol {
        cfg.newton_abs_tol = tol;
    }
    cfg.validate()?;
    Ok(Prepared {
        spec,
        scenario: scn,
        cfg,
    })
}

fn setpoint_warnings(system: &GlobalSystem, schedule: &crate::schedule::InputSchedule) -> Result<Vec<String>> {
    let mut warnings = Vec::new();
    for (c, profile) in system.compressors().iter().zip(&schedule.setpoints) {
        for &(t, v) in profile.breakpoints() {
            let model = CompressorModel::new(c.kind, v, system.gas().isentropic_exponent());
            for w in model.validate()? {
                warnings.push(format!("compressor `{}` at t = {t} s: {w}", c.id));
            }
        }
    }
    Ok(warnings)
}

fn emit(ts: &TimeSeries, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => write_timeseries(ts, File::create(path)?),
        None => write_timeseries(ts, stdout),
    }
}

fn execute(
    command: &Command,
    stdout: &mut dyn Write,
    stats: &mut Option<RunStats>,
    warnings: &mut Vec<String>,
) -> Result<()> {
    match command {
        Command::Validate { network } => {
            let text = std::fs::read_to_string(network)?;
            let spec = super::format::parse_network(&text)?;
            let report = validate_topology(&spec);
            writeln!(
                stdout,
                "{}: {} ({} nodes, {} pipes, {} compressors)",
                network.display(),
                report,
                spec.nodes.len(),
                spec.pipes.len(),
                spec.compressors.len()
            )?;
            Ok(())
        }
        Command::Steady {
            network,
            scenario,
            options,
        } => {
            let p = prepare(network, scenario, options)?;
            let system = GlobalSystem::assemble(&p.spec)?;
            let schedule = p.scenario.schedule(&system)?;
            warnings.extend(setpoint_warnings(&system, &schedule)?);
            let (_, sample, newton) = steady_solution(&system, &schedule, &p.cfg)?;
            *stats = Some(RunStats {
                steady_iterations: newton.iterations,
                ..RunStats::default()
            });
            let mut ts = TimeSeries::new(system.pipe_ids(), system.compressor_ids());
            ts.samples.push(sample);
            emit(&ts, options.out.as_deref(), stdout)
        }
        Command::Run {
            network,
            scenario,
            options,
        } => {
            let p = prepare(network, scenario, options)?;
            let system = GlobalSystem::assemble(&p.spec)?;
            let schedule = p.scenario.schedule(&system)?;
            warnings.extend(setpoint_warnings(&system, &schedule)?);
            let sim = simulate(&system, &schedule, &p.cfg)?;
            warnings.extend(sim.warnings);
            *stats = Some(sim.stats);
            emit(&sim.series, options.out.as_deref(), stdout)
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let name = match &cli.command {
        Command::Validate { .. } => "validate",
        Command::Steady { .. } => "steady",
        Command::Run { .. } => "run",
    };
    let start = Instant::now();
    let mut stats = None;
    let mut warnings = Vec::new();
    let status = match execute(&cli.command, stdout, &mut stats, &mut warnings) {
        Ok(()) => RunStatus::Success,
        Err(e) => RunStatus::Failed {
            exit_code: exit_code(&e),
            message: e.to_string(),
        },
    };
    let report = RunReport {
        command: name.into(),
        status,
        wall_time: start.elapsed(),
        stats,
        warnings,
    };
    let _ = write!(stderr, "{report}");
    report.exit_code()
}
