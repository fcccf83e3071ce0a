use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cosmic_dipole::cli::{
    build_report, equilibrium, load_scenario, render_json, render_text, sweep, trajectory,
    Direction, Grid, SweepParam,
};
use cosmic_dipole::quadrature::DEFAULT_TOL;
use cosmic_dipole::{Error, Result};

/// Collapse times for a point attractor / point repeller free-fall model.
#[derive(Parser)]
#[command(name = "dipole", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (`key = value unit` lines).
    #[arg(long)]
    scenario: PathBuf,
    /// Relative tolerance of the quadrature; ODE runs use tol/100.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Every collapse-time estimate side by side.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Collapse time over a grid of one parameter, as CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// repeller_mass, speed or separation.
        #[arg(long)]
        param: String,
        #[arg(long, allow_hyphen_values = true)]
        from: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        to: Option<f64>,
        /// Number of grid points.
        #[arg(long)]
        steps: Option<usize>,
        /// Geometric instead of linear spacing.
        #[arg(long)]
        log: bool,
        /// Explicit comma-separated grid, instead of --from/--to/--steps.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Option<Vec<f64>>,
        /// Unit of the grid values. Defaults: attractor_mass (multiples of
        /// the attractor mass), km/s, Mly.
        #[arg(long)]
        unit: Option<String>,
    },
    /// Sampled trajectory as CSV.
    Trajectory {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "forward")]
        direction: String,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Turning point of the backward motion and the forbidden zone.
    Equilibrium {
        #[command(flatten)]
        common: Common,
    },
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol < 1e-2 {
        Ok(())
    } else {
        Err(Error::Usage(format!(
            "--tol must lie in (0, 1e-2), got {tol}"
        )))
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Report { common, format } => {
            check_tol(common.tol)?;
            let s = load_scenario(&common.scenario)?;
            let report = build_report(&s, common.tol);
            let text = match format {
                Format::Text => render_text(&report),
                Format::Json => render_json(&report),
            };
            emit(common.out.as_deref(), &text)?;
            // rows that failed numerically make the whole command a numerical failure
            match report
                .rows
                .iter()
                .filter_map(|r| r.status.as_deref())
                .find(|s| s.starts_with("numerical failure"))
            {
                Some(msg) => Err(Error::Numerical(msg.to_string())),
                None => Ok(()),
            }
        }
        Command::Sweep {
            common,
            param,
            from,
            to,
            steps,
            log,
            values,
            unit,
        } => {
            check_tol(common.tol)?;
            let param: SweepParam = param.parse()?;
            let s = load_scenario(&common.scenario)?;
            let grid = match (values, from, to, steps) {
                (Some(v), None, None, None) => Grid::Values(v),
                (None, Some(from), to, steps) => {
                    let steps = steps.unwrap_or(if to.is_some() { 2 } else { 1 });
                    let to = to.unwrap_or(from);
                    if log {
                        Grid::Log { from, to, steps }
                    } else {
                        Grid::Linear { from, to, steps }
                    }
                }
                _ => {
                    return Err(Error::Usage(
                        "give either --values or --from [--to --steps]".into(),
                    ))
                }
            };
            let si = grid
                .points()?
                .into_iter()
                .map(|v| param.to_si(v, unit.as_deref(), &s))
                .collect::<Result<Vec<_>>>()?;
            emit(common.out.as_deref(), &sweep(&s, param, &si, common.tol)?)
        }
        Command::Trajectory {
            common,
            direction,
            samples,
        } => {
            check_tol(common.tol)?;
            let direction: Direction = direction.parse()?;
            let s = load_scenario(&common.scenario)?;
            emit(
                common.out.as_deref(),
                &trajectory(&s, direction, samples, common.tol)?,
            )
        }
        Command::Equilibrium { common } => {
            let s = load_scenario(&common.scenario)?;
            emit(common.out.as_deref(), &equilibrium(&s)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
