//! Command implementations behind the `dipole` binary. Each command returns
//! its full output as a string so it can be tested without a process.

pub mod report;
pub mod scenario_file;
pub mod sweep;
pub mod trajectory;

pub use report::{build_report, render_json, render_text, Report, ReportRow, RowKind};
pub use scenario_file::{load_scenario, parse_scenario, LoadedScenario, ScenarioFile, SHAPLEY_SCN};
pub use sweep::{sweep, Grid, SweepParam};
pub use trajectory::{equilibrium, trajectory, Direction};

/// Controller tolerance used for ODE runs when the quadrature tolerance is
/// `tol`. Energy near u = 10⁻³·U is ~10⁴ times the initial energy, so the
/// controller runs four digits tighter.
pub fn ode_tol(tol: f64) -> f64 {
    (tol * 1e-4).clamp(1e-14, 1e-6)
}

/// Seventeen significant digits.
pub(crate) fn full(x: f64) -> String {
    format!("{x:.16e}")
}
