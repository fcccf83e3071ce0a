use std::fmt::Write as _;
use std::str::FromStr;

use crate::dynamics::{
    forbidden_zone, integrate_backward, integrate_backward_with, integrate_forward,
    integrate_forward_with, turning_point, ForbiddenZone, ForwardOptions, Terminal,
    DEFAULT_EPSILON_STOP,
};
use crate::error::{Error, Result};
use crate::scenario::specific_energy_at;
use crate::units::{format_human, Dimension, Quantity, MEGA_LIGHT_YEAR_M};

use super::scenario_file::LoadedScenario;
use super::{full, ode_tol};

pub const MAX_SAMPLES: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(Direction::Forward),
            "backward" => Ok(Direction::Backward),
            other => Err(Error::Usage(format!(
                "unknown direction `{other}` (expected forward or backward)"
            ))),
        }
    }
}

/// `samples` evenly spaced times from 0 up to, but excluding, `end`; the run
/// itself contributes the terminal state.
fn sample_grid(end: f64, samples: usize) -> Vec<f64> {
    let n = samples - 1;
    (0..n).map(|k| end * k as f64 / n as f64).collect()
}

/// CSV of (t, u, v, relative energy drift). Backward runs report physical
/// time, so `t_s` is negative there.
pub fn trajectory(
    s: &LoadedScenario,
    direction: Direction,
    samples: usize,
    tol: f64,
) -> Result<String> {
    if !(2..=MAX_SAMPLES).contains(&samples) {
        return Err(Error::Usage(format!(
            "samples must lie in [2, {MAX_SAMPLES}], got {samples}"
        )));
    }
    let sc = s.dynamics_scenario();
    let user_tol = tol;
    let tol = ode_tol(tol);
    let traj = match direction {
        Direction::Forward => {
            let probe = integrate_forward(&sc, DEFAULT_EPSILON_STOP, tol)?;
            if probe.terminal != Terminal::CollapsedAtEpsilon {
                return Err(Error::Numerical(format!(
                    "forward run ended with {:?}",
                    probe.terminal
                )));
            }
            integrate_forward_with(
                &sc,
                &ForwardOptions {
                    tol,
                    sample_times: Some(sample_grid(probe.last().t, samples)),
                    ..Default::default()
                },
            )?
        }
        Direction::Backward => {
            let probe = integrate_backward(&sc, tol)?;
            let grid = sample_grid(probe.last().t, samples);
            integrate_backward_with(&sc, tol, Some(&grid))?
        }
    };
    if traj.terminal == Terminal::StepLimit {
        return Err(Error::Numerical(
            "step budget exhausted or step size underflow".into(),
        ));
    }

    let f0 = sc.derive().f;
    let sign = match direction {
        Direction::Forward => 1.0,
        Direction::Backward => -1.0,
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# trajectory, direction = {}",
        match direction {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        }
    );
    for line in s.echo_lines() {
        let _ = writeln!(out, "{line}");
    }
    let _ = writeln!(out, "# tol = {user_tol:e}");
    out.push_str("t_s,u_m,v_mps,energy_rel_drift\n");
    for st in &traj.states {
        let f = specific_energy_at(&sc, st.u, st.v)?;
        let drift = if f0 != 0.0 {
            (f - f0).abs() / f0.abs()
        } else {
            (f - f0).abs()
        };
        // exact zero for the initial row
        let drift = if st.t == 0.0 { 0.0 } else { drift };
        let _ = writeln!(
            out,
            "{},{},{},{}",
            full(sign * st.t + 0.0),
            full(st.u),
            full(st.v),
            full(drift)
        );
    }
    match direction {
        Direction::Forward => {
            if let Some(t) = traj.collapse_time_estimate {
                let _ = writeln!(out, "# collapse_time_s = {}", full(t));
            }
        }
        Direction::Backward => match forbidden_zone(&sc.derive(), sc.separation())? {
            ForbiddenZone::Interval { lower, .. } => {
                let _ = writeln!(out, "# turning_point_m = {}", full(lower));
            }
            ForbiddenZone::Empty => {
                let _ = writeln!(out, "# turning_point_m = none below separation");
            }
        },
    }
    Ok(out)
}

/// Turning point of the backward motion and the zone the past trajectory
/// never entered.
pub fn equilibrium(s: &LoadedScenario) -> Result<String> {
    let sc = s.require_dipole()?;
    let d = sc.derive();
    let l = sc.separation();
    let mut out = String::new();
    for line in s.echo_lines() {
        let _ = writeln!(out, "{line}");
    }
    match forbidden_zone(&d, l)? {
        ForbiddenZone::Empty => {
            out.push_str("no turning point in (0, L): forbidden zone is empty\n");
        }
        ForbiddenZone::Interval { lower, upper } => {
            let tp = turning_point(&d, l)?;
            let rel = tp.residual.abs() / (d.a / tp.v_star);
            let len = |x: f64| Quantity::new(x, Dimension::LENGTH).map(|q| format_human(&q));
            let _ = writeln!(
                out,
                "turning point v* = {} m ({:.4} Mly)",
                full(tp.v_star),
                tp.v_star / MEGA_LIGHT_YEAR_M
            );
            let _ = writeln!(
                out,
                "residual a/v - b/(L-v) + C = {:.3e} m^2/s^2 (relative {:.3e})",
                tp.residual, rel
            );
            let _ = writeln!(out, "forbidden zone = ({}, {})", len(lower)?, len(upper)?);
            let u = sc.distance();
            let _ = writeln!(
                out,
                "present position U = {} is {} the forbidden zone",
                len(u)?,
                if u < lower { "outside" } else { "inside" }
            );
        }
    }
    Ok(out)
}
