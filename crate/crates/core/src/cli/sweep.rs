use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;

use crate::dynamics::{integrate_forward, DEFAULT_EPSILON_STOP};
use crate::error::{Error, Result};
use crate::quadrature::collapse_time_dipole;
use crate::scenario::DipoleScenario;
use crate::units::{Dimension, Unit};

use super::scenario_file::LoadedScenario;
use super::{full, ode_tol};

pub const MAX_GRID_POINTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    RepellerMass,
    Speed,
    Separation,
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "repeller_mass" => Ok(SweepParam::RepellerMass),
            "speed" => Ok(SweepParam::Speed),
            "separation" => Ok(SweepParam::Separation),
            other => Err(Error::Usage(format!(
                "unknown sweep parameter `{other}` (expected repeller_mass, speed or separation)"
            ))),
        }
    }
}

impl SweepParam {
    fn column(self) -> &'static str {
        match self {
            SweepParam::RepellerMass => "repeller_mass_kg",
            SweepParam::Speed => "speed_mps",
            SweepParam::Separation => "separation_m",
        }
    }

    fn name(self) -> &'static str {
        match self {
            SweepParam::RepellerMass => "repeller_mass",
            SweepParam::Speed => "speed",
            SweepParam::Separation => "separation",
        }
    }

    /// Convert a grid value to SI. `unit` defaults to multiples of the
    /// attractor mass, km/s and Mly respectively; `attractor_mass` is
    /// accepted as a unit for the repeller mass.
    pub fn to_si(self, value: f64, unit: Option<&str>, s: &LoadedScenario) -> Result<f64> {
        let (dim, default) = match self {
            SweepParam::RepellerMass => (Dimension::MASS, "attractor_mass"),
            SweepParam::Speed => (Dimension::VELOCITY, "km/s"),
            SweepParam::Separation => (Dimension::LENGTH, "Mly"),
        };
        let tag = unit.unwrap_or(default);
        if self == SweepParam::RepellerMass && tag == "attractor_mass" {
            return Ok(value * s.attractor.mass());
        }
        let unit: Unit = tag.parse()?;
        if unit.dimension() != dim {
            return Err(Error::Usage(format!(
                "unit `{tag}` does not fit sweep parameter {}",
                self.name()
            )));
        }
        Ok(value * unit.factor())
    }

    fn apply(self, base: &DipoleScenario, value: f64) -> Result<DipoleScenario> {
        match self {
            SweepParam::RepellerMass => base.with_repeller_mass(value),
            SweepParam::Speed => base.with_velocity(-value),
            SweepParam::Separation => base.with_separation(value),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Linear { from: f64, to: f64, steps: usize },
    Log { from: f64, to: f64, steps: usize },
    Values(Vec<f64>),
}

impl Grid {
    pub fn points(&self) -> Result<Vec<f64>> {
        let pts = match self {
            Grid::Linear { from, to, steps } | Grid::Log { from, to, steps } => {
                if *steps == 0 {
                    return Err(Error::Usage("grid needs at least one point".into()));
                }
                if *steps > MAX_GRID_POINTS {
                    return Err(Error::Usage(format!(
                        "grid has {steps} points, limit is {MAX_GRID_POINTS}"
                    )));
                }
                if *steps == 1 {
                    vec![*from]
                } else if matches!(self, Grid::Log { .. }) {
                    if !(*from > 0.0 && *to > 0.0) {
                        return Err(Error::Usage("log grid needs positive bounds".into()));
                    }
                    let (lf, lt) = (from.ln(), to.ln());
                    (0..*steps)
                        .map(|i| (lf + (lt - lf) * i as f64 / (*steps - 1) as f64).exp())
                        .collect()
                } else {
                    (0..*steps)
                        .map(|i| from + (to - from) * i as f64 / (*steps - 1) as f64)
                        .collect()
                }
            }
            Grid::Values(v) => {
                if v.is_empty() || v.len() > MAX_GRID_POINTS {
                    return Err(Error::Usage(format!(
                        "grid needs 1 to {MAX_GRID_POINTS} values, got {}",
                        v.len()
                    )));
                }
                v.clone()
            }
        };
        if let Some(bad) = pts.iter().find(|x| !x.is_finite()) {
            return Err(Error::Usage(format!("grid value {bad} is not finite")));
        }
        Ok(pts)
    }
}

/// One sweep row: quadrature time, ODE time, and quadrature time relative
/// to the same scenario without repeller.
pub fn sweep_point(
    base: &DipoleScenario,
    param: SweepParam,
    value: f64,
    tol: f64,
) -> Result<(f64, f64, f64)> {
    let s = param.apply(base, value)?;
    let (l, u) = (s.separation(), s.distance());
    let tq = collapse_time_dipole(&s.derive(), l, u, tol)?.t;
    let to = integrate_forward(&s, DEFAULT_EPSILON_STOP, ode_tol(tol))?
        .collapse_time()?
        .t;
    let bare = s.with_repeller_mass(0.0)?;
    let t0 = collapse_time_dipole(&bare.derive(), l, u, tol)?.t;
    Ok((tq, to, tq / t0))
}

fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// Grid values are SI. Rows come out in grid order whatever the thread
/// schedule; failing rows keep their place with an error message.
pub fn sweep(s: &LoadedScenario, param: SweepParam, values: &[f64], tol: f64) -> Result<String> {
    let base = match param {
        SweepParam::RepellerMass | SweepParam::Separation => s.require_dipole()?,
        SweepParam::Speed => s.dynamics_scenario(),
    };
    let rows: Vec<Result<(f64, f64, f64)>> = values
        .par_iter()
        .map(|&v| sweep_point(&base, param, v, tol))
        .collect();

    let mut out = String::new();
    let _ = writeln!(out, "# sweep over {}", param.name());
    for line in s.echo_lines() {
        let _ = writeln!(out, "{line}");
    }
    let _ = writeln!(out, "# tol = {tol:e}");
    let _ = writeln!(
        out,
        "{},t_quadrature_s,t_ode_s,ratio_to_no_repeller,error",
        param.column()
    );
    for (v, r) in values.iter().zip(rows) {
        match r {
            Ok((tq, to, ratio)) => {
                let _ = writeln!(
                    out,
                    "{},{},{},{},",
                    full(*v),
                    full(tq),
                    full(to),
                    full(ratio)
                );
            }
            Err(e) => {
                let _ = writeln!(out, "{},,,,{}", full(*v), csv_quote(&e.to_string()));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::scenario_file::{parse_scenario, SHAPLEY_SCN};
    use crate::quadrature::DEFAULT_TOL;

    fn parse_rows(csv: &str) -> Vec<Vec<String>> {
        csv.lines()
            .filter(|l| !l.starts_with('#'))
            .skip(1)
            .map(|l| l.splitn(5, ',').map(str::to_string).collect())
            .collect()
    }

    #[test]
    fn grids() {
        assert_eq!(
            Grid::Linear {
                from: 0.0,
                to: 1.0,
                steps: 3
            }
            .points()
            .unwrap(),
            vec![0.0, 0.5, 1.0]
        );
        assert_eq!(
            Grid::Linear {
                from: 2.0,
                to: 9.0,
                steps: 1
            }
            .points()
            .unwrap(),
            vec![2.0]
        );
        let g = Grid::Log {
            from: 1e-3,
            to: 1.0,
            steps: 4,
        }
        .points()
        .unwrap();
        assert!((g[1] / 1e-2 - 1.0).abs() < 1e-12);
        assert!(Grid::Linear {
            from: 0.0,
            to: 1.0,
            steps: 0
        }
        .points()
        .is_err());
        assert!(Grid::Values(vec![0.0; MAX_GRID_POINTS + 1])
            .points()
            .is_err());
        assert!(Grid::Log {
            from: 0.0,
            to: 1.0,
            steps: 3
        }
        .points()
        .is_err());
    }

    #[test]
    fn repeller_mass_grid_is_monotone_and_weak_repeller_negligible() {
        let s = parse_scenario(SHAPLEY_SCN).unwrap();
        let m = s.attractor.mass();
        let csv = sweep(
            &s,
            SweepParam::RepellerMass,
            &[0.0, 1e-3 * m, m],
            DEFAULT_TOL,
        )
        .unwrap();
        let rows = parse_rows(&csv);
        assert_eq!(rows.len(), 3);
        let tq: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
        assert!(tq.windows(2).all(|w| w[1] < w[0]));
        let ratio: f64 = rows[1][3].parse().unwrap();
        assert!(ratio > 0.99 && ratio < 1.0);
        assert_eq!(rows[0][3].parse::<f64>().unwrap(), 1.0);
    }

    #[test]
    fn single_point_and_error_rows() {
        let s = parse_scenario(SHAPLEY_SCN).unwrap();
        let csv = sweep(&s, SweepParam::Separation, &[1e24], DEFAULT_TOL).unwrap();
        let rows = parse_rows(&csv);
        assert_eq!(rows.len(), 1);
        assert!(rows[0][4].contains("invalid scenario"));

        let csv = sweep(&s, SweepParam::Speed, &[-5.0, 6.3e5], DEFAULT_TOL).unwrap();
        let rows = parse_rows(&csv);
        assert_eq!(rows.len(), 2);
        assert!(!rows[0][4].is_empty());
        assert!(rows[1][4].is_empty());
    }

    #[test]
    fn deterministic_output() {
        let s = parse_scenario(SHAPLEY_SCN).unwrap();
        let values: Vec<f64> = (1..=8).map(|k| k as f64 * 1e5).collect();
        let a = sweep(&s, SweepParam::Speed, &values, DEFAULT_TOL).unwrap();
        let b = sweep(&s, SweepParam::Speed, &values, DEFAULT_TOL).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unit_handling() {
        let s = parse_scenario(SHAPLEY_SCN).unwrap();
        let m = SweepParam::RepellerMass.to_si(1e-3, None, &s).unwrap();
        assert_eq!(m, 1e-3 * s.attractor.mass());
        assert_eq!(SweepParam::Speed.to_si(630.0, None, &s).unwrap(), 6.3e5);
        assert!(SweepParam::Speed.to_si(1.0, Some("kg"), &s).is_err());
        assert_eq!("speed".parse::<SweepParam>().unwrap(), SweepParam::Speed);
        assert!("mass".parse::<SweepParam>().is_err());
    }
}
