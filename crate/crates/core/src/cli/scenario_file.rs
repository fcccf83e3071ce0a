//! Flat `key = number unit` scenario files.
//!
//! ```text
//! # comment
//! attractor_mass = 8e16 M_sun
//! distance_to_attractor = 650 Mly
//! speed_toward_attractor = 6.3e5 m/s
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::scenario::{AttractorScenario, DipoleScenario};
use crate::units::{convert_to_si, Dimension, Unit, DEFAULT_G};

const KEYS: [(&str, Option<Dimension>); 6] = [
    ("attractor_mass", Some(Dimension::MASS)),
    ("repeller_mass", Some(Dimension::MASS)),
    ("distance_to_attractor", Some(Dimension::LENGTH)),
    ("dipole_separation", Some(Dimension::LENGTH)),
    ("speed_toward_attractor", Some(Dimension::VELOCITY)),
    // SI number, no unit
    ("gravitational_constant", None),
];

/// Raw entries as written, in SI, with their source text for echoing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScenarioFile {
    pub attractor_mass: Option<f64>,
    pub repeller_mass: Option<f64>,
    pub distance_to_attractor: Option<f64>,
    pub dipole_separation: Option<f64>,
    pub speed_toward_attractor: Option<f64>,
    pub gravitational_constant: Option<f64>,
    /// `key = payload` lines in file order.
    pub echo: Vec<String>,
}

impl ScenarioFile {
    fn slot(&mut self, key: &str) -> &mut Option<f64> {
        match key {
            "attractor_mass" => &mut self.attractor_mass,
            "repeller_mass" => &mut self.repeller_mass,
            "distance_to_attractor" => &mut self.distance_to_attractor,
            "dipole_separation" => &mut self.dipole_separation,
            "speed_toward_attractor" => &mut self.speed_toward_attractor,
            "gravitational_constant" => &mut self.gravitational_constant,
            _ => unreachable!("key checked against KEYS"),
        }
    }
}

fn parse_error(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Column (1-based, in chars) of byte offset `at` within `line`.
fn column_of(line: &str, at: usize) -> usize {
    line[..at].chars().count() + 1
}

fn offset_in(line: &str, part: &str) -> usize {
    part.as_ptr() as usize - line.as_ptr() as usize
}

pub fn parse_scenario_text(text: &str) -> Result<ScenarioFile> {
    let mut file = ScenarioFile::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let Some((key_part, payload)) = content.split_once('=') else {
            let col = column_of(raw, offset_in(raw, content.trim_start()));
            return Err(parse_error(line_no, col, "expected `key = value unit`"));
        };
        let key = key_part.trim();
        let key_col = column_of(raw, offset_in(raw, key_part.trim_start()));
        let Some(&(_, dimension)) = KEYS.iter().find(|(k, _)| *k == key) else {
            return Err(parse_error(
                line_no,
                key_col,
                format!("unknown key `{key}`"),
            ));
        };

        let mut tokens = payload.split_whitespace();
        let payload_col = || column_of(raw, key_part.len() + 1);
        let Some(number) = tokens.next() else {
            return Err(parse_error(line_no, payload_col(), "missing value"));
        };
        let number_col = column_of(raw, offset_in(raw, number));
        let value: f64 = number
            .parse()
            .map_err(|_| parse_error(line_no, number_col, format!("invalid number `{number}`")))?;
        if !value.is_finite() {
            return Err(parse_error(line_no, number_col, "value must be finite"));
        }
        let unit = tokens.next();
        if let Some(extra) = tokens.next() {
            return Err(parse_error(
                line_no,
                column_of(raw, offset_in(raw, extra)),
                format!("unexpected token `{extra}`"),
            ));
        }

        let si = match (dimension, unit) {
            (None, None) => value,
            (None, Some(u)) => {
                return Err(parse_error(
                    line_no,
                    column_of(raw, offset_in(raw, u)),
                    format!("`{key}` takes a bare SI number, found unit `{u}`"),
                ))
            }
            (Some(_), None) => {
                return Err(parse_error(
                    line_no,
                    payload_col(),
                    format!("`{key}` needs a unit"),
                ))
            }
            (Some(dim), Some(u)) => {
                let unit: Unit = u.parse()?;
                if unit.dimension() != dim {
                    return Err(parse_error(
                        line_no,
                        column_of(raw, offset_in(raw, u)),
                        format!("unit `{u}` has the wrong dimension for `{key}`"),
                    ));
                }
                convert_to_si(value, unit)?.value()
            }
        };

        let slot = file.slot(key);
        if slot.is_some() {
            return Err(parse_error(
                line_no,
                key_col,
                format!("duplicate key `{key}`"),
            ));
        }
        *slot = Some(si);
        file.echo.push(format!("{key} = {}", payload.trim()));
    }
    Ok(file)
}

/// A validated scenario: always an attractor problem, plus the dipole
/// problem when a separation is given.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedScenario {
    pub attractor: AttractorScenario,
    pub dipole: Option<DipoleScenario>,
    pub file: ScenarioFile,
}

impl LoadedScenario {
    pub fn from_file(file: ScenarioFile) -> Result<Self> {
        let require = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| Error::Validation(format!("missing required key `{key}`")))
        };
        let mass = require(file.attractor_mass, "attractor_mass")?;
        let distance = require(file.distance_to_attractor, "distance_to_attractor")?;
        let speed = require(file.speed_toward_attractor, "speed_toward_attractor")?;
        let g = file.gravitational_constant.unwrap_or(DEFAULT_G);
        let repeller = file.repeller_mass.unwrap_or(0.0);
        let attractor = AttractorScenario::from_speed(mass, distance, speed, g)?;
        let dipole = match file.dipole_separation {
            Some(l) => Some(DipoleScenario::from_speed(
                mass, repeller, l, distance, speed, g,
            )?),
            None if repeller > 0.0 => {
                return Err(Error::Validation(
                    "`dipole_separation` is required when `repeller_mass` > 0".into(),
                ))
            }
            None if repeller < 0.0 => {
                return Err(Error::Validation(format!(
                    "repeller mass magnitude must be non-negative, got {repeller}"
                )))
            }
            None => None,
        };
        Ok(LoadedScenario {
            attractor,
            dipole,
            file,
        })
    }

    /// The problem the dynamics and quadrature routines run on. Without a
    /// repeller the separation does not enter any formula, so an arbitrary
    /// one (2U) is used.
    pub fn dynamics_scenario(&self) -> DipoleScenario {
        self.dipole.unwrap_or_else(|| {
            let a = &self.attractor;
            DipoleScenario::new(
                a.mass(),
                0.0,
                2.0 * a.distance(),
                a.distance(),
                a.velocity(),
                a.g(),
            )
            .expect("attractor scenario already validated")
        })
    }

    pub fn require_dipole(&self) -> Result<DipoleScenario> {
        self.dipole.ok_or_else(|| {
            Error::Validation("command needs `dipole_separation` in the scenario".into())
        })
    }

    /// `# `-prefixed scenario echo lines.
    pub fn echo_lines(&self) -> Vec<String> {
        let mut out: Vec<String> = self.file.echo.iter().map(|l| format!("# {l}")).collect();
        if self.file.gravitational_constant.is_none() {
            out.push(format!(
                "# gravitational_constant = {DEFAULT_G:e} (default)"
            ));
        }
        out
    }
}

pub fn parse_scenario(text: &str) -> Result<LoadedScenario> {
    LoadedScenario::from_file(parse_scenario_text(text)?)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<LoadedScenario> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_scenario(&text)
}

/// Contents of the bundled `shapley.scn`.
pub const SHAPLEY_SCN: &str = include_str!("../../scenarios/shapley.scn");

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_shapley_file() {
        let s = parse_scenario(SHAPLEY_SCN).unwrap();
        let d = s.dipole.unwrap();
        assert!((d.attractor_mass() / 1.6e47 - 1.0).abs() < 1e-12);
        assert!((d.distance() / 6.15e24 - 1.0).abs() < 1e-3);
        assert_eq!(d.separation(), 1.4e25);
        assert_eq!(d.velocity(), -6.3e5);
        assert_eq!(d.repeller_mass(), d.attractor_mass());
        assert_eq!(d.g(), 6.7e-11);
    }

    #[test]
    fn repeller_defaults_to_zero() {
        let s = parse_scenario(
            "attractor_mass = 1 M_sun\ndistance_to_attractor = 1 AU\nspeed_toward_attractor = 0 m/s\n",
        )
        .unwrap();
        assert!(s.dipole.is_none());
        assert_eq!(s.dynamics_scenario().repeller_mass(), 0.0);
        assert!(s.require_dipole().is_err());
    }

    #[test]
    fn repeller_without_separation() {
        let e = parse_scenario(
            "attractor_mass = 1 M_sun\nrepeller_mass = 1 M_sun\ndistance_to_attractor = 1 AU\nspeed_toward_attractor = 0 m/s\n",
        )
        .unwrap_err();
        assert!(matches!(e, Error::Validation(_)));
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn parse_errors_carry_position() {
        let e = parse_scenario_text("attractor_mass = 1 M_sun\n  bogus = 3 m\n").unwrap_err();
        assert_eq!(
            e,
            Error::Parse {
                line: 2,
                column: 3,
                message: "unknown key `bogus`".into()
            }
        );
        let e = parse_scenario_text("attractor_mass = x1 kg").unwrap_err();
        assert!(
            matches!(
                e,
                Error::Parse {
                    line: 1,
                    column: 18,
                    ..
                }
            ),
            "{e:?}"
        );
        let e = parse_scenario_text("attractor_mass = 1 m").unwrap_err();
        assert!(matches!(e, Error::Parse { column: 20, .. }), "{e:?}");
        let e = parse_scenario_text("attractor_mass 1 kg").unwrap_err();
        assert!(matches!(e, Error::Parse { column: 1, .. }));
        let e = parse_scenario_text("gravitational_constant = 1 kg").unwrap_err();
        assert!(matches!(e, Error::Parse { .. }));
        let e = parse_scenario_text("attractor_mass = 1 kg\nattractor_mass = 2 kg").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        assert_eq!(
            parse_scenario_text("attractor_mass = 1 stone").unwrap_err(),
            Error::UnknownUnit("stone".into())
        );
    }

    #[test]
    fn comments_and_override() {
        let s = parse_scenario(
            "# header\n\nattractor_mass = 2e30 kg # inline\ndistance_to_attractor = 1.496e11 m\nspeed_toward_attractor = 1 km/s\ngravitational_constant = 6.674e-11\n",
        )
        .unwrap();
        assert_eq!(s.attractor.g(), 6.674e-11);
        assert_eq!(s.attractor.velocity(), -1000.0);
        assert_eq!(s.file.echo.len(), 4);
    }

    #[test]
    fn missing_key_is_validation_error() {
        let e = parse_scenario("attractor_mass = 1 kg\n").unwrap_err();
        assert!(matches!(e, Error::Validation(_)));
    }
}
