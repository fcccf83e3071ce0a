//! Physical constants and the handful of unit conversions the CLI accepts.
//!
//! Everything downstream works in SI. Conversion factors are the rounded
//! values used throughout the model's reference data set, not CODATA values,
//! so published figures can be reproduced from the same inputs.

use std::fmt;
use std::ops::{Div, Mul};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// Metres per light-year.
pub const LIGHT_YEAR_M: f64 = 9.461e15;
/// Metres per million light-years.
pub const MEGA_LIGHT_YEAR_M: f64 = 9.461e21;
/// Metres per astronomical unit.
pub const ASTRONOMICAL_UNIT_M: f64 = 1.496e11;
/// Kilograms per solar mass (rounded).
pub const SOLAR_MASS_KG: f64 = 2.0e30;
/// Seconds per Julian year, 365.25 d.
pub const YEAR_S: f64 = 365.25 * 86_400.0;
/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Rounded gravitational constant used as the scenario default.
pub const DEFAULT_G: f64 = 6.7e-11;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalConstants {
    /// m³·s⁻²·kg⁻¹
    pub g: f64,
    /// m/s
    pub c: f64,
    /// kg
    pub m_sun: f64,
    /// m
    pub ly: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants {
            g: DEFAULT_G,
            c: SPEED_OF_LIGHT,
            m_sun: SOLAR_MASS_KG,
            ly: LIGHT_YEAR_M,
        }
    }
}

impl PhysicalConstants {
    pub fn with_g(g: f64) -> Result<Self> {
        let c = PhysicalConstants {
            g,
            ..Default::default()
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("G", self.g),
            ("c", self.c),
            ("M_sun", self.m_sun),
            ("ly", self.ly),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!(
                    "constant {name} must be finite and positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Exponents of mass, length and time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Dimension {
    pub mass: i8,
    pub length: i8,
    pub time: i8,
}

impl Dimension {
    pub const DIMENSIONLESS: Dimension = Dimension::new(0, 0, 0);
    pub const MASS: Dimension = Dimension::new(1, 0, 0);
    pub const LENGTH: Dimension = Dimension::new(0, 1, 0);
    pub const TIME: Dimension = Dimension::new(0, 0, 1);
    pub const VELOCITY: Dimension = Dimension::new(0, 1, -1);
    /// Dimension of G.
    pub const GRAVITATIONAL: Dimension = Dimension::new(-1, 3, -2);

    pub const fn new(mass: i8, length: i8, time: i8) -> Self {
        Dimension { mass, length, time }
    }

    pub fn is_dimensionless(self) -> bool {
        self == Dimension::DIMENSIONLESS
    }
}

impl Mul for Dimension {
    type Output = Dimension;
    fn mul(self, rhs: Dimension) -> Dimension {
        Dimension::new(
            self.mass + rhs.mass,
            self.length + rhs.length,
            self.time + rhs.time,
        )
    }
}

impl Div for Dimension {
    type Output = Dimension;
    fn div(self, rhs: Dimension) -> Dimension {
        Dimension::new(
            self.mass - rhs.mass,
            self.length - rhs.length,
            self.time - rhs.time,
        )
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "M^{} L^{} T^{}", self.mass, self.length, self.time)
    }
}

/// Unit tags accepted in scenario files and on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unit {
    Metre,
    LightYear,
    MegaLightYear,
    AstronomicalUnit,
    Kilogram,
    SolarMass,
    MetrePerSecond,
    KilometrePerSecond,
    FractionOfC,
    Second,
    Year,
    GigaYear,
}

impl Unit {
    pub const ALL: [Unit; 12] = [
        Unit::Metre,
        Unit::LightYear,
        Unit::MegaLightYear,
        Unit::AstronomicalUnit,
        Unit::Kilogram,
        Unit::SolarMass,
        Unit::MetrePerSecond,
        Unit::KilometrePerSecond,
        Unit::FractionOfC,
        Unit::Second,
        Unit::Year,
        Unit::GigaYear,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Unit::Metre => "m",
            Unit::LightYear => "ly",
            Unit::MegaLightYear => "Mly",
            Unit::AstronomicalUnit => "AU",
            Unit::Kilogram => "kg",
            Unit::SolarMass => "M_sun",
            Unit::MetrePerSecond => "m/s",
            Unit::KilometrePerSecond => "km/s",
            Unit::FractionOfC => "fraction_of_c",
            Unit::Second => "s",
            Unit::Year => "yr",
            Unit::GigaYear => "Gyr",
        }
    }

    /// SI value of one of this unit.
    pub fn factor(self) -> f64 {
        match self {
            Unit::Metre | Unit::Kilogram | Unit::MetrePerSecond | Unit::Second => 1.0,
            Unit::LightYear => LIGHT_YEAR_M,
            Unit::MegaLightYear => MEGA_LIGHT_YEAR_M,
            Unit::AstronomicalUnit => ASTRONOMICAL_UNIT_M,
            Unit::SolarMass => SOLAR_MASS_KG,
            Unit::KilometrePerSecond => 1.0e3,
            Unit::FractionOfC => SPEED_OF_LIGHT,
            Unit::Year => YEAR_S,
            Unit::GigaYear => 1.0e9 * YEAR_S,
        }
    }

    pub fn dimension(self) -> Dimension {
        match self {
            Unit::Metre | Unit::LightYear | Unit::MegaLightYear | Unit::AstronomicalUnit => {
                Dimension::LENGTH
            }
            Unit::Kilogram | Unit::SolarMass => Dimension::MASS,
            Unit::MetrePerSecond | Unit::KilometrePerSecond | Unit::FractionOfC => {
                Dimension::VELOCITY
            }
            Unit::Second | Unit::Year | Unit::GigaYear => Dimension::TIME,
        }
    }
}

impl FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Unit> {
        Unit::ALL
            .into_iter()
            .find(|u| u.tag() == s)
            .ok_or_else(|| Error::UnknownUnit(s.to_string()))
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// A finite SI value tagged with its dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantity {
    value: f64,
    dimension: Dimension,
}

impl Quantity {
    pub fn new(value: f64, dimension: Dimension) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::Validation(format!(
                "non-finite quantity {value} ({dimension})"
            )));
        }
        Ok(Quantity { value, dimension })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    /// Express this SI quantity in `unit`.
    pub fn in_unit(&self, unit: Unit) -> Result<f64> {
        if unit.dimension() != self.dimension {
            return Err(Error::Usage(format!(
                "cannot express {} as {}",
                self.dimension, unit
            )));
        }
        Ok(self.value / unit.factor())
    }
}

impl Mul for Quantity {
    type Output = Quantity;
    fn mul(self, rhs: Quantity) -> Quantity {
        Quantity {
            value: self.value * rhs.value,
            dimension: self.dimension * rhs.dimension,
        }
    }
}

impl Div for Quantity {
    type Output = Quantity;
    fn div(self, rhs: Quantity) -> Quantity {
        Quantity {
            value: self.value / rhs.value,
            dimension: self.dimension / rhs.dimension,
        }
    }
}

pub fn convert_to_si(value: f64, unit: Unit) -> Result<Quantity> {
    Quantity::new(value * unit.factor(), unit.dimension())
}

/// Parse a unit tag and convert in one go.
pub fn convert_tagged(value: f64, tag: &str) -> Result<Quantity> {
    convert_to_si(value, tag.parse()?)
}

/// Mantissa/exponent form with three significant digits, `3.16e7`.
pub fn sci3(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x:.2e}")
    }
}

/// Three significant digits, positional notation for moderate magnitudes.
pub fn sig3(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(mag - 2);
    let rounded = (x / scale).round() * scale;
    let mag = rounded.abs().log10().floor() as i32;
    if (-3..6).contains(&mag) {
        let decimals = (2 - mag).max(0) as usize;
        format!("{rounded:.decimals$}")
    } else {
        sci3(x)
    }
}

/// Human rendering: times in seconds and years, lengths in metres and
/// light-years (Mly once the value reaches a million light-years).
pub fn format_human(q: &Quantity) -> String {
    let v = q.value;
    match q.dimension {
        d if d == Dimension::TIME => format!("{} s ({} yr)", sci3(v), sig3(v / YEAR_S)),
        d if d == Dimension::LENGTH => {
            if v.abs() >= MEGA_LIGHT_YEAR_M {
                format!("{} m ({} Mly)", sci3(v), sig3(v / MEGA_LIGHT_YEAR_M))
            } else {
                format!("{} m ({} ly)", sci3(v), sig3(v / LIGHT_YEAR_M))
            }
        }
        d if d == Dimension::VELOCITY => {
            format!("{} m/s ({} km/s)", sci3(v), sig3(v / 1.0e3))
        }
        d if d == Dimension::MASS => format!("{} kg ({} M_sun)", sci3(v), sig3(v / SOLAR_MASS_KG)),
        d if d.is_dimensionless() => sci3(v),
        d => format!("{} [{}]", sci3(v), d),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mly_conversion_matches_reference_distance() {
        let w = convert_tagged(650.0, "Mly").unwrap();
        assert_eq!(w.dimension(), Dimension::LENGTH);
        assert!((w.value() / 6.15e24 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn zero_and_year() {
        assert_eq!(convert_tagged(0.0, "ly").unwrap().value(), 0.0);
        assert_eq!(convert_tagged(1.0, "yr").unwrap().value(), 365.25 * 86400.0);
        assert!((YEAR_S / 3.156e7 - 1.0).abs() < 1e-4);
    }

    #[test]
    fn unknown_unit_is_input_error() {
        let e = convert_tagged(1.0, "parsec").unwrap_err();
        assert_eq!(e, Error::UnknownUnit("parsec".into()));
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(Quantity::new(f64::NAN, Dimension::MASS).is_err());
        assert!(convert_to_si(f64::INFINITY, Unit::Metre).is_err());
    }

    #[test]
    fn constants_are_consistent() {
        let k = PhysicalConstants::default();
        k.validate().unwrap();
        // light-year over c is one year
        assert!((k.ly / k.c / 3.156e7 - 1.0).abs() < 0.01);
        // reference speed 6.3e5 m/s is about 2.1e-3 c
        assert!((6.3e5 / k.c / 2.1e-3 - 1.0).abs() < 0.01);
        assert!(PhysicalConstants::with_g(-1.0).is_err());
    }

    #[test]
    fn human_formatting() {
        let yr = convert_to_si(1.0, Unit::Year).unwrap();
        assert_eq!(format_human(&yr), "3.16e7 s (1.00 yr)");
        let zero = Quantity::new(0.0, Dimension::TIME).unwrap();
        assert_eq!(format_human(&zero), "0 s (0 yr)");
        let ly = Quantity::new(9.461e15, Dimension::LENGTH).unwrap();
        assert_eq!(format_human(&ly), "9.46e15 m (1.00 ly)");
        let w = convert_tagged(650.0, "Mly").unwrap();
        assert_eq!(format_human(&w), "6.15e24 m (650 Mly)");
    }

    #[test]
    fn sig3_rounds_across_decades() {
        assert_eq!(sig3(9.996), "10.0");
        assert_eq!(sig3(0.12345), "0.123");
        assert_eq!(sig3(1.136e11), "1.14e11");
    }

    #[test]
    fn gravitational_parameter_ratio_is_dimensionless() {
        let g = Quantity::new(DEFAULT_G, Dimension::GRAVITATIONAL).unwrap();
        let m = convert_tagged(8e16, "M_sun").unwrap();
        let w = convert_tagged(650.0, "Mly").unwrap();
        let v = convert_tagged(6.3e5, "m/s").unwrap();
        let ratio = g * m / w / (v * v);
        assert!(ratio.dimension().is_dimensionless());
        assert!(ratio.value() > 1.0);
        // K = 2GM keeps G's length/time signature after multiplying by mass
        let k = g * m;
        assert_eq!(k.dimension(), Dimension::new(0, 3, -2));
        assert!(k.in_unit(Unit::Metre).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_through_si(x in -1e30f64..1e30, idx in 0usize..12) {
            let unit = Unit::ALL[idx];
            let q = convert_to_si(x, unit).unwrap();
            let back = q.in_unit(unit).unwrap();
            prop_assert!((back - x).abs() <= 1e-12 * x.abs());
        }

        #[test]
        fn tags_parse_back(idx in 0usize..12) {
            let unit = Unit::ALL[idx];
            prop_assert_eq!(unit.tag().parse::<Unit>().unwrap(), unit);
        }
    }
}
