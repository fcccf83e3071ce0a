//! Problem definitions and their composite parameters.
//!
//! Velocities follow the sign of the position derivative: `velocity < 0`
//! means the body is moving toward the attractor. Outward initial motion is
//! rejected; backward-time analysis lives in [`crate::dynamics`].

use serde::Serialize;

use crate::error::{Error, Result};

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Validation(format!("{name} must be finite, got {v}")))
    }
}

fn check_common(mass: f64, velocity: f64, g: f64) -> Result<()> {
    check_finite("attractor mass", mass)?;
    check_finite("velocity", velocity)?;
    check_finite("gravitational constant", g)?;
    if mass <= 0.0 {
        return Err(Error::Validation(format!(
            "attractor mass must be positive, got {mass}"
        )));
    }
    if velocity > 0.0 {
        return Err(Error::Validation(format!(
            "initial velocity must point toward the attractor (v0 <= 0), got {velocity}"
        )));
    }
    if g <= 0.0 {
        return Err(Error::Validation(format!(
            "gravitational constant must be positive, got {g}"
        )));
    }
    Ok(())
}

/// Attractor-only free fall from distance `distance` with radial velocity
/// `velocity`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttractorScenario {
    mass: f64,
    distance: f64,
    velocity: f64,
    g: f64,
}

impl AttractorScenario {
    pub fn new(mass: f64, distance: f64, velocity: f64, g: f64) -> Result<Self> {
        check_common(mass, velocity, g)?;
        check_finite("distance", distance)?;
        if distance <= 0.0 {
            return Err(Error::Validation(format!(
                "distance to attractor must be positive, got {distance}"
            )));
        }
        Ok(AttractorScenario {
            mass,
            distance,
            velocity,
            g,
        })
    }

    /// `speed` is measured toward the attractor, so `velocity = -speed`.
    pub fn from_speed(mass: f64, distance: f64, speed: f64, g: f64) -> Result<Self> {
        Self::new(mass, distance, -speed, g)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn velocity(&self) -> f64 {
        self.velocity
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn derive(&self) -> AttractorDerived {
        derive_attractor(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttractorDerived {
    /// 2GM, m³/s².
    pub k: f64,
    /// Specific energy ½v0² − GM/W.
    pub energy: f64,
    /// v0² − 2GM/W.
    pub c: f64,
    /// −C; positive for a bound orbit.
    pub beta: f64,
    /// β/K, 1/m.
    pub gamma: f64,
    /// γW = 1 − W·v0²/K.
    pub gamma_w: f64,
    /// β > 0.
    pub bound: bool,
}

pub fn derive_attractor(s: &AttractorScenario) -> AttractorDerived {
    let k = 2.0 * s.g * s.mass;
    let v2 = s.velocity * s.velocity;
    let c = v2 - k / s.distance;
    let beta = -c;
    AttractorDerived {
        k,
        energy: 0.5 * v2 - s.g * s.mass / s.distance,
        c,
        beta,
        gamma: beta / k,
        gamma_w: 1.0 - s.distance * v2 / k,
        bound: beta > 0.0,
    }
}

/// Attractor of mass `attractor_mass` at the origin, repeller of equivalent
/// mass `-repeller_mass` at `separation`, body starting at `distance`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DipoleScenario {
    attractor_mass: f64,
    repeller_mass: f64,
    separation: f64,
    distance: f64,
    velocity: f64,
    g: f64,
}

impl DipoleScenario {
    pub fn new(
        attractor_mass: f64,
        repeller_mass: f64,
        separation: f64,
        distance: f64,
        velocity: f64,
        g: f64,
    ) -> Result<Self> {
        check_common(attractor_mass, velocity, g)?;
        check_finite("repeller mass", repeller_mass)?;
        check_finite("separation", separation)?;
        check_finite("distance", distance)?;
        if repeller_mass < 0.0 {
            return Err(Error::Validation(format!(
                "repeller mass magnitude must be non-negative, got {repeller_mass}"
            )));
        }
        if !(distance > 0.0 && distance < separation) {
            return Err(Error::Validation(format!(
                "need 0 < distance < separation, got distance {distance}, separation {separation}"
            )));
        }
        Ok(DipoleScenario {
            attractor_mass,
            repeller_mass,
            separation,
            distance,
            velocity,
            g,
        })
    }

    pub fn from_speed(
        attractor_mass: f64,
        repeller_mass: f64,
        separation: f64,
        distance: f64,
        speed: f64,
        g: f64,
    ) -> Result<Self> {
        Self::new(
            attractor_mass,
            repeller_mass,
            separation,
            distance,
            -speed,
            g,
        )
    }

    pub fn attractor_mass(&self) -> f64 {
        self.attractor_mass
    }

    pub fn repeller_mass(&self) -> f64 {
        self.repeller_mass
    }

    /// Attractor–repeller distance L.
    pub fn separation(&self) -> f64 {
        self.separation
    }

    /// Initial distance to the attractor U.
    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn velocity(&self) -> f64 {
        self.velocity
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn derive(&self) -> DipoleDerived {
        derive_dipole(self)
    }

    /// Same body and attractor with the repeller removed (W = U).
    pub fn without_repeller(&self) -> AttractorScenario {
        AttractorScenario {
            mass: self.attractor_mass,
            distance: self.distance,
            velocity: self.velocity,
            g: self.g,
        }
    }

    pub fn with_repeller_mass(&self, repeller_mass: f64) -> Result<Self> {
        Self::new(
            self.attractor_mass,
            repeller_mass,
            self.separation,
            self.distance,
            self.velocity,
            self.g,
        )
    }

    pub fn with_velocity(&self, velocity: f64) -> Result<Self> {
        Self::new(
            self.attractor_mass,
            self.repeller_mass,
            self.separation,
            self.distance,
            velocity,
            self.g,
        )
    }

    pub fn with_separation(&self, separation: f64) -> Result<Self> {
        Self::new(
            self.attractor_mass,
            self.repeller_mass,
            separation,
            self.distance,
            self.velocity,
            self.g,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DipoleDerived {
    /// 2GM.
    pub a: f64,
    /// 2GM*.
    pub b: f64,
    /// v0² − a/U + b/(L−U).
    pub c: f64,
    /// Specific energy, C/2.
    pub f: f64,
    /// v0².
    pub speed_sq: f64,
    /// v0² − a/U < 0, the hypothesis of the repeller comparison theorem.
    pub comparison_applies: bool,
}

pub fn derive_dipole(s: &DipoleScenario) -> DipoleDerived {
    let a = 2.0 * s.g * s.attractor_mass;
    let b = 2.0 * s.g * s.repeller_mass;
    let v2 = s.velocity * s.velocity;
    let c = v2 - a / s.distance + b / (s.separation - s.distance);
    DipoleDerived {
        a,
        b,
        c,
        f: 0.5 * c,
        speed_sq: v2,
        comparison_applies: v2 - a / s.distance < 0.0,
    }
}

impl DipoleDerived {
    /// Squared speed implied by energy conservation at position `u`:
    /// a/u − b/(L−u) + C.
    pub fn speed_sq_at(&self, l: f64, u: f64) -> f64 {
        self.a / u - self.b / (l - u) + self.c
    }

    /// Denominator radicand of the dipole collapse-time integrand,
    /// C·u(L−u) − (a+b)·u + a·L.
    pub fn radicand(&self, l: f64, u: f64) -> f64 {
        self.c * u * (l - u) - (self.a + self.b) * u + self.a * l
    }
}

/// ½[v² − a/u + b/(L−u)] at position `u` with velocity `v`.
pub fn specific_energy_at(s: &DipoleScenario, u: f64, v: f64) -> Result<f64> {
    let l = s.separation;
    if !(u > 0.0 && u < l) {
        return Err(Error::Domain(format!("position {u} outside (0, {l})")));
    }
    let d = s.derive();
    Ok(0.5 * (v * v - d.a / u + d.b / (l - u)))
}
