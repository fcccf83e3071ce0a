//! Collapse times for a test body falling along the line joining a fixed
//! point attractor (mass `M` at the origin) and a fixed point repeller
//! (equivalent mass `-M*` at distance `L`).
//!
//! Every result is available through at least two independent routes:
//! closed forms ([`closed_form`]), adaptive quadrature of the collapse-time
//! integrals ([`quadrature`]) and direct integration of the equations of
//! motion ([`dynamics`]). The [`cli`] module drives the `dipole` binary.

// `!(x > 0.0)` style checks are how NaN inputs get rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod closed_form;
pub mod dynamics;
pub mod error;
pub mod quadrature;
pub mod scenario;
pub mod units;

pub use closed_form::{CollapseTime, Diagnostics, Method};
pub use error::{Error, Result};
pub use scenario::{AttractorDerived, AttractorScenario, DipoleDerived, DipoleScenario};
pub use units::{Dimension, PhysicalConstants, Quantity, Unit};
