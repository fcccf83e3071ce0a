//! Closed-form collapse times.
//!
//! All expressions are rearranged so that the leading cancellation in each
//! bracket is computed without loss: the attractor-only bracket switches to
//! its power series for small arguments and the hyperbolic antiderivative of
//! the repeller-only case is evaluated through `ln_1p`.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scenario::AttractorDerived;

/// How a [`CollapseTime`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    AttractorExact,
    PiHalfApprox,
    CrudeBound,
    RepellerOnlyExact,
    Quadrature,
    Ode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostics {
    AttractorExact {
        gamma_w: f64,
        bracket: f64,
    },
    PiHalf {
        /// bracket/(π/2) when γW is known.
        refinement_factor: Option<f64>,
    },
    CrudeBound,
    RepellerOnly {
        x_lower: f64,
        x_upper: f64,
    },
    Quadrature {
        abs_error: f64,
        evaluations: usize,
    },
    Ode {
        steps: usize,
        energy_drift: f64,
        remainder: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollapseTime {
    /// Seconds.
    pub t: f64,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

impl CollapseTime {
    pub(crate) fn new(t: f64, method: Method, diagnostics: Diagnostics) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::Numerical(format!(
                "{method:?} produced a non-positive or non-finite time {t}"
            )));
        }
        Ok(CollapseTime {
            t,
            method,
            diagnostics,
        })
    }
}

/// W^{3/2}/√K, the natural time scale of free fall from W.
pub(crate) fn free_fall_scale(k: f64, w: f64) -> f64 {
    w * w.sqrt() / k.sqrt()
}

/// arcsin(x) − x·√(1 − x²) for x ∈ [0, 1].
pub fn arcsine_bracket(x: f64) -> f64 {
    if x >= 1.0 {
        return FRAC_PI_2;
    }
    if x < 0.1 {
        // 2·Σ c_n x^{2n+3}/(2n+3), c_n = C(2n, n)/4ⁿ
        let x2 = x * x;
        let mut power = x2 * x;
        let mut c = 1.0;
        let mut sum = 0.0;
        for n in 0..40 {
            let term = 2.0 * c * power / (2 * n + 3) as f64;
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
            c *= (2 * n + 1) as f64 / (2 * n + 2) as f64;
            power *= x2;
        }
        return sum;
    }
    x.asin() - x * ((1.0 - x) * (1.0 + x)).sqrt()
}

const GAMMA_W_CLAMP: f64 = 1e-12;

fn checked_gamma_w(gamma_w: f64) -> Result<f64> {
    if gamma_w > 1.0 + GAMMA_W_CLAMP || gamma_w <= 0.0 || gamma_w.is_nan() {
        return Err(Error::Internal(format!(
            "gamma*W = {gamma_w} outside (0, 1]"
        )));
    }
    Ok(gamma_w.min(1.0))
}

/// Exact attractor-only collapse time,
/// T = K^{-1/2} γ^{-3/2} [arcsin√(γW) − √(γW)·√(1 − γW)].
pub fn collapse_time_attractor(d: &AttractorDerived, w: f64) -> Result<CollapseTime> {
    if !d.bound {
        return Err(Error::Regime(format!(
            "closed form requires bound orbit (beta = {} <= 0)",
            d.beta
        )));
    }
    let gamma_w = checked_gamma_w(d.gamma_w)?;
    let x = gamma_w.sqrt();
    let bracket = arcsine_bracket(x);
    // γ^{-3/2} = W^{3/2}/(γW)^{3/2}
    let t = bracket / (x * x * x) * free_fall_scale(d.k, w);
    CollapseTime::new(
        t,
        Method::AttractorExact,
        Diagnostics::AttractorExact { gamma_w, bracket },
    )
}

/// Free fall from rest, (π/2)·W^{3/2}/√K. When `gamma_w` is given, the
/// diagnostics carry the factor by which the exact bracket differs.
pub fn collapse_time_pi_half(k: f64, w: f64, gamma_w: Option<f64>) -> Result<CollapseTime> {
    if !(k > 0.0 && w > 0.0) {
        return Err(Error::Validation(format!(
            "need K > 0 and W > 0, got K = {k}, W = {w}"
        )));
    }
    let refinement_factor = match gamma_w {
        Some(g) => Some(arcsine_bracket(checked_gamma_w(g)?.sqrt()) / FRAC_PI_2),
        None => None,
    };
    CollapseTime::new(
        FRAC_PI_2 * free_fall_scale(k, w),
        Method::PiHalfApprox,
        Diagnostics::PiHalf { refinement_factor },
    )
}

/// W/|v0|: the speed only grows during infall.
pub fn crude_upper_bound(w: f64, v0: f64) -> Result<CollapseTime> {
    if v0 == 0.0 {
        return Err(Error::Regime(
            "bound undefined for a body starting at rest".into(),
        ));
    }
    if v0 > 0.0 {
        return Err(Error::Validation(format!(
            "velocity must point toward the attractor, got {v0}"
        )));
    }
    CollapseTime::new(w / v0.abs(), Method::CrudeBound, Diagnostics::CrudeBound)
}

/// x√(x²−1) + arcosh(x), given y = x² − 1 ≥ 0.
fn hyperbolic_antiderivative(y: f64) -> f64 {
    let x = (1.0 + y).sqrt();
    let r = y.sqrt();
    // ln(x + r) = ln(1 + r + (x − 1)), x − 1 = y/(x + 1)
    x * r + (r + y / (x + 1.0)).ln_1p()
}

/// Collapse time with the repeller alone (a = 0),
/// T = b·C^{-3/2}·[x√(x²−1) + ln(x + √(x²−1))] between
/// x₁ = √(C/b)·√(L−U) and x₂ = √(C/b)·√L.
pub fn collapse_time_repeller_only(b: f64, c: f64, l: f64, u: f64) -> Result<CollapseTime> {
    if !(u > 0.0 && u < l) {
        return Err(Error::Validation(format!(
            "need 0 < U < L, got U = {u}, L = {l}"
        )));
    }
    if b < 0.0 || !b.is_finite() || !c.is_finite() {
        return Err(Error::Validation(format!(
            "need finite b >= 0 and C, got b = {b}, C = {c}"
        )));
    }
    if b == 0.0 {
        // no forces: uniform motion at |v0| = √C
        if c <= 0.0 {
            return Err(Error::Regime("no repeller and no initial motion".into()));
        }
        return CollapseTime::new(
            u / c.sqrt(),
            Method::RepellerOnlyExact,
            Diagnostics::RepellerOnly {
                x_lower: f64::INFINITY,
                x_upper: f64::INFINITY,
            },
        );
    }
    // x₁² − 1 = (C(L−U) − b)/b = v0²(L−U)/b
    let y_lower = (c * (l - u) - b) / b;
    if y_lower < -1e-12 {
        return Err(Error::Domain(format!(
            "C(L-U) < b: C = {c} inconsistent with b = {b}"
        )));
    }
    let y_lower = y_lower.max(0.0);
    let y_upper = (c * l - b) / b;
    let x_lower = (1.0 + y_lower).sqrt();
    let x_upper = (1.0 + y_upper).sqrt();
    if !(x_upper > x_lower && x_lower >= 1.0) {
        return Err(Error::Internal(format!(
            "expected x2 > x1 >= 1, got x1 = {x_lower}, x2 = {x_upper}"
        )));
    }
    let bracket = hyperbolic_antiderivative(y_upper) - hyperbolic_antiderivative(y_lower);
    CollapseTime::new(
        b / (c * c.sqrt()) * bracket,
        Method::RepellerOnlyExact,
        Diagnostics::RepellerOnly { x_lower, x_upper },
    )
}
