//! Direct integration of the equations of motion.
//!
//! Forward runs integrate the second-order system
//! u'' = −a/(2u²) − b/(2(L−u)²) so that energy conservation is a genuine
//! diagnostic. They stop at `epsilon_stop · U` and add the remaining
//! attractor-dominated free-fall time analytically.
//!
//! Backward runs integrate the first-order form v' = √(a/v − b/(L−v) + C)
//! for v(τ) = u(−τ) up to the turning point, where the speed vanishes.

mod rkf78;

use serde::Serialize;

use crate::closed_form::{CollapseTime, Diagnostics, Method};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_adaptive, QuadratureOptions};
use crate::scenario::{DipoleDerived, DipoleScenario};

pub const DEFAULT_EPSILON_STOP: f64 = 1e-6;
/// Default relative tolerance of the step-size controller.
pub const DEFAULT_ODE_TOL: f64 = 1e-14;
pub const DEFAULT_MAX_STEPS: usize = 1_000_000;

/// Position and velocity at time `t`.
///
/// For backward runs `t` counts time into the past (τ = −t ≥ 0) while `v`
/// stays the physical velocity u'(t), so the first state of either run is
/// `(0, U, v0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct State {
    pub t: f64,
    pub u: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    CollapsedAtEpsilon,
    TurningPointReached,
    /// The requested end time was reached first.
    TimeLimit,
    /// Step budget exhausted or step size underflowed; the trajectory is partial.
    StepLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub states: Vec<State>,
    pub terminal: Terminal,
    /// max |F − F₀| / |F₀| over every accepted step.
    pub energy_drift_max: f64,
    /// Stop time plus analytic remainder; present for collapsed runs.
    pub collapse_time_estimate: Option<f64>,
    /// Analytic free-fall time from the stop state to u = 0.
    pub remainder: Option<f64>,
    pub steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn last(&self) -> &State {
        self.states.last().expect("trajectory has an initial state")
    }

    /// The collapse time as a [`CollapseTime`] record.
    pub fn collapse_time(&self) -> Result<CollapseTime> {
        let t = self.collapse_time_estimate.ok_or_else(|| {
            Error::Numerical(format!(
                "integration ended with {:?} before collapse",
                self.terminal
            ))
        })?;
        CollapseTime::new(
            t,
            Method::Ode,
            Diagnostics::Ode {
                steps: self.steps,
                energy_drift: self.energy_drift_max,
                remainder: self.remainder.unwrap_or(0.0),
            },
        )
    }
}

/// Forward-run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOptions {
    /// Stop once u ≤ epsilon_stop·U.
    pub epsilon_stop: f64,
    pub tol: f64,
    pub max_steps: usize,
    /// Stop at this time if collapse has not happened yet.
    pub t_max: Option<f64>,
    /// Record states exactly at these (increasing) times instead of at every
    /// step. The initial and final states are always recorded.
    pub sample_times: Option<Vec<f64>>,
}

impl Default for ForwardOptions {
    fn default() -> Self {
        ForwardOptions {
            epsilon_stop: DEFAULT_EPSILON_STOP,
            tol: DEFAULT_ODE_TOL,
            max_steps: DEFAULT_MAX_STEPS,
            t_max: None,
            sample_times: None,
        }
    }
}

struct Model {
    a: f64,
    b: f64,
    l: f64,
}

impl Model {
    fn new(s: &DipoleScenario) -> (Self, DipoleDerived) {
        let d = s.derive();
        (
            Model {
                a: d.a,
                b: d.b,
                l: s.separation(),
            },
            d,
        )
    }

    #[inline]
    fn rhs(&self, y: &[f64; 2]) -> [f64; 2] {
        let u = y[0];
        let r = self.l - u;
        [y[1], -0.5 * self.a / (u * u) - 0.5 * self.b / (r * r)]
    }

    #[inline]
    fn energy(&self, u: f64, v: f64) -> f64 {
        0.5 * (v * v - self.a / u + self.b / (self.l - u))
    }
}

fn drift(f: f64, f0: f64, scale: f64) -> f64 {
    (f - f0).abs() / if f0 != 0.0 { f0.abs() } else { scale }
}

/// Time for an attractor-only fall from `r` with velocity `v` (v ≤ 0) to
/// reach the origin: r^{3/2}/√a · ∫₀¹ √s/√(1 + κs) ds with κ = (v² − a/r)·r/a.
pub fn free_fall_remainder(a: f64, r: f64, v: f64) -> Result<f64> {
    let kappa = (v * v - a / r) * r / a;
    if kappa < -1.0 - 1e-12 {
        return Err(Error::Internal(format!(
            "remainder state beyond its own apoapsis (kappa = {kappa})"
        )));
    }
    let scale = r * r.sqrt() / a.sqrt();
    let integral = if kappa.abs() <= 0.5 {
        // Σ (−κ)ⁿ c_n/(n + 3/2), c_n = C(2n, n)/4ⁿ
        let mut c = 1.0;
        let mut p = 1.0;
        let mut sum = 0.0;
        for n in 0..200 {
            let term = c * p / (n as f64 + 1.5);
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
            c *= (2 * n + 1) as f64 / (2 * n + 2) as f64;
            p *= -kappa;
        }
        sum
    } else {
        let k = kappa.max(-1.0);
        let opts = QuadratureOptions::with_tol(1e-13)
            .singular_lower()
            .singular_upper();
        let r = integrate_adaptive(
            |s| s.sqrt() / (1.0 + k * s).max(0.0).sqrt(),
            0.0,
            1.0,
            &opts,
        )?;
        if !r.converged {
            return Err(Error::Numerical(
                "free-fall remainder did not converge".into(),
            ));
        }
        r.value
    };
    Ok(scale * integral)
}

fn error_norm(y0: &[f64; 2], y1: &[f64; 2], err: &[f64; 2], atol: &[f64; 2], rtol: f64) -> f64 {
    (0..2)
        .map(|i| err[i].abs() / (atol[i] + rtol * y0[i].abs().max(y1[i].abs())))
        .fold(0.0, f64::max)
}

fn next_step(h: f64, norm: f64) -> f64 {
    let factor = if norm == 0.0 {
        5.0
    } else {
        (0.9 * norm.powf(-1.0 / (rkf78::ERROR_ORDER + 1.0))).clamp(0.2, 5.0)
    };
    h * factor
}

/// Integrate toward the attractor until u ≤ `epsilon_stop`·U.
pub fn integrate_forward(s: &DipoleScenario, epsilon_stop: f64, tol: f64) -> Result<Trajectory> {
    integrate_forward_with(
        s,
        &ForwardOptions {
            epsilon_stop,
            tol,
            ..Default::default()
        },
    )
}

pub fn integrate_forward_with(s: &DipoleScenario, opts: &ForwardOptions) -> Result<Trajectory> {
    if !(opts.epsilon_stop > 1e-9 && opts.epsilon_stop < 1e-2) {
        return Err(Error::Usage(format!(
            "epsilon_stop must lie in (1e-9, 1e-2), got {}",
            opts.epsilon_stop
        )));
    }
    if !(opts.tol > 0.0 && opts.tol < 1.0) {
        return Err(Error::Usage(format!(
            "tolerance must lie in (0, 1), got {}",
            opts.tol
        )));
    }
    let (model, d) = Model::new(s);
    let u0 = s.distance();
    let v0 = s.velocity();
    let target = opts.epsilon_stop * u0;
    let f0 = model.energy(u0, v0);
    let energy_scale = d.a / u0;
    let speed_scale = energy_scale.sqrt();
    let atol = [opts.tol * target, opts.tol * speed_scale];
    let rhs = |y: &[f64; 2]| model.rhs(y);

    let mut traj = Trajectory {
        states: vec![State {
            t: 0.0,
            u: u0,
            v: v0,
        }],
        terminal: Terminal::StepLimit,
        energy_drift_max: 0.0,
        collapse_time_estimate: None,
        remainder: None,
        steps: 0,
        rejected_steps: 0,
    };
    if opts.t_max.is_some_and(|t| t <= 0.0) {
        traj.terminal = Terminal::TimeLimit;
        return Ok(traj);
    }

    let samples = opts.sample_times.as_deref().unwrap_or(&[]);
    let record_every = opts.sample_times.is_none();
    let mut next_sample = samples
        .iter()
        .position(|&t| t > 0.0)
        .unwrap_or(samples.len());

    let mut t = 0.0;
    let mut y = [u0, v0];
    // free-fall time scale; the first step is a small fraction of it
    let mut h = 1e-3 * u0 / (v0.abs() + speed_scale);

    while traj.steps < opts.max_steps {
        let mut h_try = h;
        let mut landing: Option<f64> = None;
        if let Some(&ts) = samples.get(next_sample) {
            if t + h_try >= ts {
                h_try = ts - t;
                landing = Some(ts);
            }
        }
        if let Some(tm) = opts.t_max {
            if t + h_try >= tm {
                h_try = tm - t;
                landing = Some(tm);
            }
        }
        if !(h_try > 1e-15 * t.max(f64::MIN_POSITIVE)) {
            if landing.is_some() {
                // already at the requested time up to rounding
                h_try = 0.0;
            } else {
                return Ok(traj);
            }
        }

        let (y_new, err) = if h_try > 0.0 {
            rkf78::step(&rhs, &y, h_try)
        } else {
            (y, [0.0; 2])
        };
        let norm = if y_new[0] > 0.0 && y_new.iter().all(|x| x.is_finite()) {
            error_norm(&y, &y_new, &err, &atol, opts.tol)
        } else {
            f64::INFINITY
        };
        if norm > 1.0 {
            traj.rejected_steps += 1;
            h = next_step(h_try, norm.min(1e10)).min(0.5 * h_try);
            if h < 1e-300 {
                return Ok(traj);
            }
            continue;
        }

        if y_new[0] <= target {
            let h_hit = locate_crossing(&rhs, &y, h_try, target);
            let (y_hit, _) = rkf78::step(&rhs, &y, h_hit);
            t += h_hit;
            traj.steps += 1;
            let stop = State {
                t,
                u: target,
                v: y_hit[1],
            };
            traj.energy_drift_max =
                traj.energy_drift_max
                    .max(drift(model.energy(stop.u, stop.v), f0, energy_scale));
            traj.states.push(stop);
            let rem = free_fall_remainder(model.a, stop.u, stop.v)?;
            traj.remainder = Some(rem);
            traj.collapse_time_estimate = Some(t + rem);
            traj.terminal = Terminal::CollapsedAtEpsilon;
            return Ok(traj);
        }

        t = landing.unwrap_or(t + h_try);
        y = y_new;
        traj.steps += 1;
        traj.energy_drift_max =
            traj.energy_drift_max
                .max(drift(model.energy(y[0], y[1]), f0, energy_scale));
        let state = State {
            t,
            u: y[0],
            v: y[1],
        };
        let hit_sample = samples.get(next_sample).is_some_and(|&ts| ts == t);
        if hit_sample {
            while samples.get(next_sample).is_some_and(|&ts| ts <= t) {
                next_sample += 1;
            }
        }
        if record_every || hit_sample {
            traj.states.push(state);
        }
        if opts.t_max.is_some_and(|tm| t >= tm) {
            if !(record_every || hit_sample) {
                traj.states.push(state);
            }
            traj.terminal = Terminal::TimeLimit;
            return Ok(traj);
        }
        if landing.is_none() || h_try >= h {
            h = next_step(h_try, norm);
        }
    }
    Ok(traj)
}

/// Step length in (0, h] at which the step lands on u = target
/// (regula falsi with the Illinois modification).
fn locate_crossing<F>(rhs: &F, y: &[f64; 2], h: f64, target: f64) -> f64
where
    F: Fn(&[f64; 2]) -> [f64; 2],
{
    let g = |hh: f64| rkf78::step(rhs, y, hh).0[0] - target;
    let (mut lo, mut hi) = (0.0, h);
    let (mut g_lo, mut g_hi) = (y[0] - target, g(h));
    let mut side = 0;
    for _ in 0..200 {
        if g_hi == 0.0 {
            return hi;
        }
        let mid = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
        let mid = if mid > lo && mid < hi {
            mid
        } else {
            0.5 * (lo + hi)
        };
        let gm = g(mid);
        if gm > 0.0 {
            lo = mid;
            g_lo = gm;
            if side == -1 {
                g_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = mid;
            g_hi = gm;
            if side == 1 {
                g_lo *= 0.5;
            }
            side = 1;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    hi
}

/// Integrate backward in time from the present state toward the turning
/// point.
pub fn integrate_backward(s: &DipoleScenario, tol: f64) -> Result<Trajectory> {
    integrate_backward_with(s, tol, None)
}

/// Backward run that, when `sample_times` is given, records states only at
/// those backward times (plus the first and last state).
pub fn integrate_backward_with(
    s: &DipoleScenario,
    tol: f64,
    sample_times: Option<&[f64]>,
) -> Result<Trajectory> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Usage(format!(
            "tolerance must lie in (0, 1), got {tol}"
        )));
    }
    let d = s.derive();
    let l = s.separation();
    let u0 = s.distance();
    let model = Model { a: d.a, b: d.b, l };
    let radicand = |v: f64| d.speed_sq_at(l, v);
    let r0 = radicand(u0);
    if r0 < 0.0 {
        return Err(Error::Domain(format!(
            "speed squared {r0} negative at the initial position"
        )));
    }
    let scale = d.a / u0;
    let threshold = tol * scale;
    let f0 = model.energy(u0, s.velocity());

    let mut traj = Trajectory {
        states: vec![State {
            t: 0.0,
            u: u0,
            v: s.velocity(),
        }],
        terminal: Terminal::StepLimit,
        energy_drift_max: 0.0,
        collapse_time_estimate: None,
        remainder: None,
        steps: 0,
        rejected_steps: 0,
    };
    if r0 < threshold {
        traj.terminal = Terminal::TurningPointReached;
        return Ok(traj);
    }

    let rhs = |y: &[f64; 1]| [radicand(y[0]).max(0.0).sqrt()];
    let atol = [tol * u0];
    let mut t = 0.0;
    let mut y = [u0];
    let samples = sample_times.unwrap_or(&[]);
    let mut next_sample = samples
        .iter()
        .position(|&t| t > 0.0)
        .unwrap_or(samples.len());
    let mut h = 1e-3 * u0 / scale.sqrt();
    while traj.steps < DEFAULT_MAX_STEPS {
        let mut h_try = h;
        let mut landing = None;
        if let Some(&ts) = samples.get(next_sample) {
            if t + h_try >= ts {
                h_try = ts - t;
                landing = Some(ts);
            }
        }
        let (y_new, err) = rkf78::step(&rhs, &y, h_try);
        let r_new = radicand(y_new[0]);
        let norm = if y_new[0].is_finite() && y_new[0] < l {
            err[0].abs() / (atol[0] + tol * y_new[0].abs())
        } else {
            f64::INFINITY
        };
        if norm > 1.0 || r_new < 0.0 {
            // overshooting the turning point counts as a rejected step
            traj.rejected_steps += 1;
            h = if norm > 1.0 {
                next_step(h_try, norm.min(1e10)).min(0.5 * h_try)
            } else {
                0.25 * h_try
            };
            if h <= 1e-15 * t {
                traj.terminal = Terminal::TurningPointReached;
                if sample_times.is_some() {
                    traj.states.push(State {
                        t,
                        u: y[0],
                        v: -radicand(y[0]).max(0.0).sqrt(),
                    });
                }
                return Ok(traj);
            }
            continue;
        }
        t = landing.unwrap_or(t + h_try);
        y = y_new;
        traj.steps += 1;
        let v = -r_new.sqrt();
        traj.energy_drift_max = traj
            .energy_drift_max
            .max(drift(model.energy(y[0], v), f0, scale));
        let hit_sample = landing.is_some();
        if hit_sample {
            next_sample += 1;
        }
        let done = r_new < threshold;
        if sample_times.is_none() || hit_sample || done {
            traj.states.push(State { t, u: y[0], v });
        }
        if done {
            traj.terminal = Terminal::TurningPointReached;
            return Ok(traj);
        }
        if landing.is_none() || h_try >= h {
            h = next_step(h_try, norm);
        }
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TurningPoint {
    /// Position where the backward-time speed vanishes, m.
    pub v_star: f64,
    /// a/v − b/(L−v) + C at `v_star`.
    pub residual: f64,
}

/// Solve a(L−v) − bv + Cv(L−v) = 0 for its unique root in (0, L).
///
/// Works in x = v/L, where the equation reads
/// κx² − (κ − 1 − β)x − 1 = 0 with κ = CL/a and β = b/a.
pub fn turning_point(d: &DipoleDerived, l: f64) -> Result<TurningPoint> {
    if !(d.a > 0.0 && d.b >= 0.0) || !(d.b + d.c.abs() > 0.0) || !(l > 0.0) {
        return Err(Error::Validation(format!(
            "degenerate turning-point problem: a = {}, b = {}, C = {}, L = {l}",
            d.a, d.b, d.c
        )));
    }
    let beta = d.b / d.a;
    let kappa = d.c * l / d.a;
    let g = |x: f64| 1.0 - (1.0 + beta) * x + kappa * x * (1.0 - x);

    let x = if kappa == 0.0 {
        1.0 / (1.0 + beta)
    } else {
        let p = 1.0 + beta - kappa;
        let disc = p * p + 4.0 * kappa;
        if disc < 0.0 {
            return Err(Error::Internal(format!("negative discriminant {disc}")));
        }
        let q = -0.5 * (p + p.signum() * disc.sqrt());
        let candidates = [q / kappa, -1.0 / q];
        let mut inside = candidates
            .into_iter()
            .filter(|x| x.is_finite() && *x > 0.0 && *x < 1.0);
        let Some(mut x) = inside.next() else {
            return Err(Error::Domain(format!(
                "no turning point in (0, L) for b = {}, C = {}",
                d.b, d.c
            )));
        };
        // two Newton corrections on the quadratic
        for _ in 0..2 {
            let dg = -(1.0 + beta) + kappa * (1.0 - 2.0 * x);
            if dg != 0.0 {
                let nx = x - g(x) / dg;
                if nx > 0.0 && nx < 1.0 {
                    x = nx;
                }
            }
        }
        x
    };
    let v_star = x * l;
    if !(v_star > 0.0 && v_star < l) {
        return Err(Error::Domain(format!(
            "turning point {v_star} outside (0, L)"
        )));
    }
    Ok(TurningPoint {
        v_star,
        residual: d.speed_sq_at(l, v_star),
    })
}

/// Positions a past trajectory can never have occupied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForbiddenZone {
    Interval {
        lower: f64,
        upper: f64,
    },
    /// No turning point below L.
    Empty,
}

pub fn forbidden_zone(d: &DipoleDerived, l: f64) -> Result<ForbiddenZone> {
    if d.b == 0.0 && (d.c >= 0.0 || d.a / -d.c >= l) {
        return Ok(ForbiddenZone::Empty);
    }
    let tp = turning_point(d, l)?;
    Ok(ForbiddenZone::Interval {
        lower: tp.v_star,
        upper: l,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsolutionVerdict {
    /// Collapse time with the repeller.
    pub t_with_repeller: f64,
    /// Collapse time of the attractor-only problem with W = U.
    pub t_without_repeller: f64,
    /// max over samples of (u − w)⁺/U.
    pub max_violation: f64,
    pub samples: usize,
    /// No violation beyond tolerance and T_u ≤ T_w.
    pub ordered: bool,
}

pub const SUBSOLUTION_SAMPLES: usize = 256;

/// Integrate the dipole and the attractor-only problems on a shared time
/// grid and check that the dipole trajectory never leads.
pub fn compare_subsolution(s: &DipoleScenario, tol: f64) -> Result<SubsolutionVerdict> {
    let d = s.derive();
    if !d.comparison_applies {
        return Err(Error::Regime(format!(
            "comparison requires v0^2 - a/U < 0, got {}",
            d.speed_sq - d.a / s.distance()
        )));
    }
    let bare = s.with_repeller_mass(0.0)?;
    let probe = integrate_forward(s, DEFAULT_EPSILON_STOP, tol)?;
    let t_stop = probe.last().t;
    let grid: Vec<f64> = (0..SUBSOLUTION_SAMPLES)
        .map(|k| t_stop * k as f64 / SUBSOLUTION_SAMPLES as f64)
        .collect();
    let opts = ForwardOptions {
        tol,
        sample_times: Some(grid.clone()),
        ..Default::default()
    };
    let with = integrate_forward_with(s, &opts)?;
    let without = integrate_forward_with(&bare, &opts)?;
    let (t_u, t_w) = (with.collapse_time()?.t, without.collapse_time()?.t);

    let at = |traj: &Trajectory, t: f64| traj.states.iter().find(|st| st.t == t).map(|st| st.u);
    let u0 = s.distance();
    let mut max_violation: f64 = 0.0;
    let mut samples = 0;
    for &t in &grid {
        let (Some(u), Some(w)) = (at(&with, t), at(&without, t)) else {
            return Err(Error::Numerical(format!("sample at t = {t} missing")));
        };
        max_violation = max_violation.max((u - w).max(0.0) / u0);
        samples += 1;
    }
    Ok(SubsolutionVerdict {
        t_with_repeller: t_u,
        t_without_repeller: t_w,
        max_violation,
        samples,
        ordered: max_violation <= tol && t_u <= t_w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::collapse_time_attractor;
    use crate::quadrature::{collapse_time_dipole, DEFAULT_TOL};

    const G: f64 = 6.7e-11;

    fn reference(ratio: f64) -> DipoleScenario {
        DipoleScenario::new(1.6e47, ratio * 1.6e47, 1.4e25, 6.15e24, -6.3e5, G).unwrap()
    }

    /// Bisection on a/v − b/(L−v) + C, which decreases on (0, L).
    fn bisect_turning_point(d: &DipoleDerived, l: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, l);
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if d.speed_sq_at(l, mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn remainder_limits() {
        // at rest: (π/2)·r^{3/2}/√a
        let (a, r) = (2.0, 3.0);
        let rest = free_fall_remainder(a, r, 0.0).unwrap();
        let expected = std::f64::consts::FRAC_PI_2 * r * r.sqrt() / a.sqrt();
        assert!((rest / expected - 1.0).abs() < 1e-10);
        // parabolic: (2/3)·r^{3/2}/√a
        let par = free_fall_remainder(a, r, -(a / r).sqrt()).unwrap();
        assert!((par / (2.0 / 3.0 * r * r.sqrt() / a.sqrt()) - 1.0).abs() < 1e-14);
        // series and quadrature branches meet at |κ| = 0.5
        let v = |k: f64| -((1.0 + k) * a / r).sqrt();
        let lo = free_fall_remainder(a, r, v(0.5)).unwrap();
        let hi = free_fall_remainder(a, r, v(0.5 + 1e-12)).unwrap();
        assert!((lo / hi - 1.0).abs() < 1e-11);
    }

    #[test]
    fn forward_matches_closed_form_without_repeller() {
        let s = reference(0.0);
        let traj = integrate_forward(&s, DEFAULT_EPSILON_STOP, DEFAULT_ODE_TOL).unwrap();
        assert_eq!(traj.terminal, Terminal::CollapsedAtEpsilon);
        let exact = collapse_time_attractor(&s.without_repeller().derive(), s.distance())
            .unwrap()
            .t;
        let t = traj.collapse_time_estimate.unwrap();
        assert!((t / exact - 1.0).abs() < 1e-6, "{t} vs {exact}");
    }

    #[test]
    fn forward_matches_quadrature_with_repeller() {
        let s = reference(1.0);
        let traj = integrate_forward(&s, DEFAULT_EPSILON_STOP, DEFAULT_ODE_TOL).unwrap();
        let q = collapse_time_dipole(&s.derive(), s.separation(), s.distance(), DEFAULT_TOL)
            .unwrap()
            .t;
        let t = traj.collapse_time_estimate.unwrap();
        assert!((t / q - 1.0).abs() < 1e-6, "{t} vs {q}");
    }

    #[test]
    fn forward_trajectory_invariants() {
        let s = reference(1.0);
        let traj = integrate_forward(&s, 1e-3, DEFAULT_ODE_TOL).unwrap();
        assert!(
            traj.energy_drift_max <= 1e-8,
            "drift {}",
            traj.energy_drift_max
        );
        for w in traj.states.windows(2) {
            assert!(w[1].t > w[0].t);
            assert!(w[1].u < w[0].u);
        }
        assert!(traj.states[1..].iter().all(|st| st.v < s.velocity()));
        assert_eq!(traj.last().u, 1e-3 * s.distance());
    }

    #[test]
    fn zero_length_request() {
        let s = reference(1.0);
        let traj = integrate_forward_with(
            &s,
            &ForwardOptions {
                t_max: Some(0.0),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(traj.states.len(), 1);
        assert_eq!(traj.energy_drift_max, 0.0);
        assert_eq!(traj.terminal, Terminal::TimeLimit);
        assert!(traj.collapse_time().is_err());
    }

    #[test]
    fn time_limit_lands_exactly() {
        let s = reference(1.0);
        let traj = integrate_forward_with(
            &s,
            &ForwardOptions {
                t_max: Some(1e18),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(traj.terminal, Terminal::TimeLimit);
        assert_eq!(traj.last().t, 1e18);
    }

    #[test]
    fn sampled_run_hits_every_sample() {
        let s = reference(1.0);
        let times: Vec<f64> = (0..50).map(|k| k as f64 * 6e16).collect();
        let traj = integrate_forward_with(
            &s,
            &ForwardOptions {
                sample_times: Some(times.clone()),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(traj.states.len(), times.len() + 1);
        for (st, &t) in traj.states.iter().zip(&times) {
            assert_eq!(st.t, t);
        }
        let full = integrate_forward(&s, DEFAULT_EPSILON_STOP, DEFAULT_ODE_TOL).unwrap();
        let (a, b) = (
            traj.collapse_time_estimate.unwrap(),
            full.collapse_time_estimate.unwrap(),
        );
        assert!((a / b - 1.0).abs() < 1e-8);
    }

    #[test]
    fn epsilon_robustness() {
        let s = reference(1.0);
        let t1 = integrate_forward(&s, 1e-6, DEFAULT_ODE_TOL)
            .unwrap()
            .collapse_time_estimate
            .unwrap();
        let t2 = integrate_forward(&s, 5e-7, DEFAULT_ODE_TOL)
            .unwrap()
            .collapse_time_estimate
            .unwrap();
        assert!((t1 / t2 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn bad_options() {
        let s = reference(1.0);
        assert!(matches!(
            integrate_forward(&s, 0.5, 1e-10),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            integrate_forward(&s, 1e-6, 0.0),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn step_budget_gives_partial_trajectory() {
        let s = reference(1.0);
        let traj = integrate_forward_with(
            &s,
            &ForwardOptions {
                max_steps: 5,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(traj.terminal, Terminal::StepLimit);
        assert_eq!(traj.states.len(), 6);
        assert!(traj.collapse_time().is_err());
    }

    #[test]
    fn turning_point_symmetric_case() {
        let d = DipoleDerived {
            a: 3.0,
            b: 3.0,
            c: 0.0,
            f: 0.0,
            speed_sq: 0.0,
            comparison_applies: false,
        };
        let tp = turning_point(&d, 7.0).unwrap();
        assert_eq!(tp.v_star, 3.5);
        assert_eq!(
            forbidden_zone(&d, 7.0).unwrap(),
            ForbiddenZone::Interval {
                lower: 3.5,
                upper: 7.0
            }
        );
    }

    #[test]
    fn turning_point_without_repeller_is_apoapsis() {
        let d = DipoleDerived {
            a: 2.0,
            b: 0.0,
            c: -1.0,
            f: -0.5,
            speed_sq: 0.0,
            comparison_applies: false,
        };
        let tp = turning_point(&d, 10.0).unwrap();
        assert!((tp.v_star - 2.0).abs() < 1e-15);
        let unbound = DipoleDerived { c: 0.5, ..d };
        assert_eq!(
            forbidden_zone(&unbound, 10.0).unwrap(),
            ForbiddenZone::Empty
        );
        assert!(turning_point(&unbound, 10.0).is_err());
        let far = DipoleDerived { c: -0.1, ..d };
        assert_eq!(forbidden_zone(&far, 10.0).unwrap(), ForbiddenZone::Empty);
    }

    #[test]
    fn turning_point_reference_matches_bisection() {
        let s = reference(1.0);
        let d = s.derive();
        let l = s.separation();
        let tp = turning_point(&d, l).unwrap();
        let oracle = bisect_turning_point(&d, l);
        assert!((tp.v_star / oracle - 1.0).abs() < 1e-10);
        assert!(tp.residual.abs() <= 1e-9 * d.a / tp.v_star);
        assert!(tp.v_star > s.distance() && tp.v_star < l);
    }

    #[test]
    fn forbidden_zone_shrinks_with_energy() {
        let base = reference(1.0).derive();
        let l = 1.4e25;
        let mut prev = f64::INFINITY;
        for c in [-2e12, -1e12, 0.0, 1e12, 5e12] {
            let d = DipoleDerived { c, ..base };
            let ForbiddenZone::Interval { lower, upper } = forbidden_zone(&d, l).unwrap() else {
                panic!("expected an interval")
            };
            let width = upper - lower;
            assert!(width < prev);
            prev = width;
        }
    }

    #[test]
    fn backward_run_approaches_turning_point() {
        let s = reference(1.0);
        let tp = turning_point(&s.derive(), s.separation()).unwrap();
        let traj = integrate_backward(&s, 1e-10).unwrap();
        assert_eq!(traj.terminal, Terminal::TurningPointReached);
        assert!(traj.states.iter().all(|st| st.u < tp.v_star));
        for w in traj.states.windows(2) {
            assert!(w[1].t > w[0].t && w[1].u > w[0].u);
        }
        let last = traj.last();
        assert!((last.u / tp.v_star - 1.0).abs() < 1e-6);
        assert!(last.v.abs() < 1e-3 * s.velocity().abs());
    }

    #[test]
    fn backward_from_rest_is_already_turning() {
        let s = reference(1.0).with_velocity(0.0).unwrap();
        let traj = integrate_backward(&s, 1e-10).unwrap();
        assert_eq!(traj.states.len(), 1);
        assert_eq!(traj.terminal, Terminal::TurningPointReached);
    }

    #[test]
    fn subsolution_identity_and_ordering() {
        let v = compare_subsolution(&reference(0.0), DEFAULT_ODE_TOL).unwrap();
        assert_eq!(v.max_violation, 0.0);
        assert_eq!(v.t_with_repeller, v.t_without_repeller);
        assert!(v.ordered);

        let v = compare_subsolution(&reference(1.0), DEFAULT_ODE_TOL).unwrap();
        assert!(v.ordered);
        assert!(v.t_with_repeller < v.t_without_repeller);
        assert_eq!(v.samples, SUBSOLUTION_SAMPLES);

        let v = compare_subsolution(&reference(1e-3), DEFAULT_ODE_TOL).unwrap();
        assert!((v.t_with_repeller / v.t_without_repeller - 1.0).abs() < 1e-3);
    }

    #[test]
    fn subsolution_precondition() {
        // faster than escape from the attractor alone
        let s = reference(1.0).with_velocity(-3e6).unwrap();
        assert!(matches!(
            compare_subsolution(&s, DEFAULT_ODE_TOL),
            Err(Error::Regime(_))
        ));
    }
}
