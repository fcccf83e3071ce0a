//! Globally adaptive Gauss–Kronrod (7, 15) quadrature and the collapse-time
//! integrals built on it.
//!
//! The error estimate of each panel is the raw difference between the
//! 15-point Kronrod and the embedded 7-point Gauss value, without the usual
//! heuristic rescaling, so it bounds the error of the lower-order rule.
//!
//! Endpoints that behave like `(x - lo)^{±1/2}` or `(hi - x)^{±1/2}` can be
//! declared; the integrator then substitutes `x = lo + s²` (or `x = hi - s²`)
//! on that side, which turns both kinds of behavior into smooth integrands.

use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::closed_form::{CollapseTime, Diagnostics, Method};
use crate::error::{Error, Result};
use crate::scenario::{AttractorDerived, DipoleDerived};

/// Default relative tolerance for the collapse-time integrals.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default integrand evaluation budget.
pub const DEFAULT_MAX_EVALUATIONS: usize = 1_000_000;

// Kronrod abscissae on [0, 1); odd indices are the Gauss-7 nodes.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Behavior of the integrand at an endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Endpoint {
    #[default]
    Regular,
    /// `|x - endpoint|^{±1/2}` behavior; handled by a square-root substitution.
    SquareRoot,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub rel_tol: f64,
    pub max_evaluations: usize,
    pub lower: Endpoint,
    pub upper: Endpoint,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            rel_tol: DEFAULT_TOL,
            max_evaluations: DEFAULT_MAX_EVALUATIONS,
            lower: Endpoint::Regular,
            upper: Endpoint::Regular,
        }
    }
}

impl QuadratureOptions {
    pub fn with_tol(rel_tol: f64) -> Self {
        QuadratureOptions {
            rel_tol,
            ..Default::default()
        }
    }

    pub fn singular_lower(mut self) -> Self {
        self.lower = Endpoint::SquareRoot;
        self
    }

    pub fn singular_upper(mut self) -> Self {
        self.upper = Endpoint::SquareRoot;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
    pub intervals: usize,
    pub converged: bool,
}

/// Variable change applied to one piece of the original interval.
#[derive(Debug, Clone, Copy)]
enum Piece {
    Direct,
    /// x = origin + s²
    FromLower(f64),
    /// x = origin − s²
    FromUpper(f64),
}

impl Piece {
    #[inline]
    fn eval<F: Fn(f64) -> f64>(self, f: &F, s: f64) -> f64 {
        match self {
            Piece::Direct => f(s),
            Piece::FromLower(o) => 2.0 * s * f(o + s * s),
            Piece::FromUpper(o) => 2.0 * s * f(o - s * s),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    piece: Piece,
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, piece: Piece, a: f64, b: f64) -> Result<Panel> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = piece.eval(f, center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut finite = fc.is_finite();
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = piece.eval(f, center - dx) + piece.eval(f, center + dx);
        finite &= pair.is_finite();
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    if !finite {
        return Err(Error::Numerical(format!(
            "integrand not finite on [{a}, {b}]"
        )));
    }
    Ok(Panel {
        piece,
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    })
}

/// Integrate `f` over `[lo, hi]` to relative tolerance `opts.rel_tol`.
///
/// Running out of budget is not an error: the result comes back with
/// `converged == false` and the current error estimate.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    opts: &QuadratureOptions,
) -> Result<QuadratureResult> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Domain(format!("invalid interval [{lo}, {hi}]")));
    }
    if !(opts.rel_tol > 0.0) {
        return Err(Error::Usage(format!(
            "tolerance must be positive, got {}",
            opts.rel_tol
        )));
    }

    let pieces: Vec<(Piece, f64, f64)> = match (opts.lower, opts.upper) {
        (Endpoint::Regular, Endpoint::Regular) => vec![(Piece::Direct, lo, hi)],
        (Endpoint::SquareRoot, Endpoint::Regular) => {
            vec![(Piece::FromLower(lo), 0.0, (hi - lo).sqrt())]
        }
        (Endpoint::Regular, Endpoint::SquareRoot) => {
            vec![(Piece::FromUpper(hi), 0.0, (hi - lo).sqrt())]
        }
        (Endpoint::SquareRoot, Endpoint::SquareRoot) => {
            let mid = 0.5 * (lo + hi);
            vec![
                (Piece::FromLower(lo), 0.0, (mid - lo).sqrt()),
                (Piece::FromUpper(hi), 0.0, (hi - mid).sqrt()),
            ]
        }
    };

    let mut heap = BinaryHeap::new();
    // panels too narrow to split further
    let mut frozen: Vec<Panel> = Vec::new();
    let mut evaluations = 0;
    for (piece, a, b) in pieces {
        heap.push(gauss_kronrod(&f, piece, a, b)?);
        evaluations += 15;
    }

    let totals = |heap: &BinaryHeap<Panel>, frozen: &[Panel]| {
        heap.iter()
            .chain(frozen.iter())
            .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error))
    };
    let (mut value, mut error) = totals(&heap, &frozen);
    let mut iterations = 0usize;

    loop {
        if error <= opts.rel_tol * value.abs() || error == 0.0 {
            break;
        }
        if evaluations + 30 > opts.max_evaluations {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            frozen.push(worst);
            continue;
        }
        let left = gauss_kronrod(&f, worst.piece, worst.a, mid)?;
        let right = gauss_kronrod(&f, worst.piece, mid, worst.b)?;
        evaluations += 30;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        iterations += 1;
        if iterations.is_multiple_of(64) {
            (value, error) = totals(&heap, &frozen);
        }
    }
    let (value, error) = totals(&heap, &frozen);

    Ok(QuadratureResult {
        value,
        abs_error_estimate: error,
        evaluations,
        intervals: heap.len() + frozen.len(),
        converged: error <= opts.rel_tol * value.abs() || error == 0.0,
    })
}

fn into_collapse_time(r: QuadratureResult, what: &str) -> Result<CollapseTime> {
    if !r.converged {
        return Err(Error::Numerical(format!(
            "{what} quadrature did not converge: value {} +/- {} after {} evaluations",
            r.value, r.abs_error_estimate, r.evaluations
        )));
    }
    CollapseTime::new(
        r.value,
        Method::Quadrature,
        Diagnostics::Quadrature {
            abs_error: r.abs_error_estimate,
            evaluations: r.evaluations,
        },
    )
}

/// Attractor-only collapse time from its defining integral
/// T = ∫₀^W √w / √(K − βw) dw. Valid for any sign of β.
pub fn collapse_time_attractor_integral(
    d: &AttractorDerived,
    w: f64,
    tol: f64,
) -> Result<CollapseTime> {
    let (k, beta) = (d.k, d.beta);
    if k - beta * w < -1e-12 * k {
        return Err(Error::Domain(
            "radicand K - beta*W negative at the start".into(),
        ));
    }
    let f = |x: f64| x.sqrt() / (k - beta * x).max(0.0).sqrt();
    let opts = QuadratureOptions::with_tol(tol)
        .singular_lower()
        .singular_upper();
    into_collapse_time(integrate_adaptive(f, 0.0, w, &opts)?, "attractor")
}

/// Repeller-only collapse time from T = ∫₀^U √(L−u) / √(C(L−u) − b) du.
pub fn collapse_time_repeller_integral(
    b: f64,
    c: f64,
    l: f64,
    u: f64,
    tol: f64,
) -> Result<CollapseTime> {
    if !(u > 0.0 && u < l) {
        return Err(Error::Validation(format!(
            "need 0 < U < L, got U = {u}, L = {l}"
        )));
    }
    let f = |x: f64| {
        let r = l - x;
        r.sqrt() / (c * r - b).max(0.0).sqrt()
    };
    let opts = QuadratureOptions::with_tol(tol).singular_upper();
    into_collapse_time(integrate_adaptive(f, 0.0, u, &opts)?, "repeller-only")
}

/// Full dipole collapse time,
/// T = ∫₀^U √(u(L−u)) du / √(C·u(L−u) − (a+b)·u + a·L).
///
/// The radicand is evaluated relative to its value at the start,
/// R(U) = v0²·U(L−U), as R(u) = R(U) + (U−u)·[(a+b) − C(L−U−u)].
pub fn collapse_time_dipole(d: &DipoleDerived, l: f64, u: f64, tol: f64) -> Result<CollapseTime> {
    if !(u > 0.0 && u < l) {
        return Err(Error::Validation(format!(
            "need 0 < U < L, got U = {u}, L = {l}"
        )));
    }
    let r_start = d.speed_sq * u * (l - u);
    let sum = d.a + d.b;
    let c = d.c;
    let bad = Cell::new(None);
    let f = |x: f64| {
        let r = r_start + (u - x) * (sum - c * (l - u - x));
        if r <= 0.0 {
            if x < u && bad.get().is_none() {
                bad.set(Some(x));
            }
            return 0.0;
        }
        (x * (l - x)).sqrt() / r.sqrt()
    };
    let opts = QuadratureOptions::with_tol(tol)
        .singular_lower()
        .singular_upper();
    let r = integrate_adaptive(f, 0.0, u, &opts)?;
    if let Some(x) = bad.get() {
        return Err(Error::Domain(format!(
            "radicand non-positive at u = {x} inside (0, U): turning point before collapse"
        )));
    }
    into_collapse_time(r, "dipole")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::{
        collapse_time_attractor, collapse_time_repeller_only, crude_upper_bound,
    };
    use crate::scenario::DipoleScenario;

    const G: f64 = 6.7e-11;

    #[test]
    fn kronrod_rule_is_exact_for_polynomials() {
        // weights sum to the interval length; degree 22 exact, Gauss degree 13
        let sum_k: f64 = WGK[7] + 2.0 * WGK[..7].iter().sum::<f64>();
        let sum_g: f64 = WG[3] + 2.0 * WG[..3].iter().sum::<f64>();
        assert!((sum_k - 2.0).abs() < 1e-15);
        assert!((sum_g - 2.0).abs() < 1e-15);
        for deg in [2, 10, 13, 22] {
            let p = gauss_kronrod(&|x: f64| x.powi(deg), Piece::Direct, 0.0, 1.0).unwrap();
            assert!(
                (p.value - 1.0 / (deg + 1) as f64).abs() < 1e-15,
                "degree {deg}"
            );
            if deg <= 13 {
                assert!(p.error < 1e-15);
            }
        }
    }

    #[test]
    fn sqrt_integrand() {
        let opts = QuadratureOptions::default().singular_lower();
        let r = integrate_adaptive(f64::sqrt, 0.0, 1.0, &opts).unwrap();
        assert!(r.converged);
        assert!((r.value - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn inverse_sqrt_endpoint() {
        let opts = QuadratureOptions::default().singular_upper();
        let r = integrate_adaptive(|u| 1.0 / (1.0 - u).sqrt(), 0.0, 1.0, &opts).unwrap();
        assert!(r.converged);
        assert!((r.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn undeclared_singularity_still_converges_or_flags() {
        let opts = QuadratureOptions {
            max_evaluations: 3000,
            ..Default::default()
        };
        // bisection toward u = 1 either runs out of budget or lands a node on the pole
        match integrate_adaptive(|u| 1.0 / (1.0 - u).sqrt(), 0.0, 1.0, &opts) {
            Ok(r) => {
                assert!(!r.converged);
                assert!(r.evaluations <= 3000);
                assert!(r.abs_error_estimate > opts.rel_tol * r.value);
            }
            Err(e) => assert!(matches!(e, Error::Numerical(_))),
        }
    }

    #[test]
    fn bad_inputs() {
        let opts = QuadratureOptions::default();
        assert!(matches!(
            integrate_adaptive(|x| x, 1.0, 1.0, &opts),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            integrate_adaptive(|x| 1.0 / x, 0.0, 1.0, &opts),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn converged_flag_respects_tolerance() {
        let opts = QuadratureOptions::with_tol(1e-12);
        let r = integrate_adaptive(|x: f64| (10.0 * x).sin().exp(), 0.0, 3.0, &opts).unwrap();
        assert!(r.converged);
        assert!(r.abs_error_estimate <= 1e-12 * r.value.abs().max(1.0));
    }

    fn reference(mstar_over_m: f64) -> DipoleScenario {
        DipoleScenario::new(1.6e47, mstar_over_m * 1.6e47, 1.4e25, 6.15e24, -6.3e5, G).unwrap()
    }

    #[test]
    fn attractor_integral_matches_closed_form() {
        let s = reference(0.0).without_repeller();
        let d = s.derive();
        let q = collapse_time_attractor_integral(&d, s.distance(), DEFAULT_TOL).unwrap();
        let c = collapse_time_attractor(&d, s.distance()).unwrap();
        assert!((q.t / c.t - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dipole_without_repeller_matches_closed_form() {
        let s = reference(0.0);
        let q =
            collapse_time_dipole(&s.derive(), s.separation(), s.distance(), DEFAULT_TOL).unwrap();
        let c = collapse_time_attractor(&s.without_repeller().derive(), s.distance()).unwrap();
        assert!((q.t / c.t - 1.0).abs() < 1e-8);
    }

    #[test]
    fn dipole_reference_value() {
        let s = reference(1.0);
        let q =
            collapse_time_dipole(&s.derive(), s.separation(), s.distance(), DEFAULT_TOL).unwrap();
        let t0 = collapse_time_attractor(&s.without_repeller().derive(), s.distance()).unwrap();
        // independently cross-checked against direct integration of the dynamics
        assert!((q.t / 3.2785e18 - 1.0).abs() < 1e-4, "{}", q.t);
        assert!(q.t < t0.t);
        assert!(q.t <= crude_upper_bound(s.distance(), s.velocity()).unwrap().t);
    }

    #[test]
    fn dipole_monotone_in_repeller_mass() {
        let times: Vec<f64> = [0.0, 1e-3, 1e-1, 1.0, 10.0]
            .iter()
            .map(|&r| {
                let s = reference(r);
                collapse_time_dipole(&s.derive(), s.separation(), s.distance(), DEFAULT_TOL)
                    .unwrap()
                    .t
            })
            .collect();
        assert!(times.windows(2).all(|w| w[1] < w[0]), "{times:?}");
    }

    #[test]
    fn dipole_below_comparison_integral() {
        let s = reference(1.0);
        let d = s.derive();
        let u = s.distance();
        let beta = d.a / u - d.speed_sq;
        let opts = QuadratureOptions::with_tol(1e-12).singular_lower();
        let bound = integrate_adaptive(|x| x.sqrt() / (d.a - beta * x).sqrt(), 0.0, u, &opts)
            .unwrap()
            .value;
        let t = collapse_time_dipole(&d, s.separation(), u, DEFAULT_TOL)
            .unwrap()
            .t;
        assert!(t < bound);
    }

    #[test]
    fn dipole_starting_at_rest() {
        let s = DipoleScenario::new(1.6e47, 1.6e47, 1.4e25, 6.15e24, 0.0, G).unwrap();
        let t = collapse_time_dipole(&s.derive(), s.separation(), s.distance(), 1e-10).unwrap();
        assert!(t.t > 0.0);
    }

    #[test]
    fn repeller_integral_matches_closed_form() {
        let (l, u, v0) = (1.4e25, 6.15e24, 6.3e5f64);
        let b = 2.0e37;
        let c = v0 * v0 + b / (l - u);
        let q = collapse_time_repeller_integral(b, c, l, u, DEFAULT_TOL).unwrap();
        let e = collapse_time_repeller_only(b, c, l, u).unwrap();
        assert!((q.t / e.t - 1.0).abs() < 1e-8);
    }
}
