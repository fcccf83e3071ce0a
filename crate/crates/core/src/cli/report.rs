//! The collapse-time report: every route to T side by side, each next to
//! the published estimate for the Shapley scenario where one exists.

use std::fmt::Write as _;

use serde::Serialize;

use crate::closed_form::{
    collapse_time_attractor, collapse_time_pi_half, collapse_time_repeller_only, crude_upper_bound,
    CollapseTime, Diagnostics,
};
use crate::dynamics::{integrate_forward, DEFAULT_EPSILON_STOP};
use crate::error::{Error, Result};
use crate::quadrature::collapse_time_dipole;
use crate::units::YEAR_S;

use super::ode_tol;
use super::scenario_file::LoadedScenario;

/// Published estimates for the Shapley scenario, seconds.
pub const PUBLISHED_CRUDE_BOUND: f64 = 1.0e19;
pub const PUBLISHED_ATTRACTOR_ONLY: f64 = 3.076e18;
pub const PUBLISHED_REPELLER_ONLY: f64 = 4.9e18;
pub const PUBLISHED_DIPOLE: f64 = 2.11e18;
/// Literal b of the repeller-only estimate, m³/s².
pub const PUBLISHED_REPELLER_B: f64 = 2.0e37;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    CrudeBound,
    AttractorExact,
    PiHalfApprox,
    RepellerOnlyLiteralB,
    RepellerOnlyFromMass,
    DipoleQuadrature,
    DipoleOde,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub kind: RowKind,
    pub label: String,
    pub seconds: Option<f64>,
    pub years: Option<f64>,
    pub published_seconds: Option<f64>,
    /// (T − published)/published.
    pub deviation: Option<f64>,
    pub diagnostics: Option<Diagnostics>,
    /// Why the row has no value.
    pub status: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub scenario: Vec<String>,
    /// Inputs match the Shapley scenario, so published estimates apply.
    pub published_scenario: bool,
    pub rows: Vec<ReportRow>,
    /// Dipole quadrature over the attractor-only exact time; published ≈ 2/3.
    pub dipole_ratio: Option<f64>,
    /// Repeller-only (literal b) over the attractor-only exact time; published ≈ 3/2.
    pub repeller_ratio: Option<f64>,
}

impl Report {
    pub fn row(&self, kind: RowKind) -> &ReportRow {
        self.rows
            .iter()
            .find(|r| r.kind == kind)
            .expect("every row kind is present")
    }

    pub fn seconds(&self, kind: RowKind) -> Option<f64> {
        self.row(kind).seconds
    }
}

fn row(kind: RowKind, label: &str, published: Option<f64>, r: Result<CollapseTime>) -> ReportRow {
    match r {
        Ok(ct) => ReportRow {
            kind,
            label: label.to_string(),
            seconds: Some(ct.t),
            years: Some(ct.t / YEAR_S),
            published_seconds: published,
            deviation: published.map(|p| (ct.t - p) / p),
            diagnostics: Some(ct.diagnostics),
            status: None,
        },
        Err(e) => ReportRow {
            kind,
            label: label.to_string(),
            seconds: None,
            years: None,
            published_seconds: published,
            deviation: None,
            diagnostics: None,
            status: Some(e.to_string()),
        },
    }
}

fn not_applicable(why: &str) -> Result<CollapseTime> {
    Err(Error::Validation(format!("not applicable: {why}")))
}

/// Same inputs as the bundled Shapley scenario, to 10⁻⁹ relative.
fn matches_shapley(s: &LoadedScenario) -> bool {
    let Ok(reference) = super::scenario_file::parse_scenario(super::SHAPLEY_SCN) else {
        return false;
    };
    let (Some(a), Some(b)) = (&s.dipole, &reference.dipole) else {
        return false;
    };
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * y.abs();
    close(a.attractor_mass(), b.attractor_mass())
        && close(a.repeller_mass(), b.repeller_mass())
        && close(a.separation(), b.separation())
        && close(a.distance(), b.distance())
        && close(a.velocity(), b.velocity())
        && close(a.g(), b.g())
}

pub fn build_report(s: &LoadedScenario, tol: f64) -> Report {
    let published_scenario = matches_shapley(s);
    let published = |p: f64| published_scenario.then_some(p);
    let att = &s.attractor;
    let ad = att.derive();
    let w = att.distance();

    let mut rows = vec![
        row(
            RowKind::CrudeBound,
            "crude bound W/|v0|",
            published(PUBLISHED_CRUDE_BOUND),
            crude_upper_bound(w, att.velocity()),
        ),
        row(
            RowKind::AttractorExact,
            "attractor only, exact",
            published(PUBLISHED_ATTRACTOR_ONLY),
            collapse_time_attractor(&ad, w),
        ),
        row(
            RowKind::PiHalfApprox,
            "attractor only, (pi/2) W^1.5/sqrt(K)",
            None,
            collapse_time_pi_half(ad.k, w, ad.bound.then_some(ad.gamma_w)),
        ),
    ];

    let (literal, from_mass, quad, ode) = match &s.dipole {
        None => {
            let why = "no dipole_separation in scenario";
            (
                not_applicable(why),
                not_applicable(why),
                not_applicable(why),
                not_applicable(why),
            )
        }
        Some(d) => {
            let l = d.separation();
            let u = d.distance();
            let v2 = d.velocity() * d.velocity();
            let repeller_only = |b: f64| collapse_time_repeller_only(b, v2 + b / (l - u), l, u);
            let dd = d.derive();
            let from_mass = if dd.b > 0.0 {
                repeller_only(dd.b)
            } else {
                not_applicable("repeller mass is zero")
            };
            let quad = collapse_time_dipole(&dd, l, u, tol);
            let ode = integrate_forward(d, DEFAULT_EPSILON_STOP, ode_tol(tol))
                .and_then(|t| t.collapse_time());
            (repeller_only(PUBLISHED_REPELLER_B), from_mass, quad, ode)
        }
    };
    rows.push(row(
        RowKind::RepellerOnlyLiteralB,
        "repeller only, b = 2e37",
        published(PUBLISHED_REPELLER_ONLY),
        literal,
    ));
    rows.push(row(
        RowKind::RepellerOnlyFromMass,
        "repeller only, b = 2GM*",
        published(PUBLISHED_REPELLER_ONLY),
        from_mass,
    ));
    rows.push(row(
        RowKind::DipoleQuadrature,
        "dipole, quadrature",
        published(PUBLISHED_DIPOLE),
        quad,
    ));
    rows.push(row(
        RowKind::DipoleOde,
        "dipole, ODE",
        published(PUBLISHED_DIPOLE),
        ode,
    ));

    let mut report = Report {
        scenario: s.echo_lines(),
        published_scenario,
        rows,
        dipole_ratio: None,
        repeller_ratio: None,
    };
    if let Some(t0) = report.seconds(RowKind::AttractorExact) {
        report.dipole_ratio = report.seconds(RowKind::DipoleQuadrature).map(|t| t / t0);
        report.repeller_ratio = report
            .seconds(RowKind::RepellerOnlyLiteralB)
            .map(|t| t / t0);
    }
    report
}

fn describe(d: &Diagnostics) -> String {
    match d {
        Diagnostics::AttractorExact { gamma_w, bracket } => {
            format!("gammaW={gamma_w:.4}, bracket={bracket:.4}")
        }
        Diagnostics::PiHalf {
            refinement_factor: Some(f),
        } => format!("exact/approx factor={f:.4}"),
        Diagnostics::PiHalf { .. } => String::new(),
        Diagnostics::CrudeBound => "upper bound".to_string(),
        Diagnostics::RepellerOnly { x_lower, x_upper } => {
            format!("x1={x_lower:.4}, x2={x_upper:.4}")
        }
        Diagnostics::Quadrature {
            abs_error,
            evaluations,
        } => format!("err={abs_error:.1e}, evals={evaluations}"),
        Diagnostics::Ode {
            steps,
            energy_drift,
            remainder,
        } => format!("steps={steps}, drift={energy_drift:.1e}, remainder={remainder:.1e} s"),
    }
}

fn opt(x: Option<f64>, fmt: impl Fn(f64) -> String) -> String {
    x.map(fmt).unwrap_or_else(|| "-".to_string())
}

pub fn render_text(r: &Report) -> String {
    let mut out = String::new();
    out.push_str("Collapse times\n");
    for line in &r.scenario {
        let _ = writeln!(out, "{line}");
    }
    let _ = writeln!(
        out,
        "\n{:<38} {:>11} {:>11} {:>11} {:>9}  diagnostics",
        "method", "T [s]", "T [yr]", "published", "dev"
    );
    for row in &r.rows {
        let detail = match (&row.diagnostics, &row.status) {
            (Some(d), _) => describe(d),
            (None, Some(s)) => s.clone(),
            (None, None) => String::new(),
        };
        let _ = writeln!(
            out,
            "{:<38} {:>11} {:>11} {:>11} {:>9}  {}",
            row.label,
            opt(row.seconds, |x| format!("{x:.3e}")),
            opt(row.years, |x| format!("{x:.3e}")),
            opt(row.published_seconds, |x| format!("{x:.3e}")),
            opt(row.deviation, |x| format!("{:+.1}%", 100.0 * x)),
            detail
        );
    }
    let _ = writeln!(
        out,
        "\ndipole / attractor-only:        {}{}",
        opt(r.dipole_ratio, |x| format!("{x:.4}")),
        if r.published_scenario {
            " (published about 2/3)"
        } else {
            ""
        }
    );
    let _ = writeln!(
        out,
        "repeller-only / attractor-only: {}{}",
        opt(r.repeller_ratio, |x| format!("{x:.4}")),
        if r.published_scenario {
            " (published about 3/2)"
        } else {
            ""
        }
    );
    if r.published_scenario {
        out.push_str(
            "published values are rounded estimates and are not reproduced exactly from these inputs\n",
        );
    }
    out
}

pub fn render_json(r: &Report) -> String {
    serde_json::to_string_pretty(r).expect("report serializes") + "\n"
}
