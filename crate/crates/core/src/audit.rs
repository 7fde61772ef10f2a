//! Discriminating checks between competing readings of the formulas the
//! workbench implements. Each entry evaluates every candidate by residual
//! and names the one that survives.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Expr, TimeFunction};
use crate::maximal3::{third_order_residual, ProductCurve, ThirdOrderConfig};
use crate::ode::{integrate, IntegrationSettings, OdeSystem};
use crate::oscillator::OscillatorBasis;
use crate::pinney::{
    ep_residual, ermakov_audit, pinney_solution, EpConfig, PinneyParams, WronskianPower,
};
use crate::reduction::{abel_reduce, AbelForm, CanonicalChart, TransformedOrbit};
use crate::report::linspace;
use crate::symmetry::{
    autonomous_family, compatible_family, default_samples, gamma_s, lie_bracket, plane_samples,
    symmetry_residual, PointSymmetry, SecondOrderOde,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reading {
    pub label: String,
    pub form: String,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub id: String,
    pub question: String,
    /// What the residual measures.
    pub metric: String,
    pub readings: Vec<Reading>,
    /// Label of the surviving reading, or `"unresolved"`.
    pub verdict: String,
    pub verdict_form: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditLedger {
    pub entries: Vec<AuditEntry>,
}

impl AuditLedger {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("ledger serializes");
        s.push('\n');
        s
    }

    pub fn entry(&self, id: &str) -> Option<&AuditEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn all_resolved(&self) -> bool {
        self.entries.iter().all(|e| e.verdict != "unresolved")
    }
}

/// A reading survives when its residual is at most `accept` while every
/// other reading is at least `reject`.
fn entry(
    id: &str,
    question: &str,
    metric: &str,
    candidates: [(&str, f64); 2],
    accept: f64,
    reject: f64,
) -> AuditEntry {
    let readings: Vec<Reading> = candidates
        .iter()
        .zip(["A", "B"])
        .map(|(&(form, residual), label)| Reading {
            label: label.to_string(),
            form: form.to_string(),
            residual,
        })
        .collect();
    let winner = readings.iter().position(|r| r.residual <= accept);
    let (verdict, verdict_form) = match winner {
        Some(i)
            if readings
                .iter()
                .enumerate()
                .all(|(j, r)| j == i || r.residual >= reject) =>
        {
            (readings[i].label.clone(), readings[i].form.clone())
        }
        _ => ("unresolved".to_string(), String::new()),
    };
    AuditEntry {
        id: id.to_string(),
        question: question.to_string(),
        metric: metric.to_string(),
        readings,
        verdict,
        verdict_form,
    }
}

fn tf(src: &str, domain: (f64, f64)) -> Result<TimeFunction> {
    TimeFunction::parse(src, domain)
}

fn wronskian_exponent() -> Result<AuditEntry> {
    let iv = (0.0, 2.0 * PI);
    let phi = tf("1", iv)?;
    let basis = OscillatorBasis::with_initial(
        &phi,
        iv,
        [1.0, 0.0],
        [0.0, 2.0],
        &IntegrationSettings::default(),
    )?;
    let (x, _) = pinney_solution(&basis, 1.0, 0.0, 1.0)?;
    let params = PinneyParams::new(1.0, 0.0, 1.0)?;
    let grid = linspace(iv.0, iv.1, 201);
    let residual = |power| -> Result<f64> {
        let g = TimeFunction::constant(params.h2(basis.w(), power), iv)?;
        ep_residual(&EpConfig::new(phi.clone(), g), &x, &grid)
    };
    Ok(entry(
        "wronskian-exponent",
        "How the discriminant of the quadratic form in a fundamental pair fixes h^2",
        "max |x'' + x - h^2/x^3| for x = sqrt(cos^2 t + 4 sin^2 t), Wronskian 2",
        [
            ("h^2 = (AC - B^2) W", residual(WronskianPower::Linear)?),
            ("h^2 = (AC - B^2) W^2", residual(WronskianPower::Squared)?),
        ],
        1e-6,
        0.1,
    ))
}

fn third_order_base() -> Result<AuditEntry> {
    let iv = (0.0, 5.0);
    let cfg = ThirdOrderConfig::new(tf("2", iv)?);
    let grid = linspace(iv.0, iv.1, 201);
    let s = IntegrationSettings::default();
    let residual = |coeff: &TimeFunction| -> Result<f64> {
        let basis = OscillatorBasis::fundamental_pair(coeff, iv, &s)?;
        third_order_residual(&cfg, &ProductCurve::over(&basis, 1.0, 0.0, 0.0), &grid)
    };
    Ok(entry(
        "third-order-base-equation",
        "Which linear oscillator has products solving w''' + 2a w' + a' w = 0",
        "max |w''' + 2a w' + a' w| for w = u^2, a = 2",
        [
            ("z'' + a z = 0", residual(&cfg.a)?),
            ("z'' + (a/2) z = 0", residual(&cfg.base_coefficient()?)?),
        ],
        1e-6,
        0.5,
    ))
}

fn exponential_orbit(sigma: f64) -> Result<(TransformedOrbit, f64)> {
    let g = tf("exp(4*t)", (0.0, 5.0))?;
    let fam = compatible_family(&g, 1.0, 1.0)?;
    let sys = OdeSystem::ermakov_pinney(fam.phi(), fam.g(), 1e-6);
    let tr = integrate(
        &sys,
        &[1.0, 0.0],
        (0.0, 5.0),
        &IntegrationSettings::default(),
    )?
    .require_complete()?;
    let chart = CanonicalChart::with_scale(&fam, sigma)?;
    Ok((chart.transform(&tr, &linspace(0.0, 5.0, 401))?, fam.omega()))
}

fn chart_time_scale() -> Result<AuditEntry> {
    let residual = |sigma| -> Result<f64> {
        let (o, omega) = exponential_orbit(sigma)?;
        o.autonomous_residual(omega)
    };
    Ok(entry(
        "chart-time-scale",
        "Scale of the canonical time T = s log G that turns the surviving symmetry into d/dT",
        "max |X'' + 2X' + (1 + M/C0^2) X - 16/X^3| on a transformed orbit, G = exp(4t), C0 = M = 1",
        [
            ("T = (3/4) log G", residual(0.75)?),
            ("T = (1/4) log G", residual(0.25)?),
        ],
        1e-6,
        0.1,
    ))
}

fn bracket_23() -> Result<AuditEntry> {
    let [g1, g2, g3] = autonomous_family(1.0)?;
    let b = lie_bracket(&g2, &g3);
    let pts = plane_samples((0.0, PI));
    let distance = |target: &dyn PointSymmetry| -> Result<f64> {
        let mut worst: f64 = 0.0;
        for &(t, x) in &pts {
            let (u, v) = b.components(t, x)?;
            let (p, q) = target.components(t, x)?;
            worst = worst.max((u + 2.0 * p).abs()).max((v + 2.0 * q).abs());
        }
        Ok(worst)
    };
    Ok(entry(
        "bracket-g2-g3",
        "Value of [G2, G3] for G1 = d/dt, G2 = sin 2Ft d/dt + Fx cos 2Ft d/dx, G3 = cos 2Ft d/dt - Fx sin 2Ft d/dx",
        "max pointwise distance between the computed bracket and the candidate, F = 1",
        [
            ("[G2, G3] = -2F G1", distance(&g1)?),
            ("[G2, G3] = -2F G3", distance(&g3)?),
        ],
        1e-10,
        0.1,
    ))
}

fn abel_form() -> Result<AuditEntry> {
    let (o, omega) = exponential_orbit(0.25)?;
    let r = |form| abel_reduce(&o, omega, form).map(|rep| rep.residual);
    Ok(entry(
        "abel-phase-form",
        "Phase-plane form of X'' + 2X' + W X = 16/X^3 with u = X, v = X', W = 1 + M/C0^2",
        "max |v dv/du + 2v + R(u)| on a transformed orbit away from v = 0",
        [
            ("v v' + 2v + W = 16/u", r(AbelForm::InverseLinear)?),
            ("v v' + 2v + W u = 16/u^3", r(AbelForm::InverseCube)?),
        ],
        1e-5,
        0.1,
    ))
}

fn compatible_coefficient() -> Result<AuditEntry> {
    let g = tf("(1+t)^4", (0.0, 1.0))?;
    let fam = compatible_family(&g, 1.0, 1.0)?;
    let gs = gamma_s(&fam)?;
    let q = fam.phi().expr().clone();
    let samples = default_samples((0.0, 1.0));
    let as_coefficient = symmetry_residual(&gs, &fam.equation(), &samples)?;
    let squared = SecondOrderOde::ermakov_pinney(&Expr::pow(q, Expr::Const(2.0)), g.expr());
    let as_frequency = symmetry_residual(&gs, &squared, &samples)?;
    Ok(entry(
        "compatibility-output",
        "Whether q = M/a^2 - (1/2)[a''/a - (1/2)(a'/a)^2] is F or F^2 in x'' + F^2 x = G/x^3",
        "symmetry residual of the surviving field, G = (1+t)^4, C0 = M = 1",
        [("q = F^2", as_coefficient), ("q = F", as_frequency)],
        1e-6,
        1e-3,
    ))
}

fn ermakov_weight() -> Result<AuditEntry> {
    let iv = (0.0, 20.0);
    let phi = tf("1", iv)?;
    let basis = OscillatorBasis::fundamental_pair(&phi, iv, &IntegrationSettings::default())?;
    let (x, h2) = pinney_solution(&basis, 4.0, 0.0, 1.0)?;
    Ok(entry(
        "ermakov-weight",
        "Weight of the (y/x)^2 term in the first integral pairing x'' + F^2 x = h^2/x^3 with y'' + F^2 y = 0",
        "relative drift over [0, 20] for x = sqrt(4 cos^2 t + sin^2 t), h^2 = 4, y = sin t",
        [
            ("I = (1/2)[(x'y - xy')^2 + (y/x)^2]", ermakov_audit(&x, basis.v(), 1.0, iv)?.drift),
            ("I = (1/2)[(x'y - xy')^2 + h^2 (y/x)^2]", ermakov_audit(&x, basis.v(), h2, iv)?.drift),
        ],
        1e-6,
        1e-2,
    ))
}

type Check = fn() -> Result<AuditEntry>;

const CHECKS: [Check; 7] = [
    wronskian_exponent,
    third_order_base,
    chart_time_scale,
    bracket_23,
    abel_form,
    compatible_coefficient,
    ermakov_weight,
];

/// Runs every discriminating check. The checks are independent and run on
/// separate threads; entry order is fixed.
pub fn audit_all() -> Result<AuditLedger> {
    let results: Vec<Result<AuditEntry>> = std::thread::scope(|scope| {
        let handles: Vec<_> = CHECKS.iter().map(|c| scope.spawn(c)).collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::Invalid("audit check panicked".into())))
            })
            .collect()
    });
    Ok(AuditLedger {
        entries: results.into_iter().collect::<Result<_>>()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_entry_resolves() {
        let ledger = audit_all().unwrap();
        assert_eq!(ledger.entries.len(), 7);
        for e in &ledger.entries {
            assert_ne!(e.verdict, "unresolved", "{e:?}");
        }
        let expect = [
            ("wronskian-exponent", "B"),
            ("third-order-base-equation", "B"),
            ("chart-time-scale", "B"),
            ("bracket-g2-g3", "A"),
            ("abel-phase-form", "B"),
            ("compatibility-output", "A"),
            ("ermakov-weight", "B"),
        ];
        for (id, v) in expect {
            assert_eq!(ledger.entry(id).unwrap().verdict, v, "{id}");
        }
    }

    #[test]
    fn json_is_deterministic() {
        assert_eq!(
            audit_all().unwrap().to_json(),
            audit_all().unwrap().to_json()
        );
    }

    #[test]
    fn ambiguous_candidates_stay_unresolved() {
        let e = entry("x", "q", "m", [("a", 1e-9), ("b", 1e-8)], 1e-6, 0.1);
        assert_eq!(e.verdict, "unresolved");
        let e = entry("x", "q", "m", [("a", 0.5), ("b", 1e-8)], 1e-6, 0.1);
        assert_eq!(e.verdict, "B");
    }
}
