//! The Ermakov-Pinney equation `ẍ + Φ(t)x = G(t)/x³`: the closed-form
//! superposition over a fundamental pair, residual checks, and the classical
//! invariants (Ermakov, Lewis, Lorentz) with their conservation audits.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::TimeFunction;
use crate::ode::{Curve, CurvePoint};
use crate::oscillator::OscillatorBasis;
use crate::report::{self, InvariantAudit};

/// Default lower bound on `x` for anything with an `x⁻³` term.
pub const X_MIN: f64 = 1e-6;

/// Coefficients of `ẍ + Φ(t)x = G(t)/x³`. For the autonomous equation
/// `Φ = ω²` and `G = h²` are constants.
#[derive(Clone, Debug)]
pub struct EpConfig {
    pub phi: TimeFunction,
    pub g: TimeFunction,
}

impl EpConfig {
    pub fn new(phi: TimeFunction, g: TimeFunction) -> Self {
        EpConfig { phi, g }
    }

    pub fn parse(phi: &str, g: &str, domain: (f64, f64)) -> Result<Self> {
        Ok(EpConfig {
            phi: TimeFunction::parse(phi, domain)?,
            g: TimeFunction::parse(g, domain)?,
        })
    }

    /// `ẍ + Φx − G/x³` at one point of a curve.
    pub fn defect(&self, t: f64, p: &CurvePoint) -> Result<f64> {
        if p.x < X_MIN {
            return Err(Error::Domain(format!(
                "x = {} below guard threshold at t = {t}",
                p.x
            )));
        }
        Ok(p.ddx + self.phi.value(t)? * p.x - self.g.value(t)? / p.x.powi(3))
    }
}

/// How the quadratic-form discriminant is tied to `h²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum WronskianPower {
    /// `h² = (AC − B²) W`
    Linear,
    /// `h² = (AC − B²) W²`, which is what substitution confirms.
    Squared,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PinneyParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl PinneyParams {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let p = PinneyParams { a, b, c };
        if !(a > 0.0 && p.discriminant() > 0.0) {
            return Err(Error::Invalid(format!(
                "(A, B, C) = ({a}, {b}, {c}) is not positive definite"
            )));
        }
        Ok(p)
    }

    /// `AC − B²`
    pub fn discriminant(&self) -> f64 {
        self.a * self.c - self.b * self.b
    }

    pub fn h2(&self, wronskian: f64, power: WronskianPower) -> f64 {
        match power {
            WronskianPower::Linear => self.discriminant() * wronskian,
            WronskianPower::Squared => self.discriminant() * wronskian * wronskian,
        }
    }
}

/// `x(t) = √(A u² + 2B uv + C v²)` over an oscillator basis.
#[derive(Clone, Debug)]
pub struct PinneyCurve {
    basis: OscillatorBasis,
    params: PinneyParams,
}

impl PinneyCurve {
    pub fn params(&self) -> PinneyParams {
        self.params
    }

    pub fn basis(&self) -> &OscillatorBasis {
        &self.basis
    }

    /// `h²` under the squared-Wronskian normalization.
    pub fn h2(&self) -> f64 {
        self.params.h2(self.basis.w(), WronskianPower::Squared)
    }
}

impl Curve for PinneyCurve {
    fn point(&self, t: f64) -> Result<CurvePoint> {
        let PinneyParams { a, b, c } = self.params;
        let q = self.basis.quadratic_jet(a, b, c, t)?;
        if q[0] <= 0.0 {
            return Err(Error::Domain(format!(
                "quadratic form non-positive at t = {t}"
            )));
        }
        let x = q[0].sqrt();
        let dx = q[1] / (2.0 * x);
        // q̈ = 2ẋ² + 2xẍ
        let ddx = (q[2] - 2.0 * dx * dx) / (2.0 * x);
        Ok(CurvePoint { x, dx, ddx })
    }

    fn span(&self) -> (f64, f64) {
        self.basis.interval()
    }
}

/// Pinney's superposition and the `h²` it solves for.
pub fn pinney_solution(b: &OscillatorBasis, a: f64, bb: f64, c: f64) -> Result<(PinneyCurve, f64)> {
    if b.w() == 0.0 {
        return Err(Error::Degenerate("basis has zero Wronskian".into()));
    }
    let params = PinneyParams::new(a, bb, c)?;
    let curve = PinneyCurve {
        basis: b.clone(),
        params,
    };
    let h2 = curve.h2();
    Ok((curve, h2))
}

/// `max |ẍ + Φx − G/x³|` over `grid`.
pub fn ep_residual(cfg: &EpConfig, x: &dyn Curve, grid: &[f64]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut worst: f64 = 0.0;
    for &t in grid {
        worst = worst.max(cfg.defect(t, &x.point(t)?)?.abs());
    }
    Ok(worst)
}

/// `½[(ẋy − xẏ)² + h²(y/x)²]`, constant when `x` solves the Ermakov-Pinney
/// equation and `y` the linear oscillator with the same `Φ`.
pub fn ermakov_invariant(x: &dyn Curve, y: &dyn Curve, h2: f64, t: f64) -> Result<f64> {
    let (xp, yp) = (x.point(t)?, y.point(t)?);
    if xp.x == 0.0 {
        return Err(Error::Domain(format!("x vanishes at t = {t}")));
    }
    let cross = xp.dx * yp.x - xp.x * yp.dx;
    let ratio = yp.x / xp.x;
    Ok(0.5 * (cross * cross + h2 * ratio * ratio))
}

/// Oscillator phase-space point paired with an auxiliary amplitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LewisState {
    pub q: f64,
    pub p: f64,
    pub rho: f64,
    pub rho_dot: f64,
}

/// `½[(ρp − ρ̇q)² + (q/ρ)²]`.
pub fn lewis_invariant(st: &LewisState) -> Result<f64> {
    if !(st.rho > 0.0) {
        return Err(Error::Domain(format!(
            "auxiliary amplitude ρ = {} must be positive",
            st.rho
        )));
    }
    let a = st.rho * st.p - st.rho_dot * st.q;
    let b = st.q / st.rho;
    Ok(0.5 * (a * a + b * b))
}

/// `(p² + ω²q²)/(2ω)`.
pub fn lorentz_adiabatic(omega: f64, q: f64, p: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!(
            "frequency ω = {omega} must be positive"
        )));
    }
    Ok((p * p + omega * omega * q * q) / (2.0 * omega))
}

/// `½ẋ² + ½Φx² + h²/(2x²)` for constant coefficients.
pub fn autonomous_energy(phi: f64, h2: f64, p: &CurvePoint) -> f64 {
    0.5 * p.dx * p.dx + 0.5 * phi * p.x * p.x + h2 / (2.0 * p.x * p.x)
}

pub fn ermakov_audit(
    x: &dyn Curve,
    y: &dyn Curve,
    h2: f64,
    interval: (f64, f64),
) -> Result<InvariantAudit> {
    report::audit("ermakov", interval, |t| ermakov_invariant(x, y, h2, t))
}

/// Lewis invariant along `(q, q̇)` with amplitude `rho`.
pub fn lewis_audit(q: &dyn Curve, rho: &dyn Curve, interval: (f64, f64)) -> Result<InvariantAudit> {
    report::audit("lewis", interval, |t| {
        let (qp, rp) = (q.point(t)?, rho.point(t)?);
        lewis_invariant(&LewisState {
            q: qp.x,
            p: qp.dx,
            rho: rp.x,
            rho_dot: rp.dx,
        })
    })
}

/// Lorentz quantity along `(q, q̇)` with `ω = √(ω²(t))`.
pub fn lorentz_audit(
    q: &dyn Curve,
    omega2: &TimeFunction,
    interval: (f64, f64),
) -> Result<InvariantAudit> {
    report::audit("lorentz", interval, |t| {
        let qp = q.point(t)?;
        let w2 = omega2.value(t)?;
        if !(w2 > 0.0) {
            return Err(Error::Domain(format!("ω² = {w2} must be positive")));
        }
        lorentz_adiabatic(w2.sqrt(), qp.x, qp.dx)
    })
}
