//! Lie point symmetries `τ(t,x)∂t + ξ(t,x)∂x` of scalar equations
//! `ẍ = w(t, x, ẋ)`, checked through the second-prolongation condition.

mod algebra;
mod families;

pub use algebra::{
    bracket_at, fit_onto, jacobi_residual, lie_bracket, structure_constants, KillingSignature,
    StructureConstants,
};
pub use families::{
    autonomous_family, compatible_family, gamma_s, nonautonomous_f_family, CompatibleFamily,
    SymmetryAnsatz,
};

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse_with_vars, Expr, Var};
use crate::oscillator::Jet;
use crate::report::linspace;

/// A scalar field of `(t, x)` with partial derivatives through second order.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Partials {
    pub v: f64,
    pub t: f64,
    pub x: f64,
    pub tt: f64,
    pub tx: f64,
    pub xx: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FieldJet {
    pub tau: Partials,
    pub xi: Partials,
}

pub trait PointSymmetry: Send + Sync {
    fn jet(&self, t: f64, x: f64) -> Result<FieldJet>;

    /// Human-readable form used in reports.
    fn describe(&self) -> String;

    /// Components `(τ, ξ)` at a point.
    fn components(&self, t: f64, x: f64) -> Result<(f64, f64)> {
        let j = self.jet(t, x)?;
        Ok((j.tau.v, j.xi.v))
    }
}

#[derive(Clone, Debug)]
struct ScalarField {
    // value, ∂t, ∂x, ∂tt, ∂tx, ∂xx
    parts: [Expr; 6],
}

impl ScalarField {
    fn new(e: Expr) -> Self {
        let dt = e.diff(Var::T);
        let dx = e.diff(Var::X);
        let dtt = dt.diff(Var::T);
        let dtx = dt.diff(Var::X);
        let dxx = dx.diff(Var::X);
        ScalarField {
            parts: [e, dt, dx, dtt, dtx, dxx],
        }
    }

    fn eval(&self, t: f64, x: f64) -> Result<Partials> {
        let p = [t, x, 0.0];
        let v: Vec<f64> = self
            .parts
            .iter()
            .map(|e| e.eval(&p))
            .collect::<Result<_>>()?;
        Ok(Partials {
            v: v[0],
            t: v[1],
            x: v[2],
            tt: v[3],
            tx: v[4],
            xx: v[5],
        })
    }
}

/// Closed-form vector field with symbolic coefficients in `t` and `x`.
#[derive(Clone, Debug)]
pub struct ExprField {
    tau: ScalarField,
    xi: ScalarField,
}

impl ExprField {
    pub fn new(tau: Expr, xi: Expr) -> Result<Self> {
        for e in [&tau, &xi] {
            if e.depends_on(Var::Xdot) {
                return Err(Error::Invalid(format!("`{e}` depends on xdot")));
            }
        }
        Ok(ExprField {
            tau: ScalarField::new(tau),
            xi: ScalarField::new(xi),
        })
    }

    pub fn parse(tau: &str, xi: &str) -> Result<Self> {
        let vars = [Var::T, Var::X];
        ExprField::new(parse_with_vars(tau, &vars)?, parse_with_vars(xi, &vars)?)
    }

    pub fn zero() -> Self {
        ExprField::new(Expr::Const(0.0), Expr::Const(0.0)).expect("constants are valid")
    }

    pub fn tau(&self) -> &Expr {
        &self.tau.parts[0]
    }

    pub fn xi(&self) -> &Expr {
        &self.xi.parts[0]
    }

    /// `X f = τ f_t + ξ f_x` as an expression.
    pub fn apply(&self, f: &Expr) -> Expr {
        Expr::add(
            Expr::mul(self.tau().clone(), f.diff(Var::T)),
            Expr::mul(self.xi().clone(), f.diff(Var::X)),
        )
    }

    pub fn scale(&self, c: f64) -> ExprField {
        ExprField::new(
            Expr::mul(Expr::Const(c), self.tau().clone()),
            Expr::mul(Expr::Const(c), self.xi().clone()),
        )
        .expect("scaling keeps the variables")
    }
}

impl PointSymmetry for ExprField {
    fn jet(&self, t: f64, x: f64) -> Result<FieldJet> {
        Ok(FieldJet {
            tau: self.tau.eval(t, x)?,
            xi: self.xi.eval(t, x)?,
        })
    }

    fn describe(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ExprField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]d/dt + [{}]d/dx", self.tau(), self.xi())
    }
}

pub type TimeJetFn = Arc<dyn Fn(f64) -> Result<Jet> + Send + Sync>;

/// `τ = a(t)`, `ξ = (C₀ + ½ȧ)x`, with `a` known only through its time jet
/// (e.g. products of numerically integrated solutions).
#[derive(Clone)]
pub struct TimeScalingField {
    a: TimeJetFn,
    c0: f64,
    label: String,
}

impl TimeScalingField {
    pub fn new<F>(a: F, c0: f64, label: impl Into<String>) -> Self
    where
        F: Fn(f64) -> Result<Jet> + Send + Sync + 'static,
    {
        TimeScalingField {
            a: Arc::new(a),
            c0,
            label: label.into(),
        }
    }

    pub fn a_jet(&self, t: f64) -> Result<Jet> {
        (self.a)(t)
    }
}

impl fmt::Debug for TimeScalingField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TimeScalingField({})", self.label)
    }
}

impl PointSymmetry for TimeScalingField {
    fn jet(&self, t: f64, x: f64) -> Result<FieldJet> {
        let a = (self.a)(t)?;
        let c = self.c0 + 0.5 * a[1];
        let (dc, ddc) = (0.5 * a[2], 0.5 * a[3]);
        Ok(FieldJet {
            tau: Partials {
                v: a[0],
                t: a[1],
                tt: a[2],
                ..Partials::default()
            },
            xi: Partials {
                v: c * x,
                t: dc * x,
                x: c,
                tt: ddc * x,
                tx: dc,
                xx: 0.0,
            },
        })
    }

    fn describe(&self) -> String {
        self.label.clone()
    }
}

/// `ẍ = w(t, x, ẋ)` with symbolic partials of `w`.
#[derive(Clone, Debug)]
pub struct SecondOrderOde {
    w: Expr,
    w_t: Expr,
    w_x: Expr,
    w_p: Expr,
    positive_x: bool,
}

impl SecondOrderOde {
    pub fn new(w: Expr) -> Self {
        SecondOrderOde {
            w_t: w.diff(Var::T),
            w_x: w.diff(Var::X),
            w_p: w.diff(Var::Xdot),
            w,
            positive_x: false,
        }
    }

    pub fn parse(src: &str) -> Result<Self> {
        Ok(SecondOrderOde::new(parse_with_vars(
            src,
            &[Var::T, Var::X, Var::Xdot],
        )?))
    }

    /// `ẍ = −Φ(t)x + G(t)/x³`, restricted to `x > 0`.
    pub fn ermakov_pinney(phi: &Expr, g: &Expr) -> Self {
        let w = Expr::add(
            Expr::neg(Expr::mul(phi.clone(), Expr::x())),
            Expr::div(g.clone(), Expr::pow(Expr::x(), Expr::Const(3.0))),
        );
        SecondOrderOde::new(w).positive_x()
    }

    pub fn positive_x(mut self) -> Self {
        self.positive_x = true;
        self
    }

    pub fn w(&self) -> &Expr {
        &self.w
    }
}

impl fmt::Display for SecondOrderOde {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "xddot = {}", self.w)
    }
}

/// A point `(t, x, ẋ)` of the first jet space.
pub type Sample = [f64; 3];

/// 5×5×5 lattice with `t` in the middle 80% of the interval,
/// `x ∈ [0.5, 2]` and `ẋ ∈ [−1, 1]`.
pub fn default_samples(interval: (f64, f64)) -> Vec<Sample> {
    let (t0, t1) = interval;
    let ts = linspace(t0 + 0.1 * (t1 - t0), t0 + 0.9 * (t1 - t0), 5);
    let xs = linspace(0.5, 2.0, 5);
    let ps = linspace(-1.0, 1.0, 5);
    let mut out = Vec::with_capacity(125);
    for &t in &ts {
        for &x in &xs {
            for &p in &ps {
                out.push([t, x, p]);
            }
        }
    }
    out
}

/// 5×5 grid of `(t, x)` points with the same ranges as [`default_samples`].
pub fn plane_samples(interval: (f64, f64)) -> Vec<(f64, f64)> {
    let (t0, t1) = interval;
    let ts = linspace(t0 + 0.1 * (t1 - t0), t0 + 0.9 * (t1 - t0), 5);
    let xs = linspace(0.5, 2.0, 5);
    ts.iter()
        .flat_map(|&t| xs.iter().map(move |&x| (t, x)))
        .collect()
}

/// `ξ⁽²⁾ − (τ w_t + ξ w_x + ξ⁽¹⁾ w_ẋ)` at one point, with `ẍ = w` substituted.
pub fn symmetry_condition(sym: &dyn PointSymmetry, ode: &SecondOrderOde, s: Sample) -> Result<f64> {
    let [t, x, p] = s;
    if ode.positive_x && x <= 0.0 {
        return Err(Error::Domain(format!("sample x = {x} outside x > 0")));
    }
    let FieldJet { tau, xi } = sym.jet(t, x)?;
    let w = ode.w.eval(&s)?;
    let xi1 = xi.t + p * (xi.x - tau.t) - p * p * tau.x;
    let xi2 = xi.tt + p * (2.0 * xi.tx - tau.tt) + p * p * (xi.xx - 2.0 * tau.tx)
        - p.powi(3) * tau.xx
        + w * (xi.x - 2.0 * tau.t - 3.0 * p * tau.x);
    let lin = tau.v * ode.w_t.eval(&s)? + xi.v * ode.w_x.eval(&s)? + xi1 * ode.w_p.eval(&s)?;
    Ok(xi2 - lin)
}

/// Max-norm of the linearized symmetry condition over the samples.
pub fn symmetry_residual(
    sym: &dyn PointSymmetry,
    ode: &SecondOrderOde,
    samples: &[Sample],
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut worst: f64 = 0.0;
    for &s in samples {
        worst = worst.max(symmetry_condition(sym, ode, s)?.abs());
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub symmetry: String,
    pub equation: String,
    pub max_residual: f64,
    pub samples: usize,
    pub verdict: String,
}

pub fn verify(
    sym: &dyn PointSymmetry,
    ode: &SecondOrderOde,
    samples: &[Sample],
    threshold: f64,
) -> Result<SymmetryReport> {
    let r = symmetry_residual(sym, ode, samples)?;
    Ok(SymmetryReport {
        symmetry: sym.describe(),
        equation: ode.to_string(),
        max_residual: r,
        samples: samples.len(),
        verdict: if r <= threshold { "pass" } else { "fail" }.to_string(),
    })
}
