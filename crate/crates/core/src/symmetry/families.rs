use super::{ExprField, SecondOrderOde, TimeScalingField};
use crate::error::{Error, Result};
use crate::expr::{Expr, TimeFunction};
use crate::oscillator::OscillatorBasis;
use crate::pinney::EpConfig;
use crate::report::linspace;

fn c(v: f64) -> Expr {
    Expr::Const(v)
}

/// `∂t`, `sin 2Ft ∂t + Fx cos 2Ft ∂x`, `cos 2Ft ∂t − Fx sin 2Ft ∂x`: the
/// symmetries of `ẍ = −F²x + G/x³` for constant `F` and `G`.
pub fn autonomous_family(f: f64) -> Result<[ExprField; 3]> {
    if !(f > 0.0 && f.is_finite()) {
        return Err(Error::Invalid(format!("frequency {f} must be positive")));
    }
    let arg = Expr::mul(c(2.0 * f), Expr::t());
    let fx = Expr::mul(c(f), Expr::x());
    Ok([
        ExprField::new(c(1.0), c(0.0))?,
        ExprField::new(
            Expr::sin(arg.clone()),
            Expr::mul(fx.clone(), Expr::cos(arg.clone())),
        )?,
        ExprField::new(
            Expr::cos(arg.clone()),
            Expr::neg(Expr::mul(fx, Expr::sin(arg))),
        )?,
    ])
}

/// `a∂t + ½ȧx∂x` for `a ∈ {u², uv, v²}` over a fundamental pair of
/// `z̈ + Φz = 0`: the symmetries of `ẍ = −Φx + G/x³` with constant `G`.
pub fn nonautonomous_f_family(basis: &OscillatorBasis) -> Result<[TimeScalingField; 3]> {
    if basis.w() == 0.0 {
        return Err(Error::Degenerate("basis has zero Wronskian".into()));
    }
    let member = |coeffs: [f64; 3], label: &str| {
        let b = basis.clone();
        TimeScalingField::new(
            move |t| b.quadratic_jet(coeffs[0], coeffs[1], coeffs[2], t),
            0.0,
            format!("[{label}]d/dt + [{label}]'x/2 d/dx"),
        )
    };
    Ok([
        member([1.0, 0.0, 0.0], "u^2"),
        member([0.0, 0.5, 0.0], "u*v"),
        member([0.0, 0.0, 1.0], "v^2"),
    ])
}

/// Structured solution of the determining equations for `τ = a(t)`,
/// `ξ = c(t)x`: `c = C₀ + ½ȧ`.
#[derive(Clone, Debug)]
pub struct SymmetryAnsatz {
    pub a: TimeFunction,
    pub c0: f64,
}

impl SymmetryAnsatz {
    pub fn new(a: TimeFunction, c0: f64) -> Self {
        SymmetryAnsatz { a, c0 }
    }

    pub fn field(&self) -> Result<ExprField> {
        let c = Expr::add(
            Expr::Const(self.c0),
            Expr::mul(Expr::Const(0.5), self.a.derivative_expr(1).clone()),
        );
        ExprField::new(self.a.expr().clone(), Expr::mul(c, Expr::x()))
    }
}

/// `ẍ + Φx = G/x³` with `Φ` tied to `G` so that a one-parameter point
/// symmetry survives.
#[derive(Clone, Debug)]
pub struct CompatibleFamily {
    g: TimeFunction,
    c0: f64,
    m: f64,
    a: TimeFunction,
    phi: TimeFunction,
}

impl CompatibleFamily {
    pub fn g(&self) -> &TimeFunction {
        &self.g
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// `a = 4C₀G/Ġ`.
    pub fn a(&self) -> &TimeFunction {
        &self.a
    }

    /// Coefficient of `x`.
    pub fn phi(&self) -> &TimeFunction {
        &self.phi
    }

    pub fn interval(&self) -> (f64, f64) {
        self.g.domain()
    }

    /// `1 + M/C₀²`, the linear coefficient of the reduced equation.
    pub fn omega(&self) -> f64 {
        1.0 + self.m / (self.c0 * self.c0)
    }

    pub fn equation(&self) -> SecondOrderOde {
        SecondOrderOde::ermakov_pinney(self.phi.expr(), self.g.expr())
    }

    /// Same equation with `Φ` replaced by `Φ + δ`.
    pub fn perturbed_equation(&self, delta: f64) -> SecondOrderOde {
        SecondOrderOde::ermakov_pinney(
            &Expr::add(self.phi.expr().clone(), Expr::Const(delta)),
            self.g.expr(),
        )
    }

    pub fn ep_config(&self) -> EpConfig {
        EpConfig::new(self.phi.clone(), self.g.clone())
    }

    pub fn ansatz(&self) -> SymmetryAnsatz {
        SymmetryAnsatz::new(self.a.clone(), self.c0)
    }
}

/// Sample count for the monotonicity check on `G`.
const MONOTONE_SAMPLES: usize = 1001;

/// `a = 4C₀G/Ġ` and `Φ = M/a² − ½[ä/a − ½(ȧ/a)²]` on the domain of `G`.
pub fn compatible_family(g: &TimeFunction, c0: f64, m: f64) -> Result<CompatibleFamily> {
    if c0 == 0.0 || !c0.is_finite() || !m.is_finite() {
        return Err(Error::Invalid(format!(
            "need finite C0 != 0 and M, got {c0}, {m}"
        )));
    }
    let (lo, hi) = g.domain();
    for t in linspace(lo, hi, MONOTONE_SAMPLES) {
        let dg = g.eval(t, 1)?;
        if !(dg > 0.0) {
            return Err(Error::Domain(format!(
                "G' = {dg} is not positive at t = {t}"
            )));
        }
    }
    let a = TimeFunction::new(
        Expr::div(
            Expr::mul(c(4.0 * c0), g.expr().clone()),
            g.derivative_expr(1).clone(),
        ),
        g.domain(),
    )?;
    let (a0, a1, a2) = (
        a.expr().clone(),
        a.derivative_expr(1).clone(),
        a.derivative_expr(2).clone(),
    );
    let ratio = Expr::div(a1, a0.clone());
    let bracket = Expr::sub(
        Expr::div(a2, a0.clone()),
        Expr::mul(c(0.5), Expr::pow(ratio, c(2.0))),
    );
    let phi_expr = Expr::sub(
        Expr::div(c(m), Expr::pow(a0, c(2.0))),
        Expr::mul(c(0.5), bracket),
    );
    let phi = TimeFunction::new(phi_expr, g.domain())?;
    for t in linspace(lo, hi, MONOTONE_SAMPLES) {
        a.value(t)?;
        phi.value(t)?;
    }
    Ok(CompatibleFamily {
        g: g.clone(),
        c0,
        m,
        a,
        phi,
    })
}

/// `(4G/Ġ)∂t + x(3 − 2GG̈/Ġ²)∂x`, the ansatz field at `C₀ = 1`.
pub fn gamma_s(fam: &CompatibleFamily) -> Result<ExprField> {
    let g = fam.g.expr().clone();
    let dg = fam.g.derivative_expr(1).clone();
    let ddg = fam.g.derivative_expr(2).clone();
    let tau = Expr::div(Expr::mul(c(4.0), g.clone()), dg.clone());
    let k = Expr::div(Expr::mul(c(2.0), Expr::mul(g, ddg)), Expr::pow(dg, c(2.0)));
    ExprField::new(tau, Expr::mul(Expr::x(), Expr::sub(c(3.0), k)))
}
