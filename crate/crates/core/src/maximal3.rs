//! The linear third-order equation `w⃛ + 2a(t)ẇ + ȧ(t)w = 0`, its first
//! integral `wẅ − ½ẇ² + aw² = 2h²`, solutions built as quadratic forms in a
//! fundamental pair, and the substitution `w = ρ²` that turns the integral
//! into the Ermakov-Pinney equation for `ρ`.
//!
//! Products of solutions of `z̈ + b(t)z = 0` solve `w⃛ + 4bẇ + 2ḃw = 0`, so
//! the base oscillator for coefficient `a` is `z̈ + (a/2)z = 0`.

use crate::error::{Error, Result};
use crate::expr::{Expr, TimeFunction};
use crate::ode::{integrate, Curve, CurvePoint, IntegrationSettings, OdeSystem, Trajectory};
use crate::oscillator::{Jet, OscillatorBasis};
use crate::report::linspace;

#[derive(Clone, Debug)]
pub struct ThirdOrderConfig {
    pub a: TimeFunction,
}

impl ThirdOrderConfig {
    pub fn new(a: TimeFunction) -> Self {
        ThirdOrderConfig { a }
    }

    /// Coefficient `a/2` of the base oscillator whose products solve the
    /// third-order equation.
    pub fn base_coefficient(&self) -> Result<TimeFunction> {
        TimeFunction::new(
            Expr::mul(Expr::Const(0.5), self.a.expr().clone()),
            self.a.domain(),
        )
    }

    /// `w⃛ + 2aẇ + ȧw` for a jet of `w`.
    pub fn defect(&self, t: f64, w: &Jet) -> Result<f64> {
        let a = self.a.jet(t)?;
        Ok(w[3] + 2.0 * a[0] * w[1] + a[1] * w[0])
    }

    /// `wẅ − ½ẇ² + aw²`.
    pub fn integral_of(&self, t: f64, w: &Jet) -> Result<f64> {
        Ok(w[0] * w[2] - 0.5 * w[1] * w[1] + self.a.value(t)? * w[0] * w[0])
    }

    pub fn system(&self) -> OdeSystem {
        let a = self.a.clone();
        OdeSystem::new(3, move |t, y, dy| {
            dy[0] = y[1];
            dy[1] = y[2];
            dy[2] = -2.0 * a.value(t)? * y[1] - a.eval(t, 1)? * y[0];
            Ok(())
        })
    }
}

/// A curve with derivatives through third order.
pub trait ThirdOrderCurve {
    fn jet(&self, t: f64) -> Result<Jet>;
    fn span(&self) -> (f64, f64);
}

/// State layout `(w, ẇ, ẅ)`; `w⃛` comes from the producing system.
impl ThirdOrderCurve for Trajectory {
    fn jet(&self, t: f64) -> Result<Jet> {
        if self.dim() != 3 {
            return Err(Error::Invalid("expected a third-order trajectory".into()));
        }
        let y = self.sample(t)?;
        let dy = self.derivative(t)?;
        Ok([y[0], y[1], y[2], dy[2]])
    }

    fn span(&self) -> (f64, f64) {
        Trajectory::span(self)
    }
}

pub fn integrate_third_order(
    cfg: &ThirdOrderConfig,
    initial: [f64; 3],
    interval: (f64, f64),
    settings: &IntegrationSettings,
) -> Result<Trajectory> {
    integrate(&cfg.system(), &initial, interval, settings)?.require_complete()
}

/// First integral `wẅ − ½ẇ² + aw²` (equal to `2h²`) along a curve.
pub fn first_integral(w: &dyn ThirdOrderCurve, cfg: &ThirdOrderConfig, t: f64) -> Result<f64> {
    cfg.integral_of(t, &w.jet(t)?)
}

/// `w = A u² + 2B uv + C v²`.
#[derive(Clone, Debug)]
pub struct ProductCurve {
    basis: OscillatorBasis,
    coeffs: [f64; 3],
}

impl ProductCurve {
    /// Quadratic form over any basis, without checking which equation the
    /// basis solves.
    pub fn over(basis: &OscillatorBasis, a: f64, b: f64, c: f64) -> Self {
        ProductCurve {
            basis: basis.clone(),
            coeffs: [a, b, c],
        }
    }

    /// The three elementary products `u²`, `uv`, `v²`.
    pub fn elementary(basis: &OscillatorBasis) -> [ProductCurve; 3] {
        [
            ProductCurve::over(basis, 1.0, 0.0, 0.0),
            ProductCurve::over(basis, 0.0, 0.5, 0.0),
            ProductCurve::over(basis, 0.0, 0.0, 1.0),
        ]
    }
}

impl ThirdOrderCurve for ProductCurve {
    fn jet(&self, t: f64) -> Result<Jet> {
        let [a, b, c] = self.coeffs;
        self.basis.quadratic_jet(a, b, c, t)
    }

    fn span(&self) -> (f64, f64) {
        self.basis.interval()
    }
}

/// Product solution over a basis of `z̈ + (a/2)z = 0`.
pub fn product_solution(
    basis: &OscillatorBasis,
    cfg: &ThirdOrderConfig,
    a: f64,
    b: f64,
    c: f64,
) -> Result<ProductCurve> {
    if basis.w() == 0.0 {
        return Err(Error::Degenerate("basis has zero Wronskian".into()));
    }
    let (lo, hi) = basis.interval();
    for t in linspace(lo, hi, 33) {
        let (base, half) = (basis.phi().value(t)?, 0.5 * cfg.a.value(t)?);
        if (base - half).abs() > 1e-12 * (1.0 + half.abs()) {
            return Err(Error::Invalid(format!(
                "basis coefficient {base} differs from a/2 = {half} at t = {t}"
            )));
        }
    }
    Ok(ProductCurve::over(basis, a, b, c))
}

/// `max |w⃛ + 2aẇ + ȧw|` over `grid`.
pub fn third_order_residual(
    cfg: &ThirdOrderConfig,
    w: &dyn ThirdOrderCurve,
    grid: &[f64],
) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut worst: f64 = 0.0;
    for &t in grid {
        worst = worst.max(cfg.defect(t, &w.jet(t)?)?.abs());
    }
    Ok(worst)
}

/// `ρ = √w`.
pub struct RhoCurve<'a> {
    w: &'a dyn ThirdOrderCurve,
}

impl Curve for RhoCurve<'_> {
    fn point(&self, t: f64) -> Result<CurvePoint> {
        let w = self.w.jet(t)?;
        if w[0] <= 0.0 {
            return Err(Error::Domain(format!(
                "w = {} not positive at t = {t}",
                w[0]
            )));
        }
        let x = w[0].sqrt();
        let dx = w[1] / (2.0 * x);
        Ok(CurvePoint {
            x,
            dx,
            ddx: (w[2] - 2.0 * dx * dx) / (2.0 * x),
        })
    }

    fn span(&self) -> (f64, f64) {
        self.w.span()
    }
}

pub struct RhoSubstitution<'a> {
    pub rho: RhoCurve<'a>,
    /// Half the first integral at the left end point.
    pub h2: f64,
    /// `max |ρ̈ + (a/2)ρ − h²/ρ³|` over the grid.
    pub residual: f64,
}

// smallest value of w guarded against; matches ρ ≥ 1e-6
const W_FLOOR: f64 = 1e-12;

fn check_positive(w: &dyn ThirdOrderCurve) -> Result<()> {
    let (lo, hi) = w.span();
    let n = 2001;
    let grid = linspace(lo, hi, n);
    let mut vals = Vec::with_capacity(n);
    for &t in &grid {
        let v = w.jet(t)?[0];
        if v <= W_FLOOR {
            return Err(Error::Domain(format!("w = {v} not positive at t = {t}")));
        }
        vals.push(v);
    }
    // refine every interior local minimum with a golden-section search
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for i in 1..n - 1 {
        if !(vals[i] <= vals[i - 1] && vals[i] <= vals[i + 1]) {
            continue;
        }
        let (mut a, mut b) = (grid[i - 1], grid[i + 1]);
        for _ in 0..80 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if w.jet(c)?[0] < w.jet(d)?[0] {
                b = d;
            } else {
                a = c;
            }
        }
        let m = 0.5 * (a + b);
        let v = w.jet(m)?[0];
        if v <= W_FLOOR {
            return Err(Error::Domain(format!("w = {v:e} vanishes near t = {m}")));
        }
    }
    Ok(())
}

pub fn rho_substitution<'a>(
    w: &'a dyn ThirdOrderCurve,
    cfg: &ThirdOrderConfig,
    grid: &[f64],
) -> Result<RhoSubstitution<'a>> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    check_positive(w)?;
    let t0 = w.span().0;
    let h2 = 0.5 * first_integral(w, cfg, t0)?;
    let rho = RhoCurve { w };
    let mut residual: f64 = 0.0;
    for &t in grid {
        let p = rho.point(t)?;
        let d = p.ddx + 0.5 * cfg.a.value(t)? * p.x - h2 / p.x.powi(3);
        residual = residual.max(d.abs());
    }
    Ok(RhoSubstitution { rho, h2, residual })
}

/// Determinant of `[f_j(t_i)]` for the elementary products at three times.
pub fn product_gram_determinant(basis: &OscillatorBasis, times: [f64; 3]) -> Result<f64> {
    let mut m = [[0.0; 3]; 3];
    for (i, &t) in times.iter().enumerate() {
        let (u, v) = (basis.u_jet(t)?, basis.v_jet(t)?);
        m[i] = [u[0] * u[0], u[0] * v[0], v[0] * v[0]];
    }
    Ok(nalgebra::Matrix3::from_fn(|i, j| m[i][j]).determinant())
}
