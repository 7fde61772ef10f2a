//! Canonical coordinates `T = σ log G`, `X = x Ġ^{1/2} G^{-3/4}` for the
//! one-parameter symmetry of a compatible family, the autonomous equation
//! `X'' + 2X' + ΩX = 16/X³` they produce (`Ω = 1 + M/C₀²`, primes in `T`),
//! and its phase-plane (Abel) form.
//!
//! With `σ = 1/4` the symmetry becomes exactly `∂T`. Any other scale
//! multiplies it by `4σ` and leaves a residual in the reduced equation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Expr, TimeFunction, Var};
use crate::ode::Curve;
use crate::report::{csv_string, linspace};
use crate::symmetry::{gamma_s, CompatibleFamily, ExprField, SecondOrderOde};

/// The scale that rectifies the symmetry to `∂T`.
pub const RECTIFYING_SCALE: f64 = 0.25;

/// Turning-point exclusion for phase-plane derivatives.
pub const TURNING_POINT_TOL: f64 = 1e-4;

/// Below this `X` the reduced equation is not evaluated.
pub const X_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct CanonicalChart {
    fam: CompatibleFamily,
    sigma: f64,
    big_t: TimeFunction,
    // X = x g(t)
    g: TimeFunction,
}

pub fn canonical_chart(fam: &CompatibleFamily) -> Result<CanonicalChart> {
    CanonicalChart::with_scale(fam, RECTIFYING_SCALE)
}

impl CanonicalChart {
    pub fn with_scale(fam: &CompatibleFamily, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Invalid(format!("scale {sigma} must be positive")));
        }
        let gf = fam.g();
        let (lo, hi) = gf.domain();
        for t in linspace(lo, hi, 1001) {
            let [g, dg, _, _] = gf.jet(t)?;
            if !(g > 0.0) || !(dg > 0.0) {
                return Err(Error::Domain(format!(
                    "chart needs G > 0 and G' > 0; G = {g}, G' = {dg} at t = {t}"
                )));
            }
        }
        let big_t = TimeFunction::new(
            Expr::mul(Expr::Const(sigma), Expr::log(gf.expr().clone())),
            gf.domain(),
        )?;
        let g = TimeFunction::new(
            Expr::mul(
                Expr::sqrt(gf.derivative_expr(1).clone()),
                Expr::pow(gf.expr().clone(), Expr::Const(-0.75)),
            ),
            gf.domain(),
        )?;
        Ok(CanonicalChart {
            fam: fam.clone(),
            sigma,
            big_t,
            g,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn family(&self) -> &CompatibleFamily {
        &self.fam
    }

    pub fn interval(&self) -> (f64, f64) {
        self.fam.interval()
    }

    /// `T(t)`.
    pub fn time(&self, t: f64) -> Result<f64> {
        self.big_t.value(t)
    }

    /// `X(t, x)`.
    pub fn coordinate(&self, t: f64, x: f64) -> Result<f64> {
        Ok(x * self.g.value(t)?)
    }

    pub fn forward(&self, t: f64, x: f64) -> Result<(f64, f64)> {
        Ok((self.time(t)?, self.coordinate(t, x)?))
    }

    /// `(t, x)` from `(T, X)`; `T` is inverted by bisection with a Newton
    /// polish.
    pub fn inverse(&self, big_t: f64, big_x: f64) -> Result<(f64, f64)> {
        let (mut lo, mut hi) = self.interval();
        let (tlo, thi) = (self.time(lo)?, self.time(hi)?);
        let slack = 1e-12 * (1.0 + tlo.abs().max(thi.abs()));
        if big_t < tlo - slack || big_t > thi + slack {
            return Err(Error::OutOfRange {
                t: big_t,
                lo: tlo,
                hi: thi,
            });
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.time(mid)? < big_t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut t = 0.5 * (lo + hi);
        for _ in 0..2 {
            let step = (self.time(t)? - big_t) / self.big_t.eval(t, 1)?;
            let next = t - step;
            if next >= self.interval().0 && next <= self.interval().1 {
                t = next;
            }
        }
        Ok((t, big_x / self.g.value(t)?))
    }

    fn expressions(&self) -> (Expr, Expr) {
        let x_expr = Expr::mul(Expr::x(), self.g.expr().clone());
        (self.big_t.expr().clone(), x_expr)
    }

    /// `(Γ_s T, Γ_s X)` at a point.
    pub fn symmetry_action(&self, t: f64, x: f64) -> Result<(f64, f64)> {
        let gs = gamma_s(&self.fam)?;
        let (te, xe) = self.expressions();
        let p = [t, x, 0.0];
        Ok((gs.apply(&te).eval(&p)?, gs.apply(&xe).eval(&p)?))
    }

    /// Max over the points of `|Γ_s T − 4σ|` and `|Γ_s X|`.
    pub fn invariance_defect(&self, points: &[(f64, f64)]) -> Result<(f64, f64)> {
        let gs = gamma_s(&self.fam)?;
        let (te, xe) = self.expressions();
        let (dt, dx) = (gs.apply(&te), gs.apply(&xe));
        let (mut wt, mut wx): (f64, f64) = (0.0, 0.0);
        for &(t, x) in points {
            let p = [t, x, 0.0];
            wt = wt.max((dt.eval(&p)? - 4.0 * self.sigma).abs());
            wx = wx.max(dx.eval(&p)?.abs());
        }
        Ok((wt, wx))
    }

    /// Samples of a curve in chart coordinates, with `dX/dT` and `d²X/dT²`
    /// from the chain rule.
    pub fn transform(&self, curve: &dyn Curve, grid: &[f64]) -> Result<TransformedOrbit> {
        if grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let mut points = Vec::with_capacity(grid.len());
        for &t in grid {
            let p = curve.point(t)?;
            let [g, dg, ddg, _] = self.g.jet(t)?;
            let [tt, s, ds, _] = self.big_t.jet(t)?;
            let xt = p.dx * g + p.x * dg;
            let xtt = p.ddx * g + 2.0 * p.dx * dg + p.x * ddg;
            points.push(OrbitPoint {
                t,
                big_t: tt,
                x: p.x * g,
                v: xt / s,
                a: (xtt * s - xt * ds) / s.powi(3),
            });
        }
        Ok(TransformedOrbit {
            sigma: self.sigma,
            points,
        })
    }

    /// `X'' = −2X' − ΩX + 16/X³` as an equation in `(T, X, X')`.
    pub fn reduced_equation(&self) -> SecondOrderOde {
        reduced_equation(self.fam.omega())
    }
}

pub fn reduced_equation(omega: f64) -> SecondOrderOde {
    let c = Expr::Const;
    let w = Expr::add(
        Expr::sub(
            Expr::mul(c(-2.0), Expr::xdot()),
            Expr::mul(c(omega), Expr::x()),
        ),
        Expr::div(c(16.0), Expr::pow(Expr::x(), c(3.0))),
    );
    SecondOrderOde::new(w).positive_x()
}

/// Translation in the chart time, the expected symmetry of the reduced
/// equation.
pub fn chart_translation() -> ExprField {
    ExprField::new(Expr::Const(1.0), Expr::Const(0.0)).expect("constant field")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitPoint {
    pub t: f64,
    pub big_t: f64,
    pub x: f64,
    /// `dX/dT`
    pub v: f64,
    /// `d²X/dT²`
    pub a: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransformedOrbit {
    pub sigma: f64,
    pub points: Vec<OrbitPoint>,
}

impl TransformedOrbit {
    pub fn to_csv(&self) -> String {
        let header = ["T", "X", "V"].map(String::from);
        csv_string(&header, self.points.iter().map(|p| [p.big_t, p.x, p.v]))
    }

    /// Max of `|X'' + 2X' + ΩX − 16/X³|` along the orbit.
    pub fn autonomous_residual(&self, omega: f64) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for p in &self.points {
            if p.x < X_FLOOR {
                return Err(Error::Domain(format!(
                    "X = {} too close to 0 at t = {}",
                    p.x, p.t
                )));
            }
            worst = worst.max((p.a + 2.0 * p.v + omega * p.x - 16.0 / p.x.powi(3)).abs());
        }
        Ok(worst)
    }

    /// Least-squares `(α, β, γ)` in `X'' = αX' + βX + γX⁻³` over a slice.
    pub fn fit_coefficients(&self, range: std::ops::Range<usize>) -> Result<[f64; 3]> {
        let pts = &self.points[range];
        if pts.len() < 3 {
            return Err(Error::EmptyGrid);
        }
        let m = DMatrix::from_fn(pts.len(), 3, |i, j| match j {
            0 => pts[i].v,
            1 => pts[i].x,
            _ => pts[i].x.powi(-3),
        });
        let rhs = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.a));
        let sol = m
            .svd(true, true)
            .solve(&rhs, 1e-14)
            .map_err(|e| Error::Degenerate(e.to_string()))?;
        Ok([sol[0], sol[1], sol[2]])
    }
}

/// `autonomous_residual` as a free function.
pub fn autonomous_residual(orbit: &TransformedOrbit, fam: &CompatibleFamily) -> Result<f64> {
    orbit.autonomous_residual(fam.omega())
}

/// Right-hand form of the phase-plane relation `v dv/du + 2v + R(u) = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AbelForm {
    /// `R = Ωu − 16/u³`, the form the autonomous equation implies.
    InverseCube,
    /// `R = Ω − 16/u`.
    InverseLinear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbelReport {
    pub form: AbelForm,
    pub residual: f64,
    pub used: usize,
    pub skipped: usize,
}

/// Phase relation along the orbit with `u = X`, `v = X'` and
/// `dv/du = (dv/dT)/(du/dT)`; points with `|v| < 1e-4` are skipped.
pub fn abel_reduce(orbit: &TransformedOrbit, omega: f64, form: AbelForm) -> Result<AbelReport> {
    let (mut worst, mut used, mut skipped): (f64, usize, usize) = (0.0, 0, 0);
    for p in &orbit.points {
        if p.v.abs() < TURNING_POINT_TOL {
            skipped += 1;
            continue;
        }
        if p.x < X_FLOOR {
            return Err(Error::Domain(format!("u = {} too close to 0", p.x)));
        }
        let dvdu = p.a / p.v;
        let rest = match form {
            AbelForm::InverseCube => omega * p.x - 16.0 / p.x.powi(3),
            AbelForm::InverseLinear => omega - 16.0 / p.x,
        };
        worst = worst.max((p.v * dvdu + 2.0 * p.v + rest).abs());
        used += 1;
    }
    if used == 0 {
        return Err(Error::EmptyGrid);
    }
    Ok(AbelReport {
        form,
        residual: worst,
        used,
        skipped,
    })
}

/// Closed-form solution `x = (8^{1/4}/2)eᵗ`, which the chart for
/// `G = e^{4t}` maps to the fixed point `X⁴ = 8`.
pub fn equilibrium_chain(domain: (f64, f64)) -> Result<TimeFunction> {
    TimeFunction::new(
        Expr::mul(
            Expr::Const(8f64.powf(0.25) / 2.0),
            Expr::exp(Expr::Var(Var::T)),
        ),
        domain,
    )
}
