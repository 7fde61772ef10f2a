//! Python module `epwb`: expressions, Ermakov-Pinney integration, the
//! compatible family with its surviving symmetry, the canonical reduction
//! and the corrections ledger.

use epwb_core::audit::audit_all as core_audit_all;
use epwb_core::eliezer_grey::{
    angular_momentum_check, radial_ep_residual, simulate_polar, CentralFieldConfig, PolarState,
};
use epwb_core::expr::parse_with_vars;
use epwb_core::oscillator::OscillatorBasis;
use epwb_core::pinney::{ep_residual, ermakov_audit, pinney_solution, EpConfig};
use epwb_core::reduction::{abel_reduce, AbelForm, CanonicalChart, RECTIFYING_SCALE};
use epwb_core::report::linspace;
use epwb_core::symmetry::{
    self, default_samples, gamma_s, symmetry_residual, ExprField, SecondOrderOde,
};
use epwb_core::{
    integrate, Curve, Error, IntegrationSettings, OdeSystem, Status, TimeFunction, Var,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::StepFailure { .. } | Error::NonFiniteRhs { .. } | Error::GuardStop { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for epwb_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn var(name: &str) -> PyResult<Var> {
    match name {
        "t" => Ok(Var::T),
        "x" => Ok(Var::X),
        "xdot" => Ok(Var::Xdot),
        other => Err(PyValueError::new_err(format!("unknown variable {other:?}"))),
    }
}

fn interval(t0: f64, t1: f64) -> PyResult<(f64, f64)> {
    if t0.is_finite() && t1.is_finite() && t0 < t1 {
        Ok((t0, t1))
    } else {
        Err(PyValueError::new_err(format!(
            "[{t0}, {t1}] is not a finite nonempty interval"
        )))
    }
}

fn grid(iv: (f64, f64), n: usize) -> PyResult<Vec<f64>> {
    if n < 2 {
        return Err(PyValueError::new_err("need at least two grid points"));
    }
    Ok(linspace(iv.0, iv.1, n))
}

/// Parsed expression in `t`, `x` and `xdot`.
#[pyclass(frozen, module = "epwb")]
struct Expression {
    inner: epwb_core::Expr,
}

#[pymethods]
impl Expression {
    #[new]
    fn new(source: &str) -> PyResult<Self> {
        Ok(Expression {
            inner: parse_with_vars(source, &[Var::T, Var::X, Var::Xdot]).py()?,
        })
    }

    #[pyo3(signature = (t, x = 0.0, xdot = 0.0))]
    fn __call__(&self, t: f64, x: f64, xdot: f64) -> PyResult<f64> {
        self.inner.eval(&[t, x, xdot]).py()
    }

    /// Symbolic partial derivative with respect to `"t"`, `"x"` or `"xdot"`.
    #[pyo3(signature = (var = "t"))]
    fn diff(&self, var: &str) -> PyResult<Expression> {
        Ok(Expression {
            inner: self.inner.diff(self::var(var)?),
        })
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Expression({:?})", self.inner.to_string())
    }
}

/// `ẍ + Φx = G/x³` with `Φ` chosen so that a point symmetry survives.
#[pyclass(frozen, module = "epwb")]
struct CompatibleFamily {
    inner: symmetry::CompatibleFamily,
}

#[pymethods]
impl CompatibleFamily {
    #[new]
    #[pyo3(signature = (g, c0 = 1.0, m = 0.0, t0 = 0.0, t1 = 1.0))]
    fn new(g: &str, c0: f64, m: f64, t0: f64, t1: f64) -> PyResult<Self> {
        let g = TimeFunction::parse(g, interval(t0, t1)?).py()?;
        Ok(CompatibleFamily {
            inner: symmetry::compatible_family(&g, c0, m).py()?,
        })
    }

    /// Coefficient of `x` at `t`.
    fn phi(&self, t: f64) -> PyResult<f64> {
        self.inner.phi().value(t).py()
    }

    /// Time component of the surviving symmetry at `t`.
    fn a(&self, t: f64) -> PyResult<f64> {
        self.inner.a().value(t).py()
    }

    /// Linear coefficient `1 + M/C0²` of the reduced equation.
    #[getter]
    fn omega(&self) -> f64 {
        self.inner.omega()
    }

    /// `(τ, ξ)` of the surviving symmetry at a point.
    fn symmetry_at(&self, t: f64, x: f64) -> PyResult<(f64, f64)> {
        use epwb_core::symmetry::PointSymmetry;
        gamma_s(&self.inner).py()?.components(t, x).py()
    }

    /// Max symmetry-condition residual, optionally with `Φ` shifted by
    /// `delta`.
    #[pyo3(signature = (delta = 0.0))]
    fn symmetry_residual(&self, delta: f64) -> PyResult<f64> {
        let eq = self.inner.perturbed_equation(delta);
        let gs = gamma_s(&self.inner).py()?;
        symmetry_residual(&gs, &eq, &default_samples(self.inner.interval())).py()
    }

    /// Integrates from `(x0, v0)` and maps the orbit to the canonical chart.
    /// Returns `T`, `X`, `V` lists with the reduced-equation and phase-plane
    /// residuals.
    #[pyo3(signature = (x0, v0 = 0.0, points = 201, scale = RECTIFYING_SCALE))]
    fn reduce<'py>(
        &self,
        py: Python<'py>,
        x0: f64,
        v0: f64,
        points: usize,
        scale: f64,
    ) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
        let fam = &self.inner;
        let chart = CanonicalChart::with_scale(fam, scale).py()?;
        let iv = fam.interval();
        let sys =
            OdeSystem::ermakov_pinney(fam.phi(), fam.g(), IntegrationSettings::default().x_min);
        let tr = integrate(&sys, &[x0, v0], iv, &IntegrationSettings::default())
            .and_then(|t| t.require_complete())
            .py()?;
        let orbit = chart.transform(&tr, &grid(iv, points)?).py()?;
        let out = pyo3::types::PyDict::new(py);
        out.set_item(
            "T",
            orbit.points.iter().map(|p| p.big_t).collect::<Vec<_>>(),
        )?;
        out.set_item("X", orbit.points.iter().map(|p| p.x).collect::<Vec<_>>())?;
        out.set_item("V", orbit.points.iter().map(|p| p.v).collect::<Vec<_>>())?;
        out.set_item("residual", orbit.autonomous_residual(fam.omega()).py()?)?;
        let abel = abel_reduce(&orbit, fam.omega(), AbelForm::InverseCube)
            .ok()
            .map(|r| r.residual);
        out.set_item("abel_residual", abel)?;
        Ok(out)
    }
}

type Sampled = (Vec<f64>, Vec<f64>, Vec<f64>, &'static str);

/// Integrates `ẍ + Φx = G/x³`; returns `(t, x, xdot, status)` on a uniform
/// grid, truncated where the integration stopped.
#[pyfunction]
#[pyo3(signature = (phi, g, x0, v0, t0, t1, points = 201))]
fn simulate(
    phi: &str,
    g: &str,
    x0: f64,
    v0: f64,
    t0: f64,
    t1: f64,
    points: usize,
) -> PyResult<Sampled> {
    let iv = interval(t0, t1)?;
    let cfg = EpConfig::parse(phi, g, iv).py()?;
    let settings = IntegrationSettings::default();
    let sys = OdeSystem::ermakov_pinney(&cfg.phi, &cfg.g, settings.x_min);
    let tr = integrate(&sys, &[x0, v0], iv, &settings).py()?;
    let end = tr.span().1;
    let (mut ts, mut xs, mut vs) = (Vec::new(), Vec::new(), Vec::new());
    for t in grid(iv, points)?.into_iter().filter(|&t| t <= end) {
        let p = tr.point(t).py()?;
        ts.push(t);
        xs.push(p.x);
        vs.push(p.dx);
    }
    let status = match tr.status() {
        Status::Completed => "completed",
        Status::GuardStop => "guard-stop",
        Status::StepFailure => "step-failure",
    };
    Ok((ts, xs, vs, status))
}

/// Pinney superposition `√(Au² + 2Buv + Cv²)` over the fundamental pair of
/// `z̈ + Φz = 0`. Returns `(h², max residual, Ermakov drift)`.
#[pyfunction]
#[pyo3(signature = (phi, a, b, c, t1 = 10.0, points = 201))]
fn pinney(phi: &str, a: f64, b: f64, c: f64, t1: f64, points: usize) -> PyResult<(f64, f64, f64)> {
    let iv = interval(0.0, t1)?;
    let phi = TimeFunction::parse(phi, iv).py()?;
    let basis =
        OscillatorBasis::fundamental_pair(&phi, iv, &IntegrationSettings::default()).py()?;
    let (x, h2) = pinney_solution(&basis, a, b, c).py()?;
    let cfg = EpConfig::new(phi, TimeFunction::constant(h2, iv).py()?);
    let r = ep_residual(&cfg, &x, &grid(iv, points)?).py()?;
    let d = ermakov_audit(&x, basis.v(), h2, iv).py()?.drift;
    Ok((h2, r, d))
}

/// Max linearized symmetry-condition residual of `tau ∂t + xi ∂x` for
/// `ẍ = w(t, x, xdot)` over a sample lattice.
#[pyfunction]
#[pyo3(signature = (tau, xi, rhs, t0 = 0.0, t1 = 1.0))]
fn verify_symmetry(tau: &str, xi: &str, rhs: &str, t0: f64, t1: f64) -> PyResult<f64> {
    let field = ExprField::parse(tau, xi).py()?;
    let ode = SecondOrderOde::parse(rhs).py()?;
    symmetry_residual(&field, &ode, &default_samples(interval(t0, t1)?)).py()
}

/// Central field with torque `k(t)`; returns `(radial residual,
/// angular-momentum drift)`.
#[pyfunction]
#[pyo3(signature = (phi, k, r0, thetadot0, t1 = 20.0, rdot0 = 0.0))]
fn central_field(
    phi: &str,
    k: &str,
    r0: f64,
    thetadot0: f64,
    t1: f64,
    rdot0: f64,
) -> PyResult<(f64, f64)> {
    let iv = interval(0.0, t1)?;
    let init = PolarState {
        r: r0,
        rdot: rdot0,
        theta: 0.0,
        thetadot: thetadot0,
    };
    let cfg = CentralFieldConfig::parse(phi, k, init.angular_momentum(), iv).py()?;
    let orbit = simulate_polar(&cfg, init, iv, &IntegrationSettings::default()).py()?;
    let r = radial_ep_residual(&orbit, &grid(iv, 201)?).py()?;
    Ok((r, angular_momentum_check(&orbit).py()?.drift))
}

/// Corrections ledger as JSON text.
#[pyfunction]
fn audit_all() -> PyResult<String> {
    Ok(core_audit_all().py()?.to_json())
}

#[pymodule]
fn epwb(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Expression>()?;
    m.add_class::<CompatibleFamily>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(pinney, m)?)?;
    m.add_function(wrap_pyfunction!(verify_symmetry, m)?)?;
    m.add_function(wrap_pyfunction!(central_field, m)?)?;
    m.add_function(wrap_pyfunction!(audit_all, m)?)?;
    Ok(())
}
