//! Adaptive Dormand-Prince 5(4) integration with continuous output, and
//! residual evaluation of a system along a trajectory.
//!
//! Step control follows the PI controller of Hairer & Wanner (`beta = 0.04`).
//! Each accepted step stores the five coefficient vectors of the
//! fourth-order continuous extension, so `sample` is available anywhere
//! inside the covered interval.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::TimeFunction;
use crate::report;

/// Right-hand side `f(t, y, dy)`; writes the derivative into `dy`.
pub type Rhs = Arc<dyn Fn(f64, &[f64], &mut [f64]) -> Result<()> + Send + Sync>;
/// Returns `true` when integration must stop at the given state.
pub type Guard = Arc<dyn Fn(f64, &[f64]) -> bool + Send + Sync>;

#[derive(Clone)]
pub struct OdeSystem {
    dim: usize,
    rhs: Rhs,
    guard: Option<Guard>,
}

impl fmt::Debug for OdeSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OdeSystem")
            .field("dim", &self.dim)
            .field("guarded", &self.guard.is_some())
            .finish()
    }
}

impl OdeSystem {
    pub fn new<F>(dim: usize, rhs: F) -> Self
    where
        F: Fn(f64, &[f64], &mut [f64]) -> Result<()> + Send + Sync + 'static,
    {
        OdeSystem {
            dim,
            rhs: Arc::new(rhs),
            guard: None,
        }
    }

    /// `ẍ = accel(t, x, ẋ)` as the first-order system on `(x, ẋ)`.
    pub fn second_order<F>(accel: F) -> Self
    where
        F: Fn(f64, f64, f64) -> Result<f64> + Send + Sync + 'static,
    {
        OdeSystem::new(2, move |t, y, dy| {
            dy[0] = y[1];
            dy[1] = accel(t, y[0], y[1])?;
            Ok(())
        })
    }

    /// `ẍ + Φ(t)x = G(t)/x³`, guarded against `x < x_min`.
    pub fn ermakov_pinney(phi: &TimeFunction, g: &TimeFunction, x_min: f64) -> Self {
        let (phi, g) = (phi.clone(), g.clone());
        OdeSystem::second_order(move |t, x, _| Ok(-phi.value(t)? * x + g.value(t)? / (x * x * x)))
            .with_min_guard(0, x_min)
    }

    /// `z̈ + Φ(t)z = 0`.
    pub fn linear_oscillator(phi: &TimeFunction) -> Self {
        let phi = phi.clone();
        OdeSystem::second_order(move |t, z, _| Ok(-phi.value(t)? * z))
    }

    pub fn with_guard<G>(mut self, guard: G) -> Self
    where
        G: Fn(f64, &[f64]) -> bool + Send + Sync + 'static,
    {
        self.guard = Some(Arc::new(guard));
        self
    }

    /// Stops integration once component `idx` drops below `threshold`.
    pub fn with_min_guard(self, idx: usize, threshold: f64) -> Self {
        self.with_guard(move |_, y| y[idx] < threshold)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rhs(&self) -> &Rhs {
        &self.rhs
    }

    pub fn eval(&self, t: f64, y: &[f64]) -> Result<Vec<f64>> {
        let mut dy = vec![0.0; self.dim];
        (self.rhs)(t, y, &mut dy)?;
        if dy.iter().all(|v| v.is_finite()) {
            Ok(dy)
        } else {
            Err(Error::NonFiniteRhs { t })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrationSettings {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Guard threshold for equations with an `x⁻³` term.
    pub x_min: f64,
}

impl Default for IntegrationSettings {
    fn default() -> Self {
        IntegrationSettings {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 1_000_000,
            x_min: 1e-6,
        }
    }
}

impl IntegrationSettings {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        IntegrationSettings {
            rtol,
            atol,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::Invalid("tolerances must be positive".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::Invalid("max_steps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Completed,
    GuardStop,
    StepFailure,
}

#[derive(Clone)]
pub struct Trajectory {
    dim: usize,
    times: Vec<f64>,
    states: Vec<f64>,
    cont: Vec<f64>,
    status: Status,
    rhs: Rhs,
}

impl fmt::Debug for Trajectory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Trajectory")
            .field("dim", &self.dim)
            .field("nodes", &self.times.len())
            .field("span", &self.span())
            .field("status", &self.status)
            .finish()
    }
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn span(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().unwrap())
    }

    /// Fails unless integration ran to the requested end point.
    pub fn require_complete(self) -> Result<Self> {
        let end = self.span().1;
        match self.status {
            Status::Completed => Ok(self),
            Status::GuardStop => Err(Error::GuardStop { t: end }),
            Status::StepFailure => Err(Error::StepFailure { t: end }),
        }
    }

    /// Dense-output state at `t`; stored nodes are returned verbatim.
    pub fn sample(&self, t: f64) -> Result<Vec<f64>> {
        let (lo, hi) = self.span();
        if !(t >= lo && t <= hi) {
            return Err(Error::OutOfRange { t, lo, hi });
        }
        let i = match self.times.binary_search_by(|s| s.total_cmp(&t)) {
            Ok(i) => return Ok(self.node(i).to_vec()),
            Err(i) => i - 1,
        };
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let theta = (t - t0) / (t1 - t0);
        let theta1 = 1.0 - theta;
        let n = self.dim;
        let c = &self.cont[i * 5 * n..(i + 1) * 5 * n];
        Ok((0..n)
            .map(|j| {
                c[j] + theta
                    * (c[n + j]
                        + theta1 * (c[2 * n + j] + theta * (c[3 * n + j] + theta1 * c[4 * n + j])))
            })
            .collect())
    }

    /// Derivative at `t` from the producing system evaluated at the
    /// interpolated state.
    pub fn derivative(&self, t: f64) -> Result<Vec<f64>> {
        let y = self.sample(t)?;
        let mut dy = vec![0.0; self.dim];
        (self.rhs)(t, &y, &mut dy)?;
        Ok(dy)
    }

    /// CSV of all stored nodes. `names` labels the state components.
    pub fn to_csv(&self, names: &[&str]) -> String {
        let rows = (0..self.len()).map(|i| {
            let mut row = vec![self.times[i]];
            row.extend_from_slice(self.node(i));
            row
        });
        report::csv_string(&header(names, self.dim), rows)
    }

    /// CSV of dense-output samples on `grid`.
    pub fn to_csv_on_grid(&self, names: &[&str], grid: &[f64]) -> Result<String> {
        let mut rows = Vec::with_capacity(grid.len());
        for &t in grid {
            let mut row = vec![t];
            row.extend(self.sample(t)?);
            rows.push(row);
        }
        Ok(report::csv_string(&header(names, self.dim), rows))
    }
}

fn header(names: &[&str], dim: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for j in 0..dim {
        h.push(
            names
                .get(j)
                .map_or_else(|| format!("y{j}"), |s| s.to_string()),
        );
    }
    h
}

// Dormand-Prince coefficients
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFE: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const FAC_MIN_INV: f64 = 5.0; // 1 / 0.2
const FAC_MAX_INV: f64 = 0.1; // 1 / 10

fn call(rhs: &Rhs, t: f64, y: &[f64], dy: &mut [f64]) -> bool {
    (rhs)(t, y, dy).is_ok() && dy.iter().all(|v| v.is_finite())
}

fn initial_step(
    sys: &OdeSystem,
    t0: f64,
    y0: &[f64],
    f0: &[f64],
    hmax: f64,
    s: &IntegrationSettings,
) -> f64 {
    let n = y0.len();
    let sk: Vec<f64> = y0.iter().map(|y| s.atol + s.rtol * y.abs()).collect();
    let dnf: f64 = f0.iter().zip(&sk).map(|(f, k)| (f / k).powi(2)).sum();
    let dny: f64 = y0.iter().zip(&sk).map(|(y, k)| (y / k).powi(2)).sum();
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        (dny / dnf).sqrt() * 0.01
    };
    h = h.min(hmax);
    let y1: Vec<f64> = (0..n).map(|i| y0[i] + h * f0[i]).collect();
    let mut f1 = vec![0.0; n];
    if !call(&sys.rhs, t0 + h, &y1, &mut f1) {
        return h * 1e-3;
    }
    let der2 = (0..n)
        .map(|i| ((f1[i] - f0[i]) / sk[i]).powi(2))
        .sum::<f64>()
        .sqrt()
        / h;
    let der12 = der2.abs().max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 {
        (h * 1e-3).max(1e-6)
    } else {
        (0.01 / der12).powf(1.0 / 5.0)
    };
    (100.0 * h).min(h1).min(hmax)
}

/// Integrates `sys` from `y0` over `[t0, t1]`.
///
/// Guard hits and step-size underflow end the trajectory early with the
/// corresponding [`Status`]; the returned trajectory only contains accepted,
/// finite, unguarded states.
pub fn integrate(
    sys: &OdeSystem,
    y0: &[f64],
    interval: (f64, f64),
    settings: &IntegrationSettings,
) -> Result<Trajectory> {
    settings.validate()?;
    let (t0, t1) = interval;
    if !(t0 < t1) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::Invalid(format!("interval [{t0}, {t1}] is empty")));
    }
    let n = sys.dim;
    if y0.len() != n {
        return Err(Error::Invalid(format!(
            "initial state has {} components, system has {n}",
            y0.len()
        )));
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("non-finite initial state".into()));
    }

    let mut traj = Trajectory {
        dim: n,
        times: vec![t0],
        states: y0.to_vec(),
        cont: Vec::new(),
        status: Status::Completed,
        rhs: sys.rhs.clone(),
    };
    if let Some(g) = &sys.guard {
        if g(t0, y0) {
            traj.status = Status::GuardStop;
            return Ok(traj);
        }
    }

    let rhs = &sys.rhs;
    let mut k1 = sys.eval(t0, y0)?;
    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) = (
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    );
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];

    let hmax = t1 - t0;
    let mut h = initial_step(sys, t0, y0, &k1, hmax, settings);
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut facold: f64 = 1e-4;
    let mut last_rejected = false;
    let mut steps = 0usize;

    loop {
        if steps >= settings.max_steps || 0.1 * h.abs() <= t.abs() * f64::EPSILON {
            traj.status = Status::StepFailure;
            return Ok(traj);
        }
        steps += 1;
        let last = t + 1.01 * h >= t1;
        if last {
            h = t1 - t;
        }

        let ok = 'stages: {
            for i in 0..n {
                ytmp[i] = y[i] + h * A21 * k1[i];
            }
            if !call(rhs, t + C2 * h, &ytmp, &mut k2) {
                break 'stages false;
            }
            for i in 0..n {
                ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            if !call(rhs, t + C3 * h, &ytmp, &mut k3) {
                break 'stages false;
            }
            for i in 0..n {
                ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            if !call(rhs, t + C4 * h, &ytmp, &mut k4) {
                break 'stages false;
            }
            for i in 0..n {
                ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            if !call(rhs, t + C5 * h, &ytmp, &mut k5) {
                break 'stages false;
            }
            for i in 0..n {
                ytmp[i] = y[i]
                    + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            let tph = if last { t1 } else { t + h };
            if !call(rhs, tph, &ytmp, &mut k6) {
                break 'stages false;
            }
            for i in 0..n {
                ynew[i] = y[i]
                    + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            if !call(rhs, tph, &ynew, &mut k7) {
                break 'stages false;
            }
            true
        };

        if !ok {
            // undefined or non-finite stage: shrink and retry
            h *= 0.25;
            last_rejected = true;
            continue;
        }

        let mut err = 0.0;
        for i in 0..n {
            let sk = settings.atol + settings.rtol * y[i].abs().max(ynew[i].abs());
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            err += (e / sk).powi(2);
        }
        err = (err / n as f64).sqrt();

        let fac11 = err.powf(EXPO1);
        let fac = (fac11 / facold.powf(BETA) / SAFE).clamp(FAC_MAX_INV, FAC_MIN_INV);
        let mut hnew = h / fac;

        if err <= 1.0 {
            facold = err.max(1e-4);
            let tnew = if last { t1 } else { t + h };
            if let Some(g) = &sys.guard {
                if g(tnew, &ynew) {
                    traj.status = Status::GuardStop;
                    return Ok(traj);
                }
            }
            let base = traj.cont.len();
            traj.cont.resize(base + 5 * n, 0.0);
            let c = &mut traj.cont[base..];
            for i in 0..n {
                let dy = ynew[i] - y[i];
                let bspl = h * k1[i] - dy;
                c[i] = y[i];
                c[n + i] = dy;
                c[2 * n + i] = bspl;
                c[3 * n + i] = dy - h * k7[i] - bspl;
                c[4 * n + i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            traj.times.push(tnew);
            traj.states.extend_from_slice(&ynew);
            std::mem::swap(&mut k1, &mut k7);
            std::mem::swap(&mut y, &mut ynew);
            t = tnew;
            if last {
                return Ok(traj);
            }
            if last_rejected {
                hnew = hnew.min(h);
            }
            last_rejected = false;
            h = hnew.min(hmax);
        } else {
            hnew = h / FAC_MIN_INV.min(fac11 / SAFE);
            last_rejected = true;
            h = hnew;
        }
    }
}

/// Max-norm discrepancy between the trajectory's own derivative and the
/// right-hand side of `sys`, over `grid`.
pub fn residual(sys: &OdeSystem, tr: &Trajectory, grid: &[f64]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if sys.dim != tr.dim {
        return Err(Error::Invalid("dimension mismatch".into()));
    }
    let mut worst: f64 = 0.0;
    for &t in grid {
        let y = tr.sample(t)?;
        let own = tr.derivative(t)?;
        let other = sys.eval(t, &y)?;
        for (a, b) in own.iter().zip(&other) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

/// Position, velocity and acceleration of a scalar curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub x: f64,
    pub dx: f64,
    pub ddx: f64,
}

/// A scalar curve with exact (or integrator-exact) second derivative.
pub trait Curve {
    fn point(&self, t: f64) -> Result<CurvePoint>;
    fn span(&self) -> (f64, f64);
}

/// Components 0 and 1 are read as `(x, ẋ)`; `ẍ` comes from the producing
/// system.
impl Curve for Trajectory {
    fn point(&self, t: f64) -> Result<CurvePoint> {
        let y = self.sample(t)?;
        let mut dy = vec![0.0; self.dim];
        (self.rhs)(t, &y, &mut dy)?;
        Ok(CurvePoint {
            x: y[0],
            dx: y[1],
            ddx: dy[1],
        })
    }

    fn span(&self) -> (f64, f64) {
        Trajectory::span(self)
    }
}

impl Curve for TimeFunction {
    fn point(&self, t: f64) -> Result<CurvePoint> {
        let j = self.jet(t)?;
        Ok(CurvePoint {
            x: j[0],
            dx: j[1],
            ddx: j[2],
        })
    }

    fn span(&self) -> (f64, f64) {
        self.domain()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::linspace;
    use std::f64::consts::PI;

    fn harmonic() -> OdeSystem {
        OdeSystem::second_order(|_, x, _| Ok(-x))
    }

    fn ep_const(h2: f64) -> OdeSystem {
        OdeSystem::second_order(move |_, x, _| Ok(-x + h2 / (x * x * x))).with_min_guard(0, 1e-6)
    }

    #[test]
    fn cosine_returns_after_one_period() {
        let s = IntegrationSettings::default();
        let tr = integrate(&harmonic(), &[1.0, 0.0], (0.0, 2.0 * PI), &s).unwrap();
        assert_eq!(tr.status(), Status::Completed);
        let y = tr.sample(2.0 * PI).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-8);
        assert!((tr.sample(PI / 3.0).unwrap()[0] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn equilibrium_stays_put() {
        let s = IntegrationSettings::default();
        let tr = integrate(&ep_const(1.0), &[1.0, 0.0], (0.0, 10.0), &s).unwrap();
        for i in 0..tr.len() {
            assert!((tr.node(i)[0] - 1.0).abs() < 1e-9);
        }
        let r = residual(&ep_const(1.0), &tr, &linspace(0.0, 10.0, 101)).unwrap();
        assert!(r < 1e-10);
    }

    #[test]
    fn pinney_closed_form_amplitude() {
        // x = sqrt(1 + 3 cos^2 t) solves x'' + x = 4/x^3 from (2, 0)
        let s = IntegrationSettings::default();
        let tr = integrate(&ep_const(4.0), &[2.0, 0.0], (0.0, 1.0), &s).unwrap();
        let exact = (1.0 + 3.0 * 1f64.cos().powi(2)).sqrt();
        assert!((tr.sample(1.0).unwrap()[0] - exact).abs() < 1e-7);
    }

    #[test]
    fn residual_against_other_equation() {
        let s = IntegrationSettings::default();
        let tr = integrate(&ep_const(4.0), &[2.0, 0.0], (0.0, 10.0), &s).unwrap();
        let grid = linspace(0.0, 10.0, 401);
        assert!(residual(&ep_const(4.0), &tr, &grid).unwrap() <= 1e-6);
        let r = residual(&ep_const(2.0), &tr, &grid).unwrap();
        // |4 - 2| / x^3 with x in [1, 2]
        assert!((0.25..=2.0 + 1e-9).contains(&r), "{r}");
        assert!(matches!(
            residual(&ep_const(2.0), &tr, &[]),
            Err(Error::EmptyGrid)
        ));
    }

    #[test]
    fn sampling_at_nodes_is_exact() {
        let s = IntegrationSettings::default();
        let tr = integrate(&harmonic(), &[1.0, 0.0], (0.0, 3.0), &s).unwrap();
        for i in 0..tr.len() {
            assert_eq!(tr.sample(tr.times()[i]).unwrap(), tr.node(i));
        }
        assert!(tr.times().windows(2).all(|w| w[0] < w[1]));
        assert!(matches!(tr.sample(3.5), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn harmonic_energy_drift() {
        let s = IntegrationSettings::default();
        let tr = integrate(&harmonic(), &[1.0, 0.0], (0.0, 20.0), &s).unwrap();
        let e: Vec<f64> = linspace(0.0, 20.0, 200)
            .into_iter()
            .map(|t| {
                let y = tr.sample(t).unwrap();
                0.5 * (y[0] * y[0] + y[1] * y[1])
            })
            .collect();
        let (lo, hi) = e
            .iter()
            .fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
        assert!((hi - lo) / 0.5 <= 1e-8, "{}", (hi - lo) / 0.5);
    }

    #[test]
    fn guard_stops_before_threshold() {
        // x'' = -1/x from (1, -1) reaches x = 0 in finite time
        let sys = OdeSystem::second_order(|_, x, _| Ok(-1.0 / x)).with_min_guard(0, 1e-6);
        let s = IntegrationSettings::default();
        let tr = integrate(&sys, &[1.0, -1.0], (0.0, 5.0), &s).unwrap();
        assert_eq!(tr.status(), Status::GuardStop);
        let end = tr.span().1;
        assert!(end < 5.0);
        for i in 0..tr.len() {
            assert!(tr.node(i).iter().all(|v| v.is_finite()));
            assert!(tr.node(i)[0] >= 1e-6);
        }
        assert!(matches!(
            tr.sample(end + 0.01),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(
            tr.require_complete(),
            Err(Error::GuardStop { .. })
        ));
    }

    #[test]
    fn step_budget_exhaustion_is_reported() {
        let s = IntegrationSettings {
            max_steps: 5,
            ..Default::default()
        };
        let tr = integrate(&harmonic(), &[1.0, 0.0], (0.0, 100.0), &s).unwrap();
        assert_eq!(tr.status(), Status::StepFailure);
    }

    #[test]
    fn invalid_requests() {
        let s = IntegrationSettings::default();
        assert!(integrate(&harmonic(), &[1.0, 0.0], (1.0, 1.0), &s).is_err());
        assert!(integrate(&harmonic(), &[1.0], (0.0, 1.0), &s).is_err());
        assert!(integrate(&harmonic(), &[f64::NAN, 0.0], (0.0, 1.0), &s).is_err());
        let bad = IntegrationSettings::with_tolerances(0.0, 1e-12);
        assert!(integrate(&harmonic(), &[1.0, 0.0], (0.0, 1.0), &bad).is_err());
        let blowup = OdeSystem::new(1, |_, _, dy| {
            dy[0] = f64::INFINITY;
            Ok(())
        });
        assert!(matches!(
            integrate(&blowup, &[1.0], (0.0, 1.0), &s),
            Err(Error::NonFiniteRhs { .. })
        ));
    }

    #[test]
    fn tighter_tolerances_do_not_worsen_error() {
        type Exact = Box<dyn Fn(f64) -> f64>;
        let cases: Vec<(OdeSystem, [f64; 2], Exact)> = vec![
            (harmonic(), [1.0, 0.0], Box::new(|t: f64| t.cos())),
            (ep_const(1.0), [1.0, 0.0], Box::new(|_| 1.0)),
            (
                ep_const(4.0),
                [2.0, 0.0],
                Box::new(|t: f64| (1.0 + 3.0 * t.cos().powi(2)).sqrt()),
            ),
        ];
        let grid = linspace(0.0, 10.0, 201);
        for (sys, y0, exact) in &cases {
            let mut prev = f64::INFINITY;
            let mut tol = 1e-5;
            for _ in 0..8 {
                let s = IntegrationSettings::with_tolerances(tol, tol * 1e-2);
                let tr = integrate(sys, y0, (0.0, 10.0), &s).unwrap();
                let err = grid
                    .iter()
                    .map(|&t| (tr.sample(t).unwrap()[0] - exact(t)).abs())
                    .fold(0.0, f64::max);
                // equilibrium sits at the roundoff floor; allow it to jitter there
                assert!(err <= prev.max(1e-13), "tol {tol}: {err} > {prev}");
                prev = err;
                tol *= 0.5;
            }
        }
    }

    #[test]
    fn csv_export_header_and_precision() {
        let s = IntegrationSettings::default();
        let tr = integrate(&harmonic(), &[1.0, 0.0], (0.0, 1.0), &s).unwrap();
        let csv = tr.to_csv_on_grid(&["x", "xdot"], &[0.0, 0.5]).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,x,xdot"));
        let row: Vec<f64> = lines
            .nth(1)
            .unwrap()
            .split(',')
            .map(|v| v.parse().unwrap())
            .collect();
        assert_eq!(row[1], tr.sample(0.5).unwrap()[0]);
    }
}
