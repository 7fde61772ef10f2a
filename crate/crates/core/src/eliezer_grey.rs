//! A particle in the plane under a time-dependent linear central force
//! `−Φ(t)r` and a tangential force that changes the angular momentum at
//! rate `k(t)`. The radial motion obeys `r̈ + Φr = L(t)²/r³` with
//! `L = L₀ + ∫k`.

use crate::error::{Error, Result};
use crate::expr::TimeFunction;
use crate::ode::{integrate, IntegrationSettings, OdeSystem, Trajectory};
use crate::report::{self, csv_string, linspace, InvariantAudit};

#[derive(Clone, Debug)]
pub struct CentralFieldConfig {
    pub phi: TimeFunction,
    /// Rate of change of `r²θ̇`; zero for a purely central force.
    pub k: TimeFunction,
    pub l0: f64,
}

impl CentralFieldConfig {
    pub fn new(phi: TimeFunction, k: TimeFunction, l0: f64) -> Self {
        CentralFieldConfig { phi, k, l0 }
    }

    pub fn parse(phi: &str, k: &str, l0: f64, domain: (f64, f64)) -> Result<Self> {
        Ok(CentralFieldConfig {
            phi: TimeFunction::parse(phi, domain)?,
            k: TimeFunction::parse(k, domain)?,
            l0,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarState {
    pub r: f64,
    pub rdot: f64,
    pub theta: f64,
    pub thetadot: f64,
}

impl PolarState {
    /// `r²θ̇`
    pub fn angular_momentum(&self) -> f64 {
        self.r * self.r * self.thetadot
    }

    /// `(x, y, ẋ, ẏ)`.
    pub fn to_cartesian(&self) -> [f64; 4] {
        let (s, c) = self.theta.sin_cos();
        let vt = self.r * self.thetadot;
        [
            self.r * c,
            self.r * s,
            self.rdot * c - vt * s,
            self.rdot * s + vt * c,
        ]
    }

    pub fn from_cartesian(p: [f64; 4]) -> Self {
        let [x, y, vx, vy] = p;
        let r = x.hypot(y);
        PolarState {
            r,
            rdot: (x * vx + y * vy) / r,
            theta: y.atan2(x),
            thetadot: (x * vy - y * vx) / (r * r),
        }
    }
}

/// Polar integration with state `(r, ṙ, θ, L)` plus an independent
/// quadrature of `k`.
#[derive(Clone, Debug)]
pub struct PolarOrbit {
    cfg: CentralFieldConfig,
    orbit: Trajectory,
    quadrature: Trajectory,
}

fn quadrature(
    k: &TimeFunction,
    interval: (f64, f64),
    settings: &IntegrationSettings,
) -> Result<Trajectory> {
    let k = k.clone();
    let sys = OdeSystem::new(1, move |t, _, dy| {
        dy[0] = k.value(t)?;
        Ok(())
    });
    integrate(&sys, &[0.0], interval, settings)?.require_complete()
}

pub fn simulate_polar(
    cfg: &CentralFieldConfig,
    init: PolarState,
    interval: (f64, f64),
    settings: &IntegrationSettings,
) -> Result<PolarOrbit> {
    if !(init.r > 0.0) {
        return Err(Error::Invalid(format!(
            "initial radius {} must be positive",
            init.r
        )));
    }
    let (phi, k) = (cfg.phi.clone(), cfg.k.clone());
    let sys = OdeSystem::new(4, move |t, y, dy| {
        let [r, rd, _, l] = [y[0], y[1], y[2], y[3]];
        dy[0] = rd;
        dy[1] = -phi.value(t)? * r + l * l / r.powi(3);
        dy[2] = l / (r * r);
        dy[3] = k.value(t)?;
        Ok(())
    })
    .with_min_guard(0, settings.x_min);
    let y0 = [init.r, init.rdot, init.theta, init.angular_momentum()];
    let orbit = integrate(&sys, &y0, interval, settings)?.require_complete()?;
    Ok(PolarOrbit {
        cfg: CentralFieldConfig {
            l0: init.angular_momentum(),
            ..cfg.clone()
        },
        orbit,
        quadrature: quadrature(&cfg.k, interval, settings)?,
    })
}

impl PolarOrbit {
    pub fn trajectory(&self) -> &Trajectory {
        &self.orbit
    }

    pub fn span(&self) -> (f64, f64) {
        self.orbit.span()
    }

    pub fn l0(&self) -> f64 {
        self.cfg.l0
    }

    pub fn state(&self, t: f64) -> Result<PolarState> {
        let y = self.orbit.sample(t)?;
        Ok(PolarState {
            r: y[0],
            rdot: y[1],
            theta: y[2],
            thetadot: y[3] / (y[0] * y[0]),
        })
    }

    /// `∫k` from the start of the orbit.
    pub fn k_integral(&self, t: f64) -> Result<f64> {
        Ok(self.quadrature.sample(t)?[0])
    }

    /// `G(t) = (L₀ + ∫k)²`.
    pub fn g(&self, t: f64) -> Result<f64> {
        Ok((self.cfg.l0 + self.k_integral(t)?).powi(2))
    }

    /// `Ġ = 2(L₀ + ∫k)k`.
    pub fn g_rate(&self, t: f64) -> Result<f64> {
        Ok(2.0 * (self.cfg.l0 + self.k_integral(t)?) * self.cfg.k.value(t)?)
    }

    /// Whether `G` is strictly increasing on the orbit's interval, as the
    /// canonical chart requires.
    pub fn qualifies_for_chart(&self) -> Result<bool> {
        let (lo, hi) = self.span();
        for t in linspace(lo, hi, 1001) {
            if !(self.g_rate(t)? > 0.0) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// CSV with columns `t,r,rdot,theta,L` at the stored nodes.
    pub fn to_csv(&self) -> String {
        self.orbit.to_csv(&["r", "rdot", "theta", "L"])
    }

    pub fn to_csv_on_grid(&self, grid: &[f64]) -> Result<String> {
        self.orbit
            .to_csv_on_grid(&["r", "rdot", "theta", "L"], grid)
    }
}

/// Drift of `r²θ̇ − ∫k` over the orbit.
pub fn angular_momentum_check(orbit: &PolarOrbit) -> Result<InvariantAudit> {
    report::audit("angular-momentum", orbit.span(), |t| {
        Ok(orbit.state(t)?.angular_momentum() - orbit.k_integral(t)?)
    })
}

/// Max of `|r̈ + Φr − G/r³|` with `G = (L₀ + ∫k)²` from the quadrature.
pub fn radial_ep_residual(orbit: &PolarOrbit, grid: &[f64]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut worst: f64 = 0.0;
    for &t in grid {
        let y = orbit.orbit.sample(t)?;
        let dy = orbit.orbit.derivative(t)?;
        let r = y[0];
        if r < crate::pinney::X_MIN {
            return Err(Error::Domain(format!("r = {r} too close to 0 at t = {t}")));
        }
        let d = dy[1] + orbit.cfg.phi.value(t)? * r - orbit.g(t)? / r.powi(3);
        worst = worst.max(d.abs());
    }
    Ok(worst)
}

/// Cartesian integration with state `(x, y, ẋ, ẏ)`.
#[derive(Clone, Debug)]
pub struct CartesianOrbit {
    orbit: Trajectory,
}

pub fn simulate_cartesian(
    cfg: &CentralFieldConfig,
    init: PolarState,
    interval: (f64, f64),
    settings: &IntegrationSettings,
) -> Result<CartesianOrbit> {
    let (phi, k) = (cfg.phi.clone(), cfg.k.clone());
    let sys = OdeSystem::new(4, move |t, y, dy| {
        let (x, yy) = (y[0], y[1]);
        let r2 = x * x + yy * yy;
        let (p, kk) = (phi.value(t)?, k.value(t)?);
        dy[0] = y[2];
        dy[1] = y[3];
        dy[2] = -p * x - kk * yy / r2;
        dy[3] = -p * yy + kk * x / r2;
        Ok(())
    });
    let orbit = integrate(&sys, &init.to_cartesian(), interval, settings)?.require_complete()?;
    Ok(CartesianOrbit { orbit })
}

impl CartesianOrbit {
    pub fn trajectory(&self) -> &Trajectory {
        &self.orbit
    }

    /// Polar state with `θ` in `(−π, π]`.
    pub fn polar(&self, t: f64) -> Result<PolarState> {
        let y = self.orbit.sample(t)?;
        Ok(PolarState::from_cartesian([y[0], y[1], y[2], y[3]]))
    }
}

/// Max of `|r_polar − r_cartesian|` over the grid.
pub fn cross_check(polar: &PolarOrbit, cart: &CartesianOrbit, grid: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &t in grid {
        worst = worst.max((polar.state(t)?.r - cart.polar(t)?.r).abs());
    }
    Ok(worst)
}

/// Rows `t, r, L, G` for reports.
pub fn summary_csv(orbit: &PolarOrbit, grid: &[f64]) -> Result<String> {
    let rows = grid
        .iter()
        .map(|&t| {
            let s = orbit.state(t)?;
            Ok([t, s.r, s.angular_momentum(), orbit.g(t)?])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(csv_string(&["t", "r", "L", "G"].map(String::from), rows))
}
