//! Fundamental solution pairs of `z̈ + Φ(t)z = 0`.

use crate::error::{Error, Result};
use crate::expr::TimeFunction;
use crate::ode::{integrate, IntegrationSettings, OdeSystem, Trajectory};

/// Value and first three time derivatives of a scalar function.
pub type Jet = [f64; 4];

/// Leibniz rule through third order.
pub fn jet_mul(a: &Jet, b: &Jet) -> Jet {
    [
        a[0] * b[0],
        a[1] * b[0] + a[0] * b[1],
        a[2] * b[0] + 2.0 * a[1] * b[1] + a[0] * b[2],
        a[3] * b[0] + 3.0 * a[2] * b[1] + 3.0 * a[1] * b[2] + a[0] * b[3],
    ]
}

pub fn jet_lincomb(terms: &[(f64, Jet)]) -> Jet {
    let mut out = [0.0; 4];
    for (c, j) in terms {
        for k in 0..4 {
            out[k] += c * j[k];
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct OscillatorBasis {
    phi: TimeFunction,
    u: Trajectory,
    v: Trajectory,
    wronskian: f64,
}

impl OscillatorBasis {
    /// Solutions with `(u, u̇)(t0) = (1, 0)` and `(v, v̇)(t0) = (0, 1)`.
    pub fn fundamental_pair(
        phi: &TimeFunction,
        interval: (f64, f64),
        settings: &IntegrationSettings,
    ) -> Result<Self> {
        OscillatorBasis::with_initial(phi, interval, [1.0, 0.0], [0.0, 1.0], settings)
    }

    /// Basis from arbitrary initial data `(z, ż)(t0)` for each member.
    pub fn with_initial(
        phi: &TimeFunction,
        interval: (f64, f64),
        u0: [f64; 2],
        v0: [f64; 2],
        settings: &IntegrationSettings,
    ) -> Result<Self> {
        let (lo, hi) = phi.domain();
        if interval.0 < lo || interval.1 > hi {
            return Err(Error::Invalid(format!(
                "interval {interval:?} outside the coefficient's domain [{lo}, {hi}]"
            )));
        }
        let w = u0[0] * v0[1] - u0[1] * v0[0];
        let scale = (u0[0].hypot(u0[1]) * v0[0].hypot(v0[1])).max(f64::MIN_POSITIVE);
        if w.abs() <= 1e-12 * scale {
            return Err(Error::Degenerate(
                "initial data are linearly dependent".into(),
            ));
        }
        let sys = OdeSystem::linear_oscillator(phi);
        let u = integrate(&sys, &u0, interval, settings)?.require_complete()?;
        let v = integrate(&sys, &v0, interval, settings)?.require_complete()?;
        Ok(OscillatorBasis {
            phi: phi.clone(),
            u,
            v,
            wronskian: w,
        })
    }

    pub fn phi(&self) -> &TimeFunction {
        &self.phi
    }

    pub fn u(&self) -> &Trajectory {
        &self.u
    }

    pub fn v(&self) -> &Trajectory {
        &self.v
    }

    pub fn interval(&self) -> (f64, f64) {
        self.u.span()
    }

    /// Wronskian fixed by the initial data.
    pub fn w(&self) -> f64 {
        self.wronskian
    }

    /// `u v̇ − u̇ v` evaluated from the trajectories at `t`.
    pub fn wronskian(&self, t: f64) -> Result<f64> {
        let (u, v) = (self.u.sample(t)?, self.v.sample(t)?);
        Ok(u[0] * v[1] - u[1] * v[0])
    }

    fn member_jet(&self, z: &Trajectory, t: f64) -> Result<Jet> {
        let s = z.sample(t)?;
        let p = self.phi.jet(t)?;
        let zdd = -p[0] * s[0];
        let zddd = -p[1] * s[0] - p[0] * s[1];
        Ok([s[0], s[1], zdd, zddd])
    }

    /// `u` and its derivatives through third order, the higher ones from
    /// the oscillator equation itself.
    pub fn u_jet(&self, t: f64) -> Result<Jet> {
        self.member_jet(&self.u, t)
    }

    pub fn v_jet(&self, t: f64) -> Result<Jet> {
        self.member_jet(&self.v, t)
    }

    /// Jet of `A u² + 2B uv + C v²`.
    pub fn quadratic_jet(&self, a: f64, b: f64, c: f64, t: f64) -> Result<Jet> {
        let (u, v) = (self.u_jet(t)?, self.v_jet(t)?);
        Ok(jet_lincomb(&[
            (a, jet_mul(&u, &u)),
            (2.0 * b, jet_mul(&u, &v)),
            (c, jet_mul(&v, &v)),
        ]))
    }
}

pub fn fundamental_pair(
    phi: &TimeFunction,
    interval: (f64, f64),
    settings: &IntegrationSettings,
) -> Result<OscillatorBasis> {
    OscillatorBasis::fundamental_pair(phi, interval, settings)
}

pub fn wronskian(b: &OscillatorBasis, t: f64) -> Result<f64> {
    b.wronskian(t)
}
