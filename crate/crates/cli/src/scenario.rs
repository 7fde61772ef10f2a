//! Scenario files: one JSON object per file, discriminated by `kind`.

use std::path::PathBuf;

use anyhow::{bail, Result};
use epwb_core::IntegrationSettings;
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scenario {
    Simulate(Simulate),
    VerifyInvariant(VerifyInvariant),
    VerifySymmetry(VerifySymmetry),
    Reduce(Reduce),
    EliezerGrey(EliezerGrey),
    AuditAll(AuditAll),
}

impl Scenario {
    pub fn outputs(&self) -> &Outputs {
        match self {
            Scenario::Simulate(s) => &s.outputs,
            Scenario::VerifyInvariant(s) => &s.outputs,
            Scenario::VerifySymmetry(s) => &s.outputs,
            Scenario::Reduce(s) => &s.outputs,
            Scenario::EliezerGrey(s) => &s.outputs,
            Scenario::AuditAll(s) => &s.outputs,
        }
    }

    pub fn threshold(&self) -> Option<f64> {
        match self {
            Scenario::Simulate(s) => s.threshold,
            Scenario::VerifyInvariant(s) => s.threshold,
            Scenario::VerifySymmetry(s) => s.threshold,
            Scenario::Reduce(s) => s.threshold,
            Scenario::EliezerGrey(s) => s.threshold,
            Scenario::AuditAll(_) => None,
        }
    }
}

/// Output paths; relative paths are resolved against the scenario file's
/// directory.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub csv: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub max_steps: Option<usize>,
    pub x_min: Option<f64>,
}

impl Settings {
    pub fn resolve(&self) -> IntegrationSettings {
        let d = IntegrationSettings::default();
        IntegrationSettings {
            rtol: self.rtol.unwrap_or(d.rtol),
            atol: self.atol.unwrap_or(d.atol),
            max_steps: self.max_steps.unwrap_or(d.max_steps),
            x_min: self.x_min.unwrap_or(d.x_min),
        }
    }
}

pub fn interval(iv: [f64; 2]) -> Result<(f64, f64)> {
    let [a, b] = iv;
    if !(a.is_finite() && b.is_finite() && a < b) {
        bail!("interval [{a}, {b}] must be finite and nonempty");
    }
    Ok((a, b))
}

fn default_grid() -> usize {
    201
}

fn one() -> f64 {
    1.0
}

fn zero_expr() -> String {
    "0".to_string()
}

fn default_pinney() -> [f64; 3] {
    [1.0, 0.0, 1.0]
}

fn default_scale() -> f64 {
    epwb_core::reduction::RECTIFYING_SCALE
}

/// Integrate `ẍ + Φx = G/x³` and report the equation residual.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Simulate {
    pub phi: String,
    pub g: String,
    pub x0: f64,
    #[serde(default)]
    pub v0: f64,
    pub interval: [f64; 2],
    #[serde(default = "default_grid")]
    pub grid_points: usize,
    #[serde(default)]
    pub settings: Settings,
    pub threshold: Option<f64>,
    #[serde(default)]
    pub outputs: Outputs,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum InvariantKind {
    /// Pinney amplitude paired with the second basis solution.
    Ermakov,
    /// Linear-oscillator orbit paired with a unit-weight Pinney amplitude.
    Lewis,
    /// `E/ω` along the first basis solution.
    Lorentz,
    /// Energy of the constant-coefficient equation.
    Energy,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyInvariant {
    pub invariant: InvariantKind,
    pub phi: String,
    /// Right side for `energy`.
    pub g: Option<String>,
    /// `(A, B, C)` of the Pinney amplitude.
    #[serde(default = "default_pinney")]
    pub pinney: [f64; 3],
    /// Initial data for `energy`.
    pub x0: Option<f64>,
    #[serde(default)]
    pub v0: f64,
    pub interval: [f64; 2],
    #[serde(default)]
    pub settings: Settings,
    pub threshold: Option<f64>,
    #[serde(default)]
    pub outputs: Outputs,
}

/// Either an explicit `ẍ = −Φx + G/x³` (when `phi` is set) or the
/// compatible family generated by `g`, `c0`, `m`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationSpec {
    pub phi: Option<String>,
    pub g: String,
    #[serde(default = "one")]
    pub c0: f64,
    #[serde(default)]
    pub m: f64,
    /// Constant added to `Φ`.
    #[serde(default)]
    pub phi_shift: f64,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum SymmetrySpec {
    /// `gamma-s`, `ansatz` or `time-translation`.
    Named(String),
    Field {
        tau: String,
        xi: String,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySymmetry {
    pub equation: EquationSpec,
    pub symmetry: SymmetrySpec,
    pub interval: [f64; 2],
    pub threshold: Option<f64>,
    #[serde(default)]
    pub outputs: Outputs,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reduce {
    pub g: String,
    #[serde(default = "one")]
    pub c0: f64,
    #[serde(default)]
    pub m: f64,
    pub x0: f64,
    #[serde(default)]
    pub v0: f64,
    pub interval: [f64; 2],
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default = "default_grid")]
    pub grid_points: usize,
    #[serde(default)]
    pub settings: Settings,
    pub threshold: Option<f64>,
    #[serde(default)]
    pub outputs: Outputs,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EliezerGrey {
    pub phi: String,
    #[serde(default = "zero_expr")]
    pub k: String,
    pub r0: f64,
    #[serde(default)]
    pub rdot0: f64,
    #[serde(default)]
    pub theta0: f64,
    pub thetadot0: f64,
    pub interval: [f64; 2],
    #[serde(default = "default_grid")]
    pub grid_points: usize,
    #[serde(default)]
    pub settings: Settings,
    pub threshold: Option<f64>,
    #[serde(default)]
    pub outputs: Outputs,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditAll {
    #[serde(default)]
    pub outputs: Outputs,
}
