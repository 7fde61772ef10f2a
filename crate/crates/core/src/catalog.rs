//! Named coefficient functions used by the audits, the acceptance suite and
//! the CLI defaults.

use crate::error::Result;
use crate::expr::TimeFunction;

/// Oscillator coefficients `Φ(t)`, each given as source text.
pub const PHI_CATALOG: [(&str, &str); 5] = [
    ("unit", "1"),
    ("free", "0"),
    ("double", "4"),
    ("modulated", "1+0.5*sin(t)"),
    ("compatible-power", "1.25/(1+t)^2"),
];

/// Fast modulation of `ω²`, far outside the adiabatic regime.
pub const OMEGA2_FAST: &str = "1+0.5*sin(3*t)";
/// Slow modulation of `ω²`; one period is `200π`.
pub const OMEGA2_SLOW: &str = "1+0.5*sin(0.01*t)";

/// `G(t)` functions with `Ġ > 0` used for the single-symmetry family.
pub const G_CATALOG: [&str; 4] = ["exp(4*t)", "(1+t)^4", "exp(t)", "(2+t)^3"];

/// Integration constants `M` paired with every catalog `G`.
pub const M_CATALOG: [f64; 3] = [0.0, 1.0, 2.0];

pub fn phi_catalog(domain: (f64, f64)) -> Result<Vec<(&'static str, TimeFunction)>> {
    PHI_CATALOG
        .iter()
        .map(|(name, src)| Ok((*name, TimeFunction::parse(src, domain)?)))
        .collect()
}
