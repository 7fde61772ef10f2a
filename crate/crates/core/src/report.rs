//! Output formats shared by the modules: CSV traces, drift statistics and
//! the JSON audit records.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `n` evenly spaced points covering `[a, b]` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    b
                } else {
                    a + (b - a) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// 17 significant digits, so values round-trip exactly.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv_string<I, R>(header: &[String], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.as_ref().iter().map(|v| fmt_float(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Summary of a quantity sampled along an orbit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantAudit {
    pub name: String,
    pub interval: [f64; 2],
    pub samples: usize,
    pub mean: f64,
    pub drift: f64,
}

/// Number of uniform samples used for drift audits.
pub const DRIFT_SAMPLES: usize = 200;

/// `(max - min) / max(1, |mean|)`.
pub fn drift(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    Ok((mean, (hi - lo) / mean.abs().max(1.0)))
}

/// Samples `f` on `DRIFT_SAMPLES` uniform points of `interval`.
pub fn audit<F>(name: &str, interval: (f64, f64), f: F) -> Result<InvariantAudit>
where
    F: Fn(f64) -> Result<f64>,
{
    let values = linspace(interval.0, interval.1, DRIFT_SAMPLES)
        .into_iter()
        .map(f)
        .collect::<Result<Vec<_>>>()?;
    let (mean, drift) = drift(&values)?;
    Ok(InvariantAudit {
        name: name.to_string(),
        interval: [interval.0, interval.1],
        samples: values.len(),
        mean,
        drift,
    })
}
