//! Scenario runner behind the `epwb` binary.
//!
//! A scenario either passes (exit 0), fails a residual check against its
//! threshold (exit 2), or cannot be run as written (exit 1).

pub mod scenario;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use epwb_core::audit::audit_all;
use epwb_core::eliezer_grey::{
    angular_momentum_check, cross_check, radial_ep_residual, simulate_cartesian, simulate_polar,
    CentralFieldConfig, PolarState,
};
use epwb_core::ode::residual;
use epwb_core::oscillator::OscillatorBasis;
use epwb_core::pinney::{
    autonomous_energy, ermakov_audit, lewis_audit, lorentz_audit, pinney_solution, EpConfig, X_MIN,
};
use epwb_core::reduction::{abel_reduce, AbelForm, CanonicalChart};
use epwb_core::report::{self, linspace, InvariantAudit};
use epwb_core::symmetry::{
    compatible_family, default_samples, gamma_s, verify, ExprField, PointSymmetry, SecondOrderOde,
    SymmetryReport,
};
use epwb_core::{integrate, Curve, Expr, OdeSystem, Status, TimeFunction, Var};
use serde::Serialize;

use scenario::*;

pub const DEFAULT_THRESHOLD: f64 = 1e-6;

/// Name of the environment variable overriding the default threshold.
pub const TOL_ENV: &str = "EPWB_TOL";

/// Threshold from the scenario, else from `EPWB_TOL`, else the default.
pub fn resolve_threshold(scenario: Option<f64>, env: Option<&str>) -> Result<f64> {
    let t = match (scenario, env) {
        (Some(t), _) => t,
        (None, Some(s)) => s
            .trim()
            .parse::<f64>()
            .with_context(|| format!("{TOL_ENV}={s:?} is not a decimal number"))?,
        (None, None) => DEFAULT_THRESHOLD,
    };
    if !(t > 0.0 && t.is_finite()) {
        bail!("threshold {t} must be positive and finite");
    }
    Ok(t)
}

#[derive(Debug)]
pub struct Outcome {
    /// JSON report, also written to the declared report path.
    pub report: String,
    pub passed: bool,
    /// One line per failed check.
    pub failures: Vec<String>,
    pub written: Vec<PathBuf>,
}

struct Artifacts {
    report: String,
    csv: Option<String>,
    failures: Vec<String>,
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

fn check(failures: &mut Vec<String>, name: &str, value: f64, limit: f64) -> bool {
    let ok = value <= limit;
    if !ok {
        failures.push(format!("{name} = {value:e} exceeds threshold {limit:e}"));
    }
    ok
}

fn time_fn(field: &str, src: &str, iv: (f64, f64)) -> Result<TimeFunction> {
    TimeFunction::parse(src, iv).with_context(|| format!("field `{field}` = {src:?}"))
}

fn grid(iv: (f64, f64), n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        bail!("grid_points must be at least 2");
    }
    Ok(linspace(iv.0, iv.1, n))
}

/// Runs a scenario file, writing its declared outputs.
pub fn run_file(path: &Path, env_tol: Option<&str>) -> Result<Outcome> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let scenario: Scenario =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let own = fs::canonicalize(path)?;
    let outs = scenario.outputs();
    for out in outs.csv.iter().chain(outs.report.iter()) {
        if fs::canonicalize(base.join(out)).is_ok_and(|p| p == own) {
            bail!("output {} would overwrite the scenario file", out.display());
        }
    }
    run_scenario(&scenario, base, env_tol)
}

pub fn run_scenario(s: &Scenario, base: &Path, env_tol: Option<&str>) -> Result<Outcome> {
    let threshold = resolve_threshold(s.threshold(), env_tol)?;
    let produces_csv = matches!(
        s,
        Scenario::Simulate(_) | Scenario::Reduce(_) | Scenario::EliezerGrey(_)
    );
    if s.outputs().csv.is_some() && !produces_csv {
        bail!("this scenario kind produces no CSV output");
    }
    let art = match s {
        Scenario::Simulate(c) => simulate(c, threshold)?,
        Scenario::VerifyInvariant(c) => verify_invariant(c, threshold)?,
        Scenario::VerifySymmetry(c) => verify_symmetry(c, threshold)?,
        Scenario::Reduce(c) => reduce(c, threshold)?,
        Scenario::EliezerGrey(c) => eliezer_grey(c, threshold)?,
        Scenario::AuditAll(_) => audit(),
    };
    let mut written = Vec::new();
    let outputs = s.outputs();
    if let Some(p) = &outputs.report {
        written.push(write(base, p, &art.report)?);
    }
    if let (Some(p), Some(csv)) = (&outputs.csv, &art.csv) {
        written.push(write(base, p, csv)?);
    }
    Ok(Outcome {
        report: art.report,
        passed: art.failures.is_empty(),
        failures: art.failures,
        written,
    })
}

fn write(base: &Path, rel: &Path, contents: &str) -> Result<PathBuf> {
    let path = if rel.is_absolute() {
        rel.to_path_buf()
    } else {
        base.join(rel)
    };
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
    }
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    kind: &'static str,
    phi: &'a str,
    g: &'a str,
    interval: [f64; 2],
    status: &'static str,
    end_time: f64,
    nodes: usize,
    residual: Option<f64>,
    threshold: f64,
    verdict: &'static str,
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Completed => "completed",
        Status::GuardStop => "guard-stop",
        Status::StepFailure => "step-failure",
    }
}

fn simulate(c: &Simulate, threshold: f64) -> Result<Artifacts> {
    let iv = interval(c.interval)?;
    let cfg = EpConfig::new(time_fn("phi", &c.phi, iv)?, time_fn("g", &c.g, iv)?);
    let settings = c.settings.resolve();
    let sys = OdeSystem::ermakov_pinney(&cfg.phi, &cfg.g, settings.x_min);
    let tr = integrate(&sys, &[c.x0, c.v0], iv, &settings)?;
    let mut failures = Vec::new();
    let (_, end) = tr.span();
    let pts = grid((iv.0, end), c.grid_points)?;
    let residual = if tr.status() == Status::Completed {
        let r = residual(&sys, &tr, &pts)?;
        check(&mut failures, "equation residual", r, threshold);
        Some(r)
    } else {
        failures.push(format!(
            "integration ended early ({}) at t = {end}",
            status_name(tr.status())
        ));
        None
    };
    let report = SimulateReport {
        kind: "simulate",
        phi: &c.phi,
        g: &c.g,
        interval: c.interval,
        status: status_name(tr.status()),
        end_time: end,
        nodes: tr.len(),
        residual,
        threshold,
        verdict: verdict(failures.is_empty()),
    };
    Ok(Artifacts {
        report: to_json(&report),
        csv: Some(tr.to_csv_on_grid(&["x", "xdot"], &pts)?),
        failures,
    })
}

#[derive(Serialize)]
struct InvariantReport {
    kind: &'static str,
    #[serde(flatten)]
    audit: InvariantAudit,
    threshold: f64,
    verdict: &'static str,
}

fn verify_invariant(c: &VerifyInvariant, threshold: f64) -> Result<Artifacts> {
    let iv = interval(c.interval)?;
    let settings = c.settings.resolve();
    let phi = time_fn("phi", &c.phi, iv)?;
    let [a, b, cc] = c.pinney;
    let audit = match c.invariant {
        InvariantKind::Ermakov => {
            let basis = OscillatorBasis::fundamental_pair(&phi, iv, &settings)?;
            let (x, h2) = pinney_solution(&basis, a, b, cc)?;
            ermakov_audit(&x, basis.v(), h2, iv)?
        }
        InvariantKind::Lewis => {
            let basis = OscillatorBasis::fundamental_pair(&phi, iv, &settings)?;
            let (_, h2) = pinney_solution(&basis, a, b, cc)?;
            // rescale the quadratic form so the amplitude has unit weight
            let s = 1.0 / h2.sqrt();
            let (rho, _) = pinney_solution(&basis, s * a, s * b, s * cc)?;
            lewis_audit(basis.u(), &rho, iv)?
        }
        InvariantKind::Lorentz => {
            let basis = OscillatorBasis::fundamental_pair(&phi, iv, &settings)?;
            lorentz_audit(basis.u(), &phi, iv)?
        }
        InvariantKind::Energy => {
            let g_src = c.g.as_deref().context("`energy` needs field `g`")?;
            let g = time_fn("g", g_src, iv)?;
            for (name, f) in [("phi", &phi), ("g", &g)] {
                if f.expr().depends_on(Var::T) {
                    bail!("`energy` needs constant `{name}`");
                }
            }
            let x0 = c.x0.context("`energy` needs field `x0`")?;
            let (p, h2) = (phi.value(iv.0)?, g.value(iv.0)?);
            let sys = OdeSystem::ermakov_pinney(&phi, &g, settings.x_min);
            let tr = integrate(&sys, &[x0, c.v0], iv, &settings)?.require_complete()?;
            report::audit("energy", iv, |t| {
                Ok(autonomous_energy(p, h2, &tr.point(t)?))
            })?
        }
    };
    let mut failures = Vec::new();
    let ok = check(
        &mut failures,
        &format!("{} drift", audit.name),
        audit.drift,
        threshold,
    );
    Ok(Artifacts {
        report: to_json(&InvariantReport {
            kind: "verify-invariant",
            audit,
            threshold,
            verdict: verdict(ok),
        }),
        csv: None,
        failures,
    })
}

#[derive(Serialize)]
struct SymmetryScenarioReport {
    kind: &'static str,
    #[serde(flatten)]
    report: SymmetryReport,
    threshold: f64,
}

fn verify_symmetry(c: &VerifySymmetry, threshold: f64) -> Result<Artifacts> {
    let iv = interval(c.interval)?;
    let eq = &c.equation;
    let g = time_fn("equation.g", &eq.g, iv)?;
    let family = match &eq.phi {
        Some(_) => None,
        None => Some(compatible_family(&g, eq.c0, eq.m).context("building the compatible family")?),
    };
    let phi = match (&eq.phi, &family) {
        (Some(src), _) => time_fn("equation.phi", src, iv)?.expr().clone(),
        (None, Some(f)) => f.phi().expr().clone(),
        (None, None) => unreachable!(),
    };
    let phi = Expr::add(phi, Expr::Const(eq.phi_shift));
    let ode = SecondOrderOde::ermakov_pinney(&phi, g.expr());
    let needs_family = || {
        family.as_ref().context(
            "named symmetries `gamma-s` and `ansatz` need a compatible equation (omit `phi`)",
        )
    };
    let sym: Box<dyn PointSymmetry> = match &c.symmetry {
        SymmetrySpec::Named(name) => match name.as_str() {
            "gamma-s" => Box::new(gamma_s(needs_family()?)?),
            "ansatz" => Box::new(needs_family()?.ansatz().field()?),
            "time-translation" => Box::new(ExprField::parse("1", "0")?),
            other => {
                bail!("unknown symmetry {other:?} (expected gamma-s, ansatz or time-translation)")
            }
        },
        SymmetrySpec::Field { tau, xi } => {
            Box::new(ExprField::parse(tau, xi).context("symmetry field")?)
        }
    };
    let mut report = verify(sym.as_ref(), &ode, &default_samples(iv), threshold)?;
    // the expanded coefficient trees are unreadable; describe the inputs instead
    let phi_text = match &eq.phi {
        Some(src) => src.clone(),
        None => format!("compatible(G = {}, C0 = {}, M = {})", eq.g, eq.c0, eq.m),
    };
    let shift = if eq.phi_shift != 0.0 {
        format!(" + {}", eq.phi_shift)
    } else {
        String::new()
    };
    report.equation = format!("xddot = -({phi_text}{shift})*x + ({})/x^3", eq.g);
    if let SymmetrySpec::Named(name) = &c.symmetry {
        report.symmetry = name.clone();
    }
    let mut failures = Vec::new();
    check(
        &mut failures,
        "symmetry residual",
        report.max_residual,
        threshold,
    );
    Ok(Artifacts {
        report: to_json(&SymmetryScenarioReport {
            kind: "verify-symmetry",
            report,
            threshold,
        }),
        csv: None,
        failures,
    })
}

#[derive(Serialize)]
struct ReduceReport<'a> {
    kind: &'static str,
    g: &'a str,
    c0: f64,
    m: f64,
    omega: f64,
    scale: f64,
    invariance_defect: [f64; 2],
    autonomous_residual: f64,
    abel_residual: f64,
    abel_points: usize,
    abel_skipped: usize,
    threshold: f64,
    verdict: &'static str,
}

fn reduce(c: &Reduce, threshold: f64) -> Result<Artifacts> {
    let iv = interval(c.interval)?;
    let g = time_fn("g", &c.g, iv)?;
    let fam = compatible_family(&g, c.c0, c.m).context("building the compatible family")?;
    let chart = CanonicalChart::with_scale(&fam, c.scale)?;
    let settings = c.settings.resolve();
    let sys = OdeSystem::ermakov_pinney(fam.phi(), fam.g(), settings.x_min);
    let tr = integrate(&sys, &[c.x0, c.v0], iv, &settings)?.require_complete()?;
    let pts = grid(iv, c.grid_points)?;
    let orbit = chart.transform(&tr, &pts)?;
    let (dt, dx) = chart.invariance_defect(&epwb_core::symmetry::plane_samples(iv))?;
    let auto = orbit.autonomous_residual(fam.omega())?;
    let abel = abel_reduce(&orbit, fam.omega(), AbelForm::InverseCube)?;
    let mut failures = Vec::new();
    check(&mut failures, "chart invariance", dt.max(dx), threshold);
    check(&mut failures, "autonomous residual", auto, threshold);
    check(
        &mut failures,
        "phase-plane residual",
        abel.residual,
        threshold,
    );
    let report = ReduceReport {
        kind: "reduce",
        g: &c.g,
        c0: c.c0,
        m: c.m,
        omega: fam.omega(),
        scale: c.scale,
        invariance_defect: [dt, dx],
        autonomous_residual: auto,
        abel_residual: abel.residual,
        abel_points: abel.used,
        abel_skipped: abel.skipped,
        threshold,
        verdict: verdict(failures.is_empty()),
    };
    Ok(Artifacts {
        report: to_json(&report),
        csv: Some(orbit.to_csv()),
        failures,
    })
}

#[derive(Serialize)]
struct EliezerGreyReport<'a> {
    kind: &'static str,
    phi: &'a str,
    k: &'a str,
    l0: f64,
    radial_residual: f64,
    angular_momentum: InvariantAudit,
    cartesian_agreement: f64,
    chart_qualifies: bool,
    threshold: f64,
    verdict: &'static str,
}

fn eliezer_grey(c: &EliezerGrey, threshold: f64) -> Result<Artifacts> {
    let iv = interval(c.interval)?;
    let init = PolarState {
        r: c.r0,
        rdot: c.rdot0,
        theta: c.theta0,
        thetadot: c.thetadot0,
    };
    if c.r0.is_nan() || c.r0 <= X_MIN {
        bail!("r0 = {} must be positive", c.r0);
    }
    let cfg = CentralFieldConfig::new(
        time_fn("phi", &c.phi, iv)?,
        time_fn("k", &c.k, iv)?,
        init.angular_momentum(),
    );
    let settings = c.settings.resolve();
    let polar = simulate_polar(&cfg, init, iv, &settings)?;
    let cart = simulate_cartesian(&cfg, init, iv, &settings)?;
    let pts = grid(iv, c.grid_points)?;
    let radial = radial_ep_residual(&polar, &pts)?;
    let am = angular_momentum_check(&polar)?;
    let agree = cross_check(&polar, &cart, &pts)?;
    let mut failures = Vec::new();
    check(&mut failures, "radial residual", radial, threshold);
    check(&mut failures, "angular momentum drift", am.drift, threshold);
    check(
        &mut failures,
        "polar/cartesian disagreement",
        agree,
        threshold,
    );
    let report = EliezerGreyReport {
        kind: "eliezer-grey",
        phi: &c.phi,
        k: &c.k,
        l0: init.angular_momentum(),
        radial_residual: radial,
        angular_momentum: am,
        cartesian_agreement: agree,
        chart_qualifies: polar.qualifies_for_chart()?,
        threshold,
        verdict: verdict(failures.is_empty()),
    };
    Ok(Artifacts {
        report: to_json(&report),
        csv: Some(polar.to_csv_on_grid(&pts)?),
        failures,
    })
}

fn audit() -> Artifacts {
    match audit_all() {
        Ok(ledger) => {
            let failures = ledger
                .entries
                .iter()
                .filter(|e| e.verdict == "unresolved")
                .map(|e| format!("ledger entry {} is unresolved", e.id))
                .collect();
            Artifacts {
                report: ledger.to_json(),
                csv: None,
                failures,
            }
        }
        Err(e) => Artifacts {
            report: to_json(&serde_json::json!({ "error": e.to_string() })),
            csv: None,
            failures: vec![format!("audit failed: {e}")],
        },
    }
}

/// The `audit-all` subcommand: ledger JSON, optionally written to `out`.
pub fn run_audit(out: Option<&Path>) -> Result<Outcome> {
    let art = audit();
    let mut written = Vec::new();
    if let Some(p) = out {
        written.push(write(Path::new("."), p, &art.report)?);
    }
    Ok(Outcome {
        report: art.report,
        passed: art.failures.is_empty(),
        failures: art.failures,
        written,
    })
}

/// Exit status for an outcome: 0 when every check passed, 2 otherwise.
pub fn exit_code(outcome: &Outcome) -> i32 {
    if outcome.passed {
        0
    } else {
        2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_precedence() {
        assert_eq!(resolve_threshold(None, None).unwrap(), DEFAULT_THRESHOLD);
        assert_eq!(resolve_threshold(None, Some("1e-3")).unwrap(), 1e-3);
        assert_eq!(resolve_threshold(Some(0.5), Some("1e-3")).unwrap(), 0.5);
        assert!(resolve_threshold(None, Some("tight")).is_err());
        assert!(resolve_threshold(Some(-1.0), None).is_err());
    }
}
