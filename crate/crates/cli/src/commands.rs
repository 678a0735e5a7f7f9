//! Command handlers. Each returns the `result` payload of the output envelope.

use std::path::Path;

use fhl_core::classifier::{self, Domain, ProblemInstance, Verdict};
use fhl_core::exponents::{critical_exponents, degenerate_exponent, exponent_facts};
use fhl_core::fracop::{hardy_apply_numeric, QuadratureConfig};
use fhl_core::iterate::{build_certificate, verify_certificate};
use fhl_core::manifest::{load_manifest, manifest_check, MANIFEST_JSON};
use fhl_core::radialfn::{apply_hardy_closed, apply_hardy_without_binomials, fundamental_pair, kelvin, RadialFunction};
use fhl_core::solutions::{recipe_residuals, SolutionRecipe};
use fhl_core::specfun::{self, Params};
use fhl_core::spectrum::{solve_spectrum, SpectralData};
use fhl_core::Error;
use serde::Serialize;
use serde_json::{json, Value};

use crate::output::{fmt_f64, to_value};
use crate::{MuArg, Root};

pub const EXIT_IO: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_VERIFICATION: u8 = 3;

/// Environment variable overriding the default quadrature `rel_tol`.
pub const QUAD_TOL_VAR: &str = "FHL_QUAD_TOL";

pub enum Report {
    Json {
        result: Value,
        warnings: Vec<String>,
        failed: bool,
    },
    /// Printed verbatim without an envelope.
    Raw(String),
}

impl Report {
    fn ok(result: Value) -> Report {
        Report::Json { result, warnings: Vec::new(), failed: false }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_USAGE, kind: "usage", message: message.into() }
    }

    fn io(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_IO, kind: "io", message: message.into() }
    }

    pub fn to_value(&self) -> Value {
        json!({ "kind": self.kind, "message": self.message })
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Pole(_) => "pole",
        Error::Domain(_) => "domain",
        Error::Accuracy(_) => "accuracy",
        Error::SubcriticalMu { .. } => "subcritical_mu",
        Error::InvalidInstance(_) => "invalid_instance",
        Error::Overflow(_) => "overflow",
        Error::HypothesisViolation(_) => "hypothesis_violation",
        Error::Unreachable(_) => "unreachable",
        Error::NotCertifiable(_) => "not_certifiable",
        Error::Region(_) => "region",
        Error::Degenerate(_) => "degenerate",
        Error::VerificationFailure { .. } => "verification_failure",
        Error::ManifestMismatch(_) => "manifest_mismatch",
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match e {
            Error::Accuracy(_) | Error::VerificationFailure { .. } | Error::ManifestMismatch(_) => EXIT_VERIFICATION,
            _ => EXIT_USAGE,
        };
        Failure { code, kind: error_kind(&e), message: e.to_string() }
    }
}

/// Defaults, then `FHL_QUAD_TOL`, then the `--config` file.
pub fn quadrature_config(path: Option<&Path>) -> Result<QuadratureConfig, Failure> {
    let mut cfg = QuadratureConfig::default();
    if let Ok(text) = std::env::var(QUAD_TOL_VAR) {
        cfg.rel_tol = text.trim().parse().map_err(|e| Failure::usage(format!("{QUAD_TOL_VAR}={text}: {e}")))?;
    }
    if let Some(path) = path {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
        let overrides: Value =
            serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        let Value::Object(overrides) = overrides else {
            return Err(Failure::usage(format!("{}: expected a JSON object", path.display())));
        };
        let mut merged = to_value(&cfg);
        for (k, v) in overrides {
            if merged.get(&k).is_none() {
                return Err(Failure::usage(format!("{}: unknown setting {k}", path.display())));
            }
            merged[&k] = v;
        }
        cfg = serde_json::from_value(merged).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn resolve_mu(params: &Params, mu: MuArg) -> Result<f64, Failure> {
    match mu {
        MuArg::Value(v) if v.is_finite() => Ok(v),
        MuArg::Value(v) => Err(Failure::usage(format!("mu = {v} is not finite"))),
        MuArg::Critical => Ok(specfun::mu_zero(params)?),
    }
}

fn check_radii(radii: &[f64]) -> Result<(), Failure> {
    match radii.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        Some(r) => Err(Failure::usage(format!("radius {r} must be positive and finite"))),
        None if radii.is_empty() => Err(Failure::usage("no radii given")),
        None => Ok(()),
    }
}

fn check_tol(tol: f64) -> Result<(), Failure> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Failure::usage(format!("tol = {tol} must be positive")))
    }
}

fn spectrum_value(sp: &SpectralData) -> Value {
    json!({
        "mu": sp.mu,
        "mu0": sp.mu0,
        "tau_minus": sp.tau_minus,
        "tau_plus": sp.tau_plus,
        "degenerate": sp.degenerate,
    })
}

pub fn roots(params: &Params, mu: MuArg) -> Result<Report, Failure> {
    let sp = solve_spectrum(params, resolve_mu(params, mu)?)?;
    Ok(Report::ok(spectrum_value(&sp)))
}

pub fn exponents(params: &Params, mu: MuArg, theta: f64) -> Result<Report, Failure> {
    if !theta.is_finite() {
        return Err(Failure::usage(format!("theta = {theta} is not finite")));
    }
    let sp = solve_spectrum(params, resolve_mu(params, mu)?)?;
    let ex = critical_exponents(&sp, theta);
    let mut result = json!({
        "spectrum": spectrum_value(&sp),
        "exponents": to_value(&ex),
        "facts": to_value(&exponent_facts(&ex, &sp)),
    });
    if sp.degenerate {
        result["degenerate_exponent"] = json!(degenerate_exponent(&sp, theta));
    }
    Ok(Report::ok(result))
}

/// Erratum notes attached to a rule in the shipped manifest.
fn erratum_warnings(rule: &str) -> Vec<String> {
    let Ok(manifest) = load_manifest(MANIFEST_JSON) else {
        return vec!["the shipped rule manifest could not be read".into()];
    };
    manifest
        .rules
        .iter()
        .filter(|e| e.rule_id == rule)
        .filter_map(|e| e.erratum.as_ref().map(|text| format!("rule {rule}: {text}")))
        .collect()
}

fn verdict_report(v: &Verdict, result: Value) -> Report {
    Report::Json { result, warnings: erratum_warnings(v.rule()), failed: false }
}

pub fn classify(inst: &ProblemInstance) -> Result<Report, Failure> {
    let v = classifier::classify(inst)?;
    Ok(verdict_report(&v, to_value(&v)))
}

pub fn certificate(inst: &ProblemInstance) -> Result<Report, Failure> {
    let v = classifier::classify(inst)?;
    let not_certifiable = |reason: String| {
        verdict_report(&v, json!({ "certifiable": false, "reason": reason, "verdict": v.label(), "rule": v.rule() }))
    };
    let sp = match solve_spectrum(&inst.params, inst.mu) {
        Ok(sp) => sp,
        Err(e @ Error::SubcriticalMu { .. }) => return Ok(not_certifiable(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    match build_certificate(inst, &sp) {
        Ok(cert) => {
            let check = verify_certificate(&cert, inst, &sp);
            let result = json!({
                "certifiable": true,
                "certificate": to_value(&cert),
                "verified": check.valid,
                "reasons": check.reasons,
                "verdict": v.label(),
                "rule": v.rule(),
            });
            let mut report = verdict_report(&v, result);
            if let Report::Json { failed, .. } = &mut report {
                *failed = !check.valid;
            }
            Ok(report)
        }
        Err(
            e @ (Error::NotCertifiable(_) | Error::Unreachable(_) | Error::HypothesisViolation(_) | Error::Overflow(_)),
        ) => Ok(not_certifiable(e.to_string())),
        Err(e) => Err(e.into()),
    }
}

fn recipe_of(inst: &ProblemInstance) -> Result<(Verdict, Option<SolutionRecipe>), Failure> {
    let v = classifier::classify(inst)?;
    let recipe = v.recipe().cloned();
    Ok((v, recipe))
}

pub fn recipe(inst: &ProblemInstance) -> Result<Report, Failure> {
    let (v, recipe) = recipe_of(inst)?;
    let result = match (&v, recipe) {
        (Verdict::Existence { rule, citation, .. }, Some(recipe)) => {
            json!({ "rule": rule, "citation": citation, "recipe": to_value(&recipe), "verdict": v.label() })
        }
        _ => json!({
            "recipe": null,
            "rule": v.rule(),
            "verdict": v.label(),
            "reason": "only existence verdicts carry a recipe",
        }),
    };
    Ok(verdict_report(&v, result))
}

pub fn verify_recipe(
    inst: &ProblemInstance,
    radii: Option<&[f64]>,
    tol: f64,
    t_factor: f64,
    cfg: &QuadratureConfig,
) -> Result<Report, Failure> {
    check_tol(tol)?;
    if !(t_factor >= 1.0 && t_factor.is_finite()) {
        return Err(Failure::usage(format!("t-factor = {t_factor} must be at least 1")));
    }
    let (v, recipe) = recipe_of(inst)?;
    let Some(mut recipe) = recipe else {
        return Err(Failure {
            code: EXIT_USAGE,
            kind: "no_recipe",
            message: format!("rule {} gives a {} verdict, which has no recipe", v.rule(), v.label()),
        });
    };
    if let SolutionRecipe::LogPower { t_min, .. } = &mut recipe {
        *t_min *= t_factor;
    }
    let radii = match radii {
        Some(r) => r.to_vec(),
        None => recipe.sample_radii(10),
    };
    check_radii(&radii)?;
    let sp = solve_spectrum(&inst.params, inst.mu)?;
    let report = recipe_residuals(&recipe, inst, &sp, &radii, cfg, tol)?;
    let result = json!({
        "rule": v.rule(),
        "recipe": to_value(&recipe),
        "tol": tol,
        "rows": to_value(&report.rows),
        "passed": report.passed,
    });
    let mut warnings = erratum_warnings(v.rule());
    if matches!(recipe, SolutionRecipe::LogPower { .. }) {
        warnings
            .push("log-power recipes are supersolutions for every t >= t_min; the residual check is one-sided".into());
    }
    Ok(Report::Json { result, warnings, failed: !report.passed })
}

pub struct PhaseGrid {
    pub params: Params,
    pub mu: f64,
    pub domain: Domain,
    pub thetas: Vec<f64>,
    pub ps: Vec<f64>,
    pub q_low: f64,
    pub q_up: Option<f64>,
}

/// One-letter verdict codes used in the CSV.
pub fn verdict_code(label: &str) -> &'static str {
    match label {
        "nonexistence" => "N",
        "existence" => "E",
        _ => "U",
    }
}

pub fn phase(grid: &PhaseGrid, out: Option<&Path>) -> Result<Report, Failure> {
    let ps: Vec<f64> = grid.ps.iter().copied().filter(|&p| p > 0.0).collect();
    if ps.is_empty() {
        return Err(Failure::usage("the p range has no positive points"));
    }
    let cells = classifier::phase_grid(grid.params, grid.mu, grid.domain, grid.q_low, grid.q_up, &grid.thetas, &ps)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Failure::io(e.to_string());
    w.write_record(["theta", "p", "verdict", "rule"]).map_err(csv_err)?;
    let mut counts = std::collections::BTreeMap::<&str, usize>::new();
    for cell in cells.iter().flatten() {
        let code = verdict_code(&cell.verdict);
        *counts.entry(code).or_default() += 1;
        w.write_record([fmt_f64(cell.theta).as_str(), fmt_f64(cell.p).as_str(), code, cell.rule.as_str()])
            .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::io(e.to_string()))?;
    let text = String::from_utf8(bytes).expect("CSV of ASCII fields");
    let Some(path) = out else {
        return Ok(Report::Raw(text));
    };
    std::fs::write(path, &text).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
    Ok(Report::ok(json!({
        "out": path.display().to_string(),
        "rows": grid.thetas.len() * ps.len(),
        "theta_points": grid.thetas.len(),
        "p_points": ps.len(),
        "counts": counts,
    })))
}

/// One radius of a numerical identity check.
#[derive(Debug, Serialize)]
struct Row {
    #[serde(skip_serializing_if = "Option::is_none")]
    function: Option<&'static str>,
    r: f64,
    numeric: f64,
    closed_form: f64,
    abs_diff: f64,
    rel_diff: f64,
    /// What `abs_diff` is measured against.
    scale: f64,
    error_estimate: f64,
    evaluations: u64,
    passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    uncorrected: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    uncorrected_rel_diff: Option<f64>,
}

impl Row {
    fn new(r: f64, numeric: f64, closed_form: f64, scale: f64, error_estimate: f64, evaluations: u64, tol: f64) -> Row {
        let abs_diff = (numeric - closed_form).abs();
        Row {
            function: None,
            r,
            numeric,
            closed_form,
            abs_diff,
            rel_diff: abs_diff / scale,
            scale,
            error_estimate,
            evaluations,
            passed: abs_diff <= tol * scale,
            uncorrected: None,
            uncorrected_rel_diff: None,
        }
    }
}

fn identity_report(identity: &str, tol: f64, rows: Vec<Row>, extra: Value, warnings: Vec<String>) -> Report {
    let passed = rows.iter().all(|r| r.passed);
    let mut result = json!({ "identity": identity, "tol": tol, "rows": to_value(&rows), "passed": passed });
    if let (Value::Object(result), Value::Object(extra)) = (&mut result, extra) {
        result.extend(extra);
    }
    Report::Json { result, warnings, failed: !passed }
}

/// Compares quadrature with the closed form, relative to the closed form.
fn closed_form_rows(
    f: &RadialFunction,
    params: &Params,
    mu: f64,
    radii: &[f64],
    tol: f64,
    cfg: &QuadratureConfig,
) -> Result<Vec<Row>, Failure> {
    let closed = apply_hardy_closed(f, params, mu)?;
    radii
        .iter()
        .map(|&r| {
            let q = hardy_apply_numeric(f, r, params, mu, cfg)?;
            let c = closed.eval(r);
            Ok(Row::new(r, q.value, c, c.abs(), q.error_estimate, q.evaluations, tol))
        })
        .collect()
}

pub fn verify_power(
    params: &Params,
    mu: f64,
    tau: f64,
    radii: &[f64],
    tol: f64,
    cfg: &QuadratureConfig,
) -> Result<Report, Failure> {
    check_radii(radii)?;
    check_tol(tol)?;
    let f = RadialFunction::single(params, 1.0, tau, 0)?;
    let rows = closed_form_rows(&f, params, mu, radii, tol, cfg)?;
    Ok(identity_report("power", tol, rows, json!({ "mu": mu, "tau": tau }), Vec::new()))
}

pub fn verify_log_power(
    params: &Params,
    mu: f64,
    m: u32,
    root: Root,
    radii: &[f64],
    tol: f64,
    cfg: &QuadratureConfig,
) -> Result<Report, Failure> {
    check_radii(radii)?;
    check_tol(tol)?;
    let sp = solve_spectrum(params, mu)?;
    let tau = match root {
        Root::Plus => sp.tau_plus,
        Root::Minus => sp.tau_minus,
    };
    let f = RadialFunction::single(params, 1.0, tau, m)?;
    let literal = apply_hardy_without_binomials(&f, params, mu)?;
    let mut rows = closed_form_rows(&f, params, mu, radii, tol, cfg)?;
    for row in &mut rows {
        let u = literal.eval(row.r);
        row.uncorrected = Some(u);
        row.uncorrected_rel_diff = Some((row.numeric - u).abs() / row.scale);
    }
    let warnings = vec![format!(
        "the closed form weights the i-th symbol derivative by C(m, i); the published expansion omits these \
         factors, and the uncorrected column shows it (identical for m <= 1, wrong for m >= 2)"
    )];
    Ok(identity_report("log-power", tol, rows, json!({ "mu": mu, "tau": tau, "m": m }), warnings))
}

pub fn verify_kelvin(
    params: &Params,
    mu: f64,
    tau: f64,
    radii: &[f64],
    tol: f64,
    cfg: &QuadratureConfig,
) -> Result<Report, Failure> {
    check_radii(radii)?;
    check_tol(tol)?;
    let f = RadialFunction::single(params, 1.0, tau, 0)?;
    let fk = kelvin(&f, params)?;
    let weight = -2.0 * params.s - params.dim();
    let rows = radii
        .iter()
        .map(|&r| {
            let lhs = hardy_apply_numeric(&fk, r, params, mu, cfg)?;
            let inner = hardy_apply_numeric(&f, 1.0 / r, params, mu, cfg)?;
            let rhs = r.powf(weight) * inner.value;
            let err = lhs.error_estimate + r.powf(weight) * inner.error_estimate;
            Ok(Row::new(r, lhs.value, rhs, rhs.abs(), err, lhs.evaluations + inner.evaluations, tol))
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let extra = json!({
        "mu": mu,
        "tau": tau,
        "kelvin_tau": fk.terms()[0].tau,
        "closed_form": "r^(-2s-N) (L f)(1/r), itself evaluated by quadrature",
    });
    Ok(identity_report("kelvin", tol, rows, extra, Vec::new()))
}

/// `sum |c| r^{tau-2s} max(1, |ln r|)^m`, the size of each term of `L f` before cancellation.
fn natural_scale(f: &RadialFunction, params: &Params, r: f64) -> f64 {
    f.terms()
        .iter()
        .map(|t| t.coef.abs() * r.powf(t.tau - 2.0 * params.s) * r.ln().abs().max(1.0).powi(t.m as i32))
        .sum()
}

pub fn verify_fundamental(
    params: &Params,
    mu: f64,
    radii: &[f64],
    tol: f64,
    cfg: &QuadratureConfig,
) -> Result<Report, Failure> {
    check_radii(radii)?;
    check_tol(tol)?;
    let sp = solve_spectrum(params, mu)?;
    let pair = fundamental_pair(&sp)?;
    let mut rows = Vec::new();
    for (name, f) in [("phi", &pair.phi), ("gamma", &pair.gamma)] {
        let closed = apply_hardy_closed(f, params, mu)?;
        for &r in radii {
            // The exact value is zero, so accuracy is only meaningful relative to the term sizes.
            let scale = natural_scale(f, params, r);
            let local = QuadratureConfig { abs_tol: cfg.abs_tol.max(cfg.rel_tol * scale), ..*cfg };
            let q = hardy_apply_numeric(f, r, params, mu, &local)?;
            let mut row = Row::new(r, q.value, closed.eval(r), scale, q.error_estimate, q.evaluations, tol);
            row.function = Some(name);
            rows.push(row);
        }
    }
    let extra = json!({ "spectrum": spectrum_value(&sp), "phi": to_value(&pair.phi), "gamma": to_value(&pair.gamma) });
    Ok(identity_report("fundamental", tol, rows, extra, Vec::new()))
}

pub fn manifest() -> Result<Report, Failure> {
    Ok(Report::ok(to_value(&manifest_check()?)))
}
