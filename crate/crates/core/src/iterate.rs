//! Exponent bootstrap `tau_j = 2s + theta + p tau_{j-1}` and nonexistence certificates.
//!
//! A certificate records the exponent arithmetic a nonexistence argument rests
//! on: a solution bounded below by `|x|^{tau_0}` near the relevant pole is pushed
//! through the recurrence until the source term `|x|^{theta + p tau_J}` is no
//! longer integrable against the fundamental solution.

use serde::{Deserialize, Serialize};

use crate::classifier::{Domain, ProblemInstance};
use crate::error::{Error, Result};
use crate::exponents::critical_exponents;
use crate::spectrum::{solve_spectrum, SpectralData};

/// Longest trace built before giving up.
pub const TRACE_CAP: usize = 10_000;

/// Magnitude at which the iteration is reported as divergent.
pub const OVERFLOW_BOUND: f64 = 1e150;

/// Tolerance of the recurrence check in `verify_certificate`.
pub const RECURRENCE_TOL: f64 = 1e-12;

/// Allowance in terminal comparisons, matching the classifier's equality tolerance.
pub const TERMINAL_SLACK: f64 = 1e-9;

/// Relative tolerance under which two exponents are treated as equal.
pub const EXPONENT_EQ_TOL: f64 = 1e-10;

pub(crate) fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= EXPONENT_EQ_TOL * a.abs().max(b.abs()).max(1.0)
}

pub fn next_exponent(tau: f64, s: f64, theta: f64, p: f64) -> f64 {
    2.0 * s + theta + p * tau
}

/// `tau_j` without iterating; the geometric factor is formed with `expm1`/`ln_1p`
/// so that `p` near 1 does not cancel.
pub fn closed_form(tau0: f64, j: u32, s: f64, theta: f64, p: f64) -> Result<f64> {
    let step = next_exponent(tau0, s, theta, p) - tau0;
    let value = if p == 1.0 {
        tau0 + j as f64 * step
    } else if p > 0.0 {
        let growth = (j as f64 * (p - 1.0).ln_1p()).exp_m1() / (p - 1.0);
        tau0 + growth * step
    } else {
        tau0 + (1.0 - p.powi(j as i32)) / (1.0 - p) * step
    };
    if !value.is_finite() || value.abs() > OVERFLOW_BOUND {
        return Err(Error::Overflow(format!("tau_{j} exceeds {OVERFLOW_BOUND:e}")));
    }
    Ok(value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Decreasing,
    Increasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationConfig {
    pub tau0: f64,
    pub s: f64,
    pub theta: f64,
    pub p: f64,
    pub direction: Direction,
}

impl IterationConfig {
    /// Fixed point `(2s + theta)/(1 - p)`, the limit when `p < 1`.
    pub fn limit(&self) -> Option<f64> {
        (self.p < 1.0).then(|| (2.0 * self.s + self.theta) / (1.0 - self.p))
    }

    /// Checks that the sequence moves monotonically in the configured direction.
    ///
    /// Since `tau_j - tau_{j-1} = p^{j-1} (tau_1 - tau_0)`, monotonicity is
    /// exactly the sign of the first step.
    pub fn check_hypotheses(&self) -> Result<()> {
        let IterationConfig { tau0, s, theta, p, direction } = *self;
        if !(p > 0.0) || !(tau0 < 0.0) {
            return Err(Error::HypothesisViolation(format!("need p > 0 and tau0 < 0, got p = {p}, tau0 = {tau0}")));
        }
        let crit = 1.0 + (2.0 * s + theta) / (-tau0);
        let ok = match direction {
            Direction::Decreasing => p > crit && (p >= 1.0 || 2.0 * s + theta < 0.0),
            Direction::Increasing => p < crit,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::HypothesisViolation(format!(
                "{direction:?} needs p {} 1 + (2s+theta)/(-tau0) = {crit}, got p = {p}",
                if direction == Direction::Decreasing { ">" } else { "<" }
            )))
        }
    }
}

/// Minimal `j0 >= 1` with `tau_{j0}` past `tau_bar` and `tau_{j0-1}` not.
pub fn find_crossing(config: &IterationConfig, tau_bar: f64) -> Result<usize> {
    config.check_hypotheses()?;
    let IterationConfig { tau0, s, theta, p, direction } = *config;
    let past = |t: f64| match direction {
        Direction::Decreasing => t <= tau_bar,
        Direction::Increasing => t >= tau_bar,
    };
    if past(tau0) {
        return Err(Error::HypothesisViolation(format!("tau_bar = {tau_bar} is not beyond tau0 = {tau0}")));
    }
    if let Some(lim) = config.limit() {
        if !past(lim) || lim == tau_bar {
            return Err(Error::Unreachable(format!("tau_bar = {tau_bar} is beyond the limit {lim}")));
        }
    }
    let mut tau = tau0;
    for j in 1..=TRACE_CAP {
        tau = next_exponent(tau, s, theta, p);
        if !tau.is_finite() || tau.abs() > OVERFLOW_BOUND {
            return Err(Error::Overflow(format!("tau_{j} exceeds {OVERFLOW_BOUND:e}")));
        }
        if past(tau) {
            return Ok(j);
        }
    }
    Err(Error::Overflow(format!("no crossing within {TRACE_CAP} steps")))
}

/// Which pole the argument runs at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// The origin; exponents start at `tau_+` and decrease.
    Punctured,
    /// Infinity; exponents start at `tau_-` and increase.
    Exterior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertificateKind {
    BootstrapPunctured,
    BootstrapExterior,
    IntegrabilityImmediate,
    CoefficientShift,
    LinearReduction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub side: Side,
    pub tau_trace: Vec<f64>,
    pub terminal: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shifted_mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_prime: Option<f64>,
}

fn terminal_text(side: Side) -> String {
    match side {
        Side::Punctured => {
            "theta + p*tau_J <= tau_minus - 2s (equivalently theta + p*tau_J + tau_plus + N <= 0)".into()
        }
        Side::Exterior => "theta + p*tau_J >= tau_plus - 2s".into(),
    }
}

/// Terminal test and its dual form; both must agree up to the slack.
fn terminal_holds(side: Side, sp: &SpectralData, theta: f64, p: f64, tau: f64) -> (bool, bool) {
    let s = sp.params.s;
    let n = sp.params.dim();
    let src = theta + p * tau;
    match side {
        Side::Punctured => (src <= sp.tau_minus - 2.0 * s + TERMINAL_SLACK, src + sp.tau_plus + n <= TERMINAL_SLACK),
        Side::Exterior => (src >= sp.tau_plus - 2.0 * s - TERMINAL_SLACK, src + sp.tau_minus + n >= -TERMINAL_SLACK),
    }
}

fn start_exponent(side: Side, sp: &SpectralData) -> f64 {
    match side {
        Side::Punctured => sp.tau_plus,
        Side::Exterior => sp.tau_minus,
    }
}

/// Bootstrap from the initial rate until the terminal test fires.
fn bootstrap_trace(side: Side, sp: &SpectralData, theta: f64, p: f64) -> Result<Vec<f64>> {
    let s = sp.params.s;
    let tau0 = start_exponent(side, sp);
    let done = |t: f64| terminal_holds(side, sp, theta, p, t).0;
    if done(tau0) {
        return Ok(vec![tau0]);
    }
    let config = IterationConfig {
        tau0,
        s,
        theta,
        p,
        direction: match side {
            Side::Punctured => Direction::Decreasing,
            Side::Exterior => Direction::Increasing,
        },
    };
    config.check_hypotheses()?;
    let tau_bar = match side {
        Side::Punctured => (sp.tau_minus - 2.0 * s - theta) / p,
        Side::Exterior => (sp.tau_plus - 2.0 * s - theta) / p,
    };
    if let Some(lim) = config.limit() {
        let reachable = match side {
            Side::Punctured => lim < tau_bar,
            Side::Exterior => lim > tau_bar,
        };
        if !reachable {
            return Err(Error::Unreachable(format!(
                "the iteration converges to {lim} and never reaches the terminal exponent {tau_bar}"
            )));
        }
    }
    let mut trace = vec![tau0];
    let mut tau = tau0;
    while trace.len() < TRACE_CAP {
        tau = next_exponent(tau, s, theta, p);
        if !tau.is_finite() || tau.abs() > OVERFLOW_BOUND {
            return Err(Error::Overflow(format!("trace exceeded {OVERFLOW_BOUND:e}")));
        }
        trace.push(tau);
        if done(tau) {
            return Ok(trace);
        }
    }
    Err(Error::Overflow(format!("trace longer than {TRACE_CAP} entries")))
}

fn shifted_spectrum(sp: &SpectralData, sigma0: f64) -> Result<SpectralData> {
    solve_spectrum(&sp.params, sp.mu - sigma0)
}

fn build_for_side(side: Side, inst: &ProblemInstance, sp: &SpectralData) -> Result<Certificate> {
    let s = sp.params.s;
    let (theta, p) = (inst.theta, inst.p);
    if sp.mu < sp.mu0 {
        return Err(Error::NotCertifiable("mu below mu0 has no bootstrap argument".into()));
    }
    let text = terminal_text(side);
    if approx_eq(theta, -2.0 * s) && approx_eq(p, 1.0) {
        let mu_prime = -inst.q_low;
        if sp.mu + mu_prime < sp.mu0 {
            return Ok(Certificate {
                kind: CertificateKind::LinearReduction,
                side,
                tau_trace: vec![],
                terminal: "mu + mu' < mu0 with mu' = -q_low".into(),
                sigma0: None,
                shifted_mu: None,
                mu_prime: Some(mu_prime),
            });
        }
        return Err(Error::NotCertifiable(format!("q_low = {} does not exceed mu - mu0", inst.q_low)));
    }
    let exps = critical_exponents(sp, theta);
    let critical = match side {
        Side::Punctured => exps.p_sharp.finite().filter(|&ps| ps > 1.0 && approx_eq(p, ps)),
        Side::Exterior => Some(exps.p_star).filter(|&ps| ps > 1.0 && approx_eq(p, ps)),
    };
    if critical.is_some() && !sp.degenerate {
        let sigma0 = (sp.mu - sp.mu0) / 2.0;
        let shifted = shifted_spectrum(sp, sigma0)?;
        let trace = bootstrap_trace(side, &shifted, theta, p)?;
        return Ok(Certificate {
            kind: CertificateKind::CoefficientShift,
            side,
            tau_trace: trace,
            terminal: text,
            sigma0: Some(sigma0),
            shifted_mu: Some(shifted.mu),
            mu_prime: None,
        });
    }
    let trace = bootstrap_trace(side, sp, theta, p)?;
    let kind = if trace.len() == 1 {
        CertificateKind::IntegrabilityImmediate
    } else if side == Side::Punctured {
        CertificateKind::BootstrapPunctured
    } else {
        CertificateKind::BootstrapExterior
    };
    Ok(Certificate { kind, side, tau_trace: trace, terminal: text, sigma0: None, shifted_mu: None, mu_prime: None })
}

/// Builds the certificate behind a nonexistence verdict.
///
/// For the whole space the punctured argument is tried first, then the exterior one.
pub fn build_certificate(inst: &ProblemInstance, sp: &SpectralData) -> Result<Certificate> {
    inst.validate()?;
    match inst.domain {
        Domain::Punctured => build_for_side(Side::Punctured, inst, sp),
        Domain::Exterior => build_for_side(Side::Exterior, inst, sp),
        Domain::WholeSpace => {
            build_for_side(Side::Punctured, inst, sp).or_else(|_| build_for_side(Side::Exterior, inst, sp))
        }
    }
}

/// Outcome of replaying a certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateCheck {
    pub valid: bool,
    pub reasons: Vec<String>,
}

fn check_trace(side: Side, trace: &[f64], sp: &SpectralData, theta: f64, p: f64, reasons: &mut Vec<String>) {
    let s = sp.params.s;
    let Some(&first) = trace.first() else {
        reasons.push("empty trace".into());
        return;
    };
    let start = start_exponent(side, sp);
    if (first - start).abs() > RECURRENCE_TOL * start.abs().max(1.0) {
        reasons.push(format!("trace starts at {first}, expected the initial rate {start}"));
    }
    for (j, w) in trace.windows(2).enumerate() {
        let expect = next_exponent(w[0], s, theta, p);
        if (w[1] - expect).abs() > RECURRENCE_TOL * expect.abs().max(1.0) {
            reasons.push(format!("recurrence violated at entry {}", j + 1));
        }
    }
    for (j, &t) in trace.iter().enumerate().skip(1) {
        if !sp.inside(t) {
            reasons.push(format!("entry {j} = {t} outside (tau_minus, tau_plus)"));
        }
    }
    let last = *trace.last().unwrap();
    let (a, b) = terminal_holds(side, sp, theta, p, last);
    if !a {
        reasons.push("terminal condition fails".into());
    }
    if a != b {
        reasons.push("terminal condition and its dual form disagree".into());
    }
}

/// Replays every obligation recorded in `cert`.
pub fn verify_certificate(cert: &Certificate, inst: &ProblemInstance, sp: &SpectralData) -> CertificateCheck {
    let mut reasons = Vec::new();
    if let Err(e) = inst.validate() {
        reasons.push(e.to_string());
    }
    let (theta, p) = (inst.theta, inst.p);
    let side_matches = match cert.kind {
        CertificateKind::BootstrapPunctured => cert.side == Side::Punctured,
        CertificateKind::BootstrapExterior => cert.side == Side::Exterior,
        _ => true,
    };
    if !side_matches {
        reasons.push("kind and side disagree".into());
    }
    match cert.kind {
        CertificateKind::BootstrapPunctured | CertificateKind::BootstrapExterior => {
            if cert.tau_trace.len() < 2 {
                reasons.push("bootstrap trace needs at least one step".into());
            }
            check_trace(cert.side, &cert.tau_trace, sp, theta, p, &mut reasons);
        }
        CertificateKind::IntegrabilityImmediate => {
            if cert.tau_trace.len() != 1 {
                reasons.push("immediate certificate must hold a single entry".into());
            }
            check_trace(cert.side, &cert.tau_trace, sp, theta, p, &mut reasons);
        }
        CertificateKind::CoefficientShift => match cert.sigma0 {
            Some(sigma0) if sigma0 > 0.0 && sp.mu - sigma0 >= sp.mu0 => match shifted_spectrum(sp, sigma0) {
                Ok(shifted) => {
                    let exps = critical_exponents(&shifted, theta);
                    let strict = match cert.side {
                        Side::Punctured => exps.p_sharp.finite().is_some_and(|ps| p > ps),
                        Side::Exterior => p < exps.p_star,
                    };
                    if !strict {
                        reasons.push("shifted problem is not strictly off-critical".into());
                    }
                    check_trace(cert.side, &cert.tau_trace, &shifted, theta, p, &mut reasons);
                }
                Err(e) => reasons.push(format!("shifted spectrum: {e}")),
            },
            _ => reasons.push("sigma0 must satisfy 0 < sigma0 <= mu - mu0".into()),
        },
        CertificateKind::LinearReduction => {
            let s = sp.params.s;
            if !(approx_eq(theta, -2.0 * s) && approx_eq(p, 1.0)) {
                reasons.push("linear reduction needs theta = -2s and p = 1".into());
            }
            match cert.mu_prime {
                Some(mp) if (mp + inst.q_low).abs() <= 1e-15 * inst.q_low.max(1.0) => {
                    if !(sp.mu + mp < sp.mu0) {
                        reasons.push("mu + mu' is not below mu0".into());
                    }
                }
                _ => reasons.push("mu' must equal -q_low".into()),
            }
        }
    }
    CertificateCheck { valid: reasons.is_empty(), reasons }
}
