//! Rule table mapping `(N, s, mu, theta, p, domain)` to a verdict.
//!
//! Rules are tried in a fixed order per domain and the first match wins.
//! Comparisons against the critical exponents use the relative tolerance
//! `EXPONENT_EQ_TOL`; points within it of a boundary count as on it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{critical_exponents, CriticalExponents};
use crate::iterate::{approx_eq, build_certificate, Certificate, Side};
use crate::solutions::{log_supersolution, pure_power_solution, SolutionRecipe};
use crate::specfun::{self, Params};
use crate::spectrum::{solve_spectrum, SpectralData, DEGENERACY_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Punctured,
    Exterior,
    WholeSpace,
}

/// One instance of `L u >= Q(x) u^p` with `q_low |x|^theta <= Q <= q_up |x|^theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    #[serde(flatten)]
    pub params: Params,
    pub mu: f64,
    pub theta: f64,
    pub p: f64,
    pub domain: Domain,
    pub q_low: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_up: Option<f64>,
}

impl ProblemInstance {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.params.require_fractional()?;
        for (name, v) in [("mu", self.mu), ("theta", self.theta), ("p", self.p), ("q_low", self.q_low)] {
            if !v.is_finite() {
                return Err(Error::InvalidInstance(format!("{name} = {v} is not finite")));
            }
        }
        if !(self.p > 0.0) {
            return Err(Error::InvalidInstance(format!("p = {} must be positive", self.p)));
        }
        if !(self.q_low > 0.0) {
            return Err(Error::InvalidInstance(format!("q_low = {} must be positive", self.q_low)));
        }
        if let Some(q_up) = self.q_up {
            if !q_up.is_finite() || q_up < self.q_low {
                return Err(Error::InvalidInstance(format!("q_up = {q_up} must be finite and at least q_low")));
            }
        }
        Ok(())
    }
}

/// Every rule identifier, in table order.
pub const RULE_IDS: [&str; 20] = [
    "P1", "P2", "P3", "P4", "P5", "P6", "P7", "E0", "E1", "E2", "E3", "E4", "E5", "E6", "W1", "W2", "W3", "W4", "W5",
    "W6",
];

/// Short statement of the result a rule rests on.
pub fn citation(rule: &str) -> &'static str {
    match rule {
        "P1" => "punctured ball, critical coupling: no positive solution once p reaches the common critical exponent",
        "P2" => "punctured ball, theta > -2s: no positive solution for p at or above p#",
        "P3" => "punctured ball, theta = -2s: no positive solution for p > 1, or p = 1 with q_low > mu - mu0",
        "P4" => "punctured ball, theta < -2s: no positive solution for p above p*",
        "P5" => "punctured ball, critical p = p#: explicit log-corrected supersolution",
        "P6" => "punctured ball, mu >= 0: no positive solution when the source is not integrable at the origin",
        "E0" => "exterior domain, mu below mu0: no positive supersolution of the linear problem",
        "E1" => "exterior domain, critical coupling: no positive solution for p up to the common critical exponent",
        "E2" => "exterior domain, theta > -2s: no positive solution for p up to p*",
        "E3" => {
            "exterior domain, theta = -2s: no positive solution for p < 1 when mu < 0, or p = 1 with q_low > mu - mu0"
        }
        "E4" => "exterior domain, theta < -2s: no positive solution for 0 < p < p# when mu < 0",
        "E5" => "exterior domain, critical p = p*: explicit log-corrected supersolution",
        "W1" => "whole space, critical coupling: nonexistence inherited from the punctured or exterior case",
        "W2" => "whole space: nonexistence inherited from the punctured or exterior case",
        "W3" => "whole space: explicit power solution with exponent strictly between tau_- and tau_+",
        "W4" => "whole space, p = p#: log-corrected supersolution near the origin",
        "W5" => "whole space, p = p*: log-corrected supersolution near infinity",
        _ => "no classification result covers this region",
    }
}

/// The classifier's answer for one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Nonexistence {
        rule: String,
        citation: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        certificate: Option<Certificate>,
    },
    Existence {
        rule: String,
        citation: String,
        recipe: SolutionRecipe,
    },
    Unknown {
        rule: String,
        reason: String,
    },
}

impl Verdict {
    pub fn rule(&self) -> &str {
        match self {
            Verdict::Nonexistence { rule, .. } | Verdict::Existence { rule, .. } | Verdict::Unknown { rule, .. } => {
                rule
            }
        }
    }

    /// `"nonexistence"`, `"existence"` or `"unknown"`.
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Nonexistence { .. } => "nonexistence",
            Verdict::Existence { .. } => "existence",
            Verdict::Unknown { .. } => "unknown",
        }
    }

    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            Verdict::Nonexistence { certificate, .. } => certificate.as_ref(),
            _ => None,
        }
    }

    pub fn recipe(&self) -> Option<&SolutionRecipe> {
        match self {
            Verdict::Existence { recipe, .. } => Some(recipe),
            _ => None,
        }
    }
}

fn gt(a: f64, b: f64) -> bool {
    a > b && !approx_eq(a, b)
}

fn lt(a: f64, b: f64) -> bool {
    a < b && !approx_eq(a, b)
}

fn ge(a: f64, b: f64) -> bool {
    a > b || approx_eq(a, b)
}

fn le(a: f64, b: f64) -> bool {
    a < b || approx_eq(a, b)
}

struct Ctx<'a> {
    inst: &'a ProblemInstance,
    sp: SpectralData,
    ex: CriticalExponents,
    two_s: f64,
}

impl Ctx<'_> {
    fn neg_mu(&self) -> bool {
        self.sp.mu < 0.0
    }

    /// `q_low > mu - mu0`, with ties left undecided.
    fn linear_gap(&self) -> bool {
        gt(self.inst.q_low, self.sp.mu - self.sp.mu0)
    }
}

/// Punctured nonexistence rules P2 to P4 for `mu > mu0`.
fn punctured_nonexistence(c: &Ctx) -> Option<&'static str> {
    let (theta, p) = (c.inst.theta, c.inst.p);
    if !c.neg_mu() {
        return None;
    }
    let ps = c.ex.p_sharp.finite()?;
    if gt(theta, -c.two_s) && ge(p, ps) {
        return Some("P2");
    }
    if approx_eq(theta, -c.two_s) && (gt(p, 1.0) || (approx_eq(p, 1.0) && c.linear_gap())) {
        return Some("P3");
    }
    // Only p strictly above p* lets the decreasing bootstrap reach its terminal
    // exponent; below it the explicit power solutions of W3 live in the punctured ball.
    if lt(theta, -c.two_s) && gt(p, c.ex.p_star.max(0.0)) {
        return Some("P4");
    }
    None
}

/// Exterior nonexistence rules E2 to E4 for `mu > mu0`.
fn exterior_nonexistence(c: &Ctx) -> Option<&'static str> {
    let (theta, p) = (c.inst.theta, c.inst.p);
    let sp = &c.sp;
    if gt(theta, -c.two_s) && le(p, c.ex.p_star) {
        // For mu > 0 and p < 1 the powers with exponent (2s+theta)/(1-p) <= tau_+
        // are exterior solutions, so those p are excluded.
        let limit_above = ge(p, 1.0) || gt((c.two_s + theta) / (1.0 - p), sp.tau_plus);
        if !(sp.mu > 0.0) || limit_above {
            return Some("E2");
        }
    }
    if approx_eq(theta, -c.two_s) && ((lt(p, 1.0) && c.neg_mu()) || (approx_eq(p, 1.0) && c.linear_gap())) {
        return Some("E3");
    }
    if c.neg_mu() && lt(theta, -c.two_s) && gt(theta, sp.tau_minus - c.two_s) {
        if let Some(ps) = c.ex.p_sharp.finite() {
            if lt(p, ps) && gt(p, 0.0) {
                return Some("E4");
            }
        }
    }
    None
}

fn nonexistence(c: &Ctx, rule: &str) -> Result<Verdict> {
    let certificate = match build_certificate(c.inst, &c.sp) {
        Ok(cert) => Some(cert),
        Err(e) => {
            return Err(Error::Unreachable(format!("rule {rule} matched but its certificate failed: {e}")));
        }
    };
    Ok(Verdict::Nonexistence { rule: rule.into(), citation: citation(rule).into(), certificate })
}

fn existence(rule: &str, recipe: SolutionRecipe) -> Verdict {
    Verdict::Existence { rule: rule.into(), citation: citation(rule).into(), recipe }
}

fn unknown(rule: &str, reason: impl Into<String>) -> Verdict {
    Verdict::Unknown { rule: rule.into(), reason: reason.into() }
}

fn critical_log_instance(c: &Ctx, rule: &str, side: Side) -> Result<Verdict> {
    let mut inst = *c.inst;
    if inst.domain == Domain::WholeSpace && inst.q_up.is_none() {
        inst.q_up = Some(inst.q_low);
    }
    if inst.q_up.is_none() {
        return Ok(unknown(rule, "the log-corrected supersolution needs an upper bound q_up on Q"));
    }
    Ok(existence(rule, log_supersolution(&inst, &c.sp, side)?))
}

fn classify_punctured(c: &Ctx) -> Result<Verdict> {
    let (theta, p) = (c.inst.theta, c.inst.p);
    let sp = &c.sp;
    if sp.degenerate {
        if ge(p, c.ex.p_sharp.to_f64().max(0.0)) {
            return nonexistence(c, "P1");
        }
        return Ok(unknown("P7", citation("P7")));
    }
    if let Some(rule) = punctured_nonexistence(c) {
        return nonexistence(c, rule);
    }
    if c.neg_mu() && gt(theta, sp.tau_plus - c.two_s) && lt(theta, -c.two_s) {
        if let Some(ps) = c.ex.p_sharp.finite() {
            if approx_eq(p, ps) {
                return critical_log_instance(c, "P5", Side::Punctured);
            }
        }
    }
    if sp.mu >= 0.0 && lt(theta, -sp.tau_plus - sp.params.dim()) && c.ex.q_sharp.to_f64() >= p {
        return nonexistence(c, "P6");
    }
    Ok(unknown("P7", citation("P7")))
}

fn classify_exterior(c: &Ctx) -> Result<Verdict> {
    let (theta, p) = (c.inst.theta, c.inst.p);
    let sp = &c.sp;
    if sp.degenerate {
        if gt(theta, sp.tau_minus - c.two_s) && le(p, c.ex.p_star) {
            return nonexistence(c, "E1");
        }
        return Ok(unknown("E6", citation("E6")));
    }
    if let Some(rule) = exterior_nonexistence(c) {
        return nonexistence(c, rule);
    }
    if gt(theta, sp.tau_minus - c.two_s) && lt(theta, -c.two_s) && approx_eq(p, c.ex.p_star) {
        return critical_log_instance(c, "E5", Side::Exterior);
    }
    Ok(unknown("E6", citation("E6")))
}

fn classify_whole(c: &Ctx) -> Result<Verdict> {
    let (theta, p) = (c.inst.theta, c.inst.p);
    let sp = &c.sp;
    if sp.degenerate {
        return nonexistence(c, "W1");
    }
    if punctured_nonexistence(c).is_some() || exterior_nonexistence(c).is_some() {
        return nonexistence(c, "W2");
    }
    if !approx_eq(p, 1.0) {
        let tau_p = -(c.two_s + theta) / (p - 1.0);
        if gt(tau_p, sp.tau_minus) && lt(tau_p, sp.tau_plus) {
            return Ok(existence("W3", pure_power_solution(c.inst, sp)?));
        }
    }
    if c.neg_mu() && gt(theta, sp.tau_plus - c.two_s) && lt(theta, -c.two_s) {
        if let Some(ps) = c.ex.p_sharp.finite() {
            if approx_eq(p, ps) {
                return critical_log_instance(c, "W4", Side::Punctured);
            }
        }
    }
    if gt(theta, sp.tau_minus - c.two_s) && lt(theta, -c.two_s) && approx_eq(p, c.ex.p_star) {
        return critical_log_instance(c, "W5", Side::Exterior);
    }
    Ok(unknown("W6", citation("W6")))
}

/// Classifies one instance.
pub fn classify(inst: &ProblemInstance) -> Result<Verdict> {
    inst.validate()?;
    let mu0 = specfun::mu_zero(&inst.params)?;
    if inst.mu < mu0 - DEGENERACY_TOL {
        return Ok(match inst.domain {
            Domain::Exterior => {
                Verdict::Nonexistence { rule: "E0".into(), citation: citation("E0").into(), certificate: None }
            }
            Domain::Punctured => unknown("P7", "mu is below mu0, where no punctured-ball result applies"),
            Domain::WholeSpace => unknown("W6", "mu is below mu0, where no whole-space result applies"),
        });
    }
    let sp = solve_spectrum(&inst.params, inst.mu)?;
    let ex = critical_exponents(&sp, inst.theta);
    let ctx = Ctx { inst, sp, ex, two_s: 2.0 * inst.params.s };
    match inst.domain {
        Domain::Punctured => classify_punctured(&ctx),
        Domain::Exterior => classify_exterior(&ctx),
        Domain::WholeSpace => classify_whole(&ctx),
    }
}

/// One cell of a phase diagram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub theta: f64,
    pub p: f64,
    pub verdict: String,
    pub rule: String,
}

/// Classifies a `theta x p` grid in parallel; rows follow `thetas`, columns `ps`.
pub fn phase_grid(
    params: Params,
    mu: f64,
    domain: Domain,
    q_low: f64,
    q_up: Option<f64>,
    thetas: &[f64],
    ps: &[f64],
) -> Result<Vec<Vec<PhaseCell>>> {
    thetas
        .par_iter()
        .map(|&theta| {
            ps.iter()
                .map(|&p| {
                    let inst = ProblemInstance { params, mu, theta, p, domain, q_low, q_up };
                    let v = classify(&inst)?;
                    Ok(PhaseCell { theta, p, verdict: v.label().into(), rule: v.rule().into() })
                })
                .collect()
        })
        .collect()
}
