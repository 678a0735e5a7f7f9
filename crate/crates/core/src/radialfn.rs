//! Finite sums `sum c_k |x|^{tau_k} (ln|x|)^{m_k}` and the closed-form action of
//! the operator on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{self, Params};
use crate::spectrum::SpectralData;

/// One term `coef |x|^tau (ln|x|)^m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    pub tau: f64,
    pub m: u32,
}

impl Term {
    pub fn new(coef: f64, tau: f64, m: u32) -> Self {
        Term { coef, tau, m }
    }

    pub fn eval(&self, r: f64) -> f64 {
        let lr = r.ln();
        self.coef * r.powf(self.tau) * lr.powi(self.m as i32)
    }
}

/// Merges terms with identical `(tau, m)` and drops zero coefficients.
fn normalize(mut terms: Vec<Term>) -> Vec<Term> {
    terms.sort_by(|a, b| a.tau.total_cmp(&b.tau).then(a.m.cmp(&b.m)));
    let mut out: Vec<Term> = Vec::with_capacity(terms.len());
    for t in terms {
        match out.last_mut() {
            Some(last) if last.tau == t.tau && last.m == t.m => last.coef += t.coef,
            _ => out.push(t),
        }
    }
    out.retain(|t| t.coef != 0.0);
    out
}

fn eval_terms(terms: &[Term], r: f64) -> f64 {
    terms.iter().map(|t| t.eval(r)).sum()
}

/// A radial function with every exponent in `(-N, 2s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialFunction {
    terms: Vec<Term>,
}

impl RadialFunction {
    pub fn new(params: &Params, terms: Vec<Term>) -> Result<Self> {
        for t in &terms {
            if !t.coef.is_finite() {
                return Err(Error::Domain(format!("coefficient {} is not finite", t.coef)));
            }
            params.check_tau(t.tau)?;
        }
        Ok(RadialFunction { terms: normalize(terms) })
    }

    pub fn single(params: &Params, coef: f64, tau: f64, m: u32) -> Result<Self> {
        Self::new(params, vec![Term::new(coef, tau, m)])
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn eval(&self, r: f64) -> f64 {
        eval_terms(&self.terms, r)
    }
}

/// Output of the operator: exponents shifted by `-2s`, so no range restriction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    pub terms: Vec<Term>,
}

impl Expansion {
    pub fn new(terms: Vec<Term>) -> Self {
        Expansion { terms: normalize(terms) }
    }

    pub fn eval(&self, r: f64) -> f64 {
        eval_terms(&self.terms, r)
    }

    /// Largest absolute coefficient, 0 for the empty expansion.
    pub fn max_coef(&self) -> f64 {
        self.terms.iter().map(|t| t.coef.abs()).fold(0.0, f64::max)
    }
}

fn binomial(m: u32, i: u32) -> f64 {
    (0..i).fold(1.0, |acc, k| acc * (m - k) as f64 / (k + 1) as f64)
}

/// `(-Delta)^s + mu|x|^{-2s}` applied term by term.
///
/// `L[r^tau (ln r)^m] = r^{tau-2s} sum_i C(m,i) b^{(i)}(tau) (ln r)^{m-i}` with
/// `b = c_s + mu`: the `m`-th `tau`-derivative of `L r^tau` split by Leibniz.
pub fn apply_hardy_closed(f: &RadialFunction, params: &Params, mu: f64) -> Result<Expansion> {
    apply_with(f, params, mu, binomial)
}

/// The same sum with every binomial factor replaced by 1. Wrong for `m >= 2`;
/// kept to show the discrepancy against quadrature.
pub fn apply_hardy_without_binomials(f: &RadialFunction, params: &Params, mu: f64) -> Result<Expansion> {
    apply_with(f, params, mu, |_, _| 1.0)
}

fn apply_with(f: &RadialFunction, params: &Params, mu: f64, weight: impl Fn(u32, u32) -> f64) -> Result<Expansion> {
    let s = params.s;
    let mut out = Vec::new();
    for t in &f.terms {
        for i in 0..=t.m {
            let mut d = specfun::c_s_deriv(params, t.tau, i as usize)?;
            if i == 0 {
                d += mu;
            }
            out.push(Term::new(t.coef * weight(t.m, i) * d, t.tau - 2.0 * s, t.m - i));
        }
    }
    Ok(Expansion::new(out))
}

/// Kelvin transform `|x|^{2s-N} f(x/|x|^2)`.
pub fn kelvin(f: &RadialFunction, params: &Params) -> Result<RadialFunction> {
    let shift = 2.0 * params.s - params.dim();
    let terms =
        f.terms.iter().map(|t| Term::new(if t.m % 2 == 0 { t.coef } else { -t.coef }, shift - t.tau, t.m)).collect();
    RadialFunction::new(params, terms)
}

/// The matching transform on operator outputs: `|x|^{-2s-N} g(x/|x|^2)`.
pub fn kelvin_expansion(e: &Expansion, params: &Params) -> Expansion {
    let shift = -2.0 * params.s - params.dim();
    Expansion::new(
        e.terms.iter().map(|t| Term::new(if t.m % 2 == 0 { t.coef } else { -t.coef }, shift - t.tau, t.m)).collect(),
    )
}

/// The two radial solutions of `L u = 0` away from the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FundamentalPair {
    /// `|x|^{tau_-}`, or `|x|^{tau} (-ln|x|)` when the roots coincide.
    pub phi: RadialFunction,
    /// `|x|^{tau_+}`.
    pub gamma: RadialFunction,
}

pub fn fundamental_pair(spectral: &SpectralData) -> Result<FundamentalPair> {
    let params = &spectral.params;
    let phi = if spectral.degenerate {
        RadialFunction::single(params, -1.0, spectral.tau_minus, 1)?
    } else {
        RadialFunction::single(params, 1.0, spectral.tau_minus, 0)?
    };
    let gamma = RadialFunction::single(params, 1.0, spectral.tau_plus, 0)?;
    Ok(FundamentalPair { phi, gamma })
}
