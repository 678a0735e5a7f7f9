//! Explicit solutions and supersolutions behind the existence verdicts.

use serde::{Deserialize, Serialize};

use crate::classifier::ProblemInstance;
use crate::error::{Error, Result};
use crate::fracop::{hardy_apply_numeric, QuadratureConfig};
use crate::iterate::{approx_eq, Side};
use crate::radialfn::{apply_hardy_closed, RadialFunction};
use crate::specfun::{self, Params};
use crate::spectrum::{b_s, SpectralData};

/// Where a recipe is claimed to hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Validity {
    pub region: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_min: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolutionRecipe {
    /// `u = amplitude |x|^tau`, an exact solution with `Q = q_low |x|^theta`.
    PurePower { tau: f64, amplitude: f64, validity: Validity },
    /// `w = t |x|^tau (ln|x|)^m`, a supersolution for every `t >= t_min`.
    LogPower { tau: f64, m: u32, t_min: f64, side: Side, validity: Validity },
}

impl SolutionRecipe {
    /// The function itself; `t` is ignored for pure powers.
    pub fn function(&self, params: &Params, t: f64) -> Result<RadialFunction> {
        match *self {
            SolutionRecipe::PurePower { tau, amplitude, .. } => RadialFunction::single(params, amplitude, tau, 0),
            SolutionRecipe::LogPower { tau, m, .. } => RadialFunction::single(params, t, tau, m),
        }
    }

    /// `n` radii inside the validity region.
    pub fn sample_radii(&self, n: usize) -> Vec<f64> {
        let n = n.max(1);
        let frac = |k: usize| if n == 1 { 0.0 } else { k as f64 / (n - 1) as f64 };
        match self {
            SolutionRecipe::PurePower { .. } => (0..n).map(|k| 0.25 * 16f64.powf(frac(k))).collect(),
            SolutionRecipe::LogPower { validity, .. } => {
                let l0 = match (validity.r_max, validity.r_min) {
                    (Some(r), _) => -r.ln(),
                    (_, Some(r)) => r.ln(),
                    _ => 1.0,
                };
                (0..n)
                    .map(|k| {
                        let l = l0 * 3f64.powf(frac(k));
                        if validity.r_max.is_some() {
                            (-l).exp()
                        } else {
                            l.exp()
                        }
                    })
                    .collect()
            }
        }
    }
}

/// `u = A |x|^{tau_p}` with `tau_p = -(2s+theta)/(p-1)` and `A^{p-1} = b_s(tau_p)/q_low`.
pub fn pure_power_solution(inst: &ProblemInstance, sp: &SpectralData) -> Result<SolutionRecipe> {
    inst.validate()?;
    if approx_eq(inst.p, 1.0) {
        return Err(Error::Degenerate("p = 1 has no power solution exponent".into()));
    }
    let s = sp.params.s;
    let tau = -(2.0 * s + inst.theta) / (inst.p - 1.0);
    if !sp.inside(tau) {
        return Err(Error::Region(format!("tau_p = {tau} is not inside ({}, {})", sp.tau_minus, sp.tau_plus)));
    }
    let b = b_s(sp, tau)?;
    let amplitude = (b / inst.q_low).powf(1.0 / (inst.p - 1.0));
    Ok(SolutionRecipe::PurePower {
        tau,
        amplitude,
        validity: Validity { region: "whole_space".into(), r_max: None, r_min: None },
    })
}

/// Smallest even `m` with `m (1 - p) >= 1`.
fn even_order(p: f64) -> u32 {
    let half = 0.5 / (1.0 - p);
    2 * ((half - 1e-12).ceil().max(1.0) as u32)
}

fn binomial(m: u32, i: u32) -> f64 {
    (0..i).fold(1.0, |acc, k| acc * (m - k) as f64 / (k + 1) as f64)
}

/// Coefficients `a_j` of `ell^j` in the dominance polynomial.
///
/// With `ell = -ln r` at the origin (`ell = ln r` at infinity), `L w / (t r^{tau-2s})`
/// is `sum_i C(m,i) (+-1)^i d_i ell^{m-i}`. The `ell^m` coefficient is `b_s(tau) = 0`
/// and is dropped; half of the `ell^{m-1}` term is reserved for the source.
fn dominance_poly(side: Side, d: &[f64], m: u32) -> Vec<f64> {
    let mut a = vec![0.0; m as usize + 1];
    for i in 1..=m {
        let sign = if side == Side::Punctured && i % 2 == 1 { -1.0 } else { 1.0 };
        a[(m - i) as usize] += binomial(m, i) * sign * d[i as usize];
    }
    a[m as usize - 1] *= 0.5;
    a.pop();
    a
}

fn horner(a: &[f64], x: f64) -> f64 {
    a.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Least `ell0 >= 1` beyond which the polynomial stays nonnegative.
fn dominance_threshold(a: &[f64]) -> Result<f64> {
    let lead = *a.last().expect("nonempty");
    if !(lead > 0.0) {
        return Err(Error::HypothesisViolation(format!("leading dominance coefficient {lead} is not positive")));
    }
    let bound = 1.0 + a[..a.len() - 1].iter().map(|c| (c / lead).abs()).fold(0.0, f64::max);
    let steps = 4000;
    let at = |k: usize| 1.0 + (bound - 1.0) * k as f64 / steps as f64;
    let last_neg = (0..=steps).rev().find(|&k| horner(a, at(k)) < 0.0);
    let Some(k) = last_neg else { return Ok(1.0) };
    let (mut lo, mut hi) = (at(k), at(k + 1).max(bound));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if horner(a, mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi * 1.01)
}

/// Log-corrected supersolution at the critical exponent.
///
/// At the origin (`p = p#`, `mu in (mu0, 0)`) the base exponent is `tau_+`; at
/// infinity (`p = p*`) it is `tau_-`. In both cases `theta + p tau = tau - 2s`, so
/// the source and `L w` share the power of `r` and only the logarithms compete.
pub fn log_supersolution(inst: &ProblemInstance, sp: &SpectralData, side: Side) -> Result<SolutionRecipe> {
    inst.validate()?;
    let q_up = inst.q_up.ok_or_else(|| Error::InvalidInstance("the log-corrected supersolution needs q_up".into()))?;
    let params = &sp.params;
    let s = params.s;
    let (theta, p) = (inst.theta, inst.p);
    if sp.degenerate {
        return Err(Error::Degenerate("mu = mu0 has no separated exponents".into()));
    }
    let tau = match side {
        Side::Punctured => {
            if !(sp.mu < 0.0) {
                return Err(Error::Region("the origin construction needs mu < 0".into()));
            }
            sp.tau_plus
        }
        Side::Exterior => sp.tau_minus,
    };
    if !(theta > tau - 2.0 * s && theta < -2.0 * s) {
        return Err(Error::Region(format!("theta = {theta} outside ({}, {})", tau - 2.0 * s, -2.0 * s)));
    }
    let p_crit = 1.0 + (2.0 * s + theta) / (-tau);
    if !approx_eq(p, p_crit) {
        return Err(Error::Region(format!("p = {p} is not the critical exponent {p_crit}")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Region(format!("p = {p} outside (0, 1)")));
    }
    let m = even_order(p);
    let d: Vec<f64> = (0..=m as usize).map(|i| specfun::c_s_deriv(params, tau, i)).collect::<Result<_>>()?;
    let slope = d[1].abs();
    let t_min = (2.0 * q_up / (m as f64 * slope)).powf(1.0 / (1.0 - p));
    let poly = dominance_poly(side, &d, m);
    let ell0 = dominance_threshold(&poly)?;

    let validity = match side {
        Side::Punctured => Validity { region: "punctured_ball".into(), r_max: Some((-ell0).exp()), r_min: None },
        Side::Exterior => Validity { region: "exterior".into(), r_max: None, r_min: Some(ell0.exp()) },
    };
    let recipe = SolutionRecipe::LogPower { tau, m, t_min, side, validity };

    // Closed-form check on a geometric grid of 200 points.
    let w = recipe.function(params, t_min)?;
    let lw = apply_hardy_closed(&w, params, sp.mu)?;
    for k in 0..200 {
        let ell = ell0 * 1000f64.powf(k as f64 / 199.0);
        if horner(&poly, ell) < 0.0 {
            return Err(Error::Accuracy(format!("dominance polynomial negative at ell = {ell}")));
        }
        let r = match side {
            Side::Punctured => (-ell).exp(),
            Side::Exterior => ell.exp(),
        };
        if r == 0.0 || !r.is_finite() {
            break;
        }
        let rhs = q_up * r.powf(theta) * w.eval(r).powf(p);
        if lw.eval(r) < rhs {
            return Err(Error::Accuracy(format!("closed-form dominance fails at r = {r:e}")));
        }
    }
    Ok(recipe)
}

/// One row of a recipe check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecipeCheckRow {
    pub r: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    /// The size the residual is measured against.
    pub scale: f64,
    pub quadrature_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecipeReport {
    pub rows: Vec<RecipeCheckRow>,
    pub passed: bool,
}

impl RecipeReport {
    pub fn into_result(self) -> Result<RecipeReport> {
        if self.passed {
            Ok(self)
        } else {
            Err(Error::VerificationFailure { radii: self.rows.iter().filter(|r| !r.passed).map(|r| r.r).collect() })
        }
    }
}

/// Evaluates a recipe at `radii` with the quadrature oracle.
///
/// Pure powers must satisfy `|L u - q_low r^theta u^p| <= tol * q_low r^theta u^p`.
/// Log powers (at `t = t_min`) must satisfy `L w - q_up r^theta w^p >= -tol * |L w|`,
/// the scale being the closed-form value.
pub fn recipe_residuals(
    recipe: &SolutionRecipe,
    inst: &ProblemInstance,
    sp: &SpectralData,
    radii: &[f64],
    config: &QuadratureConfig,
    tol: f64,
) -> Result<RecipeReport> {
    let params = &sp.params;
    let (theta, p) = (inst.theta, inst.p);
    let (f, q, t) = match *recipe {
        SolutionRecipe::PurePower { .. } => (recipe.function(params, 1.0)?, inst.q_low, None),
        SolutionRecipe::LogPower { t_min, .. } => {
            let q_up = inst.q_up.unwrap_or(inst.q_low);
            (recipe.function(params, t_min)?, q_up, Some(t_min))
        }
    };
    let closed = apply_hardy_closed(&f, params, sp.mu)?;
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        let num = hardy_apply_numeric(&f, r, params, sp.mu, config)?;
        let rhs = q * r.powf(theta) * f.eval(r).powf(p);
        let residual = num.value - rhs;
        let (scale, passed) = match t {
            None => (rhs.abs(), residual.abs() <= tol * rhs.abs()),
            Some(_) => {
                let scale = closed.eval(r).abs();
                (scale, residual >= -tol * scale)
            }
        };
        rows.push(RecipeCheckRow {
            r,
            lhs: num.value,
            rhs,
            residual,
            scale,
            quadrature_error: num.error_estimate,
            passed,
        });
    }
    let passed = rows.iter().all(|r| r.passed);
    Ok(RecipeReport { rows, passed })
}

/// As `recipe_residuals`, failing with `VerificationFailure` on any bad radius.
pub fn verify_recipe(
    recipe: &SolutionRecipe,
    inst: &ProblemInstance,
    sp: &SpectralData,
    radii: &[f64],
    config: &QuadratureConfig,
    tol: f64,
) -> Result<RecipeReport> {
    recipe_residuals(recipe, inst, sp, radii, config, tol)?.into_result()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn even_order_examples() {
        assert_eq!(even_order(0.4), 2);
        assert_eq!(even_order(0.5), 2);
        assert_eq!(even_order(0.6), 4);
        assert_eq!(even_order(0.75), 4);
        assert_eq!(even_order(0.9), 10);
        assert_eq!(even_order(0.1), 2);
    }

    #[test]
    fn threshold_of_simple_polynomials() {
        // ell - 3 is negative below 3.
        let t = dominance_threshold(&[-3.0, 1.0]).unwrap();
        assert!((3.0..3.1).contains(&t));
        assert_eq!(dominance_threshold(&[2.0, 1.0]).unwrap(), 1.0);
        assert!(dominance_threshold(&[1.0, -1.0]).is_err());
    }
}
