//! Exponents `tau_-(s, mu) <= tau_+(s, mu)` of the radial fundamental solutions.
//!
//! They are the two roots of `c_s(tau) + mu = 0`, so that
//! `L |x|^tau = (c_s(tau) + mu) |x|^(tau - 2s)` vanishes at both.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{self, Params};

/// Distance from `mu_0` inside which the spectrum is treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    pub params: Params,
    pub mu: f64,
    pub mu0: f64,
    pub tau_minus: f64,
    pub tau_plus: f64,
    pub degenerate: bool,
}

impl SpectralData {
    /// Whether `tau` lies strictly between the two roots.
    pub fn inside(&self, tau: f64) -> bool {
        tau > self.tau_minus && tau < self.tau_plus
    }
}

/// Bisection of a sign change: `f(neg) < 0 < f(pos)`, run to full precision.
fn bisect(f: impl Fn(f64) -> f64, mut neg: f64, mut pos: f64) -> f64 {
    loop {
        let mid = 0.5 * (neg + pos);
        if mid == neg || mid == pos {
            return mid;
        }
        let v = f(mid);
        if v == 0.0 {
            return mid;
        }
        if v < 0.0 {
            neg = mid;
        } else {
            pos = mid;
        }
    }
}

/// Solves `c_s(tau) + mu = 0` for both roots.
pub fn solve_spectrum(params: &Params, mu: f64) -> Result<SpectralData> {
    params.validate()?;
    if !mu.is_finite() {
        return Err(Error::Domain(format!("mu = {mu} is not finite")));
    }
    let mu0 = specfun::mu_zero(params)?;
    if mu < mu0 - DEGENERACY_TOL {
        return Err(Error::SubcriticalMu { mu, mu0 });
    }
    let v = params.vertex();
    let data = |tm: f64, tp: f64, degenerate: bool| SpectralData {
        params: *params,
        mu,
        mu0,
        tau_minus: tm,
        tau_plus: tp,
        degenerate,
    };
    if (mu - mu0).abs() <= DEGENERACY_TOL {
        return Ok(data(v, v, true));
    }
    if mu == 0.0 {
        // Exact zeros of the symbol.
        return Ok(data(2.0 * params.s - params.dim(), 0.0, false));
    }
    // Work in delta = tau - v where the symbol is exactly even; the two
    // brackets are mirror images, so the roots are too.
    let half_width = (params.dim() + 2.0 * params.s) / 2.0;
    let f = |delta: f64| specfun::c_centered(params, delta) + mu;
    let mut eps = 1e-9 * (2.0 * params.s + params.dim());
    let mut edge = half_width - eps;
    while f(edge) >= 0.0 {
        eps *= 1e-3;
        edge = half_width - eps;
        if eps < 1e-300 || edge >= half_width {
            return Err(Error::Domain(format!("no root bracket for mu = {mu}")));
        }
    }
    let delta_plus = bisect(f, edge, 0.0);
    let delta_minus = bisect(f, -edge, 0.0);
    Ok(data(v + delta_minus, v + delta_plus, false))
}

/// Operator symbol on powers: `L |x|^tau = b_s(tau) |x|^(tau - 2s)`.
pub fn b_s(spectral: &SpectralData, tau: f64) -> Result<f64> {
    Ok(specfun::c_s(&spectral.params, tau)? + spectral.mu)
}
