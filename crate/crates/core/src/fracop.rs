//! Independent evaluation of `(-Delta)^s` on radial functions by the singular integral.
//!
//! For radial `g` and `|x| = r`,
//!
//! ```text
//! (-Delta)^s g(r) = -C_{N,s} w_{N-2} int_0^inf rho^{-1-2s}
//!                   int_0^{pi/2} [g(a+) + g(a-) - 2 g(r)] sin^{N-2}(phi) dphi drho
//! ```
//!
//! with `a+- = |x +- rho e|`, `w_{N-2}` the area of the unit `(N-2)`-sphere and
//! `w_0 = 2`. The symmetric second difference removes the principal value.
//! This is the oracle the closed forms are checked against; it shares no code
//! with them beyond the Gamma function in `C_{N,s}`.

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::radialfn::{RadialFunction, Term};
use crate::specfun::{self, Params};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// The radial integral is truncated at `cutoff_factor * r`.
    pub cutoff_factor: f64,
    pub max_evaluations: u64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { rel_tol: 1e-6, abs_tol: 1e-10, cutoff_factor: 1e4, max_evaluations: 50_000_000 }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::Domain("quadrature tolerances must be positive".into()));
        }
        if !(self.cutoff_factor >= 1e2) || !self.cutoff_factor.is_finite() {
            return Err(Error::Domain(format!("cutoff_factor = {} must be at least 1e2", self.cutoff_factor)));
        }
        if self.max_evaluations == 0 {
            return Err(Error::Domain("max_evaluations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    /// Quadrature error plus `tail_bound`.
    pub error_estimate: f64,
    pub evaluations: u64,
    /// Bound on what the truncated tail contributes beyond its leading term.
    pub tail_bound: f64,
}

/// Initial panels per graded radial segment.
const INITIAL_PIECES: usize = 8;

/// Inner tolerance relative to the outer one.
const INNER_FACTOR: f64 = 1e-2;

/// Largest `ln` of a pointwise integrand peak evaluated without rescaling.
const MAX_LOG_PEAK: f64 = 600.0;

/// Below this `rho/r` the direct `ln_1p` form of the log ratio is used.
const SMALL_U: f64 = 0.25;

fn binomial(m: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (m - j) as f64 / (j + 1) as f64)
}

struct Integrand<'a> {
    terms: &'a [Term],
    r: f64,
    lr: f64,
    /// `r^tau` per term.
    scale: Vec<f64>,
    n: u32,
    /// Size of `g` and its log-derivatives at `r`, for the roundoff floor.
    size: f64,
    counter: &'a Cell<u64>,
    max_evals: u64,
}

impl Integrand<'_> {
    /// `e^{-lambda} (g(a) - g(r))` given `L = ln(a/r)`, without cancellation for
    /// small `L` when `lambda = 0`.
    fn diff(&self, l: f64, lambda: f64) -> f64 {
        let mut total = 0.0;
        let base = (-lambda).exp();
        for (t, &sc) in self.terms.iter().zip(&self.scale) {
            let grow = if lambda == 0.0 { (t.tau * l).exp_m1() } else { (t.tau * l - lambda).exp() - base };
            let mut v = grow * (self.lr + l).powi(t.m as i32);
            let mut lk = 1.0;
            let mut poly = 0.0;
            for k in 1..=t.m {
                lk *= l;
                poly += binomial(t.m, k) * self.lr.powi((t.m - k) as i32) * lk;
            }
            v += base * poly;
            total += t.coef * sc * v;
        }
        total
    }

    /// `e^{-lambda} [g(a+) + g(a-) - 2g(r)] sin^{N-2}(phi)` at `rho = r + d`.
    fn h(&self, rho: f64, d: f64, phi: f64, lambda: f64) -> f64 {
        self.counter.set(self.counter.get() + 1);
        let u = rho / self.r;
        let sh = (0.5 * phi).sin();
        let cos = 1.0 - 2.0 * sh * sh;
        let t_plus = u * (u + 2.0 * cos);
        let l_plus = 0.5 * t_plus.ln_1p();
        let l_minus = if u < SMALL_U {
            0.5 * (u * (u - 2.0 * cos)).ln_1p()
        } else {
            (d / self.r).hypot(2.0 * u.sqrt() * sh).ln()
        };
        let weight = match self.n {
            2 => 1.0,
            3 => phi.sin(),
            n => phi.sin().powi(n as i32 - 2),
        };
        (self.diff(l_plus, lambda) + self.diff(l_minus, lambda)) * weight
    }

    /// Angular integral at `rho = r + d`, with breakpoints graded toward the
    /// near-singular point `phi = 0` when `rho` is close to `r`.
    ///
    /// Returns `(value, error, lambda)` with value and error scaled by `e^{-lambda}`.
    /// Very close to the diagonal the peak `(|d|/r)^tau` overflows even though its
    /// angular integral does not, so the log of the peak beyond `MAX_LOG_PEAK`
    /// is carried separately.
    fn angular(&self, rho: f64, d: f64, rel_tol: f64) -> Result<(f64, f64, f64)> {
        let half_pi = std::f64::consts::FRAC_PI_2;
        let w = d.abs() / self.r;
        let log_peak = self.terms.iter().map(|t| t.tau * w.ln()).fold(0.0, f64::max);
        let lambda = (log_peak - MAX_LOG_PEAK).max(0.0);
        let mut cuts = vec![0.0];
        if w < 0.5 {
            let mut b = w.max(1e-300);
            while b < half_pi / 4.0 {
                cuts.push(b);
                b *= 4.0;
            }
        } else {
            cuts.push(half_pi / 2.0);
        }
        cuts.push(half_pi);
        let segments: Vec<(usize, f64, f64)> = cuts.windows(2).map(|c| (0, c[0], c[1])).collect();
        // For rho << r the two differences cancel to O(u^2) while each is O(u);
        // the cancellation leaves roundoff of order eps * u * size.
        let floor = 64.0 * f64::EPSILON * self.size * (rho / self.r).min(1.0) * (-lambda).exp();
        let out = integrate(
            |_, phi| Ok((self.h(rho, d, phi, lambda), 0.0)),
            &segments,
            |_, l1| (rel_tol * l1).max(floor),
            self.counter,
            self.max_evals,
        )?;
        Ok((out.value, out.error, lambda))
    }
}

/// Radial substitutions: each maps `v` to `(rho, d = rho - r, drho/dv)`.
#[derive(Clone, Copy)]
struct Maps {
    r: f64,
    /// Start of the quadrature region; below it the spherical-mean series is used.
    rho_h: f64,
    /// Power grading on both sides of `rho = r`.
    q: f64,
}

impl Maps {
    fn at(&self, seg: usize, v: f64) -> (f64, f64, f64) {
        let r = self.r;
        match seg {
            0 => {
                let span = (0.5 * r / self.rho_h).ln();
                let rho = self.rho_h * (span * v).exp();
                (rho, rho - r, rho * span)
            }
            1 => {
                let d = -0.5 * r * v.powf(self.q);
                (r + d, d, 0.5 * r * self.q * v.powf(self.q - 1.0))
            }
            2 => {
                let d = r * v.powf(self.q);
                (r + d, d, r * self.q * v.powf(self.q - 1.0))
            }
            _ => {
                let rho = 2.0 * r * v.exp();
                (rho, rho - r, rho)
            }
        }
    }
}

/// `int_R^inf rho^{tau-2s-1} (ln rho)^m drho` for `alpha = 2s - tau > 0`.
fn power_log_tail(big_r: f64, alpha: f64, m: u32) -> f64 {
    let lr = big_r.ln();
    let mut sum = 0.0;
    let mut fall = 1.0;
    for k in 0..=m {
        if k > 0 {
            fall *= (m - k + 1) as f64;
        }
        sum += fall * lr.powi((m - k) as i32) / alpha.powi(k as i32 + 1);
    }
    big_r.powf(-alpha) * sum
}

/// Terms of the spherical-mean series kept below `rho_h`.
const HEAD_TERMS: usize = 4;

/// `prod_{j<k} (tau - 2j)(tau - 2j + N - 2)`, coefficients in ascending powers of `tau`.
fn laplacian_poly(k: usize, n: f64) -> Vec<f64> {
    let mut poly = vec![1.0];
    for j in 0..k {
        let (a, b) = (-2.0 * j as f64, -2.0 * j as f64 + n - 2.0);
        // (tau + a)(tau + b) = tau^2 + (a + b) tau + ab
        let factor = [a * b, a + b, 1.0];
        let mut next = vec![0.0; poly.len() + 2];
        for (i, &c) in poly.iter().enumerate() {
            for (l, &f) in factor.iter().enumerate() {
                next[i + l] += c * f;
            }
        }
        poly = next;
    }
    poly
}

/// `i`-th derivative of the polynomial at `tau`.
fn poly_deriv(poly: &[f64], i: usize, tau: f64) -> f64 {
    let mut acc = 0.0;
    for (deg, &c) in poly.iter().enumerate().skip(i).rev() {
        let fall: f64 = ((deg - i + 1)..=deg).map(|x| x as f64).product();
        acc = acc * tau + c * fall;
    }
    acc
}

/// `Delta^k g(r)` for `g = sum coef r^tau (ln r)^m`, and the sum of the absolute
/// values of its pieces. `Delta^k r^tau = P_k(tau) r^{tau - 2k}`; the log terms
/// are `tau`-derivatives of that.
fn iterated_laplacian(terms: &[Term], r: f64, k: usize, n: f64) -> (f64, f64) {
    let poly = laplacian_poly(k, n);
    let lr = r.ln();
    let (mut value, mut size) = (0.0, 0.0);
    for t in terms {
        let sc = t.coef * r.powf(t.tau - 2.0 * k as f64);
        for i in 0..=t.m {
            let piece = sc * binomial(t.m, i) * poly_deriv(&poly, i as usize, t.tau) * lr.powi((t.m - i) as i32);
            value += piece;
            size += piece.abs();
        }
    }
    (value, size)
}

/// Closed-form part of the radial integral over `(0, rho_h)`.
struct Head {
    rho_h: f64,
    value: f64,
    bound: f64,
}

/// The sphere mean of `g` about `x` is `g(r) + sum_k a_k rho^{2k} Delta^k g(r)` with
/// `a_k = 1 / (2^k k! N (N+2) ... (N+2k-2))` (Pizzetti). Integrating the first
/// `HEAD_TERMS` terms against `rho^{-1-2s}` avoids the roundoff of the second
/// difference at small `rho`, which is not integrable once `s > 1/2`. The next
/// term, taken in absolute value and doubled twice, bounds the rest; `rho_h` is
/// halved until that bound is negligible against the first term.
fn head_expansion(terms: &[Term], r: f64, params: &Params, rel_tol: f64) -> Result<Head> {
    let (s, n) = (params.s, params.dim());
    let mut a = Vec::with_capacity(HEAD_TERMS + 2);
    let mut acc = 1.0;
    a.push(1.0);
    for k in 1..=HEAD_TERMS + 1 {
        acc /= 2.0 * k as f64 * (n + 2.0 * (k - 1) as f64);
        a.push(acc);
    }
    let laps: Vec<(f64, f64)> = (0..=HEAD_TERMS + 1).map(|k| iterated_laplacian(terms, r, k, n)).collect();
    let c = specfun::normalization_constant(params)? * specfun::sphere_area(params.n);
    let term = |k: usize, rho_h: f64, lap: f64| {
        let e = 2.0 * k as f64 - 2.0 * s;
        -c * a[k] * lap * rho_h.powf(e) / e
    };
    let mut h = 0.1;
    loop {
        let rho_h = h * r;
        let value: f64 = (1..=HEAD_TERMS).map(|k| term(k, rho_h, laps[k].0)).sum();
        let bound = 4.0 * term(HEAD_TERMS + 1, rho_h, laps[HEAD_TERMS + 1].1).abs();
        let first = term(1, rho_h, laps[1].1).abs();
        if bound <= 1e-3 * rel_tol * first || h < 1e-6 {
            return Ok(Head { rho_h, value, bound });
        }
        h *= 0.5;
    }
}

/// `(-Delta)^s f` at radius `r` by adaptive quadrature.
pub fn frac_laplacian_radial(
    f: &RadialFunction,
    r: f64,
    params: &Params,
    config: &QuadratureConfig,
) -> Result<QuadratureResult> {
    params.require_fractional()?;
    config.validate()?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("radius r = {r} must be positive and finite")));
    }
    for t in f.terms() {
        params.check_tau(t.tau)?;
    }
    let s = params.s;
    let n = params.n;
    let c_ns = specfun::normalization_constant(params)?;
    let omega = if n == 2 { 2.0 } else { specfun::sphere_area(n - 1) };
    let prefactor = -c_ns * omega;

    let terms = f.terms();
    let counter = Cell::new(0u64);
    let integrand = Integrand {
        terms,
        r,
        lr: r.ln(),
        scale: terms.iter().map(|t| r.powf(t.tau)).collect(),
        n,
        size: terms
            .iter()
            .map(|t| {
                t.coef.abs() * r.powf(t.tau) * (r.ln().abs() + 1.0).powi(t.m as i32) * (t.tau.abs() + t.m as f64 + 1.0)
            })
            .sum(),
        counter: &counter,
        max_evals: config.max_evaluations,
    };

    // Near rho = r the angular integral behaves like |d|^{beta - 1} in the worst
    // term, beta = min tau + N; the grading makes that at least v^2 in v.
    let tau_min = terms.iter().map(|t| t.tau).fold(f64::INFINITY, f64::min);
    let beta = if tau_min.is_finite() { tau_min + params.dim() } else { 1.0 };
    let head = head_expansion(terms, r, params, config.rel_tol)?;
    let maps = Maps { r, rho_h: head.rho_h, q: (3.0 / beta.min(1.0)).ceil().max(2.0) };
    let big_r = config.cutoff_factor * r;
    let log_span = (big_r / (2.0 * r)).ln();
    // A coarse start can let whole and halves agree by accident on a panel that
    // hides the near-diagonal feature, so each graded segment starts in 8 pieces.
    let mut segments = Vec::new();
    for seg in 0..3 {
        for i in 0..INITIAL_PIECES {
            let k = INITIAL_PIECES as f64;
            segments.push((seg, i as f64 / k, (i + 1) as f64 / k));
        }
    }
    let pieces = log_span.ceil().max(1.0) as usize;
    for i in 0..pieces {
        let a = log_span * i as f64 / pieces as f64;
        let b = log_span * (i + 1) as f64 / pieces as f64;
        segments.push((3, a, b));
    }

    // Tail beyond R. The sphere average of |rho w + x|^tau is
    // rho^tau (1 + kappa(tau) (r/rho)^2 + O((r/rho)^4)), kappa = tau (tau + N - 2) / (2N);
    // differentiating in tau gives the log terms. Both orders are integrated exactly.
    let nn = params.dim();
    let kappa = |tau: f64, j: u32| match j {
        0 => tau * (tau + nn - 2.0) / (2.0 * nn),
        1 => (2.0 * tau + nn - 2.0) / (2.0 * nn),
        2 => 1.0 / nn,
        _ => 0.0,
    };
    let g_r = f.eval(r);
    let mut tail_lead = -g_r * big_r.powf(-2.0 * s) / (2.0 * s);
    let mut tail_bound = 0.0;
    let ratio = r / big_r;
    for t in terms {
        let alpha = 2.0 * s - t.tau;
        let j = power_log_tail(big_r, alpha, t.m);
        let mut second = 0.0;
        for i in 0..=t.m.min(2) {
            second += binomial(t.m, i) * kappa(t.tau, i) * power_log_tail(big_r, alpha + 2.0, t.m - i);
        }
        tail_lead += t.coef * (j + r * r * second);
        let order = t.tau.abs() + t.m as f64 + 2.0;
        tail_bound += t.coef.abs() * order.powi(4) * ratio.powi(4) * j.abs().max(big_r.powf(-alpha) / alpha);
    }
    let area = specfun::sphere_area(n);
    let tail_value = -c_ns * area * tail_lead;
    let tail_bound = c_ns * area * tail_bound;

    let fixed = tail_value + head.value;
    let inner_rel = INNER_FACTOR * config.rel_tol;
    let outer = integrate(
        |seg, v| {
            let (rho, d, jac) = maps.at(seg, v);
            // d = 0 only when the grading underflows; a single point carries no mass.
            if jac == 0.0 || rho == 0.0 || d == 0.0 {
                return Ok((0.0, 0.0));
            }
            let (val, err, lambda) = integrand.angular(rho, d, inner_rel)?;
            let mut w = prefactor * rho.powf(-1.0 - 2.0 * s) * jac;
            if lambda > 0.0 {
                w = w.signum() * (w.abs().ln() + lambda).exp();
            }
            Ok((w * val, w.abs() * err))
        },
        &segments,
        |value, _| (config.rel_tol * (value + fixed).abs()).max(config.abs_tol) - tail_bound - head.bound,
        &counter,
        config.max_evaluations,
    )?;
    let value = outer.value + fixed;
    // Summation roundoff, which the panel differences cannot see.
    let roundoff = 64.0 * f64::EPSILON * (outer.l1 + fixed.abs());
    let error_estimate = outer.error + tail_bound + head.bound + roundoff;
    if error_estimate > (config.rel_tol * value.abs()).max(config.abs_tol) {
        return Err(Error::Accuracy(format!(
            "error estimate {error_estimate:e} exceeds tolerance for value {value:e}"
        )));
    }
    Ok(QuadratureResult { value, error_estimate, evaluations: counter.get(), tail_bound })
}

/// `(-Delta)^s f + mu r^{-2s} f` at radius `r`.
pub fn hardy_apply_numeric(
    f: &RadialFunction,
    r: f64,
    params: &Params,
    mu: f64,
    config: &QuadratureConfig,
) -> Result<QuadratureResult> {
    let mut out = frac_laplacian_radial(f, r, params, config)?;
    out.value += mu * r.powf(-2.0 * params.s) * f.eval(r);
    Ok(out)
}

/// `c_s^{(order)}(tau)` as the operator applied to `|x|^tau (ln|x|)^order` at `r = 1`.
pub fn cs_via_integral(params: &Params, tau: f64, order: u32, config: &QuadratureConfig) -> Result<QuadratureResult> {
    let f = RadialFunction::single(params, 1.0, tau, order)?;
    frac_laplacian_radial(&f, 1.0, params, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_symbol_on_a_power() {
        let p = Params::new(3, 0.5).unwrap();
        let cfg = QuadratureConfig::default();
        let q = cs_via_integral(&p, -1.0, 0, &cfg).unwrap();
        let exact = 2.0 / std::f64::consts::PI;
        assert!((q.value - exact).abs() <= 1e-6 * exact, "{q:?}");
    }

    #[test]
    fn constants_are_annihilated() {
        let p = Params::new(2, 0.3).unwrap();
        let f = RadialFunction::single(&p, 1.0, 0.0, 0).unwrap();
        let q = frac_laplacian_radial(&f, 2.0, &p, &QuadratureConfig::default()).unwrap();
        assert!(q.value.abs() < 1e-12);
    }

    #[test]
    fn iterated_laplacian_of_powers() {
        // Delta^2 r^tau = tau (tau + N - 2) (tau - 2) (tau + N - 4) r^{tau - 4}.
        let (tau, n) = (0.7, 3.0);
        let poly = laplacian_poly(2, n);
        let expect = tau * (tau + n - 2.0) * (tau - 2.0) * (tau + n - 4.0);
        assert!((poly_deriv(&poly, 0, tau) - expect).abs() < 1e-14);
        // d/dtau of tau (tau + 1) is 2 tau + 1.
        assert!((poly_deriv(&laplacian_poly(1, n), 1, tau) - (2.0 * tau + 1.0)).abs() < 1e-14);
        let (v, _) = iterated_laplacian(&[Term::new(1.0, tau, 0)], 2.0, 2, n);
        assert!((v - expect * 2f64.powf(tau - 4.0)).abs() < 1e-14);
        // Constants and r^2 are exactly harmonic at second order.
        assert_eq!(iterated_laplacian(&[Term::new(1.0, 0.0, 0)], 2.0, 1, n).0, 0.0);
        assert_eq!(iterated_laplacian(&[Term::new(1.0, 2.0, 0)], 2.0, 2, n).0, 0.0);
    }

    #[test]
    fn tail_integral_closed_form() {
        // m = 1: R^{-a}(ln R / a + 1 / a^2).
        let (r, a) = (50.0f64, 0.7);
        let expect = r.powf(-a) * (r.ln() / a + 1.0 / (a * a));
        assert!((power_log_tail(r, a, 1) - expect).abs() < 1e-15);
    }
}
