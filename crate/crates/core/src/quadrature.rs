//! Globally adaptive Gauss-Legendre panel quadrature.
//!
//! Each panel is integrated with the 15-point rule on the whole panel and on its
//! two halves; the halves give the value and the difference gives the error.
//! The panel with the largest error is bisected until the total error meets the
//! caller's stopping rule.

use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

pub(crate) const ORDER: usize = 15;

struct Rule {
    nodes: [f64; ORDER],
    weights: [f64; ORDER],
}

/// Legendre nodes and weights on [-1, 1] by Newton iteration on `P_n`.
fn rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = ORDER;
        let mut nodes = [0.0; ORDER];
        let mut weights = [0.0; ORDER];
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        Rule { nodes, weights }
    })
}

/// Integrand sample: value plus the error already committed inside it.
pub(crate) type Sample = (f64, f64);

#[derive(Debug, Clone, Copy, Default)]
struct Estimate {
    value: f64,
    inner_err: f64,
    l1: f64,
}

fn gauss<F: FnMut(usize, f64) -> Result<Sample>>(f: &mut F, seg: usize, a: f64, b: f64) -> Result<Estimate> {
    let r = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut est = Estimate::default();
    for (x, w) in r.nodes.iter().zip(r.weights.iter()) {
        let (v, e) = f(seg, mid + half * x)?;
        let wh = w * half.abs();
        est.value += w * half * v;
        est.inner_err += wh * e;
        est.l1 += wh * v.abs();
    }
    Ok(est)
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    seg: usize,
    a: f64,
    b: f64,
    est: Estimate,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn panel<F: FnMut(usize, f64) -> Result<Sample>>(f: &mut F, seg: usize, a: f64, b: f64) -> Result<Panel> {
    let m = 0.5 * (a + b);
    let whole = gauss(f, seg, a, b)?;
    let left = gauss(f, seg, a, m)?;
    let right = gauss(f, seg, m, b)?;
    if !(whole.value.is_finite() && left.value.is_finite() && right.value.is_finite()) {
        return Err(Error::Accuracy(format!("integrand is not finite on [{a:e}, {b:e}]")));
    }
    let est = Estimate {
        value: left.value + right.value,
        inner_err: left.inner_err + right.inner_err,
        l1: left.l1 + right.l1,
    };
    Ok(Panel { seg, a, b, est, err: (whole.value - est.value).abs() })
}

fn splittable(p: &Panel) -> bool {
    let w = (p.b - p.a).abs();
    w > 8.0 * f64::EPSILON * p.a.abs().max(p.b.abs()) && w > 1e3 * f64::MIN_POSITIVE
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Outcome {
    pub value: f64,
    /// Discretization error of this level plus the committed inner errors.
    pub error: f64,
    /// Integral of `|f|`, for roundoff floors.
    pub l1: f64,
}

/// Integrates `f(seg, x)` over the listed segments `(seg, a, b)`.
///
/// `tolerance(value, l1)` gives the admissible total error. `counter` is the
/// shared evaluation counter checked against `max_evals`.
pub(crate) fn integrate<F, T>(
    mut f: F,
    segments: &[(usize, f64, f64)],
    tolerance: T,
    counter: &Cell<u64>,
    max_evals: u64,
) -> Result<Outcome>
where
    F: FnMut(usize, f64) -> Result<Sample>,
    T: Fn(f64, f64) -> f64,
{
    let mut heap = BinaryHeap::new();
    let mut frozen: Vec<Panel> = Vec::new();
    for &(seg, a, b) in segments {
        if b > a {
            heap.push(panel(&mut f, seg, a, b)?);
        }
    }
    let resum = |heap: &BinaryHeap<Panel>, frozen: &[Panel]| {
        let (mut value, mut err) = (0.0, 0.0);
        for p in heap.iter().chain(frozen.iter()) {
            value += p.est.value;
            err += p.err + p.est.inner_err;
        }
        (value, err)
    };
    let (mut value, mut err) = resum(&heap, &frozen);
    let mut l1: f64 = heap.iter().map(|p| p.est.l1).sum();
    let mut steps = 0u64;
    loop {
        let tol = tolerance(value, l1);
        if err <= tol {
            // Confirm against a fresh sum before accepting.
            let (v, e) = resum(&heap, &frozen);
            if e <= tolerance(v, l1) {
                return Ok(Outcome { value: v, error: e, l1 });
            }
            (value, err) = (v, e);
            continue;
        }
        let Some(worst) = heap.pop() else {
            return Err(Error::Accuracy(format!(
                "panels cannot be refined further: error {err:e} above tolerance {tol:e}"
            )));
        };
        if counter.get() > max_evals {
            return Err(Error::Accuracy(format!(
                "evaluation budget {max_evals} exhausted with error {err:e} above tolerance {tol:e}"
            )));
        }
        if !splittable(&worst) || worst.err == 0.0 {
            frozen.push(worst);
            continue;
        }
        let m = 0.5 * (worst.a + worst.b);
        let left = panel(&mut f, worst.seg, worst.a, m)?;
        let right = panel(&mut f, worst.seg, m, worst.b)?;
        value += left.est.value + right.est.value - worst.est.value;
        err += left.err + left.est.inner_err + right.err + right.est.inner_err - worst.err - worst.est.inner_err;
        l1 += left.est.l1 + right.est.l1 - worst.est.l1;
        heap.push(left);
        heap.push(right);
        steps += 1;
        if steps.is_multiple_of(512) {
            (value, err) = resum(&heap, &frozen);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Outcome {
        let counter = Cell::new(0);
        integrate(
            |_, x| {
                counter.set(counter.get() + 1);
                Ok((f(x), 0.0))
            },
            &[(0, a, b)],
            |v, _| tol * v.abs(),
            &counter,
            10_000_000,
        )
        .unwrap()
    }

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let r = rule();
        for k in 0..(2 * ORDER) {
            let sum: f64 = r.nodes.iter().zip(r.weights.iter()).map(|(x, w)| w * x.powi(k as i32)).sum();
            let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            assert!((sum - exact).abs() < 1e-14, "degree {k}");
        }
    }

    #[test]
    fn smooth_and_singular_integrands() {
        let o = run(|x| x.exp(), 0.0, 1.0, 1e-13);
        assert!((o.value - (1f64.exp() - 1.0)).abs() < 1e-13);
        // Integrable endpoint singularity x^{-0.7}: integral 1/0.3.
        let o = run(|x| x.powf(-0.7), 0.0, 1.0, 1e-9);
        assert!((o.value - 1.0 / 0.3).abs() < 1e-8 / 0.3, "{}", o.value);
        let o = run(|x| x.ln().powi(2), 0.0, 1.0, 1e-10);
        assert!((o.value - 2.0).abs() < 1e-9);
    }
}
