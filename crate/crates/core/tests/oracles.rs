//! Closed forms checked against the singular-integral quadrature.

use fhl_core::classifier::{Domain, ProblemInstance};
use fhl_core::fracop::{cs_via_integral, frac_laplacian_radial, hardy_apply_numeric, QuadratureConfig};
use fhl_core::radialfn::{apply_hardy_closed, kelvin, RadialFunction};
use fhl_core::solutions::{pure_power_solution, verify_recipe, SolutionRecipe};
use fhl_core::specfun::{c_s, c_s_deriv, Params};
use fhl_core::spectrum::solve_spectrum;
use fhl_core::Error;

/// Derivatives vanish at the vertex, so the absolute floor must be reachable.
fn config() -> QuadratureConfig {
    QuadratureConfig { abs_tol: 1e-7, ..QuadratureConfig::default() }
}

fn sample_taus(p: &Params, k: usize) -> Vec<f64> {
    let (lo, hi) = (-p.dim() + 0.2, 2.0 * p.s - 0.2);
    (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect()
}

#[test]
fn symbol_derivatives_match_log_power_integrals() {
    let cfg = config();
    for (n, s) in [(2, 0.25), (3, 0.5), (4, 0.75)] {
        let p = Params::new(n, s).unwrap();
        for tau in sample_taus(&p, 4) {
            for order in 0..=4u32 {
                let exact = c_s_deriv(&p, tau, order as usize).unwrap();
                let q = cs_via_integral(&p, tau, order, &cfg).unwrap();
                let diff = (q.value - exact).abs();
                assert!(
                    diff <= q.error_estimate + 1e-9 * exact.abs().max(1.0),
                    "N={n} s={s} tau={tau} order={order}: {} vs {exact} (err {})",
                    q.value,
                    q.error_estimate
                );
                assert!(q.error_estimate <= cfg.rel_tol * exact.abs() + cfg.abs_tol);
            }
        }
    }
}

#[test]
fn second_derivative_is_negative() {
    let cfg = config();
    for (n, s) in [(2, 0.3), (3, 0.5), (5, 0.9)] {
        let p = Params::new(n, s).unwrap();
        for tau in sample_taus(&p, 5) {
            let q = cs_via_integral(&p, tau, 2, &cfg).unwrap();
            assert!(q.value + q.error_estimate < 0.0, "N={n} s={s} tau={tau}: {q:?}");
        }
    }
}

#[test]
fn powers_scale_homogeneously() {
    let cfg = QuadratureConfig::default();
    let p = Params::new(3, 0.4).unwrap();
    for tau in [-2.5, -1.0, 0.5] {
        let f = RadialFunction::single(&p, 1.0, tau, 0).unwrap();
        let at_one = frac_laplacian_radial(&f, 1.0, &p, &cfg).unwrap();
        for r in [0.01, 0.7, 30.0] {
            let q = frac_laplacian_radial(&f, r, &p, &cfg).unwrap();
            let scale = r.powf(tau - 2.0 * p.s);
            let tol = q.error_estimate + scale * at_one.error_estimate;
            assert!((q.value - scale * at_one.value).abs() <= tol, "tau={tau} r={r}");
        }
    }
}

#[test]
fn kelvin_transform_conjugates_the_operator() {
    let cfg = QuadratureConfig::default();
    for (n, s, tau) in [(3u32, 0.5, -1.2), (2, 0.3, -0.5), (4, 0.8, 0.9)] {
        let p = Params::new(n, s).unwrap();
        let f = RadialFunction::single(&p, 1.0, tau, 0).unwrap();
        let fk = kelvin(&f, &p).unwrap();
        for r in [0.5, 2.0, 5.0] {
            let lhs = frac_laplacian_radial(&fk, r, &p, &cfg).unwrap().value;
            let inner = frac_laplacian_radial(&f, 1.0 / r, &p, &cfg).unwrap().value;
            let rhs = r.powf(-2.0 * s - n as f64) * inner;
            assert!((lhs - rhs).abs() <= 1e-4 * rhs.abs(), "N={n} s={s} r={r}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn log_power_expansion_for_odd_order_and_mixed_sums() {
    let cfg = config();
    let p = Params::new(2, 0.3).unwrap();
    let mu = -0.1;
    let f = RadialFunction::new(
        &p,
        vec![
            fhl_core::radialfn::Term::new(1.0, -0.7, 3),
            fhl_core::radialfn::Term::new(-0.5, 0.2, 1),
            fhl_core::radialfn::Term::new(2.0, -1.5, 0),
        ],
    )
    .unwrap();
    let closed = apply_hardy_closed(&f, &p, mu).unwrap();
    for r in [0.05, 0.5, 3.0] {
        let q = hardy_apply_numeric(&f, r, &p, mu, &cfg).unwrap();
        let c = closed.eval(r);
        assert!((q.value - c).abs() <= 1e-5 * c.abs().max(1.0), "r={r}: {} vs {c}", q.value);
    }
}

#[test]
fn power_solution_amplitude_is_unique() {
    let p = Params::new(3, 0.5).unwrap();
    let inst =
        ProblemInstance { params: p, mu: 0.0, theta: 0.0, p: 2.0, domain: Domain::WholeSpace, q_low: 1.0, q_up: None };
    let sp = solve_spectrum(&p, 0.0).unwrap();
    let recipe = pure_power_solution(&inst, &sp).unwrap();
    let cfg = QuadratureConfig::default();
    verify_recipe(&recipe, &inst, &sp, &[0.5, 1.0, 2.0], &cfg, 1e-4).unwrap();
    let SolutionRecipe::PurePower { tau, amplitude, validity } = recipe else { panic!("expected a power") };
    assert!((tau + 1.0).abs() < 1e-15);
    assert!((amplitude - c_s(&p, -1.0).unwrap()).abs() < 1e-14);
    let tampered = SolutionRecipe::PurePower { tau, amplitude: amplitude * 1.1, validity };
    let err = verify_recipe(&tampered, &inst, &sp, &[0.5, 1.0, 2.0], &cfg, 1e-4).unwrap_err();
    assert!(matches!(err, Error::VerificationFailure { ref radii } if radii.len() == 3));
}

#[test]
fn divergent_integrands_are_rejected() {
    let p = Params::new(3, 0.5).unwrap();
    assert!(matches!(RadialFunction::single(&p, 1.0, 1.0, 0), Err(Error::Domain(_))));
    assert!(matches!(RadialFunction::single(&p, 1.0, -3.0, 0), Err(Error::Domain(_))));
    let f = RadialFunction::single(&p, 1.0, -1.0, 0).unwrap();
    let bad = QuadratureConfig { cutoff_factor: 10.0, ..QuadratureConfig::default() };
    assert!(frac_laplacian_radial(&f, 1.0, &p, &bad).is_err());
    assert!(frac_laplacian_radial(&f, 0.0, &p, &QuadratureConfig::default()).is_err());
}
