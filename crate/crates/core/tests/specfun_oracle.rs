//! Closed-form constants against frozen high-precision values and an
//! independent singular-integral quadrature of the power-weight action.

// Frozen values carry every digit the oracle produced.
#![allow(clippy::excessive_precision, clippy::approx_constant)]

use fracheat_core::quad::{integrate, integrate_to_infinity, QuadOptions};
use fracheat_core::specfun::gamma;
use fracheat_core::*;

// 40-digit Gamma evaluations, rounded to double precision.
const A_2_1: f64 = 0.159_154_943_091_895_34;
const A_1_HALF: f64 = 0.199_471_140_200_716_34;
const A_3_1P5: f64 = 0.119_050_567_376_701_82;
const CSTAR_2_1: f64 = 0.228_473_290_522_231_81;
const CSTAR_1_HALF: f64 = 0.139_999_677_452_482_63;
const CSTAR_3_1: f64 = 0.636_619_772_367_581_34;
const LAMBDA_1_HALF_01: f64 = 0.093_155_575_103_745_69;
const LAMBDA_1_03_02: f64 = 0.287_052_348_797_397_84;
const LAMBDA_1_025_05: f64 = 0.374_165_307_654_895_54;
const BETA_HALF_CSTAR: f64 = 0.068_338_214_960_866_16;

fn p(d: usize, alpha: f64) -> FractionalParams {
    FractionalParams::new(d, alpha).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn intensity_constants() {
    assert!(
        rel(
            intensity_constant(p(2, 1.0)).unwrap(),
            1.0 / (2.0 * std::f64::consts::PI)
        ) < 1e-13
    );
    assert!(rel(intensity_constant(p(2, 1.0)).unwrap(), A_2_1) < 1e-13);
    assert!(rel(intensity_constant(p(1, 0.5)).unwrap(), A_1_HALF) < 1e-12);
    assert!(rel(intensity_constant(p(3, 1.5)).unwrap(), A_3_1P5) < 1e-12);
}

#[test]
fn intensity_vanishes_as_alpha_shrinks() {
    let small = intensity_constant(p(2, 1e-8)).unwrap();
    assert!(small > 0.0 && small < 1e-8);
}

#[test]
fn hardy_constants() {
    let g = gamma(0.75) / gamma(0.25);
    assert!(rel(hardy_constant(p(2, 1.0)).unwrap(), 2.0 * g * g) < 1e-12);
    assert!(rel(hardy_constant(p(2, 1.0)).unwrap(), CSTAR_2_1) < 1e-12);
    let g = gamma(0.375) / gamma(0.125);
    assert!(rel(hardy_constant(p(1, 0.5)).unwrap(), 2f64.sqrt() * g * g) < 1e-12);
    assert!(rel(hardy_constant(p(1, 0.5)).unwrap(), CSTAR_1_HALF) < 1e-12);
    assert!(rel(hardy_constant(p(3, 1.0)).unwrap(), CSTAR_3_1) < 1e-12);
}

#[test]
fn multiplier_frozen_values() {
    assert!(rel(multiplier(0.1, p(1, 0.5)).unwrap(), LAMBDA_1_HALF_01) < 1e-12);
    assert!(rel(multiplier(0.4, p(1, 0.5)).unwrap(), LAMBDA_1_HALF_01) < 1e-12);
    assert!(rel(multiplier(0.2, p(1, 0.3)).unwrap(), LAMBDA_1_03_02) < 1e-12);
    assert!(rel(multiplier(0.5, p(1, 0.25)).unwrap(), LAMBDA_1_025_05) < 1e-12);
}

#[test]
fn critical_constant_equals_multiplier_at_beta_star() {
    for d in 1..=3usize {
        for s in [0.25, 0.5, 0.75] {
            let q = p(d, s * (d as f64).min(2.0));
            let cs = hardy_constant(q).unwrap();
            assert!(
                rel(multiplier(q.beta_star(), q).unwrap(), cs) < 1e-10,
                "d={d} s={s}"
            );
        }
    }
}

#[test]
fn inverse_map_at_half_critical() {
    let q = p(1, 0.5);
    let b = beta_of_c(0.5 * CSTAR_1_HALF, q).unwrap();
    assert!((b - BETA_HALF_CSTAR).abs() < 1e-11);
    assert!((beta_of_c(hardy_constant(q).unwrap(), q).unwrap() - 0.25).abs() < 1e-12);
}

#[test]
fn weight_examples() {
    let q = p(1, 0.5);
    let cs = hardy_constant(q).unwrap();
    assert!((weight(&[1.0], 0.3 * cs, q).unwrap() - 1.0).abs() < 1e-15);
    assert!((weight(&[2.0], cs, q).unwrap() - 2f64.powf(-0.25)).abs() < 1e-12);
    assert!(weight(&[0.5], 0.5 * cs, q).unwrap() >= weight(&[0.7], 0.5 * cs, q).unwrap());
    assert!(matches!(
        weight(&[0.0], cs, q),
        Err(Error::SingularPoint(_))
    ));
}

/// `A p.v.∫ (x^{−β} − |y|^{−β}) |x − y|^{−1−α} dy` at `x > 0`, divided by `x^{−β−α}`.
fn quadrature_multiplier(beta: f64, alpha: f64, x: f64) -> f64 {
    let a = intensity_constant(p(1, alpha)).unwrap();
    let wx = x.powf(-beta);
    let g = |y: f64| wx - y.abs().powf(-beta);
    let opts = QuadOptions {
        rel_tol: 1e-11,
        abs_tol: 1e-14,
        max_intervals: 10_000,
    };
    // fold the principal value about x: numerator is O(s²) after pairing,
    // use its Taylor series where the difference cancels
    let (b2, b4) = (
        beta * (beta + 1.0),
        beta * (beta + 1.0) * (beta + 2.0) * (beta + 3.0),
    );
    let paired = |s: f64| {
        if s < 1e-2 * x {
            -(b2 * x.powf(-beta - 2.0) * s * s + b4 * x.powf(-beta - 4.0) * s.powi(4) / 12.0)
        } else {
            g(x - s) + g(x + s)
        }
    };
    let near = integrate(|s: f64| paired(s) * s.powf(-1.0 - alpha), 0.0, 0.5 * x, opts)
        .unwrap()
        .value
        // u = x − s keeps the |y|^{−β} singularity exactly at u = 0
        + integrate(|u: f64| (g(u) + g(2.0 * x - u)) * (x - u).powf(-1.0 - alpha), 0.0, 0.5 * x, opts)
            .unwrap()
            .value;
    let right = integrate_to_infinity(
        |y| g(y) * (y - x).powf(-1.0 - alpha),
        2.0 * x,
        1.0 + alpha,
        opts,
    )
    .unwrap()
    .value;
    // negative half-line, y ↦ −y
    let left = integrate(|y: f64| g(y) * (x + y).powf(-1.0 - alpha), 0.0, x, opts)
        .unwrap()
        .value
        + integrate_to_infinity(|y| g(y) * (x + y).powf(-1.0 - alpha), x, 1.0 + alpha, opts)
            .unwrap()
            .value;
    a * (near + right + left) / x.powf(-beta - alpha)
}

#[test]
fn multiplier_matches_singular_integral() {
    for (beta, alpha, x) in [
        (0.1, 0.5, 1.0),
        (0.25, 0.5, 0.5),
        (0.3, 0.5, 2.0),
        (0.2, 0.3, 1.0),
        (0.6, 0.25, 1.5),
    ] {
        let closed = multiplier(beta, p(1, alpha)).unwrap();
        let quad = quadrature_multiplier(beta, alpha, x);
        assert!(
            rel(quad, closed) < 1e-7,
            "β={beta} α={alpha} x={x}: {quad} vs {closed}"
        );
    }
}

#[test]
fn out_of_range_strengths() {
    let q = p(1, 0.5);
    assert!(matches!(beta_of_c(0.0, q), Err(Error::OutOfRange(_))));
    assert!(matches!(
        beta_of_c(1.5 * CSTAR_1_HALF, q),
        Err(Error::OutOfRange(_))
    ));
    assert!(matches!(multiplier(0.5, q), Err(Error::ParameterDomain(_))));
    assert!(matches!(
        FractionalParams::new(1, 1.0),
        Err(Error::ParameterDomain(_))
    ));
}
