//! Closed-form constants of the fractional Laplacian with Hardy potential.
//!
//! Everything here is a pure function of `(d, α)` and, where relevant, the
//! Hardy strength `c` or a power exponent `β`:
//!
//! * the jump intensity `A(d,α)` of the kernel `A(d,α)|x−y|^{−d−α}`,
//! * the sharp Hardy constant `c*(d,α)`,
//! * the power-weight multiplier `λ(β)` with `(−Δ)^{α/2}|x|^{−β} = λ(β)|x|^{−β−α}`,
//! * its inverse `β(c)` on `(0, c*]` and the weight `w_c(x) = |x|^{−β(c)}`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function on the real line (Lanczos, g = 7, with reflection below 1/2).
///
/// Returns `NaN` at the poles `0, −1, −2, …`.
pub fn gamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return f64::NAN;
    }
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

/// Dimension and order of the fractional Laplacian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractionalParams {
    pub d: usize,
    pub alpha: f64,
}

impl FractionalParams {
    /// Validates `d ∈ {1,2,3}` and `0 < α < min(2, d)`.
    pub fn new(d: usize, alpha: f64) -> Result<Self> {
        let p = Self { d, alpha };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.d) {
            return Err(Error::ParameterDomain(format!(
                "dimension d = {} not in {{1, 2, 3}}",
                self.d
            )));
        }
        let cap = (self.d as f64).min(2.0);
        if !(self.alpha.is_finite() && self.alpha > 0.0 && self.alpha < cap) {
            return Err(Error::ParameterDomain(format!(
                "alpha = {} outside (0, {cap}) for d = {}",
                self.alpha, self.d
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> f64 {
        self.d as f64
    }

    /// `β* = (d − α)/2`, the exponent of the critical weight.
    pub fn beta_star(&self) -> f64 {
        (self.dim() - self.alpha) / 2.0
    }
}

/// `A(d,α) = α Γ((d+α)/2) / (2^{1−α} π^{d/2} Γ(1−α/2))`.
pub fn intensity_constant(params: FractionalParams) -> Result<f64> {
    params.validate()?;
    let (d, a) = (params.dim(), params.alpha);
    Ok(a * gamma((d + a) / 2.0) / (2f64.powf(1.0 - a) * PI.powf(d / 2.0) * gamma(1.0 - a / 2.0)))
}

/// `c*(d,α) = 2^α Γ²((d+α)/4) / Γ²((d−α)/4)`.
pub fn hardy_constant(params: FractionalParams) -> Result<f64> {
    params.validate()?;
    let (d, a) = (params.dim(), params.alpha);
    let ratio = gamma((d + a) / 4.0) / gamma((d - a) / 4.0);
    Ok(2f64.powf(a) * ratio * ratio)
}

/// Power-weight multiplier
/// `λ(β) = 2^α Γ((α+β)/2) Γ((d−β)/2) / [Γ(β/2) Γ((d−α−β)/2)]` for `0 < β < d − α`.
pub fn multiplier(beta: f64, params: FractionalParams) -> Result<f64> {
    params.validate()?;
    let (d, a) = (params.dim(), params.alpha);
    if !(beta > 0.0 && beta < d - a) {
        return Err(Error::ParameterDomain(format!(
            "beta = {beta} outside (0, {})",
            d - a
        )));
    }
    Ok(
        2f64.powf(a) * gamma((a + beta) / 2.0) * gamma((d - beta) / 2.0)
            / (gamma(beta / 2.0) * gamma((d - a - beta) / 2.0)),
    )
}

/// Both closed-form constants of a parameter pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardyConstants {
    pub intensity: f64,
    pub c_star: f64,
}

impl HardyConstants {
    pub fn new(params: FractionalParams) -> Result<Self> {
        Ok(Self {
            intensity: intensity_constant(params)?,
            c_star: hardy_constant(params)?,
        })
    }
}

const ROOT_FLOOR: f64 = 1e-12;
const ROOT_MAX_ITER: usize = 200;

/// Inverse of the multiplier on `(0, β*]`: the unique `β` with `λ(β) = c`.
///
/// Bisection on `[1e−12, β*]` followed by a few secant steps.
pub fn beta_of_c(c: f64, params: FractionalParams) -> Result<f64> {
    let c_star = hardy_constant(params)?;
    let beta_star = params.beta_star();
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::OutOfRange(format!("c = {c} must be positive")));
    }
    if c > c_star * (1.0 + 1e-12) {
        return Err(Error::OutOfRange(format!(
            "c = {c} exceeds c* = {c_star}; no harmonic exponent exists"
        )));
    }
    if c >= c_star {
        return Ok(beta_star);
    }
    let f = |b: f64| multiplier(b, params).map(|v| v - c);
    let (mut lo, mut hi) = (ROOT_FLOOR, beta_star);
    let mut f_lo = f(lo)?;
    if f_lo >= 0.0 {
        return Ok(lo);
    }
    let tol = 1e-12 * c_star;
    for _ in 0..ROOT_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        // the bracket end at β* is exact, avoid evaluating there
        let f_mid = f(mid)?;
        if f_mid < 0.0 {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * beta_star {
            break;
        }
    }
    // secant polish from the two bracket ends
    let mut b0 = lo;
    let mut f0 = f_lo;
    let mut b1 = hi.min(beta_star * (1.0 - 1e-15));
    let mut f1 = f(b1)?;
    for _ in 0..8 {
        if f1.abs() <= tol * 1e-3 || (f1 - f0) == 0.0 {
            break;
        }
        let b2 = (b1 - f1 * (b1 - b0) / (f1 - f0)).clamp(lo.min(b1), beta_star);
        b0 = b1;
        f0 = f1;
        b1 = b2;
        f1 = f(b1)?;
    }
    let best = if f1.abs() <= f_lo.abs() { b1 } else { lo };
    if f(best)?.abs() > tol {
        return Err(Error::Numerical(format!(
            "beta_of_c did not converge for c = {c}"
        )));
    }
    Ok(best)
}

/// `w_c(x) = |x|^{−β(c)}` evaluated at a point given by its coordinates.
pub fn weight(x: &[f64], c: f64, params: FractionalParams) -> Result<f64> {
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r == 0.0 {
        return Err(Error::SingularPoint("weight evaluated at x = 0".into()));
    }
    let beta = beta_of_c(c, params)?;
    Ok(r.powf(-beta))
}

/// The exponent map `β ↦ λ(β)` and its inverse for one parameter pair.
///
/// Immutable after construction and therefore freely shareable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentMap {
    pub params: FractionalParams,
    pub constants: HardyConstants,
    pub beta_star: f64,
}

impl ExponentMap {
    pub fn new(params: FractionalParams) -> Result<Self> {
        Ok(Self {
            params,
            constants: HardyConstants::new(params)?,
            beta_star: params.beta_star(),
        })
    }

    pub fn c_star(&self) -> f64 {
        self.constants.c_star
    }

    pub fn intensity(&self) -> f64 {
        self.constants.intensity
    }

    pub fn multiplier(&self, beta: f64) -> Result<f64> {
        multiplier(beta, self.params)
    }

    pub fn beta_of_c(&self, c: f64) -> Result<f64> {
        beta_of_c(c, self.params)
    }

    /// Exponent used for weights at strength `c`: `β(min(c, c*))`.
    /// Supercritical strengths fall back to the critical exponent.
    pub fn weight_exponent(&self, c: f64) -> Result<f64> {
        self.beta_of_c(c.min(self.c_star()))
    }

    /// Weight `|x|^{−β}` at radius `r > 0`.
    pub fn weight_at_radius(&self, r: f64, beta: f64) -> Result<f64> {
        if r <= 0.0 {
            return Err(Error::SingularPoint(format!("radius {r} is not positive")));
        }
        Ok(r.powf(-beta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn gamma_matches_high_precision_values() {
        // 40-digit reference values
        assert!(rel(gamma(0.3), 2.991_568_987_687_591) < 1e-13);
        assert!(rel(gamma(4.7), 15.431_411_600_047_435) < 1e-13);
        assert!(rel(gamma(-1.5), 2.363_271_801_207_355) < 1e-13);
        assert!(rel(gamma(0.001), 999.423_772_484_595_4) < 1e-13);
        assert!(rel(gamma(0.5), PI.sqrt()) < 1e-14);
        assert!(gamma(0.0).is_nan() && gamma(-2.0).is_nan());
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(FractionalParams::new(1, 1.0).is_err());
        assert!(FractionalParams::new(2, 2.0).is_err());
        assert!(FractionalParams::new(4, 0.5).is_err());
        assert!(FractionalParams::new(3, 0.0).is_err());
        assert!(FractionalParams::new(3, 1.99).is_ok());
    }

    #[test]
    fn intensity_vanishes_with_alpha() {
        let small = intensity_constant(FractionalParams::new(2, 1e-6).unwrap()).unwrap();
        assert!(small > 0.0 && small < 1e-5);
    }

    #[test]
    fn beta_of_c_error_paths() {
        let p = FractionalParams::new(1, 0.5).unwrap();
        let cs = hardy_constant(p).unwrap();
        assert!(matches!(beta_of_c(0.0, p), Err(Error::OutOfRange(_))));
        assert!(matches!(beta_of_c(1.01 * cs, p), Err(Error::OutOfRange(_))));
        assert_eq!(beta_of_c(cs, p).unwrap(), p.beta_star());
    }

    #[test]
    fn multiplier_domain() {
        let p = FractionalParams::new(1, 0.5).unwrap();
        assert!(multiplier(0.0, p).is_err());
        assert!(multiplier(0.5, p).is_err());
        assert!(multiplier(0.49, p).is_ok());
    }

    #[test]
    fn weight_values() {
        let p = FractionalParams::new(1, 0.5).unwrap();
        let cs = hardy_constant(p).unwrap();
        assert!(matches!(
            weight(&[0.0], cs, p),
            Err(Error::SingularPoint(_))
        ));
        assert!((weight(&[1.0], 0.3 * cs, p).unwrap() - 1.0).abs() < 1e-15);
        let w2 = weight(&[-2.0], cs, p).unwrap();
        assert!(rel(w2, 2f64.powf(-0.25)) < 1e-14);
        assert!(weight(&[0.3], 0.5 * cs, p).unwrap() >= weight(&[0.6], 0.5 * cs, p).unwrap());
    }
}
