//! Estimators turning kernels and trajectories into measured constants and
//! pass/fail checks.

mod blowup;
mod kernel;
mod singularity;
mod sobolev;
mod weak;

pub use blowup::{
    blowup_diagnostic, mechanism_sum, spectral_trend, BlowupReport, MechanismFit, SpectralTrend,
    MECHANISM_REL_TOL, PROBE_GROWTH,
};
pub use kernel::{
    kernel_sandwich, ultracontractive_envelope, weighted_l1_bound, BoundFit, CompactSet, Envelope,
    SandwichPoint, WeightedL1Report,
};
pub use singularity::{
    lp_scan, singularity_exponent, singularity_exponent_on, ExponentFit, LpClass, LpClassification,
    EXPONENT_TOL, LP_EXPONENT_TOL,
};
pub use sobolev::{
    hardy_ratio_min, sobolev_quotient, sobolev_ratio, SobolevExponent, SobolevReport,
};
pub use weak::{bump, weak_form_residual, TimeProfile, WeakResidual};

use serde::{Deserialize, Serialize};

/// One measured quantity with its verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// `|measured − expected| ≤ tolerance`.
    pub fn close(name: impl Into<String>, measured: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            expected,
            tolerance,
            pass: (measured - expected).abs() <= tolerance,
        }
    }

    /// `measured ≤ expected + tolerance`.
    pub fn at_most(name: impl Into<String>, measured: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            expected,
            tolerance,
            pass: measured <= expected + tolerance,
        }
    }

    /// `measured ≥ expected − tolerance`.
    pub fn at_least(name: impl Into<String>, measured: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            expected,
            tolerance,
            pass: measured >= expected - tolerance,
        }
    }

    /// Boolean outcome recorded as 1/0.
    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            measured: if ok { 1.0 } else { 0.0 },
            expected: 1.0,
            tolerance: 0.0,
            pass: ok,
        }
    }
}

/// Weighted least-squares line `y ≈ a + s x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub stderr: f64,
}

pub fn weighted_line_fit(x: &[f64], y: &[f64], w: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n || w.len() != n {
        return None;
    }
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(w).map(|(a, b)| b * (a - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((a, c), b)| b * (a - mx) * (c - my))
        .sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if n > 2 {
        let rss: f64 = x
            .iter()
            .zip(y)
            .zip(w)
            .map(|((a, c), b)| b * (c - intercept - slope * a).powi(2))
            .sum();
        // effective sample size for non-uniform weights
        let w2: f64 = w.iter().map(|b| b * b).sum();
        let n_eff = sw * sw / w2;
        (rss / sw * n_eff / (n_eff - 2.0).max(1.0) / (sxx / sw) / n_eff).sqrt()
    } else {
        0.0
    };
    Some(LineFit {
        slope,
        intercept,
        stderr,
    })
}

pub fn line_fit(x: &[f64], y: &[f64]) -> Option<LineFit> {
    weighted_line_fit(x, y, &vec![1.0; x.len()])
}
