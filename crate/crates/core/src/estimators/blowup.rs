use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::line_fit;
use crate::error::{Error, Result};
use crate::evolution::{evolve, k_schedule, EvolveOptions};
use crate::grid::{build_grid, Domain, Grid};
use crate::linalg::smallest_eigenvalue;
use crate::operator::assemble_operator;
use crate::specfun::{ExponentMap, FractionalParams};

/// Smallest eigenvalue of `H` across refinement levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralTrend {
    pub hs: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// `λ_m − λ_{m+1}`.
    pub decrements: Vec<f64>,
    pub strictly_decreasing: bool,
    /// Decrements strictly increase from level to level.
    pub growing_gaps: bool,
    /// Some level does not decrease, or the decrements shrink and the finest
    /// value is positive.
    pub bounded_below: bool,
}

impl SpectralTrend {
    pub fn from_values(hs: &[f64], lambdas: &[f64]) -> Self {
        let decrements: Vec<f64> = lambdas.windows(2).map(|w| w[0] - w[1]).collect();
        let strictly_decreasing = decrements.iter().all(|g| *g > 0.0);
        let growing_gaps = strictly_decreasing && decrements.windows(2).all(|w| w[1] > w[0]);
        let shrinking = decrements.windows(2).all(|w| w[1] < w[0]);
        let last = lambdas.last().copied().unwrap_or(f64::NAN);
        let bounded_below = !strictly_decreasing || (shrinking && last > 0.0);
        Self {
            hs: hs.to_vec(),
            lambdas: lambdas.to_vec(),
            decrements,
            strictly_decreasing,
            growing_gaps,
            bounded_below,
        }
    }
}

/// `λ_min(L0 − diag(V))` for each spacing.
pub fn spectral_trend(
    params: FractionalParams,
    c: f64,
    domain: Domain,
    hs: &[f64],
) -> Result<SpectralTrend> {
    let mut lambdas = Vec::with_capacity(hs.len());
    for &h in hs {
        let grid = build_grid(domain, h)?;
        let op = assemble_operator(&grid, params, c, f64::INFINITY)?;
        lambdas.push(smallest_eigenvalue(&op.hamiltonian()));
    }
    Ok(SpectralTrend::from_values(hs, &lambdas))
}

/// `S(h) = Σ_{|x_i| ≤ r0} w_{c*}(x_i)² |x_i|^{−α} h^d`; the summand is `|x|^{−d}`.
pub fn mechanism_sum(grid: &Grid, params: FractionalParams, r0: f64) -> f64 {
    let e = 2.0 * params.beta_star() + params.alpha;
    let vol = grid.cell_volume();
    grid.radii()
        .iter()
        .filter(|r| **r <= r0 + 1e-12)
        .map(|r| r.powf(-e) * vol)
        .sum()
}

/// Fit of `S(h)` against `log(1/h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismFit {
    pub r0: f64,
    pub hs: Vec<f64>,
    pub sums: Vec<f64>,
    pub slope: f64,
    /// Area of the unit sphere: 2 in one dimension, 2π in two.
    pub expected_slope: f64,
    pub pass: bool,
}

pub const MECHANISM_REL_TOL: f64 = 0.25;

fn mechanism_fit(
    params: FractionalParams,
    domain: Domain,
    hs: &[f64],
    r0: f64,
) -> Result<MechanismFit> {
    let mut sums = Vec::with_capacity(hs.len());
    for &h in hs {
        sums.push(mechanism_sum(&build_grid(domain, h)?, params, r0));
    }
    let lx: Vec<f64> = hs.iter().map(|h| (1.0 / h).ln()).collect();
    let slope = line_fit(&lx, &sums).map(|f| f.slope).unwrap_or(f64::NAN);
    let expected_slope = match params.d {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 4.0 * PI,
    };
    Ok(MechanismFit {
        r0,
        hs: hs.to_vec(),
        sums,
        slope,
        expected_slope,
        pass: slope > 0.0 && (slope / expected_slope - 1.0).abs() <= MECHANISM_REL_TOL,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub c: f64,
    pub c_star: f64,
    pub spectral: SpectralTrend,
    pub t0s: Vec<f64>,
    /// Truncation levels up to the cap `max V` on the finest grid.
    pub ks: Vec<f64>,
    pub probe_radius: f64,
    /// `u_k(t0, x_probe)`, one row per `t0`, one column per `k`.
    pub probes: Vec<Vec<f64>>,
    /// Last over first probe value, per `t0`.
    pub growth: Vec<f64>,
    pub probes_increasing: bool,
    pub mechanism: MechanismFit,
    pub blowup: bool,
}

pub const PROBE_GROWTH: f64 = 10.0;

/// Spectral, probe and mechanism-integral diagnostics for `c > c*`.
///
/// The verdict is blow-up iff `λ_min` strictly decreases with growing gaps,
/// every probe grows by at least [`PROBE_GROWTH`] monotonically over the
/// schedule, and the mechanism sum diverges logarithmically.
#[allow(clippy::too_many_arguments)]
pub fn blowup_diagnostic(
    params: FractionalParams,
    c: f64,
    domain: Domain,
    hs: &[f64],
    u0: impl Fn(&Grid) -> Vec<f64>,
    t0s: &[f64],
    factor: f64,
    r0: f64,
) -> Result<BlowupReport> {
    let map = ExponentMap::new(params)?;
    let c_star = map.c_star();
    if c <= c_star {
        return Err(Error::Config(format!(
            "blow-up diagnostics need c > c* = {c_star}, got {c}"
        )));
    }
    if hs.len() < 3 {
        return Err(Error::Config(
            "blow-up diagnostics need three refinement levels".into(),
        ));
    }
    let spectral = spectral_trend(params, c, domain, hs)?;
    let finest = build_grid(domain, *hs.last().expect("non-empty"))?;
    let op = assemble_operator(&finest, params, c, f64::INFINITY)?;
    let mut ks = k_schedule(&op.potential, None, factor)?;
    ks.pop();
    let probe = finest.nearest_to_origin();
    let start = u0(&finest);
    let mut by_k = Vec::with_capacity(ks.len());
    for &k in &ks {
        let tr = evolve(&op.hamiltonian_at(k), &start, t0s, EvolveOptions::default())?;
        by_k.push(tr.states.iter().map(|s| s[probe]).collect::<Vec<f64>>());
    }
    let probes: Vec<Vec<f64>> = (0..t0s.len())
        .map(|ti| by_k.iter().map(|v| v[ti]).collect())
        .collect();
    let growth: Vec<f64> = probes
        .iter()
        .map(|row| row[row.len() - 1] / row[0])
        .collect();
    let probes_increasing = probes.iter().all(|row| row.windows(2).all(|w| w[1] > w[0]));
    let mechanism = mechanism_fit(params, domain, hs, r0)?;
    let blowup = spectral.strictly_decreasing
        && spectral.growing_gaps
        && probes_increasing
        && growth.iter().all(|g| *g >= PROBE_GROWTH)
        && mechanism.pass;
    Ok(BlowupReport {
        c,
        c_star,
        spectral,
        t0s: t0s.to_vec(),
        ks,
        probe_radius: finest.radius(probe),
        probes,
        growth,
        probes_increasing,
        mechanism,
        blowup,
    })
}
