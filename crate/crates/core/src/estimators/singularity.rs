use serde::{Deserialize, Serialize};

use super::weighted_line_fit;
use crate::error::{Error, Result};
use crate::grid::Grid;

/// Log-log slope of a state near the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub r_min: f64,
    pub r_max: f64,
    pub nodes: usize,
    pub slope: f64,
    pub stderr: f64,
    /// `−β(c)`.
    pub target: f64,
    pub pass: bool,
}

pub const EXPONENT_TOL: f64 = 0.05;

/// Fits `log u ≈ a + s log|x|` on `r ∈ [2h, 0.1·inradius]`.
///
/// Nodes are weighted by `|x|^{−d}` so that every scale of the window
/// counts equally. Passes iff `|s − target| ≤ max(0.05, 2·stderr)`.
pub fn singularity_exponent(u: &[f64], grid: &Grid, target: f64) -> Result<ExponentFit> {
    let r_min = 2.0 * grid.h;
    let r_max = 0.1 * grid.domain.inradius();
    singularity_exponent_on(u, grid, target, r_min, r_max)
}

pub fn singularity_exponent_on(
    u: &[f64],
    grid: &Grid,
    target: f64,
    r_min: f64,
    r_max: f64,
) -> Result<ExponentFit> {
    if u.len() != grid.len() {
        return Err(Error::Contract("state length differs from the grid".into()));
    }
    let d = grid.dim() as i32;
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    let mut wt = Vec::new();
    for (i, &ui) in u.iter().enumerate() {
        let r = grid.radius(i);
        if r >= r_min - 1e-12 && r <= r_max + 1e-12 {
            if !(ui > 0.0) {
                return Err(Error::Config(format!(
                    "state is not positive at radius {r}"
                )));
            }
            lx.push(r.ln());
            ly.push(ui.ln());
            wt.push(r.powi(-d));
        }
    }
    if lx.len() < 6 {
        return Err(Error::Config(format!(
            "fit window [{r_min}, {r_max}] holds {} nodes, at least 6 needed",
            lx.len()
        )));
    }
    let fit = weighted_line_fit(&lx, &ly, &wt)
        .ok_or_else(|| Error::Config("fit window has no radial spread".into()))?;
    let pass = (fit.slope - target).abs() <= EXPONENT_TOL.max(2.0 * fit.stderr);
    Ok(ExponentFit {
        r_min,
        r_max,
        nodes: lx.len(),
        slope: fit.slope,
        stderr: fit.stderr,
        target,
        pass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpClassification {
    Convergent,
    Divergent,
}

/// Refinement behaviour of `Σ |u_i|^p h^d` for one exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpClass {
    pub p: f64,
    pub norms: Vec<f64>,
    /// `log2(|Δ_1| / |Δ_2|)` from the last three levels.
    pub growth_exponent: f64,
    /// `d − pβ`.
    pub expected_exponent: f64,
    pub classification: LpClassification,
    pub expected: LpClassification,
    /// Classification matches and, when divergent, the exponent is within 0.15.
    pub pass: bool,
}

pub const LP_EXPONENT_TOL: f64 = 0.15;

/// Classifies `p`-norms of states on successively halved grids.
///
/// `levels` pairs each grid with its state, coarse to fine; consecutive
/// spacings must halve.
pub fn lp_scan(levels: &[(&Grid, &[f64])], beta: f64, p_list: &[f64]) -> Result<Vec<LpClass>> {
    if levels.len() < 3 {
        return Err(Error::Config(
            "L^p scan needs at least three refinement levels".into(),
        ));
    }
    for w in levels.windows(2) {
        let ratio = w[0].0.h / w[1].0.h;
        if (ratio - 2.0).abs() > 1e-9 {
            return Err(Error::Config(
                "L^p scan levels must halve the spacing".into(),
            ));
        }
    }
    let d = levels[0].0.dim() as f64;
    p_list
        .iter()
        .map(|&p| {
            if p < 1.0 {
                return Err(Error::Config(format!("exponent p = {p} below 1")));
            }
            let norms: Vec<f64> = levels
                .iter()
                .map(|(g, u)| u.iter().map(|v| v.abs().powf(p)).sum::<f64>() * g.cell_volume())
                .collect();
            let m = norms.len();
            let d1 = norms[m - 2] - norms[m - 3];
            let d2 = norms[m - 1] - norms[m - 2];
            let growth_exponent = (d1.abs() / d2.abs()).log2();
            let expected_exponent = d - p * beta;
            let classification = if growth_exponent > 0.0 {
                LpClassification::Convergent
            } else {
                LpClassification::Divergent
            };
            let expected = if expected_exponent > 0.0 {
                LpClassification::Convergent
            } else {
                LpClassification::Divergent
            };
            let pass = classification == expected
                && (expected == LpClassification::Convergent
                    || (growth_exponent - expected_exponent).abs() <= LP_EXPONENT_TOL);
            Ok(LpClass {
                p,
                norms,
                growth_exponent,
                expected_exponent,
                classification,
                expected,
                pass,
            })
        })
        .collect()
}
