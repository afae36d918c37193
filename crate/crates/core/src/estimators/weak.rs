use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{distance, Grid, Point};
use crate::operator::DiscreteOperator;

/// Time factor `η(s)` of a separable test function `η(s)ψ(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeProfile {
    /// `η ≡ 1`; boundary terms at `0` and `T` are kept.
    Constant,
    /// `η(s) = sin²(πs/T)`, vanishing at both ends.
    SineSquared,
}

impl TimeProfile {
    fn eval(self, s: f64, t_end: f64) -> f64 {
        match self {
            TimeProfile::Constant => 1.0,
            TimeProfile::SineSquared => (PI * s / t_end).sin().powi(2),
        }
    }
}

/// Smooth bump `exp(1 − 1/(1 − |x−x0|²/ρ²))` on the nodes.
pub fn bump(grid: &Grid, center: Point, radius: f64) -> Vec<f64> {
    let d = grid.dim();
    grid.nodes
        .iter()
        .map(|x| {
            let q = (distance(x, &center, d) / radius).powi(2);
            if q < 1.0 {
                (1.0 - 1.0 / (1.0 - q)).exp()
            } else {
                0.0
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakResidual {
    pub residual: f64,
    /// Largest of the individual terms.
    pub scale: f64,
    pub relative: f64,
    pub steps: usize,
}

/// Residual of `⟨u(T),φ(T)⟩ − ⟨u(0),φ(0)⟩ + ∫⟨u,(L0 − W)φ⟩ − ⟨u,∂_sφ⟩ ds`
/// for `φ = η(s)ψ(x)`, `W = min(V, k)`; trapezoid in time and central
/// differences for `∂_s η`. `times` must be a uniform mesh starting at 0.
pub fn weak_form_residual(
    op: &DiscreteOperator,
    k: f64,
    times: &[f64],
    states: &[Vec<f64>],
    psi: &[f64],
    profile: TimeProfile,
) -> Result<WeakResidual> {
    let grid = &op.grid;
    op.check_len(psi)?;
    if times.len() < 3 || states.len() != times.len() {
        return Err(Error::Contract(
            "weak form needs at least three matching times and states".into(),
        ));
    }
    if times[0] != 0.0 {
        return Err(Error::Contract("time mesh must start at 0".into()));
    }
    let dt = times[1] - times[0];
    if times
        .windows(2)
        .any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt)
    {
        return Err(Error::Contract("time mesh must be uniform".into()));
    }
    for (i, v) in psi.iter().enumerate() {
        if *v != 0.0 {
            if grid.domain.boundary_distance(&grid.nodes[i]) < grid.h {
                return Err(Error::Config(
                    "test function support touches the boundary".into(),
                ));
            }
            if grid.radius(i) < grid.h {
                return Err(Error::Config(
                    "test function support touches the cells at the origin".into(),
                ));
            }
        }
    }
    let vol = grid.cell_volume();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * vol;
    let l0psi = op.apply_l0(psi)?;
    let wpsi: Vec<f64> = psi
        .iter()
        .zip(&op.potential)
        .map(|(p, v)| p * v.min(k))
        .collect();
    let t_end = *times.last().expect("non-empty");
    let m = times.len();
    let eta: Vec<f64> = times.iter().map(|s| profile.eval(*s, t_end)).collect();
    let deta: Vec<f64> = (0..m)
        .map(|j| {
            if j == 0 {
                (eta[1] - eta[0]) / dt
            } else if j == m - 1 {
                (eta[m - 1] - eta[m - 2]) / dt
            } else {
                (eta[j + 1] - eta[j - 1]) / (2.0 * dt)
            }
        })
        .collect();
    let trap = |f: &dyn Fn(usize) -> f64| -> f64 {
        let mut s = 0.5 * (f(0) + f(m - 1));
        for j in 1..m - 1 {
            s += f(j);
        }
        s * dt
    };
    let a = trap(&|j| eta[j] * dot(&states[j], &l0psi));
    let b = trap(&|j| eta[j] * dot(&states[j], &wpsi));
    let c = trap(&|j| deta[j] * dot(&states[j], psi));
    let end = eta[m - 1] * dot(&states[m - 1], psi);
    let start = eta[0] * dot(&states[0], psi);
    let residual = end - start + a - b - c;
    let scale = [end, start, a, b, c]
        .iter()
        .fold(0.0f64, |s, v| s.max(v.abs()));
    Ok(WeakResidual {
        residual,
        scale,
        relative: if scale > 0.0 {
            residual.abs() / scale
        } else {
            0.0
        },
        steps: m - 1,
    })
}
