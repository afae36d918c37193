use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{form_value, FormEvaluator, FormVariant};

/// Integrability exponent of the weighted Sobolev inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SobolevExponent {
    /// `p = d/(d−α)`.
    Subcritical,
    /// `p = (1 + d/(d−α))/2`.
    Critical,
}

impl SobolevExponent {
    pub fn value(self, d: usize, alpha: f64) -> f64 {
        let top = d as f64 / (d as f64 - alpha);
        match self {
            SobolevExponent::Subcritical => top,
            SobolevExponent::Critical => 0.5 * (1.0 + top),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevReport {
    pub p: f64,
    pub seed: u64,
    /// Largest `‖f²‖_{L^p(w² dx)} / Q[f]` over all samples.
    pub quotient: f64,
    pub random_max: f64,
    /// Quotient of `|x|^{−γ}` profiles, one per `γ`.
    pub profile_gammas: Vec<f64>,
    pub profile_quotients: Vec<f64>,
    pub samples: usize,
}

/// `‖f²‖_{L^p(w² dx)} / Q[f]` for one vector.
pub fn sobolev_ratio(ev: &FormEvaluator<'_>, f: &[f64], p: f64) -> Result<f64> {
    let w = ev
        .weight
        .as_ref()
        .ok_or_else(|| Error::Contract("Sobolev quotient needs a weighted evaluator".into()))?;
    let vol = ev.op.grid.cell_volume();
    if f.iter().all(|v| *v == 0.0) {
        return Err(Error::Contract(
            "Sobolev quotient of the zero vector".into(),
        ));
    }
    let num = (f
        .iter()
        .zip(w)
        .map(|(v, wi)| v.abs().powf(2.0 * p) * wi * wi)
        .sum::<f64>()
        * vol)
        .powf(1.0 / p);
    let q = form_value(ev, f, FormVariant::Weighted)?;
    if !(q > 0.0) {
        return Err(Error::Invariant(format!(
            "weighted form is {q} on a nonzero vector, the assembly is defective"
        )));
    }
    Ok(num / q)
}

/// Estimates the best constant of `‖f²‖_{L^p(w²)} ≤ A Q[f]` from below.
///
/// Samples are `random` vectors with i.i.d. uniform entries supported at
/// distance `≥ 0.25·inradius` from the boundary, and cut-off profiles
/// `|x|^{−γ}` for `γ ∈ {0.25, 0.5, 0.75, 0.9}·β`.
pub fn sobolev_quotient(
    ev: &FormEvaluator<'_>,
    beta: f64,
    exponent: SobolevExponent,
    random: usize,
    seed: u64,
) -> Result<SobolevReport> {
    let op = ev.op;
    let grid = &op.grid;
    if ev.weight.is_none() {
        return Err(Error::Contract(
            "Sobolev quotient needs a weighted evaluator".into(),
        ));
    }
    let p = exponent.value(grid.dim(), op.params.alpha);
    let delta = 0.25 * grid.domain.inradius();
    let inside: Vec<bool> = grid
        .nodes
        .iter()
        .map(|x| grid.domain.boundary_distance(x) >= delta)
        .collect();
    let quotient = |f: &[f64]| sobolev_ratio(ev, f, p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut random_max: f64 = 0.0;
    for _ in 0..random {
        let f: Vec<f64> = inside
            .iter()
            .map(|&ok| if ok { rng.gen::<f64>() } else { 0.0 })
            .collect();
        random_max = random_max.max(quotient(&f)?);
    }
    let gammas: Vec<f64> = [0.25, 0.5, 0.75, 0.9].iter().map(|s| s * beta).collect();
    let profile_quotients = gammas
        .iter()
        .map(|&g| {
            let f: Vec<f64> = (0..grid.len())
                .map(|i| {
                    let r = grid.radius(i);
                    let cut = if r < delta {
                        (1.0 - (r / delta).powi(2)).powi(2)
                    } else {
                        0.0
                    };
                    if inside[i] {
                        r.powf(-g) * cut
                    } else {
                        0.0
                    }
                })
                .collect();
            quotient(&f)
        })
        .collect::<Result<Vec<f64>>>()?;
    let quotient = profile_quotients.iter().copied().fold(random_max, f64::max);
    Ok(SobolevReport {
        p,
        seed,
        quotient,
        random_max,
        profile_gammas: gammas,
        profile_quotients,
        samples: random + 4,
    })
}

/// Smallest `Q_hardy[f] / Q_plain[f]` over `samples` seeded random vectors.
///
/// The Hardy inequality with the sharp constant predicts a value of at least
/// `1 − c/c*` for `c ≤ c*`.
pub fn hardy_ratio_min(ev: &FormEvaluator<'_>, samples: usize, seed: u64) -> Result<f64> {
    if samples == 0 {
        return Err(Error::Config(
            "Hardy ratio needs at least one sample".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..samples {
        let f: Vec<f64> = (0..ev.op.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let plain = form_value(ev, &f, FormVariant::Plain)?;
        let hardy = form_value(ev, &f, FormVariant::Hardy)?;
        worst = worst.min(hardy / plain);
    }
    Ok(worst)
}
