use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::KernelMatrix;
use crate::grid::Grid;

/// Central box `|x_k| ≤ half_width` used as the compact set of the lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompactSet {
    pub half_width: f64,
}

impl CompactSet {
    /// Half the distance from the origin to the boundary.
    pub fn central(grid: &Grid) -> Self {
        Self {
            half_width: 0.5 * grid.domain.inradius(),
        }
    }

    /// Node indices inside the set; errors if the set reaches the boundary.
    pub fn nodes(&self, grid: &Grid) -> Result<Vec<usize>> {
        let d = grid.dim();
        let (lo, hi) = (grid.domain.lower(), grid.domain.upper());
        for k in 0..d {
            if self.half_width >= -lo[k] || self.half_width >= hi[k] {
                return Err(Error::Config(format!(
                    "compact set of half-width {} touches the boundary",
                    self.half_width
                )));
            }
        }
        if !(self.half_width > 0.0) {
            return Err(Error::Config("compact set must have positive size".into()));
        }
        let idx: Vec<usize> = (0..grid.len())
            .filter(|&i| (0..d).all(|k| grid.nodes[i][k].abs() <= self.half_width + 1e-12))
            .collect();
        if idx.is_empty() {
            return Err(Error::Config("compact set contains no nodes".into()));
        }
        Ok(idx)
    }
}

/// Sandwich constants at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichPoint {
    pub t: f64,
    /// `min_{K×K} p_t/(w⊗w)`.
    pub kappa: f64,
    /// `max_{K×K} p_t/(w⊗w)`.
    pub max_ratio: f64,
    /// `max / min`.
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundFit {
    pub compact: CompactSet,
    pub points: Vec<SandwichPoint>,
    /// `max_t (max_{K×K} ratio) · t^{d/α}`.
    pub c_upper: f64,
}

/// Ratios `p_t(x_i,x_j)/(w_i w_j)` over `K × K` for each kernel.
pub fn kernel_sandwich(
    kernels: &[KernelMatrix],
    w: &[f64],
    grid: &Grid,
    compact: CompactSet,
    d: usize,
    alpha: f64,
) -> Result<BoundFit> {
    let idx = compact.nodes(grid)?;
    if w.len() != grid.len() {
        return Err(Error::Contract(
            "weight length differs from the grid".into(),
        ));
    }
    let mut points = Vec::with_capacity(kernels.len());
    let mut c_upper: f64 = 0.0;
    for ker in kernels {
        if ker.len() != grid.len() {
            return Err(Error::Contract("kernel size differs from the grid".into()));
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &j in &idx {
            for &i in &idx {
                let r = ker.entries[(i, j)] / (w[i] * w[j]);
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        c_upper = c_upper.max(hi * ker.t.powf(d as f64 / alpha));
        points.push(SandwichPoint {
            t: ker.t,
            kappa: lo,
            max_ratio: hi,
            spread: hi / lo,
        });
    }
    Ok(BoundFit {
        compact,
        points,
        c_upper,
    })
}

/// On-diagonal envelope `C = max_t t^{d/α} sup_{Ω×Ω} p_t/(w⊗w)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub constant: f64,
    pub t_at_max: f64,
    pub times: Vec<f64>,
    /// `t^{d/α} · sup-ratio` per time.
    pub scaled: Vec<f64>,
    /// Fitted decay `e` in `sup-ratio ≈ t^{−e}` over the smaller half of the times.
    pub fitted_exponent: f64,
}

pub fn ultracontractive_envelope(
    kernels: &[KernelMatrix],
    w: &[f64],
    d: usize,
    alpha: f64,
) -> Result<Envelope> {
    if kernels.is_empty() {
        return Err(Error::Config("envelope needs at least one kernel".into()));
    }
    let mut times = Vec::new();
    let mut sups = Vec::new();
    for ker in kernels {
        if ker.len() != w.len() {
            return Err(Error::Contract(
                "kernel size differs from the weight".into(),
            ));
        }
        let mut s = f64::NEG_INFINITY;
        for (j, col) in ker.entries.column_iter().enumerate() {
            for (i, p) in col.iter().enumerate() {
                s = s.max(p / (w[i] * w[j]));
            }
        }
        times.push(ker.t);
        sups.push(s);
    }
    let e = d as f64 / alpha;
    let scaled: Vec<f64> = times
        .iter()
        .zip(&sups)
        .map(|(t, s)| t.powf(e) * s)
        .collect();
    let (imax, constant) =
        scaled
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
            );
    let half = (times.len() / 2).max(2).min(times.len());
    let lx: Vec<f64> = times[..half].iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = sups[..half].iter().map(|s| s.ln()).collect();
    let fitted_exponent = super::line_fit(&lx, &ly)
        .map(|f| -f.slope)
        .unwrap_or(f64::NAN);
    Ok(Envelope {
        constant,
        t_at_max: times[imax],
        times,
        scaled,
        fitted_exponent,
    })
}

/// Quotients `‖e^{−tH}u0‖_{L²} / ‖u0‖_{L¹(w)}` along a family of initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedL1Report {
    pub t: f64,
    pub radii: Vec<f64>,
    pub quotients: Vec<f64>,
    /// `sup p_t/(w⊗w) · ‖w‖_{L²}`, a bound valid for every `u0`.
    pub global_bound: f64,
    pub smooth_quotient: f64,
}

/// Applies the kernel to scaled indicators of `|x| ≤ r` and to a smooth bump.
pub fn weighted_l1_bound(
    kernel: &KernelMatrix,
    w: &[f64],
    grid: &Grid,
    radii: &[f64],
) -> Result<WeightedL1Report> {
    let n = grid.len();
    if w.len() != n || kernel.len() != n {
        return Err(Error::Contract(
            "kernel, weight and grid sizes differ".into(),
        ));
    }
    let vol = grid.cell_volume();
    let quotient = |u0: &[f64]| -> f64 {
        let l1: f64 = u0.iter().zip(w).map(|(u, wi)| u.abs() * wi).sum::<f64>() * vol;
        if l1 == 0.0 {
            return 0.0;
        }
        let u0v = nalgebra::DVector::from_column_slice(u0);
        let mut l2 = 0.0;
        for i in 0..n {
            let s = kernel.entries.column(i).dot(&u0v) * vol;
            l2 += s * s;
        }
        (l2 * vol).sqrt() / l1
    };
    let mut quotients = Vec::with_capacity(radii.len());
    for &r in radii {
        let u0: Vec<f64> = grid
            .radii()
            .iter()
            .map(|x| if *x <= r + 1e-12 { 1.0 } else { 0.0 })
            .collect();
        if u0.iter().all(|v| *v == 0.0) {
            return Err(Error::Config(format!("radius {r} contains no nodes")));
        }
        quotients.push(quotient(&u0));
    }
    let rad = 0.5 * grid.domain.inradius();
    let smooth: Vec<f64> = grid
        .radii()
        .iter()
        .map(|x| {
            if *x < rad {
                (1.0 - (x / rad).powi(2)).powi(2)
            } else {
                0.0
            }
        })
        .collect();
    let smooth_quotient = quotient(&smooth);
    let mut sup = f64::NEG_INFINITY;
    for (j, col) in kernel.entries.column_iter().enumerate() {
        for (i, p) in col.iter().enumerate() {
            sup = sup.max(p / (w[i] * w[j]));
        }
    }
    let w_l2 = (w.iter().map(|v| v * v).sum::<f64>() * vol).sqrt();
    Ok(WeightedL1Report {
        t: kernel.t,
        radii: radii.to_vec(),
        quotients,
        global_bound: sup * w_l2,
        smooth_quotient,
    })
}
