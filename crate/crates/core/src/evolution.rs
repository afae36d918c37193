//! Heat semigroups `e^{−tH}`: trajectories, kernels, the monotone truncation
//! scheme for the minimal solution and Duhamel residuals.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{expm, symmetrize, Spectral};
use crate::operator::DiscreteOperator;

/// Time integrator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Dense matrix exponential per output time (reference).
    Expm,
    CrankNicolson,
    ImplicitEuler,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "expm" => Ok(Scheme::Expm),
            "crank-nicolson" | "cn" => Ok(Scheme::CrankNicolson),
            "implicit-euler" | "ie" => Ok(Scheme::ImplicitEuler),
            other => Err(Error::Config(format!(
                "unknown scheme '{other}' (expected expm, crank-nicolson or implicit-euler)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub scheme: Scheme,
    /// Stepping schemes use `Δt ≤ t_max / min_steps`.
    pub min_steps: usize,
    /// Extrapolate stepping results from `Δt` and `Δt/2`.
    pub richardson: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            scheme: Scheme::Expm,
            min_steps: 200,
            richardson: false,
        }
    }
}

impl EvolveOptions {
    pub fn with_scheme(scheme: Scheme) -> Self {
        Self {
            scheme,
            ..Self::default()
        }
    }
}

/// States `u(t)` at increasing times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub k: f64,
    pub scheme: Scheme,
}

impl Trajectory {
    pub fn state_at(&self, t: f64) -> Option<&[f64]> {
        self.times
            .iter()
            .position(|s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
            .map(|i| self.states[i].as_slice())
    }
}

pub const NEGATIVE_FLOOR: f64 = 1e-14;

fn check_initial(u0: &[f64], n: usize) -> Result<()> {
    if u0.len() != n {
        return Err(Error::Contract(format!(
            "initial state has {} entries, operator has {n} nodes",
            u0.len()
        )));
    }
    if let Some(v) = u0.iter().find(|v| **v < -NEGATIVE_FLOOR || !v.is_finite()) {
        return Err(Error::Contract(format!(
            "initial state has a negative or non-finite entry {v}"
        )));
    }
    Ok(())
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::Contract("no output times".into()));
    }
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::Contract(
            "output times must be finite and nonnegative".into(),
        ));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Contract(
            "output times must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// `u(t) = e^{−tH} u0` at each requested time.
pub fn evolve(
    h: &DMatrix<f64>,
    u0: &[f64],
    times: &[f64],
    opts: EvolveOptions,
) -> Result<Trajectory> {
    let n = h.nrows();
    check_initial(u0, n)?;
    check_times(times)?;
    let states = match opts.scheme {
        Scheme::Expm => evolve_expm(h, u0, times)?,
        scheme => {
            let dt = times.last().copied().unwrap_or(0.0) / opts.min_steps.max(1) as f64;
            let coarse = step_through(h, u0, times, dt, scheme)?;
            if opts.richardson {
                let fine = step_through(h, u0, times, dt / 2.0, scheme)?;
                let order = if scheme == Scheme::CrankNicolson {
                    2
                } else {
                    1
                };
                let f = 2f64.powi(order);
                coarse
                    .iter()
                    .zip(&fine)
                    .map(|(c, fi)| {
                        c.iter()
                            .zip(fi)
                            .map(|(a, b)| (f * b - a) / (f - 1.0))
                            .collect()
                    })
                    .collect()
            } else {
                coarse
            }
        }
    };
    Ok(Trajectory {
        times: times.to_vec(),
        states,
        k: f64::NAN,
        scheme: opts.scheme,
    })
}

fn evolve_expm(h: &DMatrix<f64>, u0: &[f64], times: &[f64]) -> Result<Vec<Vec<f64>>> {
    let v = DVector::from_column_slice(u0);
    times
        .iter()
        .map(|&t| {
            if t == 0.0 {
                Ok(u0.to_vec())
            } else {
                let e = expm(&(h * -t))?;
                Ok((e * &v).as_slice().to_vec())
            }
        })
        .collect()
}

type StepLu = nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>;

fn step_through(
    h: &DMatrix<f64>,
    u0: &[f64],
    times: &[f64],
    dt_max: f64,
    scheme: Scheme,
) -> Result<Vec<Vec<f64>>> {
    let n = h.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    // factorizations keyed by the bit pattern of the step size
    let mut cache: HashMap<u64, (StepLu, Option<DMatrix<f64>>)> = HashMap::new();
    let mut u = DVector::from_column_slice(u0);
    let mut t_now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let gap = t - t_now;
        if gap > 0.0 {
            let m = (gap / dt_max).ceil().max(1.0) as usize;
            let dt = gap / m as f64;
            let (lu, explicit) = cache.entry(dt.to_bits()).or_insert_with(|| match scheme {
                Scheme::CrankNicolson => ((&id + h * (0.5 * dt)).lu(), Some(&id - h * (0.5 * dt))),
                _ => ((&id + h * dt).lu(), None),
            });
            for _ in 0..m {
                let rhs = match explicit {
                    Some(e) => &*e * &u,
                    None => u.clone(),
                };
                u = lu
                    .solve(&rhs)
                    .ok_or_else(|| Error::Numerical("singular stepping matrix".into()))?;
            }
            t_now = t;
        }
        out.push(u.as_slice().to_vec());
    }
    Ok(out)
}

/// Approximate heat kernel `p_t(x_i, x_j) = [e^{−tH}]_ij / h^d`.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    pub t: f64,
    pub entries: DMatrix<f64>,
    pub c: f64,
    pub k: f64,
    pub cell_volume: f64,
}

impl KernelMatrix {
    pub fn len(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.nrows() == 0
    }

    /// `Σ_j p_t(x_i, x_j) h^d`.
    pub fn row_mass(&self) -> Vec<f64> {
        self.entries
            .column_iter()
            .map(|c| c.sum() * self.cell_volume)
            .collect()
    }

    /// `Σ_j p_t(x_i, x_j) (w_j / w_i) h^d`.
    pub fn weighted_row_mass(&self, w: &[f64]) -> Vec<f64> {
        self.entries
            .column_iter()
            .enumerate()
            .map(|(i, col)| {
                col.iter().zip(w).map(|(p, wj)| p * wj).sum::<f64>() * self.cell_volume / w[i]
            })
            .collect()
    }

    /// Maximum relative asymmetry `|p_ij − p_ji| / max|p|`.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.entries.amax();
        (&self.entries - self.entries.transpose()).amax() / scale
    }
}

/// `e^{−tH}/h^d`, symmetrized.
pub fn heat_kernel(op: &DiscreteOperator, t: f64) -> Result<KernelMatrix> {
    heat_kernel_at(op, op.k, t)
}

/// Heat kernel of `L0 − diag(min(V, k))` for an explicit truncation level.
pub fn heat_kernel_at(op: &DiscreteOperator, k: f64, t: f64) -> Result<KernelMatrix> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Contract(format!(
            "kernel time t = {t} must be positive"
        )));
    }
    let vol = op.grid.cell_volume();
    let mut e = expm(&(op.hamiltonian_at(k) * -t))?;
    symmetrize(&mut e);
    e /= vol;
    Ok(KernelMatrix {
        t,
        entries: e,
        c: op.c,
        k,
        cell_volume: vol,
    })
}

/// Kernels at several times from one eigen-decomposition of `H`.
pub fn heat_kernels(op: &DiscreteOperator, times: &[f64]) -> Result<Vec<KernelMatrix>> {
    if let Some(t) = times.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(Error::Contract(format!(
            "kernel time t = {t} must be positive"
        )));
    }
    let vol = op.grid.cell_volume();
    let spec = Spectral::new(&op.hamiltonian());
    Ok(times
        .iter()
        .map(|&t| KernelMatrix {
            t,
            entries: spec.exp_neg(t) / vol,
            c: op.c,
            k: op.k,
            cell_volume: vol,
        })
        .collect())
}

/// Kernels at `t0, 2t0, 4t0, …` (`levels` entries) by repeated squaring.
pub fn kernel_ladder(op: &DiscreteOperator, t0: f64, levels: usize) -> Result<Vec<KernelMatrix>> {
    let first = heat_kernel(op, t0)?;
    let vol = first.cell_volume;
    let mut e = &first.entries * vol;
    let mut out = vec![first];
    for j in 1..levels {
        e = &e * &e;
        symmetrize(&mut e);
        out.push(KernelMatrix {
            t: t0 * 2f64.powi(j as i32),
            entries: &e / vol,
            c: op.c,
            k: op.k,
            cell_volume: vol,
        });
    }
    Ok(out)
}

/// Geometric truncation levels `k0, 4k0, …` capped at `max V`, followed by one
/// level beyond the cap so that stationarity in `k` is observed.
pub fn k_schedule(potential: &[f64], start: Option<f64>, factor: f64) -> Result<Vec<f64>> {
    let max = potential.iter().copied().fold(0.0, f64::max);
    let min = potential
        .iter()
        .copied()
        .filter(|v| *v > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !(max > 0.0) {
        return Err(Error::Config(
            "k-schedule needs a positive potential".into(),
        ));
    }
    if !(factor > 1.0) {
        return Err(Error::Config(format!(
            "k-schedule factor {factor} must exceed 1"
        )));
    }
    let mut k = start.unwrap_or(min);
    if !(k > 0.0) {
        return Err(Error::Config(format!(
            "k-schedule start {k} must be positive"
        )));
    }
    let mut out = Vec::new();
    while k < max {
        out.push(k);
        k *= factor;
    }
    out.push(max);
    out.push(max * factor);
    Ok(out)
}

/// Record of `u_{k'} − u_k` over consecutive levels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonotonicityCertificate {
    /// `min_{i,t} (u_{k_{m+1}} − u_{k_m})` over every consecutive pair.
    pub min_increment: f64,
    pub tolerance: f64,
    pub pairs_checked: usize,
    pub holds: bool,
}

/// Result of the monotone truncation scheme.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinimalSolution {
    pub c: f64,
    pub c_star: f64,
    pub ks: Vec<f64>,
    /// One trajectory per truncation level.
    pub levels: Vec<Trajectory>,
    pub certificate: MonotonicityCertificate,
    /// `max |u_last − u_prev| / max |u_last|` over times.
    pub last_increment: f64,
    pub converged: bool,
    /// `c > c*`: the run is a divergence probe and no state is claimed.
    pub supercritical: bool,
}

impl MinimalSolution {
    /// Trajectory at the largest truncation level.
    pub fn solution(&self) -> &Trajectory {
        self.levels.last().expect("at least one level")
    }
}

pub const MONOTONE_TOL: f64 = 1e-12;
pub const CONVERGENCE_TOL: f64 = 1e-6;

/// Runs `u_k = e^{−t(L0 − V∧k)} u0` over the schedule and certifies
/// `u_{k'} ≥ u_k` for `k < k'`.
pub fn minimal_solution(
    op: &DiscreteOperator,
    u0: &[f64],
    times: &[f64],
    ks: &[f64],
    c_star: f64,
    opts: EvolveOptions,
) -> Result<MinimalSolution> {
    if ks.is_empty() || ks.windows(2).any(|w| w[1] <= w[0]) || ks[0] <= 0.0 {
        return Err(Error::Config(
            "k-schedule must be positive and strictly increasing".into(),
        ));
    }
    check_initial(u0, op.len())?;
    let scale = u0.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let tol = MONOTONE_TOL * scale;
    let mut levels = Vec::with_capacity(ks.len());
    for &k in ks {
        let mut tr = evolve(&op.hamiltonian_at(k), u0, times, opts)?;
        tr.k = k;
        levels.push(tr);
    }
    let mut min_increment = f64::INFINITY;
    for pair in levels.windows(2) {
        for (a, b) in pair[0].states.iter().zip(&pair[1].states) {
            for (x, y) in a.iter().zip(b) {
                min_increment = min_increment.min(y - x);
            }
        }
    }
    if levels.len() < 2 {
        min_increment = 0.0;
    }
    let holds = min_increment >= -tol;
    let certificate = MonotonicityCertificate {
        min_increment,
        tolerance: tol,
        pairs_checked: levels.len().saturating_sub(1),
        holds,
    };
    if !holds {
        return Err(Error::Invariant(format!(
            "truncated solutions decrease in k by {} (tolerance {tol})",
            -min_increment
        )));
    }
    let last_increment = if levels.len() >= 2 {
        let (a, b) = (&levels[levels.len() - 2], &levels[levels.len() - 1]);
        a.states
            .iter()
            .zip(&b.states)
            .map(|(x, y)| {
                let top = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let diff = x
                    .iter()
                    .zip(y)
                    .fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
                if top > 0.0 {
                    diff / top
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let supercritical = op.c > c_star * (1.0 + 1e-12);
    Ok(MinimalSolution {
        c: op.c,
        c_star,
        ks: ks.to_vec(),
        levels,
        certificate,
        last_increment,
        converged: !supercritical && last_increment <= CONVERGENCE_TOL,
        supercritical,
    })
}

/// Duhamel residual at one time:
/// `‖u(t) − e^{−tL0}u0 − ∫_0^t e^{−(t−s)L0} W u(s) ds‖ / ‖u(t)‖` with
/// `W = min(V, k)`, composite Simpson on `points` nodes (odd), and `u(s)`
/// generated by the same semigroup that produced `u_t`.
pub fn duhamel_residual(
    op: &DiscreteOperator,
    k: f64,
    u0: &[f64],
    t: f64,
    u_t: &[f64],
    points: usize,
) -> Result<f64> {
    if points < 3 || points.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "Simpson needs an odd number ≥ 3 of points, got {points}"
        )));
    }
    if !(t > 0.0) {
        return Err(Error::Contract(format!(
            "residual time t = {t} must be positive"
        )));
    }
    op.check_len(u0)?;
    op.check_len(u_t)?;
    let ds = t / (points - 1) as f64;
    let w = DVector::from_vec(op.truncated_potential(k));
    let step_l0 = expm(&(&op.l0 * -ds))?;
    let step_h = expm(&(op.hamiltonian_at(k) * -ds))?;
    let mut u = DVector::from_column_slice(u0);
    let mut acc = DVector::zeros(op.len());
    let mut free = DVector::from_column_slice(u0);
    for j in 0..points {
        let cj = if j == 0 || j == points - 1 {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        };
        if j > 0 {
            acc = &step_l0 * acc;
            free = &step_l0 * free;
            u = &step_h * u;
        }
        acc += w.component_mul(&u) * cj;
    }
    let integral = acc * (ds / 3.0);
    let ut = DVector::from_column_slice(u_t);
    let r = (&ut - free - integral).norm();
    let norm = ut.norm();
    if norm == 0.0 {
        return Ok(r);
    }
    Ok(r / norm)
}
