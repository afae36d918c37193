//! Dense assembly of the restricted fractional Laplacian with Hardy potential.
//!
//! `L0` has off-diagonal entries `−J_ij` and diagonal `Σ_j J_ij + κ_i`, where
//! `J_ij = A h^d / |x_i − x_j|^{d+α}` in the far field and the nearest
//! neighbours carry moment-matched weights that make the stencil exact on
//! quadratics. The Hardy part is `H = L0 − diag(min(V, k))`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Domain, Grid, Point};
use crate::quad::{integrate, integrate_pieces, integrate_to_infinity, QuadOptions};
use crate::specfun::{ExponentMap, FractionalParams};

/// How the Hardy potential `c|x|^{−α}` is sampled on the nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[derive(Default)]
pub enum PotentialSampling {
    /// `V_i = c |x_i|^{−α}`.
    Point,
    /// `V_i = c ρ_i |x_i|^{−α}` with `ρ_i` chosen so that the lattice operator
    /// maps `w_c` to `c|x|^{−α} w_c` exactly at every node (one dimension only).
    #[default]
    HarmonicConsistent,
}

/// Assembled operator on a grid. Immutable after assembly.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub grid: Grid,
    pub params: FractionalParams,
    pub intensity: f64,
    pub c: f64,
    /// Truncation level of the potential; `f64::INFINITY` for none.
    pub k: f64,
    pub sampling: PotentialSampling,
    /// Restricted fractional Laplacian without potential.
    pub l0: DMatrix<f64>,
    pub killing: Vec<f64>,
    /// Untruncated potential samples.
    pub potential: Vec<f64>,
}

impl DiscreteOperator {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Jump weight `J_ij` (zero on the diagonal).
    pub fn jump(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            -self.l0[(i, j)]
        }
    }

    /// `min(V, k)` for a given cap.
    pub fn truncated_potential(&self, k: f64) -> Vec<f64> {
        self.potential.iter().map(|v| v.min(k)).collect()
    }

    /// `H = L0 − diag(min(V, k))` at the operator's own truncation level.
    pub fn hamiltonian(&self) -> DMatrix<f64> {
        self.hamiltonian_at(self.k)
    }

    /// `H` at an arbitrary truncation level, sharing `L0`.
    pub fn hamiltonian_at(&self, k: f64) -> DMatrix<f64> {
        let mut h = self.l0.clone();
        for (i, v) in self.potential.iter().enumerate() {
            h[(i, i)] -= v.min(k);
        }
        h
    }

    /// `L0 f`.
    pub fn apply_l0(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check_len(f)?;
        Ok((&self.l0 * DVector::from_column_slice(f))
            .as_slice()
            .to_vec())
    }

    /// `H f` at the operator's truncation level.
    pub fn apply_hamiltonian(&self, f: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.apply_l0(f)?;
        for i in 0..out.len() {
            out[i] -= self.potential[i].min(self.k) * f[i];
        }
        Ok(out)
    }

    /// Row sums of `L0`; equal to `κ` up to rounding.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.l0.column(i).sum()).collect()
    }

    pub(crate) fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::Contract(format!(
                "vector of length {} for an operator on {} nodes",
                f.len(),
                self.len()
            )));
        }
        Ok(())
    }

    /// Same operator with a different truncation level.
    pub fn with_truncation(&self, k: f64) -> Result<Self> {
        check_truncation(k)?;
        let mut out = self.clone();
        out.k = k;
        Ok(out)
    }
}

fn check_truncation(k: f64) -> Result<()> {
    if !(k > 0.0) {
        return Err(Error::Config(format!(
            "truncation level k = {k} must be positive"
        )));
    }
    Ok(())
}

/// Nearest-neighbour weight in 1D: `A h^{−α} (3/2)^{2−α}/(2−α)`.
fn near_weight_1d(intensity: f64, alpha: f64, h: f64) -> f64 {
    intensity * h.powf(-alpha) * 1.5f64.powf(2.0 - alpha) / (2.0 - alpha)
}

/// Axis and diagonal nearest-neighbour weights in 2D.
fn near_weights_2d(intensity: f64, alpha: f64, h: f64) -> (f64, f64) {
    let diag = intensity * h.powf(-alpha) * 2f64.powf(-(2.0 + alpha) / 2.0);
    // second moment of |r|^{−2−α} over the 3×3 cell block
    let m1 = 4.0
        * integrate(
            |t: f64| (1.5 / t.cos()).powf(2.0 - alpha) / (2.0 - alpha),
            0.0,
            PI / 4.0,
            QuadOptions::default(),
        )
        .expect("smooth integrand")
        .value;
    let axis = (intensity * h.powf(-alpha) * m1 - 4.0 * diag) / 2.0;
    (axis, diag)
}

/// Table of jump weights indexed by absolute lattice offsets.
struct JumpTable {
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

impl JumpTable {
    fn new(grid: &Grid, intensity: f64, alpha: f64) -> Self {
        let h = grid.h;
        let d = grid.dim();
        let (nx, ny) = (grid.shape[0], grid.shape[1]);
        let mut values = vec![0.0; nx * ny];
        let scale = intensity * h.powf(-alpha);
        let near = if d == 2 {
            near_weights_2d(intensity, alpha, h)
        } else {
            (near_weight_1d(intensity, alpha, h), 0.0)
        };
        for oy in 0..ny {
            for ox in 0..nx {
                let r2 = (ox * ox + oy * oy) as f64;
                let v = match (ox, oy) {
                    (0, 0) => 0.0,
                    (1, 0) | (0, 1) => near.0,
                    (1, 1) => near.1,
                    _ => scale * r2.powf(-(d as f64 + alpha) / 2.0),
                };
                values[ox + nx * oy] = v;
            }
        }
        Self {
            nx,
            ny: ny.max(1),
            values,
        }
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        let (ix, iy) = (i % self.nx, i / self.nx);
        let (jx, jy) = (j % self.nx, j / self.nx);
        debug_assert!(iy < self.ny && jy < self.ny);
        self.values[ix.abs_diff(jx) + self.nx * iy.abs_diff(jy)]
    }
}

/// `κ_Ω(x) = A ∫_{Ω^c} |x − y|^{−d−α} dy`.
pub fn killing_term(x: &Point, domain: &Domain, params: FractionalParams) -> Result<f64> {
    params.validate()?;
    let a = crate::specfun::intensity_constant(params)?;
    killing_with_intensity(x, domain, params.alpha, a)
}

fn killing_with_intensity(x: &Point, domain: &Domain, alpha: f64, intensity: f64) -> Result<f64> {
    if !domain.contains(x) {
        return Err(Error::SingularPoint(format!(
            "killing term requested at {x:?}, which is not inside the domain"
        )));
    }
    match *domain {
        Domain::Interval { lo, hi } => {
            Ok(intensity / alpha * ((x[0] - lo).powf(-alpha) + (hi - x[0]).powf(-alpha)))
        }
        Domain::Box { .. } => {
            let breaks = corner_angles(x, domain);
            let r = integrate_pieces(
                |t| exit_distance(x, domain, t).powf(-alpha),
                &breaks,
                QuadOptions {
                    rel_tol: 1e-11,
                    ..QuadOptions::default()
                },
            )?;
            Ok(intensity / alpha * r.value)
        }
    }
}

/// Distance from `x` to the boundary of a box along direction `θ`.
fn exit_distance(x: &Point, domain: &Domain, theta: f64) -> f64 {
    let (lo, hi) = (domain.lower(), domain.upper());
    let dir = [theta.cos(), theta.sin()];
    let mut t = f64::INFINITY;
    for k in 0..2 {
        if dir[k] > 1e-300 {
            t = t.min((hi[k] - x[k]) / dir[k]);
        } else if dir[k] < -1e-300 {
            t = t.min((lo[k] - x[k]) / dir[k]);
        }
    }
    t
}

/// Angles of the four box corners seen from `x`, as an increasing sequence
/// spanning one full turn.
fn corner_angles(x: &Point, domain: &Domain) -> Vec<f64> {
    let (lo, hi) = (domain.lower(), domain.upper());
    let mut angles: Vec<f64> = [
        [lo[0], lo[1]],
        [hi[0], lo[1]],
        [hi[0], hi[1]],
        [lo[0], hi[1]],
    ]
    .iter()
    .map(|c| (c[1] - x[1]).atan2(c[0] - x[0]))
    .collect();
    angles.sort_by(f64::total_cmp);
    let first = angles[0];
    angles.push(first + 2.0 * PI);
    angles
}

/// Lattice calibration factors `ρ_q`, `q = 0, 1, …, q_max`.
///
/// On the unit lattice `Z + 1/2` with `w(y) = |y|^{−β}`, `ρ_q` is the ratio of
/// the full-lattice jump operator applied to `w` at `q + 1/2` to
/// `c (q + 1/2)^{−α} w(q + 1/2)`. The lattice sum runs over `|y| < N` and the
/// remainder is integrated. By scaling the factors do not depend on `h`.
pub fn lattice_calibration(
    alpha: f64,
    intensity: f64,
    c: f64,
    beta: f64,
    q_max: usize,
) -> Result<Vec<f64>> {
    if !(c > 0.0) {
        return Err(Error::Config(format!("calibration needs c > 0, got {c}")));
    }
    let n_half = 40_000usize.max(64 * (q_max + 1));
    // w at |j + 1/2| for j = 0..n_half, and the kernel at integer offsets.
    let w: Vec<f64> = (0..n_half).map(|j| (j as f64 + 0.5).powf(-beta)).collect();
    let span = n_half + q_max + 1;
    let near = near_weight_1d(intensity, alpha, 1.0);
    let kern: Vec<f64> = (0..=span)
        .map(|o| match o {
            0 => 0.0,
            1 => near,
            _ => intensity * (o as f64).powf(-1.0 - alpha),
        })
        .collect();
    let limit = n_half as f64;
    let opts = QuadOptions {
        rel_tol: 1e-12,
        ..QuadOptions::default()
    };
    (0..=q_max)
        .into_par_iter()
        .map(|q| {
            let wq = w[q];
            let mut s = 0.0;
            // positive side j ≥ 0: offset |q − j|; negative side j → −j−1: offset q + j + 1
            for j in 0..n_half {
                let diff = wq - w[j];
                s += (kern[q.abs_diff(j)] + kern[q + j + 1]) * diff;
            }
            let p = q as f64 + 0.5;
            let tail = integrate_to_infinity(
                |y| {
                    (wq - y.powf(-beta)) * ((y - p).powf(-1.0 - alpha) + (y + p).powf(-1.0 - alpha))
                },
                limit,
                1.0 + alpha,
                opts,
            )?;
            s += intensity * tail.value;
            Ok(s / (c * p.powf(-alpha) * wq))
        })
        .collect()
}

/// Assembles `L0`, `κ` and the Hardy potential with the default sampling
/// (harmonic-consistent in one dimension, point sampling in two).
pub fn assemble_operator(
    grid: &Grid,
    params: FractionalParams,
    c: f64,
    k: f64,
) -> Result<DiscreteOperator> {
    let sampling = if grid.dim() == 1 {
        PotentialSampling::HarmonicConsistent
    } else {
        PotentialSampling::Point
    };
    assemble_operator_with(grid, params, c, k, sampling)
}

pub fn assemble_operator_with(
    grid: &Grid,
    params: FractionalParams,
    c: f64,
    k: f64,
    sampling: PotentialSampling,
) -> Result<DiscreteOperator> {
    params.validate()?;
    if params.d != grid.dim() {
        return Err(Error::Config(format!(
            "parameters have d = {} but the grid is {}-dimensional",
            params.d,
            grid.dim()
        )));
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::Config(format!(
            "Hardy strength c = {c} must be finite and nonnegative"
        )));
    }
    check_truncation(k)?;
    let map = ExponentMap::new(params)?;
    let intensity = map.intensity();
    let alpha = params.alpha;
    let n = grid.len();

    let killing = grid
        .nodes
        .par_iter()
        .map(|x| killing_with_intensity(x, &grid.domain, alpha, intensity))
        .collect::<Result<Vec<f64>>>()?;

    let table = JumpTable::new(grid, intensity, alpha);
    let mut data = vec![0.0; n * n];
    // column i of a symmetric matrix equals row i; each row is summed in index order
    data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let mut diag = 0.0;
        for (j, slot) in row.iter_mut().enumerate() {
            if j != i {
                let v = table.get(i, j);
                *slot = -v;
                diag += v;
            }
        }
        row[i] = diag + killing[i];
    });
    let l0 = DMatrix::from_vec(n, n, data);

    let potential = hardy_potential(grid, &map, c, sampling)?;
    Ok(DiscreteOperator {
        grid: grid.clone(),
        params,
        intensity,
        c,
        k,
        sampling,
        l0,
        killing,
        potential,
    })
}

fn hardy_potential(
    grid: &Grid,
    map: &ExponentMap,
    c: f64,
    sampling: PotentialSampling,
) -> Result<Vec<f64>> {
    let alpha = map.params.alpha;
    let point: Vec<f64> = grid.radii().iter().map(|r| c * r.powf(-alpha)).collect();
    if c == 0.0 || sampling == PotentialSampling::Point {
        return Ok(point);
    }
    if grid.dim() != 1 {
        return Err(Error::Config(
            "harmonic-consistent potential sampling is only available in one dimension".into(),
        ));
    }
    if !grid.origin_on_faces() {
        return Err(Error::Config(
            "harmonic-consistent sampling needs the origin on a cell face".into(),
        ));
    }
    let c_eff = c.min(map.c_star());
    let beta = map.beta_of_c(c_eff)?;
    let folded: Vec<usize> = (0..grid.len())
        .map(|i| {
            let m = grid.lattice_index(i)[0];
            if m >= 0 {
                m as usize
            } else {
                (-m - 1) as usize
            }
        })
        .collect();
    let q_max = folded.iter().copied().max().unwrap_or(0);
    let rho = lattice_calibration(alpha, map.intensity(), c_eff, beta, q_max)?;
    Ok(folded
        .iter()
        .zip(point.iter())
        .map(|(&q, v)| v * rho[q])
        .collect())
}

/// `A ∫_{Ω^c} |y|^{−β} |x − y|^{−d−α} dy` for an interior node `x`.
pub fn exterior_weighted_tail(
    x: &Point,
    domain: &Domain,
    alpha: f64,
    intensity: f64,
    beta: f64,
) -> Result<f64> {
    if !domain.contains(x) {
        return Err(Error::SingularPoint(format!(
            "{x:?} is not inside the domain"
        )));
    }
    let opts = QuadOptions {
        rel_tol: 1e-10,
        abs_tol: 1e-15,
        max_intervals: 4000,
    };
    match *domain {
        Domain::Interval { lo, hi } => {
            let x0 = x[0];
            let decay = 1.0 + alpha + beta;
            let right = |y: f64| y.powf(-beta) * (y - x0).powf(-1.0 - alpha);
            let left = |y: f64| y.powf(-beta) * (y + x0).powf(-1.0 - alpha);
            // split near the boundary, where the kernel is sharply peaked
            let gap_r = hi - x0;
            let gap_l = x0 - lo;
            let r = integrate(right, hi, hi + 8.0 * gap_r, opts)?.value
                + integrate_to_infinity(right, hi + 8.0 * gap_r, decay, opts)?.value;
            let l = integrate(left, -lo, -lo + 8.0 * gap_l, opts)?.value
                + integrate_to_infinity(left, -lo + 8.0 * gap_l, decay, opts)?.value;
            Ok(intensity * (r + l))
        }
        Domain::Box { .. } => {
            let breaks = corner_angles(x, domain);
            let outer_opts = QuadOptions {
                rel_tol: 1e-8,
                abs_tol: 1e-14,
                max_intervals: 2000,
            };
            let inner_opts = QuadOptions {
                rel_tol: 1e-9,
                abs_tol: 1e-15,
                max_intervals: 2000,
            };
            let ray = |theta: f64| -> f64 {
                let (c, s) = (theta.cos(), theta.sin());
                let r0 = exit_distance(x, domain, theta);
                integrate_to_infinity(
                    |r| {
                        let y = [x[0] + r * c, x[1] + r * s];
                        (y[0] * y[0] + y[1] * y[1]).powf(-beta / 2.0) * r.powf(-1.0 - alpha)
                    },
                    r0,
                    1.0 + alpha + beta,
                    inner_opts,
                )
                .map(|q| q.value)
                .unwrap_or(f64::NAN)
            };
            let v = integrate_pieces(ray, &breaks, outer_opts)?.value;
            if !v.is_finite() {
                return Err(Error::Numerical("exterior tail quadrature failed".into()));
            }
            Ok(intensity * v)
        }
    }
}

/// Exterior tails at every node of the operator's grid.
pub fn exterior_tails(op: &DiscreteOperator, beta: f64) -> Result<Vec<f64>> {
    op.grid
        .nodes
        .par_iter()
        .map(|x| exterior_weighted_tail(x, &op.grid.domain, op.params.alpha, op.intensity, beta))
        .collect()
}

/// Nodes used as harmonicity probes: `|x| ≥ r_min` and `dist(x, ∂Ω) ≥ δ_min`.
pub fn interior_probes(grid: &Grid, r_min: f64, delta_min: f64) -> Vec<usize> {
    (0..grid.len())
        .filter(|&i| {
            grid.radius(i) >= r_min && grid.domain.boundary_distance(&grid.nodes[i]) >= delta_min
        })
        .collect()
}

/// Defect of the discrete operator on the power weight `|x|^{−β}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HarmonicityDefect {
    pub beta: f64,
    pub probes: usize,
    /// `max_i |(L0 w)_i − λ(β)|x_i|^{−β−α} − T_i|` over the probes.
    pub max_abs: f64,
    /// `max_abs` relative to `max_i λ(β)|x_i|^{−β−α}`.
    pub max_rel: f64,
}

/// Compares `L0 w` with the exact action `λ(β)|x|^{−β−α} + A∫_{Ω^c}|y|^{−β}K(x−y)dy`.
pub fn harmonicity_defect(
    op: &DiscreteOperator,
    beta: f64,
    probes: &[usize],
) -> Result<HarmonicityDefect> {
    if probes.is_empty() {
        return Err(Error::Config("no harmonicity probes".into()));
    }
    let lam = crate::specfun::multiplier(beta, op.params)?;
    let w: Vec<f64> = op.grid.radii().iter().map(|r| r.powf(-beta)).collect();
    let lw = op.apply_l0(&w)?;
    let alpha = op.params.alpha;
    let rows = probes
        .par_iter()
        .map(|&i| {
            let tail = exterior_weighted_tail(
                &op.grid.nodes[i],
                &op.grid.domain,
                alpha,
                op.intensity,
                beta,
            )?;
            let main = lam * op.grid.radius(i).powf(-beta - alpha);
            Ok(((lw[i] - main - tail).abs(), main.abs()))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let max_abs = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let scale = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(HarmonicityDefect {
        beta,
        probes: probes.len(),
        max_abs,
        max_rel: max_abs / scale,
    })
}

/// Which quadratic form to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormVariant {
    Plain,
    Hardy,
    Weighted,
}

/// Evaluates the discrete forms; the weighted variant needs the weight and
/// its exterior tails.
#[derive(Debug, Clone)]
pub struct FormEvaluator<'a> {
    pub op: &'a DiscreteOperator,
    pub weight: Option<Vec<f64>>,
    pub exterior: Option<Vec<f64>>,
}

impl<'a> FormEvaluator<'a> {
    pub fn plain(op: &'a DiscreteOperator) -> Self {
        Self {
            op,
            weight: None,
            exterior: None,
        }
    }

    /// Evaluator with `w = |x|^{−β}` and exterior tails `T_i = A∫_{Ω^c} w K(x_i − ·)`.
    pub fn weighted(op: &'a DiscreteOperator, beta: f64) -> Result<Self> {
        let weight = op.grid.radii().iter().map(|r| r.powf(-beta)).collect();
        let exterior = exterior_tails(op, beta)?;
        Ok(Self {
            op,
            weight: Some(weight),
            exterior: Some(exterior),
        })
    }

    pub fn value(&self, f: &[f64], variant: FormVariant) -> Result<f64> {
        form_value(self, f, variant)
    }
}

/// Discrete forms, all carrying the cell volume `h^d`:
///
/// * plain: `h^d fᵀ L0 f`
/// * hardy: plain `− h^d Σ f_i² min(V_i, k)`
/// * weighted: `h^d Σ_{i<j} J_ij w_i w_j (f_i − f_j)² + h^d Σ f_i² w_i T_i`
pub fn form_value(ev: &FormEvaluator<'_>, f: &[f64], variant: FormVariant) -> Result<f64> {
    let op = ev.op;
    op.check_len(f)?;
    let vol = op.grid.cell_volume();
    let plain = || -> Result<f64> {
        let lf = op.apply_l0(f)?;
        Ok(vol * f.iter().zip(&lf).map(|(a, b)| a * b).sum::<f64>())
    };
    match variant {
        FormVariant::Plain => plain(),
        FormVariant::Hardy => {
            let pot: f64 = f
                .iter()
                .zip(&op.potential)
                .map(|(fi, v)| fi * fi * v.min(op.k))
                .sum();
            Ok(plain()? - vol * pot)
        }
        FormVariant::Weighted => {
            let (w, tail) = match (&ev.weight, &ev.exterior) {
                (Some(w), Some(t)) => (w, t),
                _ => {
                    return Err(Error::Contract(
                        "weighted form requested from an evaluator without a weight".into(),
                    ))
                }
            };
            let n = f.len();
            let jump: f64 = (0..n)
                .into_par_iter()
                .map(|i| {
                    let col = op.l0.column(i);
                    let mut s = 0.0;
                    for j in (i + 1)..n {
                        let d = f[i] - f[j];
                        s += -col[j] * w[j] * d * d;
                    }
                    s * w[i]
                })
                .collect::<Vec<f64>>()
                .iter()
                .sum();
            let ext: f64 = (0..n).map(|i| f[i] * f[i] * w[i] * tail[i]).sum();
            Ok(vol * (jump + ext))
        }
    }
}
