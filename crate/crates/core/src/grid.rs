//! Cell-centered grids on bounded intervals and boxes containing the origin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A coordinate pair; in one dimension the second component is zero.
pub type Point = [f64; 2];

/// Bounded domain containing the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Interval { lo: f64, hi: f64 },
    Box { lo: [f64; 2], hi: [f64; 2] },
}

impl Domain {
    pub fn interval(lo: f64, hi: f64) -> Self {
        Domain::Interval { lo, hi }
    }

    pub fn square(half_width: f64) -> Self {
        Domain::Box {
            lo: [-half_width; 2],
            hi: [half_width; 2],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Box { .. } => 2,
        }
    }

    fn axes(&self) -> Vec<(f64, f64)> {
        match *self {
            Domain::Interval { lo, hi } => vec![(lo, hi)],
            Domain::Box { lo, hi } => vec![(lo[0], hi[0]), (lo[1], hi[1])],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (lo, hi) in self.axes() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Config(format!("degenerate axis [{lo}, {hi}]")));
            }
            if !(lo < 0.0 && 0.0 < hi) {
                return Err(Error::Config(format!(
                    "origin is not strictly inside the axis [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    /// Whether `x` lies in the open domain.
    pub fn contains(&self, x: &Point) -> bool {
        self.axes()
            .iter()
            .enumerate()
            .all(|(k, &(lo, hi))| x[k] > lo && x[k] < hi)
    }

    /// Distance from an interior point to the boundary.
    pub fn boundary_distance(&self, x: &Point) -> f64 {
        self.axes()
            .iter()
            .enumerate()
            .map(|(k, &(lo, hi))| (x[k] - lo).min(hi - x[k]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Distance from the origin to the boundary.
    pub fn inradius(&self) -> f64 {
        self.boundary_distance(&[0.0, 0.0])
    }

    /// Sub-domain obtained by scaling about the origin.
    pub fn scaled(&self, s: f64) -> Domain {
        match *self {
            Domain::Interval { lo, hi } => Domain::Interval {
                lo: s * lo,
                hi: s * hi,
            },
            Domain::Box { lo, hi } => Domain::Box {
                lo: [s * lo[0], s * lo[1]],
                hi: [s * hi[0], s * hi[1]],
            },
        }
    }

    pub fn lower(&self) -> Point {
        match *self {
            Domain::Interval { lo, .. } => [lo, 0.0],
            Domain::Box { lo, .. } => lo,
        }
    }

    pub fn upper(&self) -> Point {
        match *self {
            Domain::Interval { hi, .. } => [hi, 0.0],
            Domain::Box { hi, .. } => hi,
        }
    }
}

/// Euclidean norm of the first `d` coordinates.
pub fn norm(x: &Point, d: usize) -> f64 {
    x[..d].iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn distance(x: &Point, y: &Point, d: usize) -> f64 {
    (0..d).map(|k| (x[k] - y[k]).powi(2)).sum::<f64>().sqrt()
}

/// Uniform cell-centered grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub domain: Domain,
    pub h: f64,
    /// Cells per axis (second entry is 1 in one dimension).
    pub shape: [usize; 2],
    /// Cell centers, x-fastest ordering.
    pub nodes: Vec<Point>,
}

const COMMENSURABLE_TOL: f64 = 1e-9;

/// Builds the cell-centered grid of spacing `h`.
///
/// `h` must divide every axis extent, and no cell center may sit at the origin.
pub fn build_grid(domain: Domain, h: f64) -> Result<Grid> {
    domain.validate()?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Config(format!("spacing h = {h} must be positive")));
    }
    let mut shape = [1usize; 2];
    for (k, (lo, hi)) in domain.axes().into_iter().enumerate() {
        let cells = (hi - lo) / h;
        let rounded = cells.round();
        if rounded < 1.0 || (cells - rounded).abs() > COMMENSURABLE_TOL * cells.max(1.0) {
            return Err(Error::Config(format!(
                "h = {h} does not divide the extent {} of axis {k}",
                hi - lo
            )));
        }
        shape[k] = rounded as usize;
    }
    let lo = domain.lower();
    let mut nodes = Vec::with_capacity(shape[0] * shape[1]);
    for j in 0..shape[1] {
        for i in 0..shape[0] {
            let x = lo[0] + (i as f64 + 0.5) * h;
            let y = if domain.dim() == 2 {
                lo[1] + (j as f64 + 0.5) * h
            } else {
                0.0
            };
            nodes.push([x, y]);
        }
    }
    if nodes.iter().any(|p| norm(p, domain.dim()) < 1e-9 * h) {
        return Err(Error::Config(format!(
            "a cell center coincides with the origin (h = {h}); use an even cell count on symmetric axes"
        )));
    }
    Ok(Grid {
        domain,
        h,
        shape,
        nodes,
    })
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Cell volume `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim() as i32)
    }

    pub fn radius(&self, i: usize) -> f64 {
        norm(&self.nodes[i], self.dim())
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.radius(i)).collect()
    }

    /// Index of the node closest to the origin (lowest index on ties).
    pub fn nearest_to_origin(&self) -> usize {
        let mut best = 0;
        for i in 1..self.len() {
            if self.radius(i) < self.radius(best) - 1e-14 * self.h {
                best = i;
            }
        }
        best
    }

    /// Whether the origin sits on a cell face along every axis, i.e. the grid is
    /// a window of the lattice `h(Z + 1/2)^d`.
    pub fn origin_on_faces(&self) -> bool {
        let lo = self.domain.lower();
        (0..self.dim()).all(|k| {
            let s = -lo[k] / self.h;
            (s - s.round()).abs() < 1e-9 * s.max(1.0)
        })
    }

    /// Integer lattice offsets of node `i` relative to the origin: `x_i = h (m + 1/2)`
    /// componentwise. Only meaningful when [`Grid::origin_on_faces`] holds.
    pub fn lattice_index(&self, i: usize) -> [i64; 2] {
        let p = self.nodes[i];
        let mut m = [0i64; 2];
        for k in 0..self.dim() {
            m[k] = (p[k] / self.h - 0.5).round() as i64;
        }
        m
    }

    /// Node positions of a 1D grid.
    pub fn xs(&self) -> Vec<f64> {
        self.nodes.iter().map(|p| p[0]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_half_spacing() {
        let g = build_grid(Domain::interval(-1.0, 1.0), 0.5).unwrap();
        assert_eq!(g.xs(), vec![-0.75, -0.25, 0.25, 0.75]);
        assert_eq!(
            g.radii().iter().cloned().fold(f64::INFINITY, f64::min),
            0.25
        );
    }

    #[test]
    fn odd_cell_count_rejected() {
        let err = build_grid(Domain::interval(-1.0, 1.0), 2.0 / 3.0).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn square_has_sixteen_cells() {
        let g = build_grid(Domain::square(1.0), 0.5).unwrap();
        assert_eq!(g.len(), 16);
        assert_eq!(g.shape, [4, 4]);
        assert!((g.cell_volume() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn config_errors() {
        assert!(build_grid(Domain::interval(0.1, 1.0), 0.1).is_err());
        assert!(build_grid(Domain::interval(-1.0, 1.0), 0.0).is_err());
        assert!(build_grid(Domain::interval(-1.0, 1.0), 0.3).is_err());
    }

    #[test]
    fn asymmetric_interval() {
        let g = build_grid(Domain::interval(-1.0, 2.0), 0.5).unwrap();
        assert_eq!(g.len(), 6);
        assert!(g.origin_on_faces());
        assert_eq!(g.lattice_index(2), [0, 0]);
        assert_eq!(g.lattice_index(1), [-1, 0]);
    }
}
