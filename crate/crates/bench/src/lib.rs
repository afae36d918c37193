//! Shared fixtures for the criterion benchmarks.

use fracheat_core::{build_grid, Domain, FractionalParams, Grid};

/// Parameters of the one-dimensional reference problem.
pub fn reference_params() -> FractionalParams {
    FractionalParams::new(1, 0.5).expect("valid parameters")
}

/// Uniform grid with `n` cells on `(−1, 1)`.
pub fn interval_grid(n: usize) -> Grid {
    build_grid(Domain::interval(-1.0, 1.0), 2.0 / n as f64).expect("even cell count")
}

/// Uniform `n × n` grid on `(−1, 1)²`.
pub fn square_grid(n: usize) -> Grid {
    build_grid(Domain::square(1.0), 2.0 / n as f64).expect("even cell count")
}
