//! Numerical laboratory for the restricted fractional Laplacian with a Hardy
//! potential `c|x|^{−α}`: closed-form constants, grid assembly, heat
//! semigroups and the estimators that check kernel bounds, singularities,
//! integrability thresholds and blow-up.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod evolution;
pub mod grid;
pub mod linalg;
pub mod operator;
pub mod quad;
pub mod specfun;

pub use error::{Error, Result};
pub use grid::{build_grid, Domain, Grid, Point};
pub use operator::{
    assemble_operator, assemble_operator_with, form_value, harmonicity_defect, killing_term,
    DiscreteOperator, FormEvaluator, FormVariant, PotentialSampling,
};
pub use specfun::{
    beta_of_c, hardy_constant, intensity_constant, multiplier, weight, ExponentMap,
    FractionalParams, HardyConstants,
};
