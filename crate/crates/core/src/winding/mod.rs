//! Branch-restricted inverse sine, the affine map `L`, the winding map `W`,
//! its Jacobian, and the polytope `A` on which `W` is defined.

mod branch;
mod context;
pub mod lp;
mod maps;
mod polytope;

use thiserror::Error;

use crate::graph::GraphError;

pub use branch::{Branch, BranchAssignment, DOMAIN_TOL};
pub use context::{ContextBuilder, ModelContext};
pub use maps::{det_tree_formula, l_map, w_jacobian, w_map};
pub use polytope::{count_faces, polytope_a, Halfspace, PolytopeH};

/// Distance from `|L_e| = 1` below which `W'` is not evaluated.
pub const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WindingError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid branch: {0}")]
    InvalidBranch(String),
    #[error("expected {expected} branches, got {got}")]
    BranchCount { expected: usize, got: usize },
    #[error("value {y} is outside the branch range [{lo}, {hi}]")]
    Domain { y: f64, lo: f64, hi: f64 },
    #[error("edge {edge}: L = {value} is outside sin(I_e) = [{lo}, {hi}]")]
    OutsideA {
        edge: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("edge {edge}: |L| = {value} is within {tol} of 1, W' diverges there")]
    NearBoundary { edge: usize, value: f64, tol: f64 },
    #[error("expected {expected} frequencies, got {got}")]
    OmegaLength { expected: usize, got: usize },
    #[error("frequencies sum to {0}, not zero")]
    OmegaSum(f64),
    #[error("cycle basis is not unimodularly equivalent to a fundamental basis")]
    BasisNotUnimodular,
    #[error("expected a vector of length {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("polytope A is empty")]
    EmptyPolytope,
    #[error("face counting needs sin(I_e) = [-1, 1] on every edge")]
    PartialBranches,
}
