//! Steady states as lattice points of `W(A)`: bound the winding box, solve
//! `W(alpha) = k` for every integer point, rebuild `theta`, and cross-check
//! against an independent brute-force search.

mod bounds;
mod oracle;
mod reconstruct;
mod solve;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bounds::{winding_bounds, WindingBox};
pub use oracle::{brute_force_oracle, winding_of, OracleState};
pub use reconstruct::{
    edge_differences, fixed_point_residual, gauge_distance, gauge_fix, reconstruct_state,
    vector_field, StateTolerances, SteadyState,
};
pub use solve::{
    convexity_sign, minority_edge, solve_winding, solve_with, Exclusion, Solve, SolveMethod,
    SolveOptions, SolverFailure, WindingSolution,
};

use crate::winding::ModelContext;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnumerationError {
    #[error("cycle rank {dim} exceeds the enumeration cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("winding box holds {count} candidates, above the cap {cap}")]
    BoxOverflow { count: u128, cap: u128 },
    #[error("state for winding {k:?} is inconsistent: {what}")]
    Inconsistent { k: Vec<i64>, what: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerateOptions {
    pub max_dim: usize,
    pub max_candidates: u128,
    pub solver: SolveOptions,
    pub tolerances: StateTolerances,
    pub parallel: bool,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        EnumerateOptions {
            max_dim: 6,
            max_candidates: 10_000_000,
            solver: SolveOptions::default(),
            tolerances: StateTolerances::default(),
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumerationReport {
    pub states: Vec<SteadyState>,
    pub candidates_tested: u64,
    pub solver_failures: Vec<SolverFailure>,
    pub winding_box: WindingBox,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<f64>,
}

impl EnumerationReport {
    pub fn windings(&self) -> Vec<Vec<i64>> {
        self.states.iter().map(|s| s.winding.clone()).collect()
    }

    pub fn find(&self, k: &[i64]) -> Option<&SteadyState> {
        self.states.iter().find(|s| s.winding == k)
    }
}

pub fn enumerate_states(ctx: &ModelContext) -> Result<EnumerationReport, EnumerationError> {
    enumerate_with(ctx, &EnumerateOptions::default())
}

pub fn enumerate_with(
    ctx: &ModelContext,
    opts: &EnumerateOptions,
) -> Result<EnumerationReport, EnumerationError> {
    let started = Instant::now();
    if ctx.dim() > opts.max_dim {
        return Err(EnumerationError::DimensionCap {
            dim: ctx.dim(),
            cap: opts.max_dim,
        });
    }
    let winding_box = winding_bounds(ctx);
    let count = winding_box.len();
    if count > opts.max_candidates {
        return Err(EnumerationError::BoxOverflow {
            count,
            cap: opts.max_candidates,
        });
    }
    // build the polytope once before fanning out
    ctx.polytope();
    let candidates = winding_box.points();
    let work =
        |k: &Vec<i64>| -> Result<Option<Result<SteadyState, SolverFailure>>, EnumerationError> {
            match solve_with(ctx, k, &opts.solver) {
                Ok(Solve::Found(sol)) => {
                    let pin = sol.pinned.then_some(opts.solver.pin);
                    reconstruct::reconstruct_with(
                        ctx,
                        &sol.alpha,
                        k,
                        sol.boundary,
                        pin,
                        &opts.tolerances,
                    )
                    .map(|s| Some(Ok(s)))
                }
                Ok(Solve::Excluded(_)) => Ok(None),
                Err(f) => Ok(Some(Err(f))),
            }
        };
    let outcomes: Vec<_> = if opts.parallel {
        candidates.par_iter().map(work).collect()
    } else {
        candidates.iter().map(work).collect()
    };
    let mut states = Vec::new();
    let mut solver_failures = Vec::new();
    for outcome in outcomes {
        match outcome? {
            Some(Ok(s)) => states.push(s),
            Some(Err(f)) => solver_failures.push(f),
            None => {}
        }
    }
    Ok(EnumerationReport {
        states,
        candidates_tested: candidates.len() as u64,
        solver_failures,
        winding_box,
        timing: Some(started.elapsed().as_secs_f64()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;
    use std::f64::consts::PI;

    #[test]
    fn rings() {
        let report =
            enumerate_states(&ModelContext::principal(families::cycle(5)).unwrap()).unwrap();
        assert_eq!(report.windings(), vec![vec![-1], vec![0], vec![1]]);
        assert!(report.solver_failures.is_empty());

        let report =
            enumerate_states(&ModelContext::principal(families::cycle(4)).unwrap()).unwrap();
        assert_eq!(report.windings(), vec![vec![-1], vec![0], vec![1]]);
        let flags: Vec<bool> = report.states.iter().map(|s| s.boundary_flag).collect();
        assert_eq!(flags, vec![true, false, true]);
        let q1 = report.find(&[1]).unwrap();
        for (i, t) in q1.theta.iter().enumerate() {
            assert!((t - PI / 2.0 * i as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn diamond_contains_published_state() {
        let g = families::expanded_diamond();
        let basis = families::expanded_diamond_basis(&g);
        let ctx = ModelContext::builder(g).basis(basis).build().unwrap();
        let report = enumerate_states(&ctx).unwrap();
        assert!(report.solver_failures.is_empty());
        let s = report
            .find(&families::DIAMOND_WINDING)
            .expect("published lattice point");
        for (row, &k) in ctx.basis().rows().iter().zip(&s.winding) {
            assert_eq!(row.iter().zip(&s.lift).map(|(a, b)| a * b).sum::<i64>(), k);
        }
        assert!(gauge_distance(&s.theta, &families::DIAMOND_THETA) < 1e-4);
    }

    #[test]
    fn dimension_cap() {
        let ctx = ModelContext::principal(families::complete(5)).unwrap();
        let opts = EnumerateOptions {
            max_dim: 5,
            ..Default::default()
        };
        assert_eq!(
            enumerate_with(&ctx, &opts),
            Err(EnumerationError::DimensionCap { dim: 6, cap: 5 })
        );
    }
}
