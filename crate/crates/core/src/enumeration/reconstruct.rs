use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::EnumerationError;
use crate::graph::WeightedGraph;
use crate::winding::ModelContext;

/// A steady state together with the winding data that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    /// Angles in `[0, 2 pi)` with the first vertex at 0.
    pub theta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub winding: Vec<i64>,
    pub lift: Vec<i64>,
    pub boundary_flag: bool,
    /// `||omega - B D sin(B^T theta)||_inf`
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateTolerances {
    pub residual: f64,
    pub membership: f64,
    pub winding: f64,
}

impl Default for StateTolerances {
    fn default() -> Self {
        StateTolerances {
            residual: 1e-9,
            membership: 1e-7,
            winding: 1e-8,
        }
    }
}

/// Right-hand side of the model, `omega - B D sin(B^T theta)`.
pub fn vector_field(g: &WeightedGraph, omega: &[f64], theta: &[f64]) -> Vec<f64> {
    let mut out = omega.to_vec();
    for e in g.edges() {
        let flow = e.weight * (theta[e.head] - theta[e.tail]).sin();
        out[e.head] -= flow;
        out[e.tail] += flow;
    }
    out
}

pub fn fixed_point_residual(g: &WeightedGraph, omega: &[f64], theta: &[f64]) -> f64 {
    vector_field(g, omega, theta)
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Edge differences `theta_head - theta_tail`.
pub fn edge_differences(g: &WeightedGraph, theta: &[f64]) -> Vec<f64> {
    g.edges()
        .iter()
        .map(|e| theta[e.head] - theta[e.tail])
        .collect()
}

/// Shifts so that vertex 0 sits at 0 and reduces into `[0, 2 pi)`.
pub fn gauge_fix(theta: &[f64]) -> Vec<f64> {
    let base = theta.first().copied().unwrap_or(0.0);
    theta
        .iter()
        .map(|t| (t - base).rem_euclid(TAU))
        .map(|t| if t >= TAU { 0.0 } else { t })
        .collect()
}

/// Smallest distance between two angle vectors over all global shifts,
/// measured componentwise on the circle.
pub fn gauge_distance(a: &[f64], b: &[f64]) -> f64 {
    // circular mean of the differences is the best shift for small gaps
    let (s, c) = a.iter().zip(b).fold((0.0, 0.0), |(s, c), (x, y)| {
        let d = x - y;
        (s + d.sin(), c + d.cos())
    });
    let shift = s.atan2(c);
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y - shift).rem_euclid(TAU);
            d.min(TAU - d)
        })
        .fold(0.0f64, f64::max)
}

/// `theta` from `B^T theta = sin^-1 L(alpha) - 2 pi K`, checked against every
/// state invariant.
pub fn reconstruct_state(
    ctx: &ModelContext,
    alpha: &[f64],
    k: &[i64],
) -> Result<SteadyState, EnumerationError> {
    reconstruct_with(ctx, alpha, k, false, None, &StateTolerances::default())
}

pub(crate) fn reconstruct_with(
    ctx: &ModelContext,
    alpha: &[f64],
    k: &[i64],
    boundary_flag: bool,
    pin: Option<f64>,
    tol: &StateTolerances,
) -> Result<SteadyState, EnumerationError> {
    let g = ctx.graph();
    let l = match pin {
        Some(p) => ctx.l_values_pinned(alpha, p),
        None => ctx.l_values(alpha),
    };
    let x: Vec<f64> = l
        .iter()
        .enumerate()
        .map(|(e, &y)| ctx.branch(e).inverse_clamped(y))
        .collect();
    let lift = ctx.lift(k);
    let y: Vec<f64> = x
        .iter()
        .zip(&lift)
        .map(|(xe, ke)| xe - TAU * *ke as f64)
        .collect();
    let mut theta = gauge_fix(&ctx.solve_angles(&y));
    if fixed_point_residual(g, ctx.omega(), &theta) > tol.residual {
        // near-singular states carry the solver's winding error into theta
        theta = gauge_fix(&polish(g, ctx.omega(), theta, &[]).0);
    }

    let inconsistent = |what: String| EnumerationError::Inconsistent {
        k: k.to_vec(),
        what,
    };
    let w = ctx.pair_with_basis(&x);
    let wgap = w
        .iter()
        .zip(k)
        .map(|(a, &b)| (a - b as f64).abs())
        .fold(0.0f64, f64::max);
    if wgap > tol.winding {
        return Err(inconsistent(format!("W(alpha) misses k by {wgap:.3e}")));
    }
    let diffs = edge_differences(g, &theta);
    for (e, (&d, &ye)) in diffs.iter().zip(&y).enumerate() {
        let off = (d - ye).rem_euclid(TAU);
        if off.min(TAU - off) > tol.membership {
            return Err(inconsistent(format!(
                "edge {e}: B^T theta differs from the lifted angle by {off:.3e}"
            )));
        }
        if !ctx.branch(e).contains_angle(d, tol.membership) {
            return Err(inconsistent(format!(
                "edge {e}: difference {d} is outside its branch"
            )));
        }
    }
    let residual = fixed_point_residual(g, ctx.omega(), &theta);
    if residual > tol.residual {
        return Err(inconsistent(format!("fixed-point residual {residual:.3e}")));
    }
    Ok(SteadyState {
        theta,
        alpha: alpha.to_vec(),
        winding: k.to_vec(),
        lift,
        boundary_flag,
        residual,
    })
}

/// Levenberg-Marquardt on the fixed-point equations with `theta_1 = 0`,
/// plus one equation `theta_head - theta_tail = target` per pinned edge.
/// Returns the last iterate and its largest residual entry.
pub(crate) fn polish(
    g: &WeightedGraph,
    omega: &[f64],
    mut theta: Vec<f64>,
    pins: &[(usize, f64)],
) -> (Vec<f64>, f64) {
    let n = g.vertex_count();
    let residual_vec = |t: &[f64]| {
        let mut f = vector_field(g, omega, t);
        for &(e, target) in pins {
            let edge = g.edge(e);
            f.push(t[edge.head] - t[edge.tail] - target);
        }
        DVector::from_vec(f)
    };
    let mut f = residual_vec(&theta);
    let mut cost = f.norm_squared();
    let mut mu = 1e-3;
    for _ in 0..200 {
        if f.amax() < 1e-13 {
            break;
        }
        // d f_i / d theta_j = -(weighted Laplacian with gamma cos)
        let mut jac = DMatrix::zeros(n + pins.len(), n - 1);
        for e in g.edges() {
            let w = e.weight * (theta[e.head] - theta[e.tail]).cos();
            for (a, b, s) in [
                (e.head, e.head, -w),
                (e.head, e.tail, w),
                (e.tail, e.tail, -w),
                (e.tail, e.head, w),
            ] {
                if b > 0 {
                    jac[(a, b - 1)] += s;
                }
            }
        }
        for (row, &(e, _)) in pins.iter().enumerate() {
            let edge = g.edge(e);
            for (v, s) in [(edge.head, 1.0), (edge.tail, -1.0)] {
                if v > 0 {
                    jac[(n + row, v - 1)] += s;
                }
            }
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let grad = &jt * &f;
        let mut improved = false;
        for _ in 0..30 {
            let mut lhs = jtj.clone();
            for i in 0..n - 1 {
                lhs[(i, i)] += mu * (1.0 + jtj[(i, i)]);
            }
            let Some(step) = lhs.cholesky().map(|c| c.solve(&(-&grad))) else {
                mu *= 10.0;
                continue;
            };
            let trial: Vec<f64> = std::iter::once(0.0)
                .chain((1..n).map(|i| theta[i] + step[i - 1]))
                .collect();
            let ft = residual_vec(&trial);
            let ct = ft.norm_squared();
            if ct < cost {
                theta = trial;
                f = ft;
                cost = ct;
                mu = (mu * 0.3).max(1e-15);
                improved = true;
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    let r = f.amax();
    (theta, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;
    use std::f64::consts::PI;

    #[test]
    fn synchronized_triangle() {
        let ctx = ModelContext::principal(families::cycle(3)).unwrap();
        let s = reconstruct_state(&ctx, &[0.0], &[0]).unwrap();
        assert_eq!(s.theta, vec![0.0; 3]);
        assert_eq!(s.lift, vec![0; 3]);
    }

    #[test]
    fn twisted_ring() {
        let ctx = ModelContext::principal(families::cycle(5)).unwrap();
        let s = reconstruct_state(&ctx, &[(2.0 * PI / 5.0).sin()], &[1]).unwrap();
        for (i, t) in s.theta.iter().enumerate() {
            assert!((t - 2.0 * PI * i as f64 / 5.0).abs() < 1e-12);
        }
        assert!(s.residual < 1e-14);
    }

    #[test]
    fn wrong_winding_is_rejected() {
        let ctx = ModelContext::principal(families::cycle(5)).unwrap();
        assert!(matches!(
            reconstruct_state(&ctx, &[0.3], &[1]),
            Err(EnumerationError::Inconsistent { .. })
        ));
    }

    #[test]
    fn gauge_distance_ignores_shifts() {
        let a = [0.1, 1.0, 6.2];
        let b: Vec<f64> = a.iter().map(|x| (x + 2.5f64).rem_euclid(TAU)).collect();
        assert!(gauge_distance(&a, &b) < 1e-12);
        assert!(gauge_distance(&[0.0, 0.0], &[0.0, 1.0]) > 0.4);
    }
}
