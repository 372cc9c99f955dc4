//! Independent search for steady states: grid starts over the spanning-tree
//! edge differences, Levenberg-Marquardt polish of the fixed-point equations,
//! then deduplication. Unit-weight rings are also solved in closed form.

use std::f64::consts::{PI, TAU};

use super::reconstruct::{
    edge_differences, fixed_point_residual, gauge_distance, gauge_fix, polish,
};
use crate::graph::{bfs_spanning_tree, WeightedGraph};
use crate::winding::{Branch, BranchAssignment};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleState {
    /// Gauge-fixed angles in `[0, 2 pi)`.
    pub theta: Vec<f64>,
    pub residual: f64,
}

/// Winding vector of `theta` for basis rows `v`: `(1 / 2 pi) v . x` where
/// `x_e` is the representative of the edge difference inside `I_e`.
pub fn winding_of(
    g: &WeightedGraph,
    rows: &[Vec<i64>],
    branches: &BranchAssignment,
    theta: &[f64],
) -> Vec<i64> {
    let x: Vec<f64> = edge_differences(g, theta)
        .iter()
        .enumerate()
        .map(|(e, &d)| branches.get(e).reduce_angle(d))
        .collect();
    rows.iter()
        .map(|row| {
            (row.iter()
                .zip(&x)
                .map(|(&v, xe)| v as f64 * xe)
                .sum::<f64>()
                / TAU)
                .round() as i64
        })
        .collect()
}

/// All steady states with `theta_e` in `I_e + 2 pi Z` for `omega = 0`.
pub fn brute_force_oracle(
    g: &WeightedGraph,
    branches: &BranchAssignment,
    grid_density: usize,
) -> Vec<OracleState> {
    let mut found: Vec<OracleState> = Vec::new();
    let mut keep = |theta: Vec<f64>| {
        let theta = gauge_fix(&theta);
        let residual = fixed_point_residual(g, &vec![0.0; g.vertex_count()], &theta);
        if residual > 1e-9 || !in_branches(g, branches, &theta, 1e-6) {
            return;
        }
        if found
            .iter()
            .all(|s| gauge_distance(&s.theta, &theta) > 1e-6)
        {
            found.push(OracleState { theta, residual });
        }
    };
    if let Some(states) = unit_ring_states(g, branches) {
        states.into_iter().for_each(&mut keep);
    } else {
        let tree = bfs_spanning_tree(g);
        let density = grid_density.max(1);
        let zero = vec![0.0; g.vertex_count()];
        let total = density.pow(tree.len() as u32);
        for index in 0..total {
            let mut rest = index;
            let mut diffs = vec![0.0; g.edge_count()];
            for &e in &tree {
                let b = branches.get(e);
                let j = rest % density;
                rest /= density;
                diffs[e] = b.lo() + (b.hi() - b.lo()) * (j as f64 + 0.5) / density as f64;
            }
            let start = angles_from_tree(g, &tree, &diffs);
            let (theta, residual) = polish(g, &zero, start, &[]);
            if residual < 1e-11 {
                keep(snap_to_branch_ends(g, branches, theta, 1e-5));
            } else if residual < 1e-4 {
                // slow convergence towards a root with edges at branch ends
                keep(snap_to_branch_ends(g, branches, theta, 1e-2));
            }
        }
    }
    found.sort_by(|a, b| {
        a.theta
            .partial_cmp(&b.theta)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    found
}

/// Edges outside their branch or within `reach` of a branch end are pinned
/// to the nearest end and the state is polished again, for a few rounds.
/// States on the boundary of their branches are exact only after this, and
/// a state on a continuum that leaves the branches is moved to its end.
fn snap_to_branch_ends(
    g: &WeightedGraph,
    branches: &BranchAssignment,
    mut theta: Vec<f64>,
    reach: f64,
) -> Vec<f64> {
    for _ in 0..3 {
        let mut pins = Vec::new();
        for (e, &d) in edge_differences(g, &theta).iter().enumerate() {
            let b = branches.get(e);
            let x = b.reduce_angle(d);
            let outside = !b.contains_angle(d, 1e-12);
            let (end, off) = [b.lo(), b.hi()]
                .into_iter()
                .map(|end| (end, (x - end).abs()))
                .min_by(|p, q| p.1.total_cmp(&q.1))
                .expect("two ends");
            if outside || off < reach {
                pins.push((e, d + end - x));
            }
        }
        if pins.is_empty() {
            break;
        }
        match polish(g, &vec![0.0; g.vertex_count()], theta.clone(), &pins) {
            (pinned, r) if r < 1e-11 => {
                if pinned == theta {
                    break;
                }
                theta = pinned;
            }
            _ => break,
        }
    }
    theta
}

fn in_branches(g: &WeightedGraph, branches: &BranchAssignment, theta: &[f64], tol: f64) -> bool {
    edge_differences(g, theta)
        .iter()
        .enumerate()
        .all(|(e, &d)| branches.get(e).contains_angle(d, tol))
}

fn angles_from_tree(g: &WeightedGraph, tree: &[usize], diffs: &[f64]) -> Vec<f64> {
    let n = g.vertex_count();
    let mut theta = vec![f64::NAN; n];
    theta[0] = 0.0;
    let mut changed = true;
    while changed {
        changed = false;
        for &e in tree {
            let edge = g.edge(e);
            if theta[edge.tail].is_finite() && !theta[edge.head].is_finite() {
                theta[edge.head] = theta[edge.tail] + diffs[e];
                changed = true;
            } else if theta[edge.head].is_finite() && !theta[edge.tail].is_finite() {
                theta[edge.tail] = theta[edge.head] - diffs[e];
                changed = true;
            }
        }
    }
    theta
}

/// Closed-form states of a unit-weight ring oriented head to tail: every edge
/// carries the same `sin theta_e = a`, and the winding fixes `a`.
fn unit_ring_states(g: &WeightedGraph, branches: &BranchAssignment) -> Option<Vec<Vec<f64>>> {
    let n = g.vertex_count();
    let cyclic = g.is_ring()
        && g.edges().iter().all(|e| e.weight == 1.0)
        && (0..n).all(|i| g.edge(i).tail == i && g.edge(i).head == (i + 1) % n);
    let named = branches
        .0
        .iter()
        .all(|b| *b == Branch::PRINCIPAL || *b == Branch::REFLECTED);
    if !cyclic || !named {
        return None;
    }
    let n_dec = branches
        .0
        .iter()
        .filter(|b| **b == Branch::REFLECTED)
        .count() as i64;
    let n_inc = n as i64 - n_dec;
    if n_inc == n_dec {
        // sum of branch angles is constant: a continuum or nothing
        return Some(Vec::new());
    }
    let mut out = Vec::new();
    let span = (n_inc - n_dec).abs() as f64 * PI / 2.0;
    let c0 = n_dec as f64 * PI;
    let kmin = ((c0 - span) / TAU).ceil() as i64 - 1;
    let kmax = ((c0 + span) / TAU).floor() as i64 + 1;
    for k in kmin..=kmax {
        let s = (TAU * k as f64 - c0) / (n_inc - n_dec) as f64;
        if s.abs() > PI / 2.0 + 1e-12 {
            continue;
        }
        let a = s.clamp(-PI / 2.0, PI / 2.0).sin();
        let mut theta = vec![0.0; n];
        for i in 1..n {
            theta[i] = theta[i - 1] + branches.get(i - 1).inverse_clamped(a);
        }
        out.push(theta);
    }
    Some(out)
}
