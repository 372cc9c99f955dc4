//! Linear stability of steady states and fixed-step integration of the
//! phase dynamics.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::enumeration::{edge_differences, vector_field, SteadyState};
use crate::graph::WeightedGraph;
use crate::winding::ModelContext;

/// Nontrivial eigenvalues within this distance of zero make a state marginal.
pub const SPECTRAL_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StabilityError {
    #[error("the ring criterion needs a single cycle, got {edges} edges on {vertices} vertices")]
    NotRing { vertices: usize, edges: usize },
    #[error("the ring criterion needs omega = 0")]
    NonzeroOmega,
    #[error("theta has {got} entries for {expected} vertices")]
    Length { expected: usize, got: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error("need dt > 0 and T >= dt, got dt = {dt}, T = {t_end}")]
    Step { dt: f64, t_end: f64 },
    #[error("theta0 has {got} entries for {expected} vertices")]
    Length { expected: usize, got: usize },
    #[error("non-finite state at t = {time}")]
    NonFinite { time: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityLabel {
    Stable,
    Unstable,
    Marginal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Spectrum,
    RingTheorem,
    BranchShortcut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub label: StabilityLabel,
    /// Largest eigenvalue off the rotation mode; absent when a shortcut
    /// decided without the spectrum.
    pub max_nontrivial_eigenvalue: Option<f64>,
    /// Edges with `gamma_e cos theta_e < 0`.
    pub negative_cosine_edges: Vec<usize>,
    pub criterion_used: Criterion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassifyOptions {
    /// Declare stable without the spectrum when every `gamma_e cos theta_e > 0`.
    pub shortcut: bool,
    /// Try the ring criterion before the spectrum (rings with `omega = 0`).
    pub ring_theorem: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            shortcut: true,
            ring_theorem: false,
        }
    }
}

/// `-B diag(gamma_e cos theta_e) B^T`.
pub fn jacobian_at(g: &WeightedGraph, theta: &[f64]) -> DMatrix<f64> {
    let n = g.vertex_count();
    let mut j = DMatrix::zeros(n, n);
    for e in g.edges() {
        let w = e.weight * (theta[e.head] - theta[e.tail]).cos();
        j[(e.head, e.head)] -= w;
        j[(e.tail, e.tail)] -= w;
        j[(e.head, e.tail)] += w;
        j[(e.tail, e.head)] += w;
    }
    j
}

/// Largest eigenvalue of the Jacobian on the complement of the all-ones
/// rotation mode.
pub fn max_nontrivial_eigenvalue(g: &WeightedGraph, theta: &[f64]) -> f64 {
    let n = g.vertex_count();
    let mut j = jacobian_at(g, theta);
    // push the rotation mode far below the rest of the spectrum
    let shift = 1.0 + 2.0 * g.edges().iter().map(|e| e.weight.abs()).sum::<f64>();
    j.add_scalar_mut(-shift / n as f64);
    j.symmetric_eigenvalues().max()
}

pub fn label_of(eigenvalue: f64) -> StabilityLabel {
    if eigenvalue <= -SPECTRAL_TOL {
        StabilityLabel::Stable
    } else if eigenvalue >= SPECTRAL_TOL {
        StabilityLabel::Unstable
    } else {
        StabilityLabel::Marginal
    }
}

pub fn classify_stability(g: &WeightedGraph, state: &SteadyState) -> StabilityVerdict {
    classify_theta(g, &state.theta, None, ClassifyOptions::default())
}

/// Verdict for the angles `theta`. The ring criterion needs `ctx` and is
/// skipped when it does not apply or is inconclusive.
pub fn classify_theta(
    g: &WeightedGraph,
    theta: &[f64],
    ctx: Option<&ModelContext>,
    opts: ClassifyOptions,
) -> StabilityVerdict {
    let negative_cosine_edges: Vec<usize> = g
        .edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| e.weight * (theta[e.head] - theta[e.tail]).cos() < 0.0)
        .map(|(i, _)| i)
        .collect();
    let all_positive = g
        .edges()
        .iter()
        .all(|e| e.weight * (theta[e.head] - theta[e.tail]).cos() > 0.0);
    if opts.shortcut && all_positive {
        return StabilityVerdict {
            label: StabilityLabel::Stable,
            max_nontrivial_eigenvalue: None,
            negative_cosine_edges,
            criterion_used: Criterion::BranchShortcut,
        };
    }
    if let (true, Some(ctx)) = (opts.ring_theorem, ctx) {
        if let Ok(true) = ring_instability(ctx, theta) {
            return StabilityVerdict {
                label: StabilityLabel::Unstable,
                max_nontrivial_eigenvalue: None,
                negative_cosine_edges,
                criterion_used: Criterion::RingTheorem,
            };
        }
    }
    let top = max_nontrivial_eigenvalue(g, theta);
    StabilityVerdict {
        label: label_of(top),
        max_nontrivial_eigenvalue: Some(top),
        negative_cosine_edges,
        criterion_used: Criterion::Spectrum,
    }
}

/// Inverse of sine on `(0, pi/2) u (pi, 3pi/2)`, where `sin` and `cos` share
/// a sign. At `y = 0` the value is the limit from below when `below` is set.
fn inverse_plus(y: f64, below: bool) -> f64 {
    let y = y.clamp(-1.0, 1.0);
    if y > 0.0 || (y == 0.0 && !below) {
        y.asin()
    } else {
        PI - y.asin()
    }
}

/// Inverse of sine on `(pi/2, pi) u (3pi/2, 2pi)`.
fn inverse_minus(y: f64, below: bool) -> f64 {
    let y = y.clamp(-1.0, 1.0);
    if y > 0.0 || (y == 0.0 && !below) {
        PI - y.asin()
    } else {
        TAU + y.asin()
    }
}

pub fn ring_instability_criterion(
    ctx: &ModelContext,
    state: &SteadyState,
) -> Result<bool, StabilityError> {
    ring_instability(ctx, &state.theta)
}

/// Sufficient test for instability on a ring with `omega = 0`. Edges are
/// oriented along the cycle, `alpha` is the common flow `gamma_e sin theta_e`
/// and the sum of the edge angles, each read as the inverse of
/// `alpha / gamma_e` on `I_+` or `I_-` that it equals modulo `2 pi`, is
/// compared with the extreme sums that put at most one edge on the unstable
/// side.
pub fn ring_instability(ctx: &ModelContext, theta: &[f64]) -> Result<bool, StabilityError> {
    let g = ctx.graph();
    if !g.is_ring() {
        return Err(StabilityError::NotRing {
            vertices: g.vertex_count(),
            edges: g.edge_count(),
        });
    }
    if !ctx.has_zero_omega() {
        return Err(StabilityError::NonzeroOmega);
    }
    if theta.len() != g.vertex_count() {
        return Err(StabilityError::Length {
            expected: g.vertex_count(),
            got: theta.len(),
        });
    }
    let row = &ctx.basis().rows()[0];
    let diffs = edge_differences(g, theta);
    let gamma: Vec<f64> = g.edges().iter().map(|e| e.weight).collect();
    let oriented: Vec<f64> = diffs.iter().zip(row).map(|(d, &v)| v as f64 * d).collect();
    let alpha = oriented
        .iter()
        .zip(&gamma)
        .map(|(x, w)| w * x.sin())
        .sum::<f64>()
        / oriented.len() as f64;
    // theta_e is one of the two inverses modulo 2 pi
    let circle = |a: f64, b: f64| {
        let d = (a - b).rem_euclid(TAU);
        d.min(TAU - d)
    };
    // `side` is +1 for the alpha >= 0 inequality and -1 for alpha <= 0; it
    // picks the one-sided inverses when alpha is exactly zero
    let sums = |side: f64| {
        let below = |w: &f64| side * w.signum() < 0.0;
        let plus: Vec<f64> = gamma
            .iter()
            .map(|w| inverse_plus(alpha / w, below(w)))
            .collect();
        let minus: Vec<f64> = gamma
            .iter()
            .map(|w| inverse_minus(alpha / w, below(w)))
            .collect();
        let winding: f64 = oriented
            .iter()
            .zip(plus.iter().zip(&minus))
            .map(|(&x, (&p, &q))| if circle(x, p) <= circle(x, q) { p } else { q })
            .sum();
        (plus, minus, winding)
    };
    let tie = 1e-12;
    let mut unstable = false;
    if alpha >= 0.0 {
        let (plus, minus, winding) = sums(1.0);
        let sum_plus: f64 = plus.iter().sum();
        let bound = (0..plus.len())
            .map(|e| sum_plus - plus[e] + minus[e])
            .fold(f64::NEG_INFINITY, f64::max);
        unstable |= winding > bound + tie;
    }
    if alpha <= 0.0 {
        let (plus, minus, winding) = sums(-1.0);
        let sum_minus: f64 = minus.iter().sum();
        let bound = (0..plus.len())
            .map(|e| sum_minus - minus[e] + plus[e])
            .fold(f64::INFINITY, f64::min);
        unstable |= winding < bound - tie;
    }
    Ok(unstable)
}

/// `-sum_e gamma_e cos theta_e`, non-increasing along trajectories with
/// `omega = 0`.
pub fn energy(g: &WeightedGraph, theta: &[f64]) -> f64 {
    -g.edges()
        .iter()
        .map(|e| e.weight * (theta[e.head] - theta[e.tail]).cos())
        .sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// `||omega - B D sin(B^T theta)||_inf` at the last state.
    pub terminal_residual: f64,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// `time,theta_1,...,theta_N` with one row per recorded state.
    pub fn to_csv(&self) -> String {
        let n = self.states.first().map_or(0, Vec::len);
        let mut out = String::from("time");
        for i in 1..=n {
            let _ = write!(out, ",theta_{i}");
        }
        out.push('\n');
        for (t, s) in self.times.iter().zip(&self.states) {
            let _ = write!(out, "{t}");
            for x in s {
                let _ = write!(out, ",{x}");
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulateOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Keep every `record_every`-th step (the last step is always kept).
    pub record_every: usize,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        SimulateOptions {
            dt: 1e-2,
            t_end: 10.0,
            record_every: 1,
        }
    }
}

pub fn simulate(
    g: &WeightedGraph,
    theta0: &[f64],
    omega: &[f64],
    dt: f64,
    t_end: f64,
) -> Result<Trajectory, SimulationError> {
    simulate_with(
        g,
        theta0,
        omega,
        &SimulateOptions {
            dt,
            t_end,
            record_every: 1,
        },
    )
}

/// Classical fourth-order Runge-Kutta with fixed step `dt`; the final step is
/// shortened to land on `t_end`.
pub fn simulate_with(
    g: &WeightedGraph,
    theta0: &[f64],
    omega: &[f64],
    opts: &SimulateOptions,
) -> Result<Trajectory, SimulationError> {
    let n = g.vertex_count();
    let (dt, t_end) = (opts.dt, opts.t_end);
    if !(dt > 0.0 && t_end >= dt) {
        return Err(SimulationError::Step { dt, t_end });
    }
    for len in [theta0.len(), omega.len()] {
        if len != n {
            return Err(SimulationError::Length {
                expected: n,
                got: len,
            });
        }
    }
    let field = |t: &[f64]| vector_field(g, omega, t);
    let steps = (t_end / dt - 1e-9).ceil() as usize;
    let every = opts.record_every.max(1);
    let mut theta = theta0.to_vec();
    let mut times = vec![0.0];
    let mut states = vec![theta.clone()];
    for step in 1..=steps {
        let t0 = (step - 1) as f64 * dt;
        let h = dt.min(t_end - t0);
        let k1 = field(&theta);
        let k2 = field(&shifted(&theta, &k1, h / 2.0));
        let k3 = field(&shifted(&theta, &k2, h / 2.0));
        let k4 = field(&shifted(&theta, &k3, h));
        for i in 0..n {
            theta[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t = t0 + h;
        if theta.iter().any(|x| !x.is_finite()) {
            return Err(SimulationError::NonFinite { time: t });
        }
        if step % every == 0 || step == steps {
            times.push(t);
            states.push(theta.clone());
        }
    }
    let terminal_residual = vector_field(g, omega, &theta)
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(Trajectory {
        times,
        states,
        terminal_residual,
    })
}

fn shifted(theta: &[f64], k: &[f64], h: f64) -> Vec<f64> {
    theta.iter().zip(k).map(|(t, d)| t + h * d).collect()
}

/// `theta + u` with `u` uniform on `[-bound, bound]^N` from a seeded ChaCha8
/// stream.
pub fn perturb(theta: &[f64], bound: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    theta
        .iter()
        .map(|t| t + rng.gen_range(-bound..=bound))
        .collect()
}

/// Edge angle of a `q`-twisted state on a ring of `n` vertices, for callers
/// that need `2 pi q / n` folded into `(-pi, pi]`.
pub fn twist_angle(q: i64, n: usize) -> f64 {
    let x = (TAU * q as f64 / n as f64).rem_euclid(TAU);
    if x > PI {
        x - TAU
    } else {
        x
    }
}

/// Whether the `q`-twisted state on the unit ring `C_n` is stable, from the
/// sign of `cos(2 pi q / n)` (zero is marginal).
pub fn twisted_label(q: i64, n: usize) -> StabilityLabel {
    let x = twist_angle(q, n).abs();
    if (x - FRAC_PI_2).abs() < 1e-12 {
        StabilityLabel::Marginal
    } else if x < FRAC_PI_2 {
        StabilityLabel::Stable
    } else {
        StabilityLabel::Unstable
    }
}
