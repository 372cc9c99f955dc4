//! Volume of `W(A)` as the integral of `|det W'|` over `A`, the two-cycle
//! closed form, spanning-tree integrals, lattice-count asymptotics under
//! subdivision, and the branch choice that maximises the volume.

mod quadrature;
mod weyl;

use std::f64::consts::TAU;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::enumeration::EnumerationError;
use crate::graph::{smooth_two_valent, spanning_tree_count, GraphError, WeightedGraph};
use crate::winding::{ModelContext, WindingError};

pub use quadrature::{gauss_kronrod_adaptive, tanh_sinh_adaptive};
pub use weyl::{
    maximize_volume_branches, weyl_experiment, BranchComparison, BranchRow, MaximizeOptions,
    WeylOptions, WeylRow,
};

use quadrature::PolytopeIntegrator;

/// Largest cycle rank integrated by nested quadrature.
pub const MAX_QUADRATURE_DIM: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("quadrature supports cycle rank up to {max}, got {dim}; use monte_carlo")]
    QuadratureDim { dim: usize, max: usize },
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("expected {expected} rates, got {got}")]
    Rates { expected: usize, got: usize },
    #[error(transparent)]
    Winding(#[from] WindingError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Enumeration(#[from] EnumerationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeMethod {
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub value: f64,
    pub abs_error: f64,
    pub method: VolumeMethod,
    /// integrand evaluations for quadrature, samples for Monte Carlo
    pub samples_or_cells: u64,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeOptions {
    pub method: VolumeMethod,
    /// relative tolerance for quadrature
    pub tol: f64,
    /// integrand evaluations (quadrature) or samples (Monte Carlo)
    pub budget: u64,
    pub seed: u64,
}

impl Default for VolumeOptions {
    fn default() -> Self {
        VolumeOptions {
            method: VolumeMethod::Quadrature,
            tol: 1e-9,
            budget: 20_000_000,
            seed: 0,
        }
    }
}

impl VolumeOptions {
    pub fn monte_carlo(samples: u64, seed: u64) -> Self {
        VolumeOptions {
            method: VolumeMethod::MonteCarlo,
            budget: samples,
            seed,
            ..Default::default()
        }
    }
}

/// `|W(A)|`.
pub fn volume_w(ctx: &ModelContext, opts: &VolumeOptions) -> Result<VolumeEstimate, MeasureError> {
    volume_w_rates(ctx, &vec![1.0; ctx.edge_count()], opts)
}

/// `|W_r(A)|` for `W_r = (1 / 2 pi) V D_r sin^-1 L`, the limit shape of the
/// subdivided winding maps.
pub fn volume_w_rates(
    ctx: &ModelContext,
    rates: &[f64],
    opts: &VolumeOptions,
) -> Result<VolumeEstimate, MeasureError> {
    if rates.len() != ctx.edge_count() {
        return Err(MeasureError::Rates {
            expected: ctx.edge_count(),
            got: rates.len(),
        });
    }
    let signs: Vec<f64> = (0..ctx.edge_count())
        .map(|e| rates[e] * ctx.branch(e).epsilon() / ctx.graph().edge(e).weight)
        .collect();
    integrate(ctx, opts, |s| det_from_s(ctx, &signs, s))
}

fn det_from_s(ctx: &ModelContext, signs: &[f64], s: &[f64]) -> f64 {
    let d: Vec<f64> = signs.iter().zip(s).map(|(k, se)| k / se.sqrt()).collect();
    ctx.jacobian_from_factors(&d).determinant().abs()
}

/// The volume integrand `|det W'(alpha)|` as evaluated by the quadrature.
pub fn det_integrand(ctx: &ModelContext, alpha: &[f64]) -> f64 {
    let s: Vec<f64> = ctx
        .l_values(alpha)
        .iter()
        .map(|l| (1.0 - l) * (1.0 + l))
        .collect();
    let signs: Vec<f64> = (0..ctx.edge_count())
        .map(|e| ctx.branch(e).epsilon() / ctx.graph().edge(e).weight)
        .collect();
    det_from_s(ctx, &signs, &s)
}

/// `I_T`: the co-tree product of `1 / sqrt(1 - L_e^2)` integrated over `A`.
pub fn tree_integral(
    ctx: &ModelContext,
    tree: &[usize],
    opts: &VolumeOptions,
) -> Result<VolumeEstimate, MeasureError> {
    check_spanning_tree(ctx.graph(), tree)?;
    let mut cotree = vec![true; ctx.edge_count()];
    tree.iter().for_each(|&e| cotree[e] = false);
    integrate(ctx, opts, |s| {
        s.iter()
            .zip(&cotree)
            .filter(|(_, &c)| c)
            .map(|(se, _)| 1.0 / se.sqrt())
            .product()
    })
}

fn check_spanning_tree(g: &WeightedGraph, tree: &[usize]) -> Result<(), MeasureError> {
    let n = g.vertex_count();
    let bad = |what: &str| {
        Err(MeasureError::Hypothesis(format!(
            "{tree:?} is not a spanning tree: {what}"
        )))
    };
    if tree.len() + 1 != n {
        return bad("wrong number of edges");
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut v: usize) -> usize {
        while p[v] != v {
            p[v] = p[p[v]];
            v = p[v];
        }
        v
    }
    for &e in tree {
        if e >= g.edge_count() {
            return bad("edge index out of range");
        }
        let edge = g.edge(e);
        let (a, b) = (root(&mut parent, edge.tail), root(&mut parent, edge.head));
        if a == b {
            return bad("contains a cycle");
        }
        parent[a] = b;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeBounds {
    pub trees: Vec<(Vec<usize>, VolumeEstimate)>,
    pub min: f64,
    pub max: f64,
    /// `|spt| min_T I_T / (2 pi |gamma|)^c`
    pub lower: f64,
    pub upper: f64,
}

/// Every `I_T` and the resulting sandwich for `|W(A)|`, for uniform weights.
pub fn tree_bounds(ctx: &ModelContext, opts: &VolumeOptions) -> Result<TreeBounds, MeasureError> {
    let gamma = uniform_weight(ctx.graph())?;
    let list = ctx.spanning_tree_list()?;
    let trees = list
        .iter()
        .map(|t| tree_integral(ctx, t, opts).map(|v| (t.clone(), v)))
        .collect::<Result<Vec<_>, _>>()?;
    let min = trees
        .iter()
        .map(|t| t.1.value)
        .fold(f64::INFINITY, f64::min);
    let max = trees
        .iter()
        .map(|t| t.1.value)
        .fold(f64::NEG_INFINITY, f64::max);
    let scale = list.len() as f64 / (TAU * gamma.abs()).powi(ctx.dim() as i32);
    Ok(TreeBounds {
        trees,
        min,
        max,
        lower: scale * min,
        upper: scale * max,
    })
}

fn uniform_weight(g: &WeightedGraph) -> Result<f64, MeasureError> {
    let gamma = g.edge(0).weight;
    if g.edges().iter().any(|e| e.weight != gamma) {
        return Err(MeasureError::Hypothesis(
            "edge weights are not uniform".into(),
        ));
    }
    Ok(gamma)
}

/// `J = int_0^1 arcsin(1 - b) / sqrt(1 - b^2) db` by two unrelated rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BracketConstant {
    pub j_tanh_sinh: f64,
    pub j_gauss_kronrod: f64,
    /// `pi^2 / 2 + 2 J`
    pub bracket: f64,
}

pub fn bracket_integrals() -> BracketConstant {
    static CACHE: OnceLock<BracketConstant> = OnceLock::new();
    *CACHE.get_or_init(|| {
        // with db = 1 - b: arcsin(db) / sqrt(db (2 - db))
        let (ts, _) = tanh_sinh_adaptive(0.0, 1.0, 1e-14, |_, _, db| {
            db.asin() / (db * (2.0 - db)).sqrt()
        });
        let (gk, _) = gauss_kronrod_adaptive(0.0, 1.0, 1e-14, |b| {
            (1.0 - b).asin() / ((1.0 - b) * (1.0 + b)).sqrt()
        });
        BracketConstant {
            j_tanh_sinh: ts,
            j_gauss_kronrod: gk,
            bracket: std::f64::consts::PI.powi(2) / 2.0 + 2.0 * ts,
        }
    })
}

/// `pi^2 / 2 + 2 J`, the value of the co-tree double integral for two cycles.
pub fn bracket_constant() -> f64 {
    bracket_integrals().bracket
}

/// `|W(A)|` for two intersecting cycles with a common weight `gamma`:
/// `|spt(G)| (pi^2 / 2 + 2 J) / (4 pi^2)`, independent of `gamma`.
pub fn two_cycle_closed_form(g: &WeightedGraph, gamma: f64) -> Result<f64, MeasureError> {
    if g.cycle_rank() != 2 {
        return Err(MeasureError::Hypothesis(format!(
            "cycle rank is {}, not 2",
            g.cycle_rank()
        )));
    }
    let smooth = smooth_two_valent(g);
    if smooth.vertex_count != 2
        || smooth.edge_count() != 3
        || smooth.edges.iter().any(|(a, b)| a == b)
    {
        return Err(MeasureError::Hypothesis(
            "the two cycles do not share an edge".into(),
        ));
    }
    if g.edges().iter().any(|e| e.weight != gamma) {
        return Err(MeasureError::Hypothesis(format!(
            "edge weights are not all equal to {gamma}"
        )));
    }
    let spt = spanning_tree_count(g)? as f64;
    Ok(spt * bracket_constant() / (TAU * TAU))
}

/// Integrates `f(s)`, `s_e = 1 - L_e^2`, over `A`.
fn integrate<F>(
    ctx: &ModelContext,
    opts: &VolumeOptions,
    f: F,
) -> Result<VolumeEstimate, MeasureError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if ctx.polytope().is_empty() {
        return Err(WindingError::EmptyPolytope.into());
    }
    match opts.method {
        VolumeMethod::Quadrature => quadrature(ctx, opts, &f),
        VolumeMethod::MonteCarlo => Ok(monte_carlo(ctx, opts, &f)),
    }
}

fn quadrature<F>(
    ctx: &ModelContext,
    opts: &VolumeOptions,
    f: &F,
) -> Result<VolumeEstimate, MeasureError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let c = ctx.dim();
    if c > MAX_QUADRATURE_DIM {
        return Err(MeasureError::QuadratureDim {
            dim: c,
            max: MAX_QUADRATURE_DIM,
        });
    }
    let integrator = PolytopeIntegrator::new(ctx);
    let run = |level: u32| {
        let before = integrator.evaluations();
        let v = integrator.integrate(level, f);
        (v, integrator.evaluations() - before)
    };
    let (mut value, mut last) = run(1);
    let mut diff = f64::INFINITY;
    for level in 2..=9 {
        // each level doubles the nodes per coordinate
        if integrator.evaluations() + last * (1u64 << c) > opts.budget && diff.is_finite() {
            break;
        }
        let (next, used) = run(level);
        diff = (next - value).abs();
        value = next;
        last = used;
        if diff <= opts.tol * value.abs() {
            break;
        }
    }
    let floor = 4.0 * f64::EPSILON * value.abs();
    Ok(VolumeEstimate {
        value,
        abs_error: diff.max(floor).max(f64::MIN_POSITIVE),
        method: VolumeMethod::Quadrature,
        samples_or_cells: integrator.evaluations(),
        seed: None,
    })
}

const MC_BATCH: u64 = 1 << 16;

fn monte_carlo<F>(ctx: &ModelContext, opts: &VolumeOptions, f: &F) -> VolumeEstimate
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let bbox = ctx
        .polytope()
        .bbox
        .clone()
        .expect("non-empty polytope has a bounding box");
    let box_volume: f64 = bbox.iter().map(|(lo, hi)| hi - lo).product();
    let total = opts.budget.max(2);
    let batches = total.div_ceil(MC_BATCH);
    let ranges = ctx.ranges();
    let sums: Vec<(f64, f64)> = (0..batches)
        .into_par_iter()
        .map(|batch| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(batch);
            let count = MC_BATCH.min(total - batch * MC_BATCH);
            let mut alpha = vec![0.0; bbox.len()];
            let (mut sum, mut sq) = (0.0, 0.0);
            for _ in 0..count {
                for (a, (lo, hi)) in alpha.iter_mut().zip(&bbox) {
                    *a = rng.gen_range(*lo..*hi);
                }
                let l = ctx.l_values(&alpha);
                if l.iter().zip(ranges).any(|(y, (lo, hi))| y < lo || y > hi) {
                    continue;
                }
                let s: Vec<f64> = l.iter().map(|y| (1.0 - y) * (1.0 + y)).collect();
                if s.iter().any(|&v| v <= 0.0) {
                    continue;
                }
                let v = f(&s);
                sum += v;
                sq += v * v;
            }
            (sum, sq)
        })
        .collect();
    let (sum, sq) = sums
        .iter()
        .fold((0.0, 0.0), |(a, b), (s, q)| (a + s, b + q));
    let n = total as f64;
    let mean = sum / n;
    let var = (sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    let value = box_volume * mean;
    let err = box_volume * (var / n).sqrt();
    VolumeEstimate {
        value,
        abs_error: err.max(f64::EPSILON * value.abs()).max(f64::MIN_POSITIVE),
        method: VolumeMethod::MonteCarlo,
        samples_or_cells: total,
        seed: Some(opts.seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;
    use std::f64::consts::PI;

    #[test]
    fn rings_have_volume_half_n() {
        for n in [3, 4, 7] {
            let ctx = ModelContext::principal(families::cycle(n)).unwrap();
            let v = volume_w(&ctx, &VolumeOptions::default()).unwrap();
            assert!((v.value - n as f64 / 2.0).abs() < 1e-9, "{n}: {v:?}");
            assert!(v.abs_error > 0.0 && v.abs_error < 1e-6);
        }
    }

    #[test]
    fn bracket_rules_agree() {
        let b = bracket_integrals();
        assert!((b.j_tanh_sinh - b.j_gauss_kronrod).abs() < 1e-10);
        // the direct double integral over |a|, |b|, |a - b| <= 1
        let inner = |a: f64| {
            let (lo, hi) = ((a - 1.0).max(-1.0), (a + 1.0).min(1.0));
            hi.asin() - lo.asin()
        };
        let f = |a: f64, s: f64| inner(a) / s.sqrt();
        let (left, _) = tanh_sinh_adaptive(-1.0, 0.0, 1e-13, |a, da, _| f(a, da * (2.0 - da)));
        let (right, _) = tanh_sinh_adaptive(0.0, 1.0, 1e-13, |a, _, db| f(a, db * (2.0 - db)));
        let direct = left + right;
        assert!(
            (direct - b.bracket).abs() < 1e-9,
            "{direct} vs {}",
            b.bracket
        );
        assert!((b.bracket - (PI * PI / 2.0 + 2.0 * b.j_tanh_sinh)).abs() < 1e-15);
    }

    #[test]
    fn theta_graph_closed_form() {
        let g = families::theta([1, 2, 2]);
        let ctx = ModelContext::principal(g.clone()).unwrap();
        let v = volume_w(&ctx, &VolumeOptions::default()).unwrap();
        let closed = two_cycle_closed_form(&g, 1.0).unwrap();
        assert!(
            (v.value - closed).abs() < 1e-7 + 3.0 * v.abs_error,
            "{v:?} vs {closed}"
        );
    }

    #[test]
    fn closed_form_hypotheses() {
        assert!(two_cycle_closed_form(&families::bowtie(), 1.0).is_err());
        assert!(two_cycle_closed_form(&families::cycle(4), 1.0).is_err());
        assert!(two_cycle_closed_form(&families::theta([1, 2, 2]), 2.0).is_err());
    }

    #[test]
    fn monte_carlo_is_seeded() {
        let ctx = ModelContext::principal(families::theta([1, 2, 2])).unwrap();
        let a = volume_w(&ctx, &VolumeOptions::monte_carlo(200_000, 7)).unwrap();
        let b = volume_w(&ctx, &VolumeOptions::monte_carlo(200_000, 7)).unwrap();
        assert_eq!(a, b);
        let exact = two_cycle_closed_form(ctx.graph(), 1.0).unwrap();
        assert!(
            (a.value - exact).abs() < 5.0 * a.abs_error,
            "{a:?} vs {exact}"
        );
    }

    #[test]
    fn tree_checks() {
        let ctx = ModelContext::principal(families::cycle(4)).unwrap();
        assert!(tree_integral(&ctx, &[0, 1], &VolumeOptions::default()).is_err());
        assert!(tree_integral(&ctx, &[0, 1, 2], &VolumeOptions::default()).is_ok());
    }
}
