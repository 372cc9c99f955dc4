//! One-dimensional rules and the nested integrator over `A`.
//!
//! The integrands of interest blow up like `1 / sqrt(distance)` on the faces
//! of `A`. Every coordinate is integrated with the tanh-sinh rule over pieces
//! whose ends are the projections of the slice vertices, so each piece is
//! smooth inside and singular at most at its ends, where the rule's double
//! exponential clustering absorbs the singularity. Each coordinate is kept as
//! a piece end plus the exact node offset, so `1 - L_e^2` keeps full relative
//! accuracy arbitrarily close to a face.

use std::f64::consts::FRAC_PI_2;
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::winding::ModelContext;

/// Truncation of the tanh-sinh parameter; at `t = 4` the node offsets from
/// the ends are below `1e-37` of the interval.
const T_MAX: f64 = 4.0;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Node {
    /// offset from the left end, as a fraction of the interval
    pub from_lo: f64,
    /// offset from the right end, as a fraction of the interval
    pub from_hi: f64,
    /// weight, as a fraction of the interval length
    pub weight: f64,
}

/// Tanh-sinh nodes with step `2^-level` on the unit interval.
pub(crate) fn tanh_sinh_nodes(level: u32) -> Vec<Node> {
    let h = 0.5f64.powi(level as i32);
    let k_max = (T_MAX / h).ceil() as i64;
    (-k_max..=k_max)
        .map(|k| {
            let t = k as f64 * h;
            let u = FRAC_PI_2 * t.sinh();
            let cu = u.cosh();
            Node {
                from_lo: 1.0 / (1.0 + (-2.0 * u).exp()),
                from_hi: 1.0 / (1.0 + (2.0 * u).exp()),
                weight: h * 0.5 * FRAC_PI_2 * t.cosh() / (cu * cu),
            }
        })
        .filter(|n| n.weight > 0.0 && n.from_lo > 0.0 && n.from_hi > 0.0)
        .collect()
}

/// Tanh-sinh integral of `f(x, x - a, b - x)` over `[a, b]`.
pub(crate) fn tanh_sinh(
    nodes: &[Node],
    a: f64,
    b: f64,
    mut f: impl FnMut(f64, f64, f64) -> f64,
) -> f64 {
    let len = b - a;
    let mut sum = 0.0;
    for n in nodes {
        let (da, db) = (len * n.from_lo, len * n.from_hi);
        let x = if da <= db { a + da } else { b - db };
        let v = f(x, da, db);
        if v.is_finite() {
            sum += n.weight * v;
        }
    }
    sum * len
}

/// Tanh-sinh on `[a, b]` at increasing levels until two successive values
/// agree to `tol`. Returns the value and the last difference.
pub fn tanh_sinh_adaptive(
    a: f64,
    b: f64,
    tol: f64,
    f: impl Fn(f64, f64, f64) -> f64,
) -> (f64, f64) {
    let mut prev = tanh_sinh(&tanh_sinh_nodes(2), a, b, &f);
    let mut diff = f64::INFINITY;
    for level in 3..=10 {
        let next = tanh_sinh(&tanh_sinh_nodes(level), a, b, &f);
        diff = (next - prev).abs();
        prev = next;
        if diff <= tol * next.abs().max(1.0) {
            break;
        }
    }
    (prev, diff)
}

// Kronrod 15-point abscissae and weights with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod(a: f64, b: f64, f: &impl Fn(f64) -> f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let pair = f(c - h * XGK[j]) + f(c + h * XGK[j]);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Globally adaptive Gauss-Kronrod (7, 15): the interval with the largest
/// error estimate is bisected until the total estimate drops below `tol`.
pub fn gauss_kronrod_adaptive(a: f64, b: f64, tol: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut cells = vec![{
        let (v, e) = gauss_kronrod(a, b, &f);
        (a, b, v, e)
    }];
    for _ in 0..20_000 {
        let total_err: f64 = cells.iter().map(|c| c.3).sum();
        if total_err <= tol {
            break;
        }
        let worst = cells
            .iter()
            .enumerate()
            .max_by(|p, q| p.1 .3.total_cmp(&q.1 .3))
            .map(|(i, _)| i)
            .expect("at least one cell");
        let (lo, hi, _, _) = cells.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        for (p, q) in [(lo, mid), (mid, hi)] {
            let (v, e) = gauss_kronrod(p, q, &f);
            cells.push((p, q, v, e));
        }
    }
    cells.sort_by(|p, q| p.0.total_cmp(&q.0));
    (
        cells.iter().map(|c| c.2).sum(),
        cells.iter().map(|c| c.3).sum(),
    )
}

/// Facet `normal . alpha <= bound` of `A`.
#[derive(Debug, Clone)]
struct Facet {
    normal: Vec<f64>,
    bound: f64,
}

/// Integrates `f(s)` over `A`, where `s_e = 1 - L_e(alpha)^2`.
pub(crate) struct PolytopeIntegrator<'a> {
    ctx: &'a ModelContext,
    facets: Vec<Facet>,
    evals: AtomicU64,
}

impl<'a> PolytopeIntegrator<'a> {
    pub fn new(ctx: &'a ModelContext) -> Self {
        let facets = ctx
            .polytope()
            .facets()
            .filter(|h| h.normal.iter().any(|&x| x != 0.0))
            .map(|h| Facet {
                normal: h.normal.clone(),
                bound: h.bound,
            })
            .collect();
        PolytopeIntegrator {
            ctx,
            facets,
            evals: AtomicU64::new(0),
        }
    }

    pub fn evaluations(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }

    /// Nested tanh-sinh at a fixed level, with the outermost coordinate's
    /// nodes processed in parallel and summed in order.
    pub fn integrate<F>(&self, level: u32, f: &F) -> f64
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let nodes = tanh_sinh_nodes(level);
        if self.ctx.dim() == 1 {
            return self.innermost(&nodes, &[], f);
        }
        let breaks = self.breakpoints(&[]);
        let mut jobs = Vec::new();
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            for n in &nodes {
                jobs.push((anchored(a, b, n), n.weight * (b - a)));
            }
        }
        let parts: Vec<f64> = jobs
            .par_iter()
            .map(|&(x, w)| {
                let v = self.level(&nodes, &mut vec![x], f);
                if v.is_finite() {
                    w * v
                } else {
                    0.0
                }
            })
            .collect();
        parts.iter().sum()
    }

    fn level<F: Fn(&[f64]) -> f64>(&self, nodes: &[Node], fixed: &mut Vec<Coord>, f: &F) -> f64 {
        if fixed.len() + 1 == self.ctx.dim() {
            return self.innermost(nodes, fixed, f);
        }
        let breaks = self.breakpoints(fixed);
        let mut total = 0.0;
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mut sum = 0.0;
            for n in nodes {
                fixed.push(anchored(a, b, n));
                let v = self.level(nodes, fixed, f);
                fixed.pop();
                if v.is_finite() {
                    sum += n.weight * v;
                }
            }
            total += sum * (b - a);
        }
        total
    }

    /// Restriction of the facets to the free coordinates after `fixed`.
    fn reduced(&self, fixed: &[Coord]) -> Option<Vec<(Vec<f64>, f64)>> {
        let j0 = fixed.len();
        let mut out = Vec::new();
        for h in &self.facets {
            let rhs = h.bound
                - h.normal[..j0]
                    .iter()
                    .zip(fixed)
                    .map(|(a, b)| a * b.value())
                    .sum::<f64>();
            let n = h.normal[j0..].to_vec();
            if n.iter().all(|x| x.abs() < 1e-14) {
                if rhs < -1e-12 {
                    return None;
                }
                continue;
            }
            out.push((n, rhs));
        }
        Some(out)
    }

    /// Sorted first coordinates of the vertices of the slice at `fixed`.
    fn breakpoints(&self, fixed: &[Coord]) -> Vec<f64> {
        let Some(cons) = self.reduced(fixed) else {
            return Vec::new();
        };
        let k = self.ctx.dim() - fixed.len();
        let mut xs = Vec::new();
        for subset in Combinations::new(cons.len(), k) {
            let m = DMatrix::from_fn(k, k, |r, col| cons[subset[r]].0[col]);
            let rhs = DVector::from_fn(k, |r, _| cons[subset[r]].1);
            let Some(y) = m.lu().solve(&rhs) else {
                continue;
            };
            if !y.iter().all(|v| v.is_finite()) {
                continue;
            }
            let feasible = cons.iter().all(|(n, b)| {
                let lhs: f64 = n.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
                lhs <= b + 1e-9 * (1.0 + b.abs())
            });
            if feasible {
                xs.push(y[0]);
            }
        }
        xs.sort_by(f64::total_cmp);
        let scale = xs.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        xs.dedup_by(|b, a| (*b - *a).abs() <= 1e-12 * scale);
        xs
    }

    /// Last coordinate: an interval. The gaps `hi_e - L_e` and `L_e - lo_e`
    /// are the gaps at the anchor point, snapped to zero on a face, plus the
    /// exact offset terms.
    fn innermost<F: Fn(&[f64]) -> f64>(&self, nodes: &[Node], fixed: &[Coord], f: &F) -> f64 {
        let Some(cons) = self.reduced(fixed) else {
            return 0.0;
        };
        let (mut a, mut b) = (f64::NEG_INFINITY, f64::INFINITY);
        for (n, rhs) in &cons {
            let bound = rhs / n[0];
            if n[0] > 0.0 {
                b = b.min(bound);
            } else {
                a = a.max(bound);
            }
        }
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return 0.0;
        }
        let j = fixed.len();
        let snap = |g: f64| if g.abs() <= SNAP { 0.0 } else { g };
        // per edge: gaps at the anchors (a or b), offset sum of the outer coordinates, slope
        let lines: Vec<([f64; 4], f64, f64, f64, f64)> = self
            .ctx
            .coeff()
            .iter()
            .zip(self.ctx.offset())
            .zip(self.ctx.ranges())
            .map(|((row, off), &(lo, hi))| {
                let anchor = off
                    + row[..j]
                        .iter()
                        .zip(fixed)
                        .map(|(u, v)| u * v.anchor)
                        .sum::<f64>();
                let delta = row[..j]
                    .iter()
                    .zip(fixed)
                    .map(|(u, v)| u * v.delta)
                    .sum::<f64>();
                let q = row[j];
                let gaps = [
                    snap(hi - anchor - q * a),
                    snap(anchor + q * a - lo),
                    snap(hi - anchor - q * b),
                    snap(anchor + q * b - lo),
                ];
                (gaps, delta, q, 1.0 - hi, 1.0 + lo)
            })
            .collect();
        let mut s = vec![0.0; lines.len()];
        let value = tanh_sinh(nodes, a, b, |_, da, db| {
            for (se, (gaps, delta, q, top, bottom)) in s.iter_mut().zip(&lines) {
                let (up, down) = if da <= db {
                    (gaps[0] - delta - q * da, gaps[1] + delta + q * da)
                } else {
                    (gaps[2] - delta + q * db, gaps[3] + delta - q * db)
                };
                *se = (up + top) * (down + bottom);
            }
            if s.iter().any(|&v| v <= 0.0) {
                return 0.0;
            }
            f(&s)
        });
        self.evals.fetch_add(nodes.len() as u64, Ordering::Relaxed);
        value
    }
}

/// Gaps to a face below this are taken to be exactly zero at an anchor.
const SNAP: f64 = 1e-12;

/// A coordinate as the nearer end of its piece plus the exact offset.
#[derive(Debug, Clone, Copy)]
struct Coord {
    anchor: f64,
    delta: f64,
}

impl Coord {
    fn value(&self) -> f64 {
        self.anchor + self.delta
    }
}

fn anchored(a: f64, b: f64, n: &Node) -> Coord {
    let (da, db) = ((b - a) * n.from_lo, (b - a) * n.from_hi);
    if da <= db {
        Coord {
            anchor: a,
            delta: da,
        }
    } else {
        Coord {
            anchor: b,
            delta: -db,
        }
    }
}

/// `k`-subsets of `0..n` in lexicographic order.
struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            current: (k <= n).then(|| (0..k).collect()),
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let k = out.len();
        let mut next = out.clone();
        let mut i = k;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}
