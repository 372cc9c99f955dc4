//! Root finding for `W(alpha) = k` on the polytope `A`.
//!
//! When every edge factor `eps_e / gamma_e` has the same sign, `W` is the
//! gradient of a strictly convex (or concave) potential on `A`, so the
//! problem becomes a smooth convex program. Its minimiser either solves the
//! equation or certifies through its KKT multipliers that `k` is not in
//! `W(A)`.
//!
//! With exactly one edge of the opposite sign, tilting the convex part by
//! `beta v_f` reduces the search to a scalar fixed point `beta = q(beta)`
//! with `q` monotone, which a one-dimensional branch and bound settles.
//! Anything else gets a multi-start damped Newton iteration backed by an
//! interval branch-and-bound exclusion over `A`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::winding::lp::{self, LpOutcome};
use crate::winding::{polytope_a, Halfspace, ModelContext, PolytopeH};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Required `||W(alpha) - k||_inf` for a solution.
    pub tol: f64,
    /// A KKT point further than this from `k` excludes `k`.
    pub exclusion_gap: f64,
    /// Constraint slack (relative) below which a solution is on the boundary.
    pub boundary_tol: f64,
    pub max_iter: usize,
    pub starts: usize,
    /// Box budget for the interval exclusion.
    pub cell_budget: usize,
    /// Interval exclusion is attempted up to this dimension.
    pub interval_max_dim: usize,
    /// `L_e` within this distance of a range end is also evaluated on it.
    pub pin: f64,
    /// Accepted `||W(alpha) - k||_inf` at points where some `L_e` is within
    /// `pin` of a range end.
    pub singular_tol: f64,
    /// Convex solves allowed in the single-minority scan.
    pub scan_budget: usize,
    /// Frank-Wolfe gap below which a minimiser counts as a KKT point.
    pub kkt_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-10,
            exclusion_gap: 1e-7,
            boundary_tol: 1e-9,
            max_iter: 300,
            starts: 24,
            cell_budget: 200_000,
            interval_max_dim: 4,
            pin: 1e-12,
            singular_tol: 1e-8,
            scan_budget: 5_000,
            kkt_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    ConvexActiveSet,
    DampedNewton,
    FaceNewton,
    MinorityScan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindingSolution {
    pub alpha: Vec<f64>,
    pub boundary: bool,
    /// `||W(alpha) - k||_inf`
    pub residual: f64,
    pub method: SolveMethod,
    /// The residual holds with near-boundary `L_e` pinned to the boundary.
    #[serde(default)]
    pub pinned: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Exclusion {
    /// Every root of the convex potential's gradient lies within `radius`
    /// of a point `gap` away from `k`, further than `W` can move.
    Kkt {
        gap: f64,
        radius: f64,
    },
    /// Every box of a cover of `A` had an interval enclosure of `W` missing `k`.
    Interval {
        cells: usize,
    },
    /// The scalar fixed-point problem of the single-minority reduction has no
    /// root yielding `k`.
    Scan {
        evaluations: usize,
    },
    EmptyPolytope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Solve {
    Found(WindingSolution),
    Excluded(Exclusion),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverFailure {
    pub k: Vec<i64>,
    pub diagnostic: String,
}

/// Solution of `W(alpha) = k` in `A`, `None` when `k` is certified absent.
pub fn solve_winding(
    ctx: &ModelContext,
    k: &[i64],
) -> Result<Option<WindingSolution>, SolverFailure> {
    match solve_with(ctx, k, &SolveOptions::default())? {
        Solve::Found(s) => Ok(Some(s)),
        Solve::Excluded(_) => Ok(None),
    }
}

pub fn solve_with(
    ctx: &ModelContext,
    k: &[i64],
    opts: &SolveOptions,
) -> Result<Solve, SolverFailure> {
    let poly = polytope_a(ctx);
    let Some((center, _)) = poly.center.clone() else {
        return Ok(Solve::Excluded(Exclusion::EmptyPolytope));
    };
    let target: Vec<f64> = k.iter().map(|&x| x as f64).collect();
    let fail = |diagnostic: String| SolverFailure {
        k: k.to_vec(),
        diagnostic,
    };
    if ctx.dim() == 0 {
        return Ok(Solve::Found(WindingSolution {
            alpha: Vec::new(),
            boundary: false,
            residual: 0.0,
            method: SolveMethod::DampedNewton,
            pinned: false,
        }));
    }
    let problem = Problem {
        ctx,
        poly,
        target: &target,
        opts,
        tilt: None,
    };
    if let Some(sign) = convexity_sign(ctx) {
        problem.convex(sign)
    } else if let Some((f, sign)) = minority_edge(ctx) {
        problem.minority_scan(f, sign)
    } else {
        problem.general(center)
    }
    .map_err(fail)
}

fn edge_signs(ctx: &ModelContext) -> Vec<f64> {
    (0..ctx.edge_count())
        .map(|e| ctx.branch(e).epsilon() * ctx.graph().edge(e).weight.signum())
        .collect()
}

/// Common sign of the edge factors `eps_e / gamma_e`, if there is one.
pub fn convexity_sign(ctx: &ModelContext) -> Option<f64> {
    let signs = edge_signs(ctx);
    let first = signs[0];
    signs.iter().all(|&s| s == first).then_some(first)
}

/// The single edge whose factor sign differs from all others, with the
/// majority sign.
pub fn minority_edge(ctx: &ModelContext) -> Option<(usize, f64)> {
    let signs = edge_signs(ctx);
    if signs.len() < 3 {
        return None;
    }
    let plus: Vec<usize> = (0..signs.len()).filter(|&e| signs[e] > 0.0).collect();
    let minus: Vec<usize> = (0..signs.len()).filter(|&e| signs[e] < 0.0).collect();
    match (plus.len(), minus.len()) {
        (1, _) => Some((plus[0], -1.0)),
        (_, 1) => Some((minus[0], 1.0)),
        _ => None,
    }
}

#[derive(Clone, Copy)]
struct Problem<'a> {
    ctx: &'a ModelContext,
    poly: &'a PolytopeH,
    target: &'a [f64],
    opts: &'a SolveOptions,
    /// `(f, beta)`: edge `f` is dropped from `W` and `beta v_f` added.
    tilt: Option<(usize, f64)>,
}

/// Outcome of the convex minimisation: a point where either the gradient
/// vanishes or the KKT conditions hold with nonnegative multipliers.
struct KktPoint {
    alpha: Vec<f64>,
    gap: f64,
    pinned: bool,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: &[f64], t: f64, d: &[f64]) -> Vec<f64> {
    alpha.iter().zip(d).map(|(a, b)| a + t * b).collect()
}

/// Orthonormal basis of the complement of `span(normals)`.
fn null_space(normals: &[&[f64]], dim: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let orthonormalize = |v: &[f64], basis: &mut Vec<Vec<f64>>| -> bool {
        let mut w = v.to_vec();
        for _ in 0..2 {
            for b in basis.iter() {
                let p = dot(&w, b);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
        }
        let n = dot(&w, &w).sqrt();
        if n > 1e-10 * (1.0 + dot(v, v).sqrt()) {
            basis.push(w.iter().map(|x| x / n).collect());
            true
        } else {
            false
        }
    };
    for n in normals {
        orthonormalize(n, &mut basis);
    }
    let rank = basis.len();
    for i in 0..dim {
        let mut unit = vec![0.0; dim];
        unit[i] = 1.0;
        orthonormalize(&unit, &mut basis);
    }
    basis.split_off(rank)
}

impl<'a> Problem<'a> {
    fn residual(&self, alpha: &[f64]) -> Vec<f64> {
        self.residual_with(alpha, None)
    }

    fn residual_with(&self, alpha: &[f64], pin: Option<f64>) -> Vec<f64> {
        let l = match pin {
            Some(p) => self.ctx.l_values_pinned(alpha, p),
            None => self.ctx.l_values(alpha),
        };
        let mut x: Vec<f64> = l
            .iter()
            .enumerate()
            .map(|(e, &y)| self.ctx.branch(e).inverse_clamped(y))
            .collect();
        if let Some((f, beta)) = self.tilt {
            x[f] = std::f64::consts::TAU * beta;
        }
        self.ctx
            .pair_with_basis(&x)
            .iter()
            .zip(self.target)
            .map(|(w, k)| w - k)
            .collect()
    }

    /// `||residual||_inf`, falling back to the pinned evaluation.
    fn gap(&self, alpha: &[f64]) -> (f64, bool) {
        let plain = inf_norm(&self.residual(alpha));
        if plain <= self.opts.tol {
            return (plain, false);
        }
        let pinned = inf_norm(&self.residual_with(alpha, Some(self.opts.pin)));
        if pinned < plain {
            (pinned, true)
        } else {
            (plain, false)
        }
    }

    fn hessian(&self, alpha: &[f64]) -> DMatrix<f64> {
        let mut d = self.ctx.edge_factors(&self.ctx.l_values(alpha), 1e-16);
        if let Some((f, _)) = self.tilt {
            d[f] = 0.0;
        }
        self.ctx.jacobian_from_factors(&d)
    }

    fn on_boundary(&self, alpha: &[f64]) -> bool {
        self.poly
            .constraints
            .iter()
            .any(|h| h.slack(alpha) <= self.opts.boundary_tol * (1.0 + h.bound.abs()))
    }

    /// Lipschitz constant of `beta -> a(beta)` for the tilt on edge `f`: the
    /// tilted potential is strongly convex with modulus at least the least
    /// eigenvalue of `(1 / 2 pi) sum_{e != f} v_e v_e^T / |gamma_e|`.
    fn argmin_lipschitz(&self, f: usize) -> f64 {
        let mu = self.strong_convexity(Some(f));
        let vf: f64 = self
            .ctx
            .basis()
            .rows()
            .iter()
            .map(|r| (r[f] * r[f]) as f64)
            .sum::<f64>()
            .sqrt();
        if mu > 0.0 {
            vf / mu
        } else {
            f64::INFINITY
        }
    }

    /// Bound on `||W(b) - W(alpha)||_inf` over `||b - alpha||_2 <= radius`:
    /// each `L_e` moves by at most `||coeff_e|| radius` and the branch
    /// inverse is monotone, so its change peaks at an end of that range.
    fn reach(&self, alpha: &[f64], radius: f64) -> f64 {
        let l = self.ctx.l_values(alpha);
        let moves: Vec<f64> = (0..self.ctx.edge_count())
            .map(|e| {
                let (lo, hi) = self.ctx.ranges()[e];
                let b = self.ctx.branch(e);
                let y = l[e].clamp(lo, hi);
                let t = dot(&self.ctx.coeff()[e], &self.ctx.coeff()[e]).sqrt() * radius;
                let x = b.inverse_clamped(y);
                (b.inverse_clamped((y + t).min(hi)) - x)
                    .abs()
                    .max((x - b.inverse_clamped((y - t).max(lo))).abs())
            })
            .collect();
        self.ctx
            .basis()
            .rows()
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&moves)
                    .map(|(&v, m)| v.abs() as f64 * m)
                    .sum::<f64>()
                    / std::f64::consts::TAU
            })
            .fold(0.0, f64::max)
    }

    fn solution(
        &self,
        alpha: Vec<f64>,
        residual: f64,
        pinned: bool,
        method: SolveMethod,
    ) -> WindingSolution {
        let boundary = pinned || self.on_boundary(&alpha);
        WindingSolution {
            alpha,
            boundary,
            residual,
            method,
            pinned,
        }
    }

    fn convex(&self, sign: f64) -> Result<Solve, String> {
        let p = self.minimize(sign)?;
        if self.accepts(&p.alpha, p.gap) {
            return Ok(Solve::Found(self.solution(
                p.alpha,
                p.gap,
                p.pinned,
                SolveMethod::ConvexActiveSet,
            )));
        }
        let (m, radius) = self.root_radius(&p.alpha, sign, None);
        let certified =
            m <= self.opts.kkt_tol || p.gap > self.reach(&p.alpha, radius) + self.opts.tol;
        if p.gap >= self.opts.exclusion_gap && certified {
            return Ok(Solve::Excluded(Exclusion::Kkt { gap: p.gap, radius }));
        }
        Err(format!(
            "minimiser at gap {:.3e} not certified (Frank-Wolfe gap {m:.3e})",
            p.gap
        ))
    }

    /// Frank-Wolfe gap `m = max_{b in A} g . (alpha - b)` and the radius of
    /// a ball around `alpha` holding every exact root. By strong
    /// monotonicity of the gradient (modulus `mu`) a root `b` satisfies
    /// `mu ||alpha - b||^2 <= g . (alpha - b) <= m`.
    fn root_radius(&self, alpha: &[f64], sign: f64, skip: Option<usize>) -> (f64, f64) {
        let g: Vec<f64> = self.residual(alpha).iter().map(|x| sign * x).collect();
        let rows: Vec<Vec<f64>> = self
            .poly
            .constraints
            .iter()
            .map(|h| h.normal.clone())
            .collect();
        let rhs: Vec<f64> = self.poly.constraints.iter().map(|h| h.bound).collect();
        let objective: Vec<f64> = g.iter().map(|x| -x).collect();
        let m = match lp::maximize(&objective, &rows, &rhs) {
            LpOutcome::Optimal { value, .. } => (dot(&g, alpha) + value).max(0.0),
            _ => return (f64::INFINITY, f64::INFINITY),
        };
        let mu = self.strong_convexity(skip);
        (
            m,
            if mu > 0.0 {
                (m / mu).sqrt()
            } else {
                f64::INFINITY
            },
        )
    }

    /// Least eigenvalue of `(1 / 2 pi) sum_{e != skip} v_e v_e^T / |gamma_e|`,
    /// a lower bound for the Hessian of `sign Phi` on `A`.
    fn strong_convexity(&self, skip: Option<usize>) -> f64 {
        let c = self.ctx.dim();
        let rows = self.ctx.basis().rows();
        let g = self.ctx.graph();
        let mut m = DMatrix::<f64>::zeros(c, c);
        for e in (0..self.ctx.edge_count()).filter(|&e| Some(e) != skip) {
            let w = 1.0 / (std::f64::consts::TAU * g.edge(e).weight.abs());
            for i in 0..c {
                for j in 0..c {
                    m[(i, j)] += w * (rows[i][e] * rows[j][e]) as f64;
                }
            }
        }
        m.symmetric_eigenvalues().min()
    }

    /// Some `L_e` sits within `pin` of a range end, where `W` has a square
    /// root singularity and double precision resolves it only to about
    /// `sqrt(eps)`.
    fn near_singular(&self, alpha: &[f64]) -> bool {
        self.ctx
            .l_values(alpha)
            .iter()
            .zip(self.ctx.ranges())
            .any(|(&y, &(lo, hi))| y <= lo + self.opts.pin || y >= hi - self.opts.pin)
    }

    fn accepts(&self, alpha: &[f64], gap: f64) -> bool {
        gap <= self.opts.tol || (gap <= self.opts.singular_tol && self.near_singular(alpha))
    }

    /// Log-barrier Newton on `psi = sign (Phi - k . alpha)` (tilted when
    /// `self.tilt` is set), whose gradient is `sign (W - k)` and Hessian
    /// `sign W'`. Along the central path the Frank-Wolfe gap is at most
    /// `facets / t`; a root met on the way is finished by plain Newton.
    fn minimize(&self, sign: f64) -> Result<KktPoint, String> {
        let Some((center, radius)) = self.poly.center.clone() else {
            return Err("empty polytope".into());
        };
        if radius <= 1e-12 {
            return Ok(self.active_set(center, sign));
        }
        let cons: Vec<&Halfspace> = self
            .poly
            .facets()
            .filter(|h| h.normal.iter().any(|&x| x != 0.0))
            .collect();
        let n = cons.len() as f64;
        let c = self.ctx.dim();
        let mut alpha = center;
        let mut t = 1.0;
        loop {
            for _ in 0..40 {
                let g: Vec<f64> = self.residual(&alpha).iter().map(|x| sign * x).collect();
                let slack: Vec<f64> = cons.iter().map(|h| h.slack(&alpha)).collect();
                let mut grad = DVector::from_iterator(c, g.iter().map(|x| t * x));
                let mut hess = self.hessian(&alpha) * (sign * t);
                for (h, s) in cons.iter().zip(&slack) {
                    let a = DVector::from_column_slice(&h.normal);
                    grad += &a / *s;
                    hess += &a * a.transpose() / (s * s);
                }
                let Some(ch) = hess.cholesky() else { break };
                let d: Vec<f64> = ch.solve(&(-&grad)).iter().copied().collect();
                let slope = dot(grad.as_slice(), &d);
                if !(slope < 0.0) || -slope < 1e-12 {
                    break;
                }
                let (t_max, _) = self.poly.max_step(&alpha, &d);
                let deriv = |step: f64| {
                    let p = axpy(&alpha, step, &d);
                    let r = self.residual(&p);
                    sign * t * dot(&r, &d)
                        + cons
                            .iter()
                            .map(|h| dot(&h.normal, &d) / h.slack(&p))
                            .sum::<f64>()
                };
                let step = line_search(deriv, slope, (0.95 * t_max).min(1.0));
                let next = axpy(&alpha, step, &d);
                if next == alpha {
                    break;
                }
                alpha = next;
            }
            let (gap, pinned) = self.gap(&alpha);
            if self.accepts(&alpha, gap) {
                return Ok(KktPoint { alpha, gap, pinned });
            }
            if let Some(p) = self.polish(&alpha) {
                return Ok(p);
            }
            if n / t <= 1e-13 {
                return Ok(KktPoint { alpha, gap, pinned });
            }
            t *= 10.0;
        }
    }

    /// Plain Newton on the (tilted) residual inside `A`.
    fn polish(&self, start: &[f64]) -> Option<KktPoint> {
        let c = self.ctx.dim();
        let mut alpha = start.to_vec();
        let mut r = self.residual(&alpha);
        for _ in 0..30 {
            let (gap, pinned) = self.gap(&alpha);
            if self.accepts(&alpha, gap) {
                return Some(KktPoint { alpha, gap, pinned });
            }
            let rhs = DVector::from_iterator(c, r.iter().map(|x| -x));
            let d: Vec<f64> = self
                .hessian(&alpha)
                .lu()
                .solve(&rhs)?
                .iter()
                .copied()
                .collect();
            if d.iter().any(|x| !x.is_finite()) {
                return None;
            }
            let (t_max, _) = self.poly.max_step(&alpha, &d);
            let step = t_max.min(1.0);
            let trial = axpy(&alpha, step, &d);
            let rt = self.residual(&trial);
            if inf_norm(&rt) >= inf_norm(&r) {
                return None;
            }
            alpha = trial;
            r = rt;
        }
        None
    }

    /// Active-set Newton for polytopes without interior; stops at a zero of
    /// the gradient, at a KKT point of the working set, or when no
    /// representable progress is left.
    fn active_set(&self, start: Vec<f64>, sign: f64) -> KktPoint {
        let c = self.ctx.dim();
        let mut alpha = start;
        let mut work: Vec<usize> = Vec::new();
        let mut idle = 0usize;
        let done = |alpha: Vec<f64>| {
            let (gap, pinned) = self.gap(&alpha);
            KktPoint { alpha, gap, pinned }
        };
        for _ in 0..self.opts.max_iter {
            let r = self.residual(&alpha);
            let (gap, _) = self.gap(&alpha);
            if self.accepts(&alpha, gap) || idle > 2 * c + 4 {
                return done(alpha);
            }
            let g: Vec<f64> = r.iter().map(|x| sign * x).collect();
            let normals: Vec<&[f64]> = work
                .iter()
                .map(|&i| self.poly.constraints[i].normal.as_slice())
                .collect();
            let z = null_space(&normals, c);
            let zg: Vec<f64> = z.iter().map(|zi| dot(zi, &g)).collect();
            let stationary = z.is_empty() || inf_norm(&zg) <= 1e-15 * (1.0 + inf_norm(&g));
            if stationary {
                match self.multipliers(&work, &g) {
                    Some((pos, lambda)) if lambda < -1e-12 => {
                        work.remove(pos);
                        idle += 1;
                        continue;
                    }
                    _ => return done(alpha),
                }
            }
            // reduced Newton direction d = -Z (Z^T H Z)^-1 Z^T g
            let hess = self.hessian(&alpha) * sign;
            let zm = DMatrix::from_fn(c, z.len(), |i, j| z[j][i]);
            let reduced = zm.transpose() * &hess * &zm;
            let rhs = DVector::from_vec(zg);
            let step = match reduced.cholesky() {
                Some(ch) => ch.solve(&rhs),
                None => rhs,
            };
            let mut d: Vec<f64> = (&zm * step).iter().map(|x| -x).collect();
            if dot(&g, &d) >= 0.0 {
                d = (&zm * (zm.transpose() * DVector::from_column_slice(&g)))
                    .iter()
                    .map(|x| -x)
                    .collect();
            }
            let (t_max, blocker) = self.poly.max_step(&alpha, &d);
            if t_max <= 0.0 {
                match blocker.filter(|&b| self.independent(&work, b)) {
                    Some(b) => {
                        work.push(b);
                        idle += 1;
                        continue;
                    }
                    None => return done(alpha),
                }
            }
            let slope = dot(&g, &d);
            let deriv = |step: f64| sign * dot(&self.residual(&axpy(&alpha, step, &d)), &d);
            let t = line_search(deriv, slope, t_max.min(1.0));
            let next = axpy(&alpha, t, &d);
            if next == alpha {
                idle += 1;
            } else {
                idle = 0;
                alpha = next;
            }
            if t >= t_max {
                if let Some(b) = blocker.filter(|&b| self.independent(&work, b)) {
                    work.push(b);
                }
            }
        }
        done(alpha)
    }

    fn independent(&self, work: &[usize], b: usize) -> bool {
        let normals: Vec<&[f64]> = work
            .iter()
            .map(|&i| self.poly.constraints[i].normal.as_slice())
            .collect();
        null_space(&normals, self.ctx.dim())
            .iter()
            .any(|zi| dot(zi, &self.poly.constraints[b].normal).abs() > 1e-12)
    }

    /// Least-squares multipliers for `g + sum lambda_j a_j = 0`; returns the
    /// most negative one and its working-set position.
    fn multipliers(&self, work: &[usize], g: &[f64]) -> Option<(usize, f64)> {
        if work.is_empty() {
            return None;
        }
        let c = g.len();
        let a = DMatrix::from_fn(c, work.len(), |i, j| {
            self.poly.constraints[work[j]].normal[i]
        });
        let rhs = DVector::from_iterator(c, g.iter().map(|x| -x));
        let lambda = a.svd(true, true).solve(&rhs, 1e-12).ok()?;
        lambda
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(y.1))
            .map(|(pos, &l)| (pos, l))
    }

    /// Branch and bound over `beta` for the single-minority reduction. For
    /// fixed `beta` the tilted potential is strictly convex; its minimiser
    /// `a(beta)` solves `W(a) = k` exactly when the multipliers vanish and
    /// `beta = q(beta) = x_f(L_f(a)) / 2 pi`. `q` is monotone in `beta`, so
    /// its endpoint values bound `q(beta) - beta` on every interval.
    fn minority_scan(&self, f: usize, sign: f64) -> Result<Solve, String> {
        let tau = std::f64::consts::TAU;
        let branch = self.ctx.branch(f);
        let mut evaluations = 0usize;
        let mut solutions: Vec<WindingSolution> = Vec::new();
        let mut eval = |beta: f64| -> Result<ScanPoint, String> {
            evaluations += 1;
            if evaluations > self.opts.scan_budget {
                return Err(format!(
                    "minority scan exceeded {} convex solves",
                    self.opts.scan_budget
                ));
            }
            let tilted = Problem {
                tilt: Some((f, beta)),
                ..*self
            };
            let p = tilted.minimize(sign)?;
            let l = self.ctx.l_values_pinned(&p.alpha, self.opts.pin)[f];
            let (gap, pinned) = self.gap(&p.alpha);
            let accepted = self.accepts(&p.alpha, gap);
            Ok(ScanPoint {
                beta,
                q: branch.inverse_clamped(l) / tau,
                alpha: p.alpha,
                gap,
                pinned,
                accepted,
            })
        };
        let margin = 1e-9;
        let min_width = 1e-13;
        // cells this close to the beta of a found root belong to that root
        let root_radius = 1e-9;
        let lipschitz = self.argmin_lipschitz(f);
        let mut roots: Vec<f64> = Vec::new();
        let lo = eval(branch.lo() / tau)?;
        let hi = eval(branch.hi() / tau)?;
        let mut stack = vec![(lo, hi)];
        let mut deferred: Vec<(ScanPoint, ScanPoint)> = Vec::new();
        let same = |x: &[f64], y: &[f64]| inf_norm(&axpy(x, -1.0, y)) <= 1e-6;
        while let Some((a, b)) = stack.pop() {
            for p in [&a, &b] {
                if !p.accepted {
                    continue;
                }
                roots.push(p.beta);
                if solutions.iter().all(|s| !same(&s.alpha, &p.alpha)) {
                    solutions.push(self.solution(
                        p.alpha.clone(),
                        p.gap,
                        p.pinned,
                        SolveMethod::MinorityScan,
                    ));
                }
            }
            if solutions.len() > 1 {
                return Err(format!(
                    "W is not injective here: distinct preimages {:?} and {:?}",
                    solutions[0].alpha, solutions[1].alpha
                ));
            }
            let (qmin, qmax) = (a.q.min(b.q), a.q.max(b.q));
            if qmin - b.beta > margin || qmax - a.beta < -margin {
                continue;
            }
            if roots
                .iter()
                .any(|r| a.beta >= r - root_radius && b.beta <= r + root_radius)
            {
                continue;
            }
            // every a(beta) in the cell is within lipschitz * width / 2 of an endpoint
            let half = lipschitz * 0.5 * (b.beta - a.beta);
            let far = |p: &ScanPoint| p.gap > self.reach(&p.alpha, half) + self.opts.tol;
            if far(&a) && far(&b) {
                continue;
            }
            if b.beta - a.beta <= min_width {
                let settled = |p: &ScanPoint| p.accepted || p.gap >= self.opts.exclusion_gap;
                if !(settled(&a) && settled(&b)) {
                    deferred.push((a, b));
                }
                continue;
            }
            let mid = eval(0.5 * (a.beta + b.beta))?;
            stack.push((mid.clone(), b));
            stack.push((a, mid));
        }
        // a tiny unresolved cell is part of a root found next to it
        for (a, b) in &deferred {
            let near_root = solutions
                .iter()
                .any(|s| same(&s.alpha, &a.alpha) && same(&s.alpha, &b.alpha));
            if !near_root {
                return Err(format!(
                    "minority scan left beta in [{}, {}] unresolved at gap {:.3e}",
                    a.beta,
                    b.beta,
                    a.gap.min(b.gap)
                ));
            }
        }
        match solutions.pop() {
            Some(s) => Ok(Solve::Found(s)),
            None => Ok(Solve::Excluded(Exclusion::Scan { evaluations })),
        }
    }

    fn general(&self, center: Vec<f64>) -> Result<Solve, String> {
        let mut found: Vec<WindingSolution> = Vec::new();
        for start in self.starts(center) {
            if let Some(sol) = self.newton_from(start) {
                let duplicate = found
                    .iter()
                    .any(|f| inf_norm(&axpy(&f.alpha, -1.0, &sol.alpha)) <= 1e-7);
                if !duplicate {
                    found.push(sol);
                }
            }
        }
        match found.len() {
            1 => return Ok(Solve::Found(found.pop().expect("one solution"))),
            n if n > 1 => {
                return Err(format!(
                    "W is not injective here: {n} distinct preimages, e.g. {:?} and {:?}",
                    found[0].alpha, found[1].alpha
                ))
            }
            _ => {}
        }
        if self.ctx.dim() > self.opts.interval_max_dim {
            return Err("no preimage found and dimension too large for interval exclusion".into());
        }
        self.interval_exclusion()
    }

    /// Chebyshev centre followed by Halton points of the bounding box that lie
    /// in `A`.
    fn starts(&self, center: Vec<f64>) -> Vec<Vec<f64>> {
        let c = self.ctx.dim();
        let mut out = vec![center];
        let Some(bbox) = &self.poly.bbox else {
            return out;
        };
        let primes = [
            2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79,
            83, 89, 97,
        ];
        let mut index = 1u64;
        let wanted = self.opts.starts.max(1);
        while out.len() < wanted && index < 64 * wanted as u64 {
            let p: Vec<f64> = (0..c)
                .map(|j| {
                    let u = halton(index, primes[j % primes.len()]);
                    bbox[j].0 + u * (bbox[j].1 - bbox[j].0)
                })
                .collect();
            index += 1;
            if self.poly.contains(&p, -1e-9) {
                out.push(p);
            }
        }
        out
    }

    /// Damped Newton on `||W - k||`, allowed to land on the boundary; once it
    /// stalls on a face, Gauss-Newton continues inside that face.
    fn newton_from(&self, mut alpha: Vec<f64>) -> Option<WindingSolution> {
        let c = self.ctx.dim();
        let mut r = self.residual(&alpha);
        for _ in 0..self.opts.max_iter {
            let norm = inf_norm(&r);
            let (gap, pinned) = self.gap(&alpha);
            if self.accepts(&alpha, gap) {
                return Some(self.solution(alpha, gap, pinned, SolveMethod::DampedNewton));
            }
            let j = self.ctx.jacobian_clamped(&alpha);
            let rhs = DVector::from_iterator(c, r.iter().map(|x| -x));
            let d: Vec<f64> = match j.lu().solve(&rhs) {
                Some(s) if s.iter().all(|x| x.is_finite()) => s.iter().copied().collect(),
                _ => break,
            };
            let (t_max, _) = self.poly.max_step(&alpha, &d);
            let mut t = t_max.min(1.0);
            let mut accepted = false;
            while t > 1e-12 {
                let trial = axpy(&alpha, t, &d);
                let rt = self.residual(&trial);
                if inf_norm(&rt) < (1.0 - 1e-4 * t) * norm {
                    alpha = trial;
                    r = rt;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        self.face_newton(alpha)
    }

    /// Gauss-Newton restricted to the face of near-active constraints.
    fn face_newton(&self, mut alpha: Vec<f64>) -> Option<WindingSolution> {
        let c = self.ctx.dim();
        let active: Vec<&[f64]> = self
            .poly
            .constraints
            .iter()
            .filter(|h| h.slack(&alpha) <= 1e-9 * (1.0 + h.bound.abs()))
            .map(|h| h.normal.as_slice())
            .collect();
        if active.is_empty() {
            return None;
        }
        let z = null_space(&active, c);
        let mut r = self.residual(&alpha);
        for _ in 0..self.opts.max_iter {
            let norm = inf_norm(&r);
            let (gap, pinned) = self.gap(&alpha);
            if self.accepts(&alpha, gap) {
                return Some(self.solution(alpha, gap, pinned, SolveMethod::FaceNewton));
            }
            if z.is_empty() {
                return None;
            }
            let j = self.ctx.jacobian_clamped(&alpha);
            let zm = DMatrix::from_fn(c, z.len(), |i, jj| z[jj][i]);
            let jz = &j * &zm;
            let rv = DVector::from_vec(r.clone());
            let step = jz.clone().svd(true, true).solve(&(-rv), 1e-14).ok()?;
            let d: Vec<f64> = (&zm * step).iter().copied().collect();
            let (t_max, _) = self.poly.max_step(&alpha, &d);
            let mut t = t_max.min(1.0);
            let mut accepted = false;
            while t > 1e-12 {
                let trial = axpy(&alpha, t, &d);
                let rt = self.residual(&trial);
                if inf_norm(&rt) < (1.0 - 1e-4 * t) * norm {
                    alpha = trial;
                    r = rt;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                return None;
            }
        }
        None
    }

    /// Branch and bound over boxes covering `A`. A box is discarded when it
    /// misses `A` or when the interval enclosure of `W` on it misses `k`.
    fn interval_exclusion(&self) -> Result<Solve, String> {
        let Some(bbox) = self.poly.bbox.clone() else {
            return Ok(Solve::Excluded(Exclusion::EmptyPolytope));
        };
        let scale = bbox
            .iter()
            .map(|(l, h)| h - l)
            .fold(0.0f64, f64::max)
            .max(1e-300);
        let min_width = 1e-7 * scale;
        let mut stack = vec![bbox];
        let mut cells = 0usize;
        let mut unresolved: Vec<Vec<(f64, f64)>> = Vec::new();
        while let Some(cell) = stack.pop() {
            cells += 1;
            if cells > self.opts.cell_budget {
                return Err(format!(
                    "interval exclusion exceeded {} cells",
                    self.opts.cell_budget
                ));
            }
            match self.enclose(&cell) {
                Enclosure::OutsideA | Enclosure::Misses => continue,
                Enclosure::Contains => {}
            }
            let (axis, width) = cell
                .iter()
                .enumerate()
                .map(|(i, (l, h))| (i, h - l))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .expect("nonempty box");
            if width <= min_width {
                unresolved.push(cell);
                continue;
            }
            let mid = 0.5 * (cell[axis].0 + cell[axis].1);
            let mut left = cell.clone();
            left[axis].1 = mid;
            let mut right = cell;
            right[axis].0 = mid;
            stack.push(right);
            stack.push(left);
        }
        if unresolved.is_empty() {
            return Ok(Solve::Excluded(Exclusion::Interval { cells }));
        }
        for cell in &unresolved {
            let mid: Vec<f64> = cell.iter().map(|(l, h)| 0.5 * (l + h)).collect();
            let snapped = self.snap_into(mid);
            if let Some(sol) = self.newton_from(snapped) {
                return Ok(Solve::Found(sol));
            }
        }
        Err(format!(
            "{} unresolved boxes near a possible preimage",
            unresolved.len()
        ))
    }

    /// Moves a point into `A` along the segment towards the Chebyshev centre.
    fn snap_into(&self, p: Vec<f64>) -> Vec<f64> {
        if self.poly.contains(&p, 0.0) {
            return p;
        }
        let center = self
            .poly
            .center
            .as_ref()
            .map(|(c, _)| c.clone())
            .unwrap_or_else(|| p.clone());
        let d = axpy(&p, -1.0, &center);
        let (t, _) = self.poly.max_step(&center, &d);
        axpy(&center, t.min(1.0), &d)
    }

    fn enclose(&self, cell: &[(f64, f64)]) -> Enclosure {
        let ctx = self.ctx;
        let m = ctx.edge_count();
        let mut x = Vec::with_capacity(m);
        for e in 0..m {
            let row = &ctx.coeff()[e];
            let (mut lo, mut hi) = (ctx.offset()[e], ctx.offset()[e]);
            for (a, &(l, h)) in row.iter().zip(cell) {
                let (p, q) = (a * l, a * h);
                lo += p.min(q);
                hi += p.max(q);
            }
            let (ymin, ymax) = ctx.ranges()[e];
            let (lo, hi) = (lo.max(ymin), hi.min(ymax));
            if lo > hi + 1e-15 {
                return Enclosure::OutsideA;
            }
            let b = ctx.branch(e);
            let (p, q) = (b.inverse_clamped(lo), b.inverse_clamped(hi.max(lo)));
            x.push((p.min(q), p.max(q)));
        }
        let tau = std::f64::consts::TAU;
        for (row, &k) in ctx.basis().rows().iter().zip(self.target) {
            let (mut lo, mut hi) = (0.0, 0.0);
            for (&v, &(a, b)) in row.iter().zip(&x) {
                if v != 0 {
                    let (p, q) = (v as f64 * a, v as f64 * b);
                    lo += p.min(q);
                    hi += p.max(q);
                }
            }
            let margin = 1e-9;
            if k < lo / tau - margin || k > hi / tau + margin {
                return Enclosure::Misses;
            }
        }
        Enclosure::Contains
    }
}

#[derive(Clone)]
struct ScanPoint {
    beta: f64,
    q: f64,
    alpha: Vec<f64>,
    /// Untilted `||W(alpha) - k||_inf`.
    gap: f64,
    pinned: bool,
    accepted: bool,
}

enum Enclosure {
    OutsideA,
    Misses,
    Contains,
}

/// Largest accepted step along a descent direction of a convex function
/// with directional derivative `deriv`: the derivative must stay below half
/// the size of the initial `slope`.
fn line_search(deriv: impl Fn(f64) -> f64, slope: f64, t0: f64) -> f64 {
    let accept = |v: f64| v <= 0.5 * slope.abs();
    if t0 <= 0.0 {
        return 0.0;
    }
    let end = deriv(t0);
    if end <= 0.0 || accept(end) {
        return t0;
    }
    let (mut lo, mut hi) = (0.0, t0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let v = deriv(mid);
        if v <= 0.0 {
            lo = mid;
            if -v <= 0.5 * slope.abs() {
                return mid;
            }
        } else if accept(v) {
            return mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;
    use crate::winding::BranchAssignment;
    use std::f64::consts::PI;

    #[test]
    fn zero_winding_is_origin() {
        for g in [
            families::cycle(5),
            families::complete(4),
            families::expanded_diamond(),
        ] {
            let ctx = ModelContext::principal(g).unwrap();
            let k = vec![0; ctx.dim()];
            let sol = solve_winding(&ctx, &k).unwrap().unwrap();
            assert!(inf_norm(&sol.alpha) < 1e-9, "{:?}", sol.alpha);
        }
    }

    #[test]
    fn ring_twist() {
        let ctx = ModelContext::principal(families::cycle(5)).unwrap();
        let sol = solve_winding(&ctx, &[1]).unwrap().unwrap();
        assert!((sol.alpha[0] - (2.0 * PI / 5.0).sin()).abs() < 1e-10);
        assert!(!sol.boundary);
        assert_eq!(solve_winding(&ctx, &[2]).unwrap(), None);
    }

    #[test]
    fn boundary_twist_on_c4() {
        let ctx = ModelContext::principal(families::cycle(4)).unwrap();
        let sol = solve_winding(&ctx, &[-1]).unwrap().unwrap();
        assert!((sol.alpha[0] + 1.0).abs() < 1e-12);
        assert!(sol.boundary);
    }

    #[test]
    fn diamond_lattice_point() {
        let g = families::expanded_diamond();
        let basis = families::expanded_diamond_basis(&g);
        let ctx = ModelContext::builder(g).basis(basis).build().unwrap();
        let sol = solve_winding(&ctx, &families::DIAMOND_WINDING)
            .unwrap()
            .unwrap();
        for (a, b) in sol.alpha.iter().zip(families::DIAMOND_ALPHA) {
            assert!((a - b).abs() < 1e-5, "{:?}", sol.alpha);
        }
    }

    #[test]
    fn mixed_ring_uses_general_solver() {
        // one reflected edge on C5: W = (3 asin a + pi) / 2 pi
        let ctx = ModelContext::with_branches(
            families::cycle(5),
            BranchAssignment::from_letters("PPPPR").unwrap(),
        )
        .unwrap();
        assert_eq!(convexity_sign(&ctx), None);
        let sol = solve_winding(&ctx, &[1]).unwrap().unwrap();
        assert!((sol.alpha[0] - (PI / 3.0).sin()).abs() < 1e-10);
        assert_eq!(solve_winding(&ctx, &[3]).unwrap(), None);
        // W(-1) = -1/4 and W(1) = 5/4 exclude nothing else; k = 0 gives asin a = -pi/3
        let sol = solve_winding(&ctx, &[0]).unwrap().unwrap();
        assert!((sol.alpha[0] + (PI / 3.0).sin()).abs() < 1e-10);
    }
}
