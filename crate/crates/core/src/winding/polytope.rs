use num_rational::BigRational;
use serde::Serialize;

use super::lp::{maximize, to_rational, LpOutcome, LpScalar};
use super::{ModelContext, WindingError};

/// Facet test margin below which the exact rational LP decides.
const EXACT_MARGIN: f64 = 1e-7;

/// `normal . alpha <= bound`, coming from the upper or lower end of
/// `sin(I_e)` for one edge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub bound: f64,
    pub edge: usize,
    pub upper: bool,
}

impl Halfspace {
    pub fn slack(&self, alpha: &[f64]) -> f64 {
        self.bound - dot(&self.normal, alpha)
    }

    fn is_trivial(&self) -> bool {
        self.normal.iter().all(|&x| x == 0.0)
    }
}

/// H-representation of `A`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolytopeH {
    pub dim: usize,
    pub constraints: Vec<Halfspace>,
    /// Facet-defining constraints; duplicates keep only their first copy.
    pub nonredundant: Vec<bool>,
    /// Every edge has `sin(I_e) = [-1, 1]`.
    pub full_ranges: bool,
    /// Chebyshev centre and radius; `None` when `A` is empty.
    pub center: Option<(Vec<f64>, f64)>,
    /// Coordinate bounds of `A`.
    pub bbox: Option<Vec<(f64, f64)>>,
}

impl PolytopeH {
    pub fn is_empty(&self) -> bool {
        self.center.is_none()
    }

    pub fn contains(&self, alpha: &[f64], tol: f64) -> bool {
        self.constraints
            .iter()
            .all(|h| h.slack(alpha) >= -tol * (1.0 + h.bound.abs()))
    }

    pub fn facet_indices(&self) -> Vec<usize> {
        (0..self.constraints.len())
            .filter(|&i| self.nonredundant[i])
            .collect()
    }

    pub fn facets(&self) -> impl Iterator<Item = &Halfspace> {
        self.constraints
            .iter()
            .zip(&self.nonredundant)
            .filter(|(_, &f)| f)
            .map(|(h, _)| h)
    }

    /// Largest `t >= 0` with `alpha + t d` in `A`, and the blocking constraint.
    pub fn max_step(&self, alpha: &[f64], d: &[f64]) -> (f64, Option<usize>) {
        let mut best = (f64::INFINITY, None);
        for (i, h) in self.constraints.iter().enumerate() {
            let rate = dot(&h.normal, d);
            if rate > 1e-300 {
                let t = (h.slack(alpha).max(0.0)) / rate;
                if t < best.0 {
                    best = (t, Some(i));
                }
            }
        }
        best
    }
}

pub fn polytope_a(ctx: &ModelContext) -> &PolytopeH {
    ctx.polytope()
}

/// Number of facets of `A`, valid under the full-range hypothesis.
pub fn count_faces(p: &PolytopeH) -> Result<usize, WindingError> {
    if !p.full_ranges {
        return Err(WindingError::PartialBranches);
    }
    if p.is_empty() {
        return Err(WindingError::EmptyPolytope);
    }
    Ok(p.nonredundant.iter().filter(|&&f| f).count())
}

pub(super) fn build(ctx: &ModelContext) -> PolytopeH {
    let dim = ctx.dim();
    let mut constraints = Vec::with_capacity(2 * ctx.edge_count());
    for (e, (row, (&off, &(lo, hi)))) in ctx
        .coeff()
        .iter()
        .zip(ctx.offset().iter().zip(ctx.ranges()))
        .enumerate()
    {
        constraints.push(Halfspace {
            normal: row.clone(),
            bound: hi - off,
            edge: e,
            upper: true,
        });
        constraints.push(Halfspace {
            normal: row.iter().map(|x| -x).collect(),
            bound: off - lo,
            edge: e,
            upper: false,
        });
    }
    let full_ranges = ctx.ranges().iter().all(|&r| r == (-1.0, 1.0));

    let infeasible_trivial = constraints.iter().any(|h| h.is_trivial() && h.bound < 0.0);
    let reps = representatives(&constraints);
    let rep_rows: Vec<Vec<f64>> = reps
        .iter()
        .map(|&i| constraints[i].normal.clone())
        .collect();
    let rep_rhs: Vec<f64> = reps.iter().map(|&i| constraints[i].bound).collect();

    let center = if infeasible_trivial {
        None
    } else {
        chebyshev(&rep_rows, &rep_rhs)
    };
    let mut nonredundant = vec![false; constraints.len()];
    let mut bbox = None;
    if center.is_some() {
        for (k, &i) in reps.iter().enumerate() {
            nonredundant[i] = is_facet(&rep_rows, &rep_rhs, k);
        }
        bbox = Some(
            (0..dim)
                .map(|j| {
                    let mut unit = vec![0.0; dim];
                    unit[j] = 1.0;
                    let hi = maximize(&unit, &rep_rows, &rep_rhs)
                        .value_f64()
                        .unwrap_or(f64::INFINITY);
                    unit[j] = -1.0;
                    let lo = -maximize(&unit, &rep_rows, &rep_rhs)
                        .value_f64()
                        .unwrap_or(f64::INFINITY);
                    (lo, hi)
                })
                .collect(),
        );
    }
    PolytopeH {
        dim,
        constraints,
        nonredundant,
        full_ranges,
        center,
        bbox,
    }
}

/// One constraint per positive direction, the tightest one; trivial rows
/// dropped.
fn representatives(constraints: &[Halfspace]) -> Vec<usize> {
    let mut reps: Vec<usize> = Vec::new();
    let normalized = |h: &Halfspace| {
        let s = h.normal.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        (
            h.normal.iter().map(|x| x / s).collect::<Vec<_>>(),
            h.bound / s,
        )
    };
    for (i, h) in constraints.iter().enumerate() {
        if h.is_trivial() {
            continue;
        }
        let (dir, b) = normalized(h);
        let same = reps.iter().position(|&r| {
            let (d2, _) = normalized(&constraints[r]);
            dir.iter().zip(&d2).all(|(x, y)| (x - y).abs() <= 1e-12)
        });
        match same {
            None => reps.push(i),
            Some(pos) => {
                let (_, b2) = normalized(&constraints[reps[pos]]);
                if b < b2 - 1e-12 {
                    reps[pos] = i;
                }
            }
        }
    }
    reps.sort_unstable();
    reps
}

fn is_facet(rows: &[Vec<f64>], rhs: &[f64], k: usize) -> bool {
    let others: Vec<usize> = (0..rows.len()).filter(|&j| j != k).collect();
    let sub_rows: Vec<Vec<f64>> = others.iter().map(|&j| rows[j].clone()).collect();
    let sub_rhs: Vec<f64> = others.iter().map(|&j| rhs[j]).collect();
    let scale = 1.0 + rhs[k].abs();
    match maximize(&rows[k], &sub_rows, &sub_rhs) {
        LpOutcome::Unbounded => true,
        LpOutcome::Infeasible => false,
        LpOutcome::Optimal { value, .. } => {
            let gap = value - rhs[k];
            if gap.abs() > EXACT_MARGIN * scale {
                return gap > 0.0;
            }
            let exact = maximize(
                &rows[k]
                    .iter()
                    .map(|&x| BigRational::from_f64(x))
                    .collect::<Vec<_>>(),
                &to_rational(&sub_rows),
                &sub_rhs
                    .iter()
                    .map(|&x| BigRational::from_f64(x))
                    .collect::<Vec<_>>(),
            );
            match exact {
                LpOutcome::Optimal { value, .. } => value > BigRational::from_f64(rhs[k]),
                LpOutcome::Unbounded => true,
                LpOutcome::Infeasible => false,
            }
        }
    }
}

fn chebyshev(rows: &[Vec<f64>], rhs: &[f64]) -> Option<(Vec<f64>, f64)> {
    let dim = rows.first().map_or(0, Vec::len);
    if dim == 0 {
        return Some((Vec::new(), f64::INFINITY));
    }
    let lifted: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
            r.iter().copied().chain(std::iter::once(norm)).collect()
        })
        .collect();
    let mut objective = vec![0.0; dim + 1];
    objective[dim] = 1.0;
    match maximize(&objective, &lifted, rhs) {
        LpOutcome::Optimal { point, .. } if point[dim] >= -1e-12 => {
            let radius = point[dim].max(0.0);
            Some((point[..dim].to_vec(), radius))
        }
        _ => None,
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;
    use crate::winding::{Branch, BranchAssignment};

    #[test]
    fn ring_interval_is_min_weight() {
        let ctx =
            ModelContext::principal(families::cycle_weighted(&[2.0, 0.5, -1.5, 3.0])).unwrap();
        let p = ctx.polytope();
        let (lo, hi) = p.bbox.as_ref().unwrap()[0];
        assert!((lo + 0.5).abs() < 1e-12 && (hi - 0.5).abs() < 1e-12);
        assert_eq!(count_faces(p).unwrap(), 2);
    }

    #[test]
    fn face_counts() {
        let ctx = ModelContext::principal(families::three_loop_chain()).unwrap();
        assert_eq!(count_faces(ctx.polytope()).unwrap(), 8);
        let ctx = ModelContext::principal(families::expanded_diamond()).unwrap();
        assert_eq!(count_faces(ctx.polytope()).unwrap(), 6);
        let ctx = ModelContext::principal(families::complete(4)).unwrap();
        assert_eq!(count_faces(ctx.polytope()).unwrap(), 12);
    }

    #[test]
    fn partial_ranges_are_refused() {
        let g = families::cycle(3);
        let mut b = BranchAssignment::uniform(Branch::PRINCIPAL, 3);
        b.0[0] = Branch::new(0.0, 1.0).unwrap();
        let ctx = ModelContext::with_branches(g, b).unwrap();
        assert_eq!(
            count_faces(ctx.polytope()),
            Err(WindingError::PartialBranches)
        );
    }

    #[test]
    fn strong_frequencies_empty_the_polytope() {
        let ctx = ModelContext::builder(families::cycle(3))
            .omega(vec![3.0, -3.0, 0.0])
            .build()
            .unwrap();
        assert!(ctx.polytope().is_empty());
        assert_eq!(
            count_faces(ctx.polytope()),
            Err(WindingError::EmptyPolytope)
        );
    }
}
