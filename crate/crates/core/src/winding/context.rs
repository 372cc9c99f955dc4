use std::sync::OnceLock;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::{Branch, BranchAssignment, PolytopeH, WindingError};
use crate::graph::{
    basis_change, bfs_spanning_tree, fundamental_cycle_basis, load_graph, spanning_trees,
    CycleBasis, GraphDocument, SpanningTrees, TreeMode, WeightedGraph, DEFAULT_TREE_CAP,
};

/// Graph, cycle basis, branches and frequencies, plus everything derived from
/// them that `L`, `W` and `A` need. Immutable once built.
#[derive(Debug)]
pub struct ModelContext {
    graph: WeightedGraph,
    basis: CycleBasis,
    branches: BranchAssignment,
    omega: Vec<f64>,
    /// `coeff[e][i] = v_ie / gamma_e`
    coeff: Vec<Vec<f64>>,
    /// `D^-1 x` for the minimum-norm `x` with `B x = omega`
    offset: Vec<f64>,
    ranges: Vec<(f64, f64)>,
    tree: Vec<usize>,
    cotree: Vec<usize>,
    /// inverse of the basis restricted to co-tree columns
    lift_inverse: Vec<Vec<i64>>,
    grounded: Cholesky<f64, Dyn>,
    polytope: OnceLock<PolytopeH>,
    trees: OnceLock<Result<Vec<Vec<usize>>, WindingError>>,
}

#[derive(Debug, Clone)]
pub struct ContextBuilder {
    graph: WeightedGraph,
    basis: Option<CycleBasis>,
    branches: Option<BranchAssignment>,
    omega: Option<Vec<f64>>,
}

impl ContextBuilder {
    pub fn basis(mut self, basis: CycleBasis) -> Self {
        self.basis = Some(basis);
        self
    }

    pub fn branches(mut self, branches: BranchAssignment) -> Self {
        self.branches = Some(branches);
        self
    }

    pub fn omega(mut self, omega: Vec<f64>) -> Self {
        self.omega = Some(omega);
        self
    }

    pub fn build(self) -> Result<ModelContext, WindingError> {
        ModelContext::assemble(self)
    }
}

impl Clone for ModelContext {
    fn clone(&self) -> Self {
        ModelContext::builder(self.graph.clone())
            .basis(self.basis.clone())
            .branches(self.branches.clone())
            .omega(self.omega.clone())
            .build()
            .expect("rebuilding a valid context")
    }
}

impl ModelContext {
    pub fn builder(graph: WeightedGraph) -> ContextBuilder {
        ContextBuilder {
            graph,
            basis: None,
            branches: None,
            omega: None,
        }
    }

    /// All-principal branches, zero frequencies, fundamental basis of the BFS
    /// tree.
    pub fn principal(graph: WeightedGraph) -> Result<Self, WindingError> {
        Self::builder(graph).build()
    }

    pub fn with_branches(
        graph: WeightedGraph,
        branches: BranchAssignment,
    ) -> Result<Self, WindingError> {
        Self::builder(graph).branches(branches).build()
    }

    pub fn from_document(doc: &GraphDocument) -> Result<Self, WindingError> {
        let graph = load_graph(doc)?;
        let mut builder =
            Self::builder(graph.clone()).branches(BranchAssignment::from_specs(&doc.branches())?);
        if let Some(rows) = &doc.cycle_basis {
            builder = builder.basis(CycleBasis::from_rows(&graph, rows.clone())?);
        }
        if let Some(omega) = &doc.omega {
            builder = builder.omega(omega.clone());
        }
        builder.build()
    }

    fn assemble(b: ContextBuilder) -> Result<Self, WindingError> {
        let g = b.graph;
        let (n, m) = (g.vertex_count(), g.edge_count());
        let branches = b
            .branches
            .unwrap_or_else(|| BranchAssignment::uniform(Branch::PRINCIPAL, m));
        if branches.len() != m {
            return Err(WindingError::BranchCount {
                expected: m,
                got: branches.len(),
            });
        }
        let omega = b.omega.unwrap_or_else(|| vec![0.0; n]);
        if omega.len() != n {
            return Err(WindingError::OmegaLength {
                expected: n,
                got: omega.len(),
            });
        }
        let total: f64 = omega.iter().sum();
        let scale: f64 = omega.iter().map(|w| w.abs()).sum();
        if total.abs() > 1e-9 * (1.0 + scale) {
            return Err(WindingError::OmegaSum(total));
        }

        let tree = match b.basis.as_ref().and_then(|basis| basis.tree()) {
            Some(t) => t.to_vec(),
            None => bfs_spanning_tree(&g),
        };
        let fundamental = fundamental_cycle_basis(&g, &tree)?;
        let basis = b.basis.unwrap_or_else(|| fundamental.clone());
        let change = basis_change(&fundamental, &basis).ok_or(WindingError::BasisNotUnimodular)?;
        let lift_inverse = integer_inverse(&change).ok_or(WindingError::BasisNotUnimodular)?;
        let mut in_tree = vec![false; m];
        tree.iter().for_each(|&e| in_tree[e] = true);
        let cotree: Vec<usize> = (0..m).filter(|&e| !in_tree[e]).collect();

        let grounded = grounded_laplacian(&g)
            .cholesky()
            .expect("grounded Laplacian of a connected graph is positive definite");
        let weights = g.weights();
        let c = basis.len();
        let coeff: Vec<Vec<f64>> = (0..m)
            .map(|e| {
                (0..c)
                    .map(|i| basis.rows()[i][e] as f64 / weights[e])
                    .collect()
            })
            .collect();

        // minimum-norm x with B x = omega is B^T z with L z = omega
        let rhs = DVector::from_iterator(n - 1, omega[1..].iter().copied());
        let z_r = grounded.solve(&rhs);
        let z = |v: usize| if v == 0 { 0.0 } else { z_r[v - 1] };
        let offset: Vec<f64> = g
            .edges()
            .iter()
            .zip(&weights)
            .map(|(e, w)| (z(e.head) - z(e.tail)) / w)
            .collect();
        let ranges = branches.0.iter().map(Branch::sin_range).collect();

        Ok(ModelContext {
            graph: g,
            basis,
            branches,
            omega,
            coeff,
            offset,
            ranges,
            tree,
            cotree,
            lift_inverse,
            grounded,
            polytope: OnceLock::new(),
            trees: OnceLock::new(),
        })
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn basis(&self) -> &CycleBasis {
        &self.basis
    }

    pub fn branches(&self) -> &BranchAssignment {
        &self.branches
    }

    pub fn branch(&self, e: usize) -> &Branch {
        self.branches.get(e)
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    /// Cycle rank `c`, the dimension of `A`.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    pub fn coeff(&self) -> &[Vec<f64>] {
        &self.coeff
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    /// `sin(I_e)` per edge.
    pub fn ranges(&self) -> &[(f64, f64)] {
        &self.ranges
    }

    pub fn tree(&self) -> &[usize] {
        &self.tree
    }

    pub fn cotree(&self) -> &[usize] {
        &self.cotree
    }

    pub fn has_zero_omega(&self) -> bool {
        self.omega.iter().all(|&w| w == 0.0)
    }

    /// `L(alpha)` without dimension checks.
    pub fn l_values(&self, alpha: &[f64]) -> Vec<f64> {
        self.coeff
            .iter()
            .zip(&self.offset)
            .map(|(row, off)| off + row.iter().zip(alpha).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    }

    /// `W` with every `L_e` clamped into `sin(I_e)`.
    pub fn w_clamped(&self, alpha: &[f64]) -> Vec<f64> {
        let x: Vec<f64> = self
            .l_values(alpha)
            .iter()
            .zip(&self.branches.0)
            .map(|(&y, b)| b.inverse_clamped(y))
            .collect();
        self.pair_with_basis(&x)
    }

    /// `L(alpha)` clamped into the branch ranges, with values within `pin` of
    /// a range end moved onto it. Points on a face of `A` have `L_e = +-1`
    /// exactly, which rounding in the affine map cannot reproduce.
    pub fn l_values_pinned(&self, alpha: &[f64], pin: f64) -> Vec<f64> {
        self.l_values(alpha)
            .iter()
            .zip(&self.ranges)
            .map(|(&y, &(lo, hi))| {
                if y <= lo + pin {
                    lo
                } else if y >= hi - pin {
                    hi
                } else {
                    y
                }
            })
            .collect()
    }

    pub fn w_pinned(&self, alpha: &[f64], pin: f64) -> Vec<f64> {
        let x: Vec<f64> = self
            .l_values_pinned(alpha, pin)
            .iter()
            .zip(&self.branches.0)
            .map(|(&y, b)| b.inverse_clamped(y))
            .collect();
        self.pair_with_basis(&x)
    }

    /// `(1 / 2 pi) V x` for an edge vector `x`.
    pub fn pair_with_basis(&self, x: &[f64]) -> Vec<f64> {
        self.basis
            .rows()
            .iter()
            .map(|row| {
                row.iter().zip(x).map(|(&v, xe)| v as f64 * xe).sum::<f64>() / std::f64::consts::TAU
            })
            .collect()
    }

    /// Signed per-edge Jacobian factors `eps_e / (gamma_e sqrt(1 - L_e^2))`,
    /// with `1 - L^2` floored at `floor`.
    pub fn edge_factors(&self, l: &[f64], floor: f64) -> Vec<f64> {
        l.iter()
            .enumerate()
            .map(|(e, &y)| {
                let w = self.graph.edge(e).weight;
                self.branches.get(e).epsilon() / (w * (1.0 - y * y).max(floor).sqrt())
            })
            .collect()
    }

    /// `W'` from precomputed edge factors.
    pub fn jacobian_from_factors(&self, d: &[f64]) -> DMatrix<f64> {
        let c = self.dim();
        let rows = self.basis.rows();
        let mut j = DMatrix::zeros(c, c);
        for (e, &de) in d.iter().enumerate() {
            for a in 0..c {
                let va = rows[a][e];
                if va == 0 {
                    continue;
                }
                for b in a..c {
                    let vb = rows[b][e];
                    if vb != 0 {
                        j[(a, b)] += (va * vb) as f64 * de;
                    }
                }
            }
        }
        for a in 0..c {
            for b in a..c {
                j[(a, b)] /= std::f64::consts::TAU;
                j[(b, a)] = j[(a, b)];
            }
        }
        j
    }

    /// `W'` with `1 - L^2` floored, for solvers that approach the boundary.
    pub fn jacobian_clamped(&self, alpha: &[f64]) -> DMatrix<f64> {
        let l = self.l_values(alpha);
        self.jacobian_from_factors(&self.edge_factors(&l, 1e-16))
    }

    /// Integer edge vector `K`, supported on co-tree edges, with
    /// `<v_i, K> = k_i`.
    pub fn lift(&self, k: &[i64]) -> Vec<i64> {
        let mut big_k = vec![0i64; self.edge_count()];
        for (j, &e) in self.cotree.iter().enumerate() {
            big_k[e] = self.lift_inverse[j].iter().zip(k).map(|(a, b)| a * b).sum();
        }
        big_k
    }

    /// Least-squares `theta` with `B^T theta = y` and `theta_1 = 0`.
    pub fn solve_angles(&self, y: &[f64]) -> Vec<f64> {
        let n = self.graph.vertex_count();
        let mut rhs = DVector::zeros(n);
        for (e, edge) in self.graph.edges().iter().enumerate() {
            rhs[edge.head] += y[e];
            rhs[edge.tail] -= y[e];
        }
        let reduced = DVector::from_iterator(n - 1, rhs.iter().skip(1).copied());
        let sol = self.grounded.solve(&reduced);
        std::iter::once(0.0).chain(sol.iter().copied()).collect()
    }

    pub fn polytope(&self) -> &PolytopeH {
        self.polytope.get_or_init(|| super::polytope::build(self))
    }

    /// All spanning trees, enumerated once (subject to the default cap).
    pub fn spanning_tree_list(&self) -> Result<&[Vec<usize>], WindingError> {
        self.trees
            .get_or_init(|| {
                match spanning_trees(
                    &self.graph,
                    TreeMode::Enumerate {
                        cap: DEFAULT_TREE_CAP,
                    },
                ) {
                    Ok(SpanningTrees::List(l)) => Ok(l),
                    Ok(SpanningTrees::Count(_)) => unreachable!("enumerate mode returns a list"),
                    Err(e) => Err(e.into()),
                }
            })
            .as_deref()
            .map_err(Clone::clone)
    }
}

fn grounded_laplacian(g: &WeightedGraph) -> DMatrix<f64> {
    let n = g.vertex_count();
    let mut l = DMatrix::zeros(n - 1, n - 1);
    for e in g.edges() {
        let (a, b) = (e.tail, e.head);
        if a > 0 {
            l[(a - 1, a - 1)] += 1.0;
        }
        if b > 0 {
            l[(b - 1, b - 1)] += 1.0;
        }
        if a > 0 && b > 0 {
            l[(a - 1, b - 1)] -= 1.0;
            l[(b - 1, a - 1)] -= 1.0;
        }
    }
    l
}

fn integer_inverse(m: &[Vec<i64>]) -> Option<Vec<Vec<i64>>> {
    let c = m.len();
    let rat = |x: i64| BigRational::from_integer(BigInt::from(x));
    let mut inv = vec![vec![0i64; c]; c];
    for col in 0..c {
        let rhs: Vec<BigRational> = (0..c).map(|i| rat(i64::from(i == col))).collect();
        let a: Vec<Vec<BigRational>> = m
            .iter()
            .map(|r| r.iter().map(|&x| rat(x)).collect())
            .collect();
        let sol = crate::graph::solve_rational(&a, &rhs)?;
        for (i, s) in sol.iter().enumerate() {
            if !s.is_integer() {
                return None;
            }
            inv[i][col] = s.to_integer().to_i64()?;
        }
    }
    if c > 0 && m.iter().flatten().all(Zero::is_zero) {
        return None;
    }
    Some(inv)
}
