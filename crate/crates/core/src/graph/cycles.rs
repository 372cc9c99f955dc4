use std::collections::VecDeque;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use super::{incidence_matrix, lattice::smith_divisors, GraphError, WeightedGraph};

/// Integer basis of the cycle space: `c` rows, each a kernel vector of the
/// incidence matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CycleBasis {
    rows: Vec<Vec<i64>>,
    /// Spanning tree (edge indices) that generated the basis, when fundamental.
    tree: Option<Vec<usize>>,
}

impl CycleBasis {
    /// Wraps explicit rows, checking that each lies in the kernel of `B`,
    /// that there are exactly `c` of them and that they generate the full
    /// integer cycle lattice.
    pub fn from_rows(g: &WeightedGraph, rows: Vec<Vec<i64>>) -> Result<Self, GraphError> {
        let c = g.cycle_rank();
        if rows.len() != c {
            return Err(GraphError::NotSpanningTree(format!(
                "cycle basis needs {c} rows, got {}",
                rows.len()
            )));
        }
        let b = incidence_matrix(g);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != g.edge_count() {
                return Err(GraphError::EdgeCountMismatch {
                    expected: g.edge_count(),
                    got: row.len(),
                });
            }
            if b.apply(row).iter().any(|&x| x != 0) {
                return Err(GraphError::NotSpanningTree(format!(
                    "row {i} is not a cycle"
                )));
            }
        }
        let divisors = smith_divisors(&rows)?;
        if divisors.len() != c || divisors.iter().any(|&d| d != 1) {
            return Err(GraphError::NotSpanningTree(format!(
                "rows do not form an integral cycle basis (elementary divisors {divisors:?})"
            )));
        }
        Ok(CycleBasis { rows, tree: None })
    }

    /// Rows without any validation; only for deliberately broken inputs in
    /// lattice checks.
    pub fn unchecked(rows: Vec<Vec<i64>>) -> Self {
        CycleBasis { rows, tree: None }
    }

    pub fn rows(&self) -> &[Vec<i64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn tree(&self) -> Option<&[usize]> {
        self.tree.as_deref()
    }

    /// Basis with rows `M · V` for an integer `c x c` matrix `M`.
    pub fn transformed(&self, g: &WeightedGraph, m: &[Vec<i64>]) -> Result<Self, GraphError> {
        let cols = self.rows.first().map_or(0, Vec::len);
        let rows = m
            .iter()
            .map(|mrow| {
                (0..cols)
                    .map(|e| mrow.iter().zip(&self.rows).map(|(&a, r)| a * r[e]).sum())
                    .collect()
            })
            .collect();
        Self::from_rows(g, rows)
    }
}

/// Breadth-first spanning tree from vertex 0, neighbours visited in edge
/// order. Fundamental cycles of a BFS tree are short.
pub fn bfs_spanning_tree(g: &WeightedGraph) -> Vec<usize> {
    let adj = g.adjacency();
    let mut seen = vec![false; g.vertex_count()];
    let mut tree = Vec::with_capacity(g.vertex_count().saturating_sub(1));
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        for &(w, e) in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                tree.push(e);
                queue.push_back(w);
            }
        }
    }
    tree.sort_unstable();
    tree
}

/// Rooted view of a spanning tree: parent vertex, the edge to the parent and
/// depth for every vertex.
struct RootedTree {
    parent: Vec<usize>,
    parent_edge: Vec<usize>,
    depth: Vec<usize>,
}

fn root_tree(g: &WeightedGraph, tree: &[usize]) -> Result<RootedTree, GraphError> {
    let n = g.vertex_count();
    if tree.len() + 1 != n {
        return Err(GraphError::NotSpanningTree(format!(
            "expected {} edges, got {}",
            n - 1,
            tree.len()
        )));
    }
    let mut adj = vec![Vec::new(); n];
    for &e in tree {
        if e >= g.edge_count() {
            return Err(GraphError::NotSpanningTree(format!(
                "edge {e} out of range"
            )));
        }
        let edge = g.edge(e);
        adj[edge.tail].push((edge.head, e));
        adj[edge.head].push((edge.tail, e));
    }
    let mut parent = vec![usize::MAX; n];
    let mut parent_edge = vec![usize::MAX; n];
    let mut depth = vec![0; n];
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for &(w, e) in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                parent[w] = u;
                parent_edge[w] = e;
                depth[w] = depth[u] + 1;
                queue.push_back(w);
            }
        }
    }
    if let Some(v) = seen.iter().position(|s| !s) {
        return Err(GraphError::NotSpanningTree(format!(
            "vertex {} is not reached (the edge set has a cycle)",
            g.label(v)
        )));
    }
    Ok(RootedTree {
        parent,
        parent_edge,
        depth,
    })
}

/// One row per co-tree edge `e` (in edge order): `+1` on `e`, and `±1` along
/// the tree path from `head(e)` back to `tail(e)`.
pub fn fundamental_cycle_basis(
    g: &WeightedGraph,
    tree: &[usize],
) -> Result<CycleBasis, GraphError> {
    let rooted = root_tree(g, tree)?;
    let mut in_tree = vec![false; g.edge_count()];
    for &e in tree {
        in_tree[e] = true;
    }
    let mut rows = Vec::with_capacity(g.cycle_rank());
    for (idx, edge) in g.edges().iter().enumerate() {
        if in_tree[idx] {
            continue;
        }
        let mut row = vec![0i64; g.edge_count()];
        row[idx] = 1;
        // walk head(e) and tail(e) up to their common ancestor
        let (mut a, mut b) = (edge.head, edge.tail);
        while a != b {
            if rooted.depth[a] >= rooted.depth[b] {
                // stepping a -> parent(a) travels along the path from head(e)
                let te = rooted.parent_edge[a];
                row[te] += if g.edge(te).tail == a { 1 } else { -1 };
                a = rooted.parent[a];
            } else {
                // the path reaches b from its parent, i.e. parent(b) -> b
                let te = rooted.parent_edge[b];
                row[te] += if g.edge(te).head == b { 1 } else { -1 };
                b = rooted.parent[b];
            }
        }
        rows.push(row);
    }
    let mut tree_sorted = tree.to_vec();
    tree_sorted.sort_unstable();
    Ok(CycleBasis {
        rows,
        tree: Some(tree_sorted),
    })
}

/// Finds the integer matrix `M` with `to = M · from`, if one exists.
pub fn basis_change(from: &CycleBasis, to: &CycleBasis) -> Option<Vec<Vec<i64>>> {
    let c = from.len();
    if c != to.len() {
        return None;
    }
    if c == 0 {
        return Some(Vec::new());
    }
    let e = from.rows[0].len();
    // pick c independent columns of `from`
    let rat = |x: i64| BigRational::from_integer(BigInt::from(x));
    let mut chosen: Vec<usize> = Vec::with_capacity(c);
    let mut echelon: Vec<Vec<BigRational>> = Vec::new();
    for col in 0..e {
        let mut v: Vec<BigRational> = from.rows.iter().map(|r| rat(r[col])).collect();
        for (row, &pivot) in echelon.iter().zip(pivots(&echelon).iter()) {
            if !v[pivot].is_zero() {
                let f = v[pivot].clone() / row[pivot].clone();
                for (x, y) in v.iter_mut().zip(row) {
                    *x -= f.clone() * y.clone();
                }
            }
        }
        if v.iter().any(|x| !x.is_zero()) {
            echelon.push(v);
            chosen.push(col);
            if chosen.len() == c {
                break;
            }
        }
    }
    if chosen.len() < c {
        return None;
    }
    // M · F_S = T_S  =>  solve F_Sᵀ Mᵀ = T_Sᵀ column by column
    let fs: Vec<Vec<BigRational>> = (0..c)
        .map(|i| chosen.iter().map(|&j| rat(from.rows[i][j])).collect())
        .collect();
    let fst: Vec<Vec<BigRational>> = (0..c)
        .map(|j| (0..c).map(|i| fs[i][j].clone()).collect())
        .collect();
    let mut m = vec![vec![0i64; c]; c];
    for (r, trow) in to.rows.iter().enumerate() {
        let rhs: Vec<BigRational> = chosen.iter().map(|&j| rat(trow[j])).collect();
        let sol = solve_rational(&fst, &rhs)?;
        for (k, s) in sol.into_iter().enumerate() {
            if !s.is_integer() {
                return None;
            }
            m[r][k] = s.to_integer().to_i64()?;
        }
    }
    // verify on every column
    for (r, trow) in to.rows.iter().enumerate() {
        for col in 0..e {
            let lhs: i64 = (0..c).map(|k| m[r][k] * from.rows[k][col]).sum();
            if lhs != trow[col] {
                return None;
            }
        }
    }
    Some(m)
}

fn pivots(echelon: &[Vec<BigRational>]) -> Vec<usize> {
    echelon
        .iter()
        .map(|r| r.iter().position(|x| !x.is_zero()).unwrap_or(0))
        .collect()
}

/// Gaussian elimination over the rationals; `None` when singular.
pub(crate) fn solve_rational(
    a: &[Vec<BigRational>],
    b: &[BigRational],
) -> Option<Vec<BigRational>> {
    let n = a.len();
    let mut m: Vec<Vec<BigRational>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            row.iter()
                .cloned()
                .chain(std::iter::once(rhs.clone()))
                .collect()
        })
        .collect();
    for col in 0..n {
        let p = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, p);
        let inv = BigRational::one() / m[col][col].clone();
        for x in m[col].iter_mut() {
            *x = x.clone() * inv.clone();
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for j in col..=n {
                    let delta = f.clone() * m[col][j].clone();
                    m[r][j] -= delta;
                }
            }
        }
    }
    Some(m.into_iter().map(|row| row[n].clone()).collect())
}

#[cfg(test)]
/// Determinant of a small integer matrix via rational elimination.
pub(crate) fn integer_det(m: &[Vec<i64>]) -> i64 {
    let n = m.len();
    let mut a: Vec<Vec<BigRational>> = m
        .iter()
        .map(|r| {
            r.iter()
                .map(|&x| BigRational::from_integer(BigInt::from(x)))
                .collect()
        })
        .collect();
    let mut det = BigRational::one();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return 0;
        };
        if p != col {
            a.swap(col, p);
            det = -det;
        }
        det *= a[col][col].clone();
        for r in col + 1..n {
            if !a[r][col].is_zero() {
                let f = a[r][col].clone() / a[col][col].clone();
                for j in col..n {
                    let delta = f.clone() * a[col][j].clone();
                    a[r][j] -= delta;
                }
            }
        }
    }
    let d = det.to_integer();
    d.to_i64().unwrap_or(i64::MAX)
}
