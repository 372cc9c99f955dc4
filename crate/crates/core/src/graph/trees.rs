use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use super::{GraphError, WeightedGraph};

pub const DEFAULT_TREE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeMode {
    Count,
    Enumerate { cap: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpanningTrees {
    Count(u128),
    /// Each tree as a sorted list of edge indices.
    List(Vec<Vec<usize>>),
}

impl SpanningTrees {
    pub fn count(&self) -> u128 {
        match self {
            SpanningTrees::Count(n) => *n,
            SpanningTrees::List(l) => l.len() as u128,
        }
    }
}

pub fn spanning_trees(g: &WeightedGraph, mode: TreeMode) -> Result<SpanningTrees, GraphError> {
    let count = spanning_tree_count(g)?;
    match mode {
        TreeMode::Count => Ok(SpanningTrees::Count(count)),
        TreeMode::Enumerate { cap } => {
            if count > cap as u128 {
                return Err(GraphError::TreeCapExceeded { count, cap });
            }
            let mut out = Vec::with_capacity(count as usize);
            let mut search = TreeSearch::new(g);
            search.run(0, &mut out);
            debug_assert_eq!(out.len() as u128, count);
            Ok(SpanningTrees::List(out))
        }
    }
}

/// Matrix-tree theorem on the unweighted graph: determinant of the reduced
/// Laplacian by fraction-free (Bareiss) elimination.
pub fn spanning_tree_count(g: &WeightedGraph) -> Result<u128, GraphError> {
    let n = g.vertex_count();
    if n == 1 {
        return Ok(1);
    }
    let size = n - 1;
    let mut m = vec![vec![BigInt::zero(); size]; size];
    for e in g.edges() {
        let (a, b) = (e.tail, e.head);
        for v in [a, b] {
            if v > 0 {
                m[v - 1][v - 1] += 1;
            }
        }
        if a > 0 && b > 0 {
            m[a - 1][b - 1] -= 1;
            m[b - 1][a - 1] -= 1;
        }
    }
    let mut sign = 1i32;
    let mut prev = BigInt::from(1);
    for k in 0..size {
        if m[k][k].is_zero() {
            let Some(p) = (k + 1..size).find(|&r| !m[r][k].is_zero()) else {
                return Ok(0);
            };
            m.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..size {
            for j in k + 1..size {
                let v = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
                m[i][j] = v;
            }
        }
        prev = m[k][k].clone();
    }
    let det = if sign < 0 { -prev } else { prev };
    det.to_u128().ok_or(GraphError::Overflow)
}

/// Include/exclude backtracking over edges in order. Excluding an edge is only
/// allowed while the remaining candidate edges still connect the graph, so
/// every leaf is a spanning tree.
struct TreeSearch<'g> {
    g: &'g WeightedGraph,
    excluded: Vec<bool>,
    chosen: Vec<usize>,
    uf_parent: Vec<usize>,
    uf_log: Vec<usize>,
}

impl<'g> TreeSearch<'g> {
    fn new(g: &'g WeightedGraph) -> Self {
        TreeSearch {
            g,
            excluded: vec![false; g.edge_count()],
            chosen: Vec::new(),
            uf_parent: (0..g.vertex_count()).collect(),
            uf_log: Vec::new(),
        }
    }

    fn find(&self, mut v: usize) -> usize {
        while self.uf_parent[v] != v {
            v = self.uf_parent[v];
        }
        v
    }

    fn run(&mut self, e: usize, out: &mut Vec<Vec<usize>>) {
        let need = self.g.vertex_count() - 1;
        if self.chosen.len() == need {
            out.push(self.chosen.clone());
            return;
        }
        if e == self.g.edge_count() || self.chosen.len() + (self.g.edge_count() - e) < need {
            return;
        }
        let edge = self.g.edge(e);
        let (ra, rb) = (self.find(edge.tail), self.find(edge.head));
        if ra != rb {
            self.uf_parent[ra] = rb;
            self.uf_log.push(ra);
            self.chosen.push(e);
            self.run(e + 1, out);
            self.chosen.pop();
            let r = self.uf_log.pop().expect("balanced union log");
            self.uf_parent[r] = r;
        }
        self.excluded[e] = true;
        if self.still_connected() {
            self.run(e + 1, out);
        }
        self.excluded[e] = false;
    }

    fn still_connected(&self) -> bool {
        let n = self.g.vertex_count();
        let mut parent: Vec<usize> = (0..n).collect();
        fn root(p: &mut [usize], mut v: usize) -> usize {
            while p[v] != v {
                p[v] = p[p[v]];
                v = p[v];
            }
            v
        }
        let mut components = n;
        for (idx, edge) in self.g.edges().iter().enumerate() {
            if self.excluded[idx] {
                continue;
            }
            let (a, b) = (root(&mut parent, edge.tail), root(&mut parent, edge.head));
            if a != b {
                parent[a] = b;
                components -= 1;
            }
        }
        components == 1
    }
}
