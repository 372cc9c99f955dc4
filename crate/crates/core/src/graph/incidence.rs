use nalgebra::DMatrix;

use super::WeightedGraph;

/// Signed vertex-by-edge incidence matrix: `+1` at the head, `-1` at the tail.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceMatrix {
    entries: DMatrix<i64>,
}

pub fn incidence_matrix(g: &WeightedGraph) -> IncidenceMatrix {
    let mut entries = DMatrix::zeros(g.vertex_count(), g.edge_count());
    for (idx, e) in g.edges().iter().enumerate() {
        entries[(e.head, idx)] = 1;
        entries[(e.tail, idx)] = -1;
    }
    IncidenceMatrix { entries }
}

impl IncidenceMatrix {
    pub fn get(&self, vertex: usize, edge: usize) -> i64 {
        self.entries[(vertex, edge)]
    }

    pub fn nrows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<i64> {
        &self.entries
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        self.entries.map(|x| x as f64)
    }

    /// `B v` in exact integer arithmetic.
    pub fn apply(&self, v: &[i64]) -> Vec<i64> {
        (0..self.nrows())
            .map(|i| (0..self.ncols()).map(|e| self.entries[(i, e)] * v[e]).sum())
            .collect()
    }

    /// Exact rank by fraction-free elimination.
    pub fn rank(&self) -> usize {
        let mut m: Vec<Vec<i128>> = (0..self.nrows())
            .map(|i| {
                (0..self.ncols())
                    .map(|j| self.entries[(i, j)] as i128)
                    .collect()
            })
            .collect();
        exact_rank(&mut m)
    }
}

/// Rank of an integer matrix (rows are consumed). Entries stay bounded for
/// incidence and cycle matrices because pivots are reduced by their gcd.
pub(crate) fn exact_rank(m: &mut [Vec<i128>]) -> usize {
    let rows = m.len();
    if rows == 0 {
        return 0;
    }
    let cols = m[0].len();
    let mut rank = 0;
    for col in 0..cols {
        let Some(p) = (rank..rows).find(|&r| m[r][col] != 0) else {
            continue;
        };
        m.swap(rank, p);
        for r in rank + 1..rows {
            if m[r][col] == 0 {
                continue;
            }
            let (a, b) = (m[rank][col], m[r][col]);
            for j in col..cols {
                m[r][j] = m[r][j] * a - m[rank][j] * b;
            }
            let g = m[r].iter().fold(0i128, |g, &x| gcd(g, x));
            if g > 1 {
                m[r].iter_mut().for_each(|x| *x /= g);
            }
        }
        rank += 1;
    }
    rank
}

pub(crate) fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
