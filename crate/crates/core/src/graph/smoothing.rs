use serde::Serialize;

use super::WeightedGraph;

/// Undirected multigraph; self-loops and parallel edges allowed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Multigraph {
    pub vertex_count: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Multigraph {
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Degree with a self-loop counted twice.
    pub fn degree(&self, v: usize) -> usize {
        self.edges
            .iter()
            .map(|&(a, b)| usize::from(a == v) + usize::from(b == v))
            .sum()
    }

    /// Repeatedly merges the two edges at a 2-valent vertex. A vertex whose
    /// only edge is a self-loop is kept.
    pub fn smooth(&self) -> Multigraph {
        let mut edges: Vec<Option<(usize, usize)>> = self.edges.iter().copied().map(Some).collect();
        let mut alive = vec![true; self.vertex_count];
        loop {
            let mut changed = false;
            for v in 0..self.vertex_count {
                if !alive[v] {
                    continue;
                }
                let incident: Vec<usize> = edges
                    .iter()
                    .enumerate()
                    .filter_map(|(i, e)| e.filter(|&(a, b)| a == v || b == v).map(|_| i))
                    .collect();
                let is_loop = |i: usize| edges[i].is_some_and(|(a, b)| a == b);
                if incident.len() != 2 || incident.iter().any(|&i| is_loop(i)) {
                    continue;
                }
                let other = |i: usize| {
                    let (a, b) = edges[i].expect("live edge");
                    if a == v {
                        b
                    } else {
                        a
                    }
                };
                let (x, y) = (other(incident[0]), other(incident[1]));
                edges[incident[0]] = Some((x, y));
                edges[incident[1]] = None;
                alive[v] = false;
                changed = true;
            }
            if !changed {
                break;
            }
        }
        let mut remap = vec![usize::MAX; self.vertex_count];
        let mut next = 0;
        for v in 0..self.vertex_count {
            if alive[v] {
                remap[v] = next;
                next += 1;
            }
        }
        Multigraph {
            vertex_count: next,
            edges: edges
                .into_iter()
                .flatten()
                .map(|(a, b)| (remap[a], remap[b]))
                .collect(),
        }
    }
}

impl From<&WeightedGraph> for Multigraph {
    fn from(g: &WeightedGraph) -> Self {
        Multigraph {
            vertex_count: g.vertex_count(),
            edges: g.edges().iter().map(|e| (e.tail, e.head)).collect(),
        }
    }
}

pub fn smooth_two_valent(g: &WeightedGraph) -> Multigraph {
    Multigraph::from(g).smooth()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;

    #[test]
    fn known_smoothings() {
        assert_eq!(
            smooth_two_valent(&families::three_loop_chain()).edge_count(),
            4
        );
        let ring = smooth_two_valent(&families::cycle(7));
        assert_eq!(
            ring,
            Multigraph {
                vertex_count: 1,
                edges: vec![(0, 0)]
            }
        );
        let diamond = smooth_two_valent(&families::expanded_diamond());
        assert_eq!((diamond.vertex_count, diamond.edge_count()), (2, 3));
        assert_eq!(smooth_two_valent(&families::complete(4)).edge_count(), 6);
    }

    #[test]
    fn idempotent() {
        for g in [
            families::three_loop_chain(),
            families::cycle(4),
            families::theta([1, 3, 4]),
        ] {
            let once = smooth_two_valent(&g);
            assert_eq!(once.smooth(), once);
        }
    }
}
