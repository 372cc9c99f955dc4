use super::{CycleBasis, GraphError, VertexId, WeightedGraph};

/// Replace every base edge `e` by a path of `ceil(rates[e] * scale)` edges.
#[derive(Debug, Clone, PartialEq)]
pub struct SubdivisionScheme {
    pub base: WeightedGraph,
    pub rates: Vec<f64>,
    pub scale: usize,
}

impl SubdivisionScheme {
    pub fn uniform(base: WeightedGraph, scale: usize) -> Self {
        let rates = vec![1.0; base.edge_count()];
        SubdivisionScheme { base, rates, scale }
    }

    pub fn path_length(&self, edge: usize) -> usize {
        // guard against r*M landing a hair above an integer
        let raw = self.rates[edge] * self.scale as f64;
        ((raw - 1e-9 * raw.max(1.0)).ceil() as usize).max(1)
    }

    fn check(&self) -> Result<(), GraphError> {
        if self.scale == 0 {
            return Err(GraphError::ZeroScale);
        }
        if self.rates.len() != self.base.edge_count() {
            return Err(GraphError::EdgeCountMismatch {
                expected: self.base.edge_count(),
                got: self.rates.len(),
            });
        }
        if let Some((edge, &rate)) = self
            .rates
            .iter()
            .enumerate()
            .find(|(_, r)| !(**r > 0.0 && r.is_finite()))
        {
            return Err(GraphError::NonPositiveRate { edge, rate });
        }
        Ok(())
    }
}

/// Subdivided graph plus, for every new edge, the base edge it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Subdivided {
    pub graph: WeightedGraph,
    pub parent: Vec<usize>,
}

impl Subdivided {
    /// Basis of the subdivided graph obtained by copying each base entry onto
    /// every edge of the corresponding path.
    pub fn lift_basis(&self, base: &CycleBasis) -> CycleBasis {
        let rows = base
            .rows()
            .iter()
            .map(|row| self.parent.iter().map(|&p| row[p]).collect())
            .collect();
        CycleBasis::unchecked(rows)
    }

    pub fn lift_per_edge<T: Clone>(&self, base: &[T]) -> Vec<T> {
        self.parent.iter().map(|&p| base[p].clone()).collect()
    }
}

pub fn subdivide(scheme: &SubdivisionScheme) -> Result<Subdivided, GraphError> {
    scheme.check()?;
    let base = &scheme.base;
    let mut vertices: Vec<VertexId> = base.vertices().to_vec();
    let mut edges = Vec::new();
    let mut parent = Vec::new();
    for (idx, e) in base.edges().iter().enumerate() {
        let len = scheme.path_length(idx);
        let mut prev = e.tail;
        for j in 1..=len {
            let next = if j == len {
                e.head
            } else {
                vertices.push(VertexId::Name(format!(
                    "{}~{}#{j}",
                    base.label(e.tail),
                    base.label(e.head)
                )));
                vertices.len() - 1
            };
            edges.push((prev, next, e.weight));
            parent.push(idx);
            prev = next;
        }
    }
    Ok(Subdivided {
        graph: WeightedGraph::new(vertices, edges)?,
        parent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;

    #[test]
    fn triangle_scales() {
        let tri = families::cycle(3);
        let same = subdivide(&SubdivisionScheme::uniform(tri.clone(), 1)).unwrap();
        assert_eq!(same.graph, tri);
        let six = subdivide(&SubdivisionScheme::uniform(tri, 2)).unwrap();
        assert!(six.graph.is_ring());
        assert_eq!(six.graph.vertex_count(), 6);
        assert_eq!(six.parent, vec![0, 0, 1, 1, 2, 2]);
    }

    #[test]
    fn figure_eight_grows_linearly() {
        let base = families::bowtie();
        let counts: Vec<(usize, usize)> = (1..=3)
            .map(|m| {
                let s = subdivide(&SubdivisionScheme::uniform(base.clone(), m)).unwrap();
                (s.graph.vertex_count(), s.graph.cycle_rank())
            })
            .collect();
        // |V| = 5 + 6 (M - 1)
        assert_eq!(counts, vec![(5, 2), (11, 2), (17, 2)]);
    }

    #[test]
    fn rejects_bad_rates() {
        let mut scheme = SubdivisionScheme::uniform(families::cycle(3), 2);
        scheme.rates[1] = 0.0;
        assert!(matches!(
            subdivide(&scheme),
            Err(GraphError::NonPositiveRate { edge: 1, .. })
        ));
        scheme.rates[1] = 1.0;
        scheme.scale = 0;
        assert_eq!(subdivide(&scheme), Err(GraphError::ZeroScale));
    }

    #[test]
    fn fractional_rates_round_up() {
        let mut scheme = SubdivisionScheme::uniform(families::cycle(3), 3);
        scheme.rates = vec![0.5, 1.0, 1.0 / 3.0];
        assert_eq!(
            (0..3).map(|e| scheme.path_length(e)).collect::<Vec<_>>(),
            vec![2, 3, 1]
        );
    }
}
