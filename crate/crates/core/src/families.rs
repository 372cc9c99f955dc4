//! Named graphs used throughout the tests, the examples and the CLI.

use rand::Rng;

use crate::graph::{CycleBasis, VertexId, WeightedGraph};

fn build(n: usize, edges: Vec<(usize, usize, f64)>) -> WeightedGraph {
    WeightedGraph::with_numbered_vertices(n, edges).expect("family graphs are valid")
}

/// Ring `1 -> 2 -> ... -> n -> 1` with unit weights.
pub fn cycle(n: usize) -> WeightedGraph {
    cycle_weighted(&vec![1.0; n])
}

pub fn cycle_weighted(weights: &[f64]) -> WeightedGraph {
    let n = weights.len();
    build(n, (0..n).map(|i| (i, (i + 1) % n, weights[i])).collect())
}

pub fn complete(n: usize) -> WeightedGraph {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            edges.push((a, b, 1.0));
        }
    }
    build(n, edges)
}

/// Two hubs (vertices 1 and 2) joined by three internally disjoint paths of
/// the given lengths, each oriented from hub 1 to hub 2.
pub fn theta(arms: [usize; 3]) -> WeightedGraph {
    assert!(arms.iter().all(|&a| a >= 1) && arms.iter().filter(|&&a| a == 1).count() <= 1);
    let mut n = 2;
    let mut edges = Vec::new();
    for len in arms {
        let mut prev = 0;
        for j in 1..=len {
            let next = if j == len {
                1
            } else {
                n += 1;
                n - 1
            };
            edges.push((prev, next, 1.0));
            prev = next;
        }
    }
    build(n, edges)
}

/// Three loops through a common vertex, two of them sharing an edge.
pub fn three_loop_chain() -> WeightedGraph {
    build(
        6,
        vec![
            (0, 2, 1.0),
            (2, 1, 1.0),
            (1, 0, 1.0),
            (0, 3, 1.0),
            (3, 1, 1.0),
            (0, 4, 1.0),
            (4, 5, 1.0),
            (5, 0, 1.0),
        ],
    )
}

/// Two triangles glued at vertex 1.
pub fn bowtie() -> WeightedGraph {
    build(
        5,
        vec![
            (0, 1, 1.0),
            (1, 2, 1.0),
            (2, 0, 1.0),
            (0, 3, 1.0),
            (3, 4, 1.0),
            (4, 0, 1.0),
        ],
    )
}

/// Hubs 1 and 9 joined by three strands (8, 8 and 4 edges), unit weights.
/// Edge order and orientation follow the published winding data.
pub fn expanded_diamond() -> WeightedGraph {
    let pairs = [
        (1, 2),
        (1, 16),
        (17, 18),
        (2, 3),
        (3, 4),
        (4, 5),
        (5, 6),
        (6, 7),
        (7, 8),
        (8, 9),
        (9, 10),
        (17, 1),
        (10, 11),
        (11, 12),
        (12, 13),
        (13, 14),
        (14, 15),
        (15, 16),
        (18, 19),
        (19, 9),
    ];
    build(
        19,
        pairs.iter().map(|&(t, h)| (t - 1, h - 1, 1.0)).collect(),
    )
}

pub const DIAMOND_V1: [i64; 20] = [0, -1, 1, 0, 0, 0, 0, 0, 0, 0, 1, -1, 1, 1, 1, 1, 1, 1, 1, 1];
pub const DIAMOND_V2: [i64; 20] = [
    -1, 0, 1, -1, -1, -1, -1, -1, -1, -1, 0, -1, 0, 0, 0, 0, 0, 0, 1, 1,
];
pub const DIAMOND_LIFT: [i64; 20] = [1, -1, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0];
pub const DIAMOND_WINDING: [i64; 2] = [2, -1];
pub const DIAMOND_ALPHA: [f64; 2] = [0.994148, -0.779356];
pub const DIAMOND_THETA: [f64; 19] = [
    0.724472, 1.61811, 2.51175, 3.40538, 4.29902, 5.19266, 6.0863, 0.696749, 1.59039, 3.05294,
    4.5155, 5.97806, 1.15743, 2.61999, 4.08254, 5.5451, 0.94095, 1.15743, 1.37391,
];

pub fn expanded_diamond_basis(g: &WeightedGraph) -> CycleBasis {
    CycleBasis::from_rows(g, vec![DIAMOND_V1.to_vec(), DIAMOND_V2.to_vec()])
        .expect("published basis is valid")
}

/// Random 2-edge-connected graph built by an ear decomposition: a starting
/// cycle, then ears (paths between existing vertices) until `target_vertices`
/// is reached and `extra_ears` chords or ears have been added. Orientations
/// are random, weights are 1.
pub fn random_bridgeless<R: Rng>(
    rng: &mut R,
    target_vertices: usize,
    extra_ears: usize,
) -> WeightedGraph {
    assert!(target_vertices >= 3);
    let first = rng.gen_range(3..=target_vertices);
    let mut n = first;
    let mut pairs: Vec<(usize, usize)> = (0..first).map(|i| (i, (i + 1) % first)).collect();
    let has = |pairs: &[(usize, usize)], a: usize, b: usize| {
        pairs
            .iter()
            .any(|&(x, y)| (x, y) == (a, b) || (x, y) == (b, a))
    };
    let mut ears = 0;
    let mut attempts = 0;
    while (n < target_vertices || ears < extra_ears) && attempts < 1000 {
        attempts += 1;
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        let room = target_vertices - n;
        let internal = if room == 0 {
            0
        } else {
            rng.gen_range(0..=room.min(3))
        };
        if internal == 0 && (a == b || has(&pairs, a, b)) {
            continue;
        }
        if a == b && internal < 2 {
            continue;
        }
        let mut prev = a;
        for _ in 0..internal {
            pairs.push((prev, n));
            prev = n;
            n += 1;
        }
        pairs.push((prev, b));
        if n >= target_vertices {
            ears += 1;
        }
    }
    let edges: Vec<(usize, usize, f64)> = pairs
        .into_iter()
        .map(|(a, b)| {
            if rng.gen_bool(0.5) {
                (a, b, 1.0)
            } else {
                (b, a, 1.0)
            }
        })
        .collect();
    WeightedGraph::new((1..=n as i64).map(VertexId::Num).collect(), edges)
        .expect("ear decompositions are bridgeless")
}

/// Connected bridgeless simple graphs on `n` vertices, one per isomorphism
/// class, edges oriented from the smaller to the larger index.
pub fn all_bridgeless(n: usize) -> Vec<WeightedGraph> {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .collect();
    let perms = permutations(n);
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for mask in 0u64..1 << pairs.len() {
        let chosen: Vec<(usize, usize)> = pairs
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &p)| p)
            .collect();
        if chosen.len() < n {
            continue;
        }
        let canonical = perms
            .iter()
            .map(|p| {
                let mut e: Vec<(usize, usize)> = chosen
                    .iter()
                    .map(|&(a, b)| (p[a].min(p[b]), p[a].max(p[b])))
                    .collect();
                e.sort_unstable();
                e
            })
            .min()
            .expect("at least one permutation");
        if seen.contains(&canonical) {
            continue;
        }
        let edges: Vec<(usize, usize, f64)> = canonical.iter().map(|&(a, b)| (a, b, 1.0)).collect();
        if let Ok(g) = WeightedGraph::with_numbered_vertices(n, edges) {
            out.push(g);
        }
        seen.insert(canonical);
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}
