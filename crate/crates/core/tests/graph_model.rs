#![allow(clippy::needless_range_loop)]

use kuramoto_topo::families;
use kuramoto_topo::graph::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_graph(seed: u64, max_vertices: usize) -> WeightedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 3 + (seed as usize % (max_vertices - 2));
    families::random_bridgeless(&mut rng, n, 1 + seed as usize % 3)
}

/// Spanning trees by checking every (|V|-1)-subset of edges for acyclicity.
fn brute_force_tree_count(g: &WeightedGraph) -> u64 {
    let (n, m) = (g.vertex_count(), g.edge_count());
    let mut count = 0;
    for mask in 0u64..1 << m {
        if mask.count_ones() as usize != n - 1 {
            continue;
        }
        let mut comp: Vec<usize> = (0..n).collect();
        let mut ok = true;
        for e in (0..m).filter(|e| mask >> e & 1 == 1) {
            let edge = g.edge(e);
            let (a, b) = (comp[edge.tail], comp[edge.head]);
            if a == b {
                ok = false;
                break;
            }
            comp.iter_mut().filter(|c| **c == a).for_each(|c| *c = b);
        }
        count += u64::from(ok);
    }
    count
}

fn det_i64(m: &[Vec<i64>]) -> i64 {
    match m.len() {
        0 => 1,
        1 => m[0][0],
        n => (0..n)
            .map(|j| {
                let minor: Vec<Vec<i64>> = m[1..]
                    .iter()
                    .map(|r| {
                        r.iter()
                            .enumerate()
                            .filter(|(k, _)| *k != j)
                            .map(|(_, v)| *v)
                            .collect()
                    })
                    .collect();
                let sign = if j % 2 == 0 { 1 } else { -1 };
                sign * m[0][j] * det_i64(&minor)
            })
            .sum(),
    }
}

#[test]
fn triangle_basics() {
    let g = families::cycle(3);
    assert_eq!(
        (g.vertex_count(), g.edge_count(), g.cycle_rank()),
        (3, 3, 1)
    );
    let b = incidence_matrix(&g);
    assert_eq!(b.rank(), 2);
    for e in 0..3 {
        assert_eq!((0..3).map(|v| b.get(v, e)).sum::<i64>(), 0);
    }
    let basis = fundamental_cycle_basis(&g, &[0, 1]).unwrap();
    assert_eq!(basis.rows(), &[vec![1, 1, 1]]);
}

#[test]
fn path_is_rejected() {
    let err = WeightedGraph::with_numbered_vertices(3, [(0, 1, 1.0), (1, 2, 1.0)]);
    assert!(err.is_err());
}

#[test]
fn expanded_diamond_rank() {
    let g = families::expanded_diamond();
    assert_eq!(
        (g.vertex_count(), g.edge_count(), g.cycle_rank()),
        (19, 20, 2)
    );
    assert_eq!(smooth_two_valent(&g).edge_count(), 3);
}

#[test]
fn tree_counts_match_brute_force() {
    assert_eq!(spanning_tree_count(&families::cycle(3)).unwrap(), 3);
    assert_eq!(
        spanning_tree_count(&families::theta([2, 2, 2])).unwrap(),
        12
    );
    assert_eq!(brute_force_tree_count(&families::theta([2, 2, 2])), 12);
    assert_eq!(spanning_tree_count(&families::complete(4)).unwrap(), 16);
    assert_eq!(brute_force_tree_count(&families::complete(4)), 16);
    for seed in 0..15 {
        let g = random_graph(seed, 7);
        if g.edge_count() > 16 {
            continue;
        }
        let fast = spanning_tree_count(&g).unwrap();
        assert_eq!(fast as u64, brute_force_tree_count(&g), "seed {seed}");
        let SpanningTrees::List(list) =
            spanning_trees(&g, TreeMode::Enumerate { cap: 100_000 }).unwrap()
        else {
            panic!("enumeration mode returns a list")
        };
        assert_eq!(list.len() as u128, fast);
    }
}

#[test]
fn smoothing_examples() {
    assert_eq!(
        smooth_two_valent(&families::three_loop_chain()).edge_count(),
        4
    );
    let ring = smooth_two_valent(&families::cycle(7));
    assert_eq!((ring.vertex_count, ring.edge_count()), (1, 1));
}

#[test]
fn subdivision_examples() {
    let tri = families::cycle(3);
    let one = subdivide(&SubdivisionScheme::uniform(tri.clone(), 1)).unwrap();
    assert_eq!(one.graph.edge_count(), 3);
    let two = subdivide(&SubdivisionScheme::uniform(tri, 2)).unwrap();
    assert_eq!((two.graph.vertex_count(), two.graph.edge_count()), (6, 6));
    assert!(two.graph.is_ring());
    let bow = families::bowtie();
    let counts: Vec<usize> = (1..=3)
        .map(|m| {
            subdivide(&SubdivisionScheme::uniform(bow.clone(), m))
                .unwrap()
                .graph
                .vertex_count()
        })
        .collect();
    assert_eq!(counts[1] - counts[0], counts[2] - counts[1]);
}

#[test]
fn lattice_examples() {
    let g = families::cycle(3);
    let check = cycle_basis_lattice_check(&fundamental_cycle_basis(&g, &[0, 1]).unwrap()).unwrap();
    assert!(check.unimodular);
    assert_eq!(check.divisors, vec![1]);
    let doubled = cycle_basis_lattice_check(&CycleBasis::unchecked(vec![vec![2, 2, 2]])).unwrap();
    assert!(!doubled.unimodular);
    assert_eq!(doubled.divisors, vec![2]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fundamental_bases_are_kernel_bases(seed in 0u64..10_000) {
        let g = random_graph(seed, 10);
        let b = incidence_matrix(&g);
        let basis = fundamental_cycle_basis(&g, &bfs_spanning_tree(&g)).unwrap();
        prop_assert_eq!(basis.len(), g.edge_count() - g.vertex_count() + 1);
        for row in basis.rows() {
            prop_assert!(b.apply(row).iter().all(|&x| x == 0));
        }
        prop_assert!(cycle_basis_lattice_check(&basis).unwrap().unimodular);
    }

    #[test]
    fn subdivision_keeps_cycle_rank(seed in 0u64..10_000, scale in 1usize..4) {
        let g = random_graph(seed, 8);
        let sub = subdivide(&SubdivisionScheme::uniform(g.clone(), scale)).unwrap();
        let basis = fundamental_cycle_basis(&sub.graph, &bfs_spanning_tree(&sub.graph)).unwrap();
        prop_assert_eq!(basis.len(), g.cycle_rank());
    }

    #[test]
    fn smoothing_is_idempotent(seed in 0u64..10_000) {
        let once = smooth_two_valent(&random_graph(seed, 10));
        prop_assert_eq!(once.smooth(), once);
    }

    #[test]
    fn bases_from_different_trees_are_unimodularly_related(seed in 0u64..10_000) {
        let g = random_graph(seed, 8);
        let SpanningTrees::List(list) = spanning_trees(&g, TreeMode::Enumerate { cap: 200_000 }).unwrap() else {
            unreachable!()
        };
        let other = &list[seed as usize % list.len()];
        let a = fundamental_cycle_basis(&g, &bfs_spanning_tree(&g)).unwrap();
        let b = fundamental_cycle_basis(&g, other).unwrap();
        let m = basis_change(&a, &b).expect("both bases span the same lattice");
        prop_assert_eq!(det_i64(&m).abs(), 1);
        // rows of b are the integer combinations m of rows of a
        for (i, row) in b.rows().iter().enumerate() {
            for e in 0..g.edge_count() {
                let combo: i64 = (0..a.len()).map(|j| m[i][j] * a.rows()[j][e]).sum();
                prop_assert_eq!(combo, row[e]);
            }
        }
    }
}
