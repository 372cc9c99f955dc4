#![allow(clippy::needless_range_loop)]

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use kuramoto_topo::enumeration::{enumerate_with, EnumerateOptions};
use kuramoto_topo::families;
use kuramoto_topo::graph::{smooth_two_valent, CycleBasis, WeightedGraph};
use kuramoto_topo::winding::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_graph(seed: u64, max_vertices: usize) -> WeightedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 3 + (seed as usize % (max_vertices - 2));
    families::random_bridgeless(&mut rng, n, 1 + seed as usize % 3)
}

fn random_weights(g: &WeightedGraph, rng: &mut ChaCha8Rng) -> WeightedGraph {
    let w: Vec<f64> = (0..g.edge_count())
        .map(|_| rng.gen_range(0.5..2.0))
        .collect();
    g.with_weights(&w).unwrap()
}

/// A point of `A` with every `|L_e|` at most `1 - margin`, by rejection.
fn interior_point(ctx: &ModelContext, rng: &mut ChaCha8Rng, margin: f64) -> Option<Vec<f64>> {
    let bbox = ctx.polytope().bbox.clone()?;
    for _ in 0..10_000 {
        let alpha: Vec<f64> = bbox
            .iter()
            .map(|(lo, hi)| rng.gen_range(*lo..=*hi))
            .collect();
        if ctx.l_values(&alpha).iter().all(|l| l.abs() <= 1.0 - margin) {
            return Some(alpha);
        }
    }
    None
}

/// Random element of SL_c(Z) as a product of elementary shears.
fn random_unimodular(c: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<i64>> {
    let mut m: Vec<Vec<i64>> = (0..c)
        .map(|i| (0..c).map(|j| i64::from(i == j)).collect())
        .collect();
    if c < 2 {
        return m;
    }
    for _ in 0..4 {
        let i = rng.gen_range(0..c);
        let j = (i + rng.gen_range(1..c)) % c;
        let k = rng.gen_range(-1i64..=1);
        for col in 0..c {
            let add = k * m[j][col];
            m[i][col] += add;
        }
    }
    m
}

#[test]
fn branch_examples() {
    assert_eq!(Branch::PRINCIPAL.inverse(0.0).unwrap(), 0.0);
    assert!((Branch::REFLECTED.inverse(0.0).unwrap() - PI).abs() < 1e-15);
    assert_eq!(Branch::PRINCIPAL.inverse(1.0).unwrap(), FRAC_PI_2);
    assert!(Branch::PRINCIPAL.inverse(1.5).is_err());
    assert!(Branch::new(0.0, PI).is_err());
}

#[test]
fn l_examples() {
    let g = families::three_loop_chain();
    let basis = CycleBasis::from_rows(
        &g,
        vec![
            vec![1, 1, 1, 0, 0, 0, 0, 0],
            vec![0, 0, 1, 1, 1, 0, 0, 0],
            vec![0, 0, 0, 0, 0, 1, 1, 1],
        ],
    )
    .unwrap();
    let ctx = ModelContext::builder(g).basis(basis).build().unwrap();
    assert_eq!(l_map(&ctx, &[0.0; 3]).unwrap(), vec![0.0; 8]);
    let (a, b, c) = (0.1, -0.3, 0.7);
    assert_eq!(
        l_map(&ctx, &[a, b, c]).unwrap(),
        vec![a, a, a + b, b, b, c, c, c]
    );

    let g = families::cycle_weighted(&[2.0, 1.0, 1.0]);
    let basis = CycleBasis::from_rows(&g, vec![vec![1, 1, 1]]).unwrap();
    let ctx = ModelContext::builder(g).basis(basis).build().unwrap();
    assert_eq!(l_map(&ctx, &[1.0]).unwrap(), vec![0.5, 1.0, 1.0]);
}

#[test]
fn polytope_examples() {
    // theta graph with v1 = arm1 - arm2, v2 = arm3 - arm1
    let g = families::theta([1, 2, 2]);
    let basis =
        CycleBasis::from_rows(&g, vec![vec![1, -1, -1, 0, 0], vec![-1, 0, 0, 1, 1]]).unwrap();
    let ctx = ModelContext::builder(g).basis(basis).build().unwrap();
    let a = polytope_a(&ctx);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..2000 {
        let p: [f64; 2] = [rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)];
        let inside = p[0].abs() <= 1.0 && p[1].abs() <= 1.0 && (p[0] - p[1]).abs() <= 1.0;
        let margin = [
            1.0 - p[0].abs(),
            1.0 - p[1].abs(),
            1.0 - (p[0] - p[1]).abs(),
        ]
        .iter()
        .map(|m: &f64| m.abs())
        .fold(1.0, f64::min);
        if margin > 1e-9 {
            assert_eq!(a.contains(&p, 0.0), inside, "{p:?}");
        }
    }
    assert_eq!(count_faces(a).unwrap(), 6);

    let ring = ModelContext::principal(families::cycle_weighted(&[2.0, 0.7, 1.5, 3.0])).unwrap();
    let bbox = ring.polytope().bbox.clone().unwrap();
    assert!((bbox[0].0 + 0.7).abs() < 1e-12 && (bbox[0].1 - 0.7).abs() < 1e-12);
    let tri = ModelContext::principal(families::cycle(3)).unwrap();
    assert_eq!(tri.polytope().bbox.clone().unwrap(), vec![(-1.0, 1.0)]);
}

#[test]
fn face_examples() {
    let faces =
        |g: WeightedGraph| count_faces(polytope_a(&ModelContext::principal(g).unwrap())).unwrap();
    assert_eq!(faces(families::three_loop_chain()), 8);
    assert_eq!(faces(families::cycle(3)), 2);
    let g = families::expanded_diamond();
    let basis = families::expanded_diamond_basis(&g);
    let ctx = ModelContext::builder(g).basis(basis).build().unwrap();
    assert_eq!(count_faces(polytope_a(&ctx)).unwrap(), 6);
}

/// Edges with the same `L_e` up to sign, for unit weights.
fn edge_classes(ctx: &ModelContext) -> usize {
    let mut classes: Vec<&Vec<f64>> = Vec::new();
    for row in ctx.coeff() {
        let neg: Vec<f64> = row.iter().map(|x| -x).collect();
        if !classes.iter().any(|c| *c == row || **c == neg) {
            classes.push(row);
        }
    }
    classes.len()
}

#[test]
fn two_edge_cut_shares_faces() {
    // two triangles joined by two rungs: the rungs form a 2-edge cut
    let g = WeightedGraph::with_numbered_vertices(
        6,
        [
            (0, 1, 1.0),
            (1, 2, 1.0),
            (2, 0, 1.0),
            (3, 4, 1.0),
            (4, 5, 1.0),
            (5, 3, 1.0),
            (0, 3, 1.0),
            (1, 4, 1.0),
        ],
    )
    .unwrap();
    assert_eq!(smooth_two_valent(&g).edge_count(), 6);
    let ctx = ModelContext::principal(g).unwrap();
    assert_eq!(edge_classes(&ctx), 5);
    assert_eq!(count_faces(polytope_a(&ctx)).unwrap(), 10);
}

#[test]
fn w_examples() {
    let ctx = ModelContext::principal(families::cycle(3)).unwrap();
    assert_eq!(w_map(&ctx, &[0.0]).unwrap(), vec![0.0]);
    for n in [3usize, 5, 8] {
        let ctx = ModelContext::principal(families::cycle(n)).unwrap();
        let sign = f64::from(ctx.basis().rows()[0][0] as i32);
        for a in [-0.9, -0.2, 0.4, 0.99] {
            let w = w_map(&ctx, &[a]).unwrap()[0];
            assert!((w - n as f64 / TAU * a.asin()).abs() < 1e-13, "{n} {a}");
            let j = w_jacobian(&ctx, &[a]).unwrap()[(0, 0)];
            assert!((j - n as f64 / (TAU * (1.0 - a * a).sqrt())).abs() < 1e-12);
        }
        assert_eq!(sign.abs(), 1.0);
    }
    let g = families::expanded_diamond();
    let basis = families::expanded_diamond_basis(&g);
    let ctx = ModelContext::builder(g).basis(basis).build().unwrap();
    let w = w_map(&ctx, &[0.994148, -0.779356]).unwrap();
    assert!(
        (w[0] - 2.0).abs() < 1e-5 && (w[1] + 1.0).abs() < 1e-5,
        "{w:?}"
    );
}

#[test]
fn det_formula_examples() {
    let tri = ModelContext::principal(families::cycle(3)).unwrap();
    let direct = w_jacobian(&tri, &[0.0]).unwrap().determinant();
    assert!((det_tree_formula(&tri, &[0.0]).unwrap() - direct).abs() < 1e-10);
    let g = families::expanded_diamond();
    let basis = families::expanded_diamond_basis(&g);
    let ctx = ModelContext::builder(g).basis(basis).build().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let a = interior_point(&ctx, &mut rng, 1e-3).unwrap();
        let direct = w_jacobian(&ctx, &a).unwrap().determinant();
        assert!((det_tree_formula(&ctx, &a).unwrap() - direct).abs() <= 1e-8 * direct.abs());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn branch_round_trip(y in -1.0f64..=1.0, lo in -3.0f64..3.0, width in 0.05f64..1.0) {
        for b in [Branch::PRINCIPAL, Branch::REFLECTED] {
            prop_assert!((b.inverse(y).unwrap().sin() - y).abs() <= 1e-12);
        }
        // a partial branch inside the monotone piece containing lo
        let piece = ((lo + FRAC_PI_2) / PI).floor();
        let start = piece * PI - FRAC_PI_2;
        let a = start + (lo - start) * (1.0 - width);
        let b = Branch::new(a, a + width * (start + PI - a)).unwrap();
        let (s0, s1) = b.sin_range();
        let z = s0 + (s1 - s0) * (y + 1.0) / 2.0;
        let x = b.inverse(z).unwrap();
        prop_assert!((x.sin() - z).abs() <= 1e-12);
        prop_assert!(b.contains_angle(x, 1e-12));
    }

    #[test]
    fn faces_are_twice_the_edge_classes(seed in 0u64..100_000) {
        let g = random_graph(seed, 10);
        let smoothed = smooth_two_valent(&g).edge_count();
        let ctx = ModelContext::principal(g).unwrap();
        let faces = count_faces(polytope_a(&ctx)).unwrap();
        let classes = edge_classes(&ctx);
        prop_assert_eq!(faces, 2 * classes);
        // smoothing merges series pairs only, so it can leave extra classes
        prop_assert!(classes <= smoothed);
        if classes == smoothed {
            prop_assert_eq!(faces, 2 * smoothed);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences(seed in 0u64..100_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_weights(&random_graph(seed, 7), &mut rng);
        let branches = BranchAssignment::from_mask(rng.gen::<u64>(), g.edge_count());
        let ctx = ModelContext::with_branches(g, branches).unwrap();
        let Some(alpha) = interior_point(&ctx, &mut rng, 0.05) else { return Ok(()) };
        let c = ctx.dim();
        let delta: Vec<f64> = (0..c).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let h = 1e-5;
        let shift = |s: f64| -> Vec<f64> { alpha.iter().zip(&delta).map(|(a, d)| a + s * h * d).collect() };
        let (wp, wm) = (w_map(&ctx, &shift(1.0)).unwrap(), w_map(&ctx, &shift(-1.0)).unwrap());
        let j = w_jacobian(&ctx, &alpha).unwrap();
        prop_assert_eq!(j.clone(), j.transpose());
        for i in 0..c {
            let fd = (wp[i] - wm[i]) / (2.0 * h);
            let an: f64 = (0..c).map(|k| j[(i, k)] * delta[k]).sum();
            prop_assert!((fd - an).abs() <= 1e-6, "{} vs {}", fd, an);
        }
    }

    #[test]
    fn principal_jacobian_is_positive_definite(seed in 0u64..100_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_weights(&random_graph(seed, 8), &mut rng);
        let ctx = ModelContext::principal(g).unwrap();
        let Some(alpha) = interior_point(&ctx, &mut rng, 1e-4) else { return Ok(()) };
        let eig = w_jacobian(&ctx, &alpha).unwrap().symmetric_eigen().eigenvalues;
        prop_assert!(eig.min() > 0.0);
    }

    #[test]
    fn tree_formula_matches_determinant(seed in 0u64..100_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_weights(&random_graph(seed, 7), &mut rng);
        let branches = BranchAssignment::from_mask(rng.gen::<u64>(), g.edge_count());
        let ctx = ModelContext::with_branches(g, branches).unwrap();
        let Some(alpha) = interior_point(&ctx, &mut rng, 1e-3) else { return Ok(()) };
        let direct = w_jacobian(&ctx, &alpha).unwrap().determinant();
        let trees = det_tree_formula(&ctx, &alpha).unwrap();
        let scale = ctx.jacobian_from_factors(&ctx.edge_factors(&ctx.l_values(&alpha), 0.0).iter().map(|d| d.abs()).collect::<Vec<_>>()).determinant();
        prop_assert!((trees - direct).abs() <= 1e-8 * scale.abs().max(direct.abs()), "{} vs {}", trees, direct);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn unimodular_basis_change_is_covariant(seed in 0u64..100_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(seed, 5);
        prop_assume!(g.cycle_rank() <= 3);
        let ctx = ModelContext::principal(g.clone()).unwrap();
        let m = random_unimodular(ctx.dim(), &mut rng);
        let basis = ctx.basis().transformed(&g, &m).unwrap();
        let moved = ModelContext::builder(g).basis(basis).build().unwrap();
        // alpha' in A' exactly when M^T alpha' in A, and W'(alpha') = M W(M^T alpha')
        let c = ctx.dim();
        for _ in 0..5 {
            let Some(ap) = interior_point(&moved, &mut rng, 1e-3) else { break };
            let a: Vec<f64> = (0..c).map(|j| (0..c).map(|i| m[i][j] as f64 * ap[i]).sum()).collect();
            prop_assert!(ctx.polytope().contains(&a, 1e-9));
            let (w, wp) = (w_map(&ctx, &a).unwrap(), w_map(&moved, &ap).unwrap());
            for i in 0..c {
                let mw: f64 = (0..c).map(|j| m[i][j] as f64 * w[j]).sum();
                prop_assert!((mw - wp[i]).abs() < 1e-9);
            }
        }
        let opts = EnumerateOptions { max_dim: 3, ..Default::default() };
        let n0 = enumerate_with(&ctx, &opts).unwrap().states.len();
        let n1 = enumerate_with(&moved, &opts).unwrap().states.len();
        prop_assert_eq!(n0, n1);
    }
}
