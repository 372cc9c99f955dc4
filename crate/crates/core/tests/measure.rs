use std::f64::consts::PI;

use kuramoto_topo::families;
use kuramoto_topo::graph::{
    fundamental_cycle_basis, spanning_trees, SpanningTrees, TreeMode, WeightedGraph,
};
use kuramoto_topo::measure::*;
use kuramoto_topo::winding::{det_tree_formula, BranchAssignment, ModelContext};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn interior_point(ctx: &ModelContext, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let bbox = ctx.polytope().bbox.clone().unwrap();
    loop {
        let a: Vec<f64> = bbox
            .iter()
            .map(|(lo, hi)| rng.gen_range(*lo..*hi))
            .collect();
        if ctx
            .polytope()
            .constraints
            .iter()
            .all(|h| h.slack(&a) > 1e-3)
        {
            return a;
        }
    }
}

/// Vertices of the polygon `A` in counter-clockwise order.
fn polygon(ctx: &ModelContext) -> Vec<[f64; 2]> {
    let hs: Vec<_> = ctx.polytope().facets().cloned().collect();
    let mut pts: Vec<[f64; 2]> = Vec::new();
    for i in 0..hs.len() {
        for j in i + 1..hs.len() {
            let (a, b) = (&hs[i], &hs[j]);
            let det = a.normal[0] * b.normal[1] - a.normal[1] * b.normal[0];
            if det.abs() < 1e-12 {
                continue;
            }
            let p = [
                (a.bound * b.normal[1] - b.bound * a.normal[1]) / det,
                (a.normal[0] * b.bound - b.normal[0] * a.bound) / det,
            ];
            let inside = ctx
                .polytope()
                .constraints
                .iter()
                .all(|h| h.slack(&p) > -1e-9);
            if inside && !pts.iter().any(|q| (q[0] - p[0]).hypot(q[1] - p[1]) < 1e-9) {
                pts.push(p);
            }
        }
    }
    let cx = pts.iter().map(|p| p[0]).sum::<f64>() / pts.len() as f64;
    let cy = pts.iter().map(|p| p[1]).sum::<f64>() / pts.len() as f64;
    pts.sort_by(|p, q| {
        (p[1] - cy)
            .atan2(p[0] - cx)
            .total_cmp(&(q[1] - cy).atan2(q[0] - cx))
    });
    pts
}

/// Area of `W(A)` for `c = 2` from the image of the boundary of `A`
/// (shoelace along each mapped side, with nodes clustered at the corners).
fn boundary_area(ctx: &ModelContext, per_side: usize) -> f64 {
    let verts = polygon(ctx);
    let mut curve = Vec::new();
    for (i, p) in verts.iter().enumerate() {
        let q = verts[(i + 1) % verts.len()];
        for k in 0..per_side {
            let t = 0.5 - 0.5 * (PI * k as f64 / per_side as f64).cos();
            let a = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
            curve.push(ctx.w_pinned(&a, 1e-12));
        }
    }
    let n = curve.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let (a, b) = (&curve[i], &curve[(i + 1) % n]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum();
    twice.abs() / 2.0
}

fn quad(tol: f64) -> VolumeOptions {
    VolumeOptions {
        tol,
        ..Default::default()
    }
}

fn c2_examples() -> Vec<ModelContext> {
    let weighted = families::theta([1, 2, 2])
        .with_weights(&[1.0, 2.0, 0.7, 1.3, 1.0])
        .unwrap();
    let mixed = families::theta([2, 1, 2])
        .with_weights(&[1.0, -1.5, 1.0, 1.0, 0.8])
        .unwrap();
    let signs =
        BranchAssignment::weight_signs(&mixed.edges().iter().map(|e| e.weight).collect::<Vec<_>>());
    vec![
        ModelContext::principal(families::theta([2, 2, 2])).unwrap(),
        ModelContext::principal(weighted).unwrap(),
        ModelContext::with_branches(mixed, signs).unwrap(),
        ModelContext::with_branches(
            families::theta([1, 2, 3]),
            BranchAssignment::from_letters("PRPPRP").unwrap(),
        )
        .unwrap(),
        ModelContext::principal(families::bowtie()).unwrap(),
    ]
}

#[test]
fn integrand_matches_the_tree_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for ctx in c2_examples()
        .into_iter()
        .chain([ModelContext::principal(families::complete(4)).unwrap()])
    {
        for _ in 0..20 {
            let a = interior_point(&ctx, &mut rng);
            let direct = det_integrand(&ctx, &a);
            let trees = det_tree_formula(&ctx, &a).unwrap().abs();
            assert!(
                (direct - trees).abs() <= 1e-10 * trees,
                "{direct} vs {trees}"
            );
        }
    }
}

#[test]
fn two_dimensional_volumes_match_the_boundary_area() {
    for ctx in c2_examples() {
        let vol = volume_w(&ctx, &quad(1e-9)).unwrap();
        let area = boundary_area(&ctx, 20_000);
        assert!(
            (vol.value - area).abs() < 1e-6 * area,
            "{} vs {area}",
            vol.value
        );
    }
}

#[test]
fn bowtie_volume_is_a_product() {
    let bow = volume_w(
        &ModelContext::principal(families::bowtie()).unwrap(),
        &quad(1e-9),
    )
    .unwrap();
    let tri = volume_w(
        &ModelContext::principal(families::cycle(3)).unwrap(),
        &quad(1e-9),
    )
    .unwrap();
    assert!((bow.value - tri.value * tri.value).abs() < 1e-8);
    assert!((tri.value - 1.5).abs() < 1e-9);
}

#[test]
fn two_cycle_volume_ignores_the_weight_and_the_tree() {
    let g = families::theta([2, 1, 3]);
    let closed = two_cycle_closed_form(&g, 1.0).unwrap();
    for gamma in [1.0, 0.4, 2.5] {
        let ctx =
            ModelContext::principal(g.with_weights(&vec![gamma; g.edge_count()]).unwrap()).unwrap();
        let vol = volume_w(&ctx, &quad(1e-9)).unwrap();
        assert!(
            (vol.value - closed).abs() < 1e-7 * closed,
            "gamma {gamma}: {} vs {closed}",
            vol.value
        );
        let bounds = tree_bounds(&ctx, &quad(1e-8)).unwrap();
        assert!(bounds.max - bounds.min < 1e-6 * bounds.max);
        assert!((bounds.lower - closed).abs() < 1e-6 * closed);
    }
    // I_T over a unit two-cycle graph is the bracket constant
    let unit = ModelContext::principal(families::theta([1, 2, 2])).unwrap();
    let SpanningTrees::List(trees) =
        spanning_trees(unit.graph(), TreeMode::Enumerate { cap: 100 }).unwrap()
    else {
        unreachable!()
    };
    let t = tree_integral(&unit, &trees[0], &quad(1e-9)).unwrap();
    assert!((t.value - bracket_constant()).abs() < 1e-7);
}

#[test]
fn sandwich_bounds_hold() {
    for g in [
        families::complete(4),
        families::three_loop_chain(),
        families::theta([1, 2, 2]),
    ] {
        let ctx = ModelContext::principal(g).unwrap();
        let vol = volume_w(&ctx, &quad(1e-7)).unwrap();
        let b = tree_bounds(&ctx, &quad(1e-7)).unwrap();
        let slack = 1e-6 * vol.value;
        assert!(
            b.lower <= vol.value + slack && vol.value <= b.upper + slack,
            "{} not in [{}, {}]",
            vol.value,
            b.lower,
            b.upper
        );
    }
    let weighted = families::cycle(3).with_weights(&[1.0, 2.0, 1.0]).unwrap();
    assert!(tree_bounds(&ModelContext::principal(weighted).unwrap(), &quad(1e-7)).is_err());
}

#[test]
fn monte_carlo_agrees_and_is_reproducible() {
    let ctx = ModelContext::principal(families::complete(4)).unwrap();
    let q = volume_w(&ctx, &quad(1e-7)).unwrap();
    let a = volume_w(&ctx, &VolumeOptions::monte_carlo(400_000, 11)).unwrap();
    let b = volume_w(&ctx, &VolumeOptions::monte_carlo(400_000, 11)).unwrap();
    let c = volume_w(&ctx, &VolumeOptions::monte_carlo(400_000, 12)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.value, c.value);
    assert_eq!(
        (a.method, a.seed, a.samples_or_cells),
        (VolumeMethod::MonteCarlo, Some(11), 400_000)
    );
    assert!(
        (a.value - q.value).abs() < 5.0 * a.abs_error,
        "{} +- {} vs {}",
        a.value,
        a.abs_error,
        q.value
    );
}

#[test]
fn quadrature_refuses_high_dimension() {
    let g = families::complete(5);
    let ctx = ModelContext::principal(g).unwrap();
    assert!(matches!(
        volume_w(&ctx, &quad(1e-6)),
        Err(MeasureError::QuadratureDim { .. })
    ));
}

#[test]
fn unit_rates_target_is_the_volume() {
    let ctx = ModelContext::principal(families::theta([1, 2, 3])).unwrap();
    let rows = weyl_experiment(
        &ctx,
        &vec![1.0; ctx.edge_count()],
        &[1, 2],
        &WeylOptions::default(),
    )
    .unwrap();
    let vol = volume_w(&ctx, &quad(1e-6)).unwrap();
    assert!((rows[0].target - vol.value).abs() < 1e-6);
    // M = 1 is the base graph itself
    let direct = kuramoto_topo::enumeration::enumerate_states(&ctx)
        .unwrap()
        .states
        .len() as u64;
    assert_eq!(rows[0].lattice_count, direct);
}

#[test]
fn weyl_counts_do_not_depend_on_the_basis() {
    let g: WeightedGraph = families::theta([1, 2, 2]);
    let SpanningTrees::List(trees) = spanning_trees(&g, TreeMode::Enumerate { cap: 1000 }).unwrap()
    else {
        unreachable!()
    };
    let rates = vec![1.0, 2.0, 1.0, 1.0, 1.0];
    let mut counts = Vec::new();
    for t in [&trees[0], trees.last().unwrap()] {
        let basis = fundamental_cycle_basis(&g, t).unwrap();
        let ctx = ModelContext::builder(g.clone())
            .basis(basis)
            .build()
            .unwrap();
        let rows = weyl_experiment(&ctx, &rates, &[2, 3], &WeylOptions::default()).unwrap();
        counts.push(rows.iter().map(|r| r.lattice_count).collect::<Vec<_>>());
        assert!(rows.iter().all(|r| r.solver_failures == 0));
    }
    assert_eq!(counts[0], counts[1]);
}
