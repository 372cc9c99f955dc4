use nalgebra::DMatrix;

use super::{ModelContext, WindingError, BOUNDARY_TOL, DOMAIN_TOL};

fn check_dim(ctx: &ModelContext, alpha: &[f64]) -> Result<(), WindingError> {
    if alpha.len() != ctx.dim() {
        return Err(WindingError::Dimension {
            expected: ctx.dim(),
            got: alpha.len(),
        });
    }
    Ok(())
}

/// Edge values of `L(alpha)`, each checked against `sin(I_e)`.
fn checked_l(ctx: &ModelContext, alpha: &[f64]) -> Result<Vec<f64>, WindingError> {
    check_dim(ctx, alpha)?;
    let l = ctx.l_values(alpha);
    for (e, (&y, &(lo, hi))) in l.iter().zip(ctx.ranges()).enumerate() {
        if y < lo - DOMAIN_TOL || y > hi + DOMAIN_TOL {
            return Err(WindingError::OutsideA {
                edge: e,
                value: y,
                lo,
                hi,
            });
        }
    }
    Ok(l)
}

pub fn l_map(ctx: &ModelContext, alpha: &[f64]) -> Result<Vec<f64>, WindingError> {
    check_dim(ctx, alpha)?;
    Ok(ctx.l_values(alpha))
}

pub fn w_map(ctx: &ModelContext, alpha: &[f64]) -> Result<Vec<f64>, WindingError> {
    let l = checked_l(ctx, alpha)?;
    let x: Vec<f64> = l
        .iter()
        .enumerate()
        .map(|(e, &y)| ctx.branch(e).inverse_clamped(y))
        .collect();
    Ok(ctx.pair_with_basis(&x))
}

fn interior_factors(ctx: &ModelContext, alpha: &[f64]) -> Result<Vec<f64>, WindingError> {
    let l = checked_l(ctx, alpha)?;
    if let Some((edge, &value)) = l
        .iter()
        .enumerate()
        .find(|(_, y)| 1.0 - y.abs() < BOUNDARY_TOL)
    {
        return Err(WindingError::NearBoundary {
            edge,
            value,
            tol: BOUNDARY_TOL,
        });
    }
    Ok(ctx.edge_factors(&l, 0.0))
}

pub fn w_jacobian(ctx: &ModelContext, alpha: &[f64]) -> Result<DMatrix<f64>, WindingError> {
    Ok(ctx.jacobian_from_factors(&interior_factors(ctx, alpha)?))
}

/// `det W'` as a signed sum over spanning trees of the co-tree factor
/// products, times `(1 / 2 pi)^c`.
pub fn det_tree_formula(ctx: &ModelContext, alpha: &[f64]) -> Result<f64, WindingError> {
    let d = interior_factors(ctx, alpha)?;
    let trees = ctx.spanning_tree_list()?;
    let m = ctx.edge_count();
    let mut in_tree = vec![false; m];
    let mut total = 0.0;
    for t in trees {
        t.iter().for_each(|&e| in_tree[e] = true);
        total += (0..m)
            .filter(|&e| !in_tree[e])
            .map(|e| d[e])
            .product::<f64>();
        t.iter().for_each(|&e| in_tree[e] = false);
    }
    Ok(total * std::f64::consts::TAU.powi(-(ctx.dim() as i32)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;
    use crate::graph::CycleBasis;
    use crate::winding::{Branch, BranchAssignment};
    use std::f64::consts::PI;

    #[test]
    fn three_loop_l() {
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
        let (a, b, c) = (0.1, -0.2, 0.3);
        let l = l_map(&ctx, &[a, b, c]).unwrap();
        let want = [a, a, a + b, b, b, c, c, c];
        assert!(l.iter().zip(want).all(|(x, y)| (x - y).abs() < 1e-15));
    }

    #[test]
    fn weighted_triangle_l() {
        let ctx = ModelContext::principal(families::cycle_weighted(&[2.0, 1.0, 1.0])).unwrap();
        assert_eq!(l_map(&ctx, &[1.0]).unwrap(), vec![0.5, 1.0, 1.0]);
        assert_eq!(l_map(&ctx, &[0.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn ring_winding_and_jacobian() {
        let n = 7;
        let ctx = ModelContext::principal(families::cycle(n)).unwrap();
        for a in [-0.9, -0.3, 0.0, 0.5, 0.99] {
            let w = w_map(&ctx, &[a]).unwrap()[0];
            assert!((w - n as f64 / (2.0 * PI) * f64::asin(a)).abs() < 1e-14);
            let j = w_jacobian(&ctx, &[a]).unwrap()[(0, 0)];
            assert!((j - n as f64 / (2.0 * PI * (1.0 - a * a).sqrt())).abs() < 1e-12);
        }
        assert!(matches!(
            w_map(&ctx, &[1.1]),
            Err(WindingError::OutsideA { .. })
        ));
        assert!(matches!(
            w_jacobian(&ctx, &[1.0]),
            Err(WindingError::NearBoundary { .. })
        ));
    }

    #[test]
    fn tree_formula_on_the_triangle() {
        let ctx = ModelContext::principal(families::cycle(3)).unwrap();
        let direct = w_jacobian(&ctx, &[0.0]).unwrap().determinant();
        assert!((det_tree_formula(&ctx, &[0.0]).unwrap() - direct).abs() < 1e-10);
        let mixed = ModelContext::with_branches(
            families::cycle(3),
            BranchAssignment::from_letters("PRP").unwrap(),
        )
        .unwrap();
        let direct = w_jacobian(&mixed, &[0.4]).unwrap().determinant();
        assert!((det_tree_formula(&mixed, &[0.4]).unwrap() - direct).abs() < 1e-12);
        assert_eq!(mixed.branch(1), &Branch::REFLECTED);
    }
}
