use serde::{Deserialize, Serialize};

use crate::winding::ModelContext;

/// Integer box guaranteed to contain `W(A) ∩ Z^c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindingBox {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
    /// Real interval per component before rounding.
    pub real: Vec<(f64, f64)>,
}

impl WindingBox {
    /// Number of integer points, saturating.
    pub fn len(&self) -> u128 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| if h < l { 0 } else { (h - l + 1) as u128 })
            .fold(1u128, |acc, n| acc.saturating_mul(n))
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Integer points in lexicographic order, first coordinate slowest.
    pub fn points(&self) -> Vec<Vec<i64>> {
        if self.is_empty() {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(self.len() as usize);
        let mut cur = self.lo.clone();
        loop {
            out.push(cur.clone());
            let mut i = cur.len();
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if cur[i] < self.hi[i] {
                    cur[i] += 1;
                    cur[i + 1..].copy_from_slice(&self.lo[i + 1..]);
                    break;
                }
            }
        }
    }

    pub fn contains(&self, k: &[i64]) -> bool {
        k.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (l, h))| l <= x && x <= h)
    }
}

/// Component `i` ranges over `(1 / 2 pi) sum_e v_ie I_e`.
pub fn winding_bounds(ctx: &ModelContext) -> WindingBox {
    let tau = std::f64::consts::TAU;
    let mut real = Vec::with_capacity(ctx.dim());
    for row in ctx.basis().rows() {
        let (mut lo, mut hi) = (0.0, 0.0);
        for (e, &v) in row.iter().enumerate() {
            if v == 0 {
                continue;
            }
            let b = ctx.branch(e);
            let (a, c) = (v as f64 * b.lo(), v as f64 * b.hi());
            lo += a.min(c);
            hi += a.max(c);
        }
        real.push((lo / tau, hi / tau));
    }
    let lo = real
        .iter()
        .map(|&(l, _)| (l - 1e-9).ceil() as i64)
        .collect();
    let hi = real
        .iter()
        .map(|&(_, h)| (h + 1e-9).floor() as i64)
        .collect();
    WindingBox { lo, hi, real }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;
    use crate::winding::{Branch, BranchAssignment};

    #[test]
    fn ring_boxes() {
        let b = winding_bounds(&ModelContext::principal(families::cycle(5)).unwrap());
        assert!((b.real[0].0 + 1.25).abs() < 1e-12 && (b.real[0].1 - 1.25).abs() < 1e-12);
        assert_eq!(b.points(), vec![vec![-1], vec![0], vec![1]]);

        let reflected = BranchAssignment::uniform(Branch::REFLECTED, 4);
        let b =
            winding_bounds(&ModelContext::with_branches(families::cycle(4), reflected).unwrap());
        assert!((0.5 * (b.real[0].0 + b.real[0].1) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lexicographic_points() {
        let b = WindingBox {
            lo: vec![0, -1],
            hi: vec![1, 0],
            real: vec![],
        };
        assert_eq!(
            b.points(),
            vec![vec![0, -1], vec![0, 0], vec![1, -1], vec![1, 0]]
        );
        assert_eq!(b.len(), 4);
    }
}
