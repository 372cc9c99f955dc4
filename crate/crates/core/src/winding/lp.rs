//! Dense two-phase simplex with Bland's rule, generic over the scalar so the
//! same code runs in `f64` and in exact rationals.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub trait LpScalar:
    Clone
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Pivot and sign threshold; zero for exact arithmetic.
    fn eps() -> Self;
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;

    fn is_pos(&self) -> bool {
        *self > Self::eps()
    }

    fn is_neg(&self) -> bool {
        *self < -Self::eps()
    }
}

impl LpScalar for f64 {
    fn eps() -> Self {
        1e-11
    }

    fn from_f64(x: f64) -> Self {
        x
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl LpScalar for BigRational {
    fn eps() -> Self {
        BigRational::zero()
    }

    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).unwrap_or_else(|| BigRational::from_integer(BigInt::zero()))
    }

    fn to_f64(&self) -> f64 {
        let (n, d) = (self.numer(), self.denom());
        match (n.to_f64(), d.to_f64()) {
            (Some(a), Some(b)) if a.is_finite() && b.is_finite() => a / b,
            _ => {
                // scale down huge numerators and denominators together
                let shift = n.bits().max(d.bits()).saturating_sub(1000);
                let a = (n.abs() >> shift).to_f64().unwrap_or(f64::MAX);
                let b = (d >> shift).to_f64().unwrap_or(f64::MAX);
                if n.is_negative() {
                    -a / b
                } else {
                    a / b
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<T> {
    Optimal { value: T, point: Vec<T> },
    Infeasible,
    Unbounded,
}

impl<T: LpScalar> LpOutcome<T> {
    pub fn value_f64(&self) -> Option<f64> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(value.to_f64()),
            _ => None,
        }
    }
}

/// Maximise `c . y` subject to `rows[i] . y <= rhs[i]`, `y` free.
pub fn maximize<T: LpScalar>(c: &[T], rows: &[Vec<T>], rhs: &[T]) -> LpOutcome<T> {
    let d = c.len();
    let m = rows.len();
    // columns: y+ (d), y- (d), slack (m), artificial (one per negative rhs)
    let negative: Vec<usize> = (0..m).filter(|&i| rhs[i].is_neg()).collect();
    let n_art = negative.len();
    let ncols = 2 * d + m + n_art;
    let mut tab: Vec<Vec<T>> = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut art_col = 2 * d + m;
    for i in 0..m {
        let flip = rhs[i].is_neg();
        let sign = |x: T| if flip { -x } else { x };
        let mut row = vec![T::zero(); ncols + 1];
        for j in 0..d {
            row[j] = sign(rows[i][j].clone());
            row[d + j] = sign(-rows[i][j].clone());
        }
        row[2 * d + i] = sign(T::one());
        row[ncols] = sign(rhs[i].clone());
        if flip {
            row[art_col] = T::one();
            basis.push(art_col);
            art_col += 1;
        } else {
            basis.push(2 * d + i);
        }
        tab.push(row);
    }

    if n_art > 0 {
        // phase one: maximise -(sum of artificials)
        let mut obj = vec![T::zero(); ncols + 1];
        for j in 2 * d + m..ncols {
            obj[j] = -T::one();
        }
        price_out(&mut obj, &tab, &basis);
        if run_simplex(&mut tab, &mut obj, &mut basis, ncols, ncols) == Status::Unbounded {
            return LpOutcome::Infeasible;
        }
        if obj[ncols].is_pos() || obj[ncols].is_neg() {
            return LpOutcome::Infeasible;
        }
        // drive remaining zero-level artificials out of the basis
        for r in 0..m {
            if basis[r] >= 2 * d + m {
                if let Some(col) =
                    (0..2 * d + m).find(|&j| tab[r][j].is_pos() || tab[r][j].is_neg())
                {
                    pivot(&mut tab, &mut obj, &mut basis, r, col);
                }
            }
        }
    }

    let mut obj = vec![T::zero(); ncols + 1];
    for j in 0..d {
        obj[j] = c[j].clone();
        obj[d + j] = -c[j].clone();
    }
    price_out(&mut obj, &tab, &basis);
    // artificial columns may not re-enter
    if run_simplex(&mut tab, &mut obj, &mut basis, ncols, 2 * d + m) == Status::Unbounded {
        return LpOutcome::Unbounded;
    }
    let mut point = vec![T::zero(); d];
    for (r, &b) in basis.iter().enumerate() {
        if b < d {
            point[b] = point[b].clone() + tab[r][ncols].clone();
        } else if b < 2 * d {
            point[b - d] = point[b - d].clone() - tab[r][ncols].clone();
        }
    }
    let value = c
        .iter()
        .zip(&point)
        .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone());
    LpOutcome::Optimal { value, point }
}

#[derive(Debug, PartialEq, Eq)]
enum Status {
    Optimal,
    Unbounded,
}

/// Objective row holds reduced costs `c_j - c_B B^-1 A_j`; its last entry is
/// minus the current objective value.
fn price_out<T: LpScalar>(obj: &mut [T], tab: &[Vec<T>], basis: &[usize]) {
    for (r, &b) in basis.iter().enumerate() {
        let coef = obj[b].clone();
        if coef.is_pos() || coef.is_neg() {
            for (o, t) in obj.iter_mut().zip(&tab[r]) {
                *o = o.clone() - coef.clone() * t.clone();
            }
        }
    }
}

fn run_simplex<T: LpScalar>(
    tab: &mut [Vec<T>],
    obj: &mut [T],
    basis: &mut [usize],
    ncols: usize,
    enter_limit: usize,
) -> Status {
    let max_iter = 50 * (tab.len() + ncols) + 1000;
    for _ in 0..max_iter {
        // Bland: smallest index with positive reduced cost
        let Some(col) = (0..enter_limit).find(|&j| obj[j].is_pos()) else {
            return Status::Optimal;
        };
        let mut best: Option<(usize, T)> = None;
        for r in 0..tab.len() {
            if tab[r][col].is_pos() {
                let ratio = tab[r][ncols].clone() / tab[r][col].clone();
                let better = match &best {
                    None => true,
                    Some((br, bv)) => ratio < *bv || (!(ratio > *bv) && basis[r] < basis[*br]),
                };
                if better {
                    best = Some((r, ratio));
                }
            }
        }
        let Some((row, _)) = best else {
            return Status::Unbounded;
        };
        pivot(tab, obj, basis, row, col);
    }
    Status::Optimal
}

fn pivot<T: LpScalar>(
    tab: &mut [Vec<T>],
    obj: &mut [T],
    basis: &mut [usize],
    row: usize,
    col: usize,
) {
    let p = tab[row][col].clone();
    for x in tab[row].iter_mut() {
        *x = x.clone() / p.clone();
    }
    let pivot_row = tab[row].clone();
    for (r, line) in tab.iter_mut().enumerate() {
        if r != row {
            let f = line[col].clone();
            if !f.is_zero() {
                for (x, y) in line.iter_mut().zip(&pivot_row) {
                    *x = x.clone() - f.clone() * y.clone();
                }
            }
        }
    }
    let f = obj[col].clone();
    if !f.is_zero() {
        for (x, y) in obj.iter_mut().zip(&pivot_row) {
            *x = x.clone() - f.clone() * y.clone();
        }
    }
    basis[row] = col;
}

pub fn to_rational(rows: &[Vec<f64>]) -> Vec<Vec<BigRational>> {
    rows.iter()
        .map(|r| r.iter().map(|&x| BigRational::from_f64(x)).collect())
        .collect()
}
