use serde::Serialize;

use super::{CycleBasis, GraphError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LatticeCheck {
    /// True when the rows generate the whole integer lattice they span.
    pub unimodular: bool,
    /// Nonzero elementary divisors, ascending.
    pub divisors: Vec<i64>,
}

pub fn cycle_basis_lattice_check(basis: &CycleBasis) -> Result<LatticeCheck, GraphError> {
    let divisors = smith_divisors(basis.rows())?;
    let unimodular = divisors.len() == basis.len() && divisors.iter().all(|&d| d == 1);
    Ok(LatticeCheck {
        unimodular,
        divisors,
    })
}

/// Nonzero Smith-normal-form diagonal of an integer matrix, using checked
/// `i128` arithmetic throughout.
pub fn smith_divisors(rows: &[Vec<i64>]) -> Result<Vec<i64>, GraphError> {
    let m = rows.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    let n = rows[0].len();
    let mut a: Vec<Vec<i128>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| x as i128).collect())
        .collect();
    let mut divisors = Vec::new();

    for t in 0..m.min(n) {
        loop {
            // smallest nonzero magnitude in the trailing block becomes the pivot
            let mut best: Option<(usize, usize)> = None;
            for i in t..m {
                for j in t..n {
                    if a[i][j] != 0 && best.is_none_or(|(bi, bj)| a[i][j].abs() < a[bi][bj].abs()) {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else {
                return finish(divisors);
            };
            a.swap(t, pi);
            for row in a.iter_mut() {
                row.swap(t, pj);
            }

            let p = a[t][t];
            let mut dirty = false;
            for i in t + 1..m {
                let q = a[i][t] / p;
                if q != 0 {
                    for j in t..n {
                        a[i][j] = a[i][j]
                            .checked_sub(q.checked_mul(a[t][j]).ok_or(GraphError::Overflow)?)
                            .ok_or(GraphError::Overflow)?;
                    }
                }
                dirty |= a[i][t] != 0;
            }
            for j in t + 1..n {
                let q = a[t][j] / p;
                if q != 0 {
                    for row in a.iter_mut().skip(t) {
                        row[j] = row[j]
                            .checked_sub(q.checked_mul(row[t]).ok_or(GraphError::Overflow)?)
                            .ok_or(GraphError::Overflow)?;
                    }
                }
                dirty |= a[t][j] != 0;
            }
            if dirty {
                continue;
            }
            // pivot must divide the whole remaining block
            let offender = (t + 1..m).find(|&i| (t + 1..n).any(|j| a[i][j] % p != 0));
            match offender {
                Some(i) => {
                    for j in t..n {
                        a[t][j] = a[t][j].checked_add(a[i][j]).ok_or(GraphError::Overflow)?;
                    }
                }
                None => {
                    divisors.push(i64::try_from(p.abs()).map_err(|_| GraphError::Overflow)?);
                    break;
                }
            }
        }
    }
    finish(divisors)
}

fn finish(mut divisors: Vec<i64>) -> Result<Vec<i64>, GraphError> {
    divisors.sort_unstable();
    Ok(divisors)
}
