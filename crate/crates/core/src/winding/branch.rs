use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Serialize, Serializer};

use super::WindingError;
use crate::graph::BranchSpec;

/// Values this close outside `sin(I)` are clamped onto the endpoint.
pub const DOMAIN_TOL: f64 = 1e-12;

/// Closed angle interval on which sine is injective. It must sit inside one
/// monotone piece `[p pi - pi/2, p pi + pi/2]` of sine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    lo: f64,
    hi: f64,
    piece: i64,
}

impl Branch {
    pub const PRINCIPAL: Branch = Branch {
        lo: -FRAC_PI_2,
        hi: FRAC_PI_2,
        piece: 0,
    };
    pub const REFLECTED: Branch = Branch {
        lo: FRAC_PI_2,
        hi: 3.0 * FRAC_PI_2,
        piece: 1,
    };

    pub fn new(lo: f64, hi: f64) -> Result<Self, WindingError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(WindingError::InvalidBranch(format!(
                "[{lo}, {hi}] is not an interval"
            )));
        }
        let piece = ((0.5 * (lo + hi) + FRAC_PI_2) / PI).floor() as i64;
        let start = piece as f64 * PI - FRAC_PI_2;
        let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        if lo < start - slack || hi > start + PI + slack {
            return Err(WindingError::InvalidBranch(format!(
                "sine is not injective on [{lo}, {hi}]"
            )));
        }
        Ok(Branch {
            lo: lo.max(start),
            hi: hi.min(start + PI),
            piece,
        })
    }

    pub fn from_spec(spec: &BranchSpec) -> Result<Self, WindingError> {
        match spec {
            BranchSpec::Named(name) => match name.to_ascii_lowercase().as_str() {
                "principal" | "p" => Ok(Branch::PRINCIPAL),
                "reflected" | "r" => Ok(Branch::REFLECTED),
                other => Err(WindingError::InvalidBranch(format!(
                    "unknown branch name {other:?}"
                ))),
            },
            BranchSpec::Interval([lo, hi]) => Branch::new(*lo, *hi),
        }
    }

    pub fn to_spec(&self) -> BranchSpec {
        if *self == Branch::PRINCIPAL {
            BranchSpec::Named("principal".into())
        } else if *self == Branch::REFLECTED {
            BranchSpec::Named("reflected".into())
        } else {
            BranchSpec::Interval([self.lo, self.hi])
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// `+1` where sine increases on the branch, `-1` where it decreases.
    pub fn epsilon(&self) -> f64 {
        if self.piece.rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        }
    }

    fn edge_sin(&self, x: f64, is_start: bool) -> f64 {
        // exact +-1 at the ends of a full monotone piece
        let piece_end = if is_start {
            self.piece as f64 * PI - FRAC_PI_2
        } else {
            self.piece as f64 * PI + FRAC_PI_2
        };
        if x == piece_end {
            let up = (self.piece.rem_euclid(2) == 0) != is_start;
            if up {
                1.0
            } else {
                -1.0
            }
        } else {
            x.sin()
        }
    }

    /// `sin(I)` as `(min, max)`.
    pub fn sin_range(&self) -> (f64, f64) {
        let (a, b) = (self.edge_sin(self.lo, true), self.edge_sin(self.hi, false));
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// Whether `sin(I)` is the whole of `[-1, 1]`.
    pub fn is_full(&self) -> bool {
        self.sin_range() == (-1.0, 1.0)
    }

    /// The unique angle of the branch whose sine is `y`.
    pub fn inverse(&self, y: f64) -> Result<f64, WindingError> {
        let (ymin, ymax) = self.sin_range();
        if !(y >= ymin - DOMAIN_TOL && y <= ymax + DOMAIN_TOL) {
            return Err(WindingError::Domain {
                y,
                lo: ymin,
                hi: ymax,
            });
        }
        Ok(self.inverse_clamped(y))
    }

    /// Inverse with `y` clamped into `sin(I)` first.
    pub fn inverse_clamped(&self, y: f64) -> f64 {
        let (ymin, ymax) = self.sin_range();
        let y = y.clamp(ymin, ymax);
        let base = self.piece as f64 * PI;
        let x = base + self.epsilon() * y.asin();
        x.clamp(self.lo, self.hi)
    }

    /// Antiderivative of the branch inverse, `G(y) = int x(y) dy`.
    pub fn antiderivative(&self, y: f64) -> f64 {
        let y = y.clamp(-1.0, 1.0);
        self.piece as f64 * PI * y + self.epsilon() * (y * y.asin() + (1.0 - y * y).max(0.0).sqrt())
    }

    /// Whether `x` lies in `I + 2 pi Z` up to `tol`.
    pub fn contains_angle(&self, x: f64, tol: f64) -> bool {
        let mid = 0.5 * (self.lo + self.hi);
        let shifted = x - TAU * ((x - mid) / TAU).round();
        shifted >= self.lo - tol && shifted <= self.hi + tol
    }

    /// Representative of `x + 2 pi Z` closest to the branch.
    pub fn reduce_angle(&self, x: f64) -> f64 {
        let mid = 0.5 * (self.lo + self.hi);
        x - TAU * ((x - mid) / TAU).round()
    }
}

impl Serialize for Branch {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_spec().serialize(s)
    }
}

/// One branch per edge.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct BranchAssignment(pub Vec<Branch>);

impl BranchAssignment {
    pub fn uniform(branch: Branch, edges: usize) -> Self {
        BranchAssignment(vec![branch; edges])
    }

    /// Principal where the weight is positive, reflected where it is negative.
    pub fn weight_signs(weights: &[f64]) -> Self {
        BranchAssignment(
            weights
                .iter()
                .map(|&w| {
                    if w > 0.0 {
                        Branch::PRINCIPAL
                    } else {
                        Branch::REFLECTED
                    }
                })
                .collect(),
        )
    }

    /// Document branches, defaulting to principal.
    pub fn from_specs(specs: &[Option<BranchSpec>]) -> Result<Self, WindingError> {
        specs
            .iter()
            .map(|s| s.as_ref().map_or(Ok(Branch::PRINCIPAL), Branch::from_spec))
            .collect::<Result<Vec<_>, _>>()
            .map(BranchAssignment)
    }

    /// Parses `P`/`R` letters such as `"PPRP"`.
    pub fn from_letters(letters: &str) -> Result<Self, WindingError> {
        letters
            .chars()
            .map(|c| match c.to_ascii_uppercase() {
                'P' => Ok(Branch::PRINCIPAL),
                'R' => Ok(Branch::REFLECTED),
                other => Err(WindingError::InvalidBranch(format!(
                    "unknown branch letter {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BranchAssignment)
    }

    /// `P`/`R` letters, with `*` for any other interval.
    pub fn letters(&self) -> String {
        self.0
            .iter()
            .map(|b| {
                if *b == Branch::PRINCIPAL {
                    'P'
                } else if *b == Branch::REFLECTED {
                    'R'
                } else {
                    '*'
                }
            })
            .collect()
    }

    /// Every edge switched between principal and reflected.
    pub fn flipped(&self) -> Self {
        BranchAssignment(
            self.0
                .iter()
                .map(|b| {
                    if *b == Branch::PRINCIPAL {
                        Branch::REFLECTED
                    } else {
                        Branch::PRINCIPAL
                    }
                })
                .collect(),
        )
    }

    /// Bitmask enumeration: bit `e` set means edge `e` is reflected.
    pub fn from_mask(mask: u64, edges: usize) -> Self {
        BranchAssignment(
            (0..edges)
                .map(|e| {
                    if mask >> e & 1 == 1 {
                        Branch::REFLECTED
                    } else {
                        Branch::PRINCIPAL
                    }
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, e: usize) -> &Branch {
        &self.0[e]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_inverses() {
        assert_eq!(Branch::PRINCIPAL.inverse(0.0).unwrap(), 0.0);
        assert!((Branch::REFLECTED.inverse(0.0).unwrap() - PI).abs() < 1e-15);
        assert_eq!(Branch::PRINCIPAL.inverse(1.0).unwrap(), FRAC_PI_2);
        assert_eq!(Branch::PRINCIPAL.inverse(1.0 + 5e-13).unwrap(), FRAC_PI_2);
        assert!(Branch::PRINCIPAL.inverse(1.0 + 1e-9).is_err());
        assert_eq!(Branch::REFLECTED.inverse(-1.0).unwrap(), 3.0 * FRAC_PI_2);
        assert_eq!(Branch::REFLECTED.epsilon(), -1.0);
    }

    #[test]
    fn sub_branches() {
        let b = Branch::new(0.0, FRAC_PI_2).unwrap();
        assert_eq!(b.sin_range(), (0.0, 1.0));
        assert!(!b.is_full());
        assert!(b.inverse(-0.1).is_err());
        let far = Branch::new(2.0 * PI + 0.1, 2.0 * PI + 0.5).unwrap();
        assert!((far.inverse(0.3f64.sin()).unwrap() - (2.0 * PI + 0.3)).abs() < 1e-14);
        assert!(Branch::new(0.0, PI).is_err());
        assert!(Branch::new(1.0, 0.5).is_err());
    }

    #[test]
    fn membership_mod_two_pi() {
        assert!(Branch::PRINCIPAL.contains_angle(TAU + 0.3, 1e-12));
        assert!(Branch::REFLECTED.contains_angle(-FRAC_PI_2, 1e-12));
        assert!(!Branch::PRINCIPAL.contains_angle(PI, 1e-12));
    }

    #[test]
    fn antiderivative_matches_inverse() {
        for b in [
            Branch::PRINCIPAL,
            Branch::REFLECTED,
            Branch::new(-1.0, 0.4).unwrap(),
        ] {
            let (lo, hi) = b.sin_range();
            for i in 1..20 {
                let y = lo + (hi - lo) * i as f64 / 20.0;
                let h = 1e-6;
                let fd = (b.antiderivative(y + h) - b.antiderivative(y - h)) / (2.0 * h);
                assert!((fd - b.inverse(y).unwrap()).abs() < 1e-7);
            }
        }
    }
}
