use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    volume_w, volume_w_rates, MeasureError, VolumeEstimate, VolumeMethod, VolumeOptions,
    MAX_QUADRATURE_DIM,
};
use crate::enumeration::{enumerate_with, EnumerateOptions};
use crate::graph::{subdivide, SubdivisionScheme, WeightedGraph};
use crate::winding::{BranchAssignment, ModelContext};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeylRow {
    #[serde(rename = "M")]
    pub m: usize,
    pub lattice_count: u64,
    /// `lattice_count / M^c`
    pub ratio: f64,
    /// `|W_r(A)|` of the base graph
    pub target: f64,
    pub target_error: f64,
    pub solver_failures: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeylOptions {
    pub enumerate: EnumerateOptions,
    pub volume: VolumeOptions,
}

impl Default for WeylOptions {
    fn default() -> Self {
        WeylOptions {
            enumerate: EnumerateOptions::default(),
            volume: VolumeOptions {
                tol: 1e-6,
                ..Default::default()
            },
        }
    }
}

/// Lattice counts of the subdivided graphs `G_M` against `|W_r(A)|`. The
/// subdivided graphs inherit the base basis, branches and weights edge by edge.
pub fn weyl_experiment(
    base: &ModelContext,
    rates: &[f64],
    ms: &[usize],
    opts: &WeylOptions,
) -> Result<Vec<WeylRow>, MeasureError> {
    let c = base.dim();
    if c > 3 {
        return Err(MeasureError::Hypothesis(format!(
            "base cycle rank {c} exceeds 3"
        )));
    }
    if ms.windows(2).any(|w| w[0] >= w[1]) || ms.first() == Some(&0) {
        return Err(MeasureError::Hypothesis(format!(
            "scales {ms:?} are not increasing and positive"
        )));
    }
    let target = volume_w_rates(base, rates, &opts.volume)?;
    let mut rows = Vec::new();
    for &m in ms {
        let scheme = SubdivisionScheme {
            base: base.graph().clone(),
            rates: rates.to_vec(),
            scale: m,
        };
        let sub = subdivide(&scheme)?;
        let ctx = ModelContext::builder(sub.graph.clone())
            .basis(sub.lift_basis(base.basis()))
            .branches(BranchAssignment(sub.lift_per_edge(&base.branches().0)))
            .build()?;
        let report = enumerate_with(&ctx, &opts.enumerate)?;
        let count = report.states.len() as u64;
        rows.push(WeylRow {
            m,
            lattice_count: count,
            ratio: count as f64 / (m as f64).powi(c as i32),
            target: target.value,
            target_error: target.abs_error,
            solver_failures: report.solver_failures.len(),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaximizeOptions {
    pub volume: VolumeOptions,
    /// every assignment is compared up to this many edges
    pub exhaustive_limit: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for MaximizeOptions {
    fn default() -> Self {
        MaximizeOptions {
            volume: VolumeOptions {
                tol: 1e-6,
                budget: 2_000_000,
                ..Default::default()
            },
            exhaustive_limit: 10,
            samples: 64,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchRow {
    pub branches: String,
    pub volume: VolumeEstimate,
    /// chosen volume minus this one, in units of the combined error
    pub margin_sigmas: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchComparison {
    /// principal on positive weights, reflected on negative ones
    pub chosen: String,
    pub chosen_volume: VolumeEstimate,
    pub exhaustive: bool,
    pub alternatives: Vec<BranchRow>,
    /// chosen volume at least every alternative minus three combined errors
    pub holds: bool,
}

/// Volumes under the sign-matched branch choice and under alternatives: all
/// of them up to `exhaustive_limit` edges, else a seeded sample.
pub fn maximize_volume_branches(
    g: &WeightedGraph,
    opts: &MaximizeOptions,
) -> Result<BranchComparison, MeasureError> {
    let m = g.edge_count();
    let chosen = BranchAssignment::weight_signs(&g.weights());
    let volume_opts = VolumeOptions {
        method: if g.cycle_rank() <= MAX_QUADRATURE_DIM {
            opts.volume.method
        } else {
            VolumeMethod::MonteCarlo
        },
        ..opts.volume
    };
    let volume = |b: &BranchAssignment| -> Result<VolumeEstimate, MeasureError> {
        volume_w(
            &ModelContext::with_branches(g.clone(), b.clone())?,
            &volume_opts,
        )
    };
    let chosen_volume = volume(&chosen)?;
    let exhaustive = m <= opts.exhaustive_limit && m < 64;
    let masks: Vec<u64> = if exhaustive {
        (0..1u64 << m).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        (0..opts.samples)
            .map(|_| rng.gen::<u64>() & (u64::MAX >> (64 - m.min(64))))
            .collect()
    };
    let mut alternatives = Vec::new();
    for mask in masks {
        let b = BranchAssignment::from_mask(mask, m);
        if b == chosen {
            continue;
        }
        let v = volume(&b)?;
        let margin_sigmas =
            (chosen_volume.value - v.value) / (chosen_volume.abs_error + v.abs_error);
        alternatives.push(BranchRow {
            branches: b.letters(),
            volume: v,
            margin_sigmas,
        });
    }
    let holds = alternatives.iter().all(|r| r.margin_sigmas >= -3.0);
    Ok(BranchComparison {
        chosen: chosen.letters(),
        chosen_volume,
        exhaustive,
        alternatives,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;

    #[test]
    fn mixed_triangle_reflects_the_negative_edge() {
        let g = families::cycle_weighted(&[1.0, 1.0, -1.0]);
        let opts = MaximizeOptions {
            volume: VolumeOptions {
                tol: 1e-6,
                ..Default::default()
            },
            ..Default::default()
        };
        let table = maximize_volume_branches(&g, &opts).unwrap();
        assert_eq!(table.chosen, "PPR");
        assert!(table.exhaustive);
        assert_eq!(table.alternatives.len(), 7);
        assert!(table.holds);
    }

    #[test]
    fn triangle_counts() {
        let ctx = ModelContext::principal(families::cycle(3)).unwrap();
        let rows = weyl_experiment(&ctx, &[1.0; 3], &[2, 4], &WeylOptions::default()).unwrap();
        // C_3M has 2 floor(3M / 4) + 1 states for M > 1 when 3M is not a multiple of 4
        assert_eq!(rows[0].lattice_count, 2 + 1);
        assert!((rows[0].target - 1.5).abs() < 1e-6);
        assert!(weyl_experiment(&ctx, &[1.0; 3], &[4, 2], &WeylOptions::default()).is_err());
    }
}
