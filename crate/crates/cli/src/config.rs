use clap::Args;
use kuramoto_topo::enumeration::EnumerateOptions;
use serde::Serialize;

use crate::error::CliError;

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Write the JSON report here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    pub report: Option<String>,
    /// Write the CSV companion here (subcommands with tabular output).
    #[arg(long, global = true, value_name = "PATH")]
    pub csv: Option<String>,
    /// Seed for every random choice (Monte Carlo, perturbations, sampled assignments).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 lets the pool decide.
    #[arg(long, global = true, env = "KTOPO_THREADS", default_value_t = 0)]
    pub threads: usize,
    /// Leave the generation time out of the report.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
    /// Residual accepted for a reconstructed steady state.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub residual_tol: f64,
    /// Required accuracy of W(alpha) = k.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub solver_tol: f64,
    /// Relative constraint slack below which a state is on the boundary of A.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub boundary_tol: f64,
    /// Largest winding box the enumeration will scan.
    #[arg(long, global = true, default_value_t = 10_000_000)]
    pub max_candidates: u128,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub residual: f64,
    pub solver: f64,
    pub boundary: f64,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub report: Option<String>,
    pub csv: Option<String>,
    pub seed: u64,
    pub threads: usize,
    pub no_timestamp: bool,
    pub tolerances: Tolerances,
    pub max_candidates: u128,
}

impl RunConfig {
    pub fn from_args(a: &GlobalArgs) -> Result<Self, CliError> {
        let tolerances = Tolerances {
            residual: a.residual_tol,
            solver: a.solver_tol,
            boundary: a.boundary_tol,
        };
        for (name, v) in [
            ("residual", a.residual_tol),
            ("solver", a.solver_tol),
            ("boundary", a.boundary_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Validation(format!(
                    "{name} tolerance must be positive, got {v}"
                )));
            }
        }
        Ok(RunConfig {
            report: a.report.clone(),
            csv: a.csv.clone(),
            seed: a.seed,
            threads: a.threads,
            no_timestamp: a.no_timestamp,
            tolerances,
            max_candidates: a.max_candidates,
        })
    }

    pub fn enumerate_options(&self) -> EnumerateOptions {
        let mut opts = EnumerateOptions {
            max_candidates: self.max_candidates,
            ..Default::default()
        };
        opts.tolerances.residual = self.tolerances.residual;
        opts.solver.tol = self.tolerances.solver;
        opts.solver.boundary_tol = self.tolerances.boundary;
        opts
    }
}
