mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use kuramoto_topo::measure::VolumeMethod;
use kuramoto_topo::stability::ClassifyOptions;

use commands::*;
use config::{GlobalArgs, RunConfig};
use error::CliError;
use output::emit;

/// Steady states of the Kuramoto model on weighted graphs, counted as
/// lattice points of the winding map.
///
/// Exit codes: 0 success, 1 invalid input or arguments, 2 numerical failure
/// (the report is still written), 3 I/O error.
#[derive(Debug, Parser)]
#[command(name = "ktopo", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate or smooth a graph document.
    #[command(subcommand)]
    Graph(GraphCommand),
    /// Enumerate every steady state reachable on the chosen branches.
    Enumerate {
        file: String,
        /// One P or R per edge, overriding the branches in the document.
        #[arg(long)]
        branches: Option<String>,
    },
    /// Count the faces of A and print them next to twice the smoothed edge count.
    Faces {
        file: String,
        #[arg(long)]
        branches: Option<String>,
    },
    /// Classify steady states by the spectrum of the Jacobian.
    Stability {
        file: String,
        /// Enumeration report to classify; the states are enumerated when absent.
        #[arg(long)]
        states: Option<String>,
        #[arg(long)]
        branches: Option<String>,
        /// Always compute the spectrum, even when every edge has gamma cos theta > 0.
        #[arg(long)]
        no_shortcut: bool,
        /// Try the ring criterion before the spectrum.
        #[arg(long)]
        ring_theorem: bool,
    },
    /// Integrate the model with fourth-order Runge-Kutta; the trajectory goes to --csv.
    Simulate {
        file: String,
        /// Comma-separated angles, a JSON array file, or an enumeration report (with --winding).
        #[arg(long)]
        theta0: String,
        /// Winding vector of the report state to start from, e.g. 2,-1.
        #[arg(long, allow_hyphen_values = true)]
        winding: Option<String>,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(short = 'T', long = "T", default_value_t = 10.0)]
        t_end: f64,
        /// Add uniform noise on [-b, b] to theta0, drawn from --seed.
        #[arg(long, value_name = "B")]
        perturb: Option<f64>,
        #[arg(long, default_value_t = 1)]
        record_every: usize,
    },
    /// Volume of W(A).
    Volume {
        file: String,
        #[arg(long)]
        branches: Option<String>,
        #[arg(long, value_enum, default_value_t = Method::Quad)]
        method: Method,
        /// Target absolute error of the quadrature.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Integrand evaluations (quadrature) or samples (Monte Carlo).
        #[arg(long)]
        budget: Option<u64>,
        /// Also report the spanning-tree sandwich (uniform weights only).
        #[arg(long)]
        bounds: bool,
    },
    /// Lattice counts of subdivided graphs against the volume of W_r(A).
    Weyl {
        file: String,
        /// Subdivision rate per edge, comma-separated (default all 1).
        #[arg(long)]
        rates: Option<String>,
        /// Increasing subdivision scales, comma-separated.
        #[arg(long = "Ms", alias = "ms")]
        ms: String,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Compare the volume under the weight-sign branches with other assignments.
    Maximize {
        file: String,
        /// Sampled alternatives when there are too many edges for all of them.
        #[arg(long, default_value_t = 64)]
        samples: usize,
        /// Up to this many edges every assignment is tried.
        #[arg(long, default_value_t = 10)]
        exhaustive_limit: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Enumerate under every P/R assignment (at most 12 edges).
    SweepBranches {
        file: String,
        /// Add the volume of W(A) for each assignment.
        #[arg(long)]
        volume: bool,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
}

#[derive(Debug, Subcommand)]
enum GraphCommand {
    /// Validate the document and summarize the graph.
    Check { file: String },
    /// Print the edge count after smoothing 2-valent vertices.
    Smooth { file: String },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Quad,
    Mc,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = RunConfig::from_args(&cli.global)?;
    if cfg.threads > 0 {
        // a second build only fails when a pool already exists
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global();
    }
    let (name, file, out) = match &cli.command {
        Command::Graph(GraphCommand::Check { file }) => {
            ("graph check", file, graph_check(&read_document(file)?)?)
        }
        Command::Graph(GraphCommand::Smooth { file }) => {
            ("graph smooth", file, graph_smooth(&read_document(file)?)?)
        }
        Command::Enumerate { file, branches } => {
            let ctx = context(&read_document(file)?, branches.as_deref())?;
            ("enumerate", file, enumerate(&cfg, &ctx)?)
        }
        Command::Faces { file, branches } => {
            let ctx = context(&read_document(file)?, branches.as_deref())?;
            ("faces", file, faces(&ctx)?)
        }
        Command::Stability {
            file,
            states,
            branches,
            no_shortcut,
            ring_theorem,
        } => {
            let ctx = context(&read_document(file)?, branches.as_deref())?;
            let opts = ClassifyOptions {
                shortcut: !no_shortcut,
                ring_theorem: *ring_theorem,
            };
            (
                "stability",
                file,
                stability(&cfg, &ctx, states.as_deref(), opts)?,
            )
        }
        Command::Simulate {
            file,
            theta0: spec,
            winding,
            dt,
            t_end,
            perturb,
            record_every,
        } => {
            let ctx = context(&read_document(file)?, None)?;
            let args = SimulateArgs {
                theta0: theta0(spec, winding.as_deref())?,
                dt: *dt,
                t_end: *t_end,
                perturb: *perturb,
                record_every: *record_every,
            };
            ("simulate", file, simulate(&cfg, &ctx, &args)?)
        }
        Command::Volume {
            file,
            branches,
            method,
            tol,
            budget,
            bounds,
        } => {
            let ctx = context(&read_document(file)?, branches.as_deref())?;
            let method = match method {
                Method::Quad => VolumeMethod::Quadrature,
                Method::Mc => VolumeMethod::MonteCarlo,
            };
            let args = VolumeArgs {
                method,
                tol: *tol,
                budget: *budget,
                bounds: *bounds,
            };
            ("volume", file, volume(&cfg, &ctx, &args)?)
        }
        Command::Weyl {
            file,
            rates,
            ms,
            tol,
        } => {
            let ctx = context(&read_document(file)?, None)?;
            let rates = rates
                .as_deref()
                .map(|r| parse_list::<f64>(r, "rate"))
                .transpose()?;
            let ms: Vec<usize> = parse_list(ms, "M")?;
            ("weyl", file, weyl(&cfg, &ctx, rates, &ms, *tol)?)
        }
        Command::Maximize {
            file,
            samples,
            exhaustive_limit,
            tol,
        } => {
            let g = context(&read_document(file)?, None)?.graph().clone();
            (
                "maximize",
                file,
                maximize(&cfg, &g, *samples, *exhaustive_limit, *tol)?,
            )
        }
        Command::SweepBranches { file, volume, tol } => (
            "sweep-branches",
            file,
            sweep_branches(&cfg, &read_document(file)?, *volume, *tol)?,
        ),
    };
    emit(&cfg, name, file, &out)?;
    match out.failure {
        Some(msg) => Err(CliError::Numerical(msg)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ktopo: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
