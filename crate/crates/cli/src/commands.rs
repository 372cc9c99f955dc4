use kuramoto_topo::enumeration::{enumerate_with, fixed_point_residual, EnumerationReport};
use kuramoto_topo::graph::{
    cycle_basis_lattice_check, load_graph, smooth_two_valent, spanning_tree_count, GraphDocument,
    WeightedGraph,
};
use kuramoto_topo::measure::{
    maximize_volume_branches, tree_bounds, two_cycle_closed_form, volume_w, weyl_experiment,
    MaximizeOptions, VolumeEstimate, VolumeMethod, VolumeOptions, WeylOptions, MAX_QUADRATURE_DIM,
};
use kuramoto_topo::stability::{
    classify_theta, perturb, ring_instability, simulate_with, ClassifyOptions, SimulateOptions,
    StabilityVerdict,
};
use kuramoto_topo::winding::{count_faces, BranchAssignment, ModelContext};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{joined, Csv, Output};

pub fn read_document(path: &str) -> Result<GraphDocument, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    GraphDocument::from_json(&text).map_err(|e| CliError::Validation(format!("{path}: {e}")))
}

pub fn context(doc: &GraphDocument, branches: Option<&str>) -> Result<ModelContext, CliError> {
    let ctx = ModelContext::from_document(doc)?;
    match branches {
        None => Ok(ctx),
        Some(letters) => {
            let b = BranchAssignment::from_letters(letters)?;
            Ok(ModelContext::builder(ctx.graph().clone())
                .basis(ctx.basis().clone())
                .omega(ctx.omega().to_vec())
                .branches(b)
                .build()?)
        }
    }
}

pub fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| CliError::Validation(format!("bad {what} entry {s:?}")))
        })
        .collect()
}

#[derive(Serialize)]
struct GraphSummary {
    vertices: usize,
    edges: usize,
    cycle_rank: usize,
    spanning_trees: u128,
    smoothed_vertices: usize,
    smoothed_edges: usize,
    cycle_basis: Vec<Vec<i64>>,
    elementary_divisors: Vec<i64>,
    unimodular: bool,
}

pub fn graph_check(doc: &GraphDocument) -> Result<Output, CliError> {
    let ctx = ModelContext::from_document(doc)?;
    let g = ctx.graph();
    let smooth = smooth_two_valent(g);
    let lattice = cycle_basis_lattice_check(ctx.basis())?;
    let summary = GraphSummary {
        vertices: g.vertex_count(),
        edges: g.edge_count(),
        cycle_rank: g.cycle_rank(),
        spanning_trees: spanning_tree_count(g)?,
        smoothed_vertices: smooth.vertex_count,
        smoothed_edges: smooth.edge_count(),
        cycle_basis: ctx.basis().rows().to_vec(),
        elementary_divisors: lattice.divisors,
        unimodular: lattice.unimodular,
    };
    Ok(Output::json(&summary))
}

pub fn graph_smooth(doc: &GraphDocument) -> Result<Output, CliError> {
    let g = load_graph(doc)?;
    let smooth = smooth_two_valent(&g);
    let line = format!("smoothed_edges={}", smooth.edge_count());
    Ok(Output::json(&smooth).with_summary(line))
}

fn report_csv(report: &EnumerationReport) -> String {
    let mut csv = Csv::new(&["winding", "alpha", "boundary", "residual"]);
    for s in &report.states {
        let alpha: Vec<String> = s.alpha.iter().map(f64::to_string).collect();
        csv.row(&[
            joined(&s.winding),
            alpha.join(";"),
            s.boundary_flag.to_string(),
            s.residual.to_string(),
        ]);
    }
    csv.finish()
}

pub fn enumerate(cfg: &RunConfig, ctx: &ModelContext) -> Result<Output, CliError> {
    let mut report = enumerate_with(ctx, &cfg.enumerate_options())?;
    if cfg.no_timestamp {
        report.timing = None;
    }
    let failures = report.solver_failures.len();
    let mut out = Output::json(&report).with_csv(report_csv(&report));
    if failures > 0 {
        out.failure = Some(format!(
            "{failures} winding vectors were neither solved nor excluded"
        ));
    }
    Ok(out)
}

pub fn faces(ctx: &ModelContext) -> Result<Output, CliError> {
    let faces = count_faces(ctx.polytope())?;
    let predicted = 2 * smooth_two_valent(ctx.graph()).edge_count();
    #[derive(Serialize)]
    struct Faces {
        faces: usize,
        predicted: usize,
    }
    Ok(Output::json(&Faces { faces, predicted })
        .with_summary(format!("faces={faces} predicted={predicted}")))
}

#[derive(Serialize)]
struct StateVerdict {
    winding: Vec<i64>,
    #[serde(flatten)]
    verdict: StabilityVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    ring_instability: Option<bool>,
}

pub fn stability(
    cfg: &RunConfig,
    ctx: &ModelContext,
    states: Option<&str>,
    opts: ClassifyOptions,
) -> Result<Output, CliError> {
    let report: EnumerationReport = match states {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Validation(format!("{path}: {e}")))?;
            // accept a bare report or one wrapped in the report envelope
            let inner = value.get("result").cloned().unwrap_or(value);
            serde_json::from_value(inner)
                .map_err(|e| CliError::Validation(format!("{path}: {e}")))?
        }
        None => enumerate_with(ctx, &cfg.enumerate_options())?,
    };
    let g = ctx.graph();
    let ring = g.is_ring() && ctx.has_zero_omega();
    let mut rows = Vec::new();
    let mut csv = Csv::new(&["winding", "label", "max_nontrivial_eigenvalue", "criterion"]);
    for s in &report.states {
        if s.theta.len() != g.vertex_count() {
            return Err(CliError::Validation(format!(
                "state {:?} has {} angles for {} vertices",
                s.winding,
                s.theta.len(),
                g.vertex_count()
            )));
        }
        let residual = fixed_point_residual(g, ctx.omega(), &s.theta);
        if residual > cfg.tolerances.residual {
            return Err(CliError::Validation(format!(
                "state {:?} has residual {residual:e}",
                s.winding
            )));
        }
        let verdict = classify_theta(g, &s.theta, Some(ctx), opts);
        let ring_flag = if ring {
            Some(ring_instability(ctx, &s.theta)?)
        } else {
            None
        };
        csv.row(&[
            joined(&s.winding),
            serde_json::to_value(verdict.label)
                .unwrap()
                .as_str()
                .unwrap_or_default()
                .to_string(),
            verdict
                .max_nontrivial_eigenvalue
                .map_or(String::new(), |x| x.to_string()),
            serde_json::to_value(verdict.criterion_used)
                .unwrap()
                .as_str()
                .unwrap_or_default()
                .to_string(),
        ]);
        rows.push(StateVerdict {
            winding: s.winding.clone(),
            verdict,
            ring_instability: ring_flag,
        });
    }
    Ok(Output::json(&rows).with_csv(csv.finish()))
}

pub struct SimulateArgs {
    pub theta0: Vec<f64>,
    pub dt: f64,
    pub t_end: f64,
    pub perturb: Option<f64>,
    pub record_every: usize,
}

#[derive(Serialize)]
struct SimulationSummary {
    dt: f64,
    t_end: f64,
    perturbation: Option<f64>,
    theta0: Vec<f64>,
    final_theta: Vec<f64>,
    terminal_residual: f64,
    recorded_steps: usize,
}

pub fn simulate(cfg: &RunConfig, ctx: &ModelContext, a: &SimulateArgs) -> Result<Output, CliError> {
    let start = match a.perturb {
        Some(b) if !(b >= 0.0 && b.is_finite()) => {
            return Err(CliError::Validation(format!(
                "perturbation bound must be non-negative, got {b}"
            )))
        }
        Some(b) => perturb(&a.theta0, b, cfg.seed),
        None => a.theta0.clone(),
    };
    let opts = SimulateOptions {
        dt: a.dt,
        t_end: a.t_end,
        record_every: a.record_every,
    };
    let traj = simulate_with(ctx.graph(), &start, ctx.omega(), &opts)?;
    let summary = SimulationSummary {
        dt: a.dt,
        t_end: a.t_end,
        perturbation: a.perturb,
        theta0: start,
        final_theta: traj.last().to_vec(),
        terminal_residual: traj.terminal_residual,
        recorded_steps: traj.times.len(),
    };
    Ok(Output::json(&summary).with_csv(traj.to_csv()))
}

/// Initial angles from a comma list, a JSON array file, or a state of an
/// enumeration report selected by winding vector.
pub fn theta0(spec: &str, winding: Option<&str>) -> Result<Vec<f64>, CliError> {
    if let Ok(list) = parse_list::<f64>(spec, "theta0") {
        return Ok(list);
    }
    let text = std::fs::read_to_string(spec).map_err(|e| CliError::io(spec, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{spec}: {e}")))?;
    if value.is_array() {
        return serde_json::from_value(value)
            .map_err(|e| CliError::Validation(format!("{spec}: {e}")));
    }
    let inner = value.get("result").cloned().unwrap_or(value);
    let report: EnumerationReport =
        serde_json::from_value(inner).map_err(|e| CliError::Validation(format!("{spec}: {e}")))?;
    let k: Vec<i64> = parse_list(
        winding.ok_or_else(|| {
            CliError::Validation("--winding selects the state of an enumeration report".into())
        })?,
        "winding",
    )?;
    report
        .find(&k)
        .map(|s| s.theta.clone())
        .ok_or_else(|| CliError::Validation(format!("{spec} has no state with winding {k:?}")))
}

pub struct VolumeArgs {
    pub method: VolumeMethod,
    pub tol: f64,
    pub budget: Option<u64>,
    pub bounds: bool,
}

impl VolumeArgs {
    pub fn options(&self, seed: u64) -> VolumeOptions {
        let defaults = match self.method {
            VolumeMethod::Quadrature => VolumeOptions::default(),
            VolumeMethod::MonteCarlo => VolumeOptions::monte_carlo(1_000_000, seed),
        };
        VolumeOptions {
            tol: self.tol,
            budget: self.budget.unwrap_or(defaults.budget),
            seed,
            ..defaults
        }
    }
}

#[derive(Serialize)]
struct VolumeReport {
    cycle_rank: usize,
    volume: VolumeEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    two_cycle_closed_form: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tree_bounds: Option<(f64, f64)>,
}

pub fn volume(cfg: &RunConfig, ctx: &ModelContext, a: &VolumeArgs) -> Result<Output, CliError> {
    let opts = a.options(cfg.seed);
    let volume = volume_w(ctx, &opts)?;
    let g = ctx.graph();
    let gamma = g.edge(0).weight;
    let closed = two_cycle_closed_form(g, gamma)
        .ok()
        .filter(|_| ctx.branches().letters().chars().all(|c| c == 'P'));
    let bounds = if a.bounds {
        let b = tree_bounds(ctx, &opts)?;
        Some((b.lower, b.upper))
    } else {
        None
    };
    let mut csv = Csv::new(&["method", "value", "abs_error", "samples_or_cells"]);
    let method = serde_json::to_value(volume.method)
        .unwrap()
        .as_str()
        .unwrap_or_default()
        .to_string();
    csv.row(&[
        method,
        volume.value.to_string(),
        volume.abs_error.to_string(),
        volume.samples_or_cells.to_string(),
    ]);
    let report = VolumeReport {
        cycle_rank: ctx.dim(),
        volume,
        two_cycle_closed_form: closed,
        tree_bounds: bounds,
    };
    Ok(Output::json(&report).with_csv(csv.finish()))
}

pub fn weyl(
    cfg: &RunConfig,
    ctx: &ModelContext,
    rates: Option<Vec<f64>>,
    ms: &[usize],
    tol: f64,
) -> Result<Output, CliError> {
    let rates = rates.unwrap_or_else(|| vec![1.0; ctx.edge_count()]);
    let opts = WeylOptions {
        enumerate: cfg.enumerate_options(),
        volume: VolumeOptions {
            tol,
            seed: cfg.seed,
            ..WeylOptions::default().volume
        },
    };
    let rows = weyl_experiment(ctx, &rates, ms, &opts)?;
    let mut csv = Csv::new(&[
        "M",
        "lattice_count",
        "ratio",
        "target",
        "target_error",
        "solver_failures",
    ]);
    for r in &rows {
        csv.row(&[
            r.m.to_string(),
            r.lattice_count.to_string(),
            r.ratio.to_string(),
            r.target.to_string(),
            r.target_error.to_string(),
            r.solver_failures.to_string(),
        ]);
    }
    let failures: usize = rows.iter().map(|r| r.solver_failures).sum();
    let mut out = Output::json(&rows).with_csv(csv.finish());
    if failures > 0 {
        out.failure = Some(format!(
            "{failures} solver failures across the subdivided graphs"
        ));
    }
    Ok(out)
}

pub fn maximize(
    cfg: &RunConfig,
    g: &WeightedGraph,
    samples: usize,
    exhaustive_limit: usize,
    tol: f64,
) -> Result<Output, CliError> {
    let mut opts = MaximizeOptions {
        samples,
        exhaustive_limit,
        seed: cfg.seed,
        ..Default::default()
    };
    opts.volume.tol = tol;
    opts.volume.seed = cfg.seed;
    let cmp = maximize_volume_branches(g, &opts)?;
    let mut csv = Csv::new(&["branches", "volume", "abs_error", "margin_sigmas"]);
    csv.row(&[
        cmp.chosen.clone(),
        cmp.chosen_volume.value.to_string(),
        cmp.chosen_volume.abs_error.to_string(),
        String::new(),
    ]);
    for r in &cmp.alternatives {
        csv.row(&[
            r.branches.clone(),
            r.volume.value.to_string(),
            r.volume.abs_error.to_string(),
            r.margin_sigmas.to_string(),
        ]);
    }
    Ok(Output::json(&cmp).with_csv(csv.finish()))
}

pub const SWEEP_MAX_EDGES: usize = 12;

#[derive(Serialize)]
struct SweepRow {
    branches: String,
    empty_polytope: bool,
    states: usize,
    stable: usize,
    solver_failures: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    volume: Option<f64>,
}

pub fn sweep_branches(
    cfg: &RunConfig,
    doc: &GraphDocument,
    with_volume: bool,
    tol: f64,
) -> Result<Output, CliError> {
    let base = ModelContext::from_document(doc)?;
    let m = base.edge_count();
    if m > SWEEP_MAX_EDGES {
        return Err(CliError::Validation(format!(
            "sweep-branches handles up to {SWEEP_MAX_EDGES} edges, got {m}"
        )));
    }
    if with_volume && base.dim() > MAX_QUADRATURE_DIM {
        return Err(CliError::Validation(format!(
            "volumes in the sweep need cycle rank at most {MAX_QUADRATURE_DIM}, got {}",
            base.dim()
        )));
    }
    let opts = cfg.enumerate_options();
    let mut rows = Vec::new();
    let mut csv = Csv::new(&[
        "branches",
        "empty_polytope",
        "states",
        "stable",
        "solver_failures",
        "volume",
    ]);
    for mask in 0..1u64 << m {
        let branches = BranchAssignment::from_mask(mask, m);
        let ctx = ModelContext::builder(base.graph().clone())
            .basis(base.basis().clone())
            .omega(base.omega().to_vec())
            .branches(branches.clone())
            .build()?;
        let row = if ctx.polytope().is_empty() {
            SweepRow {
                branches: branches.letters(),
                empty_polytope: true,
                states: 0,
                stable: 0,
                solver_failures: 0,
                volume: None,
            }
        } else {
            let report = enumerate_with(&ctx, &opts)?;
            let stable = report
                .states
                .iter()
                .filter(|s| {
                    classify_theta(ctx.graph(), &s.theta, None, ClassifyOptions::default()).label
                        == kuramoto_topo::stability::StabilityLabel::Stable
                })
                .count();
            let volume = if with_volume {
                Some(
                    volume_w(
                        &ctx,
                        &VolumeOptions {
                            tol,
                            ..Default::default()
                        },
                    )?
                    .value,
                )
            } else {
                None
            };
            SweepRow {
                branches: branches.letters(),
                empty_polytope: false,
                states: report.states.len(),
                stable,
                solver_failures: report.solver_failures.len(),
                volume,
            }
        };
        csv.row(&[
            row.branches.clone(),
            row.empty_polytope.to_string(),
            row.states.to_string(),
            row.stable.to_string(),
            row.solver_failures.to_string(),
            row.volume.map_or(String::new(), |v| v.to_string()),
        ]);
        rows.push(row);
    }
    let failures: usize = rows.iter().map(|r| r.solver_failures).sum();
    let mut out = Output::json(&rows).with_csv(csv.finish());
    if failures > 0 {
        out.failure = Some(format!("{failures} solver failures across the sweep"));
    }
    Ok(out)
}
