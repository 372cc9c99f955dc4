use kuramoto_topo::enumeration::EnumerationError;
use kuramoto_topo::graph::GraphError;
use kuramoto_topo::measure::MeasureError;
use kuramoto_topo::stability::{SimulationError, StabilityError};
use kuramoto_topo::winding::WindingError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    pub fn io(path: &str, err: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{path}: {err}"))
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<WindingError> for CliError {
    fn from(e: WindingError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<EnumerationError> for CliError {
    fn from(e: EnumerationError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<StabilityError> for CliError {
    fn from(e: StabilityError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<SimulationError> for CliError {
    fn from(e: SimulationError) -> Self {
        match e {
            SimulationError::NonFinite { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<MeasureError> for CliError {
    fn from(e: MeasureError) -> Self {
        match e {
            MeasureError::Winding(w) => w.into(),
            MeasureError::Graph(g) => g.into(),
            MeasureError::Enumeration(n) => n.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}
