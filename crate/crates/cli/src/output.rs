use std::fmt::Write as _;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::config::{RunConfig, Tolerances};
use crate::error::CliError;

/// Every JSON report is wrapped in this envelope.
#[derive(Debug, Serialize)]
pub struct Envelope<'a> {
    pub command: &'a str,
    pub version: &'a str,
    pub input: &'a str,
    pub seed: u64,
    pub tolerances: Tolerances,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_unix: Option<u64>,
    pub result: Value,
}

pub struct Output {
    pub result: Value,
    pub csv: Option<String>,
    /// Printed on stdout instead of the JSON when no report path is given.
    pub summary: Option<String>,
    /// Data was produced but the run is a numerical failure (exit 2).
    pub failure: Option<String>,
}

impl Output {
    pub fn json<T: Serialize>(value: &T) -> Self {
        Output {
            result: serde_json::to_value(value).expect("report types serialize"),
            csv: None,
            summary: None,
            failure: None,
        }
    }

    pub fn with_csv(mut self, csv: String) -> Self {
        self.csv = Some(csv);
        self
    }

    pub fn with_summary(mut self, line: String) -> Self {
        self.summary = Some(line);
        self
    }
}

pub fn emit(cfg: &RunConfig, command: &str, input: &str, out: &Output) -> Result<(), CliError> {
    let generated_unix = (!cfg.no_timestamp).then(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs())
    });
    let envelope = Envelope {
        command,
        version: env!("CARGO_PKG_VERSION"),
        input,
        seed: cfg.seed,
        tolerances: cfg.tolerances,
        generated_unix,
        result: out.result.clone(),
    };
    let text = serde_json::to_string_pretty(&envelope).expect("envelope serializes") + "\n";
    match &cfg.report {
        Some(path) => std::fs::write(path, &text).map_err(|e| CliError::io(path, e))?,
        None if out.summary.is_none() => print!("{text}"),
        None => {}
    }
    if let Some(line) = &out.summary {
        println!("{line}");
    }
    if let (Some(path), Some(csv)) = (&cfg.csv, &out.csv) {
        std::fs::write(path, csv).map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}

/// CSV with a header row; fields are written with `Display`.
pub struct Csv(String);

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv(header.join(",") + "\n")
    }

    pub fn row(&mut self, fields: &[String]) {
        let _ = writeln!(self.0, "{}", fields.join(","));
    }

    pub fn finish(self) -> String {
        self.0
    }
}

/// Integer vectors as `2;-1` so they fit in one CSV field.
pub fn joined(v: &[i64]) -> String {
    v.iter().map(i64::to_string).collect::<Vec<_>>().join(";")
}
