//! Executes a resolved configuration and renders the result.

use std::fmt::Write as _;

use eitspdc_core::detection::{linear_grid, scan, DetectionError, Observable, ScanResult};
use eitspdc_core::medium::{slow_light_summary, MediumError, SlowLightSummary};
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, Format, RunConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(#[from] DetectionError),
    #[error("slow-light summary failed: {0}")]
    Summary(#[from] MediumError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    /// Process exit status: 2 for bad input, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) | RunError::Summary(_) => 3,
            RunError::Io { .. } => 1,
        }
    }
}

/// Runs the scan described by `config`.
pub fn execute(config: &RunConfig) -> Result<ScanResult, RunError> {
    let observable = config
        .observable
        .ok_or_else(|| ConfigError::Inconsistent("no observable selected".into()))?;
    let g = config.grid.expect("grid is resolved whenever the observable is");
    let grid = linear_grid(g.min, g.max, g.steps)?;
    Ok(scan(
        observable,
        &grid,
        &config.path(),
        &config.spdc,
        &config.quadrature,
        config.normalization,
    )?)
}

/// Slow-light figures of the configured cell at the signal carrier.
pub fn summarize(config: &RunConfig) -> Result<SlowLightSummary, RunError> {
    let m = config
        .medium
        .as_ref()
        .ok_or_else(|| ConfigError::Inconsistent("summary needs a medium".into()))?;
    Ok(slow_light_summary(&m.params, config.spdc.w_s())?)
}

fn columns(observable: Observable) -> [&'static str; 3] {
    match observable {
        Observable::Susceptibility => ["nu", "chi_real", "chi_imag"],
        Observable::SinglesSpectrum => ["nu", "singles", "error_estimate"],
        Observable::Coincidence => ["delta_tau", "coincidence", "error_estimate"],
        Observable::Baseline => ["delta_tau", "baseline", "error_estimate"],
    }
}

/// CSV with a `#` comment header. Lines starting `#: ` form a config that
/// reproduces the run.
pub fn render_csv(config: &RunConfig, result: &ScanResult) -> String {
    let mut s = String::new();
    writeln!(s, "# eitspdc {VERSION}").unwrap();
    writeln!(
        s,
        "# normalization {} (factor {:e})",
        result.normalization.label(),
        result.normalization_factor
    )
    .unwrap();
    if let Some(c) = config.medium.and_then(|m| m.calibration) {
        writeln!(
            s,
            "# calibrated from target_v_g = {:e}, target_delta_omega_tr = {:e}, omega_p = {:e}",
            c.targets.v_g, c.targets.delta_omega_tr, c.omega_p
        )
        .unwrap();
    }
    for (k, v) in config.echo() {
        writeln!(s, "#: {k} = {v}").unwrap();
    }
    writeln!(s, "{}", columns(result.observable).join(",")).unwrap();
    for p in &result.points {
        writeln!(s, "{:.8e},{:.8e},{:.8e}", p.abscissa, p.value, p.secondary).unwrap();
    }
    s
}

#[derive(Serialize)]
struct JsonOut<'a> {
    version: &'static str,
    config: serde_json::Map<String, serde_json::Value>,
    result: &'a ScanResult,
}

pub fn render_json(config: &RunConfig, result: &ScanResult) -> String {
    let config_map = config
        .echo()
        .into_iter()
        .map(|(k, v)| (k.to_string(), serde_json::Value::String(v)))
        .collect();
    let out = JsonOut {
        version: VERSION,
        config: config_map,
        result,
    };
    let mut text = serde_json::to_string_pretty(&out).expect("scan results serialize");
    text.push('\n');
    text
}

pub fn render(config: &RunConfig, result: &ScanResult) -> String {
    match config.format {
        Format::Csv => render_csv(config, result),
        Format::Json => render_json(config, result),
    }
}

/// JSON for [`summarize`]; an infinite window width is written as `null`.
pub fn render_summary(summary: &SlowLightSummary) -> String {
    let mut text = serde_json::to_string_pretty(summary).expect("summary serializes");
    text.push('\n');
    text
}

/// Extracts the `#: ` config lines of a rendered CSV.
pub fn echoed_config(csv: &str) -> String {
    csv.lines()
        .filter_map(|l| l.strip_prefix("#: "))
        .map(|l| format!("{l}\n"))
        .collect()
}
