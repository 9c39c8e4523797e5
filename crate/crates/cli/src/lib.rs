//! Command-line front end and HTTP service for `llm-roofline`.

pub mod cli;
pub mod service;

use llm_roofline::format::to_canonical_json;
use llm_roofline::{AnalyzeRequest, Error, NetworkReport, PresetRegistry, Series, SweepSpec};
use serde_json::Value;

/// Canonical JSON body for a report, newline terminated. The CLI's
/// `--format json` and `POST /api/analyze` both emit exactly this.
pub fn report_json(report: &NetworkReport) -> String {
    let mut s = to_canonical_json(report);
    s.push('\n');
    s
}

pub fn series_json(series: &[Series]) -> String {
    let mut s = to_canonical_json(&series);
    s.push('\n');
    s
}

pub fn analyze_value(v: &Value, registry: &PresetRegistry) -> Result<NetworkReport, Error> {
    AnalyzeRequest::from_json_value(v)?.run(registry)
}

pub fn sweep_value(v: &Value, registry: &PresetRegistry) -> Result<Vec<Series>, Error> {
    SweepSpec::from_json_value(v)?.run(registry)
}
