//! The report document written after a run: echo of the effective config,
//! one entry per executed check, and a timing block. Everything except the
//! timing block is a deterministic function of the config.

use serde::Serialize;

use dichoscope_core::CheckReport64;

use crate::config::AnalysisConfig;

#[derive(Clone, Debug, Serialize)]
pub struct ToolkitInfo {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct PipelineStage {
    pub stage: String,
    /// The producing formula, written out so a reader can re-derive every
    /// constant in the chain.
    pub formula: String,
    pub constants: Vec<(String, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<CheckReport64>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CurveData {
    /// "alpha_K" or "theta_T"
    pub kind: String,
    pub points: Vec<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best: Option<(f64, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub kind: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<CheckReport64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extra_report: Option<CheckReport64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub stages: Vec<PipelineStage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curve: Option<CurveData>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CheckOutcome {
    pub fn new(index: usize, kind: &str) -> Self {
        CheckOutcome {
            name: format!("{index}:{kind}"),
            kind: kind.to_string(),
            pass: false,
            report: None,
            extra_report: None,
            certificate: None,
            constants: None,
            stages: Vec::new(),
            curve: None,
            notes: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, Serialize, Default)]
pub struct Timings {
    pub total_ms: u128,
    pub per_check_ms: Vec<u128>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportDoc {
    pub schema_version: u32,
    pub toolkit: ToolkitInfo,
    /// Echo of the effective config (after CLI overrides).
    pub config: AnalysisConfig,
    pub checks: Vec<CheckOutcome>,
    pub summary: Summary,
    /// Wall-clock data; the one block excluded from determinism guarantees.
    pub timings: Timings,
}

impl ReportDoc {
    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
