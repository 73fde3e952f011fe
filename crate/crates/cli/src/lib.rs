//! Config-driven front end for the dichotomy verification toolkit: config
//! ingestion, check orchestration, report and plot-data emission.

pub mod config;
pub mod plots;
pub mod reportdoc;
pub mod runner;

use std::path::Path;

use dichoscope_core::error::{Error, Result};

pub use config::AnalysisConfig;
pub use reportdoc::ReportDoc;
pub use runner::{execute, CheckFilter};

/// Process exit codes: 0 all checks passed, 1 config or runtime error,
/// 2 at least one check failed.
pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

/// Load a config document from disk.
pub fn load_config(path: &Path) -> Result<AnalysisConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    AnalysisConfig::from_json(&text)
}

/// Apply CLI overrides onto a loaded config. The echoed config in the
/// report always reflects the effective values.
pub fn apply_overrides(cfg: &mut AnalysisConfig, seed: Option<u64>, tol: Option<f64>) {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = tol {
        cfg.tol = t;
    }
}
