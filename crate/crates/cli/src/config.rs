//! The analysis config document: one JSON file per analysis, with the
//! growth rate, the system, the grid, and the list of checks to run.
//! Expressions are embedded as strings.

use serde::{Deserialize, Serialize};

use dichoscope_core::error::{Error, Result};
use dichoscope_core::expr::Expr;
use dichoscope_core::linalg::Mat;
use dichoscope_core::linsys::IntegratorConfig;
use dichoscope_core::{GrowthRate64, LinearSystem64};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnalysisConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub growth_rate: GrowthRateSpec,
    pub system: SystemSpec,
    pub interval: IntervalSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub integrator: IntegratorSpec,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Default multiplicative tolerance for checks that do not set one.
    #[serde(default = "default_tol")]
    pub tol: f64,
    pub checks: Vec<CheckSpec>,
}

fn default_schema_version() -> u32 {
    SCHEMA_VERSION
}

fn default_seed() -> u64 {
    42
}

fn default_tol() -> f64 {
    1e-6
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum GrowthRateSpec {
    Exp,
    Identity,
    Log1p,
    Ged {
        gamma: String,
    },
    Custom {
        h: String,
        h_inv: String,
        #[serde(default)]
        a0: Option<f64>,
        #[serde(default)]
        label: Option<String>,
    },
}

impl GrowthRateSpec {
    pub fn build(&self) -> Result<GrowthRate64> {
        match self {
            GrowthRateSpec::Exp => Ok(GrowthRate64::exp_rate()),
            GrowthRateSpec::Identity => Ok(GrowthRate64::identity_rate()),
            GrowthRateSpec::Log1p => Ok(GrowthRate64::log1p_rate()),
            GrowthRateSpec::Ged { gamma } => Ok(GrowthRate64::ged_rate(Expr::parse(gamma)?)),
            GrowthRateSpec::Custom { h, h_inv, a0, label } => GrowthRate64::custom(
                label.as_deref().unwrap_or("custom"),
                Expr::parse(h)?,
                Expr::parse(h_inv)?,
                *a0,
            ),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum SystemSpec {
    PaperLog,
    PaperPower {
        alpha: f64,
    },
    ConstDiag {
        lambdas: Vec<f64>,
    },
    Zero {
        dim: usize,
    },
    Custom {
        dim: usize,
        entries: Vec<String>,
        #[serde(default)]
        domain_lo: Option<f64>,
    },
}

impl SystemSpec {
    pub fn build(&self) -> Result<LinearSystem64> {
        match self {
            SystemSpec::PaperLog => Ok(LinearSystem64::paper_log()),
            SystemSpec::PaperPower { alpha } => {
                if *alpha <= 0.0 {
                    return Err(Error::Config("paper_power alpha must be positive".into()));
                }
                Ok(LinearSystem64::paper_power(*alpha))
            }
            SystemSpec::ConstDiag { lambdas } => {
                if lambdas.is_empty() {
                    return Err(Error::Config("const_diag needs at least one entry".into()));
                }
                Ok(LinearSystem64::const_diag(lambdas))
            }
            SystemSpec::Zero { dim } => {
                if *dim == 0 {
                    return Err(Error::Config("zero system needs dim >= 1".into()));
                }
                Ok(LinearSystem64::zero(*dim))
            }
            SystemSpec::Custom {
                dim,
                entries,
                domain_lo,
            } => {
                let parsed: Result<Vec<Expr>> =
                    entries.iter().map(|e| Expr::parse(e)).collect();
                LinearSystem64::from_exprs(*dim, parsed?, *domain_lo)
            }
        }
    }
}

/// Analysis interval, given either in h-space or directly in time.
/// h-space is the ergonomic choice for slow rates, where interesting upper
/// endpoints like h⁻¹(50) are astronomically large in t.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IntervalSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo_h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi_h: Option<f64>,
}

impl IntervalSpec {
    /// Resolve to time-space endpoints.
    pub fn resolve(&self, g: &GrowthRate64) -> Result<(f64, f64)> {
        let lo = match (self.lo, self.lo_h) {
            (Some(t), None) => t,
            (None, Some(h)) => g.h_inv(h)?,
            (None, None) => return Err(Error::Config("interval: set lo or lo_h".into())),
            _ => return Err(Error::Config("interval: set only one of lo and lo_h".into())),
        };
        let hi = match (self.hi, self.hi_h) {
            (Some(t), None) => t,
            (None, Some(h)) => g.h_inv(h)?,
            (None, None) => return Err(Error::Config("interval: set hi or hi_h".into())),
            _ => return Err(Error::Config("interval: set only one of hi and hi_h".into())),
        };
        if !(hi > lo) {
            return Err(Error::Config(format!(
                "interval [{lo}, {hi}] is empty or reversed"
            )));
        }
        Ok((lo, hi))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(default = "default_grid_points")]
    pub points: usize,
}

fn default_grid_points() -> usize {
    40
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            points: default_grid_points(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IntegratorSpec {
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default)]
    pub prefer_oracle: bool,
}

fn default_rel_tol() -> f64 {
    1e-9
}
fn default_abs_tol() -> f64 {
    1e-12
}
fn default_max_steps() -> usize {
    100_000
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        IntegratorSpec {
            rel_tol: default_rel_tol(),
            abs_tol: default_abs_tol(),
            max_step: None,
            max_steps: default_max_steps(),
            prefer_oracle: false,
        }
    }
}

impl IntegratorSpec {
    pub fn build(&self) -> Result<IntegratorConfig<f64>> {
        let cfg = IntegratorConfig {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step,
            max_steps: self.max_steps,
            initial_step: None,
            prefer_oracle: self.prefer_oracle,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A projector: either a constant matrix conjugated by the fundamental
/// matrix (anchored at `anchor_h` in h-space, defaulting to the interval's
/// lower endpoint), or entry expressions for an explicit map t ↦ P(t).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProjectorSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor_h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<String>>,
}

impl ProjectorSpec {
    pub fn constant_matrix(&self) -> Result<Option<Mat<f64>>> {
        match &self.matrix {
            None => Ok(None),
            Some(rows) => {
                let n = rows.len();
                if rows.iter().any(|r| r.len() != n) {
                    return Err(Error::Config("projector matrix must be square".into()));
                }
                Ok(Some(Mat::from_fn(n, n, |i, j| rows[i][j])))
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CheckSpec {
    /// Group identity suite on a log-h-uniform sample.
    GroupSuite {
        #[serde(default = "default_suite_points")]
        points: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol: Option<f64>,
    },
    /// Transition cocycle and inverse identities on a coarse grid.
    Cocycle {
        #[serde(default = "default_cocycle_points")]
        points: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol: Option<f64>,
    },
    /// Invariance identity P(t)Φ(t,s) = Φ(t,s)P(s).
    Invariance {
        projector: ProjectorSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol: Option<f64>,
    },
    /// Verify the dichotomy inequalities with fixed constants.
    Dichotomy {
        k: f64,
        alpha: f64,
        projector: ProjectorSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol: Option<f64>,
    },
    /// The K(α) envelope curve over candidate exponents.
    EstimateConstants {
        projector: ProjectorSpec,
        alphas: Vec<f64>,
        #[serde(default = "default_k_cap")]
        k_cap: f64,
    },
    /// Sharp exponent estimates and the α ≤ β compatibility check.
    SharpExponents {
        projector: ProjectorSpec,
        #[serde(default = "default_delta")]
        delta: f64,
    },
    /// Windowed solution bound ‖Φ(t,s)‖ ≤ C_T on translated windows.
    GrowthDefinition {
        variant: String,
        window_h: f64,
        c_t: f64,
        #[serde(default = "default_window_points")]
        window_points: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol: Option<f64>,
    },
    /// Matrix-form bound ‖Φ(t,s)‖ ≤ K₀(h-ratio)^β.
    GrowthMatrix {
        variant: String,
        k0: f64,
        beta: f64,
        window_h: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol: Option<f64>,
    },
    /// Constant conversions between the windowed and matrix forms.
    ConvertConstants { window_h: f64, c_t: f64 },
    /// Windowed coefficient norm and its Gronwall growth constant.
    Stepanov { window_h: f64 },
    /// Noncriticality display with fixed (T, θ).
    Noncritical {
        window_h: f64,
        theta: f64,
        #[serde(default = "default_ball_points")]
        ball_points: usize,
        #[serde(default = "default_n_random")]
        n_random: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol: Option<f64>,
    },
    /// Sharp θ(T) over a list of windows.
    ThetaCurve {
        windows_h: Vec<f64>,
        #[serde(default = "default_ball_points")]
        ball_points: usize,
        #[serde(default = "default_n_random")]
        n_random: usize,
    },
    /// Expansiveness display with fixed (L, β) on sampled intervals.
    Expansive {
        l: f64,
        beta: f64,
        /// Intervals in h-space; empty means the whole analysis interval.
        #[serde(default)]
        intervals_h: Vec<(f64, f64)>,
        #[serde(default = "default_interval_points")]
        interval_points: usize,
        #[serde(default = "default_n_random")]
        n_random: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol: Option<f64>,
    },
    /// Bounded/unbounded direction split from the singular structure.
    Classify {
        #[serde(default = "default_horizon_h")]
        horizon_h: f64,
        #[serde(default = "default_threshold")]
        threshold: f64,
        #[serde(default = "default_trajectory_points")]
        trajectory_points: usize,
        #[serde(default = "default_n_random")]
        n_random: usize,
    },
    /// The full equivalence chain, starting from verified (K, α).
    Pipeline {
        k: f64,
        alpha: f64,
        projector: ProjectorSpec,
        #[serde(default = "default_theta_target")]
        theta_target: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol: Option<f64>,
    },
    /// Certify on [T₁, hi], then extend the certificate down to the unit.
    Extend {
        k: f64,
        alpha: f64,
        projector: ProjectorSpec,
        t1_h: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol: Option<f64>,
    },
}

fn default_suite_points() -> usize {
    100
}
fn default_cocycle_points() -> usize {
    10
}
fn default_k_cap() -> f64 {
    1e6
}
fn default_delta() -> f64 {
    0.05
}
fn default_window_points() -> usize {
    9
}
fn default_ball_points() -> usize {
    64
}
fn default_n_random() -> usize {
    20
}
fn default_interval_points() -> usize {
    17
}
fn default_horizon_h() -> f64 {
    1e4
}
fn default_threshold() -> f64 {
    10.0
}
fn default_trajectory_points() -> usize {
    24
}
fn default_theta_target() -> f64 {
    0.5
}

impl CheckSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            CheckSpec::GroupSuite { .. } => "group_suite",
            CheckSpec::Cocycle { .. } => "cocycle",
            CheckSpec::Invariance { .. } => "invariance",
            CheckSpec::Dichotomy { .. } => "dichotomy",
            CheckSpec::EstimateConstants { .. } => "estimate_constants",
            CheckSpec::SharpExponents { .. } => "sharp_exponents",
            CheckSpec::GrowthDefinition { .. } => "growth_definition",
            CheckSpec::GrowthMatrix { .. } => "growth_matrix",
            CheckSpec::ConvertConstants { .. } => "convert_constants",
            CheckSpec::Stepanov { .. } => "stepanov",
            CheckSpec::Noncritical { .. } => "noncritical",
            CheckSpec::ThetaCurve { .. } => "theta_curve",
            CheckSpec::Expansive { .. } => "expansive",
            CheckSpec::Classify { .. } => "classify",
            CheckSpec::Pipeline { .. } => "pipeline",
            CheckSpec::Extend { .. } => "extend",
        }
    }

    /// Does this check belong to the `estimate` subcommand family?
    pub fn is_estimation(&self) -> bool {
        matches!(
            self,
            CheckSpec::EstimateConstants { .. }
                | CheckSpec::SharpExponents { .. }
                | CheckSpec::ThetaCurve { .. }
                | CheckSpec::Stepanov { .. }
                | CheckSpec::ConvertConstants { .. }
        )
    }
}

impl AnalysisConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: AnalysisConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("config does not parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (this toolkit reads {})",
                self.schema_version, SCHEMA_VERSION
            )));
        }
        if self.grid.points < 2 {
            return Err(Error::Config("grid.points must be at least 2".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("tol must be positive".into()));
        }
        if self.checks.is_empty() {
            return Err(Error::Config("checks list must not be empty".into()));
        }
        for (i, check) in self.checks.iter().enumerate() {
            let path = format!("checks[{i}]({})", check.kind_name());
            match check {
                CheckSpec::Dichotomy { k, alpha, .. } => {
                    if !(*k >= 1.0) {
                        return Err(Error::Config(format!("{path}.k must be >= 1")));
                    }
                    if !(*alpha > 0.0) {
                        return Err(Error::Config(format!("{path}.alpha must be > 0")));
                    }
                }
                CheckSpec::Noncritical { theta, .. } => {
                    if !(*theta > 0.0 && *theta < 1.0) {
                        return Err(Error::Config(format!(
                            "{path}.theta must lie in (0,1), got {theta}"
                        )));
                    }
                }
                CheckSpec::Pipeline { theta_target, k, alpha, .. } => {
                    if !(*theta_target > 0.0 && *theta_target < 1.0) {
                        return Err(Error::Config(format!(
                            "{path}.theta_target must lie in (0,1), got {theta_target}"
                        )));
                    }
                    if !(*k >= 1.0) || !(*alpha > 0.0) {
                        return Err(Error::Config(format!(
                            "{path} needs k >= 1 and alpha > 0"
                        )));
                    }
                }
                CheckSpec::Expansive { l, beta, .. } => {
                    if !(*l > 0.0) || !(*beta > 0.0) {
                        return Err(Error::Config(format!(
                            "{path} needs l > 0 and beta > 0"
                        )));
                    }
                }
                CheckSpec::GrowthDefinition { variant, c_t, .. } => {
                    dichoscope_core::growth_bounds::BoundKind::from_str(variant)?;
                    if !(*c_t >= 1.0) {
                        return Err(Error::Config(format!("{path}.c_t must be >= 1")));
                    }
                }
                CheckSpec::GrowthMatrix { variant, k0, beta, .. } => {
                    dichoscope_core::growth_bounds::BoundKind::from_str(variant)?;
                    if !(*k0 >= 1.0) || !(*beta >= 0.0) {
                        return Err(Error::Config(format!(
                            "{path} needs k0 >= 1 and beta >= 0"
                        )));
                    }
                }
                CheckSpec::Classify { threshold, .. } => {
                    if !(*threshold > 1.0) {
                        return Err(Error::Config(format!(
                            "{path}.threshold must exceed 1"
                        )));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}
