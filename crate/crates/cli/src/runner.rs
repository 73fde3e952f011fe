//! Executes the checks declared in a config, in declaration order, and
//! assembles the report document.

use std::time::Instant;

use dichoscope_core::criteria::{
    check_expansive, check_noncritical, classify_solutions, estimate_theta,
    estimate_theta_curve, pipeline_expansive_to_noncritical, pipeline_noncritical_to_dich,
    SolutionSample,
};
use dichoscope_core::dichotomy::{
    estimate_constants, estimate_sharp_alpha, extend_from_subinterval, invariance_residual,
    verify_h_dichotomy, ProjectorFamily,
};
use dichoscope_core::error::{Error, Result};
use dichoscope_core::expr::Expr;
use dichoscope_core::growth_bounds::{
    check_definition, check_matrix_bound, def_to_matrix, estimate_sharp_beta, matrix_to_def,
    measure_window_constant, BoundKind,
};
use dichoscope_core::growth_group::{group_property_suite, GroupSample};
use dichoscope_core::linalg::Mat;
use dichoscope_core::linsys::{cocycle_check, stepanov_norm, IntegratorConfig};
use dichoscope_core::{GrowthRate64, GroupSample64, LinearSystem64};

use crate::config::{AnalysisConfig, CheckSpec, ProjectorSpec};
use crate::reportdoc::{
    CheckOutcome, CurveData, PipelineStage, ReportDoc, Summary, Timings, ToolkitInfo,
};

/// Which subset of the declared checks to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckFilter {
    All,
    EstimationOnly,
    PipelineOnly,
}

struct Context {
    g: GrowthRate64,
    sys: LinearSystem64,
    lo: f64,
    hi: f64,
    grid: GroupSample64,
    icfg: IntegratorConfig<f64>,
    seed: u64,
    tol: f64,
}

impl Context {
    fn window(&self, window_h: f64) -> Result<f64> {
        let w = self.g.h_inv(window_h)?;
        if self.g.log_h(w)? <= 0.0 {
            return Err(Error::Config(format!(
                "window_h = {window_h} does not lie above the unit element"
            )));
        }
        Ok(w)
    }

    fn projector(&self, spec: &ProjectorSpec) -> Result<ProjectorFamily<f64>> {
        match (spec.constant_matrix()?, &spec.entries) {
            (Some(m), None) => {
                if m.nrows() != self.sys.dim() {
                    return Err(Error::Config(format!(
                        "projector matrix is {}x{} but the system has dimension {}",
                        m.nrows(),
                        m.ncols(),
                        self.sys.dim()
                    )));
                }
                let anchor = match spec.anchor_h {
                    Some(h) => self.g.h_inv(h)?,
                    None => self.lo,
                };
                Ok(ProjectorFamily::constant(m, anchor))
            }
            (None, Some(entries)) => {
                let n = self.sys.dim();
                if entries.len() != n * n {
                    return Err(Error::Config(format!(
                        "projector needs {} entry expressions, got {}",
                        n * n,
                        entries.len()
                    )));
                }
                let parsed: Result<Vec<Expr>> = entries.iter().map(|e| Expr::parse(e)).collect();
                let parsed = parsed?;
                Ok(ProjectorFamily::explicit("config entries", move |t: f64| {
                    let mut m = Mat::zeros(n, n);
                    for i in 0..n {
                        for j in 0..n {
                            m[(i, j)] = parsed[i * n + j].eval(t)?;
                        }
                    }
                    Ok(m)
                }))
            }
            (None, None) => Err(Error::Config(
                "projector needs either `matrix` or `entries`".into(),
            )),
            (Some(_), Some(_)) => Err(Error::Config(
                "projector takes `matrix` or `entries`, not both".into(),
            )),
        }
    }

    fn sample(&self, n_random: usize) -> SolutionSample {
        SolutionSample {
            seed: self.seed,
            n_random,
        }
    }
}

/// Run the (filtered) checks of a config and assemble the report document.
pub fn execute(cfg: &AnalysisConfig, filter: CheckFilter) -> Result<ReportDoc> {
    let started = Instant::now();
    let g = cfg.growth_rate.build()?;
    let sys = cfg.system.build()?;
    let (lo, hi) = cfg.interval.resolve(&g)?;
    let grid = GroupSample::log_h_uniform(&g, lo, hi, cfg.grid.points)?;
    let ctx = Context {
        g,
        sys,
        lo,
        hi,
        grid,
        icfg: cfg.integrator.build()?,
        seed: cfg.seed,
        tol: cfg.tol,
    };

    let selected: Vec<(usize, &CheckSpec)> = cfg
        .checks
        .iter()
        .enumerate()
        .filter(|(_, c)| match filter {
            CheckFilter::All => true,
            CheckFilter::EstimationOnly => c.is_estimation(),
            CheckFilter::PipelineOnly => matches!(c, CheckSpec::Pipeline { .. }),
        })
        .collect();
    if selected.is_empty() {
        return Err(Error::Config(match filter {
            CheckFilter::All => "config declares no checks".into(),
            CheckFilter::EstimationOnly => {
                "config declares no estimation checks (estimate_constants, sharp_exponents, theta_curve, stepanov, convert_constants)".into()
            }
            CheckFilter::PipelineOnly => "config declares no pipeline check".into(),
        }));
    }

    let mut outcomes = Vec::new();
    let mut per_check_ms = Vec::new();
    for (index, check) in selected {
        let t0 = Instant::now();
        let outcome = run_check(&ctx, index, check)?;
        per_check_ms.push(t0.elapsed().as_millis());
        outcomes.push(outcome);
    }

    let passed = outcomes.iter().filter(|o| o.pass).count();
    let summary = Summary {
        total: outcomes.len(),
        passed,
        failed: outcomes.len() - passed,
    };
    Ok(ReportDoc {
        schema_version: crate::config::SCHEMA_VERSION,
        toolkit: ToolkitInfo {
            name: "dichoscope",
            version: env!("CARGO_PKG_VERSION"),
        },
        config: cfg.clone(),
        checks: outcomes,
        summary,
        timings: Timings {
            total_ms: started.elapsed().as_millis(),
            per_check_ms,
        },
    })
}

fn to_value<S: serde::Serialize>(v: &S) -> serde_json::Value {
    serde_json::to_value(v).expect("serializable")
}

fn run_check(ctx: &Context, index: usize, check: &CheckSpec) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new(index, check.kind_name());
    match check {
        CheckSpec::GroupSuite { points, tol } => {
            let sample = GroupSample::log_h_uniform(&ctx.g, ctx.lo, ctx.hi, *points)?;
            let report = group_property_suite(&ctx.g, &sample, tol.unwrap_or(1e-9));
            out.pass = report.pass;
            out.report = Some(report);
        }
        CheckSpec::Cocycle { points, tol } => {
            let sub = GroupSample::log_h_uniform(&ctx.g, ctx.lo, ctx.hi, *points)?;
            let report = cocycle_check(&ctx.sys, sub.values(), &ctx.icfg, tol.unwrap_or(ctx.tol));
            out.pass = report.pass;
            out.report = Some(report);
        }
        CheckSpec::Invariance { projector, tol } => {
            let proj = ctx.projector(projector)?;
            let report = invariance_residual(
                &ctx.sys,
                &proj,
                ctx.grid.values(),
                &ctx.icfg,
                tol.unwrap_or(ctx.tol),
            )?;
            out.pass = report.pass;
            out.report = Some(report);
        }
        CheckSpec::Dichotomy {
            k,
            alpha,
            projector,
            tol,
        } => {
            let proj = ctx.projector(projector)?;
            let (report, cert) = verify_h_dichotomy(
                &ctx.sys,
                &ctx.g,
                &proj,
                *k,
                *alpha,
                &ctx.grid,
                &ctx.icfg,
                tol.unwrap_or(ctx.tol),
            )?;
            out.pass = report.pass;
            out.report = Some(report);
            out.certificate = Some(to_value(&cert));
        }
        CheckSpec::EstimateConstants {
            projector,
            alphas,
            k_cap,
        } => {
            let proj = ctx.projector(projector)?;
            let curve = estimate_constants(
                &ctx.sys,
                &ctx.g,
                &proj,
                &ctx.grid,
                alphas,
                &ctx.icfg,
                *k_cap,
            )?;
            out.pass = true;
            out.curve = Some(CurveData {
                kind: "alpha_K".into(),
                points: curve.points.clone(),
                best: curve.best,
            });
            out.constants = Some(to_value(&curve));
        }
        CheckSpec::SharpExponents { projector, delta } => {
            let proj = ctx.projector(projector)?;
            let alpha =
                estimate_sharp_alpha(&ctx.sys, &ctx.g, &proj, &ctx.grid, &ctx.icfg, *delta)?;
            let beta = estimate_sharp_beta(
                &ctx.sys,
                &ctx.g,
                BoundKind::Both,
                &ctx.grid,
                &ctx.icfg,
                *delta,
            )?;
            // a system with both properties must satisfy alpha <= beta
            out.pass = alpha <= beta + 1e-3;
            out.constants = Some(serde_json::json!({
                "alpha_sharp": alpha,
                "beta_sharp": beta,
                "alpha_leq_beta_tol": 1e-3,
            }));
            if !out.pass {
                out.notes.push(format!(
                    "sharp exponents violate alpha <= beta: {alpha} > {beta} + 1e-3"
                ));
            }
        }
        CheckSpec::GrowthDefinition {
            variant,
            window_h,
            c_t,
            window_points,
            tol,
        } => {
            let kind = BoundKind::from_str(variant)?;
            let window = ctx.window(*window_h)?;
            let (report, cert) = check_definition(
                &ctx.sys,
                &ctx.g,
                kind,
                window,
                *c_t,
                &ctx.grid,
                &ctx.icfg,
                tol.unwrap_or(ctx.tol),
                *window_points,
            )?;
            out.pass = report.pass;
            out.report = Some(report);
            out.certificate = Some(to_value(&cert));
        }
        CheckSpec::GrowthMatrix {
            variant,
            k0,
            beta,
            window_h,
            tol,
        } => {
            let kind = BoundKind::from_str(variant)?;
            let window = ctx.window(*window_h)?;
            let (report, cert) = check_matrix_bound(
                &ctx.sys,
                &ctx.g,
                kind,
                *k0,
                *beta,
                &ctx.grid,
                &ctx.icfg,
                tol.unwrap_or(ctx.tol),
                window,
            )?;
            out.pass = report.pass;
            out.report = Some(report);
            out.certificate = Some(to_value(&cert));
        }
        CheckSpec::ConvertConstants { window_h, c_t } => {
            let window = ctx.window(*window_h)?;
            let (k0, beta) = def_to_matrix(&ctx.g, window, *c_t)?;
            let c_t_back = matrix_to_def(&ctx.g, k0, beta, window)?;
            out.pass = true;
            out.constants = Some(serde_json::json!({
                "window_h": window_h,
                "c_t": c_t,
                "k0": k0,
                "beta": beta,
                "c_t_round_trip": c_t_back,
            }));
            out.notes.push(format!(
                "the conversion round trip is lossy by design: C_T = {c_t} returns as C_T^2 = {c_t_back}"
            ));
        }
        CheckSpec::Stepanov { window_h } => {
            let window = ctx.window(*window_h)?;
            let norm = stepanov_norm(&ctx.sys, &ctx.g, window, &ctx.grid, &ctx.icfg)?;
            out.pass = norm.is_finite();
            out.constants = Some(serde_json::json!({
                "stepanov_norm": norm,
                "gronwall_c_t": norm.exp(),
                "window_h": window_h,
            }));
            out.notes.push(
                "a finite windowed coefficient norm witnesses uniform bounded h-growth with C_T = exp(norm)"
                    .into(),
            );
        }
        CheckSpec::Noncritical {
            window_h,
            theta,
            ball_points,
            n_random,
            tol,
        } => {
            let window = ctx.window(*window_h)?;
            let (report, cert) = check_noncritical(
                &ctx.sys,
                &ctx.g,
                window,
                *theta,
                ctx.sample(*n_random),
                &ctx.grid,
                &ctx.icfg,
                tol.unwrap_or(ctx.tol),
                *ball_points,
            )?;
            out.pass = report.pass;
            out.report = Some(report);
            out.certificate = Some(to_value(&cert));
        }
        CheckSpec::ThetaCurve {
            windows_h,
            ball_points,
            n_random,
        } => {
            let windows: Result<Vec<f64>> = windows_h.iter().map(|&h| ctx.window(h)).collect();
            let curve = estimate_theta_curve(
                &ctx.sys,
                &ctx.g,
                &windows?,
                ctx.sample(*n_random),
                &ctx.grid,
                &ctx.icfg,
                *ball_points,
            )?;
            out.pass = true;
            out.curve = Some(CurveData {
                kind: "theta_T".into(),
                points: curve,
                best: None,
            });
        }
        CheckSpec::Expansive {
            l,
            beta,
            intervals_h,
            interval_points,
            n_random,
            tol,
        } => {
            let intervals: Vec<(f64, f64)> = if intervals_h.is_empty() {
                vec![(ctx.lo, ctx.hi)]
            } else {
                intervals_h
                    .iter()
                    .map(|&(a, b)| Ok((ctx.g.h_inv(a)?, ctx.g.h_inv(b)?)))
                    .collect::<Result<_>>()?
            };
            let (report, cert) = check_expansive(
                &ctx.sys,
                &ctx.g,
                *l,
                *beta,
                &intervals,
                ctx.sample(*n_random),
                &ctx.icfg,
                tol.unwrap_or(ctx.tol),
                *interval_points,
            )?;
            out.pass = report.pass;
            out.report = Some(report);
            out.certificate = Some(to_value(&cert));
        }
        CheckSpec::Classify {
            horizon_h,
            threshold,
            trajectory_points,
            n_random,
        } => {
            // the default horizon h^{-1}(1e4) is unrepresentable for slow
            // rates; clamp to the analysis interval and say so
            let (horizon, clamped) = match ctx.g.h_inv(*horizon_h) {
                Ok(t) if t <= ctx.hi => (t, false),
                _ => (ctx.hi, true),
            };
            let c = classify_solutions(
                &ctx.sys,
                &ctx.g,
                horizon,
                *threshold,
                ctx.sample(*n_random),
                &ctx.icfg,
                *trajectory_points,
            )?;
            out.pass = true;
            if clamped {
                out.notes.push(format!(
                    "horizon clamped to the analysis interval (h = {})",
                    ctx.g.h(ctx.hi)?
                ));
            }
            out.constants = Some(serde_json::json!({
                "growth_factors": c.growth_factors,
                "bounded_basis": c.v1,
                "unbounded_basis": c.v2,
                "sample_labels": c.sample_labels,
                "max_first_crossing_estimate": c.max_first_crossing,
                "first_crossing_is_estimate": true,
            }));
        }
        CheckSpec::Pipeline {
            k,
            alpha,
            projector,
            theta_target,
            tol,
        } => {
            let tol = tol.unwrap_or(ctx.tol);
            let proj = ctx.projector(projector)?;
            let stages = run_pipeline(ctx, &proj, *k, *alpha, *theta_target, tol)?;
            out.pass = stages.iter().all(|s| s.pass);
            out.stages = stages;
        }
        CheckSpec::Extend {
            k,
            alpha,
            projector,
            t1_h,
            tol,
        } => {
            let tol = tol.unwrap_or(ctx.tol);
            let proj = ctx.projector(projector)?;
            let t1 = ctx.window(*t1_h)?;
            let sub_grid = GroupSample::log_h_uniform(&ctx.g, t1, ctx.hi, ctx.grid.len())?;
            let (sub_report, sub_cert) = verify_h_dichotomy(
                &ctx.sys, &ctx.g, &proj, *k, *alpha, &sub_grid, &ctx.icfg, tol,
            )?;
            let ext = extend_from_subinterval(
                &ctx.sys,
                &ctx.g,
                &proj,
                &sub_cert,
                ctx.hi,
                ctx.grid.len(),
                &ctx.icfg,
                tol,
            )?;
            out.pass = sub_report.pass && ext.report.pass;
            out.report = Some(sub_report);
            out.extra_report = Some(ext.report.clone());
            out.certificate = Some(to_value(&ext.certificate));
            out.constants = Some(serde_json::json!({
                "n_factor": ext.n_factor,
                "k_tilde": ext.k_tilde,
                "t1_h": t1_h,
            }));
        }
    }
    Ok(out)
}

/// The equivalence chain: every stage records the constants it produced and
/// the formula that produced them.
fn run_pipeline(
    ctx: &Context,
    proj: &ProjectorFamily<f64>,
    k: f64,
    alpha: f64,
    theta_target: f64,
    tol: f64,
) -> Result<Vec<PipelineStage>> {
    let mut stages = Vec::new();

    let (r1, cert) =
        verify_h_dichotomy(&ctx.sys, &ctx.g, proj, k, alpha, &ctx.grid, &ctx.icfg, tol)?;
    let pass1 = r1.pass;
    stages.push(PipelineStage {
        stage: "dichotomy".into(),
        formula: "given constants (K, alpha)".into(),
        constants: vec![("K".into(), k), ("alpha".into(), alpha)],
        report: Some(r1),
        pass: pass1,
    });

    let (l, beta) = dichoscope_core::criteria::pipeline_dich_to_expansive(&cert);
    stages.push(PipelineStage {
        stage: "expansiveness-constants".into(),
        formula: "L = K, beta = alpha".into(),
        constants: vec![("L".into(), l), ("beta".into(), beta)],
        report: None,
        pass: true,
    });

    let (r2, _) = check_expansive(
        &ctx.sys,
        &ctx.g,
        l,
        beta,
        &[(ctx.lo, ctx.hi)],
        ctx.sample(20),
        &ctx.icfg,
        tol,
        17,
    )?;
    let pass2 = r2.pass;
    stages.push(PipelineStage {
        stage: "expansiveness".into(),
        formula: "|x(t)| <= L[h(t*a^-1)^-beta |x(a)| + h(b*t^-1)^-beta |x(b)|]".into(),
        constants: vec![],
        report: Some(r2),
        pass: pass2,
    });

    let (window, theta) = pipeline_expansive_to_noncritical(&ctx.g, l, beta, theta_target)?;
    let window_h = ctx.g.h(window)?;
    stages.push(PipelineStage {
        stage: "noncriticality-window".into(),
        formula: "h(T) = (2L/theta_target)^(1/beta); theta = 2L*h(T)^-beta = theta_target".into(),
        constants: vec![("h(T)".into(), window_h), ("theta".into(), theta)],
        report: None,
        pass: true,
    });

    let (r3, _) = check_noncritical(
        &ctx.sys,
        &ctx.g,
        window,
        theta,
        ctx.sample(20),
        &ctx.grid,
        &ctx.icfg,
        tol,
        64,
    )?;
    let pass3 = r3.pass;
    stages.push(PipelineStage {
        stage: "noncriticality".into(),
        formula: "|x(t)| <= theta * sup over the ball of radius T around t".into(),
        constants: vec![],
        report: Some(r3),
        pass: pass3,
    });

    let theta_meas = estimate_theta(
        &ctx.sys,
        &ctx.g,
        window,
        ctx.sample(20),
        &ctx.grid,
        &ctx.icfg,
        64,
    )?;
    let c_t_meas = measure_window_constant(
        &ctx.sys,
        &ctx.g,
        BoundKind::Growth,
        window,
        &ctx.grid,
        &ctx.icfg,
        9,
    )?
    .max(1.0);
    stages.push(PipelineStage {
        stage: "measured-constants".into(),
        formula: "theta measured as the sup ratio |x(t)|/sup_ball; C_T measured as sup ‖Φ‖ over windows"
            .into(),
        constants: vec![
            ("theta_measured".into(), theta_meas),
            ("C_T_measured".into(), c_t_meas),
        ],
        report: None,
        pass: theta_meas < 1.0,
    });

    let rec = pipeline_noncritical_to_dich(&ctx.g, window, theta_meas, c_t_meas)?;
    stages.push(PipelineStage {
        stage: "recovered-dichotomy-constants".into(),
        formula: "K = C_T/theta; alpha = -ln(theta)/ln(h(T))".into(),
        constants: vec![("K".into(), rec.k), ("alpha".into(), rec.alpha)],
        report: None,
        pass: !rec.degenerate,
    });

    let (r4, _) = verify_h_dichotomy(
        &ctx.sys,
        &ctx.g,
        proj,
        rec.k.max(1.0),
        rec.alpha,
        &ctx.grid,
        &ctx.icfg,
        tol,
    )?;
    let pass4 = r4.pass;
    stages.push(PipelineStage {
        stage: "recovered-dichotomy".into(),
        formula: "the recovered constants re-verify the dichotomy inequalities".into(),
        constants: vec![],
        report: Some(r4),
        pass: pass4,
    });

    let sharp = estimate_sharp_alpha(&ctx.sys, &ctx.g, proj, &ctx.grid, &ctx.icfg, 0.05)?;
    stages.push(PipelineStage {
        stage: "exponent-conservatism".into(),
        formula: "recovered alpha must not exceed the sharp alpha (tolerance 1e-3)".into(),
        constants: vec![
            ("alpha_recovered".into(), rec.alpha),
            ("alpha_sharp".into(), sharp),
        ],
        report: None,
        pass: rec.alpha <= sharp + 1e-3,
    });

    Ok(stages)
}
