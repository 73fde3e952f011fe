use super::*;
use crate::dichotomy::{verify_h_dichotomy, ProjectorFamily};
use crate::linalg::Mat;
use approx::assert_relative_eq;

fn cfg() -> IntegratorConfig<f64> {
    IntegratorConfig::default()
}

#[test]
fn zero_system_passes_definition_with_unit_constant() {
    let g = GrowthRate::identity_rate();
    let sys = LinearSystem::zero(2);
    let grid = GroupSample::log_h_uniform(&g, 1.0, 40.0, 10).unwrap();
    for window in [2.0, 5.0] {
        let (report, cert) = check_definition(
            &sys,
            &g,
            BoundKind::Both,
            window,
            1.0,
            &grid,
            &cfg(),
            1e-9,
            7,
        )
        .unwrap();
        assert!(report.pass, "worst {:e}", report.worst_violation);
        assert_eq!(cert.beta, 0.0);
        assert_eq!(cert.k0, 1.0);
    }
}

#[test]
fn paper_power_sharp_window_constant() {
    // ‖Φ(2s, s)‖ = 2 on the closed form, so the sharp C_T for h(T) = 2 is 2
    let g = GrowthRate::identity_rate();
    let sys = LinearSystem::paper_power(1.0);
    let grid = GroupSample::log_h_uniform(&g, 1.0, 30.0, 10).unwrap();
    let (pass_report, _) = check_definition(
        &sys,
        &g,
        BoundKind::Growth,
        2.0,
        2.0 + 1e-6,
        &grid,
        &cfg(),
        1e-6,
        9,
    )
    .unwrap();
    assert!(pass_report.pass, "worst {:e}", pass_report.worst_violation);

    let (fail_report, cert) = check_definition(
        &sys,
        &g,
        BoundKind::Growth,
        2.0,
        1.9,
        &grid,
        &cfg(),
        1e-6,
        9,
    )
    .unwrap();
    assert!(!fail_report.pass);
    assert!(!cert.verified);
}

#[test]
fn paper_log_sharp_window_constant() {
    // same computation in h-space: h(t)/h(s) <= 2 on the window gives
    // ‖Φ‖ <= 2 with equality at the window edge
    let g = GrowthRate::log1p_rate();
    let sys = LinearSystem::paper_log();
    let hi = g.h_inv(50.0).unwrap();
    let grid = GroupSample::log_h_uniform(&g, g.unit(), hi, 10).unwrap();
    let window = g.h_inv(2.0).unwrap();
    let (report, _) = check_definition(
        &sys,
        &g,
        BoundKind::Growth,
        window,
        2.0 + 1e-5,
        &grid,
        &cfg(),
        1e-6,
        9,
    )
    .unwrap();
    assert!(report.pass, "worst {:e}", report.worst_violation);
    let (fail, _) = check_definition(
        &sys,
        &g,
        BoundKind::Growth,
        window,
        1.9,
        &grid,
        &cfg(),
        1e-6,
        9,
    )
    .unwrap();
    assert!(!fail.pass);
}

#[test]
fn matrix_bound_examples() {
    // paper_power(a): ‖Φ(t,s)‖ = (max/min)^a two-sided
    let g = GrowthRate::identity_rate();
    for alpha in [0.5, 2.0] {
        let sys = LinearSystem::paper_power(alpha);
        let grid = GroupSample::log_h_uniform(&g, 1.0, 30.0, 12).unwrap();
        let (report, cert) = check_matrix_bound(
            &sys,
            &g,
            BoundKind::Both,
            1.0 + 1e-6,
            alpha,
            &grid,
            &cfg(),
            1e-6,
            2.0,
        )
        .unwrap();
        assert!(report.pass, "alpha {alpha}: worst {:e}", report.worst_violation);
        assert!(cert.verified);
    }

    // zero system: K0 = 1, beta = 0
    let sys = LinearSystem::zero(2);
    let grid = GroupSample::log_h_uniform(&g, 1.0, 30.0, 8).unwrap();
    let (report, _) =
        check_matrix_bound(&sys, &g, BoundKind::Both, 1.0, 0.0, &grid, &cfg(), 1e-9, 2.0).unwrap();
    assert!(report.pass);

    // const_diag(-1, 1) with h = e^t: ‖Φ(t,s)‖ = e^{|t-s|}
    let g_exp = GrowthRate::exp_rate();
    let sys = LinearSystem::const_diag(&[-1.0, 1.0]);
    let grid = GroupSample::log_h_uniform(&g_exp, -2.0, 3.0, 12).unwrap();
    let (ok, _) = check_matrix_bound(
        &sys,
        &g_exp,
        BoundKind::Both,
        1.0 + 1e-9,
        1.0,
        &grid,
        &cfg(),
        1e-6,
        1.0,
    )
    .unwrap();
    assert!(ok.pass, "worst {:e}", ok.worst_violation);
    let (fail, _) = check_matrix_bound(
        &sys,
        &g_exp,
        BoundKind::Both,
        1.0,
        0.5,
        &grid,
        &cfg(),
        1e-6,
        1.0,
    )
    .unwrap();
    assert!(!fail.pass);
    assert!(!fail.witness.is_empty());
}

#[test]
fn conversion_formulas() {
    let g = GrowthRate::identity_rate();
    // C_T = 2, h(T) = 4 -> (2, 0.5)
    let (k0, beta) = def_to_matrix(&g, 4.0, 2.0).unwrap();
    assert_eq!(k0, 2.0);
    assert_relative_eq!(beta, 0.5, max_relative = 1e-15);
    // C_T = 1: constant bound
    let (_, beta) = def_to_matrix(&g, 4.0, 1.0).unwrap();
    assert_eq!(beta, 0.0);
    // C_T = h(T): exponent 1
    let (_, beta) = def_to_matrix(&g, 7.0, 7.0).unwrap();
    assert_relative_eq!(beta, 1.0, max_relative = 1e-15);
    // h(T) <= 1 rejected
    assert!(matches!(def_to_matrix(&g, 0.5, 2.0), Err(Error::Domain(_))));

    // K0 = 2, beta = 0.5, h(T) = 4 -> 4
    assert_relative_eq!(matrix_to_def(&g, 2.0, 0.5, 4.0).unwrap(), 4.0, max_relative = 1e-15);
    // beta = 0 -> K0
    assert_eq!(matrix_to_def(&g, 3.0, 0.0, 4.0).unwrap(), 3.0);
}

#[test]
fn conversion_round_trip_is_lossy_by_design() {
    // def -> matrix -> def squares the constant: C_T · h(T)^{ln C_T / ln h(T)}
    // equals C_T², so the round trip must NOT be treated as an identity
    let g = GrowthRate::identity_rate();
    let (k0, beta) = def_to_matrix(&g, 4.0, 3.0).unwrap();
    let back = matrix_to_def(&g, k0, beta, 4.0).unwrap();
    assert_relative_eq!(back, 9.0, max_relative = 1e-12);
}

#[test]
fn definition_and_matrix_forms_imply_each_other_on_grids() {
    let g = GrowthRate::identity_rate();
    let sys = LinearSystem::paper_power(1.0);
    let grid = GroupSample::log_h_uniform(&g, 1.0, 30.0, 10).unwrap();
    let window = 2.0;
    let c_t = 2.0 + 1e-6;

    // definition holds -> matrix form with converted constants holds with
    // multiplicative slack <= C_T
    let (def_report, cert) = check_definition(
        &sys,
        &g,
        BoundKind::Growth,
        window,
        c_t,
        &grid,
        &cfg(),
        1e-6,
        9,
    )
    .unwrap();
    assert!(def_report.pass);
    let (mat_report, _) = check_matrix_bound(
        &sys,
        &g,
        BoundKind::Growth,
        cert.k0,
        cert.beta,
        &grid,
        &cfg(),
        c_t - 1.0,
        window,
    )
    .unwrap();
    assert!(mat_report.pass, "worst {:e}", mat_report.worst_violation);

    // matrix form holds -> definition with the converted constant holds
    let (mat2, cert2) = check_matrix_bound(
        &sys,
        &g,
        BoundKind::Growth,
        1.0 + 1e-6,
        1.0,
        &grid,
        &cfg(),
        1e-6,
        window,
    )
    .unwrap();
    assert!(mat2.pass);
    let (def2, _) = check_definition(
        &sys,
        &g,
        BoundKind::Growth,
        window,
        cert2.c_t,
        &grid,
        &cfg(),
        1e-6,
        9,
    )
    .unwrap();
    assert!(def2.pass, "worst {:e}", def2.worst_violation);
}

#[test]
fn alpha_leq_beta_for_paper_examples() {
    let g = GrowthRate::identity_rate();
    let sys = LinearSystem::paper_power(2.0);
    let grid = GroupSample::log_h_uniform(&g, 1.0, 50.0, 16).unwrap();
    let proj = ProjectorFamily::constant(Mat::diag(&[1.0, 0.0]), 1.0);
    let (_, dich) =
        verify_h_dichotomy(&sys, &g, &proj, 1.0 + 1e-6, 2.0, &grid, &cfg(), 1e-6).unwrap();
    let (_, gb) = check_matrix_bound(
        &sys,
        &g,
        BoundKind::Both,
        1.0 + 1e-6,
        2.0,
        &grid,
        &cfg(),
        1e-6,
        2.0,
    )
    .unwrap();
    let report = alpha_leq_beta_check(&dich, &gb, 1e-9);
    assert!(report.pass);

    // synthetic violation: alpha = 2 against beta = 1
    let mut fake = dich.clone();
    fake.alpha = 2.0;
    let mut weak = gb.clone();
    weak.beta = 1.0;
    let report = alpha_leq_beta_check(&fake, &weak, 1e-9);
    assert!(!report.pass);
}

#[test]
fn sharp_beta_matches_analytic_exponents() {
    let g = GrowthRate::log1p_rate();
    let sys = LinearSystem::paper_log();
    let hi = g.h_inv(50.0).unwrap();
    let grid = GroupSample::log_h_uniform(&g, g.unit(), hi, 20).unwrap();
    let beta = estimate_sharp_beta(&sys, &g, BoundKind::Both, &grid, &cfg(), 0.05).unwrap();
    assert_relative_eq!(beta, 1.0, epsilon = 1e-3);

    let g = GrowthRate::identity_rate();
    for alpha in [0.5, 2.0] {
        let sys = LinearSystem::paper_power(alpha);
        let grid = GroupSample::log_h_uniform(&g, 1.0, 50.0, 20).unwrap();
        let beta = estimate_sharp_beta(&sys, &g, BoundKind::Both, &grid, &cfg(), 0.05).unwrap();
        assert_relative_eq!(beta, alpha, epsilon = 1e-3);
    }
}
