use super::*;
use crate::dichotomy::{verify_h_dichotomy, ProjectorFamily};
use crate::growth_bounds::{check_definition, estimate_sharp_beta, BoundKind};
use crate::linalg::Mat;
use approx::assert_relative_eq;

const LN_4: f64 = 1.3862943611198906;
const LN_16: f64 = 2.772588722239781;

fn cfg() -> IntegratorConfig<f64> {
    IntegratorConfig::default()
}

fn sample() -> SolutionSample {
    SolutionSample::default()
}

#[test]
fn zero_system_fails_noncriticality_for_every_theta() {
    // constant solutions: |x(t)| equals the sup over any ball, so the
    // ratio is identically 1
    let g = GrowthRate::identity_rate();
    let sys = LinearSystem::zero(2);
    let grid = GroupSample::log_h_uniform(&g, 1.0, 60.0, 12).unwrap();
    for k in 1..=9 {
        let theta = 0.1 * k as f64;
        let (report, cert) =
            check_noncritical(&sys, &g, 4.0, theta, sample(), &grid, &cfg(), 1e-6, 16).unwrap();
        assert!(!report.pass, "theta = {theta} unexpectedly passed");
        assert!(!cert.verified);
    }
    let worst = estimate_theta(&sys, &g, 4.0, sample(), &grid, &cfg(), 16).unwrap();
    assert_relative_eq!(worst, 1.0, max_relative = 1e-9);
}

#[test]
fn pure_contraction_ratio_is_inverse_window() {
    // paper_power(1), h(t) = t, direction (1, 0): |x(u)| = const/u, the
    // sup over the ball [t/H, tH] sits at the left edge, so the ratio is
    // exactly 1/H
    let g = GrowthRate::identity_rate();
    let sys = LinearSystem::paper_power(1.0);
    let grid = GroupSample::log_h_uniform(&g, 1.0, 60.0, 12).unwrap();
    let window = 4.0;
    let ratio = noncritical_worst_ratio_for(
        &sys,
        &g,
        window,
        &[vec![1.0, 0.0]],
        &grid,
        &cfg(),
        32,
    )
    .unwrap();
    assert_relative_eq!(ratio, 0.25, max_relative = 1e-7);

    // the check passes just above the sharp theta and fails just below
    let vectors = [vec![1.0, 0.0]];
    let (pass, _) = noncritical_with_vectors(&sys, &g, window, 0.26, &vectors, &grid);
    assert!(pass);
    let (fail, _) = noncritical_with_vectors(&sys, &g, window, 0.24, &vectors, &grid);
    assert!(!fail);
}

fn noncritical_with_vectors(
    sys: &LinearSystem<f64>,
    g: &GrowthRate<f64>,
    window: f64,
    theta: f64,
    vectors: &[Vec<f64>],
    grid: &GroupSample<f64>,
) -> (bool, f64) {
    // targeted variant of check_noncritical for explicit directions
    let ratio =
        noncritical_worst_ratio_for(sys, g, window, vectors, grid, &cfg(), 32).unwrap();
    (ratio <= theta * (1.0 + 1e-6), ratio)
}

#[test]
fn estimate_theta_shrinks_with_window_for_paper_examples() {
    let g = GrowthRate::log1p_rate();
    let sys = LinearSystem::paper_log();
    let hi = g.h_inv(50.0).unwrap();
    let grid = GroupSample::log_h_uniform(&g, g.unit(), hi, 12).unwrap();
    let windows: Vec<f64> = [1.5, 2.0, 3.0, 4.5, 6.0]
        .iter()
        .map(|&h| g.h_inv(h).unwrap())
        .collect();
    let curve = estimate_theta_curve(&sys, &g, &windows, sample(), &grid, &cfg(), 24).unwrap();
    for w in curve.windows(2) {
        assert!(
            w[1].1 <= w[0].1 * (1.0 + 1e-9),
            "theta curve not nonincreasing: {curve:?}"
        );
    }
    assert!(curve.iter().all(|&(_, th)| th < 1.0));
}

#[test]
fn noncritical_reports_ball_clips_near_representability_limit() {
    // with grid tops near the largest representable time for the slow rate,
    // the widest balls cannot be materialized in full; the checker clips
    // them and says so
    let g = GrowthRate::log1p_rate();
    let sys = LinearSystem::paper_log();
    let hi = g.h_inv(600.0).unwrap();
    let grid = GroupSample::log_h_uniform(&g, g.unit(), hi, 8).unwrap();
    let window = g.h_inv(4.0).unwrap();
    let (report, _) =
        check_noncritical(&sys, &g, window, 0.6, sample(), &grid, &cfg(), 1e-6, 16).unwrap();
    assert!(report
        .notes
        .iter()
        .any(|n| n.contains("largest representable time")));
}

#[test]
fn estimate_theta_const_diag_cross_checked_by_brute_force() {
    // h = e^t, A = diag(-1, 1): solutions (c1 e^{-u}, c2 e^{u}) from the
    // anchor. Brute-force the worst ratio over many random directions on a
    // dense ball grid and compare with the estimator.
    let g = GrowthRate::exp_rate();
    let sys = LinearSystem::const_diag(&[-1.0, 1.0]);
    let grid = GroupSample::log_h_uniform(&g, 0.0, 6.0, 10).unwrap();
    let window = 1.5;
    let many = SolutionSample {
        seed: 7,
        n_random: 50,
    };
    let est = estimate_theta(&sys, &g, window, many, &grid, &cfg(), 48).unwrap();

    // independent brute force on the closed form
    let mut brute: f64 = 0.0;
    let dirs = unit_vectors::<f64>(2, 7, 50);
    for t in grid.values().iter().filter(|&&t| t >= window) {
        for d in &dirs {
            let x = |u: f64| ((d[0] * (-u).exp()).powi(2) + (d[1] * u.exp()).powi(2)).sqrt();
            let mut sup: f64 = 0.0;
            let m = 400;
            for k in 0..=m {
                let u = (t - window) + 2.0 * window * (k as f64) / (m as f64);
                sup = sup.max(x(u));
            }
            brute = brute.max(x(*t) / sup);
        }
    }
    assert!(est < 1.0 && brute < 1.0);
    assert_relative_eq!(est, brute, max_relative = 1e-3);
}

#[test]
fn expansive_passes_at_interval_ends_when_l_at_least_one() {
    // at t = a the bound is L(|x(a)| + positive), so L >= 1 suffices
    let g = GrowthRate::identity_rate();
    let sys = LinearSystem::paper_power(1.0);
    let (report, _) = check_expansive(
        &sys,
        &g,
        1.0,
        1.0,
        &[(2.0, 2.0000001)],
        sample(),
        &cfg(),
        1e-6,
        3,
    )
    .unwrap();
    assert!(report.pass, "worst {:e}", report.worst_violation);
}

#[test]
fn expansive_paper_log_with_dichotomy_constants() {
    let g = GrowthRate::log1p_rate();
    let sys = LinearSystem::paper_log();
    let hi = g.h_inv(50.0).unwrap();
    let mid = g.h_inv(5.0).unwrap();
    let intervals = [(g.unit(), hi), (g.unit(), mid), (mid, hi)];
    let (report, cert) = check_expansive(
        &sys,
        &g,
        1.0 + 1e-6,
        1.0,
        &intervals,
        sample(),
        &cfg(),
        1e-6,
        17,
    )
    .unwrap();
    assert!(report.pass, "worst {:e}", report.worst_violation);
    assert!(cert.verified);
}

#[test]
fn zero_system_fails_expansiveness_beyond_the_weight_threshold() {
    // constant solutions against decaying endpoint weights: at the interval
    // midpoint the bound is 2L·H^{-beta/2}, which dips below 1 once
    // H > (2L)^{2/beta} (and in particular once h(b*a^{-1}) >= 4L on these
    // combinations)
    let g = GrowthRate::identity_rate();
    let sys = LinearSystem::zero(2);
    for (l, beta) in [(1.0, 0.5), (1.0, 1.0), (2.0, 0.5), (2.0, 1.0)] {
        let h_needed = (2.0 * l as f64).powf(2.0 / beta);
        assert!(h_needed >= 4.0 * l, "threshold sanity");
        let b = 1.5 * h_needed; // interval [1, b] has h(b*a^{-1}) = b
        let (report, _) = check_expansive(
            &sys,
            &g,
            l,
            beta,
            &[(1.0, b)],
            sample(),
            &cfg(),
            1e-6,
            33,
        )
        .unwrap();
        assert!(!report.pass, "(L, beta) = ({l}, {beta}) should fail at H = {b}");
    }
}

#[test]
fn psi_examples() {
    // K = 1: the zero sits at the unit element
    let g = GrowthRate::exp_rate();
    assert_relative_eq!(psi_zero(&g, 1.0, 0.7).unwrap(), 0.0, epsilon = 1e-12);

    // h = e^t, K = 4, alpha = 0.5: zero at ln(K^{1/alpha}) = ln 16
    let z = psi_zero(&g, 4.0, 0.5).unwrap();
    assert_relative_eq!(z, LN_16, max_relative = 1e-12);
    assert!(psi(&g, z, 4.0, 0.5).unwrap().abs() <= 1e-9);

    // psi at the unit element is 1/K - K <= 0
    for k in [1.0, 2.0, 4.0] {
        let v = psi(&g, g.unit(), k, 1.0).unwrap();
        assert_relative_eq!(v, 1.0 / k - k, max_relative = 1e-12);
        assert!(v <= 0.0);
    }

    // strictly increasing in u on sampled points
    let gl = GrowthRate::log1p_rate();
    let pts = GroupSample::log_h_uniform(&gl, 0.5, 1000.0, 30).unwrap();
    let vals: Vec<f64> = pts
        .values()
        .iter()
        .map(|&p| psi(&gl, p, 3.0, 0.8).unwrap())
        .collect();
    assert!(vals.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn pipeline_constant_maps() {
    let g = GrowthRate::exp_rate();
    // expansiveness inherits (K, alpha) unchanged
    let sys = LinearSystem::const_diag(&[-1.0, 1.0]);
    let grid = GroupSample::log_h_uniform(&g, 0.0, 5.0, 10).unwrap();
    let proj = ProjectorFamily::constant(Mat::diag(&[1.0, 0.0]), 0.0);
    let (_, cert) =
        verify_h_dichotomy(&sys, &g, &proj, 4.0, 0.5, &grid, &cfg(), 1e-6).unwrap();
    assert_eq!(pipeline_dich_to_expansive(&cert), (4.0, 0.5));

    // window for L = 1, beta = 1, theta = 0.5: h(T) = 4, so T = ln 4
    let (window, theta) = pipeline_expansive_to_noncritical(&g, 1.0, 1.0, 0.5).unwrap();
    assert_relative_eq!(window, LN_4, max_relative = 1e-12);
    assert_eq!(theta, 0.5);

    // recovered dichotomy constants: theta = 0.5, C_T = 2, h(T) = 4
    let gi = GrowthRate::identity_rate();
    let rec = pipeline_noncritical_to_dich(&gi, 4.0, 0.5, 2.0).unwrap();
    assert_relative_eq!(rec.k, 4.0, max_relative = 1e-12);
    assert_relative_eq!(rec.alpha, 0.5, max_relative = 1e-12);
    assert!(!rec.degenerate);

    // theta near 1 degenerates toward alpha = 0 and is flagged
    let rec = pipeline_noncritical_to_dich(&gi, 4.0, 0.999999, 2.0).unwrap();
    assert!(rec.alpha < 1e-3 && rec.degenerate);

    // invalid inputs are rejected
    assert!(pipeline_expansive_to_noncritical(&g, 1.0, 1.0, 1.5).is_err());
    assert!(pipeline_noncritical_to_dich(&gi, 0.5, 0.5, 2.0).is_err());
}

#[test]
fn full_pipeline_coherence_paper_log() {
    let g = GrowthRate::log1p_rate();
    let sys = LinearSystem::paper_log();
    let hi = g.h_inv(50.0).unwrap();
    let grid = GroupSample::log_h_uniform(&g, g.unit(), hi, 16).unwrap();
    let proj = ProjectorFamily::constant(Mat::diag(&[1.0, 0.0]), grid.values()[0]);

    // dichotomy
    let (r1, dich) =
        verify_h_dichotomy(&sys, &g, &proj, 1.0 + 1e-6, 1.0, &grid, &cfg(), 1e-6).unwrap();
    assert!(r1.pass);

    // -> expansiveness with the same constants
    let (l, beta) = pipeline_dich_to_expansive(&dich);
    let intervals = [(grid.values()[0], *grid.values().last().unwrap())];
    let (r2, _) =
        check_expansive(&sys, &g, l, beta, &intervals, sample(), &cfg(), 1e-6, 17).unwrap();
    assert!(r2.pass, "worst {:e}", r2.worst_violation);

    // -> noncriticality at the pipeline window
    let (window, theta) = pipeline_expansive_to_noncritical(&g, l, beta, 0.5).unwrap();
    let (r3, _) =
        check_noncritical(&sys, &g, window, theta, sample(), &grid, &cfg(), 1e-6, 64).unwrap();
    assert!(r3.pass, "worst {:e}", r3.worst_violation);

    // -> measured constants recover a (weaker) dichotomy
    let theta_meas = estimate_theta(&sys, &g, window, sample(), &grid, &cfg(), 64).unwrap();
    let (_, gb) = check_definition(
        &sys,
        &g,
        BoundKind::Growth,
        window,
        4.0 + 1e-5,
        &grid,
        &cfg(),
        1e-6,
        9,
    )
    .unwrap();
    let rec = pipeline_noncritical_to_dich(&g, window, theta_meas, gb.c_t).unwrap();
    let (r4, _) =
        verify_h_dichotomy(&sys, &g, &proj, rec.k, rec.alpha, &grid, &cfg(), 1e-6).unwrap();
    assert!(r4.pass, "worst {:e}", r4.worst_violation);

    // the recovered exponent is conservative: alpha' <= sharp alpha
    let sharp = estimate_sharp_beta(&sys, &g, BoundKind::Both, &grid, &cfg(), 0.05).unwrap();
    assert!(rec.alpha <= sharp + 1e-3, "alpha' = {} vs sharp {}", rec.alpha, sharp);
}

#[test]
fn classify_solutions_recovers_projector_ranges() {
    let g = GrowthRate::log1p_rate();
    let sys = LinearSystem::paper_log();
    let horizon = g.h_inv(50.0).unwrap();
    let c = classify_solutions(&sys, &g, horizon, 10.0, sample(), &cfg(), 24).unwrap();
    assert_eq!(c.v1.len(), 1);
    assert_eq!(c.v2.len(), 1);
    assert!(angle_to_span(&[1.0, 0.0], &c.v1) <= 1e-6);
    assert!(angle_to_span(&[0.0, 1.0], &c.v2) <= 1e-6);
    assert!(c.max_first_crossing.is_some());

    // the zero system is entirely bounded
    let gi = GrowthRate::identity_rate();
    let zero = LinearSystem::zero(2);
    let c = classify_solutions(&zero, &gi, 1e4, 10.0, sample(), &cfg(), 12).unwrap();
    assert_eq!(c.v1.len(), 2);
    assert!(c.v2.is_empty());
    assert!(c.max_first_crossing.is_none());
    assert!(c.sample_labels.iter().all(|&(_, bounded)| bounded));

    // the power examples split the same way
    for alpha in [0.5, 2.0] {
        let sys = LinearSystem::paper_power(alpha);
        let c = classify_solutions(&sys, &gi, 1e4, 10.0, sample(), &cfg(), 24).unwrap();
        assert_eq!(c.v1.len(), 1);
        assert!(angle_to_span(&[1.0, 0.0], &c.v1) <= 1e-6);
        assert!(angle_to_span(&[0.0, 1.0], &c.v2) <= 1e-6);
    }
}

#[test]
fn classification_input_validation() {
    let g = GrowthRate::identity_rate();
    let sys = LinearSystem::paper_power(1.0);
    assert!(classify_solutions(&sys, &g, 100.0, 0.5, sample(), &cfg(), 12).is_err());
    assert!(classify_solutions(&sys, &g, 0.5, 10.0, sample(), &cfg(), 12).is_err());
}
