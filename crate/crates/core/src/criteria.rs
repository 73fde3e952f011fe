//! Noncriticality and expansiveness checkers, the Ψ threshold function, and
//! the constant-conversion pipelines that tie the three equivalent
//! properties together:
//!
//! - a dichotomy (K, α) yields expansiveness with (L, β) = (K, α);
//! - expansiveness (L, β) yields noncriticality with θ = 2L·h(T)^{-β},
//!   which is < 1 once T is large enough (the toolkit takes a target θ and
//!   solves for T);
//! - noncriticality (T, θ) plus a windowed growth bound C_T yields a
//!   dichotomy with K = θ⁻¹·C_T and α = -ln(θ)/ln(h(T)).

use serde::Serialize;

use crate::dichotomy::{unit_vectors, DichotomyCertificate};
use crate::error::{Error, Result};
use crate::growth_group::{GrowthRate, GroupSample};
use crate::linalg::norm2;
use crate::linsys::{IntegratorConfig, LinearSystem, TransitionCache};
use crate::real::Real;
use crate::report::{CheckReport, ReportBuilder};

/// How solutions are sampled for the solution-level checkers: the canonical
/// basis plus `n_random` seeded unit vectors.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SolutionSample {
    pub seed: u64,
    pub n_random: usize,
}

impl Default for SolutionSample {
    fn default() -> Self {
        SolutionSample {
            seed: 42,
            n_random: 20,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NoncriticalityCertificate<T> {
    pub window: T,
    pub theta: T,
    pub solution_sample: SolutionSample,
    pub grid: GroupSample<T>,
    pub worst_ratio: T,
    pub verified: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpansivenessCertificate<T> {
    pub l: T,
    pub beta: T,
    pub interval_sample: Vec<(T, T)>,
    pub worst_slack: T,
    pub verified: bool,
}

/// Evaluation grid for the noncriticality sup: for each grid point t ≥ T,
/// a log-h-uniform sub-grid (including both endpoints) of the ball
/// [t∗T^{∗-1}, t∗T], clipped below at the unit element. Clips are recorded
/// in the report rather than silently absorbed.
struct BallLayout<T> {
    union_grid: Vec<T>,
    /// (index of t in the union grid, indices of its ball sub-grid)
    balls: Vec<(usize, Vec<usize>)>,
    clipped: usize,
    clipped_top: usize,
}

fn layout_balls<T: Real>(
    g: &GrowthRate<T>,
    window: T,
    grid: &[T],
    ball_points: usize,
) -> Result<BallLayout<T>> {
    let u_w = g.log_h(window)?;
    if u_w <= T::zero() {
        return Err(Error::Domain(format!(
            "window {window} must lie strictly above the unit element"
        )));
    }
    let pts = ball_points.max(2);
    let mut clipped = 0usize;
    let mut clipped_top = 0usize;
    let u_grid_hi = g.log_h(grid[grid.len() - 1])?;
    // gather every u coordinate we will need, keyed to its source
    let mut us: Vec<T> = Vec::new();
    let mut centers: Vec<(T, Vec<T>)> = Vec::new();
    for &t in grid {
        let u_t = g.log_h(t)?;
        if u_t < u_w {
            // the noncriticality display only quantifies over t >= T
            continue;
        }
        let mut lo = u_t - u_w;
        if lo < T::zero() {
            lo = T::zero();
            clipped += 1;
        }
        let mut hi = u_t + u_w;
        // balls of the topmost grid points can exceed the largest
        // representable time for slow rates; a clipped ball shrinks the sup
        // and can only make the check stricter
        if matches!(g.exp_h_inv(hi), Err(Error::Overflow(_))) {
            let mut ok = u_grid_hi.max(u_t);
            let mut bad = hi;
            for _ in 0..64 {
                let mid = T::of(0.5) * (ok + bad);
                if g.exp_h_inv(mid).is_ok() {
                    ok = mid;
                } else {
                    bad = mid;
                }
            }
            hi = ok;
            clipped_top += 1;
        }
        let mut ball = Vec::with_capacity(pts);
        for k in 0..pts {
            let f = T::of(k as f64 / (pts - 1) as f64);
            ball.push(lo + (hi - lo) * f);
        }
        us.push(u_t);
        us.extend_from_slice(&ball);
        centers.push((u_t, ball));
    }
    if centers.is_empty() {
        return Err(Error::Config(
            "no grid points at or above the window; nothing to check".into(),
        ));
    }
    us.push(T::zero()); // the unit element anchors the solutions
    us.sort_by(|a, b| a.partial_cmp(b).unwrap());
    us.dedup();
    let union_grid: Vec<T> = us
        .iter()
        .map(|&u| g.exp_h_inv(u))
        .collect::<Result<_>>()?;
    let find = |u: T| -> usize {
        us.binary_search_by(|x| x.partial_cmp(&u).unwrap())
            .expect("u coordinate was inserted above")
    };
    let balls = centers
        .iter()
        .map(|(u_t, ball)| (find(*u_t), ball.iter().map(|&u| find(u)).collect()))
        .collect();
    Ok(BallLayout {
        union_grid,
        balls,
        clipped,
        clipped_top,
    })
}

/// Check the noncriticality display: |x(t)| ≤ θ·sup over the ball of
/// radius T around t, for every sampled solution and every grid t ≥ T.
#[allow(clippy::too_many_arguments)]
pub fn check_noncritical<T: Real>(
    sys: &LinearSystem<T>,
    g: &GrowthRate<T>,
    window: T,
    theta: T,
    sample: SolutionSample,
    grid: &GroupSample<T>,
    cfg: &IntegratorConfig<T>,
    tol: T,
    ball_points: usize,
) -> Result<(CheckReport<T>, NoncriticalityCertificate<T>)> {
    if !(theta > T::zero() && theta < T::one()) {
        return Err(Error::Config(format!("theta must lie in (0,1), got {theta}")));
    }
    let vectors = unit_vectors::<T>(sys.dim(), sample.seed, sample.n_random);
    let (report, worst_ratio) =
        noncritical_sweep(sys, g, window, Some(theta), &vectors, grid, cfg, tol, ball_points)?;
    let cert = NoncriticalityCertificate {
        window,
        theta,
        solution_sample: sample,
        grid: grid.clone(),
        worst_ratio,
        verified: report.pass,
    };
    Ok((report, cert))
}

/// Sharp θ for a window: the max over sampled solutions and grid t ≥ T of
/// |x(t)| / sup over the ball.
#[allow(clippy::too_many_arguments)]
pub fn estimate_theta<T: Real>(
    sys: &LinearSystem<T>,
    g: &GrowthRate<T>,
    window: T,
    sample: SolutionSample,
    grid: &GroupSample<T>,
    cfg: &IntegratorConfig<T>,
    ball_points: usize,
) -> Result<T> {
    let vectors = unit_vectors::<T>(sys.dim(), sample.seed, sample.n_random);
    let (_, worst) =
        noncritical_sweep(sys, g, window, None, &vectors, grid, cfg, T::of(1e-6), ball_points)?;
    Ok(worst)
}

/// Sharp ratio |x(t)|/sup for explicit initial directions (anchored at the
/// unit element), for studying a single solution family.
#[allow(clippy::too_many_arguments)]
pub fn noncritical_worst_ratio_for<T: Real>(
    sys: &LinearSystem<T>,
    g: &GrowthRate<T>,
    window: T,
    directions: &[Vec<T>],
    grid: &GroupSample<T>,
    cfg: &IntegratorConfig<T>,
    ball_points: usize,
) -> Result<T> {
    let (_, worst) = noncritical_sweep(
        sys,
        g,
        window,
        None,
        directions,
        grid,
        cfg,
        T::of(1e-6),
        ball_points,
    )?;
    Ok(worst)
}

/// θ(T) over a list of windows.
#[allow(clippy::too_many_arguments)]
pub fn estimate_theta_curve<T: Real>(
    sys: &LinearSystem<T>,
    g: &GrowthRate<T>,
    windows: &[T],
    sample: SolutionSample,
    grid: &GroupSample<T>,
    cfg: &IntegratorConfig<T>,
    ball_points: usize,
) -> Result<Vec<(T, T)>> {
    windows
        .iter()
        .map(|&w| Ok((w, estimate_theta(sys, g, w, sample, grid, cfg, ball_points)?)))
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn noncritical_sweep<T: Real>(
    sys: &LinearSystem<T>,
    g: &GrowthRate<T>,
    window: T,
    theta: Option<T>,
    vectors: &[Vec<T>],
    grid: &GroupSample<T>,
    cfg: &IntegratorConfig<T>,
    tol: T,
    ball_points: usize,
) -> Result<(CheckReport<T>, T)> {
    let layout = layout_balls(g, window, grid.values(), ball_points)?;
    let cache = TransitionCache::build(sys, &layout.union_grid, cfg)?;
    let unit = g.unit();
    let anchor = layout
        .union_grid
        .iter()
        .position(|&t| t == unit)
        .unwrap_or(0);
    let mut rb = ReportBuilder::new("check_noncritical", tol);
    if layout.clipped > 0 {
        rb.note(format!(
            "{} ball(s) clipped at the unit element; the sup is taken over the clipped ball",
            layout.clipped
        ));
    }
    if layout.clipped_top > 0 {
        rb.note(format!(
            "{} ball(s) clipped at the largest representable time; the shrunken sup only tightens the check",
            layout.clipped_top
        ));
    }
    let mut worst_ratio = T::zero();
    for xi in vectors {
        let traj = cache.propagate(anchor, xi);
        for (t_idx, ball) in &layout.balls {
            let value = norm2(&traj[*t_idx]);
            let mut sup = T::zero();
            for &b in ball {
                sup = sup.max(norm2(&traj[b]));
            }
            if sup <= T::zero() {
                rb.observe_bool(
                    "noncritical-sup-positive",
                    layout.union_grid[*t_idx],
                    window,
                    false,
                );
                continue;
            }
            worst_ratio = worst_ratio.max(value / sup);
            if let Some(th) = theta {
                rb.observe_bound(
                    "noncritical",
                    layout.union_grid[*t_idx],
                    window,
                    value,
                    th * sup,
                );
            }
        }
    }
    Ok((rb.finish(), worst_ratio))
}

/// Check the expansiveness display on each interval [a, b]:
/// |x(t)| ≤ L[h(t∗a^{∗-1})^{-β}|x(a)| + h(b∗t^{∗-1})^{-β}|x(b)|]
/// for sampled solutions and a sub-grid of t in [a, b]. Sampling unit
/// initial conditions at `a` doubles as the operator-level variant, since
/// the solutions are exactly the columns Φ(t, a)ξ.
#[allow(clippy::too_many_arguments)]
pub fn check_expansive<T: Real>(
    sys: &LinearSystem<T>,
    g: &GrowthRate<T>,
    l: T,
    beta: T,
    intervals: &[(T, T)],
    sample: SolutionSample,
    cfg: &IntegratorConfig<T>,
    tol: T,
    interval_points: usize,
) -> Result<(CheckReport<T>, ExpansivenessCertificate<T>)> {
    if !(l > T::zero()) || !(beta > T::zero()) {
        return Err(Error::Config(format!(
            "expansiveness needs L > 0 and beta > 0, got ({l}, {beta})"
        )));
    }
    if intervals.is_empty() {
        return Err(Error::Config("no intervals to check".into()));
    }
    let pts = interval_points.max(3);
    let mut rb = ReportBuilder::new("check_expansive", tol);
    let mut worst_slack = T::infinity();
    let ln_l = l.ln();
    for &(a, b) in intervals {
        let u_a = g.log_h(a)?;
        let u_b = g.log_h(b)?;
        if u_b <= u_a {
            return Err(Error::Config(format!("bad interval [{a}, {b}]")));
        }
        let mut sub = Vec::with_capacity(pts);
        for k in 0..pts {
            let f = T::of(k as f64 / (pts - 1) as f64);
            sub.push(g.exp_h_inv(u_a + (u_b - u_a) * f)?);
        }
        let us: Vec<T> = sub.iter().map(|&t| g.log_h(t)).collect::<Result<_>>()?;
        let cache = TransitionCache::build(sys, &sub, cfg)?;
        for xi in unit_vectors::<T>(sys.dim(), sample.seed, sample.n_random) {
            let traj = cache.propagate(0, &xi);
            let xa = norm2(&traj[0]);
            let xb = norm2(&traj[pts - 1]);
            for (k, x) in traj.iter().enumerate() {
                let weight_a = (ln_l - beta * (us[k] - u_a)).exp();
                let weight_b = (ln_l - beta * (u_b - us[k])).exp();
                let rhs = weight_a * xa + weight_b * xb;
                let lhs = norm2(x);
                rb.observe_bound("expansive", sub[k], a, lhs, rhs);
                worst_slack = worst_slack.min(rhs - lhs);
            }
        }
    }
    let report = rb.finish();
    let cert = ExpansivenessCertificate {
        l,
        beta,
        interval_sample: intervals.to_vec(),
        worst_slack,
        verified: report.pass,
    };
    Ok((report, cert))
}

/// Ψ(u) = K⁻¹·h(u)^α − K·h(u)^{-α}: the margin by which the expanding
/// component overtakes the contracting one at group distance u.
pub fn psi<T: Real>(g: &GrowthRate<T>, point: T, k: T, alpha: T) -> Result<T> {
    if !(k >= T::one()) || !(alpha > T::zero()) {
        return Err(Error::Config(format!(
            "psi needs K >= 1 and alpha > 0, got ({k}, {alpha})"
        )));
    }
    let u = g.log_h(point)?;
    Ok((alpha * u - k.ln()).exp() - (k.ln() - alpha * u).exp())
}

/// The unique zero of Ψ: h⁻¹(K^{1/α}). At and below the unit element Ψ is
/// nonpositive (Ψ(e∗) = 1/K − K ≤ 0).
pub fn psi_zero<T: Real>(g: &GrowthRate<T>, k: T, alpha: T) -> Result<T> {
    if !(k >= T::one()) || !(alpha > T::zero()) {
        return Err(Error::Config(format!(
            "psi_zero needs K >= 1 and alpha > 0, got ({k}, {alpha})"
        )));
    }
    g.exp_h_inv(k.ln() / alpha)
}

/// A dichotomy certificate transfers to expansiveness with the same
/// constants: (L, β) = (K, α).
pub fn pipeline_dich_to_expansive<T: Real>(cert: &DichotomyCertificate<T>) -> (T, T) {
    (cert.k, cert.alpha)
}

/// Solve θ_target = 2L·h(T)^{-β} for the window: T = h⁻¹((2L/θ)^{1/β}).
/// The choice of θ is explicit because the construction only demands
/// "T large enough"; the returned θ equals the target by construction.
pub fn pipeline_expansive_to_noncritical<T: Real>(
    g: &GrowthRate<T>,
    l: T,
    beta: T,
    theta_target: T,
) -> Result<(T, T)> {
    if !(theta_target > T::zero() && theta_target < T::one()) {
        return Err(Error::Config(format!(
            "theta target must lie in (0,1), got {theta_target}"
        )));
    }
    if !(l > T::zero()) || !(beta > T::zero()) {
        return Err(Error::Config(format!(
            "pipeline needs L > 0 and beta > 0, got ({l}, {beta})"
        )));
    }
    let ratio = T::of(2.0) * l / theta_target;
    if !(ratio > T::one()) {
        return Err(Error::Config(format!(
            "2L/theta = {ratio} must exceed 1 for the window to lie above the unit"
        )));
    }
    let window = g.exp_h_inv(ratio.ln() / beta)?;
    Ok((window, theta_target))
}

/// Dichotomy constants recovered from measured noncriticality and growth
/// constants: K = θ⁻¹·C_T and α = -ln(θ)/ln(h(T)).
#[derive(Clone, Debug, Serialize)]
pub struct RecoveredDichotomyConstants<T> {
    pub k: T,
    pub alpha: T,
    /// θ near 1 drives α toward 0; flagged rather than rejected.
    pub degenerate: bool,
}

pub fn pipeline_noncritical_to_dich<T: Real>(
    g: &GrowthRate<T>,
    window: T,
    theta: T,
    c_t: T,
) -> Result<RecoveredDichotomyConstants<T>> {
    if !(theta > T::zero() && theta < T::one()) {
        return Err(Error::Config(format!("theta must lie in (0,1), got {theta}")));
    }
    if !(c_t >= T::one()) {
        return Err(Error::Config(format!("C_T = {c_t} must be >= 1")));
    }
    let h_w = g.h(window)?;
    if h_w <= T::one() {
        return Err(Error::Domain(format!(
            "h(T) = {h_w} must exceed 1 to recover an exponent"
        )));
    }
    let alpha = -theta.ln() / h_w.ln();
    Ok(RecoveredDichotomyConstants {
        k: c_t / theta,
        alpha,
        degenerate: alpha <= T::of(1e-3),
    })
}

/// Orthonormal estimates of the bounded-direction subspace V₁ and a
/// complement V₂, from the singular structure of Φ(horizon, e∗).
#[derive(Clone, Debug)]
pub struct SolutionClassification<T> {
    /// Right-singular vectors whose growth factor stays at or below the
    /// threshold (columns span the bounded-direction estimate).
    pub v1: Vec<Vec<T>>,
    /// The complementary right-singular vectors.
    pub v2: Vec<Vec<T>>,
    /// Growth factors (singular values of Φ(horizon, e∗)), descending.
    pub growth_factors: Vec<T>,
    /// Per sampled initial condition: (growth factor, bounded?).
    pub sample_labels: Vec<(T, bool)>,
    /// Empirical max over sampled unbounded directions of the first grid
    /// time where the growth factor exceeded the threshold. An estimate
    /// from a finite horizon, not a certified bound.
    pub max_first_crossing: Option<T>,
}

/// Classify directions as bounded or unbounded by their finite-horizon
/// growth factor |Φ(horizon, e∗)ξ| / |ξ| against a threshold. The true sup
/// over [e∗, ∞) is unobservable; the finite-horizon proxy is validated
/// against closed forms in the tests.
#[allow(clippy::too_many_arguments)]
pub fn classify_solutions<T: Real>(
    sys: &LinearSystem<T>,
    g: &GrowthRate<T>,
    horizon: T,
    threshold: T,
    sample: SolutionSample,
    cfg: &IntegratorConfig<T>,
    trajectory_points: usize,
) -> Result<SolutionClassification<T>> {
    if !(threshold > T::one()) {
        return Err(Error::Config(format!(
            "classification threshold {threshold} must exceed 1"
        )));
    }
    let unit = g.unit();
    if !(horizon > unit) {
        return Err(Error::Config(format!(
            "horizon {horizon} must lie above the unit element {unit}"
        )));
    }
    let grid = GroupSample::log_h_uniform(g, unit, horizon, trajectory_points.max(2))?;
    let cache = TransitionCache::build(sys, grid.values(), cfg)?;
    let phi = cache.phi(grid.len() - 1, 0);
    let svd = phi.svd();
    let mut v1 = Vec::new();
    let mut v2 = Vec::new();
    for (i, &sigma) in svd.sigma.iter().enumerate() {
        let col = svd.v.col(i);
        if sigma <= threshold {
            v1.push(col);
        } else {
            v2.push(col);
        }
    }

    let mut sample_labels = Vec::new();
    let mut max_first_crossing: Option<T> = None;
    for xi in unit_vectors::<T>(sys.dim(), sample.seed, sample.n_random) {
        let traj = cache.propagate(0, &xi);
        let factor = norm2(&traj[traj.len() - 1]);
        let bounded = factor <= threshold;
        if !bounded {
            let crossing = traj
                .iter()
                .zip(grid.values())
                .find(|(x, _)| norm2(x) > threshold)
                .map(|(_, &t)| t);
            if let Some(c) = crossing {
                max_first_crossing = Some(match max_first_crossing {
                    Some(m) => m.max(c),
                    None => c,
                });
            }
        }
        sample_labels.push((factor, bounded));
    }
    Ok(SolutionClassification {
        v1,
        v2,
        growth_factors: svd.sigma,
        sample_labels,
        max_first_crossing,
    })
}

/// Principal angle between a unit vector and the span of an orthonormal
/// set (used to validate subspace estimates against closed forms).
pub fn angle_to_span<T: Real>(v: &[T], span: &[Vec<T>]) -> T {
    let mut proj_sq = T::zero();
    for b in span {
        let c = crate::linalg::dot(v, b);
        proj_sq = proj_sq + c * c;
    }
    let norm = norm2(v);
    let cosine = (proj_sq.sqrt() / norm).min(T::one());
    cosine.acos()
}

#[cfg(test)]
mod tests;
