//! Projector families and uniform h-dichotomies: verification, constant
//! estimation, solution splitting, equivalent forms, and the extension of a
//! certificate from a subinterval [T₁, ∞) down to [e∗, ∞).
//!
//! The dichotomy inequalities are
//!
//! ```text
//! ‖Φ(t,s)P(s)‖ ≤ K (h(t)/h(s))^{-α}   for t ≥ s
//! ‖Φ(t,s)Q(s)‖ ≤ K (h(s)/h(t))^{-α}   for s ≥ t,   Q = I - P
//! ```
//!
//! with K ≥ 1, α > 0. Bounds are evaluated in log-h space and checked with
//! multiplicative slack `lhs ≤ rhs·(1+tol)`, because the two sides span many
//! orders of magnitude across a log-h grid.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::growth_group::{GrowthRate, GroupSample};
use crate::linalg::{norm2, Mat};
use crate::linsys::{IntegratorConfig, LinearSystem, TransitionCache};
use crate::quad::{integrate, QuadConfig};
use crate::real::Real;
use crate::report::{CheckReport, ReportBuilder};

type ProjectorFn<T> = Arc<dyn Fn(T) -> Result<Mat<T>> + Send + Sync>;

/// A projector family P(t): either a constant projector conjugated by the
/// fundamental matrix Φ(·) = Φ(·, anchor), or an explicit map t ↦ P(t).
#[derive(Clone)]
pub enum ProjectorFamily<T: Real> {
    Constant { p: Mat<T>, anchor: T },
    Explicit { name: String, f: ProjectorFn<T> },
}

impl<T: Real> std::fmt::Debug for ProjectorFamily<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.describe())
    }
}

impl<T: Real> ProjectorFamily<T> {
    pub fn constant(p: Mat<T>, anchor: T) -> Self {
        ProjectorFamily::Constant { p, anchor }
    }

    pub fn explicit(
        name: &str,
        f: impl Fn(T) -> Result<Mat<T>> + Send + Sync + 'static,
    ) -> Self {
        ProjectorFamily::Explicit {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ProjectorFamily::Constant { p, anchor } => {
                let entries: Vec<String> = (0..p.nrows())
                    .map(|i| {
                        let row: Vec<String> =
                            (0..p.ncols()).map(|j| format!("{}", p[(i, j)])).collect();
                        format!("[{}]", row.join(", "))
                    })
                    .collect();
                format!("constant [{}] anchored at t = {anchor}", entries.join(", "))
            }
            ProjectorFamily::Explicit { name, .. } => format!("explicit map '{name}'"),
        }
    }

    /// Rank of an idempotent matrix equals its trace.
    pub fn rank_at(&self, sys: &LinearSystem<T>, t: T, cfg: &IntegratorConfig<T>) -> Result<usize> {
        let p = self.at(sys, t, cfg)?;
        let mut tr = T::zero();
        for i in 0..p.nrows() {
            tr = tr + p[(i, i)];
        }
        Ok(tr
            .to_f64_lossy()
            .round()
            .max(0.0) as usize)
    }

    /// P(t). For the constant kind this is Φ(t)·P·Φ(t)⁻¹; a numerically
    /// singular Φ(t) is a hard error since transition matrices of linear
    /// systems are invertible.
    pub fn at(&self, sys: &LinearSystem<T>, t: T, cfg: &IntegratorConfig<T>) -> Result<Mat<T>> {
        match self {
            ProjectorFamily::Explicit { f, .. } => f(t),
            ProjectorFamily::Constant { p, anchor } => {
                let phi = sys.transition_mat(t, *anchor, cfg)?;
                let phi_inv = phi.inverse()?;
                Ok(phi.matmul(p).matmul(&phi_inv))
            }
        }
    }

    /// P at every grid point. For the constant kind the fundamental factors
    /// come from the cache when the anchor is a grid point.
    pub fn on_grid(
        &self,
        sys: &LinearSystem<T>,
        cache: &TransitionCache<T>,
        cfg: &IntegratorConfig<T>,
    ) -> Result<Vec<Mat<T>>> {
        let grid = cache.grid();
        match self {
            ProjectorFamily::Explicit { f, .. } => grid.iter().map(|&t| f(t)).collect(),
            ProjectorFamily::Constant { p, anchor } => {
                let anchor_idx = grid.iter().position(|&t| t == *anchor);
                grid.iter()
                    .enumerate()
                    .map(|(i, &t)| {
                        let phi = match anchor_idx {
                            Some(a) => cache.phi(i, a),
                            None => sys.transition_mat(t, *anchor, cfg)?,
                        };
                        let phi_inv = phi.inverse()?;
                        Ok(phi.matmul(p).matmul(&phi_inv))
                    })
                    .collect()
            }
        }
    }
}

/// Idempotency and rank-constancy diagnostics for a projector family.
pub fn projector_family_diagnostics<T: Real>(
    sys: &LinearSystem<T>,
    proj: &ProjectorFamily<T>,
    grid: &[T],
    cfg: &IntegratorConfig<T>,
    tol: T,
) -> CheckReport<T> {
    let mut rb = ReportBuilder::new("projector_family", tol);
    let mut rank0: Option<usize> = None;
    for &t in grid {
        match proj.at(sys, t, cfg) {
            Ok(p) => {
                let resid = p.matmul(&p).sub(&p).spectral_norm();
                rb.observe("idempotency", t, t, resid);
                let mut tr = T::zero();
                for i in 0..p.nrows() {
                    tr = tr + p[(i, i)];
                }
                let rank = tr.to_f64_lossy().round() as i64;
                match rank0 {
                    None => rank0 = Some(rank.max(0) as usize),
                    Some(r0) => {
                        rb.observe_bool("rank-constant", t, t, rank == r0 as i64);
                    }
                }
            }
            Err(e) => rb.observe_error("projector-eval", t, t, &e),
        }
    }
    rb.finish()
}

/// A verified (or attempted) dichotomy certificate.
#[derive(Clone, Debug, Serialize)]
pub struct DichotomyCertificate<T> {
    pub k: T,
    pub alpha: T,
    /// Certified interval; `None` for the upper end means unbounded.
    pub interval_lo: T,
    pub interval_hi: Option<T>,
    pub projector: String,
    pub grid: GroupSample<T>,
    /// min over grid pairs of (bound - value); nonnegative when sharp.
    pub worst_slack: T,
    pub verified: bool,
}

/// Worst residual of the invariance identity P(t)Φ(t,s) = Φ(t,s)P(s) over
/// grid pairs. The constant kind satisfies it algebraically; the residual
/// then measures pure integrator error.
pub fn invariance_residual<T: Real>(
    sys: &LinearSystem<T>,
    proj: &ProjectorFamily<T>,
    grid: &[T],
    cfg: &IntegratorConfig<T>,
    tol: T,
) -> Result<CheckReport<T>> {
    let cache = TransitionCache::build(sys, grid, cfg)?;
    let ps = proj.on_grid(sys, &cache, cfg)?;
    let mut rb = ReportBuilder::new("invariance_residual", tol);
    for i in 0..grid.len() {
        for j in 0..grid.len() {
            let phi = cache.phi(j, i);
            let lhs = ps[j].matmul(&phi);
            let rhs = phi.matmul(&ps[i]);
            let resid = lhs.sub(&rhs).spectral_norm() / T::one().max(phi.spectral_norm());
            rb.observe("invariance", grid[j], grid[i], resid);
        }
    }
    Ok(rb.finish())
}

/// Check both dichotomy inequalities with constants (K, α) on all ordered
/// grid pairs. Returns the report plus a certificate carrying the worst
/// additive slack.
pub fn verify_h_dichotomy<T: Real>(
    sys: &LinearSystem<T>,
    g: &GrowthRate<T>,
    proj: &ProjectorFamily<T>,
    k: T,
    alpha: T,
    grid: &GroupSample<T>,
    cfg: &IntegratorConfig<T>,
    tol: T,
) -> Result<(CheckReport<T>, DichotomyCertificate<T>)> {
    if !(k >= T::one()) {
        return Err(Error::Config(format!("dichotomy constant K = {k} must be >= 1")));
    }
    if !(alpha > T::zero()) {
        return Err(Error::Config(format!("dichotomy exponent alpha = {alpha} must be > 0")));
    }
    let ts = grid.values();
    let us: Vec<T> = ts.iter().map(|&t| g.log_h(t)).collect::<Result<_>>()?;
    let cache = TransitionCache::build(sys, ts, cfg)?;
    let ps = proj.on_grid(sys, &cache, cfg)?;
    let n = sys.dim();
    let qs: Vec<Mat<T>> = ps.iter().map(|p| Mat::identity(n).sub(p)).collect();

    let mut rb = ReportBuilder::new("verify_h_dichotomy", tol);
    let mut worst_slack = T::infinity();
    let ln_k = k.ln();
    for i in 0..ts.len() {
        for j in i..ts.len() {
            // contracting direction: t = ts[j] >= s = ts[i]
            let lhs_p = cache.phi(j, i).matmul(&ps[i]).spectral_norm();
            let bound_p = (ln_k - alpha * (us[j] - us[i])).exp();
            rb.observe_bound("hd-projected", ts[j], ts[i], lhs_p, bound_p);
            worst_slack = worst_slack.min(bound_p - lhs_p);
            // expanding direction: t = ts[i] <= s = ts[j]
            let lhs_q = cache.phi(i, j).matmul(&qs[j]).spectral_norm();
            let bound_q = (ln_k - alpha * (us[j] - us[i])).exp();
            rb.observe_bound("hd-complementary", ts[i], ts[j], lhs_q, bound_q);
            worst_slack = worst_slack.min(bound_q - lhs_q);
        }
    }
    let report = rb.finish();
    let cert = DichotomyCertificate {
        k,
        alpha,
        interval_lo: ts[0],
        interval_hi: Some(ts[ts.len() - 1]),
        projector: proj.describe(),
        grid: grid.clone(),
        worst_slack,
        verified: report.pass,
    };
    Ok((report, cert))
}

/// The envelope curve α ↦ K(α) on a grid, plus the operating point chosen
/// as the largest α with K(α) below a cap.
#[derive(Clone, Debug, Serialize)]
pub struct ConstantCurve<T> {
    pub points: Vec<(T, T)>,
    pub best: Option<(T, T)>,
    pub k_cap: T,
}

/// Grid supremum estimate of K(α) for each candidate α:
///
/// ```text
/// K(α) = max over pairs of  max{ ‖Φ(t,s)P(s)‖·(h(t)/h(s))^α   (t ≥ s),
///                                ‖Φ(t,s)Q(s)‖·(h(s)/h(t))^α   (s ≥ t) }
/// ```
///
/// The curve is nondecreasing in α. This is a supremum, not a fit: the
/// dichotomy constants are envelope constants and a regression would
/// understate K.
pub fn estimate_constants<T: Real>(
    sys: &LinearSystem<T>,
    g: &GrowthRate<T>,
    proj: &ProjectorFamily<T>,
    grid: &GroupSample<T>,
    alpha_candidates: &[T],
    cfg: &IntegratorConfig<T>,
    k_cap: T,
) -> Result<ConstantCurve<T>> {
    if alpha_candidates.is_empty() || grid.is_empty() {
        return Err(Error::Config("estimate_constants needs a grid and candidates".into()));
    }
    let ts = grid.values();
    let us: Vec<T> = ts.iter().map(|&t| g.log_h(t)).collect::<Result<_>>()?;
    let cache = TransitionCache::build(sys, ts, cfg)?;
    let ps = proj.on_grid(sys, &cache, cfg)?;
    let n = sys.dim();
    let qs: Vec<Mat<T>> = ps.iter().map(|p| Mat::identity(n).sub(p)).collect();

    // (Δu, lhs) samples for both inequality sides, Δu >= 0
    let mut samples: Vec<(T, T)> = Vec::with_capacity(ts.len() * ts.len());
    for i in 0..ts.len() {
        for j in i..ts.len() {
            let du = us[j] - us[i];
            samples.push((du, cache.phi(j, i).matmul(&ps[i]).spectral_norm()));
            samples.push((du, cache.phi(i, j).matmul(&qs[j]).spectral_norm()));
        }
    }
    let mut points = Vec::with_capacity(alpha_candidates.len());
    for &alpha in alpha_candidates {
        if !(alpha >= T::zero()) {
            return Err(Error::Config(format!("alpha candidate {alpha} must be >= 0")));
        }
        let mut k_alpha = T::zero();
        for &(du, lhs) in &samples {
            k_alpha = k_alpha.max(lhs * (alpha * du).exp());
        }
        points.push((alpha, k_alpha));
    }
    let best = points
        .iter()
        .filter(|&&(_, k)| k <= k_cap)
        .cloned()
        .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(ConstantCurve { points, best, k_cap })
}

/// Largest exponent compatible with a sharp (K = 1) envelope:
/// min over grid pairs with Δu ≥ δ of -ln(lhs)/Δu across both inequality
/// sides. Mirrors the sharp-β estimator of the growth-bound module.
pub fn estimate_sharp_alpha<T: Real>(
    sys: &LinearSystem<T>,
    g: &GrowthRate<T>,
    proj: &ProjectorFamily<T>,
    grid: &GroupSample<T>,
    cfg: &IntegratorConfig<T>,
    delta: T,
) -> Result<T> {
    let ts = grid.values();
    let us: Vec<T> = ts.iter().map(|&t| g.log_h(t)).collect::<Result<_>>()?;
    let cache = TransitionCache::build(sys, ts, cfg)?;
    let ps = proj.on_grid(sys, &cache, cfg)?;
    let n = sys.dim();
    let qs: Vec<Mat<T>> = ps.iter().map(|p| Mat::identity(n).sub(p)).collect();
    let mut sharp = T::infinity();
    let mut seen = false;
    for i in 0..ts.len() {
        for j in i..ts.len() {
            let du = us[j] - us[i];
            if du < delta {
                continue;
            }
            seen = true;
            let lhs_p = cache.phi(j, i).matmul(&ps[i]).spectral_norm();
            if lhs_p > T::zero() {
                sharp = sharp.min(-lhs_p.ln() / du);
            }
            let lhs_q = cache.phi(i, j).matmul(&qs[j]).spectral_norm();
            if lhs_q > T::zero() {
                sharp = sharp.min(-lhs_q.ln() / du);
            }
        }
    }
    if !seen {
        return Err(Error::Config(format!(
            "no grid pairs with log-h separation >= {delta}"
        )));
    }
    Ok(sharp)
}

/// The split of a solution along the projector family: trajectories of
/// x⁺(t) = Φ(t, t₀)P(t₀)x₀ and x⁻(t) = Φ(t, t₀)Q(t₀)x₀ on the grid,
/// together with the unsplit solution.
#[derive(Clone, Debug)]
pub struct SplitSolution<T> {
    pub grid: Vec<T>,
    pub plus: Vec<Vec<T>>,
    pub minus: Vec<Vec<T>>,
    pub full: Vec<Vec<T>>,
}

pub fn split_solution<T: Real>(
    sys: &LinearSystem<T>,
    proj: &ProjectorFamily<T>,
    x0: &[T],
    t0: T,
    grid: &[T],
    cfg: &IntegratorConfig<T>,
) -> Result<SplitSolution<T>> {
    // make sure t0 is a grid point so the propagation can start there
    let mut full_grid: Vec<T> = grid.to_vec();
    if !full_grid.iter().any(|&t| t == t0) {
        full_grid.push(t0);
        full_grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    let idx0 = full_grid.iter().position(|&t| t == t0).unwrap();
    let cache = TransitionCache::build(sys, &full_grid, cfg)?;
    let p0 = proj.at(sys, t0, cfg)?;
    let x0p = p0.matvec(x0);
    let x0q: Vec<T> = x0.iter().zip(&x0p).map(|(&a, &b)| a - b).collect();
    Ok(SplitSolution {
        grid: full_grid.clone(),
        plus: cache.propagate(idx0, &x0p),
        minus: cache.propagate(idx0, &x0q),
        full: cache.propagate(idx0, x0),
    })
}

/// Uniform projector bound: max over the grid of ‖P(t)‖ (spectral norm).
pub fn projector_bound<T: Real>(
    sys: &LinearSystem<T>,
    proj: &ProjectorFamily<T>,
    grid: &[T],
    cfg: &IntegratorConfig<T>,
) -> Result<T> {
    if grid.is_empty() {
        return Err(Error::Config("projector_bound needs a nonempty grid".into()));
    }
    let mut worst = T::zero();
    for &t in grid {
        worst = worst.max(proj.at(sys, t, cfg)?.spectral_norm());
    }
    Ok(worst)
}

/// Reassemble the dichotomy constant from the component-wise constants:
/// K = max{M·K₁, (‖I‖ + M)·K₂}, with ‖I‖ = 1 in spectral norm.
pub fn elc_reconstruct<T: Real>(k1: T, k2: T, m: T) -> T {
    (m * k1).max((T::one() + m) * k2)
}

/// Forward direction of the component-wise equivalence: a verified (K, α)
/// pair must satisfy the vector-wise inequalities with K₁ = K₂ = K and the
/// projector bound with M = K. The arbitrary vector ξ is proxied by the
/// canonical basis plus seeded random unit vectors.
#[allow(clippy::too_many_arguments)]
pub fn elc_forward_check<T: Real>(
    sys: &LinearSystem<T>,
    g: &GrowthRate<T>,
    proj: &ProjectorFamily<T>,
    k: T,
    alpha: T,
    grid: &GroupSample<T>,
    cfg: &IntegratorConfig<T>,
    seed: u64,
    n_random: usize,
    tol: T,
) -> Result<CheckReport<T>> {
    let ts = grid.values();
    let us: Vec<T> = ts.iter().map(|&t| g.log_h(t)).collect::<Result<_>>()?;
    let cache = TransitionCache::build(sys, ts, cfg)?;
    let n = sys.dim();
    // constant projector P = P(anchor) with the fundamental matrix anchored
    // at the first grid point
    let p0 = proj.at(sys, ts[0], cfg)?;
    let xis = unit_vectors(n, seed, n_random);

    let mut rb = ReportBuilder::new("elc_forward_check", tol);
    let ln_k = k.ln();
    for xi in &xis {
        let pxi = p0.matvec(xi);
        let qxi: Vec<T> = xi.iter().zip(&pxi).map(|(&a, &b)| a - b).collect();
        // trajectories of Φ(t)Pξ and Φ(t)Qξ
        let plus = cache.propagate(0, &pxi);
        let minus = cache.propagate(0, &qxi);
        for i in 0..ts.len() {
            for j in i..ts.len() {
                let decay = (ln_k - alpha * (us[j] - us[i])).exp();
                // |Φ(t)Pξ| ≤ K (h(t)/h(s))^{-α} |Φ(s)Pξ|, t ≥ s
                let lhs1 = norm2(&plus[j]);
                let rhs1 = decay * norm2(&plus[i]);
                if rhs1 > T::zero() || lhs1 > T::zero() {
                    rb.observe_bound("elc-projected", ts[j], ts[i], lhs1, rhs1);
                }
                // |Φ(t)Qξ| ≤ K (h(s)/h(t))^{-α} |Φ(s)Qξ|, s ≥ t
                let lhs2 = norm2(&minus[i]);
                let rhs2 = decay * norm2(&minus[j]);
                if rhs2 > T::zero() || lhs2 > T::zero() {
                    rb.observe_bound("elc-complementary", ts[i], ts[j], lhs2, rhs2);
                }
            }
        }
    }
    // ‖Φ(t)PΦ⁻¹(t)‖ ≤ M with M = K
    for (i, &t) in ts.iter().enumerate() {
        let phi = cache.phi(i, 0);
        let phi_inv = phi.inverse()?;
        let norm = phi.matmul(&p0).matmul(&phi_inv).spectral_norm();
        rb.observe_bound("elc-projector-bound", t, t, norm, k);
    }
    Ok(rb.finish())
}

/// Result of extending a certificate from [T₁, ∞) to [e∗, ∞).
#[derive(Clone, Debug, Serialize)]
pub struct ExtensionResult<T> {
    /// N = exp(∫_{e∗}^{T₁} ‖A(u)‖ du)
    pub n_factor: T,
    pub k_tilde: T,
    pub certificate: DichotomyCertificate<T>,
    pub report: CheckReport<T>,
}

/// Extend a certificate that holds on [T₁, ∞) to all of [e∗, ∞) with the
/// same projector and exponent: K̃ = N²·K·h(T₁)^α, where N bounds ‖Φ(t,s)‖
/// for t, s in the prefix [e∗, T₁] via the Gronwall estimate.
/// The extended certificate is re-verified on a grid covering [e∗, hi].
#[allow(clippy::too_many_arguments)]
pub fn extend_from_subinterval<T: Real>(
    sys: &LinearSystem<T>,
    g: &GrowthRate<T>,
    proj: &ProjectorFamily<T>,
    cert: &DichotomyCertificate<T>,
    hi: T,
    grid_size: usize,
    cfg: &IntegratorConfig<T>,
    tol: T,
) -> Result<ExtensionResult<T>> {
    let unit = g.unit();
    let t1 = cert.interval_lo;
    if !(t1 > unit) {
        return Err(Error::Config(format!(
            "subinterval start {t1} must lie above the unit element {unit}"
        )));
    }
    let quad = QuadConfig {
        rel_tol: T::of(1e-11),
        abs_tol: T::of(1e-14),
        max_depth: 40,
    };
    let integral = integrate(|u| sys.coefficient_norm(u), unit, t1, &quad)?;
    let n_factor = integral.exp();
    let k_tilde = n_factor * n_factor * cert.k * g.h(t1)?.powf(cert.alpha);
    let grid = GroupSample::log_h_uniform(g, unit, hi, grid_size)?;
    let (report, certificate) =
        verify_h_dichotomy(sys, g, proj, k_tilde, cert.alpha, &grid, cfg, tol)?;
    Ok(ExtensionResult {
        n_factor,
        k_tilde,
        certificate,
        report,
    })
}

/// Deterministic test vectors: the canonical basis plus `n_random` seeded
/// unit vectors.
pub fn unit_vectors<T: Real>(dim: usize, seed: u64, n_random: usize) -> Vec<Vec<T>> {
    let mut out: Vec<Vec<T>> = (0..dim)
        .map(|i| {
            let mut e = vec![T::zero(); dim];
            e[i] = T::one();
            e
        })
        .collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    while out.len() < dim + n_random {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-3 {
            continue;
        }
        out.push(v.into_iter().map(|x| T::of(x / norm)).collect());
    }
    out
}

#[cfg(test)]
mod tests;
