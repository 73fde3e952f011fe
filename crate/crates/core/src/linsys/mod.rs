//! Linear systems x' = A(t)x and their transition matrices Φ(t, s).
//!
//! Transition matrices are computed by an adaptive embedded Runge-Kutta 5(4)
//! pair (see [`dopri5`]); the builtin example systems also carry analytic
//! oracles so the integrator can be validated against closed forms. Grid
//! sweeps cache per-interval factors and compose them, which keeps the
//! integration error of long spans proportional to the number of grid
//! intervals instead of the span length.

mod cache;
mod dopri5;

pub use cache::TransitionCache;
pub use dopri5::integrate_transition;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::growth_group::{GrowthRate, GroupSample};
use crate::linalg::Mat;
use crate::quad::{integrate, QuadConfig};
use crate::real::Real;
use crate::report::{CheckReport, ReportBuilder};

/// Tolerances and limits for the transition-matrix integrator.
#[derive(Clone, Copy, Debug)]
pub struct IntegratorConfig<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    /// Cap on the step magnitude; `None` leaves the controller free.
    pub max_step: Option<T>,
    pub max_steps: usize,
    /// Seed step; `None` selects one automatically.
    pub initial_step: Option<T>,
    /// Use the analytic oracle instead of integrating, when one exists.
    pub prefer_oracle: bool,
}

impl<T: Real> Default for IntegratorConfig<T> {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: T::of(1e-9),
            abs_tol: T::of(1e-12),
            max_step: None,
            max_steps: 100_000,
            initial_step: None,
            prefer_oracle: false,
        }
    }
}

impl<T: Real> IntegratorConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > T::zero()) || !(self.abs_tol > T::zero()) {
            return Err(Error::Config("integrator tolerances must be positive".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Transition matrix Φ(t, s) mapping the state at time s to the state at t.
#[derive(Clone, Debug)]
pub struct TransitionMatrix<T> {
    pub t: T,
    pub s: T,
    pub m: Mat<T>,
}

type CoeffFn<T> = Arc<dyn Fn(T) -> Result<Mat<T>> + Send + Sync>;
type OracleFn<T> = Arc<dyn Fn(T, T) -> Result<Mat<T>> + Send + Sync>;

enum Coefficients<T> {
    Exprs(Vec<Expr>),
    Fn(CoeffFn<T>),
}

/// A nonautonomous linear system x' = A(t)x.
pub struct LinearSystem<T: Real> {
    name: String,
    dim: usize,
    coeff: Coefficients<T>,
    /// Lower bound of the system's own time domain, when it has one.
    domain_lo: Option<T>,
    oracle: Option<OracleFn<T>>,
}

impl<T: Real> std::fmt::Debug for LinearSystem<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinearSystem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("domain_lo", &self.domain_lo)
            .field("has_oracle", &self.oracle.is_some())
            .finish()
    }
}

impl<T: Real> LinearSystem<T> {
    /// The slow diagonal example: A(t) = diag(-a(t), a(t)) with
    /// a(t) = 1/((1+t)·ln(1+t)) on t > 0. Transition matrix in closed form:
    /// Φ(t, s) = diag(ln(1+s)/ln(1+t), ln(1+t)/ln(1+s)).
    pub fn paper_log() -> Self {
        LinearSystem {
            name: "paper_log".into(),
            dim: 2,
            coeff: Coefficients::Fn(Arc::new(|t: T| {
                let l = t.ln_1p();
                if l <= T::zero() {
                    return Err(Error::Domain(format!("paper_log coefficient at t = {t}")));
                }
                let v = T::one() / ((T::one() + t) * l);
                Ok(Mat::diag(&[-v, v]))
            })),
            domain_lo: Some(T::zero()),
            oracle: Some(Arc::new(|t: T, s: T| {
                let lt = t.ln_1p();
                let ls = s.ln_1p();
                if lt <= T::zero() || ls <= T::zero() {
                    return Err(Error::Domain("paper_log oracle outside (0, ∞)".into()));
                }
                Ok(Mat::diag(&[ls / lt, lt / ls]))
            })),
        }
    }

    /// The power-scale diagonal example: A(t) = diag(-α/t, α/t) on t > 0,
    /// with Φ(t, s) = diag((s/t)^α, (t/s)^α).
    pub fn paper_power(alpha: T) -> Self {
        LinearSystem {
            name: format!("paper_power:{alpha}"),
            dim: 2,
            coeff: Coefficients::Fn(Arc::new(move |t: T| {
                if t <= T::zero() {
                    return Err(Error::Domain(format!("paper_power coefficient at t = {t}")));
                }
                let v = alpha / t;
                Ok(Mat::diag(&[-v, v]))
            })),
            domain_lo: Some(T::zero()),
            oracle: Some(Arc::new(move |t: T, s: T| {
                if t <= T::zero() || s <= T::zero() {
                    return Err(Error::Domain("paper_power oracle outside (0, ∞)".into()));
                }
                Ok(Mat::diag(&[(s / t).powf(alpha), (t / s).powf(alpha)]))
            })),
        }
    }

    /// Constant diagonal system A = diag(λ₁, ..., λₙ) on all of ℝ.
    pub fn const_diag(lambdas: &[T]) -> Self {
        let l1: Vec<T> = lambdas.to_vec();
        let l2 = l1.clone();
        let rendered: Vec<String> = lambdas.iter().map(|l| format!("{l}")).collect();
        LinearSystem {
            name: format!("const_diag:{}", rendered.join(",")),
            dim: lambdas.len(),
            coeff: Coefficients::Fn(Arc::new(move |_t: T| Ok(Mat::diag(&l1)))),
            domain_lo: None,
            oracle: Some(Arc::new(move |t: T, s: T| {
                let entries: Vec<T> = l2.iter().map(|&l| (l * (t - s)).exp()).collect();
                Ok(Mat::diag(&entries))
            })),
        }
    }

    /// The zero system of dimension n; every solution is constant.
    pub fn zero(n: usize) -> Self {
        LinearSystem {
            name: format!("zero:{n}"),
            dim: n,
            coeff: Coefficients::Fn(Arc::new(move |_t: T| Ok(Mat::zeros(n, n)))),
            domain_lo: None,
            oracle: Some(Arc::new(move |_t: T, _s: T| Ok(Mat::identity(n)))),
        }
    }

    /// Custom system from n² coefficient expressions, row-major.
    pub fn from_exprs(n: usize, entries: Vec<Expr>, domain_lo: Option<T>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::Config(format!(
                "expected {} coefficient entries for dimension {n}, got {}",
                n * n,
                entries.len()
            )));
        }
        Ok(LinearSystem {
            name: format!("custom:{n}"),
            dim: n,
            coeff: Coefficients::Exprs(entries),
            domain_lo,
            oracle: None,
        })
    }

    /// Custom system from a coefficient closure (used by tests for synthetic
    /// systems that need piecewise or otherwise non-expression coefficients).
    pub fn from_fn(
        name: &str,
        n: usize,
        coeff: impl Fn(T) -> Result<Mat<T>> + Send + Sync + 'static,
        oracle: Option<OracleFn<T>>,
    ) -> Self {
        LinearSystem {
            name: name.into(),
            dim: n,
            coeff: Coefficients::Fn(Arc::new(coeff)),
            domain_lo: None,
            oracle,
        }
    }

    /// Parse a builtin spec: `paper_log`, `paper_power:<alpha>`,
    /// `const_diag:<l1,l2,...>`, or `zero:<n>`.
    pub fn from_spec(spec: &str) -> Result<Self> {
        if spec == "paper_log" {
            return Ok(Self::paper_log());
        }
        if let Some(a) = spec.strip_prefix("paper_power:") {
            let alpha: f64 = a
                .parse()
                .map_err(|_| Error::Config(format!("bad paper_power exponent '{a}'")))?;
            if alpha <= 0.0 {
                return Err(Error::Config("paper_power exponent must be positive".into()));
            }
            return Ok(Self::paper_power(T::of(alpha)));
        }
        if let Some(ls) = spec.strip_prefix("const_diag:") {
            let lambdas: std::result::Result<Vec<f64>, _> =
                ls.split(',').map(|x| x.trim().parse::<f64>()).collect();
            let lambdas =
                lambdas.map_err(|_| Error::Config(format!("bad const_diag entries '{ls}'")))?;
            if lambdas.is_empty() {
                return Err(Error::Config("const_diag needs at least one entry".into()));
            }
            let lambdas: Vec<T> = lambdas.into_iter().map(T::of).collect();
            return Ok(Self::const_diag(&lambdas));
        }
        if let Some(n) = spec.strip_prefix("zero:") {
            let n: usize = n
                .parse()
                .map_err(|_| Error::Config(format!("bad zero dimension '{n}'")))?;
            if n == 0 {
                return Err(Error::Config("zero system needs dimension >= 1".into()));
            }
            return Ok(Self::zero(n));
        }
        Err(Error::Config(format!(
            "unknown system '{spec}' (expected paper_log, paper_power:<a>, const_diag:<l,..>, zero:<n>)"
        )))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_oracle(&self) -> bool {
        self.oracle.is_some()
    }

    fn check_domain(&self, t: T) -> Result<()> {
        if !t.is_finite() {
            return Err(Error::Domain(format!("time {t} is not finite")));
        }
        if let Some(lo) = self.domain_lo {
            if t <= lo {
                return Err(Error::Domain(format!(
                    "time {t} outside the domain of system '{}'",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// Evaluate A(t).
    pub fn coefficient(&self, t: T) -> Result<Mat<T>> {
        self.check_domain(t)?;
        match &self.coeff {
            Coefficients::Fn(f) => f(t),
            Coefficients::Exprs(entries) => {
                let n = self.dim;
                let mut m = Mat::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        m[(i, j)] = entries[i * n + j].eval(t).map_err(|e| {
                            Error::Eval(format!("coefficient entry ({i}, {j}) at t = {t}: {e}"))
                        })?;
                    }
                }
                Ok(m)
            }
        }
    }

    /// Spectral norm of A(t), the integrand of the windowed norm.
    pub fn coefficient_norm(&self, t: T) -> Result<T> {
        Ok(self.coefficient(t)?.spectral_norm())
    }

    /// Analytic Φ(t, s), when the system carries one.
    pub fn oracle_transition(&self, t: T, s: T) -> Option<Result<Mat<T>>> {
        self.oracle.as_ref().map(|f| f(t, s))
    }

    /// Φ(t, s) as a matrix; integrates the matrix ODE M' = A(u)M from
    /// M(s) = I, backward when t < s. Uses the analytic oracle when the
    /// config requests it and one exists.
    pub fn transition_mat(&self, t: T, s: T, cfg: &IntegratorConfig<T>) -> Result<Mat<T>> {
        self.check_domain(t)?;
        self.check_domain(s)?;
        if t == s {
            return Ok(Mat::identity(self.dim));
        }
        if cfg.prefer_oracle {
            if let Some(o) = self.oracle_transition(t, s) {
                return o;
            }
        }
        integrate_transition(
            &|u| self.coefficient(u),
            s,
            t,
            Mat::identity(self.dim),
            cfg,
        )
    }

    /// Φ(t, s) with its endpoints attached.
    pub fn transition(&self, t: T, s: T, cfg: &IntegratorConfig<T>) -> Result<TransitionMatrix<T>> {
        Ok(TransitionMatrix {
            t,
            s,
            m: self.transition_mat(t, s, cfg)?,
        })
    }

    /// x(t, t₀, x₀) = Φ(t, t₀)·x₀.
    pub fn solve(&self, t: T, t0: T, x0: &[T], cfg: &IntegratorConfig<T>) -> Result<Vec<T>> {
        Ok(self.transition_mat(t, t0, cfg)?.matvec(x0))
    }
}

/// Validate the cocycle identity Φ(t, s) = Φ(t, u)·Φ(u, s) and the inverse
/// identity Φ(t, s)⁻¹ = Φ(s, t) on all pairs/triples of a grid.
///
/// Every transition here is integrated directly over its full span (no
/// factor composition), so the check genuinely exercises the integrator.
/// Residuals are spectral norms scaled by max(1, ‖Φ(t, s)‖); integration
/// failures are reported as witnesses, not raised.
pub fn cocycle_check<T: Real>(
    sys: &LinearSystem<T>,
    grid: &[T],
    cfg: &IntegratorConfig<T>,
    tol: T,
) -> CheckReport<T> {
    let mut rb = ReportBuilder::new("cocycle_check", tol);
    let m = grid.len();
    // all ordered pairs, integrated directly (in parallel)
    use rayon::prelude::*;
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .collect();
    let phis: Vec<Result<Mat<T>>> = pairs
        .par_iter()
        .map(|&(i, j)| sys.transition_mat(grid[i], grid[j], cfg))
        .collect();
    let phi = |i: usize, j: usize| -> &Result<Mat<T>> { &phis[i * m + j] };

    for i in 0..m {
        for j in 0..m {
            // inverse identity
            match (phi(i, j), phi(j, i)) {
                (Ok(a), Ok(b)) => {
                    let resid = a.matmul(b).sub(&Mat::identity(sys.dim)).spectral_norm();
                    let scale = T::one().max(a.spectral_norm());
                    rb.observe("inverse-identity", grid[i], grid[j], resid / scale);
                }
                (Err(e), _) | (_, Err(e)) => {
                    rb.observe_error("inverse-identity", grid[i], grid[j], e)
                }
            }
            for k in 0..m {
                match (phi(i, j), phi(j, k), phi(i, k)) {
                    (Ok(a), Ok(b), Ok(c)) => {
                        let resid = a.matmul(b).sub(c).spectral_norm();
                        let scale = T::one().max(c.spectral_norm());
                        rb.observe("cocycle", grid[i], grid[k], resid / scale);
                    }
                    (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => {
                        rb.observe_error("cocycle", grid[i], grid[k], e)
                    }
                }
            }
        }
    }
    rb.finish()
}

/// Windowed coefficient norm: max over sampled s of ∫_s^{s∗T} ‖A(τ)‖ dτ.
///
/// Finiteness witnesses uniform bounded h-growth with C_T = exp(result),
/// by the Gronwall estimate |x(t)| ≤ |x(s)|·exp(∫‖A‖).
pub fn stepanov_norm<T: Real>(
    sys: &LinearSystem<T>,
    g: &GrowthRate<T>,
    window: T,
    sample: &GroupSample<T>,
    _cfg: &IntegratorConfig<T>,
) -> Result<T> {
    if g.log_h(window)? <= T::zero() {
        return Err(Error::Domain(format!(
            "window {window} must lie above the unit element"
        )));
    }
    let quad = QuadConfig {
        rel_tol: T::of(1e-10),
        abs_tol: T::of(1e-13),
        max_depth: 40,
    };
    let mut worst = T::zero();
    for &s in sample.values() {
        let hi = g.star(s, window)?;
        let v = integrate(|tau| sys.coefficient_norm(tau), s, hi, &quad)?;
        worst = worst.max(v);
    }
    Ok(worst)
}
