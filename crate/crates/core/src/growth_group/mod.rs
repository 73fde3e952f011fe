//! The abelian totally ordered group (J, ∗) induced by a growth rate h.
//!
//! A growth rate is a strictly increasing homeomorphism h: J = (a₀, ∞) → (0, ∞).
//! It induces the operation t ∗ s = h⁻¹(h(t)·h(s)) with unit h⁻¹(1) and
//! inverse t^{∗-1} = h⁻¹(1/h(t)); the rate h(t) = eᵗ recovers (ℝ, +).
//!
//! All group arithmetic is carried out in u = ln h(t) coordinates: combine
//! once in u-space, map back once. Translations become additions of u, so
//! no h/h⁻¹ round trips compound, and dichotomy bounds K·(h(t)/h(s))^{-α}
//! become exp(ln K - α·(u_t - u_s)). Tolerances for identity checks are
//! relative in h-space (equivalently absolute in u-space), because J-space
//! spacing is wildly nonuniform for slow rates like ln(1+t).

mod ged;

pub use ged::CumulativeIntegral;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::real::Real;
use crate::report::{CheckReport, ReportBuilder};

type ScalarFn<T> = Arc<dyn Fn(T) -> Result<T> + Send + Sync>;

/// A growth rate h with its inverse and the log-space maps used internally.
///
/// Immutable after construction; all operations are pure, so values can be
/// shared freely across threads.
#[derive(Clone)]
pub struct GrowthRate<T: Real> {
    name: String,
    a0: Option<T>,
    h_fn: ScalarFn<T>,
    h_inv_fn: ScalarFn<T>,
    log_h_fn: ScalarFn<T>,
    exp_h_inv_fn: ScalarFn<T>,
}

impl<T: Real> fmt::Debug for GrowthRate<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GrowthRate")
            .field("name", &self.name)
            .field("a0", &self.a0)
            .finish()
    }
}

impl<T: Real> GrowthRate<T> {
    /// h(t) = eᵗ on J = ℝ. The induced group is (ℝ, +).
    pub fn exp_rate() -> Self {
        GrowthRate {
            name: "exp".into(),
            a0: None,
            h_fn: Arc::new(|t: T| Ok(t.exp())),
            h_inv_fn: Arc::new(|y: T| Ok(y.ln())),
            log_h_fn: Arc::new(|t: T| Ok(t)),
            exp_h_inv_fn: Arc::new(|u: T| Ok(u)),
        }
    }

    /// h(t) = t on J = (0, ∞). The induced group is ((0, ∞), ·).
    pub fn identity_rate() -> Self {
        GrowthRate {
            name: "identity".into(),
            a0: Some(T::zero()),
            h_fn: Arc::new(|t: T| Ok(t)),
            h_inv_fn: Arc::new(|y: T| Ok(y)),
            log_h_fn: Arc::new(|t: T| Ok(t.ln())),
            exp_h_inv_fn: Arc::new(|u: T| Ok(u.exp())),
        }
    }

    /// h(t) = ln(1+t) on J = (0, ∞).
    pub fn log1p_rate() -> Self {
        GrowthRate {
            name: "log1p".into(),
            a0: Some(T::zero()),
            h_fn: Arc::new(|t: T| Ok(t.ln_1p())),
            h_inv_fn: Arc::new(|y: T| Ok(y.exp_m1())),
            log_h_fn: Arc::new(|t: T| Ok(t.ln_1p().ln())),
            exp_h_inv_fn: Arc::new(|u: T| Ok(u.exp().exp_m1())),
        }
    }

    /// h(t) = exp(∫₀ᵗ γ(τ) dτ) on J = ℝ, for a continuous nonnegative γ
    /// whose integral diverges both ways. γ is given as an expression in t.
    pub fn ged_rate(gamma: Expr) -> Self {
        let integral = Arc::new(CumulativeIntegral::<T>::new(gamma));
        let g1 = integral.clone();
        let g2 = integral.clone();
        let g3 = integral.clone();
        let g4 = integral;
        GrowthRate {
            name: "ged".into(),
            a0: None,
            h_fn: Arc::new(move |t: T| Ok(g1.value(t)?.exp())),
            h_inv_fn: Arc::new(move |y: T| g2.inverse(y.ln())),
            log_h_fn: Arc::new(move |t: T| g3.value(t)),
            exp_h_inv_fn: Arc::new(move |u: T| g4.inverse(u)),
        }
    }

    /// Custom rate from expressions for h and h⁻¹ plus the lower domain
    /// bound (`None` means J = ℝ). The pair is probed on a grid at load
    /// time: the round trip h(h⁻¹(y)) must reproduce y to relative 1e-9,
    /// h⁻¹ must be increasing on the probe, and h must stay positive and
    /// finite. Numerically inverting a one-sided h is deliberately not
    /// offered; both directions must be supplied.
    pub fn custom(name: &str, h: Expr, h_inv: Expr, a0: Option<T>) -> Result<Self> {
        let rate = Self::custom_unchecked(name, h, h_inv, a0);
        rate.verify_probe()?;
        Ok(rate)
    }

    /// Custom rate without the load-time probe. Intended for tests and for
    /// callers that run `group_property_suite` themselves.
    pub fn custom_unchecked(name: &str, h: Expr, h_inv: Expr, a0: Option<T>) -> Self {
        let h2 = h.clone();
        let h_inv2 = h_inv.clone();
        GrowthRate {
            name: name.into(),
            a0,
            h_fn: Arc::new(move |t: T| h.eval(t)),
            h_inv_fn: Arc::new(move |y: T| h_inv.eval(y)),
            log_h_fn: Arc::new(move |t: T| {
                let v = h2.eval(t)?;
                if v <= T::zero() {
                    return Err(Error::Domain(format!("h({t}) = {v} is not positive")));
                }
                Ok(v.ln())
            }),
            exp_h_inv_fn: Arc::new(move |u: T| h_inv2.eval(u.exp())),
        }
    }

    /// Parse a rate spec: `exp`, `identity`, `log1p`, or `ged:<gamma expr>`.
    pub fn from_spec(spec: &str) -> Result<Self> {
        match spec {
            "exp" => Ok(Self::exp_rate()),
            "identity" => Ok(Self::identity_rate()),
            "log1p" => Ok(Self::log1p_rate()),
            _ => {
                if let Some(gamma) = spec.strip_prefix("ged:") {
                    Ok(Self::ged_rate(Expr::parse(gamma)?))
                } else {
                    Err(Error::Config(format!(
                        "unknown growth rate '{spec}' (expected exp, identity, log1p, or ged:<gamma>)"
                    )))
                }
            }
        }
    }

    fn verify_probe(&self) -> Result<()> {
        let rtol = T::of(1e-9);
        let mut prev_t: Option<T> = None;
        for k in 0..41 {
            // y log-spaced over [1e-3, 1e3]
            let e = -3.0 + 6.0 * (k as f64) / 40.0;
            let y = T::of(10f64.powf(e));
            let t = (self.h_inv_fn)(y)?;
            if !t.is_finite() || !self.contains(t) {
                return Err(Error::Domain(format!(
                    "h_inv({y}) = {t} falls outside the declared domain"
                )));
            }
            if let Some(p) = prev_t {
                if t <= p {
                    return Err(Error::Domain(format!(
                        "h_inv is not strictly increasing near y = {y}"
                    )));
                }
            }
            prev_t = Some(t);
            let back = (self.h_fn)(t)?;
            if !back.is_finite() || back <= T::zero() {
                return Err(Error::Domain(format!(
                    "h({t}) = {back} is not a positive finite value"
                )));
            }
            if (back - y).abs() > rtol * y.abs() {
                return Err(Error::Domain(format!(
                    "round trip failed: h(h_inv({y})) = {back} (relative error above 1e-9)"
                )));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Lower bound a₀ of J = (a₀, ∞); `None` means J = ℝ.
    pub fn lower_bound(&self) -> Option<T> {
        self.a0
    }

    pub fn contains(&self, t: T) -> bool {
        t.is_finite()
            && match self.a0 {
                Some(a0) => t > a0,
                None => true,
            }
    }

    fn check_point(&self, t: T) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "point {t} outside the domain of rate '{}'",
                self.name
            )))
        }
    }

    /// h(t). Errors with `Domain` if t ∉ J or the evaluation leaves (0, ∞).
    pub fn h(&self, t: T) -> Result<T> {
        self.check_point(t)?;
        let v = (self.h_fn)(t)?;
        if !v.is_finite() || v <= T::zero() {
            return Err(Error::Domain(format!(
                "h({t}) = {v} left the range (0, ∞) for rate '{}'",
                self.name
            )));
        }
        Ok(v)
    }

    /// h⁻¹(y) for y ∈ (0, ∞).
    pub fn h_inv(&self, y: T) -> Result<T> {
        if !y.is_finite() || y <= T::zero() {
            return Err(Error::Domain(format!("h_inv argument {y} not in (0, ∞)")));
        }
        let t = (self.h_inv_fn)(y)?;
        if t.is_infinite() {
            return Err(Error::Overflow(format!("h_inv({y}) overflows")));
        }
        self.check_point(t)?;
        Ok(t)
    }

    /// u = ln h(t), the additive coordinate of the group.
    pub fn log_h(&self, t: T) -> Result<T> {
        self.check_point(t)?;
        let u = (self.log_h_fn)(t)?;
        if u.is_nan() {
            return Err(Error::Domain(format!("ln h({t}) is undefined")));
        }
        if u.is_infinite() {
            return Err(Error::Domain(format!(
                "ln h({t}) is not finite; h lost injectivity at this argument"
            )));
        }
        Ok(u)
    }

    /// h⁻¹(eᵘ): map an additive coordinate back into J.
    pub fn exp_h_inv(&self, u: T) -> Result<T> {
        if u.is_nan() {
            return Err(Error::Domain("additive coordinate is NaN".into()));
        }
        if u.is_infinite() {
            return Err(Error::Overflow("additive coordinate overflowed".into()));
        }
        let t = (self.exp_h_inv_fn)(u)?;
        if t.is_infinite() {
            return Err(Error::Overflow(format!(
                "h⁻¹(exp({u})) exceeds the representable range"
            )));
        }
        if !self.contains(t) {
            return Err(Error::Domain(format!(
                "h⁻¹(exp({u})) = {t} collapsed onto the domain boundary"
            )));
        }
        Ok(t)
    }

    /// The unit element e∗ = h⁻¹(1).
    pub fn unit(&self) -> T {
        self.exp_h_inv(T::zero())
            .expect("h⁻¹(1) must exist for a growth rate")
    }

    /// t ∗ s = h⁻¹(h(t)·h(s)).
    pub fn star(&self, t: T, s: T) -> Result<T> {
        let u = self.log_h(t)? + self.log_h(s)?;
        self.exp_h_inv(u)
    }

    /// t^{∗-1} = h⁻¹(1/h(t)).
    pub fn inverse(&self, t: T) -> Result<T> {
        let u = self.log_h(t)?;
        self.exp_h_inv(-u)
    }

    /// T^{∗k} = h⁻¹(h(T)^k); k = 0 gives the unit.
    pub fn power(&self, t: T, k: i32) -> Result<T> {
        let u = self.log_h(t)?;
        self.exp_h_inv(u * T::of_i32(k))
    }

    /// The order s ≤∗ t, defined by e∗ ≤ t ∗ s^{∗-1}. Coincides with the
    /// real order on J.
    pub fn leq_star(&self, s: T, t: T) -> Result<bool> {
        Ok(self.log_h(s)? <= self.log_h(t)?)
    }

    /// |t|∗ = t when e∗ ≤ t, else t^{∗-1}. Always ≥ e∗.
    pub fn abs_star(&self, t: T) -> Result<T> {
        let u = self.log_h(t)?;
        if u >= T::zero() {
            Ok(t)
        } else {
            self.exp_h_inv(-u)
        }
    }

    /// d∗(t, s) = |t ∗ s^{∗-1}|∗. Symmetric, with d∗(t, t) = e∗.
    pub fn dist_star(&self, t: T, s: T) -> Result<T> {
        let d = (self.log_h(t)? - self.log_h(s)?).abs();
        self.exp_h_inv(d)
    }

    /// The ball {u : |u ∗ t^{∗-1}|∗ ≤ T} = [t ∗ T^{∗-1}, t ∗ T], for T > e∗.
    pub fn ball(&self, t: T, radius: T) -> Result<(T, T)> {
        let u_r = self.log_h(radius)?;
        if u_r <= T::zero() {
            return Err(Error::Domain(format!(
                "ball radius {radius} is not above the unit element"
            )));
        }
        let u_t = self.log_h(t)?;
        let lo = self.exp_h_inv(u_t - u_r)?;
        let hi = self.exp_h_inv(u_t + u_r)?;
        Ok((lo, hi))
    }
}

/// How a sample of group points was generated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleStrategy {
    LogHUniform,
    Explicit,
}

/// A finite, strictly increasing list of points in J.
#[derive(Clone, Debug, serde::Serialize)]
pub struct GroupSample<T> {
    values: Vec<T>,
    strategy: SampleStrategy,
}

impl<T: Real> GroupSample<T> {
    /// Grid points t_i = h⁻¹(exp(u_i)) with u_i equally spaced over
    /// [ln h(lo), ln h(hi)]. Group translations shift u, so translated grid
    /// points land back on grid points.
    pub fn log_h_uniform(g: &GrowthRate<T>, lo: T, hi: T, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config("sample needs at least 2 points".into()));
        }
        let u_lo = g.log_h(lo)?;
        let u_hi = g.log_h(hi)?;
        if u_hi <= u_lo {
            return Err(Error::Config(format!(
                "sample interval [{lo}, {hi}] is empty or reversed"
            )));
        }
        let mut values = Vec::with_capacity(n);
        for i in 0..n {
            let f = T::of(i as f64 / (n - 1) as f64);
            let u = u_lo + (u_hi - u_lo) * f;
            values.push(g.exp_h_inv(u)?);
        }
        if !strictly_increasing(&values) {
            return Err(Error::Domain(
                "log-h-uniform sample collapsed; interval too narrow for the scalar type".into(),
            ));
        }
        Ok(GroupSample {
            values,
            strategy: SampleStrategy::LogHUniform,
        })
    }

    pub fn explicit(g: &GrowthRate<T>, values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config("sample must be nonempty".into()));
        }
        for &v in &values {
            g.check_point(v)?;
        }
        if !strictly_increasing(&values) {
            return Err(Error::Config("sample values must be strictly increasing".into()));
        }
        Ok(GroupSample {
            values,
            strategy: SampleStrategy::Explicit,
        })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn strategy(&self) -> SampleStrategy {
        self.strategy
    }
}

fn strictly_increasing<T: Real>(v: &[T]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

/// Exhaustive check of the group identities on a sample.
///
/// Binary identities run over all ordered pairs, ternary ones (associativity
/// and order translation) over all ordered triples. Residuals are relative
/// in h-space; a comparison identity that flips contributes violation 1.
pub fn group_property_suite<T: Real>(
    g: &GrowthRate<T>,
    sample: &GroupSample<T>,
    tol: T,
) -> CheckReport<T> {
    let mut rb = ReportBuilder::new("group_property_suite", tol);
    let ts = sample.values();
    let us: Vec<T> = match ts.iter().map(|&t| g.log_h(t)).collect() {
        Ok(u) => u,
        Err(e) => {
            rb.note(format!("sample left the domain: {e}"));
            rb.observe_bool("sample-in-domain", T::nan(), T::nan(), false);
            return rb.finish();
        }
    };
    let n = ts.len();

    // relative h-space residual of a point with intended additive coordinate
    let round_trip = |g: &GrowthRate<T>, u: T| -> Result<T> {
        let t = g.exp_h_inv(u)?;
        Ok((g.log_h(t)? - u).exp() - T::one())
    };

    // pair identities
    for i in 0..n {
        let (t_i, u_i) = (ts[i], us[i]);
        // h(t^{*-1}) = 1/h(t)
        match g.inverse(t_i).and_then(|inv| g.log_h(inv)) {
            Ok(u_inv) => rb.observe("inverse", t_i, t_i, (u_inv + u_i).exp() - T::one()),
            Err(e) => rb.observe_error("inverse", t_i, t_i, &e),
        }
        // t * t^{*-1} = unit
        match g
            .inverse(t_i)
            .and_then(|inv| g.star(t_i, inv))
            .and_then(|p| g.log_h(p))
        {
            Ok(u_p) => rb.observe("star-with-inverse-is-unit", t_i, t_i, u_p.exp() - T::one()),
            Err(e) => rb.observe_error("star-with-inverse-is-unit", t_i, t_i, &e),
        }
        // |t|_* = |t^{*-1}|_*
        let abs_pair = g.abs_star(t_i).and_then(|a| {
            let b = g.inverse(t_i).and_then(|inv| g.abs_star(inv))?;
            Ok((g.log_h(a)? - g.log_h(b)?).exp() - T::one())
        });
        match abs_pair {
            Ok(r) => rb.observe("abs-of-inverse", t_i, t_i, r),
            Err(e) => rb.observe_error("abs-of-inverse", t_i, t_i, &e),
        }

        for j in 0..n {
            let (t_j, u_j) = (ts[j], us[j]);
            // h(t*s) = h(t)h(s)
            match round_trip(g, u_i + u_j) {
                Ok(r) => rb.observe("star-h-multiplicative", t_i, t_j, r),
                Err(e) => rb.observe_error("star-h-multiplicative", t_i, t_j, &e),
            }
            // (t*s)^{*-1} = h^{-1}(1/(h(t)h(s)))
            let g1 = g
                .star(t_i, t_j)
                .and_then(|p| g.inverse(p))
                .and_then(|q| g.log_h(q))
                .map(|u| (u + (u_i + u_j)).exp() - T::one());
            match g1 {
                Ok(r) => rb.observe("inverse-of-star", t_i, t_j, r),
                Err(e) => rb.observe_error("inverse-of-star", t_i, t_j, &e),
            }
            // t*s^{*-1} = h^{-1}(h(t)/h(s))
            let g2 = g
                .inverse(t_j)
                .and_then(|inv| g.star(t_i, inv))
                .and_then(|p| g.log_h(p))
                .map(|u| (u - (u_i - u_j)).exp() - T::one());
            match g2 {
                Ok(r) => rb.observe("star-with-inverse-ratio", t_i, t_j, r),
                Err(e) => rb.observe_error("star-with-inverse-ratio", t_i, t_j, &e),
            }
            // (t*s^{*-1})^{*-1} = s*t^{*-1}
            let g3 = (|| -> Result<T> {
                let lhs = g.inverse(g.star(t_i, g.inverse(t_j)?)?)?;
                let rhs = g.star(t_j, g.inverse(t_i)?)?;
                Ok((g.log_h(lhs)? - g.log_h(rhs)?).exp() - T::one())
            })();
            match g3 {
                Ok(r) => rb.observe("swap-inverse-symmetry", t_i, t_j, r),
                Err(e) => rb.observe_error("swap-inverse-symmetry", t_i, t_j, &e),
            }
            // commutativity (materialized)
            let comm = (|| -> Result<T> {
                let a = g.star(t_i, t_j)?;
                let b = g.star(t_j, t_i)?;
                Ok((g.log_h(a)? - g.log_h(b)?).exp() - T::one())
            })();
            match comm {
                Ok(r) => rb.observe("commutativity", t_i, t_j, r),
                Err(e) => rb.observe_error("commutativity", t_i, t_j, &e),
            }
            // order reformulation: s <=_* t iff s <= t
            match g.leq_star(t_i, t_j) {
                Ok(le) => rb.observe_bool("order-coincides", t_i, t_j, le == (t_i <= t_j)),
                Err(e) => rb.observe_error("order-coincides", t_i, t_j, &e),
            }
            // inversion flips the order
            let flip = (|| -> Result<bool> {
                let inv_i = g.inverse(t_i)?;
                let inv_j = g.inverse(t_j)?;
                Ok((t_i <= t_j) == (inv_j <= inv_i))
            })();
            match flip {
                Ok(ok) => rb.observe_bool("inverse-flips-order", t_i, t_j, ok),
                Err(e) => rb.observe_error("inverse-flips-order", t_i, t_j, &e),
            }
            // triangle inequality in h-space: h(|t*s|_*) <= h(|t|_*)h(|s|_*)
            let tri = (|| -> Result<T> {
                let lhs = g.abs_star(g.star(t_i, t_j)?)?;
                let rhs = g.star(g.abs_star(t_i)?, g.abs_star(t_j)?)?;
                Ok((g.log_h(lhs)? - g.log_h(rhs)?).exp() - T::one())
            })();
            match tri {
                Ok(r) => rb.observe_one_sided("triangle-inequality", t_i, t_j, r),
                Err(e) => rb.observe_error("triangle-inequality", t_i, t_j, &e),
            }
        }
    }

    // ternary identities: all ordered triples
    for i in 0..n {
        for j in 0..n {
            let u_ij = us[i] + us[j];
            let left_inner = g.exp_h_inv(u_ij).and_then(|p| g.log_h(p));
            for k in 0..n {
                // associativity, both association orders against the exact sum
                let sum = u_ij + us[k];
                let assoc = (|| -> Result<T> {
                    let w1 = left_inner.clone()?;
                    let a1 = g.log_h(g.exp_h_inv(w1 + us[k])?)?;
                    let w2 = g.log_h(g.exp_h_inv(us[j] + us[k])?)?;
                    let a2 = g.log_h(g.exp_h_inv(us[i] + w2)?)?;
                    let r1 = ((a1 - sum).exp() - T::one()).abs();
                    let r2 = ((a2 - sum).exp() - T::one()).abs();
                    Ok(r1.max(r2))
                })();
                match assoc {
                    Ok(r) => rb.observe("associativity", ts[i], ts[j], r),
                    Err(e) => rb.observe_error("associativity", ts[i], ts[j], &e),
                }
                // order is translation invariant (left and right)
                let trans = (|| -> Result<bool> {
                    let a = g.exp_h_inv(us[k] + us[i])?;
                    let b = g.exp_h_inv(us[k] + us[j])?;
                    let right_a = g.exp_h_inv(us[i] + us[k])?;
                    let right_b = g.exp_h_inv(us[j] + us[k])?;
                    let expect = ts[i] <= ts[j];
                    Ok((a <= b) == expect && (right_a <= right_b) == expect)
                })();
                match trans {
                    Ok(ok) => rb.observe_bool("order-translation-invariant", ts[i], ts[j], ok),
                    Err(e) => rb.observe_error("order-translation-invariant", ts[i], ts[j], &e),
                }
            }
        }
    }

    // integer powers: h(T^{*k}) = h(T)^k for |k| <= 40 where representable
    let u_target = T::of(0.14);
    let t_pow = us
        .iter()
        .enumerate()
        .filter(|(_, &u)| u > T::of(0.01))
        .min_by(|a, b| {
            (*a.1 - u_target)
                .abs()
                .partial_cmp(&(*b.1 - u_target).abs())
                .unwrap()
        })
        .map(|(i, _)| ts[i]);
    let t_pow = match t_pow {
        Some(t) => t,
        None => match g.exp_h_inv(u_target) {
            Ok(t) => t,
            Err(_) => ts[n - 1],
        },
    };
    let u_pow = g.log_h(t_pow).unwrap_or(T::zero());
    let mut clipped = 0usize;
    for k in -40..=40i32 {
        match g.power(t_pow, k) {
            Ok(p) => match g.log_h(p) {
                Ok(u_p) => rb.observe(
                    "integer-power",
                    t_pow,
                    T::of_i32(k),
                    (u_p - u_pow * T::of_i32(k)).exp() - T::one(),
                ),
                Err(e) => rb.observe_error("integer-power", t_pow, T::of_i32(k), &e),
            },
            Err(Error::Overflow(_)) => clipped += 1,
            Err(e) => rb.observe_error("integer-power", t_pow, T::of_i32(k), &e),
        }
    }
    if clipped > 0 {
        rb.note(format!(
            "integer-power: {clipped} exponents skipped as unrepresentable for this rate"
        ));
    }
    // iterated definition for small k: T^{*3} = T * T * T
    if let (Ok(direct), Ok(iterated)) = (
        g.power(t_pow, 3),
        g.star(t_pow, t_pow).and_then(|p| g.star(p, t_pow)),
    ) {
        if let (Ok(a), Ok(b)) = (g.log_h(direct), g.log_h(iterated)) {
            rb.observe("power-matches-iterated-star", t_pow, T::of_i32(3), (a - b).exp() - T::one());
        }
    }

    // translate spacing: d_*(s*T^{*k}, s*T^{*(k-1)}) = T
    for &s in ts.iter() {
        let u_s = match g.log_h(s) {
            Ok(u) => u,
            Err(_) => continue,
        };
        for k in [-2i32, -1, 1, 2] {
            let spacing = (|| -> Result<T> {
                let a = g.star(s, g.power(t_pow, k)?)?;
                let b = g.star(s, g.power(t_pow, k - 1)?)?;
                let d = g.dist_star(a, b)?;
                Ok((g.log_h(d)? - u_pow).exp() - T::one())
            })();
            match spacing {
                Ok(r) => rb.observe("translate-spacing", s, u_s, r),
                Err(Error::Overflow(_)) => continue,
                Err(e) => rb.observe_error("translate-spacing", s, u_s, &e),
            }
        }
    }

    rb.finish()
}
