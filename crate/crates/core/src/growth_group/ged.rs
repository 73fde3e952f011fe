//! Cumulative integral G(t) = ∫₀ᵗ γ(τ) dτ with a fast inverse.
//!
//! Growth rates of the form h(t) = exp(G(t)) need G and G⁻¹ evaluated
//! millions of times by the property suites, so raw adaptive quadrature per
//! call is far too slow. Instead G is modeled lazily, one unit panel
//! [k, k+1] at a time, by Chebyshev interpolants whose node values come from
//! Gauss-Kronrod quadrature. Panels subdivide dyadically until the fit tail
//! is negligible. Panel contents depend only on γ and the panel bounds, so
//! evaluation results are independent of call order and thread interleaving.

use std::collections::HashMap;
use std::sync::RwLock;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::quad::{integrate, QuadConfig};
use crate::real::Real;

const DEGREE: usize = 20;
const MAX_SPLIT_DEPTH: usize = 8;
/// Hard cap on how far the panel table may extend from the origin.
const MAX_PANEL_INDEX: i64 = 1 << 22;

/// One Chebyshev leaf approximating x ↦ ∫_a^x γ on [a, b].
struct Leaf<T> {
    a: T,
    b: T,
    /// ∫_{panel start}^{a} γ
    offset: T,
    /// Chebyshev coefficients of the local integral (Clenshaw-Curtis basis).
    coeffs: Vec<T>,
    /// Coefficients of the derivative interpolant (i.e. γ), for Newton steps.
    deriv: Vec<T>,
}

struct Panel<T> {
    leaves: Vec<Leaf<T>>,
    /// ∫_k^{k+1} γ
    total: T,
}

struct State<T> {
    panels: HashMap<i64, Panel<T>>,
    /// G at integer arguments, relative to G(0) = 0.
    anchors: HashMap<i64, T>,
}

/// Lazily tabulated strictly nondecreasing cumulative integral of a
/// nonnegative integrand.
pub struct CumulativeIntegral<T: Real> {
    gamma: Expr,
    state: RwLock<State<T>>,
    quad: QuadConfig<T>,
}

impl<T: Real> CumulativeIntegral<T> {
    pub fn new(gamma: Expr) -> Self {
        let mut anchors = HashMap::new();
        anchors.insert(0, T::zero());
        CumulativeIntegral {
            gamma,
            state: RwLock::new(State {
                panels: HashMap::new(),
                anchors,
            }),
            quad: QuadConfig {
                rel_tol: T::of(1e-13),
                abs_tol: T::of(1e-15),
                max_depth: 40,
            },
        }
    }

    pub fn gamma(&self) -> &Expr {
        &self.gamma
    }

    /// G(t) = ∫₀ᵗ γ.
    pub fn value(&self, t: T) -> Result<T> {
        if !t.is_finite() {
            return Err(Error::Domain(format!("non-finite argument {t}")));
        }
        let k = floor_index(t)?;
        self.ensure_panel(k)?;
        let anchor = self.ensure_anchor(k)?;
        let state = self.state.read().unwrap();
        let panel = &state.panels[&k];
        Ok(anchor + eval_panel(panel, t))
    }

    /// Solve G(t) = target for t.
    pub fn inverse(&self, target: T) -> Result<T> {
        if !target.is_finite() {
            return Err(Error::Overflow(format!(
                "inverse of non-finite target {target}"
            )));
        }
        // Expand anchors outward until [G(k), G(k+1)] brackets the target.
        let mut k: i64 = 0;
        let mut g_k = T::zero();
        loop {
            self.ensure_panel(k)?;
            let total = {
                let state = self.state.read().unwrap();
                state.panels[&k].total
            };
            let g_next = g_k + total;
            if target >= g_k && target <= g_next {
                return self.solve_in_panel(k, g_k, target);
            }
            if target < g_k {
                k -= 1;
                if k < -MAX_PANEL_INDEX {
                    return Err(Error::Overflow(format!(
                        "inverse target {target} unreachable (integrand too small going left)"
                    )));
                }
                self.ensure_panel(k)?;
                let t_prev = {
                    let state = self.state.read().unwrap();
                    state.panels[&k].total
                };
                g_k = g_k - t_prev;
            } else {
                k += 1;
                if k > MAX_PANEL_INDEX {
                    return Err(Error::Overflow(format!(
                        "inverse target {target} unreachable (integrand too small going right)"
                    )));
                }
                g_k = g_next;
            }
        }
    }

    fn solve_in_panel(&self, k: i64, g_k: T, target: T) -> Result<T> {
        let local = target - g_k;
        let state = self.state.read().unwrap();
        let panel = &state.panels[&k];
        // locate the leaf containing the value
        let mut idx = panel.leaves.len() - 1;
        for (i, leaf) in panel.leaves.iter().enumerate() {
            let leaf_total = eval_cheb(&leaf.coeffs, leaf.a, leaf.b, leaf.b);
            if local <= leaf.offset + leaf_total {
                idx = i;
                break;
            }
        }
        let leaf = &panel.leaves[idx];
        let want = local - leaf.offset;
        let mut lo = leaf.a;
        let mut hi = leaf.b;
        let mut t = {
            // linear seed
            let total = eval_cheb(&leaf.coeffs, leaf.a, leaf.b, leaf.b);
            if total > T::zero() {
                lo + (hi - lo) * (want / total).max(T::zero()).min(T::one())
            } else {
                T::of(0.5) * (lo + hi)
            }
        };
        let tol = T::of(1e-14) * target.abs().max(T::one());
        for _ in 0..200 {
            let f = eval_cheb(&leaf.coeffs, leaf.a, leaf.b, t) - want;
            if f.abs() <= tol {
                return Ok(t);
            }
            if f > T::zero() {
                hi = t;
            } else {
                lo = t;
            }
            let d = eval_cheb(&leaf.deriv, leaf.a, leaf.b, t);
            let newton_ok = d > T::zero();
            let mut next = if newton_ok { t - f / d } else { t };
            if !newton_ok || next <= lo || next >= hi {
                next = T::of(0.5) * (lo + hi);
            }
            if next == t {
                return Ok(t);
            }
            t = next;
        }
        Ok(t)
    }

    fn ensure_panel(&self, k: i64) -> Result<()> {
        {
            let state = self.state.read().unwrap();
            if state.panels.contains_key(&k) {
                return Ok(());
            }
        }
        let a = int_to_scalar::<T>(k);
        let b = int_to_scalar::<T>(k + 1);
        let mut leaves = Vec::new();
        self.build_leaves(a, b, T::zero(), 0, &mut leaves)?;
        let total = leaves
            .last()
            .map(|l| l.offset + eval_cheb(&l.coeffs, l.a, l.b, l.b))
            .unwrap_or(T::zero());
        let mut state = self.state.write().unwrap();
        state.panels.entry(k).or_insert(Panel { leaves, total });
        Ok(())
    }

    fn build_leaves(
        &self,
        a: T,
        b: T,
        offset: T,
        depth: usize,
        out: &mut Vec<Leaf<T>>,
    ) -> Result<()> {
        // integral values at Chebyshev-Lobatto nodes
        let n = DEGREE;
        let mut xs = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let s = -((std::f64::consts::PI * j as f64 / n as f64).cos());
            let x = T::of(0.5) * ((b - a) * T::of(s) + (b + a));
            xs.push(x);
        }
        xs[0] = a;
        xs[n] = b;
        let mut vals = Vec::with_capacity(n + 1);
        let mut acc = T::zero();
        vals.push(acc);
        for j in 1..=n {
            let seg = integrate(|x| self.gamma.eval(x), xs[j - 1], xs[j], &self.quad)?;
            acc = acc + seg;
            vals.push(acc);
        }
        let coeffs = fit_cheb(&vals);
        // Tail test: the interpolant must have converged.
        let scale = coeffs
            .iter()
            .map(|c| c.abs())
            .fold(T::zero(), |m, c| m.max(c))
            .max(T::of(1e-300));
        let tail = coeffs[n - 1].abs().max(coeffs[n].abs());
        if tail > T::of(1e-11) * scale && depth < MAX_SPLIT_DEPTH {
            let mid = T::of(0.5) * (a + b);
            let left_total = integrate(|x| self.gamma.eval(x), a, mid, &self.quad)?;
            self.build_leaves(a, mid, offset, depth + 1, out)?;
            self.build_leaves(mid, b, offset + left_total, depth + 1, out)?;
            return Ok(());
        }
        let deriv = differentiate_cheb(&coeffs, a, b);
        out.push(Leaf {
            a,
            b,
            offset,
            coeffs,
            deriv,
        });
        Ok(())
    }

    fn ensure_anchor(&self, k: i64) -> Result<T> {
        {
            let state = self.state.read().unwrap();
            if let Some(&g) = state.anchors.get(&k) {
                return Ok(g);
            }
        }
        // Walk from the nearest known anchor (0 is always present).
        if k > 0 {
            let mut base = 0;
            {
                let state = self.state.read().unwrap();
                for j in (0..=k).rev() {
                    if state.anchors.contains_key(&j) {
                        base = j;
                        break;
                    }
                }
            }
            for j in base..k {
                self.ensure_panel(j)?;
                let mut state = self.state.write().unwrap();
                let g_j = state.anchors[&j];
                let total = state.panels[&j].total;
                state.anchors.insert(j + 1, g_j + total);
            }
        } else {
            let mut base = 0;
            {
                let state = self.state.read().unwrap();
                for j in k..=0 {
                    if state.anchors.contains_key(&j) {
                        base = j;
                        break;
                    }
                }
            }
            for j in ((k)..base).rev() {
                self.ensure_panel(j)?;
                let mut state = self.state.write().unwrap();
                let g_next = state.anchors[&(j + 1)];
                let total = state.panels[&j].total;
                state.anchors.insert(j, g_next - total);
            }
        }
        let state = self.state.read().unwrap();
        Ok(state.anchors[&k])
    }
}

fn int_to_scalar<T: Real>(k: i64) -> T {
    T::from_i64(k).expect("panel index fits in scalar")
}

fn floor_index<T: Real>(t: T) -> Result<i64> {
    let f = t.floor();
    let k = f
        .to_i64()
        .ok_or_else(|| Error::Overflow(format!("argument {t} outside panel range")))?;
    if k.abs() > MAX_PANEL_INDEX {
        return Err(Error::Overflow(format!("argument {t} outside panel range")));
    }
    Ok(k)
}

fn eval_panel<T: Real>(panel: &Panel<T>, t: T) -> T {
    let mut idx = panel.leaves.len() - 1;
    for (i, leaf) in panel.leaves.iter().enumerate() {
        if t <= leaf.b {
            idx = i;
            break;
        }
    }
    let leaf = &panel.leaves[idx];
    leaf.offset + eval_cheb(&leaf.coeffs, leaf.a, leaf.b, t)
}

/// Clenshaw-Curtis coefficients from Lobatto node values (node j at
/// s_j = -cos(jπ/N), i.e. values ordered left to right).
fn fit_cheb<T: Real>(vals: &[T]) -> Vec<T> {
    let n = vals.len() - 1;
    let mut coeffs = Vec::with_capacity(n + 1);
    for m in 0..=n {
        let mut sum = T::zero();
        for (j, &v) in vals.iter().enumerate() {
            // T_m at s_j = cos((N - j)π/N): cos(m(N-j)π/N)
            let angle = std::f64::consts::PI * (m as f64) * ((n - j) as f64) / (n as f64);
            let w = if j == 0 || j == n { 0.5 } else { 1.0 };
            sum = sum + T::of(w * angle.cos()) * v;
        }
        let factor = if m == 0 || m == n { 1.0 } else { 2.0 };
        coeffs.push(sum * T::of(factor / n as f64));
    }
    coeffs
}

/// Evaluate a Chebyshev series (with the [`fit_cheb`] normalization) at `x`
/// on the interval `[a, b]` via Clenshaw recurrence.
fn eval_cheb<T: Real>(coeffs: &[T], a: T, b: T, x: T) -> T {
    let s = (T::of(2.0) * x - (a + b)) / (b - a);
    let two_s = T::of(2.0) * s;
    let mut b1 = T::zero();
    let mut b2 = T::zero();
    for &c in coeffs.iter().skip(1).rev() {
        let tmp = two_s * b1 - b2 + c;
        b2 = b1;
        b1 = tmp;
    }
    s * b1 - b2 + coeffs[0]
}

/// Coefficients of the derivative of a Chebyshev series on `[a, b]`.
fn differentiate_cheb<T: Real>(coeffs: &[T], a: T, b: T) -> Vec<T> {
    let n = coeffs.len() - 1;
    let mut d = vec![T::zero(); n + 1];
    if n == 0 {
        return d;
    }
    // d_{m-1} = d_{m+1} + 2 m c_m, descending, then halve d_0
    for m in (1..=n).rev() {
        let upper = if m + 1 <= n { d[m + 1] } else { T::zero() };
        d[m - 1] = upper + T::of(2.0 * m as f64) * coeffs[m];
    }
    d[0] = d[0] * T::of(0.5);
    let scale = T::of(2.0) / (b - a);
    for v in &mut d {
        *v = *v * scale;
    }
    d
}
