//! Dormand-Prince 5(4) for the matrix ODE Y' = A(u)·Y.
//!
//! Explicit embedded pair with FSAL, PI step-size control, and Hairer's
//! automatic initial step selection. Integrates forward or backward.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::real::Real;

use super::IntegratorConfig;

// Butcher tableau (Dormand & Prince 1980).
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
// y_new - y_hat = h * sum(E_i k_i): difference of the 5th and 4th order rows
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFE: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const FAC_SHRINK_MAX: f64 = 5.0; // step may shrink by at most this factor
const FAC_GROW_MAX: f64 = 10.0; // and grow by at most this factor

/// Integrate Y' = A(u)·Y from `s` to `t` starting at `y0`.
pub fn integrate_transition<T: Real>(
    a_of: &(dyn Fn(T) -> Result<Mat<T>> + '_),
    s: T,
    t: T,
    y0: Mat<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<Mat<T>> {
    cfg.validate()?;
    if t == s {
        return Ok(y0);
    }
    let n2 = (y0.nrows() * y0.ncols()) as f64;
    let rtol = cfg.rel_tol;
    let atol = cfg.abs_tol;
    let posneg = if t > s { T::one() } else { -T::one() };
    let span = (t - s).abs();

    let f = |u: T, y: &Mat<T>| -> Result<Mat<T>> { Ok(a_of(u)?.matmul(y)) };

    let mut u = s;
    let mut y = y0;
    let mut k1 = f(u, &y)?;
    let mut h = match cfg.initial_step {
        Some(h0) => h0.abs().min(span) * posneg,
        None => initial_step(&f, u, &y, &k1, posneg, span, rtol, atol)?,
    };
    if let Some(hmax) = cfg.max_step {
        if h.abs() > hmax {
            h = hmax * posneg;
        }
    }

    let mut facold = T::of(1e-4);
    let mut rejected = false;
    let mut steps = 0usize;

    loop {
        steps += 1;
        if steps > cfg.max_steps {
            return Err(Error::Integration(format!(
                "exceeded max_steps = {} integrating from {s} to {t}",
                cfg.max_steps
            )));
        }
        // land exactly on t
        let mut last = false;
        if (u + T::of(1.01) * h - t) * posneg > T::zero() {
            h = t - u;
            last = true;
        }

        // stages; the c = 1 stages use the exact step endpoint, because for
        // spans many orders of magnitude wide `u + h` can cancel to 0
        let u_next = if last { t } else { u + h };
        let mut ks: Vec<Mat<T>> = Vec::with_capacity(7);
        ks.push(k1.clone());
        let mut failed_stage = false;
        for i in 0..6 {
            let mut yi = y.clone();
            for (j, k) in ks.iter().enumerate() {
                let aij = T::of(A[i][j]);
                if aij != T::zero() {
                    yi = yi.add(&k.scale(h * aij));
                }
            }
            let stage_time = if C[i] == 1.0 { u_next } else { u + T::of(C[i]) * h };
            match f(stage_time, &yi) {
                Ok(k) => ks.push(k),
                Err(e) => {
                    if last {
                        // cannot step past the endpoint to recover
                        return Err(Error::Integration(format!(
                            "stage evaluation failed near u = {u}: {e}"
                        )));
                    }
                    failed_stage = true;
                    break;
                }
            }
        }
        if failed_stage {
            h = h * T::of(0.5);
            rejected = true;
            continue;
        }
        // 5th order solution is the last stage row (FSAL): yi for i == 5
        let mut y1 = y.clone();
        for (j, k) in ks.iter().enumerate().take(6) {
            let b = T::of(A[5][j]);
            if b != T::zero() {
                y1 = y1.add(&k.scale(h * b));
            }
        }
        // embedded error estimate
        let mut err_mat = Mat::zeros(y.nrows(), y.ncols());
        for (j, k) in ks.iter().enumerate() {
            let e = T::of(E[j]);
            if e != T::zero() {
                err_mat = err_mat.add(&k.scale(h * e));
            }
        }
        let mut err_acc = T::zero();
        for idx in 0..y.data().len() {
            let yv = y.data()[idx].abs();
            let y1v = y1.data()[idx].abs();
            let sc = atol + rtol * yv.max(y1v);
            let q = err_mat.data()[idx] / sc;
            err_acc = err_acc + q * q;
        }
        let err = (err_acc / T::of(n2)).sqrt();

        if !err.is_finite() || y1.data().iter().any(|v| !v.is_finite()) {
            h = h * T::of(0.2);
            rejected = true;
            continue;
        }

        if err <= T::one() {
            // accept
            let fac11 = err.powf(T::of(EXPO1));
            let mut fac = fac11 / facold.powf(T::of(BETA));
            facold = err.max(T::of(1e-4));
            y = y1;
            u = u_next;
            k1 = ks.pop().expect("seven stages");
            if last {
                return Ok(y);
            }
            fac = (fac / T::of(SAFE))
                .max(T::of(1.0 / FAC_GROW_MAX))
                .min(T::of(FAC_SHRINK_MAX));
            let mut hnew = h / fac;
            if rejected {
                // no growth immediately after a rejection
                hnew = if hnew.abs() < h.abs() { hnew } else { h };
            }
            rejected = false;
            if let Some(hmax) = cfg.max_step {
                if hnew.abs() > hmax {
                    hnew = hmax * posneg;
                }
            }
            h = hnew;
        } else {
            let fac11 = err.powf(T::of(EXPO1));
            let fac = (fac11 / T::of(SAFE)).min(T::of(FAC_SHRINK_MAX));
            h = h / fac;
            rejected = true;
        }
    }
}

fn initial_step<T: Real>(
    f: &dyn Fn(T, &Mat<T>) -> Result<Mat<T>>,
    u: T,
    y: &Mat<T>,
    f0: &Mat<T>,
    posneg: T,
    span: T,
    rtol: T,
    atol: T,
) -> Result<T> {
    let n2 = T::of(y.data().len() as f64);
    let scaled = |m: &Mat<T>, reference: &Mat<T>| -> T {
        let mut acc = T::zero();
        for idx in 0..m.data().len() {
            let sc = atol + rtol * reference.data()[idx].abs();
            let q = m.data()[idx] / sc;
            acc = acc + q * q;
        }
        (acc / n2).sqrt()
    };
    let d0 = scaled(y, y);
    let d1 = scaled(f0, y);
    let mut h0 = if d0 < T::of(1e-5) || d1 < T::of(1e-5) {
        T::of(1e-6)
    } else {
        T::of(0.01) * (d0 / d1)
    };
    h0 = h0.min(span);
    let y1 = y.add(&f0.scale(h0 * posneg));
    let f1 = f(u + h0 * posneg, &y1)?;
    let d2 = scaled(&f1.sub(f0), y) / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= T::of(1e-15) {
        (h0 * T::of(1e-3)).max(T::of(1e-6))
    } else {
        (T::of(0.01) / dm).powf(T::of(0.2))
    };
    Ok(h0.min(h1).min(span).max(T::of(1e-12)) * posneg)
}
