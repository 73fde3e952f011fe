//! Pass/fail reports for grid-based inequality and identity checks.

use serde::Serialize;

use crate::error::Error;
use crate::real::Real;

/// A point where a check was evaluated, with both sides of the comparison.
///
/// For identity checks `lhs`/`rhs` hold the measured violation; for
/// inequality checks they hold the two sides at the worst point.
#[derive(Clone, Debug, Serialize)]
pub struct Witness<T> {
    pub label: String,
    pub t: T,
    pub s: T,
    pub lhs: T,
    pub rhs: T,
}

/// Verdict of a grid check.
///
/// `pass` holds exactly when `worst_violation <= tol`. The violation measure
/// is multiplicative: for an inequality `lhs <= rhs` it is `lhs/rhs - 1`,
/// for an identity it is the relative residual, and for a boolean fact it is
/// 0 or 1.
#[derive(Clone, Debug, Serialize)]
pub struct CheckReport<T> {
    pub name: String,
    pub pass: bool,
    pub tol: T,
    pub worst_violation: T,
    pub checked: usize,
    pub witness: Vec<Witness<T>>,
    pub notes: Vec<String>,
    /// Every observation point, kept only when sample collection is on
    /// (plot-data emission); empty otherwise.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub samples: Vec<Witness<T>>,
}

impl<T: Real> CheckReport<T> {
    pub fn worst_witness(&self) -> Option<&Witness<T>> {
        self.witness.first()
    }
}

/// Accumulates observations and keeps the worst one as a witness, plus the
/// first few failures.
pub struct ReportBuilder<T> {
    name: String,
    tol: T,
    worst: T,
    checked: usize,
    worst_witness: Option<Witness<T>>,
    failures: Vec<Witness<T>>,
    notes: Vec<String>,
    samples: Vec<Witness<T>>,
}

const MAX_FAILURE_WITNESSES: usize = 8;

impl<T: Real> ReportBuilder<T> {
    pub fn new(name: &str, tol: T) -> Self {
        ReportBuilder {
            name: name.into(),
            tol,
            worst: T::neg_infinity(),
            checked: 0,
            worst_witness: None,
            failures: Vec::new(),
            notes: Vec::new(),
            samples: Vec::new(),
        }
    }



    /// Record a violation measure at a point. NaN counts as a hard failure.
    pub fn observe(&mut self, label: &str, t: T, s: T, violation: T) {
        let v = if violation.is_nan() {
            T::infinity()
        } else {
            violation.abs()
        };
        self.observe_signed(label, t, s, v, v, v + T::one());
    }

    /// Record a signed violation of a one-sided inequality; negative values
    /// mean the inequality holds with slack and never count against the
    /// check. NaN counts as a hard failure.
    pub fn observe_one_sided(&mut self, label: &str, t: T, s: T, violation: T) {
        let v = if violation.is_nan() {
            T::infinity()
        } else {
            violation
        };
        self.observe_signed(label, t, s, v, v, v + T::one());
    }

    /// Record a one-sided inequality `lhs <= rhs (1 + tol)`. Bound
    /// observations are kept as samples for plot emission; there are only
    /// grid-pair many of them per check.
    pub fn observe_bound(&mut self, label: &str, t: T, s: T, lhs: T, rhs: T) {
        let v = if rhs > T::zero() && lhs.is_finite() {
            lhs / rhs - T::one()
        } else if lhs == T::zero() && rhs >= T::zero() {
            T::zero()
        } else {
            T::infinity()
        };
        self.samples.push(Witness {
            label: label.into(),
            t,
            s,
            lhs,
            rhs,
        });
        self.observe_signed(label, t, s, v, lhs, rhs);
    }

    /// Record a fact that must hold; a `false` contributes violation 1.
    pub fn observe_bool(&mut self, label: &str, t: T, s: T, ok: bool) {
        let v = if ok { T::zero() } else { T::one() };
        self.observe_signed(label, t, s, v, v, T::zero());
    }

    /// Record an evaluation error as an infinite violation.
    pub fn observe_error(&mut self, label: &str, t: T, s: T, err: &Error) {
        self.note(format!("{label} at ({t}, {s}): {err}"));
        self.observe_signed(label, t, s, T::infinity(), T::infinity(), T::zero());
    }

    fn observe_signed(&mut self, label: &str, t: T, s: T, violation: T, lhs: T, rhs: T) {
        self.checked += 1;
        if violation > self.worst || self.worst_witness.is_none() {
            self.worst = violation;
            self.worst_witness = Some(Witness {
                label: label.into(),
                t,
                s,
                lhs,
                rhs,
            });
        }
        if violation > self.tol && self.failures.len() < MAX_FAILURE_WITNESSES {
            self.failures.push(Witness {
                label: label.into(),
                t,
                s,
                lhs,
                rhs,
            });
        }
    }

    pub fn note(&mut self, msg: String) {
        if self.notes.len() < 32 {
            self.notes.push(msg);
        }
    }

    pub fn finish(self) -> CheckReport<T> {
        let worst = if self.checked == 0 {
            T::zero()
        } else {
            self.worst
        };
        let mut witness = Vec::new();
        if let Some(w) = self.worst_witness {
            witness.push(w);
        }
        for f in self.failures {
            if witness.len() >= MAX_FAILURE_WITNESSES {
                break;
            }
            // skip a duplicate of the worst point
            if witness
                .first()
                .map(|w| w.t == f.t && w.s == f.s && w.label == f.label)
                .unwrap_or(false)
            {
                continue;
            }
            witness.push(f);
        }
        CheckReport {
            name: self.name,
            pass: worst <= self.tol,
            tol: self.tol,
            worst_violation: worst,
            checked: self.checked,
            witness,
            notes: self.notes,
            samples: self.samples,
        }
    }
}
