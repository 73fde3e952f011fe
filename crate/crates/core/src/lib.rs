//! Numerical toolkit for dichotomy-type properties of nonautonomous linear
//! ODE systems x' = A(t)x under an arbitrary growth rate h.
//!
//! The crate verifies, estimates, and inter-converts:
//!
//! - the group (J, ∗) induced by a growth rate, with order, absolute value,
//!   distance, and integer powers ([`growth_group`]);
//! - transition matrices Φ(t, s) of linear systems, with analytic oracles
//!   for the builtin examples ([`linsys`]);
//! - uniform h-dichotomies, projector families, and constant estimation
//!   ([`dichotomy`]);
//! - uniform bounded h-growth/decay and its matrix form, with the constant
//!   conversions between them ([`growth_bounds`]);
//! - noncriticality and expansiveness criteria and the constant-conversion
//!   pipelines tying all three properties together ([`criteria`]).
//!
//! Everything is generic over the scalar type via [`real::Real`]; the
//! aliases below fix `f64`, which is what the CLI and the test suites use.

pub mod criteria;
pub mod dichotomy;
pub mod error;
pub mod expr;
pub mod growth_bounds;
pub mod growth_group;
pub mod linalg;
pub mod linsys;
pub mod quad;
pub mod real;
pub mod report;

pub use error::{Error, Result};
pub use real::Real;

/// f64 growth rate (the toolkit default).
pub type GrowthRate64 = growth_group::GrowthRate<f64>;
/// f64 group sample.
pub type GroupSample64 = growth_group::GroupSample<f64>;
/// f64 linear system.
pub type LinearSystem64 = linsys::LinearSystem<f64>;
/// f64 dense matrix.
pub type Mat64 = linalg::Mat<f64>;
/// f64 check report.
pub type CheckReport64 = report::CheckReport<f64>;
