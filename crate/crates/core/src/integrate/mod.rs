//! Numeric engine: adaptive quadrature, improper tails with divergence
//! detection, nested cumulative sweeps and finite-horizon limit estimates.

use thiserror::Error;

pub mod limits;
pub mod nested;
pub mod quadrature;
pub mod tail;

pub use limits::{
    estimate_liminf, estimate_limsup, geometric_grid, LimitEstimate, LimitKind, LimitPolicy, Trend,
};
pub use nested::{Integrand, Nest, Sweep};
pub use quadrature::{integrate, integrate_rel, GaussLegendre};
pub use tail::{assess_partials, integrate_to_infinity, TailPolicy, TailResult};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrateError {
    #[error("integrand is not finite at t = {at}")]
    NonFiniteIntegrand { at: f64 },
    #[error("tolerance not met after subdivision limit (best value {value}, error {abs_error})")]
    ToleranceNotMet { value: f64, abs_error: f64 },
    #[error("criterion function is not finite at t = {at}")]
    NonFiniteCriterionFunction { at: f64 },
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
}
