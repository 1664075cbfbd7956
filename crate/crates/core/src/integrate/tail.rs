//! Improper integrals over `[a, inf)`.
//!
//! The partial integral is taken on doubling horizons `H_k = a * 2^k`. Two
//! consecutive increments give the local ratio `r = D_k / D_{k-1}`, which is
//! exactly `2^(p+1)` for a power-law integrand `t^p`; when `r < 1` the
//! remaining tail is estimated by the geometric sum `D_k * r / (1 - r)`.
//!
//! Divergence is never proven. It is reported when the partial integrals
//! grow monotonically across `decades` lags of 16x (each lag spans more than
//! a decade of horizon) by at least `divergence_ratio` overall, and the local
//! ratio shows no sign of decay (`r >= 2^(-1e-6)`).

use serde::{Deserialize, Serialize};

use super::quadrature::integrate_rel;
use super::IntegrateError;

/// Doublings per lag in the divergence test; `2^4 = 16 > 10`.
const LAG: usize = 4;
/// Local ratio threshold below which the integrand is treated as decaying.
fn decay_guard() -> f64 {
    (-1e-6f64 * std::f64::consts::LN_2).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailResult {
    Converged { value: f64, abs_error: f64 },
    Diverged { growth_exponent: f64 },
    Inconclusive { partial_value: f64, horizon: f64 },
}

impl TailResult {
    pub fn is_converged(&self) -> bool {
        matches!(self, TailResult::Converged { .. })
    }

    pub fn is_diverged(&self) -> bool {
        matches!(self, TailResult::Diverged { .. })
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            TailResult::Converged { value, .. } => Some(*value),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPolicy {
    /// Last horizon, as a multiple of the lower limit.
    pub max_horizon_factor: f64,
    /// Minimum overall growth factor of the partial integral.
    pub divergence_ratio: f64,
    /// Number of consecutive 16x lags over which growth must be monotone.
    pub decades: usize,
}

impl Default for TailPolicy {
    fn default() -> Self {
        TailPolicy { max_horizon_factor: 1e8, divergence_ratio: 1.5, decades: 3 }
    }
}

impl TailPolicy {
    /// Number of doublings needed to reach the maximum horizon.
    pub fn doublings(&self) -> usize {
        self.max_horizon_factor.log2().ceil().max(1.0) as usize
    }
}

/// `∫_a^∞ f`. `tol` is relative: a converged value carries
/// `abs_error <= tol * |value|` (with `tol` floored at a few ulps).
pub fn integrate_to_infinity<F>(
    f: F,
    a: f64,
    tol: f64,
    policy: &TailPolicy,
) -> Result<TailResult, IntegrateError>
where
    F: Fn(f64) -> f64,
{
    if !(a > 0.0 && a.is_finite()) {
        return Err(IntegrateError::InvalidInterval { a, b: f64::INFINITY });
    }
    let tol = effective_tol(tol);
    let mut partials = vec![0.0];
    let mut quad_err = 0.0;
    let mut lo = a;
    let mut assessor = TailAssessor::new(tol, *policy);
    for k in 1..=policy.doublings() {
        let hi = a * 2f64.powi(k as i32);
        let (d, e) = match integrate_rel(&f, lo, hi, 0.0, tol * 1e-3) {
            Ok(r) => r,
            Err(IntegrateError::ToleranceNotMet { value, abs_error }) => (value, abs_error),
            Err(e) => return Err(e),
        };
        quad_err += e;
        let total = partials[k - 1] + d;
        partials.push(total);
        if let Some(result) = assessor.step(&partials, quad_err) {
            return Ok(result);
        }
        lo = hi;
    }
    Ok(TailResult::Inconclusive { partial_value: *partials.last().unwrap(), horizon: lo })
}

/// Classifies a sequence of partial integrals on doubling horizons,
/// `partials[k] = ∫_a^(a 2^k)`. Shared by the direct tail integrator and the
/// nested kernels, which produce their partial integrals by sweeping.
pub fn assess_partials(partials: &[f64], tol: f64, policy: &TailPolicy, a: f64) -> TailResult {
    let tol = effective_tol(tol);
    let mut assessor = TailAssessor::new(tol, *policy);
    for k in 1..partials.len() {
        if let Some(r) = assessor.step(&partials[..=k], 0.0) {
            return r;
        }
    }
    let k = partials.len().saturating_sub(1);
    TailResult::Inconclusive { partial_value: partials[k], horizon: a * 2f64.powi(k as i32) }
}

fn effective_tol(tol: f64) -> f64 {
    tol.max(64.0 * f64::EPSILON)
}

struct TailAssessor {
    tol: f64,
    policy: TailPolicy,
    previous_estimate: Option<f64>,
}

impl TailAssessor {
    fn new(tol: f64, policy: TailPolicy) -> Self {
        TailAssessor { tol, policy, previous_estimate: None }
    }

    // Inspects the newest checkpoint `partials.last()`; returns a verdict once
    // one is reached.
    fn step(&mut self, partials: &[f64], quad_err: f64) -> Option<TailResult> {
        let k = partials.len() - 1;
        if k < 2 {
            return None;
        }
        let d_now = partials[k] - partials[k - 1];
        let d_prev = partials[k - 1] - partials[k - 2];
        let ratio = if d_now == 0.0 {
            0.0
        } else if d_prev != 0.0 && d_now / d_prev > 0.0 {
            d_now / d_prev
        } else {
            f64::NAN
        };

        let estimate = if ratio.is_finite() && ratio < 1.0 {
            Some(partials[k] + d_now * ratio / (1.0 - ratio))
        } else {
            None
        };
        if let (Some(est), Some(prev)) = (estimate, self.previous_estimate) {
            let change = (est - prev).abs();
            if change <= self.tol * est.abs() {
                return Some(TailResult::Converged { value: est, abs_error: change + quad_err });
            }
        }
        self.previous_estimate = estimate;

        let span = LAG * self.policy.decades;
        if k > span && ratio.is_finite() && ratio >= decay_guard() {
            let checkpoints: Vec<f64> = (0..=self.policy.decades).map(|j| partials[k - j * LAG]).collect();
            let monotone = checkpoints.windows(2).all(|w| w[0] > w[1]);
            let oldest = checkpoints[self.policy.decades];
            if monotone && oldest > 0.0 && partials[k] >= self.policy.divergence_ratio * oldest {
                let growth = (partials[k] / partials[k - LAG]).ln() / ((1u32 << LAG) as f64).ln();
                return Some(TailResult::Diverged { growth_exponent: growth });
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(f: impl Fn(f64) -> f64, a: f64) -> TailResult {
        integrate_to_infinity(f, a, 1e-10, &TailPolicy::default()).unwrap()
    }

    #[test]
    fn inverse_square() {
        let r = run(|t| t.powi(-2), 1.0);
        let v = r.value().expect("converged");
        assert!((v - 1.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn second_coefficient_tail_of_the_fractional_example() {
        // r2^(-1/beta) = t^-21 for r2 = t^3, beta = 1/7
        let v = run(|t| t.powi(-21), 1.0).value().unwrap();
        assert!((v - 0.05).abs() < 1e-11);
    }

    #[test]
    fn slowly_decaying_power_uses_the_tail_estimate() {
        let p = -1.01;
        let v = run(|t: f64| t.powf(p), 2.0).value().unwrap();
        let exact = 2f64.powf(p + 1.0) / (-p - 1.0);
        assert!(((v - exact) / exact).abs() < 1e-6, "{v} vs {exact}");
    }

    #[test]
    fn growth_is_diverged_with_exponent() {
        match run(|t| t.powi(6), 1.0) {
            TailResult::Diverged { growth_exponent } => assert!((growth_exponent - 7.0).abs() < 0.05),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn harmonic_is_diverged_with_small_exponent() {
        match run(|t| 1.0 / t, 1.0) {
            TailResult::Diverged { growth_exponent } => assert!(growth_exponent.abs() < 0.2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_integrand_converges_to_zero() {
        assert_eq!(run(|_| 0.0, 1.0).value(), Some(0.0));
    }

    #[test]
    fn exponential_decay() {
        let v = run(|t: f64| (-t).exp(), 1.0).value().unwrap();
        assert!((v - (-1f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn short_horizon_is_inconclusive_for_log_growth() {
        let policy = TailPolicy { max_horizon_factor: 1e3, ..TailPolicy::default() };
        let r = integrate_to_infinity(|t| 1.0 / t, 1.0, 1e-8, &policy).unwrap();
        assert!(matches!(r, TailResult::Inconclusive { .. }), "{r:?}");
    }
}
