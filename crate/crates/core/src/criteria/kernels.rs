//! Nested integral kernels shared by the conditions, evaluated numerically.

use thiserror::Error;

use crate::canonical::CanonicalProfile;
use crate::integrate::limits::geometric_grid;
use crate::integrate::nested::{Integrand, Nest};
use crate::model::{gamma_equals_alpha_beta, EquationSpec};
use crate::rational::{pow_succ, signed_pow, OddRational};

use super::forms::{shape, Shape, WindowKind};
use super::ids::{Condition, LambdaMu, Rho};
use super::numeric::AtomEval;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("B must be positive, got {0}")]
    NonPositiveB(f64),
    #[error("a kernel value is not finite at t = {0}")]
    NonFinite(f64),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("invalid weight function: {0}")]
    BadWeight(String),
    #[error("lower limit {a} exceeds {t}")]
    Reversed { a: f64, t: f64 },
}

pub type Weight<'a> = Option<&'a (dyn Fn(f64) -> f64 + Sync)>;

/// `w * x^e`, computed through logarithms when `x^e` alone would overflow.
pub(crate) fn weighted_pow(w: f64, x: f64, e: OddRational) -> f64 {
    let v = signed_pow(x, e);
    if v.is_finite() || w == 0.0 {
        return w * v;
    }
    let mag = (w.abs().ln() + e.to_f64() * x.abs().ln()).exp();
    w.signum() * signed_pow(x.signum(), e) * mag
}

/// The three nested levels `w q`, `r2^(-1/beta) (.)^(1/beta)`,
/// `r1^(-1/alpha) (.)^(1/alpha)`, truncated to `depth`.
pub(crate) fn nested_levels<'a>(spec: &'a EquationSpec, weight: Weight<'a>, depth: usize) -> Vec<Integrand<'a>> {
    let a = spec.alpha.recip();
    let b = spec.beta.recip();
    let mut levels: Vec<Integrand<'a>> = vec![Box::new(move |u, _| spec.q.eval(u) * weight.map_or(1.0, |w| w(u)))];
    levels.push(Box::new(move |u, inner| weighted_pow(spec.r2_inv_root(u), inner, b)));
    levels.push(Box::new(move |u, inner| weighted_pow(spec.r1_inv_root(u), inner, a)));
    levels.truncate(depth);
    levels
}

fn nested_value(spec: &EquationSpec, a: f64, t: f64, weight: Weight<'_>, depth: usize) -> Result<f64, KernelError> {
    if a > t {
        return Err(KernelError::Reversed { a, t });
    }
    let nest = Nest::forward(a, nested_levels(spec, weight, depth));
    let v = nest.values_at(t).ok_or(KernelError::NonFinite(t))?[depth - 1];
    if v.is_finite() {
        Ok(v)
    } else {
        Err(KernelError::NonFinite(t))
    }
}

/// `∫_a^t q`
pub fn kernel_q(spec: &EquationSpec, a: f64, t: f64) -> Result<f64, KernelError> {
    nested_value(spec, a, t, None, 1)
}

/// `∫_a^t r2^(-1/beta)(u) (∫_a^u w q)^(1/beta) du`
pub fn kernel_r2q(spec: &EquationSpec, a: f64, t: f64, weight: Weight<'_>) -> Result<f64, KernelError> {
    nested_value(spec, a, t, weight, 2)
}

/// The full triple nest from `a` to `t`.
pub fn kernel_j(spec: &EquationSpec, a: f64, t: f64, weight: Weight<'_>) -> Result<f64, KernelError> {
    nested_value(spec, a, t, weight, 3)
}

/// Outer integral over `[t, end]` of the nest whose inner integrals run up
/// to `anchor`: `∫_t^end r1inv(v) (∫_v^anchor r2inv(u) (∫_u^anchor q)^b du)^a dv`.
#[allow(clippy::too_many_arguments)]
pub fn window_by_nest(
    q: &(dyn Fn(f64) -> f64 + Sync),
    r2inv: &(dyn Fn(f64) -> f64 + Sync),
    r1inv: &(dyn Fn(f64) -> f64 + Sync),
    a: OddRational,
    b: OddRational,
    t: f64,
    anchor: f64,
    end: f64,
) -> f64 {
    let levels: Vec<Integrand<'_>> = vec![
        Box::new(move |u, _| q(u)),
        Box::new(move |u, inner| weighted_pow(r2inv(u), inner, b)),
        Box::new(move |u, inner| weighted_pow(r1inv(u), inner, a)),
    ];
    let nest = Nest::backward(anchor, levels);
    // C(x) = ∫_anchor^x, so the part below the anchor enters with a minus sign
    let below = nest.values_at(t).map_or(f64::NAN, |v| -v[2]);
    if end > anchor {
        below + nest.values_at(end).map_or(f64::NAN, |v| v[2])
    } else {
        below
    }
}

/// The window integral at `t`. An empty window (`sigma(t) = t`) is 0.
pub fn kernel_window(spec: &EquationSpec, t: f64, kind: WindowKind) -> Result<f64, KernelError> {
    let s = spec.sigma.eval(t);
    if s <= t {
        return Ok(0.0);
    }
    let v = match kind {
        WindowKind::FromStart => {
            let nest = Nest::forward(spec.t0, nested_levels(spec, None, 3));
            let sweep = nest.sweep(&[t, s]);
            match sweep.values.as_slice() {
                [lo, hi] => hi[2] - lo[2],
                _ => f64::NAN,
            }
        }
        WindowKind::Single | WindowKind::Double => {
            let end = if kind == WindowKind::Single { s } else { spec.sigma.eval(s) };
            window_by_nest(
                &|u| spec.q.eval(u),
                &|u| spec.r2_inv_root(u),
                &|u| spec.r1_inv_root(u),
                spec.alpha.recip(),
                spec.beta.recip(),
                t,
                s,
                end,
            )
        }
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(KernelError::NonFinite(t))
    }
}

/// `g(u) = A u - B (u - C)^((alpha+1)/alpha)`
pub fn concave_power_gap(a: f64, b: f64, c: f64, alpha: OddRational, u: f64) -> f64 {
    // (alpha+1)/alpha has an even numerator over the odd numerator of alpha
    let e = OddRational::new(alpha.denominator(), alpha.numerator()).expect("odd quotient");
    a * u - b * pow_succ(u - c, e)
}

/// Maximiser and maximum of [`concave_power_gap`] over the real line.
pub fn concave_power_max(a: f64, b: f64, c: f64, alpha: OddRational) -> Result<(f64, f64), KernelError> {
    if b <= 0.0 || b.is_nan() {
        return Err(KernelError::NonPositiveB(b));
    }
    let al = alpha.to_f64();
    let u_star = c + signed_pow(al * a / ((al + 1.0) * b), alpha);
    let max = a * c + al.powf(al) / (al + 1.0).powf(al + 1.0) * pow_succ(a, alpha) / b.powf(al);
    Ok((u_star, max))
}

/// The bracketed weighted expression whose limsup the Riccati-type
/// conditions bound, at one `t > T`. `lambda` lowers the ratio exponent.
pub fn riccati_criterion_function(
    spec: &EquationSpec,
    profile: &CanonicalProfile,
    rho: &Rho,
    big_t: f64,
    t: f64,
    lambda: Option<f64>,
) -> Result<f64, KernelError> {
    if !gamma_equals_alpha_beta(spec) {
        return Err(KernelError::HypothesisViolated("gamma = alpha * beta is required".into()));
    }
    let cond = match lambda {
        Some(l) => Condition::RefinedRiccati(rho.clone(), l),
        None => Condition::Riccati(rho.clone()),
    };
    let Shape::Limsup(form) = shape(spec, &cond) else { unreachable!("weighted conditions are limsup forms") };
    let atoms = AtomEval::new(spec, profile, Some(rho)).map_err(KernelError::BadWeight)?;
    let v = super::numeric::limsup_form_values(spec, &atoms, &form, big_t, &[t]);
    v.first().copied().filter(|x| x.is_finite()).ok_or(KernelError::NonFinite(t))
}

/// Largest admissible `lambda` and `mu` from the two pointwise bounds, as
/// infima over a geometric grid from `10 t1` to `horizon`.
pub fn lambda_mu_bounds(
    spec: &EquationSpec,
    profile: &CanonicalProfile,
    t1: f64,
    horizon: f64,
    grid_ratio: f64,
) -> Result<(f64, f64), KernelError> {
    let ts = geometric_grid(10.0 * t1, grid_ratio, horizon);
    let nest = Nest::forward(t1, nested_levels(spec, None, 2));
    let sweep = nest.sweep(&ts);
    let mut lam = f64::INFINITY;
    let mut mu = f64::INFINITY;
    for (&t, v) in ts.iter().zip(&sweep.values) {
        let (lb, mb) = lambda_mu_pointwise(spec, profile, t, v[0], v[1]);
        lam = lam.min(lb);
        mu = mu.min(mb);
    }
    if !(lam.is_finite() && mu.is_finite()) {
        return Err(KernelError::NonFinite(t1));
    }
    Ok((lam, mu))
}

/// Right sides of the two bounds at `t`, given `Q = ∫_t1^t q` and
/// `R = ∫_t1^t r2^(-1/beta) Q^(1/beta)`.
pub fn lambda_mu_pointwise(spec: &EquationSpec, profile: &CanonicalProfile, t: f64, q: f64, r: f64) -> (f64, f64) {
    let alpha = spec.alpha_f();
    let p1s = profile.pi1(spec.sigma.eval(t));
    let lam = weighted_pow(spec.r2_inv_root(t), q, spec.beta.recip()) * p1s.powf(alpha) * profile.pi1(t)
        / spec.r1_inv_root(t);
    let mu = alpha * weighted_pow(p1s, r, spec.alpha.recip());
    (lam, mu)
}

/// Whether `candidate` satisfies the sum constraint and both bounds.
pub fn lambda_mu_feasible(
    spec: &EquationSpec,
    profile: &CanonicalProfile,
    candidate: LambdaMu,
    t1: f64,
    horizon: f64,
) -> bool {
    let LambdaMu { lambda, mu } = candidate;
    if lambda < 0.0 || mu < 0.0 || lambda + mu >= spec.alpha_f() {
        return false;
    }
    match lambda_mu_bounds(spec, profile, t1, horizon, 1.25) {
        Ok((lb, mb)) => lambda <= lb && mu <= mb,
        Err(_) => false,
    }
}
