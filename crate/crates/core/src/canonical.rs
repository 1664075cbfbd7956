//! Tail functions of the noncanonical operator:
//!
//! ```text
//! pi1(t) = ∫_t^∞ r1^(-1/alpha)
//! pi2(t) = ∫_t^∞ r2^(-1/beta)
//! pi(t)  = ∫_t^∞ r1^(-1/alpha) pi2^(1/alpha)
//! ```
//!
//! Power-law coefficients get exact closed forms. Anything else is tabulated
//! once on a geometric grid and interpolated by cubic Hermite polynomials in
//! `(ln t, ln value)`, using the exact slopes `-t f(t) / value`. Points past
//! the table fall back to a direct tail integral.

use serde::Serialize;
use thiserror::Error;

use crate::integrate::{integrate_rel, integrate_to_infinity, IntegrateError, TailPolicy, TailResult};
use crate::model::EquationSpec;

/// Ratio of the tabulation grid.
pub const TABLE_RATIO: f64 = 1.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CanonicalError {
    #[error("{which} diverges: the operator is canonical, outside the hypotheses")]
    CanonicalOperator { which: &'static str },
    #[error("cannot decide whether {which} converges within the horizon")]
    UndecidedTail { which: &'static str },
    #[error(transparent)]
    Numeric(#[from] IntegrateError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalOptions {
    /// Largest argument the table must cover.
    pub table_end: f64,
    /// Relative tolerance of the tail integrals.
    pub tol: f64,
}

impl CanonicalOptions {
    /// Covers criterion evaluation up to `horizon` (arguments reach `sigma(sigma(horizon))`).
    pub fn for_horizon(spec: &EquationSpec, horizon: f64) -> Self {
        let end = spec.sigma.eval(spec.sigma.eval(horizon)) * 2.0;
        CanonicalOptions { table_end: end.max(10.0 * spec.t0), tol: 1e-11 }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TailForm {
    /// `coef * t^exp`
    Closed { coef: f64, exp: f64 },
    Table(Table),
}

#[derive(Debug, Clone, PartialEq)]
struct Table {
    ln_t: Vec<f64>,
    ln_v: Vec<f64>,
    slope: Vec<f64>,
}

impl Table {
    fn eval(&self, t: f64) -> Option<f64> {
        let x = t.ln();
        let n = self.ln_t.len();
        if !(x >= self.ln_t[0] && x <= self.ln_t[n - 1]) {
            return None;
        }
        let i = match self.ln_t.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(i) => return Some(self.ln_v[i].exp()),
            Err(i) => i - 1,
        };
        let (x0, x1) = (self.ln_t[i], self.ln_t[i + 1]);
        let h = x1 - x0;
        let s = (x - x0) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let y = h00 * self.ln_v[i] + h10 * h * self.slope[i] + h01 * self.ln_v[i + 1] + h11 * h * self.slope[i + 1];
        Some(y.exp())
    }
}

/// `pi1`, `pi2`, `pi` for one equation, with the convergence certificates.
#[derive(Debug, Clone)]
pub struct CanonicalProfile {
    spec: EquationSpec,
    pub pi1_total: TailResult,
    pub pi2_total: TailResult,
    pub closed_form_available: bool,
    tol: f64,
    pi1_form: TailForm,
    pi2_form: TailForm,
    pi_form: TailForm,
}

/// Values at `t0`, for reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileSummary {
    pub pi1_total: TailResult,
    pub pi2_total: TailResult,
    pub pi_at_t0: f64,
    pub closed_form_available: bool,
}

/// Certifies `pi1(t0) < ∞` and `pi2(t0) < ∞` and builds the profile, with a
/// table covering the default horizon `1e8 * t0`.
pub fn check_noncanonical(spec: &EquationSpec) -> Result<CanonicalProfile, CanonicalError> {
    let opts = CanonicalOptions::for_horizon(spec, 1e8 * spec.t0);
    check_noncanonical_with(spec, opts)
}

pub fn check_noncanonical_with(
    spec: &EquationSpec,
    opts: CanonicalOptions,
) -> Result<CanonicalProfile, CanonicalError> {
    let alpha = spec.alpha_f();
    let beta = spec.beta_f();
    let policy = TailPolicy::default();

    let closed = |c: f64, e: f64, root: f64| -> Option<(f64, f64)> {
        // ∫_t^∞ (c s^e)^(-root) ds = c^(-root) t^(1 - e root) / (e root - 1)
        let p = e * root;
        (p > 1.0).then(|| (c.powf(-root) / (p - 1.0), 1.0 - p))
    };
    let pi1_closed = spec.r1.as_power_law().and_then(|r| closed(r.coef, r.exp, 1.0 / alpha));
    let pi2_closed = spec.r2.as_power_law().and_then(|r| closed(r.coef, r.exp, 1.0 / beta));

    let certify = |which: &'static str, closed: Option<(f64, f64)>, f: &dyn Fn(f64) -> f64| {
        if let Some((c, e)) = closed {
            return Ok(TailResult::Converged { value: c * spec.t0.powf(e), abs_error: 0.0 });
        }
        match integrate_to_infinity(f, spec.t0, opts.tol, &policy)? {
            r @ TailResult::Converged { .. } => Ok(r),
            TailResult::Diverged { .. } => Err(CanonicalError::CanonicalOperator { which }),
            TailResult::Inconclusive { .. } => Err(CanonicalError::UndecidedTail { which }),
        }
    };
    let pi1_total = certify("pi1", pi1_closed, &|t| spec.r1_inv_root(t))?;
    let pi2_total = certify("pi2", pi2_closed, &|t| spec.r2_inv_root(t))?;

    let pi1_form = match pi1_closed {
        Some((coef, exp)) => TailForm::Closed { coef, exp },
        None => TailForm::Table(tabulate(&|t| spec.r1_inv_root(t), spec.t0, opts)?),
    };
    let pi2_form = match pi2_closed {
        Some((coef, exp)) => TailForm::Closed { coef, exp },
        None => TailForm::Table(tabulate(&|t| spec.r2_inv_root(t), spec.t0, opts)?),
    };

    let mut profile = CanonicalProfile {
        spec: spec.clone(),
        pi1_total,
        pi2_total,
        closed_form_available: false,
        tol: opts.tol,
        pi1_form,
        pi2_form,
        pi_form: TailForm::Closed { coef: 0.0, exp: 0.0 },
    };

    profile.pi_form = match (pi1_closed, pi2_closed, spec.r1.as_power_law()) {
        (Some(_), Some((k2, e2)), Some(r1)) => {
            // r1^(-1/alpha) pi2^(1/alpha) = c t^E
            let c = r1.coef.powf(-1.0 / alpha) * k2.powf(1.0 / alpha);
            let e = -r1.exp / alpha + e2 / alpha;
            profile.closed_form_available = true;
            TailForm::Closed { coef: c / (-e - 1.0), exp: e + 1.0 }
        }
        _ => {
            let p = &profile;
            TailForm::Table(tabulate(&|t| p.pi_integrand(t), spec.t0, opts)?)
        }
    };
    Ok(profile)
}

fn tabulate(f: &dyn Fn(f64) -> f64, t0: f64, opts: CanonicalOptions) -> Result<Table, CanonicalError> {
    let mut ts = vec![t0];
    while *ts.last().unwrap() < opts.table_end {
        let next = ts.last().unwrap() * TABLE_RATIO;
        ts.push(next);
    }
    let n = ts.len();
    let last = ts[n - 1];
    let tail = match integrate_to_infinity(f, last, opts.tol, &TailPolicy::default())? {
        TailResult::Converged { value, .. } => value,
        _ => return Err(CanonicalError::UndecidedTail { which: "tabulated tail" }),
    };
    let mut values = vec![0.0; n];
    values[n - 1] = tail;
    for i in (0..n - 1).rev() {
        let (piece, _) = integrate_rel(f, ts[i], ts[i + 1], 0.0, opts.tol * 1e-2)
            .or_else(|e| match e {
                IntegrateError::ToleranceNotMet { value, abs_error } => Ok((value, abs_error)),
                other => Err(other),
            })?;
        values[i] = values[i + 1] + piece;
    }
    let ln_t: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ln_v: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let slope: Vec<f64> = ts.iter().zip(&values).map(|(&t, &v)| -t * f(t) / v).collect();
    if ln_v.iter().chain(&slope).any(|x| !x.is_finite()) {
        return Err(CanonicalError::UndecidedTail { which: "tabulated tail" });
    }
    Ok(Table { ln_t, ln_v, slope })
}

impl CanonicalProfile {
    pub fn spec(&self) -> &EquationSpec {
        &self.spec
    }

    fn eval_form(&self, form: &TailForm, t: f64, integrand: &dyn Fn(f64) -> f64) -> f64 {
        match form {
            TailForm::Closed { coef, exp } => coef * t.powf(*exp),
            TailForm::Table(table) => table.eval(t).unwrap_or_else(|| {
                match integrate_to_infinity(integrand, t, self.tol, &TailPolicy::default()) {
                    Ok(TailResult::Converged { value, .. }) => value,
                    _ => f64::NAN,
                }
            }),
        }
    }

    fn pi_integrand(&self, s: f64) -> f64 {
        self.spec.r1_inv_root(s) * self.pi2(s).powf(1.0 / self.spec.alpha_f())
    }

    /// `pi1(t)`; NaN when an out-of-table tail cannot be decided.
    pub fn pi1(&self, t: f64) -> f64 {
        self.eval_form(&self.pi1_form, t, &|s| self.spec.r1_inv_root(s))
    }

    pub fn pi2(&self, t: f64) -> f64 {
        self.eval_form(&self.pi2_form, t, &|s| self.spec.r2_inv_root(s))
    }

    pub fn pi(&self, t: f64) -> f64 {
        self.eval_form(&self.pi_form, t, &|s| self.pi_integrand(s))
    }

    pub fn summary(&self) -> ProfileSummary {
        ProfileSummary {
            pi1_total: self.pi1_total,
            pi2_total: self.pi2_total,
            pi_at_t0: self.pi(self.spec.t0),
            closed_form_available: self.closed_form_available,
        }
    }
}

fn checked(v: f64) -> Result<f64, CanonicalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CanonicalError::UndecidedTail { which: "tail evaluation" })
    }
}

pub fn eval_pi1(profile: &CanonicalProfile, t: f64) -> Result<f64, CanonicalError> {
    checked(profile.pi1(t))
}

pub fn eval_pi2(profile: &CanonicalProfile, t: f64) -> Result<f64, CanonicalError> {
    checked(profile.pi2(t))
}

pub fn eval_pi(profile: &CanonicalProfile, t: f64) -> Result<f64, CanonicalError> {
    checked(profile.pi(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::integrate;
    use crate::model::{validate_spec, AdvancedArgument, CoefficientFunction, RawSpec};

    fn spec(r1: CoefficientFunction, r2: CoefficientFunction, alpha: &str, beta: &str) -> EquationSpec {
        validate_spec(RawSpec {
            r1,
            r2,
            q: CoefficientFunction::power_law(1.0, 0.0),
            sigma: AdvancedArgument::proportional(2.0),
            alpha: alpha.into(),
            beta: beta.into(),
            gamma: "1".into(),
            t0: 1.0,
        })
        .unwrap()
    }

    fn fractional() -> EquationSpec {
        spec(CoefficientFunction::power_law(1.0, 4.0), CoefficientFunction::power_law(1.0, 3.0), "5/3", "1/7")
    }

    #[test]
    fn closed_forms_of_the_fractional_example() {
        let p = check_noncanonical(&fractional()).unwrap();
        assert!(p.closed_form_available);
        assert!((eval_pi1(&p, 1.0).unwrap() - 5.0 / 7.0).abs() < 1e-15);
        assert!((eval_pi2(&p, 1.0).unwrap() - 0.05).abs() < 1e-15);
        assert!((p.pi1_total.value().unwrap() - 5.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn power_law_first_tail() {
        // r1 = t^2, alpha = 1: pi1(t) = 1/t
        let s = spec(CoefficientFunction::power_law(1.0, 2.0), CoefficientFunction::power_law(1.0, 1.0), "1", "1/3");
        let p = check_noncanonical(&s).unwrap();
        assert!((p.pi1(2.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_coefficient_is_canonical() {
        let s = spec(CoefficientFunction::power_law(1.0, 0.0), CoefficientFunction::power_law(1.0, 3.0), "1", "1");
        assert!(matches!(check_noncanonical(&s), Err(CanonicalError::CanonicalOperator { which: "pi1" })));
    }

    #[test]
    fn table_matches_closed_form() {
        let closed = fractional();
        let tabled = spec(
            CoefficientFunction::expression("t^4").unwrap(),
            CoefficientFunction::expression("t^3").unwrap(),
            "5/3",
            "1/7",
        );
        let opts = CanonicalOptions::for_horizon(&tabled, 1e4);
        let a = check_noncanonical(&closed).unwrap();
        let b = check_noncanonical_with(&tabled, opts).unwrap();
        assert!(!b.closed_form_available);
        for t in [1.0, 1.37, 10.0, 123.4, 5e4, 2e5] {
            for (x, y) in [(a.pi1(t), b.pi1(t)), (a.pi2(t), b.pi2(t)), (a.pi(t), b.pi(t))] {
                assert!(((x - y) / x).abs() < 1e-7, "t={t}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn derivative_identity_and_bound() {
        let s = spec(
            CoefficientFunction::expression("t^2 + t").unwrap(),
            CoefficientFunction::expression("t^3 * (2 + 1/t)").unwrap(),
            "1",
            "1/3",
        );
        let p = check_noncanonical_with(&s, CanonicalOptions::for_horizon(&s, 1e3)).unwrap();
        for t in [1.5, 7.0, 40.0] {
            let h = 1e-4 * t;
            let d1 = (p.pi1(t + h) - p.pi1(t - h)) / (2.0 * h);
            assert!(((d1 + s.r1_inv_root(t)) / s.r1_inv_root(t)).abs() < 1e-4);
            let d = (p.pi(t + h) - p.pi(t - h)) / (2.0 * h);
            let expect = -s.r1_inv_root(t) * p.pi2(t);
            assert!(((d - expect) / expect).abs() < 1e-4);
            assert!(p.pi(t) <= p.pi2(1.0) * p.pi1(t));
            // additivity
            let (piece, _) = integrate(|u| s.r1_inv_root(u), t, 2.0 * t, 1e-14).unwrap();
            assert!(((p.pi1(t) - p.pi1(2.0 * t) - piece) / piece).abs() < 1e-8);
        }
    }
}
