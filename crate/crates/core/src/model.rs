//! Problem data for the third-order advanced equation
//!
//! ```text
//! (r2(t) ((r1(t) (y'(t))^alpha)')^beta)' + q(t) y^gamma(sigma(t)) = 0,   t >= t0 > 0
//! ```
//!
//! and the validation of its standing hypotheses: odd-quotient exponents,
//! positive `r1`, `r2`, nonnegative and not eventually vanishing `q`, and an
//! advanced, nondecreasing argument `sigma`.
//!
//! Power-law data is checked exactly. Expression data is checked on the
//! geometric grid `t0 * 1.1^k` up to `t0 * check_horizon`; a pass there is
//! recorded as sampled rather than proven.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Expr, ExprError};
use crate::rational::{OddRational, RationalError};

/// Ratio of the sampling grid used for expression-form checks.
pub const CHECK_GRID_RATIO: f64 = 1.1;
/// Default upper end of the sampling grid, relative to `t0`.
pub const DEFAULT_CHECK_HORIZON: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("{name}: {source}")]
    NonOddExponent {
        name: &'static str,
        #[source]
        source: RationalError,
    },
    #[error("{name} is not positive at t = {at} (value {value})")]
    NonPositiveCoefficient { name: &'static str, at: f64, value: f64 },
    #[error("q is negative at t = {at} (value {value})")]
    NegativeQ { at: f64, value: f64 },
    #[error("q vanishes identically on the last decade of the check grid")]
    VanishingQ,
    #[error("sigma(t) < t at t = {at} (sigma = {value})")]
    ArgumentNotAdvanced { at: f64, value: f64 },
    #[error("sigma is decreasing at t = {at} (sigma' = {slope})")]
    DecreasingArgument { at: f64, slope: f64 },
    #[error("t0 must be positive, got {0}")]
    NonPositiveT0(f64),
    #[error("{name} is not finite at t = {at}")]
    NonFinite { name: &'static str, at: f64 },
    #[error("cannot parse expression for {name}: {source}")]
    BadExpression {
        name: &'static str,
        #[source]
        source: ExprError,
    },
    #[error("{0}")]
    Malformed(String),
}

/// One term `coef * t^exp`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerTerm {
    pub coef: f64,
    pub exp: f64,
}

impl PowerTerm {
    pub fn eval(&self, t: f64) -> f64 {
        self.coef * t.powf(self.exp)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientForm {
    PowerLaw(PowerTerm),
    SumOfPowerLaws(Vec<PowerTerm>),
    Expression { body: String, expr: Expr },
}

/// A coefficient function `r1`, `r2` or `q`, defined for `t >= domain_start`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientFunction {
    pub form: CoefficientForm,
    pub domain_start: f64,
}

impl CoefficientFunction {
    pub fn power_law(coef: f64, exp: f64) -> Self {
        CoefficientFunction {
            form: CoefficientForm::PowerLaw(PowerTerm { coef, exp }),
            domain_start: 0.0,
        }
    }

    pub fn sum(terms: Vec<PowerTerm>) -> Self {
        CoefficientFunction { form: CoefficientForm::SumOfPowerLaws(terms), domain_start: 0.0 }
    }

    pub fn expression(body: &str) -> Result<Self, ExprError> {
        let expr = Expr::parse(body)?;
        Ok(CoefficientFunction {
            form: CoefficientForm::Expression { body: body.to_string(), expr },
            domain_start: 0.0,
        })
    }

    pub fn from_expr(expr: Expr) -> Self {
        CoefficientFunction {
            form: CoefficientForm::Expression { body: expr.to_string(), expr },
            domain_start: 0.0,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match &self.form {
            CoefficientForm::PowerLaw(term) => term.eval(t),
            CoefficientForm::SumOfPowerLaws(terms) => terms.iter().map(|x| x.eval(t)).sum(),
            CoefficientForm::Expression { expr, .. } => expr.eval(t),
        }
    }

    pub fn as_power_law(&self) -> Option<PowerTerm> {
        match &self.form {
            CoefficientForm::PowerLaw(term) => Some(*term),
            _ => None,
        }
    }

    /// Scaled copy `c * self`.
    pub fn scaled(&self, c: f64) -> Self {
        let form = match &self.form {
            CoefficientForm::PowerLaw(t) => {
                CoefficientForm::PowerLaw(PowerTerm { coef: c * t.coef, exp: t.exp })
            }
            CoefficientForm::SumOfPowerLaws(ts) => CoefficientForm::SumOfPowerLaws(
                ts.iter().map(|t| PowerTerm { coef: c * t.coef, exp: t.exp }).collect(),
            ),
            CoefficientForm::Expression { expr, .. } => {
                let scaled = Expr::constant(c).mul(expr.clone());
                CoefficientForm::Expression { body: scaled.to_string(), expr: scaled }
            }
        };
        CoefficientFunction { form, domain_start: self.domain_start }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArgumentForm {
    /// `sigma(t) = delta * t`
    Proportional(f64),
    /// `sigma(t) = t + c`
    Shift(f64),
    /// Arbitrary `sigma(t)`, with an optional derivative expression. Without
    /// one the derivative is taken by central differences.
    Expression { body: String, expr: Expr, derivative: Option<Expr> },
}

/// The advanced argument `sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvancedArgument {
    pub form: ArgumentForm,
}

impl AdvancedArgument {
    pub fn proportional(delta: f64) -> Self {
        AdvancedArgument { form: ArgumentForm::Proportional(delta) }
    }

    pub fn shift(c: f64) -> Self {
        AdvancedArgument { form: ArgumentForm::Shift(c) }
    }

    pub fn expression(body: &str, derivative: Option<&str>) -> Result<Self, ExprError> {
        let expr = Expr::parse(body)?;
        let derivative = derivative.map(Expr::parse).transpose()?;
        Ok(AdvancedArgument {
            form: ArgumentForm::Expression { body: body.to_string(), expr, derivative },
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        match &self.form {
            ArgumentForm::Proportional(d) => d * t,
            ArgumentForm::Shift(c) => t + c,
            ArgumentForm::Expression { expr, .. } => expr.eval(t),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match &self.form {
            ArgumentForm::Proportional(d) => *d,
            ArgumentForm::Shift(_) => 1.0,
            ArgumentForm::Expression { derivative: Some(d), .. } => d.eval(t),
            ArgumentForm::Expression { expr, derivative: None, .. } => {
                let h = 1e-6 * t.abs().max(1.0);
                (expr.eval(t + h) - expr.eval(t - h)) / (2.0 * h)
            }
        }
    }

    pub fn as_proportional(&self) -> Option<f64> {
        match self.form {
            ArgumentForm::Proportional(d) => Some(d),
            _ => None,
        }
    }
}

/// How a hypothesis was established.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMode {
    Exact,
    /// Passed on every point of the sampling grid; not a proof.
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub hypothesis: String,
    pub mode: CheckMode,
}

/// Unvalidated equation data, as it arrives from configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSpec {
    pub r1: CoefficientFunction,
    pub r2: CoefficientFunction,
    pub q: CoefficientFunction,
    pub sigma: AdvancedArgument,
    pub alpha: String,
    pub beta: String,
    pub gamma: String,
    pub t0: f64,
}

/// Validated equation data. Immutable; share freely.
#[derive(Debug, Clone, PartialEq)]
pub struct EquationSpec {
    pub r1: CoefficientFunction,
    pub r2: CoefficientFunction,
    pub q: CoefficientFunction,
    pub sigma: AdvancedArgument,
    pub alpha: OddRational,
    pub beta: OddRational,
    pub gamma: OddRational,
    pub t0: f64,
    pub checks: Vec<HypothesisCheck>,
}

impl EquationSpec {
    pub fn alpha_f(&self) -> f64 {
        self.alpha.to_f64()
    }

    pub fn beta_f(&self) -> f64 {
        self.beta.to_f64()
    }

    pub fn gamma_f(&self) -> f64 {
        self.gamma.to_f64()
    }

    /// `r1^(-1/alpha)(t)`
    pub fn r1_inv_root(&self, t: f64) -> f64 {
        self.r1.eval(t).powf(-1.0 / self.alpha_f())
    }

    /// `r2^(-1/beta)(t)`
    pub fn r2_inv_root(&self, t: f64) -> f64 {
        self.r2.eval(t).powf(-1.0 / self.beta_f())
    }

    /// Same equation with `q` replaced by `c * q`.
    pub fn with_scaled_q(&self, c: f64) -> EquationSpec {
        EquationSpec { q: self.q.scaled(c), ..self.clone() }
    }

    /// Power-law coefficients and a proportional argument.
    pub fn is_euler_type(&self) -> bool {
        self.r1.as_power_law().is_some()
            && self.r2.as_power_law().is_some()
            && self.q.as_power_law().is_some()
            && self.sigma.as_proportional().is_some()
    }
}

/// Options for [`validate_spec_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationOptions {
    /// Upper end of the sampling grid, as a multiple of `t0`.
    pub check_horizon: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions { check_horizon: DEFAULT_CHECK_HORIZON }
    }
}

pub fn validate_spec(raw: RawSpec) -> Result<EquationSpec, SpecError> {
    validate_spec_with(raw, ValidationOptions::default())
}

pub fn validate_spec_with(raw: RawSpec, opts: ValidationOptions) -> Result<EquationSpec, SpecError> {
    let exponent = |name: &'static str, s: &str| {
        s.parse::<OddRational>().map_err(|source| SpecError::NonOddExponent { name, source })
    };
    let alpha = exponent("alpha", &raw.alpha)?;
    let beta = exponent("beta", &raw.beta)?;
    let gamma = exponent("gamma", &raw.gamma)?;

    let t0 = raw.t0;
    if !(t0 > 0.0) || !t0.is_finite() {
        return Err(SpecError::NonPositiveT0(t0));
    }
    let grid = check_grid(t0, opts.check_horizon);
    let mut checks = vec![HypothesisCheck {
        hypothesis: "alpha, beta, gamma are quotients of odd positive integers".into(),
        mode: CheckMode::Exact,
    }];

    let mut r1 = raw.r1;
    let mut r2 = raw.r2;
    let mut q = raw.q;
    r1.domain_start = t0;
    r2.domain_start = t0;
    q.domain_start = t0;

    checks.push(check_positive("r1", &r1, &grid)?);
    checks.push(check_positive("r2", &r2, &grid)?);
    checks.push(check_q(&q, &grid)?);
    checks.extend(check_argument(&raw.sigma, &grid)?);

    Ok(EquationSpec { r1, r2, q, sigma: raw.sigma, alpha, beta, gamma, t0, checks })
}

/// Exact test of `gamma == alpha * beta`.
pub fn gamma_equals_alpha_beta(spec: &EquationSpec) -> bool {
    spec.gamma.equals_product(spec.alpha, spec.beta)
}

fn check_grid(t0: f64, horizon: f64) -> Vec<f64> {
    let end = t0 * horizon.max(10.0);
    let mut grid = Vec::new();
    let mut t = t0;
    while t <= end {
        grid.push(t);
        t *= CHECK_GRID_RATIO;
    }
    grid
}

fn check_positive(
    name: &'static str,
    f: &CoefficientFunction,
    grid: &[f64],
) -> Result<HypothesisCheck, SpecError> {
    let hypothesis = format!("{name} > 0 on [t0, inf)");
    match &f.form {
        CoefficientForm::PowerLaw(term) => {
            if !(term.coef > 0.0) || !term.exp.is_finite() {
                return Err(SpecError::NonPositiveCoefficient { name, at: grid[0], value: term.coef });
            }
            Ok(HypothesisCheck { hypothesis, mode: CheckMode::Exact })
        }
        CoefficientForm::SumOfPowerLaws(terms) if !terms.is_empty() && terms.iter().all(|t| t.coef > 0.0) => {
            Ok(HypothesisCheck { hypothesis, mode: CheckMode::Exact })
        }
        _ => {
            for &t in grid {
                let v = f.eval(t);
                if !v.is_finite() {
                    return Err(SpecError::NonFinite { name, at: t });
                }
                if v <= 0.0 {
                    return Err(SpecError::NonPositiveCoefficient { name, at: t, value: v });
                }
            }
            Ok(HypothesisCheck { hypothesis, mode: CheckMode::Sampled })
        }
    }
}

fn check_q(q: &CoefficientFunction, grid: &[f64]) -> Result<HypothesisCheck, SpecError> {
    let hypothesis = "q >= 0 on [t0, inf) and q does not vanish eventually".to_string();
    match &q.form {
        CoefficientForm::PowerLaw(term) => {
            if term.coef < 0.0 {
                return Err(SpecError::NegativeQ { at: grid[0], value: term.coef });
            }
            if term.coef == 0.0 {
                return Err(SpecError::VanishingQ);
            }
            Ok(HypothesisCheck { hypothesis, mode: CheckMode::Exact })
        }
        CoefficientForm::SumOfPowerLaws(terms) if !terms.is_empty() && terms.iter().all(|t| t.coef >= 0.0) => {
            if terms.iter().all(|t| t.coef == 0.0) {
                return Err(SpecError::VanishingQ);
            }
            Ok(HypothesisCheck { hypothesis, mode: CheckMode::Exact })
        }
        _ => {
            let last = *grid.last().expect("nonempty grid");
            let mut nonzero_in_last_decade = false;
            for &t in grid {
                let v = q.eval(t);
                if !v.is_finite() {
                    return Err(SpecError::NonFinite { name: "q", at: t });
                }
                if v < 0.0 {
                    return Err(SpecError::NegativeQ { at: t, value: v });
                }
                if t >= last / 10.0 && v > 0.0 {
                    nonzero_in_last_decade = true;
                }
            }
            if !nonzero_in_last_decade {
                return Err(SpecError::VanishingQ);
            }
            Ok(HypothesisCheck { hypothesis, mode: CheckMode::Sampled })
        }
    }
}

fn check_argument(sigma: &AdvancedArgument, grid: &[f64]) -> Result<Vec<HypothesisCheck>, SpecError> {
    let advanced = "sigma(t) >= t".to_string();
    let monotone = "sigma'(t) >= 0".to_string();
    match &sigma.form {
        ArgumentForm::Proportional(d) => {
            if !(*d >= 1.0) || !d.is_finite() {
                return Err(SpecError::ArgumentNotAdvanced { at: grid[0], value: d * grid[0] });
            }
        }
        ArgumentForm::Shift(c) => {
            if !(*c >= 0.0) || !c.is_finite() {
                return Err(SpecError::ArgumentNotAdvanced { at: grid[0], value: grid[0] + c });
            }
        }
        ArgumentForm::Expression { .. } => {
            for &t in grid {
                let s = sigma.eval(t);
                if !s.is_finite() {
                    return Err(SpecError::NonFinite { name: "sigma", at: t });
                }
                if s < t {
                    return Err(SpecError::ArgumentNotAdvanced { at: t, value: s });
                }
                let ds = sigma.derivative(t);
                if ds < 0.0 {
                    return Err(SpecError::DecreasingArgument { at: t, slope: ds });
                }
            }
            return Ok(vec![
                HypothesisCheck { hypothesis: advanced, mode: CheckMode::Sampled },
                HypothesisCheck { hypothesis: monotone, mode: CheckMode::Sampled },
            ]);
        }
    }
    Ok(vec![
        HypothesisCheck { hypothesis: advanced, mode: CheckMode::Exact },
        HypothesisCheck { hypothesis: monotone, mode: CheckMode::Exact },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn fractional_raw() -> RawSpec {
        RawSpec {
            r1: CoefficientFunction::power_law(1.0, 4.0),
            r2: CoefficientFunction::power_law(1.0, 3.0),
            q: CoefficientFunction::power_law(1.0, 6.0),
            sigma: AdvancedArgument::proportional(2.0),
            alpha: "5/3".into(),
            beta: "1/7".into(),
            gamma: "9/5".into(),
            t0: 1.0,
        }
    }

    #[test]
    fn accepts_fractional_power_law_data() {
        let spec = validate_spec(fractional_raw()).unwrap();
        assert_eq!(spec.alpha.to_string(), "5/3");
        assert!(spec.checks.iter().all(|c| c.mode == CheckMode::Exact));
        assert!(spec.is_euler_type());
        assert_eq!(spec.q.domain_start, 1.0);
    }

    #[test]
    fn even_numerator_is_rejected() {
        let raw = RawSpec { alpha: "2/3".into(), ..fractional_raw() };
        assert!(matches!(validate_spec(raw), Err(SpecError::NonOddExponent { name: "alpha", .. })));
    }

    #[test]
    fn identity_argument_is_admissible() {
        let raw = RawSpec { sigma: AdvancedArgument::proportional(1.0), ..fractional_raw() };
        assert!(validate_spec(raw).is_ok());
        let raw = RawSpec { sigma: AdvancedArgument::proportional(0.9), ..fractional_raw() };
        assert!(matches!(validate_spec(raw), Err(SpecError::ArgumentNotAdvanced { .. })));
    }

    #[test]
    fn hypothesis_failures() {
        let raw = RawSpec { r1: CoefficientFunction::power_law(-1.0, 4.0), ..fractional_raw() };
        assert!(matches!(validate_spec(raw), Err(SpecError::NonPositiveCoefficient { name: "r1", .. })));
        let raw = RawSpec { q: CoefficientFunction::expression("t - 5").unwrap(), ..fractional_raw() };
        assert!(matches!(validate_spec(raw), Err(SpecError::NegativeQ { .. })));
        let raw = RawSpec { t0: 0.0, ..fractional_raw() };
        assert!(matches!(validate_spec(raw), Err(SpecError::NonPositiveT0(_))));
        let raw = RawSpec {
            sigma: AdvancedArgument::expression("t - 1", None).unwrap(),
            ..fractional_raw()
        };
        assert!(matches!(validate_spec(raw), Err(SpecError::ArgumentNotAdvanced { .. })));
        let raw = RawSpec {
            r2: CoefficientFunction::expression("t^3 - 2").unwrap(),
            ..fractional_raw()
        };
        assert!(matches!(validate_spec(raw), Err(SpecError::NonPositiveCoefficient { name: "r2", .. })));
    }

    #[test]
    fn compact_bump_q_vanishes_eventually() {
        let raw = RawSpec {
            q: CoefficientFunction::expression("exp(-(t-5)^2)").unwrap(),
            ..fractional_raw()
        };
        assert_eq!(validate_spec(raw), Err(SpecError::VanishingQ));
        let raw = RawSpec { q: CoefficientFunction::power_law(0.0, 1.0), ..fractional_raw() };
        assert_eq!(validate_spec(raw), Err(SpecError::VanishingQ));
    }

    #[test]
    fn expression_checks_are_marked_sampled() {
        let raw = RawSpec {
            r1: CoefficientFunction::expression("t^4 + t").unwrap(),
            sigma: AdvancedArgument::expression("2*t + sqrt(t)", None).unwrap(),
            ..fractional_raw()
        };
        let spec = validate_spec(raw).unwrap();
        let sampled = spec.checks.iter().filter(|c| c.mode == CheckMode::Sampled).count();
        assert_eq!(sampled, 3);
        assert!(!spec.is_euler_type());
    }

    #[test]
    fn decreasing_argument_rejected() {
        // sigma(t) = t + 10/t stays advanced but decreases near t0 = 1
        let raw = RawSpec {
            sigma: AdvancedArgument::expression("t + 10/t", Some("1 - 10/t^2")).unwrap(),
            ..fractional_raw()
        };
        assert!(matches!(validate_spec(raw), Err(SpecError::DecreasingArgument { .. })));
    }

    #[test]
    fn product_rule_is_exact() {
        let spec = validate_spec(fractional_raw()).unwrap();
        assert!(!gamma_equals_alpha_beta(&spec));
        let raw = RawSpec { alpha: "1".into(), beta: "1/3".into(), gamma: "1/3".into(), ..fractional_raw() };
        assert!(gamma_equals_alpha_beta(&validate_spec(raw).unwrap()));
        let raw = RawSpec { alpha: "1".into(), beta: "1".into(), gamma: "1".into(), ..fractional_raw() };
        assert!(gamma_equals_alpha_beta(&validate_spec(raw).unwrap()));
    }

    #[test]
    fn validation_is_deterministic() {
        let a = validate_spec(RawSpec { alpha: "4/3".into(), ..fractional_raw() });
        let b = validate_spec(RawSpec { alpha: "4/3".into(), ..fractional_raw() });
        assert_eq!(a, b);
    }
}
