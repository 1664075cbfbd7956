//! Closed-form evaluation for Euler-type equations: power-law coefficients
//! `r1 = c1 t^m`, `r2 = c2 t^n`, `q = q0 t^p` and `sigma(t) = delta t`.
//!
//! Limits are decided from leading-order asymptotics ([`lead`]); kernels and
//! window constants are exact sums of power-log terms ([`powerlog`]) when the
//! outer powers `1/alpha` and `1/beta` are integers.

pub mod lead;
pub mod powerlog;
pub mod reference;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::criteria::forms::{shape, Atom, Monomial, Shape, WindowKind};
use crate::criteria::ids::Condition;
use crate::criteria::kernels::window_by_nest;
use crate::model::{
    validate_spec, AdvancedArgument, CoefficientFunction, EquationSpec, PowerTerm, RawSpec, SpecError,
};
use crate::rational::OddRational;

use lead::{Coef, Lead, Limit, LEAD_TOL};
use powerlog::{PowerLogSum, Wide};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EulerError {
    #[error("boundary exponent: {0}")]
    BoundaryExponent(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("1/alpha and 1/beta must be integers for exact nested kernels")]
    NonIntegerNesting,
    #[error("not an Euler-type equation: {0}")]
    NotEuler(String),
    #[error("the limit is a constant the closed forms do not determine: {0}")]
    Undecidable(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerSpec {
    pub m: f64,
    pub n: f64,
    pub p: f64,
    pub q0: f64,
    pub delta: f64,
    pub alpha: OddRational,
    pub beta: OddRational,
    pub gamma: OddRational,
    pub t0: f64,
    pub r1_coef: f64,
    pub r2_coef: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Q,
    R2Q,
    J,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedInequality {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
    pub symbolic_trace: String,
}

impl ReducedInequality {
    fn new(lhs: f64, rhs: f64, symbolic_trace: String) -> Self {
        ReducedInequality { lhs, rhs, satisfied: lhs > rhs, symbolic_trace }
    }
}

/// Outcome of a closed-form reduction: a numeric inequality when the limit
/// is a finite constant, otherwise an exact verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reduction {
    Inequality(ReducedInequality),
    Exact { satisfied: bool, symbolic_trace: String },
}

impl Reduction {
    pub fn satisfied(&self) -> bool {
        match self {
            Reduction::Inequality(r) => r.satisfied,
            Reduction::Exact { satisfied, .. } => *satisfied,
        }
    }

    pub fn trace(&self) -> &str {
        match self {
            Reduction::Inequality(r) => &r.symbolic_trace,
            Reduction::Exact { symbolic_trace, .. } => symbolic_trace,
        }
    }
}

impl EulerSpec {
    pub fn from_equation(spec: &EquationSpec) -> Result<EulerSpec, EulerError> {
        let r1 = spec.r1.as_power_law().ok_or_else(|| EulerError::NotEuler("r1 is not a power law".into()))?;
        let r2 = spec.r2.as_power_law().ok_or_else(|| EulerError::NotEuler("r2 is not a power law".into()))?;
        let q = spec.q.as_power_law().ok_or_else(|| EulerError::NotEuler("q is not a power law".into()))?;
        let delta = spec
            .sigma
            .as_proportional()
            .ok_or_else(|| EulerError::NotEuler("the argument is not proportional".into()))?;
        Ok(EulerSpec {
            m: r1.exp,
            n: r2.exp,
            p: q.exp,
            q0: q.coef,
            delta,
            alpha: spec.alpha,
            beta: spec.beta,
            gamma: spec.gamma,
            t0: spec.t0,
            r1_coef: r1.coef,
            r2_coef: r2.coef,
        })
    }

    /// `r1 = t^m`, `r2 = t^n`, `q = q0 t^(m/3 + n - 5/3)`, `alpha = 1`,
    /// `beta = gamma = 1/3`, `t0 = 1`.
    pub fn example_shape(m: f64, n: f64, q0: f64, delta: f64) -> EulerSpec {
        let third = OddRational::new(1, 3).expect("1/3 is an odd quotient");
        EulerSpec {
            m,
            n,
            p: m / 3.0 + n - 5.0 / 3.0,
            q0,
            delta,
            alpha: OddRational::ONE,
            beta: third,
            gamma: third,
            t0: 1.0,
            r1_coef: 1.0,
            r2_coef: 1.0,
        }
    }

    pub fn to_equation(&self) -> Result<EquationSpec, SpecError> {
        validate_spec(RawSpec {
            r1: CoefficientFunction::power_law(self.r1_coef, self.m),
            r2: CoefficientFunction::power_law(self.r2_coef, self.n),
            q: CoefficientFunction::power_law(self.q0, self.p),
            sigma: AdvancedArgument::proportional(self.delta),
            alpha: self.alpha.to_string(),
            beta: self.beta.to_string(),
            gamma: self.gamma.to_string(),
            t0: self.t0,
        })
    }

    /// `1/alpha`
    pub fn a(&self) -> f64 {
        1.0 / self.alpha.to_f64()
    }

    /// `1/beta`
    pub fn b(&self) -> f64 {
        1.0 / self.beta.to_f64()
    }

    pub fn is_noncanonical(&self) -> bool {
        self.m * self.a() > 1.0 && self.n * self.b() > 1.0
    }

    fn r1inv(&self) -> (f64, f64) {
        (self.r1_coef.powf(-self.a()), -self.m * self.a())
    }

    fn r2inv(&self) -> (f64, f64) {
        (self.r2_coef.powf(-self.b()), -self.n * self.b())
    }

    /// `pi1 = c t^e`
    pub fn pi1_power(&self) -> (f64, f64) {
        let (c, e) = self.r1inv();
        (c / (-(e + 1.0)), e + 1.0)
    }

    pub fn pi2_power(&self) -> (f64, f64) {
        let (c, e) = self.r2inv();
        (c / (-(e + 1.0)), e + 1.0)
    }

    pub fn pi_power(&self) -> (f64, f64) {
        let (c1, e1) = self.r1inv();
        let (c2, e2) = self.pi2_power();
        let e = e1 + self.a() * e2 + 1.0;
        (c1 * c2.powf(self.a()) / (-e), e)
    }

    pub fn pi1(&self, t: f64) -> f64 {
        let (c, e) = self.pi1_power();
        c * t.powf(e)
    }

    pub fn pi2(&self, t: f64) -> f64 {
        let (c, e) = self.pi2_power();
        c * t.powf(e)
    }

    pub fn pi(&self, t: f64) -> f64 {
        let (c, e) = self.pi_power();
        c * t.powf(e)
    }

    fn atom(&self, atom: Atom) -> Result<(f64, f64), EulerError> {
        let shifted = |(c, e): (f64, f64)| (c * self.delta.powf(e), e);
        Ok(match atom {
            Atom::Pi1 => self.pi1_power(),
            Atom::Pi1Sigma => shifted(self.pi1_power()),
            Atom::R1 => (self.r1_coef, self.m),
            Atom::R2 => (self.r2_coef, self.n),
            Atom::PiSigma => shifted(self.pi_power()),
            Atom::Rho | Atom::RhoDerivAbs => {
                return Err(EulerError::NotEuler("custom weight functions have no closed form".into()))
            }
        })
    }

    fn monomial(&self, m: &Monomial) -> Result<(f64, f64), EulerError> {
        m.factors.iter().try_fold((m.coef, 0.0), |(c, e), &(atom, x)| {
            let (ac, ae) = self.atom(atom)?;
            Ok((c * ac.powf(x), e + ae * x))
        })
    }

    fn monomial_lead(&self, m: &Monomial) -> Result<Lead, EulerError> {
        let (c, e) = self.monomial(m)?;
        Ok(Lead::power(c, e))
    }

    fn integer_powers(&self) -> Result<(u32, u32), EulerError> {
        match (self.alpha.reciprocal_integer(), self.beta.reciprocal_integer()) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(EulerError::NonIntegerNesting),
        }
    }

    fn weighted_q(&self, weight: Option<&PowerTerm>) -> PowerLogSum {
        let (c, e) = weight.map_or((1.0, 0.0), |w| (w.coef, w.exp));
        PowerLogSum::power(self.q0 * c, self.p + e)
    }

    /// Exact kernel `∫_lower^t` as a function of `t`. `Q` needs no integer
    /// powers; `R2Q` needs `1/beta` and `J` both.
    pub fn kernel_closed_form(
        &self,
        kind: KernelKind,
        lower: f64,
        weight: Option<&PowerTerm>,
    ) -> Result<PowerLogSum, EulerError> {
        let q = self.weighted_q(weight).integral_from(lower);
        if kind == KernelKind::Q {
            return Ok(q);
        }
        let b = self.beta.reciprocal_integer().ok_or(EulerError::NonIntegerNesting)?;
        let (c2, e2) = self.r2inv();
        let r = PowerLogSum::power(c2, e2).mul(&q.pow_int(b)).integral_from(lower);
        if kind == KernelKind::R2Q {
            return Ok(r);
        }
        let a = self.alpha.reciprocal_integer().ok_or(EulerError::NonIntegerNesting)?;
        let (c1, e1) = self.r1inv();
        Ok(PowerLogSum::power(c1, e1).mul(&r.pow_int(a)).integral_from(lower))
    }

    /// Exact window integral at `t`.
    pub fn window_closed_form(&self, kind: WindowKind, t: f64) -> Result<f64, EulerError> {
        let (a, b) = self.integer_powers()?;
        let (c1, e1) = self.r1inv();
        let (c2, e2) = self.r2inv();
        let s = self.delta * t;
        match kind {
            WindowKind::FromStart => {
                let j = self.kernel_closed_form(KernelKind::J, self.t0, None)?;
                Ok(j.eval(s) - j.eval(t))
            }
            WindowKind::Single | WindowKind::Double => {
                // self-similar: evaluate at t = 1 in wide precision, since the
                // expanded sum cancels to O((delta - 1)^(1 + a + ab))
                let d = self.delta;
                let q = PowerLogSum::<Wide>::power(self.q0, self.p).integral_from(d).scale(-1.0);
                let r = PowerLogSum::power(c2, e2).mul(&q.pow_int(b)).integral_from(d).scale(-1.0);
                let outer = PowerLogSum::power(c1, e1).mul(&r.pow_int(a)).integral_from(1.0);
                let end = if kind == WindowKind::Single { d } else { d * d };
                Ok(outer.eval(end) * t.powf(self.window_exponent()))
            }
        }
    }

    /// Exponent `kappa` with `window(t) = t^kappa * window(1)` for the two
    /// windows whose inner integrals end at `sigma(t)`.
    pub fn window_exponent(&self) -> f64 {
        let (a, b) = (self.a(), self.b());
        1.0 - self.m * a + a * (1.0 - self.n * b + b * (self.p + 1.0))
    }

    /// `window(1)`, exact when the powers are integers, by quadrature otherwise.
    pub fn window_at_one(&self, kind: WindowKind) -> f64 {
        match self.window_closed_form(kind, 1.0) {
            Ok(v) => v,
            Err(_) => {
                let (c1, e1) = self.r1inv();
                let (c2, e2) = self.r2inv();
                let (q0, p) = (self.q0, self.p);
                let end = match kind {
                    WindowKind::Single => self.delta,
                    WindowKind::Double => self.delta * self.delta,
                    WindowKind::FromStart => unreachable!("the window from t0 is not self-similar"),
                };
                window_by_nest(
                    &|u| q0 * u.powf(p),
                    &|u| c2 * u.powf(e2),
                    &|u| c1 * u.powf(e1),
                    self.alpha.recip(),
                    self.beta.recip(),
                    1.0,
                    self.delta,
                    end,
                )
            }
        }
    }

    fn nested_leads(&self, weight: &Monomial) -> Result<[Lead; 3], EulerError> {
        let q = self.monomial_lead(weight)?.mul(&Lead::power(self.q0, self.p));
        let (c2, e2) = self.r2inv();
        let (c1, e1) = self.r1inv();
        let big_q = q.integrate(true)?;
        let r = Lead::power(c2, e2).mul(&big_q.powf(self.b())?).integrate(true)?;
        let j_integrand = Lead::power(c1, e1).mul(&r.powf(self.a())?);
        Ok([big_q, r, j_integrand])
    }
}

fn decide(value: &Lead, threshold: f64, trace: String) -> Result<Reduction, EulerError> {
    match value.limit() {
        Limit::PlusInfinity => Ok(Reduction::Exact { satisfied: true, symbolic_trace: format!("{trace}; limit +inf") }),
        Limit::MinusInfinity => {
            Ok(Reduction::Exact { satisfied: false, symbolic_trace: format!("{trace}; limit -inf") })
        }
        Limit::Zero => Ok(Reduction::Inequality(ReducedInequality::new(0.0, threshold, format!("{trace}; limit 0")))),
        Limit::Constant(Coef::Known(c)) => {
            Ok(Reduction::Inequality(ReducedInequality::new(c, threshold, format!("{trace}; limit {c:.12e}"))))
        }
        Limit::Constant(Coef::Unknown { .. }) => Err(EulerError::Undecidable(trace)),
    }
}

/// Reduces one condition to an exact verdict or a numeric inequality.
pub fn euler_reduce(es: &EulerSpec, cond: &Condition) -> Result<Reduction, EulerError> {
    if !es.is_noncanonical() {
        return Err(EulerError::HypothesisViolated("pi1 or pi2 diverges".into()));
    }
    let spec = es.to_equation().map_err(|e| EulerError::HypothesisViolated(e.to_string()))?;
    let e_inv = (-1f64).exp();
    match shape(&spec, cond) {
        Shape::Divergence { levels, weight } => {
            let [q, r, j_integrand] = es.nested_leads(&weight)?;
            let total = if levels == 1 { q } else { j_integrand.integrate(true)? };
            let trace = if levels == 1 { format!("∫q ~ {q}") } else { format!("Q ~ {q}; R ~ {r}; J ~ {total}") };
            match total.limit() {
                Limit::PlusInfinity => Ok(Reduction::Exact { satisfied: true, symbolic_trace: format!("{trace}; diverges") }),
                _ => Ok(Reduction::Exact { satisfied: false, symbolic_trace: format!("{trace}; converges") }),
            }
        }
        Shape::Limsup(form) => {
            let q = Lead::power(es.q0, es.p).integrate(true)?;
            let inner = es.monomial_lead(&form.pos)?.mul(&q.powf(es.b())?);
            let integrand = match &form.neg {
                Some(neg) => {
                    let (c, e) = es.monomial(neg)?;
                    inner.add(&Lead::power(-c, e))?
                }
                None => inner,
            };
            let integral = integrand.integrate(form.neg.is_none())?;
            let value = es.monomial_lead(&form.pre)?.mul(&integral);
            decide(&value, form.threshold, format!("Q ~ {q}; integrand ~ {integrand}; value ~ {value}"))
        }
        Shape::Window(WindowKind::FromStart) => {
            let [_, r, j_integrand] = es.nested_leads(&Monomial::one())?;
            let w = j_integrand.window(es.delta);
            decide(&w, e_inv, format!("R ~ {r}; window ~ {w}"))
        }
        Shape::Window(kind) => {
            let kappa = es.window_exponent();
            let w = es.window_at_one(kind);
            let trace = format!("window = t^{kappa:.9} * {w:.12e}");
            if es.delta == 1.0 || w == 0.0 {
                Ok(Reduction::Inequality(ReducedInequality::new(0.0, e_inv, format!("{trace}; empty window"))))
            } else if kappa > LEAD_TOL {
                Ok(Reduction::Exact { satisfied: true, symbolic_trace: format!("{trace}; limit +inf") })
            } else if kappa < -LEAD_TOL {
                Ok(Reduction::Inequality(ReducedInequality::new(0.0, e_inv, format!("{trace}; limit 0"))))
            } else {
                Ok(Reduction::Inequality(ReducedInequality::new(w, e_inv, trace)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::ids::{LambdaMu, Rho};

    fn example_one() -> EulerSpec {
        EulerSpec {
            m: 4.0,
            n: 3.0,
            p: 6.0,
            q0: 1.0,
            delta: 2.0,
            alpha: "5/3".parse().unwrap(),
            beta: "1/7".parse().unwrap(),
            gamma: "9/5".parse().unwrap(),
            t0: 1.0,
            r1_coef: 1.0,
            r2_coef: 1.0,
        }
    }

    #[test]
    fn canonical_functions_of_the_family() {
        let es = EulerSpec::example_shape(2.0, 1.0, 1.0, 2.0);
        assert!((es.pi1(2.0) - 0.5).abs() < 1e-15);
        let e1 = example_one();
        assert!((e1.pi1(1.0) - 5.0 / 7.0).abs() < 1e-15);
        assert!((e1.pi2(1.0) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn nested_divergence_always_holds_for_the_family() {
        for (m, n) in [(2.0, 1.0), (1.5, 0.5), (4.0, 2.0)] {
            let es = EulerSpec::example_shape(m, n, 0.3, 1.5);
            assert!(euler_reduce(&es, &Condition::NestedDivergence).unwrap().satisfied());
        }
        assert!(euler_reduce(&example_one(), &Condition::NestedDivergence).unwrap().satisfied());
    }

    #[test]
    fn weighted_divergence_fails_for_the_family() {
        let es = EulerSpec::example_shape(2.0, 1.0, 2.0, 2.0);
        let r = euler_reduce(&es, &Condition::WeightedNestedDivergence).unwrap();
        assert!(!r.satisfied(), "{}", r.trace());
    }

    #[test]
    fn limsup_threshold_in_q0() {
        // satisfied exactly when q0 > 2^(1/3) at m = 2, n = 1, delta = 2
        let at = |q0| euler_reduce(&EulerSpec::example_shape(2.0, 1.0, q0, 2.0), &Condition::AdvancedLimsup).unwrap();
        assert!(at(1.26).satisfied());
        assert!(!at(1.259).satisfied());
        let Reduction::Inequality(r) = at(2.0) else { panic!() };
        assert!((r.lhs - 4.0).abs() < 1e-12);
    }

    #[test]
    fn window_from_start_threshold() {
        let at = |q0| euler_reduce(&EulerSpec::example_shape(2.0, 1.0, q0, 2.0), &Condition::WindowFromStart).unwrap();
        let q_star = (std::f64::consts::E * 2f64.ln()).powf(-1.0 / 3.0);
        assert!(at(q_star * 1.0001).satisfied());
        assert!(!at(q_star * 0.9999).satisfied());
    }

    #[test]
    fn unit_delta_gives_empty_windows() {
        let es = EulerSpec::example_shape(2.0, 1.0, 5.0, 1.0);
        for c in [Condition::Window, Condition::DoubleWindow, Condition::WindowFromStart] {
            assert!(!euler_reduce(&es, &c).unwrap().satisfied());
        }
    }

    #[test]
    fn window_scales_with_its_exponent() {
        let mut es = EulerSpec::example_shape(2.0, 1.0, 1.0, 2.0);
        es.p += 0.3;
        let kappa = es.window_exponent();
        for kind in [WindowKind::Single, WindowKind::Double] {
            let w1 = es.window_closed_form(kind, 1.0).unwrap();
            let w7 = es.window_closed_form(kind, 7.0).unwrap();
            assert!((w7 / w1 - 7f64.powf(kappa)).abs() < 1e-9 * 7f64.powf(kappa));
        }
        assert!(es.window_closed_form(WindowKind::Double, 3.0).unwrap() > es.window_closed_form(WindowKind::Single, 3.0).unwrap());
    }

    #[test]
    fn quadrature_fallback_matches_exact_window() {
        let es = EulerSpec::example_shape(2.5, 1.2, 1.0, 2.0);
        let exact = es.window_closed_form(WindowKind::Single, 1.0).unwrap();
        let (c1, e1) = es.r1inv();
        let (c2, e2) = es.r2inv();
        let quad = window_by_nest(
            &|u| es.q0 * u.powf(es.p),
            &|u| c2 * u.powf(e2),
            &|u| c1 * u.powf(e1),
            es.alpha.recip(),
            es.beta.recip(),
            1.0,
            es.delta,
            es.delta,
        );
        assert!((quad - exact).abs() < 1e-10 * exact, "{quad} vs {exact}");
    }

    #[test]
    fn kernel_growth_for_non_integer_nesting() {
        let es = example_one();
        assert!(matches!(es.kernel_closed_form(KernelKind::J, 1.0, None), Err(EulerError::NonIntegerNesting)));
        let q = es.kernel_closed_form(KernelKind::Q, 1.0, None).unwrap();
        assert!((q.eval(2.0) - 127.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn riccati_forms_reduce() {
        let es = EulerSpec::example_shape(2.0, 1.0, 3.0, 2.0);
        for rho in Rho::standard() {
            let r = euler_reduce(&es, &Condition::Riccati(rho.clone())).unwrap();
            let printed = match rho {
                Rho::Pi1PowAlpha => Condition::RiccatiPi1PowAlpha,
                Rho::Pi1 => Condition::RiccatiPi1,
                _ => Condition::RiccatiUnit,
            };
            assert_eq!(r.satisfied(), euler_reduce(&es, &printed).unwrap().satisfied());
        }
        let lm = LambdaMu { lambda: 0.0, mu: 0.0 };
        assert_eq!(
            euler_reduce(&es, &Condition::RefinedLimsup(lm)).unwrap().satisfied(),
            euler_reduce(&es, &Condition::AdvancedLimsup).unwrap().satisfied()
        );
    }
}
