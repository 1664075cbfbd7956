//! Every limit condition has the shape
//!
//! ```text
//! pre(t) * ∫_T^t ( pos(u) * Q_T(u)^(1/beta) - neg(u) ) du,   Q_T(u) = ∫_T^u q
//! ```
//!
//! with each factor a monomial in a few named functions of one variable.
//! Both evaluation paths read these definitions, so each condition is
//! written down exactly once.

use crate::model::EquationSpec;

use super::ids::{Condition, Rho};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Atom {
    Pi1,
    /// `pi1(sigma(t))`
    Pi1Sigma,
    R1,
    R2,
    /// `pi(sigma(t))`
    PiSigma,
    /// A user weight function.
    Rho,
    /// `|rho'(t)|`
    RhoDerivAbs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coef: f64,
    pub factors: Vec<(Atom, f64)>,
}

impl Monomial {
    pub fn constant(coef: f64) -> Monomial {
        Monomial { coef, factors: Vec::new() }
    }

    pub fn one() -> Monomial {
        Monomial::constant(1.0)
    }

    /// Multiplies in `atom^e`; zero exponents are dropped.
    pub fn with(mut self, atom: Atom, e: f64) -> Monomial {
        if e != 0.0 {
            match self.factors.iter_mut().find(|(a, _)| *a == atom) {
                Some((_, x)) => *x += e,
                None => self.factors.push((atom, e)),
            }
        }
        self
    }

    pub fn eval(&self, t: f64, value: &dyn Fn(Atom, f64) -> f64) -> f64 {
        self.factors.iter().fold(self.coef, |acc, &(a, e)| acc * value(a, t).powf(e))
    }
}

/// How the start point `T` is quantified.
#[derive(Debug, Clone, PartialEq)]
pub enum Starts {
    /// The condition must hold for each listed start.
    Every(Vec<f64>),
    /// One listed start suffices.
    Any(Vec<f64>),
}

impl Starts {
    pub fn points(&self) -> &[f64] {
        match self {
            Starts::Every(v) | Starts::Any(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimsupForm {
    pub pre: Monomial,
    pub pos: Monomial,
    pub neg: Option<Monomial>,
    pub threshold: f64,
    pub starts: Starts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    /// Outer `[t, sigma(t)]`, inner integrals from `t0`.
    FromStart,
    /// Outer `[t, sigma(sigma(t))]`, inner integrals up to `sigma(t)`.
    Double,
    /// Outer `[t, sigma(t)]`, inner integrals up to `sigma(t)`.
    Single,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// `levels` nested integrals from `t0` (1 or 3), innermost `weight * q`.
    Divergence { levels: usize, weight: Monomial },
    Limsup(LimsupForm),
    /// `liminf > 1/e`
    Window(WindowKind),
}

/// Starts standing in for "every `t1 >= t0`" in the limsup conditions.
pub fn any_t1_starts(t0: f64) -> Vec<f64> {
    let base = t0.max(1.0);
    vec![base, 10.0 * base, 100.0 * base]
}

/// Starts standing in for "every `T >= t0`" in the weighted conditions.
pub fn any_big_t_starts(t0: f64) -> Vec<f64> {
    vec![t0, 10.0 * t0, 100.0 * t0]
}

pub fn shape(spec: &EquationSpec, cond: &Condition) -> Shape {
    let alpha = spec.alpha_f();
    let b = 1.0 / spec.beta_f();
    let r2inv = Monomial::one().with(Atom::R2, -b);
    let limsup = |pre, pos, neg, threshold, starts| Shape::Limsup(LimsupForm { pre, pos, neg, threshold, starts });
    let every_t1 = Starts::Every(any_t1_starts(spec.t0));
    let every_big_t = Starts::Every(any_big_t_starts(spec.t0));
    let pi1_pow_alpha_penalty =
        || Monomial::constant((alpha / (alpha + 1.0)).powf(alpha + 1.0)).with(Atom::R1, -1.0 / alpha).with(Atom::Pi1, -1.0);
    match cond {
        Condition::CoefficientDivergence => Shape::Divergence { levels: 1, weight: Monomial::one() },
        Condition::NestedDivergence => Shape::Divergence { levels: 3, weight: Monomial::one() },
        Condition::WeightedNestedDivergence => {
            Shape::Divergence { levels: 3, weight: Monomial::one().with(Atom::PiSigma, spec.gamma_f()) }
        }
        Condition::AdvancedLimsup => limsup(
            Monomial::one().with(Atom::Pi1Sigma, spec.gamma_f() * b),
            r2inv,
            None,
            1.0,
            every_t1,
        ),
        Condition::AdvancedLimsupFromStart => limsup(
            Monomial::one().with(Atom::Pi1Sigma, spec.gamma_f() * b),
            r2inv,
            None,
            1.0,
            Starts::Every(vec![spec.t0]),
        ),
        Condition::WindowFromStart => Shape::Window(WindowKind::FromStart),
        Condition::DoubleWindow => Shape::Window(WindowKind::Double),
        Condition::Window => Shape::Window(WindowKind::Single),
        Condition::Riccati(rho) => riccati(spec, rho, 0.0, every_big_t),
        Condition::RefinedRiccati(rho, lambda) => riccati(spec, rho, *lambda, Starts::Any(any_big_t_starts(spec.t0))),
        // the next three follow the displayed special cases term by term
        Condition::RiccatiPi1PowAlpha => limsup(
            Monomial::one(),
            r2inv.with(Atom::Pi1Sigma, alpha),
            Some(pi1_pow_alpha_penalty()),
            1.0,
            every_big_t,
        ),
        Condition::RiccatiPi1 => limsup(
            Monomial::one().with(Atom::Pi1, alpha - 1.0),
            r2inv.with(Atom::Pi1Sigma, alpha).with(Atom::Pi1, 1.0 - alpha),
            Some(
                Monomial::constant((alpha + 1.0).powf(-(alpha + 1.0)))
                    .with(Atom::R1, -1.0 / alpha)
                    .with(Atom::Pi1, -alpha),
            ),
            1.0,
            every_big_t,
        ),
        Condition::RiccatiUnit => limsup(
            Monomial::one().with(Atom::Pi1, alpha),
            r2inv.with(Atom::Pi1Sigma, alpha).with(Atom::Pi1, -alpha),
            None,
            1.0,
            every_big_t,
        ),
        Condition::RefinedRiccatiPi1PowAlpha(lambda) => limsup(
            Monomial::one(),
            r2inv.with(Atom::Pi1Sigma, alpha - lambda).with(Atom::Pi1, *lambda),
            Some(pi1_pow_alpha_penalty()),
            1.0,
            every_big_t,
        ),
        Condition::RefinedLimsup(lm) => limsup(
            Monomial::one().with(Atom::Pi1, lm.lambda).with(Atom::Pi1Sigma, alpha - lm.lambda - lm.mu),
            r2inv.with(Atom::Pi1Sigma, lm.mu),
            None,
            (1.0 - lm.lambda / alpha).powf(alpha),
            every_t1,
        ),
    }
}

/// The general weighted form with the ratio exponent `alpha - lambda`.
fn riccati(spec: &EquationSpec, rho: &Rho, lambda: f64, starts: Starts) -> Shape {
    let alpha = spec.alpha_f();
    let b = 1.0 / spec.beta_f();
    let ratio = alpha - lambda;
    let norm = (alpha + 1.0).powf(-(alpha + 1.0));
    // rho = pi1^k has |rho'| = k pi1^(k-1) r1^(-1/alpha)
    let power = |k: f64| {
        let pre = Monomial::one().with(Atom::Pi1, alpha - k);
        let pos = Monomial::one().with(Atom::R2, -b).with(Atom::Pi1Sigma, ratio).with(Atom::Pi1, k - ratio);
        let neg = (k != 0.0).then(|| {
            Monomial::constant(norm * k.powf(alpha + 1.0))
                .with(Atom::R1, 1.0 - (alpha + 1.0) / alpha)
                .with(Atom::Pi1, (k - 1.0) * (alpha + 1.0) - k * alpha)
        });
        (pre, pos, neg)
    };
    let (pre, pos, neg) = match rho {
        Rho::Pi1PowAlpha => power(alpha),
        Rho::Pi1 => power(1.0),
        Rho::One => power(0.0),
        Rho::Custom { .. } => (
            Monomial::one().with(Atom::Pi1, alpha).with(Atom::Rho, -1.0),
            Monomial::one()
                .with(Atom::Rho, 1.0)
                .with(Atom::R2, -b)
                .with(Atom::Pi1Sigma, ratio)
                .with(Atom::Pi1, -ratio),
            Some(
                Monomial::constant(norm)
                    .with(Atom::R1, 1.0)
                    .with(Atom::RhoDerivAbs, alpha + 1.0)
                    .with(Atom::Rho, -alpha),
            ),
        ),
    };
    Shape::Limsup(LimsupForm { pre, pos, neg, threshold: 1.0, starts })
}
