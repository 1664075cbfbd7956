//! Criterion identifiers.
//!
//! Each id has a short external code used on the command line and in
//! reports (`T2_1`, `E2_33`, `T2_10(pi1)`, ...). Parameters follow in
//! parentheses: a weight function name, then `lambda` and `mu` where the
//! condition takes them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdError {
    #[error("unknown criterion code {0:?}")]
    Unknown(String),
    #[error("bad parameters in {code:?}: {reason}")]
    BadParameters { code: String, reason: String },
}

/// The auxiliary weight function of the Riccati-type conditions.
#[derive(Debug, Clone, PartialEq)]
pub enum Rho {
    /// `pi1^alpha`
    Pi1PowAlpha,
    /// `pi1`
    Pi1,
    /// the constant 1
    One,
    /// A user expression together with its derivative.
    Custom { body: String, derivative: String },
}

impl Rho {
    pub fn code(&self) -> String {
        match self {
            Rho::Pi1PowAlpha => "pi1_pow_alpha".into(),
            Rho::Pi1 => "pi1".into(),
            Rho::One => "one".into(),
            Rho::Custom { body, derivative } => format!("custom:{body};{derivative}"),
        }
    }

    pub fn parse(s: &str) -> Option<Rho> {
        match s.trim() {
            "pi1_pow_alpha" => Some(Rho::Pi1PowAlpha),
            "pi1" => Some(Rho::Pi1),
            "one" | "1" => Some(Rho::One),
            other => {
                let rest = other.strip_prefix("custom:")?;
                let (body, derivative) = rest.split_once(';')?;
                Some(Rho::Custom { body: body.trim().into(), derivative: derivative.trim().into() })
            }
        }
    }

    /// Closed-form choices, in the order the default search tries them.
    pub fn standard() -> Vec<Rho> {
        vec![Rho::Pi1PowAlpha, Rho::Pi1, Rho::One]
    }
}

/// Constants of the refined (lambda/mu) conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaMu {
    pub lambda: f64,
    pub mu: f64,
}

/// A single limit or divergence condition.
#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    /// Triple nested integral from `t0` diverges. Code `E2_1`.
    NestedDivergence,
    /// `∫ q = ∞`. Code `E2_3`.
    CoefficientDivergence,
    /// Nested divergence with innermost weight `pi^gamma(sigma)`. Code `E2_19`.
    WeightedNestedDivergence,
    /// `limsup pi1^(gamma/beta)(sigma(t)) ∫_t1^t ... > 1` for every start `t1`. Code `E2_23`.
    AdvancedLimsup,
    /// The same limsup with start `t0`. Code `E2_27`.
    AdvancedLimsupFromStart,
    /// `liminf ∫_t^sigma(t)` of the nested integrand from `t0`, `> 1/e`. Code `E2_28`.
    WindowFromStart,
    /// Window over `[t, sigma(sigma(t))]` with inner limits `sigma(t)`, `> 1/e`. Code `E2_29`.
    DoubleWindow,
    /// Window over `[t, sigma(t)]` with inner limits `sigma(t)`, `> 1/e`. Code `E2_33`.
    Window,
    /// Riccati-type limsup with weight `rho`. Code `E2_35`.
    Riccati(Rho),
    /// Printed special case for `rho = pi1^alpha`. Code `E2_42`.
    RiccatiPi1PowAlpha,
    /// Printed special case for `rho = pi1`. Code `E2_43`.
    RiccatiPi1,
    /// Printed special case for `rho = 1`. Code `E2_44`.
    RiccatiUnit,
    /// Refined limsup with constants `lambda`, `mu`. Code `E2_53`.
    RefinedLimsup(LambdaMu),
    /// Riccati-type limsup with the ratio exponent lowered by `lambda`. Code `E2_58`.
    RefinedRiccati(Rho, f64),
    /// Printed refined form for `rho = pi1^alpha`. Code `E2_59`.
    RefinedRiccatiPi1PowAlpha(f64),
}

/// A theorem or corollary: a conclusion granted by a set of conditions.
#[derive(Debug, Clone, PartialEq)]
pub enum Theorem {
    /// `T2_1`
    NestedDivergence,
    /// `T2_2`
    WeightedNestedDivergence,
    /// `T2_3`
    AdvancedLimsup,
    /// `T2_4`
    DivergenceAndLimsup,
    /// `T2_5`
    Windows,
    /// `T2_7`
    WeightedDivergenceAndWindow,
    /// `T2_8`
    LimsupAndWindow,
    /// `T2_9`
    DivergenceLimsupAndWindow,
    /// `T2_10`
    Riccati(Rho),
    /// `C2_2`
    RiccatiPi1PowAlpha,
    /// `C2_3`
    RiccatiPi1,
    /// `C2_4`
    RiccatiUnit,
    /// `T2_11`; without constants a small candidate set is searched.
    Refined(Option<LambdaMu>),
    /// `T2_12`
    RefinedRiccati(Rho, Option<f64>),
    /// `C2_5`
    RefinedRiccatiPi1PowAlpha(Option<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConclusionKind {
    PropertyA,
    Oscillatory,
    None,
}

impl Theorem {
    pub fn conclusion(&self) -> ConclusionKind {
        match self {
            Theorem::NestedDivergence
            | Theorem::WeightedNestedDivergence
            | Theorem::AdvancedLimsup
            | Theorem::DivergenceAndLimsup => ConclusionKind::PropertyA,
            _ => ConclusionKind::Oscillatory,
        }
    }

    /// Whether the theorem assumes `gamma = alpha * beta`.
    pub fn needs_balanced_exponents(&self) -> bool {
        !matches!(self, Theorem::NestedDivergence | Theorem::WeightedNestedDivergence)
    }

    /// Conditions that must all hold. Refined theorems take their resolved
    /// constants; `None` leaves them at zero.
    pub fn requirements(&self) -> Vec<Condition> {
        use Condition as C;
        match self {
            Theorem::NestedDivergence => vec![C::NestedDivergence],
            Theorem::WeightedNestedDivergence => vec![C::WeightedNestedDivergence],
            Theorem::AdvancedLimsup => vec![C::AdvancedLimsup],
            Theorem::DivergenceAndLimsup => vec![C::NestedDivergence, C::AdvancedLimsupFromStart],
            Theorem::Windows => vec![C::WindowFromStart, C::DoubleWindow],
            Theorem::WeightedDivergenceAndWindow => vec![C::WeightedNestedDivergence, C::DoubleWindow],
            Theorem::LimsupAndWindow => vec![C::AdvancedLimsup, C::Window],
            Theorem::DivergenceLimsupAndWindow => {
                vec![C::NestedDivergence, C::AdvancedLimsupFromStart, C::Window]
            }
            Theorem::Riccati(rho) => vec![C::CoefficientDivergence, C::Window, C::Riccati(rho.clone())],
            Theorem::RiccatiPi1PowAlpha => vec![C::CoefficientDivergence, C::Window, C::RiccatiPi1PowAlpha],
            Theorem::RiccatiPi1 => vec![C::CoefficientDivergence, C::Window, C::RiccatiPi1],
            Theorem::RiccatiUnit => vec![C::CoefficientDivergence, C::Window, C::RiccatiUnit],
            Theorem::Refined(lm) => {
                vec![C::Window, C::RefinedLimsup(lm.unwrap_or(LambdaMu { lambda: 0.0, mu: 0.0 }))]
            }
            Theorem::RefinedRiccati(rho, l) => vec![
                C::CoefficientDivergence,
                C::Window,
                C::RefinedRiccati(rho.clone(), l.unwrap_or(0.0)),
            ],
            Theorem::RefinedRiccatiPi1PowAlpha(l) => {
                vec![C::CoefficientDivergence, C::Window, C::RefinedRiccatiPi1PowAlpha(l.unwrap_or(0.0))]
            }
        }
    }

    /// The same theorem with its constants fixed.
    pub fn with_constants(&self, lm: LambdaMu) -> Theorem {
        match self {
            Theorem::Refined(_) => Theorem::Refined(Some(lm)),
            Theorem::RefinedRiccati(rho, _) => Theorem::RefinedRiccati(rho.clone(), Some(lm.lambda)),
            Theorem::RefinedRiccatiPi1PowAlpha(_) => Theorem::RefinedRiccatiPi1PowAlpha(Some(lm.lambda)),
            other => other.clone(),
        }
    }

    /// Theorems in catalog order, with the standard weight choices.
    pub fn catalog(rhos: &[Rho], lambda_mu: Option<LambdaMu>) -> Vec<Theorem> {
        let mut out = vec![
            Theorem::NestedDivergence,
            Theorem::WeightedNestedDivergence,
            Theorem::AdvancedLimsup,
            Theorem::DivergenceAndLimsup,
            Theorem::Windows,
            Theorem::WeightedDivergenceAndWindow,
            Theorem::LimsupAndWindow,
            Theorem::DivergenceLimsupAndWindow,
        ];
        out.extend(rhos.iter().cloned().map(Theorem::Riccati));
        out.extend([Theorem::RiccatiPi1PowAlpha, Theorem::RiccatiPi1, Theorem::RiccatiUnit]);
        out.push(Theorem::Refined(lambda_mu));
        out.extend(rhos.iter().cloned().map(|r| Theorem::RefinedRiccati(r, lambda_mu.map(|x| x.lambda))));
        out.push(Theorem::RefinedRiccatiPi1PowAlpha(lambda_mu.map(|x| x.lambda)));
        out
    }
}

impl Condition {
    /// Threshold the limit is compared with; `None` for divergence tests.
    pub fn threshold(&self, alpha: f64) -> Option<f64> {
        let e_inv = (-1f64).exp();
        match self {
            Condition::NestedDivergence
            | Condition::CoefficientDivergence
            | Condition::WeightedNestedDivergence => None,
            Condition::WindowFromStart | Condition::DoubleWindow | Condition::Window => Some(e_inv),
            Condition::RefinedLimsup(lm) => Some((1.0 - lm.lambda / alpha).powf(alpha)),
            _ => Some(1.0),
        }
    }
}

/// Any criterion the evaluator understands.
#[derive(Debug, Clone, PartialEq)]
pub enum CriterionId {
    Theorem(Theorem),
    Condition(Condition),
}

impl CriterionId {
    pub fn code(&self) -> String {
        match self {
            CriterionId::Theorem(t) => theorem_code(t),
            CriterionId::Condition(c) => condition_code(c),
        }
    }

    pub fn conclusion(&self) -> ConclusionKind {
        match self {
            CriterionId::Theorem(t) => t.conclusion(),
            CriterionId::Condition(_) => ConclusionKind::None,
        }
    }
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

fn theorem_code(t: &Theorem) -> String {
    match t {
        Theorem::NestedDivergence => "T2_1".into(),
        Theorem::WeightedNestedDivergence => "T2_2".into(),
        Theorem::AdvancedLimsup => "T2_3".into(),
        Theorem::DivergenceAndLimsup => "T2_4".into(),
        Theorem::Windows => "T2_5".into(),
        Theorem::WeightedDivergenceAndWindow => "T2_7".into(),
        Theorem::LimsupAndWindow => "T2_8".into(),
        Theorem::DivergenceLimsupAndWindow => "T2_9".into(),
        Theorem::Riccati(rho) => format!("T2_10({})", rho.code()),
        Theorem::RiccatiPi1PowAlpha => "C2_2".into(),
        Theorem::RiccatiPi1 => "C2_3".into(),
        Theorem::RiccatiUnit => "C2_4".into(),
        Theorem::Refined(None) => "T2_11".into(),
        Theorem::Refined(Some(lm)) => format!("T2_11({},{})", fmt_num(lm.lambda), fmt_num(lm.mu)),
        Theorem::RefinedRiccati(rho, None) => format!("T2_12({})", rho.code()),
        Theorem::RefinedRiccati(rho, Some(l)) => format!("T2_12({},{})", rho.code(), fmt_num(*l)),
        Theorem::RefinedRiccatiPi1PowAlpha(None) => "C2_5".into(),
        Theorem::RefinedRiccatiPi1PowAlpha(Some(l)) => format!("C2_5({})", fmt_num(*l)),
    }
}

fn condition_code(c: &Condition) -> String {
    match c {
        Condition::NestedDivergence => "E2_1".into(),
        Condition::CoefficientDivergence => "E2_3".into(),
        Condition::WeightedNestedDivergence => "E2_19".into(),
        Condition::AdvancedLimsup => "E2_23".into(),
        Condition::AdvancedLimsupFromStart => "E2_27".into(),
        Condition::WindowFromStart => "E2_28".into(),
        Condition::DoubleWindow => "E2_29".into(),
        Condition::Window => "E2_33".into(),
        Condition::Riccati(rho) => format!("E2_35({})", rho.code()),
        Condition::RiccatiPi1PowAlpha => "E2_42".into(),
        Condition::RiccatiPi1 => "E2_43".into(),
        Condition::RiccatiUnit => "E2_44".into(),
        Condition::RefinedLimsup(lm) => format!("E2_53({},{})", fmt_num(lm.lambda), fmt_num(lm.mu)),
        Condition::RefinedRiccati(rho, l) => format!("E2_58({},{})", rho.code(), fmt_num(*l)),
        Condition::RefinedRiccatiPi1PowAlpha(l) => format!("E2_59({})", fmt_num(*l)),
    }
}

impl fmt::Display for CriterionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code())
    }
}

impl FromStr for CriterionId {
    type Err = IdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (head, params) = match s.split_once('(') {
            Some((h, rest)) => {
                let inner = rest.strip_suffix(')').ok_or_else(|| IdError::BadParameters {
                    code: s.into(),
                    reason: "missing closing parenthesis".into(),
                })?;
                (h.trim(), Some(inner))
            }
            None => (s, None),
        };
        let bad = |reason: &str| IdError::BadParameters { code: s.into(), reason: reason.into() };
        let args: Vec<&str> = params.map(|p| p.split(',').map(str::trim).collect()).unwrap_or_default();
        let num = |x: &str| x.parse::<f64>().map_err(|_| bad("expected a number"));
        let rho = |x: &str| Rho::parse(x).ok_or_else(|| bad("unknown weight function"));
        let none = |id: CriterionId| if args.is_empty() { Ok(id) } else { Err(bad("takes no parameters")) };
        let lm = || -> Result<Option<LambdaMu>, IdError> {
            match args.as_slice() {
                [] => Ok(None),
                [l, m] => Ok(Some(LambdaMu { lambda: num(l)?, mu: num(m)? })),
                _ => Err(bad("expected lambda,mu")),
            }
        };
        let rho_lambda = || -> Result<(Rho, Option<f64>), IdError> {
            match args.as_slice() {
                [] => Ok((Rho::Pi1PowAlpha, None)),
                [r] => Ok((rho(r)?, None)),
                [r, l] => Ok((rho(r)?, Some(num(l)?))),
                _ => Err(bad("expected weight[,lambda]")),
            }
        };
        let single_lambda = || -> Result<Option<f64>, IdError> {
            match args.as_slice() {
                [] => Ok(None),
                [l] => Ok(Some(num(l)?)),
                _ => Err(bad("expected lambda")),
            }
        };
        let single_rho = || -> Result<Rho, IdError> {
            match args.as_slice() {
                [] => Ok(Rho::Pi1PowAlpha),
                [r] => rho(r),
                _ => Err(bad("expected one weight function")),
            }
        };
        use CriterionId::{Condition as C, Theorem as T};
        match head {
            "T2_1" => none(T(Theorem::NestedDivergence)),
            "T2_2" => none(T(Theorem::WeightedNestedDivergence)),
            "T2_3" => none(T(Theorem::AdvancedLimsup)),
            "T2_4" => none(T(Theorem::DivergenceAndLimsup)),
            "T2_5" => none(T(Theorem::Windows)),
            "T2_7" => none(T(Theorem::WeightedDivergenceAndWindow)),
            "T2_8" => none(T(Theorem::LimsupAndWindow)),
            "T2_9" => none(T(Theorem::DivergenceLimsupAndWindow)),
            "T2_10" => Ok(T(Theorem::Riccati(single_rho()?))),
            "C2_2" => none(T(Theorem::RiccatiPi1PowAlpha)),
            "C2_3" => none(T(Theorem::RiccatiPi1)),
            "C2_4" => none(T(Theorem::RiccatiUnit)),
            "T2_11" => Ok(T(Theorem::Refined(lm()?))),
            "T2_12" => {
                let (r, l) = rho_lambda()?;
                Ok(T(Theorem::RefinedRiccati(r, l)))
            }
            "C2_5" => Ok(T(Theorem::RefinedRiccatiPi1PowAlpha(single_lambda()?))),
            "E2_1" => none(C(Condition::NestedDivergence)),
            "E2_3" => none(C(Condition::CoefficientDivergence)),
            "E2_19" => none(C(Condition::WeightedNestedDivergence)),
            "E2_23" => none(C(Condition::AdvancedLimsup)),
            "E2_27" => none(C(Condition::AdvancedLimsupFromStart)),
            "E2_28" => none(C(Condition::WindowFromStart)),
            "E2_29" => none(C(Condition::DoubleWindow)),
            "E2_33" => none(C(Condition::Window)),
            "E2_35" => Ok(C(Condition::Riccati(single_rho()?))),
            "E2_42" => none(C(Condition::RiccatiPi1PowAlpha)),
            "E2_43" => none(C(Condition::RiccatiPi1)),
            "E2_44" => none(C(Condition::RiccatiUnit)),
            "E2_53" => Ok(C(Condition::RefinedLimsup(lm()?.unwrap_or(LambdaMu { lambda: 0.0, mu: 0.0 })))),
            "E2_58" => {
                let (r, l) = rho_lambda()?;
                Ok(C(Condition::RefinedRiccati(r, l.unwrap_or(0.0))))
            }
            "E2_59" => Ok(C(Condition::RefinedRiccatiPi1PowAlpha(single_lambda()?.unwrap_or(0.0)))),
            _ => Err(IdError::Unknown(s.into())),
        }
    }
}

impl Serialize for CriterionId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.code())
    }
}

impl<'de> Deserialize<'de> for CriterionId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_round_trip() {
        let mut ids: Vec<CriterionId> =
            Theorem::catalog(&Rho::standard(), None).into_iter().map(CriterionId::Theorem).collect();
        ids.push(CriterionId::Theorem(Theorem::Refined(Some(LambdaMu { lambda: 0.25, mu: 0.5 }))));
        ids.push(CriterionId::Theorem(Theorem::Riccati(Rho::Custom {
            body: "exp(-t)".into(),
            derivative: "-exp(-t)".into(),
        })));
        ids.push(CriterionId::Condition(Condition::RefinedRiccati(Rho::Pi1, 0.3)));
        for id in ids {
            let back: CriterionId = id.code().parse().unwrap();
            assert_eq!(back, id, "{}", id.code());
        }
    }

    #[test]
    fn unknown_codes_are_rejected() {
        assert!(matches!("T2_6".parse::<CriterionId>(), Err(IdError::Unknown(_))));
        assert!(matches!("T2_1(3)".parse::<CriterionId>(), Err(IdError::BadParameters { .. })));
        assert!(matches!("T2_10(sqrt)".parse::<CriterionId>(), Err(IdError::BadParameters { .. })));
    }

    #[test]
    fn conclusions_follow_the_catalog() {
        for t in Theorem::catalog(&Rho::standard(), None) {
            let expected = matches!(
                t,
                Theorem::NestedDivergence
                    | Theorem::WeightedNestedDivergence
                    | Theorem::AdvancedLimsup
                    | Theorem::DivergenceAndLimsup
            );
            assert_eq!(t.conclusion() == ConclusionKind::PropertyA, expected);
        }
    }
}
