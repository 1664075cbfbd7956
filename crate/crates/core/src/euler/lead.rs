//! Leading-order asymptotics `c * t^e * (ln t)^k` as `t -> ∞`.
//!
//! Enough to decide every limit the criteria take on power-law data: the
//! leading coefficient of a divergent integral is exact, while a convergent
//! one leaves a constant whose value depends on the whole integrand and is
//! tracked only by sign.

use std::fmt;

use super::EulerError;

/// Exponents (and log powers) closer than this are equal.
pub const LEAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coef {
    Known(f64),
    /// A nonzero constant known only by its sign.
    Unknown { positive: bool },
}

impl Coef {
    fn sign(&self) -> f64 {
        match *self {
            Coef::Known(c) => c.signum(),
            Coef::Unknown { positive } => {
                if positive {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lead {
    pub coef: Coef,
    pub exp: f64,
    pub log: f64,
}

/// Where a leading term goes as `t -> ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Limit {
    PlusInfinity,
    MinusInfinity,
    Zero,
    Constant(Coef),
}

fn eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= LEAD_TOL
}

impl Lead {
    pub fn zero() -> Lead {
        Lead { coef: Coef::Known(0.0), exp: 0.0, log: 0.0 }
    }

    pub fn power(c: f64, e: f64) -> Lead {
        Lead { coef: Coef::Known(c), exp: e, log: 0.0 }
    }

    pub fn is_zero(&self) -> bool {
        self.coef == Coef::Known(0.0)
    }

    pub fn mul(&self, o: &Lead) -> Lead {
        if self.is_zero() || o.is_zero() {
            return Lead::zero();
        }
        let coef = match (self.coef, o.coef) {
            (Coef::Known(a), Coef::Known(b)) => Coef::Known(a * b),
            (a, b) => Coef::Unknown { positive: a.sign() * b.sign() > 0.0 },
        };
        Lead { coef, exp: self.exp + o.exp, log: self.log + o.log }
    }

    /// `self^r` for a positive leading coefficient.
    pub fn powf(&self, r: f64) -> Result<Lead, EulerError> {
        if self.is_zero() {
            return Ok(Lead::zero());
        }
        let coef = match self.coef {
            Coef::Known(c) if c > 0.0 => Coef::Known(c.powf(r)),
            Coef::Unknown { positive: true } => Coef::Unknown { positive: true },
            _ => return Err(EulerError::BoundaryExponent("power of a negative leading term".into())),
        };
        Ok(Lead { coef, exp: self.exp * r, log: self.log * r })
    }

    /// Leading term of `∫_a^t self`. `nonneg` states that the integrand is
    /// nonnegative, which fixes the sign of a convergent integral.
    pub fn integrate(&self, nonneg: bool) -> Result<Lead, EulerError> {
        if self.is_zero() {
            return Ok(Lead::zero());
        }
        let e1 = self.exp + 1.0;
        let converges = e1 < -LEAD_TOL || (eq(e1, 0.0) && self.log < -1.0 - LEAD_TOL);
        if converges {
            if !nonneg {
                return Err(EulerError::BoundaryExponent(
                    "convergent integral of a sign-changing integrand has no known sign".into(),
                ));
            }
            return Ok(Lead { coef: Coef::Unknown { positive: true }, exp: 0.0, log: 0.0 });
        }
        if eq(e1, 0.0) {
            if eq(self.log, -1.0) {
                return Err(EulerError::BoundaryExponent("iterated logarithm".into()));
            }
            let k1 = self.log + 1.0;
            return Ok(Lead { coef: self.coef.scaled(1.0 / k1), exp: 0.0, log: k1 });
        }
        Ok(Lead { coef: self.coef.scaled(1.0 / e1), exp: e1, log: self.log })
    }

    /// Leading term of `∫_t^(delta t) self` for `delta >= 1`.
    pub fn window(&self, delta: f64) -> Lead {
        if self.is_zero() || delta == 1.0 {
            return Lead::zero();
        }
        let e1 = self.exp + 1.0;
        if eq(e1, 0.0) {
            // ln^k(delta t) integrated against dt/t: ln(delta) ln^k t to leading order
            return Lead { coef: self.coef.scaled(delta.ln()), exp: 0.0, log: self.log };
        }
        Lead { coef: self.coef.scaled((delta.powf(e1) - 1.0) / e1), exp: e1, log: self.log }
    }

    /// Leading term of `self + o`.
    pub fn add(&self, o: &Lead) -> Result<Lead, EulerError> {
        if self.is_zero() {
            return Ok(*o);
        }
        if o.is_zero() {
            return Ok(*self);
        }
        if !eq(self.exp, o.exp) {
            return Ok(if self.exp > o.exp { *self } else { *o });
        }
        if !eq(self.log, o.log) {
            return Ok(if self.log > o.log { *self } else { *o });
        }
        match (self.coef, o.coef) {
            (Coef::Known(a), Coef::Known(b)) => {
                let s = a + b;
                if s.abs() <= 1e-12 * a.abs().max(b.abs()) {
                    Err(EulerError::BoundaryExponent("leading terms cancel".into()))
                } else {
                    Ok(Lead { coef: Coef::Known(s), ..*self })
                }
            }
            (a, b) if a.sign() == b.sign() => Ok(Lead { coef: Coef::Unknown { positive: a.sign() > 0.0 }, ..*self }),
            _ => Err(EulerError::BoundaryExponent("leading terms of unknown size and opposite sign".into())),
        }
    }

    pub fn limit(&self) -> Limit {
        if self.is_zero() {
            return Limit::Zero;
        }
        let grows = self.exp > LEAD_TOL || (eq(self.exp, 0.0) && self.log > LEAD_TOL);
        let decays = self.exp < -LEAD_TOL || (eq(self.exp, 0.0) && self.log < -LEAD_TOL);
        if grows {
            if self.coef.sign() > 0.0 {
                Limit::PlusInfinity
            } else {
                Limit::MinusInfinity
            }
        } else if decays {
            Limit::Zero
        } else {
            Limit::Constant(self.coef)
        }
    }
}

impl Coef {
    fn scaled(self, c: f64) -> Coef {
        match self {
            Coef::Known(x) => Coef::Known(x * c),
            Coef::Unknown { positive } => Coef::Unknown { positive: positive == (c > 0.0) },
        }
    }
}

impl fmt::Display for Lead {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.coef {
            Coef::Known(c) => write!(f, "{c:.9e}")?,
            Coef::Unknown { positive: true } => write!(f, "C(>0)")?,
            Coef::Unknown { positive: false } => write!(f, "C(<0)")?,
        }
        write!(f, " t^{:.6}", self.exp)?;
        if !eq(self.log, 0.0) {
            write!(f, " ln^{:.6} t", self.log)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn divergent_integral_keeps_exact_coefficient() {
        let l = Lead::power(3.0, 2.0).integrate(true).unwrap();
        assert_eq!(l, Lead::power(1.0, 3.0));
        assert_eq!(l.limit(), Limit::PlusInfinity);
    }

    #[test]
    fn reciprocal_integrates_to_log() {
        let l = Lead::power(2.0, -1.0).integrate(true).unwrap();
        assert_eq!(l.exp, 0.0);
        assert_eq!(l.log, 1.0);
        assert_eq!(l.coef, Coef::Known(2.0));
        assert_eq!(l.limit(), Limit::PlusInfinity);
    }

    #[test]
    fn convergent_integral_is_unknown_constant() {
        let l = Lead::power(1.0, -2.0).integrate(true).unwrap();
        assert_eq!(l.limit(), Limit::Constant(Coef::Unknown { positive: true }));
        assert!(Lead::power(1.0, -2.0).integrate(false).is_err());
    }

    #[test]
    fn window_of_reciprocal_is_log_delta() {
        let w = Lead::power(1.5, -1.0).window(2.0);
        assert_eq!(w.limit(), Limit::Constant(Coef::Known(1.5 * 2f64.ln())));
        assert!(Lead::power(1.0, 3.0).window(1.0).is_zero());
    }

    #[test]
    fn cancellation_is_a_boundary_case() {
        assert!(Lead::power(1.0, -1.0).add(&Lead::power(-1.0, -1.0)).is_err());
        let d = Lead::power(1.0, 0.5).add(&Lead::power(-5.0, -1.0)).unwrap();
        assert_eq!(d.limit(), Limit::PlusInfinity);
    }
}
