//! Exact sums of terms `c * t^e * (ln t)^k`.
//!
//! Closed under products, integer powers and integration, which is all the
//! nested kernels need when the outer powers `1/alpha`, `1/beta` are
//! integers. Coefficients live in a [`Field`]: `f64`, or [`Wide`] where the
//! expanded sum cancels heavily (narrow windows).

use std::cell::RefCell;
use std::fmt;

use astro_float::{BigFloat, Consts, RoundingMode};

/// Exponents closer than this are the same exponent.
pub const EXP_TOL: f64 = 1e-12;

/// Coefficient arithmetic. Exponents stay `f64` in every field.
pub trait Field: Clone + fmt::Debug + PartialEq {
    fn of(x: f64) -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    /// `self^e` for `self > 0`.
    fn powf(&self, e: f64) -> Self;
    fn ln(&self) -> Self;
    fn to_f64(&self) -> f64;
}

impl Field for f64 {
    fn of(x: f64) -> Self {
        x
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn powf(&self, e: f64) -> Self {
        f64::powf(*self, e)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

const WIDE_BITS: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constant cache"));
}

/// 256-bit binary floating point.
#[derive(Clone, Debug, PartialEq)]
pub struct Wide(BigFloat);

impl Field for Wide {
    fn of(x: f64) -> Self {
        Wide(BigFloat::from_f64(x, WIDE_BITS))
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
    fn add(&self, o: &Self) -> Self {
        Wide(self.0.add(&o.0, WIDE_BITS, RM))
    }
    fn mul(&self, o: &Self) -> Self {
        Wide(self.0.mul(&o.0, WIDE_BITS, RM))
    }
    fn div(&self, o: &Self) -> Self {
        Wide(self.0.div(&o.0, WIDE_BITS, RM))
    }
    fn powf(&self, e: f64) -> Self {
        if e == 0.0 {
            return Wide::of(1.0);
        }
        // exp(e ln x): BigFloat::pow does not return for integral exponents
        CONSTS.with(|c| {
            let cc = &mut c.borrow_mut();
            let l = self.0.ln(WIDE_BITS, RM, cc).mul(&BigFloat::from_f64(e, WIDE_BITS), WIDE_BITS, RM);
            Wide(l.exp(WIDE_BITS, RM, cc))
        })
    }
    fn ln(&self) -> Self {
        CONSTS.with(|c| Wide(self.0.ln(WIDE_BITS, RM, &mut c.borrow_mut())))
    }
    fn to_f64(&self) -> f64 {
        // decimal output is correctly rounded and f64 parsing is exact
        self.0.to_string().parse().unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term<C: Field = f64> {
    pub coef: C,
    pub exp: f64,
    pub log: u32,
}

impl<C: Field> Term<C> {
    pub fn eval_in(&self, t: &C) -> C {
        let base = self.coef.mul(&t.powf(self.exp));
        (0..self.log).fold(base, |acc, _| acc.mul(&t.ln()))
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_in(&C::of(t)).to_f64()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerLogSum<C: Field = f64> {
    terms: Vec<Term<C>>,
}

impl<C: Field> Default for PowerLogSum<C> {
    fn default() -> Self {
        PowerLogSum { terms: Vec::new() }
    }
}

fn same_exp(a: f64, b: f64) -> bool {
    (a - b).abs() <= EXP_TOL * a.abs().max(b.abs()).max(1.0)
}

impl<C: Field> PowerLogSum<C> {
    pub fn zero() -> Self {
        PowerLogSum { terms: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        PowerLogSum::power(c, 0.0)
    }

    /// `c * t^e`
    pub fn power(c: f64, e: f64) -> Self {
        let mut s = PowerLogSum::zero();
        s.push(Term { coef: C::of(c), exp: e, log: 0 });
        s
    }

    pub fn terms(&self) -> &[Term<C>] {
        &self.terms
    }

    fn push(&mut self, term: Term<C>) {
        if term.coef.is_zero() {
            return;
        }
        if let Some(t) = self.terms.iter_mut().find(|t| t.log == term.log && same_exp(t.exp, term.exp)) {
            t.coef = t.coef.add(&term.coef);
        } else {
            self.terms.push(term);
        }
    }

    fn normalized(mut self) -> Self {
        self.terms.retain(|t| !t.coef.is_zero());
        self.terms.sort_by(|a, b| b.exp.total_cmp(&a.exp).then(b.log.cmp(&a.log)));
        self
    }

    pub fn add(&self, other: &PowerLogSum<C>) -> PowerLogSum<C> {
        let mut out = self.clone();
        for t in &other.terms {
            out.push(t.clone());
        }
        out.normalized()
    }

    pub fn scale(&self, c: f64) -> PowerLogSum<C> {
        let c = C::of(c);
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coef = t.coef.mul(&c);
        }
        out.normalized()
    }

    pub fn mul(&self, other: &PowerLogSum<C>) -> PowerLogSum<C> {
        let mut out = PowerLogSum::zero();
        for a in &self.terms {
            for b in &other.terms {
                out.push(Term { coef: a.coef.mul(&b.coef), exp: a.exp + b.exp, log: a.log + b.log });
            }
        }
        out.normalized()
    }

    pub fn pow_int(&self, n: u32) -> PowerLogSum<C> {
        let mut out = PowerLogSum::constant(1.0);
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// An antiderivative, without constant.
    pub fn antiderivative(&self) -> PowerLogSum<C> {
        let mut out = PowerLogSum::zero();
        for t in &self.terms {
            let e1 = t.exp + 1.0;
            if e1.abs() <= EXP_TOL {
                // ∫ t^-1 ln^k = ln^(k+1) / (k+1)
                out.push(Term { coef: t.coef.div(&C::of(t.log as f64 + 1.0)), exp: 0.0, log: t.log + 1 });
                continue;
            }
            // ∫ t^e ln^k = t^(e+1) sum_j (-1)^j k!/(k-j)! ln^(k-j) / (e+1)^(j+1)
            let e1c = C::of(e1);
            let mut factor = t.coef.div(&e1c);
            for j in 0..=t.log {
                if j > 0 {
                    factor = factor.mul(&C::of(-((t.log - j + 1) as f64))).div(&e1c);
                }
                out.push(Term { coef: factor.clone(), exp: e1, log: t.log - j });
            }
        }
        out.normalized()
    }

    /// `x -> ∫_anchor^x self`.
    pub fn integral_from(&self, anchor: f64) -> PowerLogSum<C> {
        let f = self.antiderivative();
        let c = f.eval_in(&C::of(anchor));
        let mut out = f;
        out.push(Term { coef: c.mul(&C::of(-1.0)), exp: 0.0, log: 0 });
        out.normalized()
    }

    pub fn eval_in(&self, t: &C) -> C {
        self.terms.iter().fold(C::of(0.0), |acc, x| acc.add(&x.eval_in(t)))
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_in(&C::of(t)).to_f64()
    }

    /// Largest exponent present (with its log power), if any.
    pub fn leading(&self) -> Option<&Term<C>> {
        self.terms.first()
    }
}

impl<C: Field> fmt::Display for PowerLogSum<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{:.6e} t^{}", t.coef.to_f64(), t.exp)?;
            if t.log > 0 {
                write!(f, " ln^{}", t.log)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_powers() {
        // ∫_1^t s^6 = (t^7 - 1)/7
        let q = PowerLogSum::<f64>::power(1.0, 6.0).integral_from(1.0);
        assert!((q.eval(2.0) - 127.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn reciprocal_gives_log() {
        let f = PowerLogSum::<f64>::power(2.0, -1.0).integral_from(1.0);
        assert!((f.eval(std::f64::consts::E) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn log_terms_integrate_by_parts() {
        // ∫_1^t s ln s ds = t^2 ln t / 2 - t^2/4 + 1/4
        let f = PowerLogSum::<f64> { terms: vec![Term { coef: 1.0, exp: 1.0, log: 1 }] }.integral_from(1.0);
        let t: f64 = 3.0;
        let exact = t * t * t.ln() / 2.0 - t * t / 4.0 + 0.25;
        assert!((f.eval(t) - exact).abs() < 1e-12);
        // ∫_1^t ln^2 s / s = ln^3 t / 3
        let g = PowerLogSum::<f64> { terms: vec![Term { coef: 1.0, exp: -1.0, log: 2 }] }.integral_from(1.0);
        assert!((g.eval(t) - t.ln().powi(3) / 3.0).abs() < 1e-14);
    }

    #[test]
    fn wide_coefficients_survive_cancellation() {
        // (t - 1)^5 expanded, near t = 1
        let narrow = PowerLogSum::<f64>::power(1.0, 1.0).add(&PowerLogSum::constant(-1.0)).pow_int(5);
        let wide: PowerLogSum<Wide> = PowerLogSum::power(1.0, 1.0).add(&PowerLogSum::constant(-1.0)).pow_int(5);
        let t: f64 = 1.001;
        let exact = (t - 1.0).powi(5);
        assert!((wide.eval(t) - exact).abs() <= 1e-15 * exact);
        assert!((narrow.eval(t) - exact).abs() > 1e-6 * exact);
    }

    #[test]
    fn cube_of_binomial() {
        // (t - 1)^3
        let b = PowerLogSum::<f64>::power(1.0, 1.0).add(&PowerLogSum::constant(-1.0));
        let c = b.pow_int(3);
        assert_eq!(c.terms().len(), 4);
        assert!((c.eval(4.0) - 27.0).abs() < 1e-12);
        assert_eq!(c.leading().unwrap().exp, 3.0);
    }
}
