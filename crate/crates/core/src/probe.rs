//! Manufactured exact solutions: pick a positive power law `y`, read off the
//! coefficient `q` that makes it solve the equation, then use it to classify
//! sign patterns, check the monotonicity lemmas and audit verdicts.

use serde::Serialize;
use thiserror::Error;

use crate::canonical::CanonicalProfile;
use crate::criteria::kernels::lambda_mu_feasible;
use crate::criteria::{Conclusions, LambdaMu, Verdict};
use crate::expr::Expr;
use crate::integrate::{geometric_grid, integrate_to_infinity, TailPolicy};
use crate::model::{
    validate_spec, AdvancedArgument, ArgumentForm, CoefficientFunction, EquationSpec, PowerTerm, RawSpec, SpecError,
};
use crate::rational::{signed_pow, OddRational};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbeError {
    #[error("{0} must be a power law with positive coefficient")]
    NotPowerLaw(&'static str),
    #[error("y must be positive")]
    NonPositiveY,
    /// Some operator level vanishes identically, so no strict sign class applies.
    #[error("L{level}y vanishes identically")]
    Degenerate { level: usize },
    #[error("the induced coefficient is negative (L3y > 0)")]
    NegativeInducedQ,
    #[error("induced equation is invalid: {0}")]
    Spec(#[from] SpecError),
    #[error("lemma hypotheses not verified: {0}")]
    HypothesisNotVerified(String),
}

/// Equation data without `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeBase {
    pub r1: PowerTerm,
    pub r2: PowerTerm,
    pub sigma: AdvancedArgument,
    pub alpha: OddRational,
    pub beta: OddRational,
    pub gamma: OddRational,
    pub t0: f64,
}

/// An exact positive solution `y = c t^p` and its operator chain, each a
/// signed power law.
#[derive(Debug, Clone)]
pub struct ManufacturedSolution {
    pub y: PowerTerm,
    pub l1: PowerTerm,
    pub l2: PowerTerm,
    pub l3: PowerTerm,
    pub induced_q: CoefficientFunction,
    pub spec: EquationSpec,
}

fn derivative(p: PowerTerm) -> PowerTerm {
    PowerTerm { coef: p.coef * p.exp, exp: p.exp - 1.0 }
}

/// `w * (x)^e` for a signed power law `x`.
fn weighted_power(w: PowerTerm, x: PowerTerm, e: OddRational) -> PowerTerm {
    PowerTerm { coef: w.coef * signed_pow(x.coef, e), exp: w.exp + x.exp * e.to_f64() }
}

fn sigma_expr(sigma: &AdvancedArgument) -> Expr {
    match &sigma.form {
        ArgumentForm::Proportional(d) => Expr::constant(*d).mul(Expr::var()),
        ArgumentForm::Shift(c) => Expr::parse(&format!("t+({c})")).expect("shift expression"),
        ArgumentForm::Expression { expr, .. } => expr.clone(),
    }
}

/// Builds the solution `y` and the `q` it induces:
/// `q(t) = -L3y(t) / y^gamma(sigma(t))`.
pub fn manufacture(base: &ProbeBase, y: PowerTerm) -> Result<ManufacturedSolution, ProbeError> {
    if !(base.r1.coef > 0.0) {
        return Err(ProbeError::NotPowerLaw("r1"));
    }
    if !(base.r2.coef > 0.0) {
        return Err(ProbeError::NotPowerLaw("r2"));
    }
    if !(y.coef > 0.0) {
        return Err(ProbeError::NonPositiveY);
    }
    let dy = derivative(y);
    if dy.coef == 0.0 {
        return Err(ProbeError::Degenerate { level: 1 });
    }
    let l1 = weighted_power(base.r1, dy, base.alpha);
    let dl1 = derivative(l1);
    if dl1.coef == 0.0 {
        return Err(ProbeError::Degenerate { level: 2 });
    }
    let l2 = weighted_power(base.r2, dl1, base.beta);
    let l3 = derivative(l2);
    if l3.coef == 0.0 {
        return Err(ProbeError::Degenerate { level: 3 });
    }
    if l3.coef > 0.0 {
        return Err(ProbeError::NegativeInducedQ);
    }
    let g = base.gamma.to_f64();
    let induced_q = match base.sigma.as_proportional() {
        Some(d) => CoefficientFunction::power_law(
            -l3.coef / (y.coef.powf(g) * d.powf(y.exp * g)),
            l3.exp - y.exp * g,
        ),
        None => CoefficientFunction::from_expr(
            Expr::constant(-l3.coef / y.coef.powf(g))
                .mul(Expr::var().powf(l3.exp))
                .mul(sigma_expr(&base.sigma).powf(-y.exp * g)),
        ),
    };
    let spec = validate_spec(RawSpec {
        r1: CoefficientFunction::power_law(base.r1.coef, base.r1.exp),
        r2: CoefficientFunction::power_law(base.r2.coef, base.r2.exp),
        q: induced_q.clone(),
        sigma: base.sigma.clone(),
        alpha: base.alpha.to_string(),
        beta: base.beta.to_string(),
        gamma: base.gamma.to_string(),
        t0: base.t0,
    })?;
    Ok(ManufacturedSolution { y, l1, l2, l3, induced_q, spec })
}

impl ManufacturedSolution {
    /// `(y, L1y, L2y, L3y)` at `t`.
    pub fn chain(&self, t: f64) -> [f64; 4] {
        [self.y.eval(t), self.l1.eval(t), self.l2.eval(t), self.l3.eval(t)]
    }

    /// `L3y(t) + q(t) y^gamma(sigma(t))`, zero for an exact solution.
    pub fn residual(&self, t: f64) -> f64 {
        let s = self.spec.sigma.eval(t);
        self.l3.eval(t) + self.induced_q.eval(t) * signed_pow(self.y.eval(s), self.spec.gamma)
    }

    pub fn tends_to_zero(&self) -> bool {
        self.y.exp < 0.0
    }
}

/// Sign pattern of `(y, L1y, L2y, L3y)` for a positive solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SignClass {
    /// `(+, -, -, -)`
    DecreasingConcave,
    /// `(+, -, +, -)`
    DecreasingConvex,
    /// `(+, +, +, -)`
    IncreasingConvex,
    /// `(+, +, -, -)`
    IncreasingConcave,
    Mixed,
}

impl SignClass {
    /// Conventional short label `S1`..`S4`.
    pub fn label(self) -> &'static str {
        match self {
            SignClass::DecreasingConcave => "S1",
            SignClass::DecreasingConvex => "S2",
            SignClass::IncreasingConvex => "S3",
            SignClass::IncreasingConcave => "S4",
            SignClass::Mixed => "mixed",
        }
    }

    fn from_signs(s: [i8; 4]) -> SignClass {
        match s {
            [1, -1, -1, -1] => SignClass::DecreasingConcave,
            [1, -1, 1, -1] => SignClass::DecreasingConvex,
            [1, 1, 1, -1] => SignClass::IncreasingConvex,
            [1, 1, -1, -1] => SignClass::IncreasingConcave,
            _ => SignClass::Mixed,
        }
    }
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Class of the sign pattern on `[a, b]`, or `Mixed` if it changes or is
/// outside the table.
pub fn classify_chain(chain: impl Fn(f64) -> [f64; 4], a: f64, b: f64) -> SignClass {
    let ts = geometric_grid(a, (b / a).powf(1.0 / 64.0).max(1.0 + 1e-9), b);
    let mut seen: Option<[i8; 4]> = None;
    for t in ts {
        let s = chain(t).map(sign);
        match seen {
            None => seen = Some(s),
            Some(prev) if prev != s => return SignClass::Mixed,
            _ => {}
        }
    }
    seen.map_or(SignClass::Mixed, SignClass::from_signs)
}

pub fn classify(sol: &ManufacturedSolution, a: f64, b: f64) -> SignClass {
    classify_chain(|t| sol.chain(t), a, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Nonincreasing,
    Nondecreasing,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneCheck {
    pub ratio: String,
    pub direction: Direction,
    pub holds: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub class: SignClass,
    pub checks: Vec<MonotoneCheck>,
    /// Lemmas whose hypotheses could not be verified.
    pub skipped: Vec<String>,
}

impl MonotonicityReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

const SLACK: f64 = 1e-10;

fn monotone(ts: &[f64], values: &[f64], dir: Direction) -> Option<usize> {
    values.windows(2).position(|w| {
        let tol = SLACK * w[0].abs().max(w[1].abs());
        match dir {
            Direction::Nonincreasing => w[1] > w[0] + tol,
            Direction::Nondecreasing => w[1] < w[0] - tol,
        }
    })
    .map(|i| i.min(ts.len() - 1))
}

fn check_ratio(name: &str, ts: &[f64], values: Vec<f64>, dir: Direction) -> MonotoneCheck {
    let bad = monotone(ts, &values, dir);
    let finite = values.iter().all(|v| v.is_finite());
    MonotoneCheck {
        ratio: name.into(),
        direction: dir,
        holds: bad.is_none() && finite,
        detail: match bad {
            Some(i) => format!("breaks between t = {:e} and {:e}", ts[i], ts[i + 1]),
            None if !finite => "non-finite samples".into(),
            None => format!("{} samples", ts.len()),
        },
    }
}

/// Whether `∫ q pi^gamma(sigma) = ∞`; `None` when undecided.
pub fn weighted_q_diverges(spec: &EquationSpec, profile: &CanonicalProfile) -> Option<bool> {
    if let Ok(es) = crate::euler::EulerSpec::from_equation(spec) {
        let (_, e) = es.pi_power();
        let g = spec.gamma_f();
        let q = spec.q.as_power_law()?;
        return Some(q.exp + g * e >= -1.0 - 1e-12);
    }
    let f = |s: f64| spec.q.eval(s) * profile.pi(spec.sigma.eval(s)).powf(spec.gamma_f());
    let r = integrate_to_infinity(f, spec.t0, 1e-8, &TailPolicy::default()).ok()?;
    if r.is_diverged() {
        Some(true)
    } else if r.is_converged() {
        Some(false)
    } else {
        None
    }
}

fn nested_divergence_holds(spec: &EquationSpec) -> bool {
    match crate::euler::EulerSpec::from_equation(spec) {
        Ok(es) => matches!(
            crate::euler::euler_reduce(&es, &crate::criteria::Condition::NestedDivergence),
            Ok(r) if r.satisfied()
        ),
        Err(_) => false,
    }
}

/// Finite-window evidence that samples on a geometric grid tend to 0: the
/// log-drop over the second half stays comparable to the first (power or
/// log rates), where a positive limit flattens it out.
fn decays_to_zero(values: &[f64]) -> bool {
    let (first, mid, last) = (values[0], values[values.len() / 2], values[values.len() - 1]);
    let (d1, d2) = ((first / mid).ln(), (mid / last).ln());
    d1 > 0.0 && d2 >= 0.25 * d1
}

/// Samples the ratios the monotonicity lemmas make claims about, on `[a, b]`.
/// Each lemma is checked only when its hypotheses are verified; if none
/// applies the call fails.
pub fn check_lemma_monotonicities(
    sol: &ManufacturedSolution,
    profile: &CanonicalProfile,
    a: f64,
    b: f64,
    constants: Option<LambdaMu>,
) -> Result<MonotonicityReport, ProbeError> {
    let spec = &sol.spec;
    let class = classify(sol, a, b);
    let ts = geometric_grid(a, (b / a).powf(1.0 / 64.0), b);
    let ratio = |f: &dyn Fn(f64) -> f64| ts.iter().map(|&t| sol.y.eval(t) / f(t)).collect::<Vec<f64>>();
    let mut checks = Vec::new();
    let mut skipped = Vec::new();
    let weighted = weighted_q_diverges(spec, profile);

    match (class, weighted) {
        (SignClass::DecreasingConvex, Some(true)) => {
            let values = ratio(&|t| profile.pi(t));
            let mut c = check_ratio("y/pi", &ts, values.clone(), Direction::Nonincreasing);
            if b >= 100.0 * a && !decays_to_zero(&values) {
                c.holds = false;
                c.detail = format!("no decay toward 0: {:?}", [values[0], values[values.len() - 1]]);
            }
            checks.push(c);
        }
        (SignClass::DecreasingConcave, Some(true)) => {
            checks.push(check_ratio("y/pi1", &ts, ratio(&|t| profile.pi1(t)), Direction::Nondecreasing));
        }
        (SignClass::DecreasingConvex | SignClass::DecreasingConcave, _) => {
            skipped.push("weighted divergence of q not verified".into());
        }
        _ => skipped.push(format!("class {} is outside the lemmas", class.label())),
    }

    if class == SignClass::DecreasingConcave {
        let lm = constants.unwrap_or(LambdaMu { lambda: 0.0, mu: 0.0 });
        let horizon = 1e6 * spec.t0;
        let balanced = crate::model::gamma_equals_alpha_beta(spec);
        if !balanced {
            skipped.push("constant-pair lemma needs gamma = alpha * beta".into());
        } else if !nested_divergence_holds(spec) {
            skipped.push("constant-pair lemma needs the nested divergence".into());
        } else if !lambda_mu_feasible(spec, profile, lm, spec.t0, horizon) {
            skipped.push(format!("constants ({}, {}) are not admissible", lm.lambda, lm.mu));
        } else {
            let alpha = spec.alpha_f();
            let up = 1.0 - lm.lambda / alpha;
            let down = lm.mu / alpha;
            checks.push(check_ratio(
                &format!("y/pi1^{up}"),
                &ts,
                ratio(&|t| profile.pi1(t).powf(up)),
                Direction::Nondecreasing,
            ));
            checks.push(check_ratio(
                &format!("y/pi1^{down}"),
                &ts,
                ratio(&|t| profile.pi1(t).powf(down)),
                Direction::Nonincreasing,
            ));
        }
    }

    if checks.is_empty() {
        return Err(ProbeError::HypothesisNotVerified(skipped.join("; ")));
    }
    Ok(MonotonicityReport { class, checks, skipped })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    Consistent,
    Contradiction,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub kind: FindingKind,
    pub detail: String,
}

/// Audits top-level claims against a known positive solution: an
/// oscillation claim is always contradicted, a property-A claim is
/// contradicted unless `y -> 0`.
pub fn soundness_check(sol: &ManufacturedSolution, conclusions: &Conclusions) -> Vec<Finding> {
    let mut out = Vec::new();
    if conclusions.oscillatory.verdict == Verdict::Satisfied {
        out.push(Finding {
            kind: FindingKind::Contradiction,
            detail: format!(
                "oscillation granted by {:?} but y = {} t^{} is a positive solution",
                conclusions.oscillatory.granted_by, sol.y.coef, sol.y.exp
            ),
        });
    }
    if conclusions.property_a.verdict == Verdict::Satisfied {
        let ok = sol.tends_to_zero();
        out.push(Finding {
            kind: if ok { FindingKind::Consistent } else { FindingKind::Contradiction },
            detail: format!(
                "property A granted by {:?}; y = t^{} {}",
                conclusions.property_a.granted_by,
                sol.y.exp,
                if ok { "tends to 0" } else { "does not tend to 0" }
            ),
        });
    }
    if out.is_empty() {
        out.push(Finding { kind: FindingKind::Consistent, detail: "no claim to audit".into() });
    }
    out
}

pub fn has_contradiction(findings: &[Finding]) -> bool {
    findings.iter().any(|f| f.kind == FindingKind::Contradiction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::check_noncanonical;
    use crate::criteria::{conclude, CriterionId, EvalOptions, Evaluator, TopVerdict};

    #[test]
    fn decay_detection_separates_slow_decay_from_a_positive_limit() {
        let grid = geometric_grid(10.0, 10f64.powf(1.0 / 16.0), 1e4);
        let on = |f: &dyn Fn(f64) -> f64| grid.iter().map(|&t| f(t)).collect::<Vec<_>>();
        assert!(decays_to_zero(&on(&|t| t.powf(-0.05))));
        assert!(decays_to_zero(&on(&|t| 1.0 / t.ln())));
        assert!(!decays_to_zero(&on(&|t| 1.0 + 1.0 / t)));
        assert!(!decays_to_zero(&on(&|t| 2.0 + t.powf(-0.5))));
    }

    fn r(s: &str) -> OddRational {
        s.parse().unwrap()
    }

    fn base(m: f64, n: f64, alpha: &str, beta: &str, gamma: &str, delta: f64) -> ProbeBase {
        ProbeBase {
            r1: PowerTerm { coef: 1.0, exp: m },
            r2: PowerTerm { coef: 1.0, exp: n },
            sigma: AdvancedArgument::proportional(delta),
            alpha: r(alpha),
            beta: r(beta),
            gamma: r(gamma),
            t0: 1.0,
        }
    }

    fn inv(k: f64) -> PowerTerm {
        PowerTerm { coef: 1.0, exp: -k }
    }

    #[test]
    fn linear_chain_with_cubic_coefficients() {
        let sol = manufacture(&base(3.0, 3.0, "1", "1", "1", 2.0), inv(1.0)).unwrap();
        assert_eq!(sol.l1, PowerTerm { coef: -1.0, exp: 1.0 });
        assert_eq!(sol.l2, PowerTerm { coef: -1.0, exp: 3.0 });
        assert_eq!(sol.l3, PowerTerm { coef: -3.0, exp: 2.0 });
        // q = 3 t^2 * sigma(t) = 6 t^3
        let q = sol.induced_q.as_power_law().unwrap();
        assert!((q.coef - 6.0).abs() < 1e-12 && (q.exp - 3.0).abs() < 1e-12);
        assert_eq!(classify(&sol, 1.0, 100.0), SignClass::DecreasingConcave);
    }

    #[test]
    fn vanishing_level_is_rejected() {
        let err = manufacture(&base(2.0, 2.0, "1", "1", "1", 2.0), inv(1.0)).unwrap_err();
        assert_eq!(err, ProbeError::Degenerate { level: 2 });
    }

    #[test]
    fn positive_third_level_is_rejected() {
        // y = t^-1, r1 = t^3, r2 = t^(-1/2): L2y = -t^(-1/2), L3y > 0
        let mut b = base(3.0, 3.0, "1", "1", "1", 2.0);
        b.r2.exp = -0.5;
        assert_eq!(manufacture(&b, inv(1.0)).unwrap_err(), ProbeError::NegativeInducedQ);
    }

    #[test]
    fn residual_vanishes_for_fractional_exponents() {
        let sol = manufacture(&base(4.0, 3.0, "5/3", "1/7", "9/5", 2.0), inv(0.5)).unwrap();
        for t in [1.0, 3.7, 42.0, 1e3] {
            let l3 = sol.l3.eval(t);
            assert!(sol.residual(t).abs() <= 1e-12 * l3.abs(), "t = {t}");
        }
    }

    #[test]
    fn shifted_argument_gives_an_expression_coefficient() {
        let mut b = base(3.0, 3.0, "1", "1", "1", 2.0);
        b.sigma = AdvancedArgument::shift(1.0);
        let sol = manufacture(&b, inv(1.0)).unwrap();
        // q = 3 t^2 (t + 1)
        assert!((sol.induced_q.eval(2.0) - 36.0).abs() < 1e-12);
        assert!(sol.residual(5.0).abs() < 1e-12 * sol.l3.eval(5.0).abs());
    }

    #[test]
    fn classifier_reports_sign_changes() {
        let c = classify_chain(|t| [1.0, t - 5.0, -1.0, -1.0], 1.0, 10.0);
        assert_eq!(c, SignClass::Mixed);
        assert_eq!(classify_chain(|_| [1.0, -1.0, 1.0, -1.0], 1.0, 10.0), SignClass::DecreasingConvex);
        assert_eq!(classify_chain(|_| [1.0, 1.0, -1.0, -1.0], 1.0, 10.0).label(), "S4");
    }

    #[test]
    fn monotonicity_of_a_decreasing_concave_solution() {
        let sol = manufacture(&base(3.0, 3.0, "1", "1", "1", 2.0), inv(1.0)).unwrap();
        let profile = check_noncanonical(&sol.spec).unwrap();
        let rep = check_lemma_monotonicities(&sol, &profile, 10.0, 1e4, None).unwrap();
        assert_eq!(rep.class, SignClass::DecreasingConcave);
        assert!(rep.all_hold(), "{rep:?}");
        assert!(rep.checks.iter().any(|c| c.ratio == "y/pi1"));
    }

    #[test]
    fn oscillation_claim_is_a_contradiction() {
        let sol = manufacture(&base(3.0, 3.0, "1", "1", "1", 2.0), inv(1.0)).unwrap();
        let yes = TopVerdict { verdict: Verdict::Satisfied, granted_by: vec!["T2_5".into()] };
        let no = TopVerdict { verdict: Verdict::Inconclusive, granted_by: vec![] };
        let c = Conclusions { property_a: yes.clone(), oscillatory: yes, results: vec![] };
        assert!(has_contradiction(&soundness_check(&sol, &c)));
        let c = Conclusions { property_a: no.clone(), oscillatory: no, results: vec![] };
        assert!(!has_contradiction(&soundness_check(&sol, &c)));
    }

    #[test]
    fn analysis_of_a_manufactured_equation_is_sound() {
        let sol = manufacture(&base(3.0, 3.0, "1", "1/3", "1/3", 2.0), inv(0.5)).unwrap();
        let profile = check_noncanonical(&sol.spec).unwrap();
        let ev = Evaluator::new(&sol.spec, &profile, EvalOptions::default());
        let results: Vec<_> = crate::criteria::Theorem::catalog(&crate::criteria::Rho::standard(), None)
            .into_iter()
            .map(|t| ev.evaluate(&CriterionId::Theorem(t)).unwrap())
            .collect();
        let c = conclude(&sol.spec, results);
        let f = soundness_check(&sol, &c);
        assert!(!has_contradiction(&f), "{f:?}");
    }

    // r1 = t^2, r2 = t, alpha = 1, beta = gamma = 1/3, sigma = 2t: every
    // y = t^-k with k > 3 solves the equation with a constant q, and the
    // two-window oscillation test still passes there. Kept as a record that
    // those window conditions do not exclude decreasing solutions.
    #[test]
    fn window_oscillation_test_passes_on_an_equation_with_a_positive_solution() {
        let sol = manufacture(&base(2.0, 1.0, "1", "1/3", "1/3", 2.0), inv(4.5)).unwrap();
        let q = sol.induced_q.as_power_law().unwrap();
        assert!(q.exp.abs() < 1e-12);
        let expected = 0.5 * (4.5f64 * 3.5).cbrt() * 2f64.powf(1.5);
        assert!((q.coef - expected).abs() < 1e-12 * expected);
        assert_eq!(classify(&sol, 10.0, 1e4), SignClass::DecreasingConvex);

        let profile = check_noncanonical(&sol.spec).unwrap();
        let ev = Evaluator::new(&sol.spec, &profile, EvalOptions::default());
        let r = ev.evaluate(&"T2_8".parse().unwrap()).unwrap();
        assert_eq!(r.verdict, Verdict::Satisfied);
        let c = conclude(&sol.spec, vec![r]);
        assert!(has_contradiction(&soundness_check(&sol, &c)));
    }
}
