//! Conditions and theorems: evaluation, verdict combination, conclusions.

pub mod conclude;
pub mod forms;
pub mod ids;
pub mod kernels;
pub mod numeric;

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::CanonicalProfile;
use crate::euler::{euler_reduce, EulerError, EulerSpec, Reduction};
use crate::integrate::{LimitEstimate, TailResult};
use crate::model::{gamma_equals_alpha_beta, EquationSpec};

pub use conclude::{conclude, Conclusions, TopVerdict};
pub use forms::WindowKind;
pub use ids::{ConclusionKind, Condition, CriterionId, IdError, LambdaMu, Rho, Theorem};
pub use kernels::{
    concave_power_gap, concave_power_max, kernel_j, kernel_q, kernel_r2q, kernel_window, lambda_mu_bounds,
    lambda_mu_feasible, riccati_criterion_function, KernelError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Satisfied,
    NotSatisfied,
    Inconclusive,
}

impl Verdict {
    /// All must hold: any failure fails, else any doubt is doubt.
    pub fn combine(vs: impl IntoIterator<Item = Verdict>) -> Verdict {
        let mut out = Verdict::Satisfied;
        for v in vs {
            match v {
                Verdict::NotSatisfied => return Verdict::NotSatisfied,
                Verdict::Inconclusive => out = Verdict::Inconclusive,
                Verdict::Satisfied => {}
            }
        }
        out
    }
}

/// Which route produced a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalPath {
    Euler,
    Numeric,
    /// Granted from another condition that implies it.
    Implication,
    /// Combined from component conditions.
    Composite,
    NotEvaluated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    Limit { start: Option<f64>, estimate: LimitEstimate, threshold: f64 },
    Tail { result: TailResult },
    Reduction { reduction: Reduction },
    Constants { lambda: f64, mu: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisNote {
    pub name: String,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: CriterionId,
    pub verdict: Verdict,
    pub conclusion_kind: ConclusionKind,
    /// False when a structural hypothesis fails; the verdict is then
    /// `Inconclusive` and carries no information.
    pub applicable: bool,
    pub path: EvalPath,
    pub evidence: Vec<Evidence>,
    pub hypotheses_checked: Vec<HypothesisNote>,
    pub components: Vec<CriterionResult>,
    pub notes: Vec<String>,
    /// Criterion function samples from the numeric path, for plotting.
    #[serde(skip)]
    pub series: Vec<(f64, f64)>,
}

impl CriterionResult {
    fn new(id: CriterionId, path: EvalPath) -> Self {
        let conclusion_kind = id.conclusion();
        CriterionResult {
            id,
            verdict: Verdict::Inconclusive,
            conclusion_kind,
            applicable: true,
            path,
            evidence: Vec::new(),
            hypotheses_checked: Vec::new(),
            components: Vec::new(),
            notes: Vec::new(),
            series: Vec::new(),
        }
    }

    /// Every result in this tree, depth first.
    pub fn walk(&self) -> Vec<&CriterionResult> {
        let mut out = vec![self];
        for c in &self.components {
            out.extend(c.walk());
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PathChoice {
    /// Closed forms when the equation is Euler-type and they decide, numeric otherwise.
    #[default]
    Auto,
    Numeric,
    Euler,
    /// Both; a Satisfied/NotSatisfied disagreement is an error.
    CrossCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Largest `t` sampled; `None` means `1e8 * t0`.
    pub horizon: Option<f64>,
    pub grid_ratio: f64,
    pub tail_window: usize,
    /// Relative tolerance for tail integrals.
    pub tol: f64,
    /// Relative margin a limit estimate must clear its threshold by.
    pub margin: f64,
    pub path: PathChoice,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { horizon: None, grid_ratio: 1.25, tail_window: 20, tol: 1e-8, margin: 0.01, path: PathChoice::Auto }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CriteriaError {
    #[error("{id}: closed form says {euler:?} but the numeric path says {numeric:?}")]
    CrossCheckMismatch { id: String, euler: Verdict, numeric: Verdict },
    #[error("closed-form path unavailable: {0}")]
    Euler(EulerError),
}

/// Evaluates criteria for one equation, sharing condition results between
/// theorems that need the same condition.
pub struct Evaluator<'a> {
    spec: &'a EquationSpec,
    profile: &'a CanonicalProfile,
    opts: EvalOptions,
    euler: Option<EulerSpec>,
    cache: Mutex<HashMap<String, CriterionResult>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(spec: &'a EquationSpec, profile: &'a CanonicalProfile, opts: EvalOptions) -> Self {
        let euler = EulerSpec::from_equation(spec).ok();
        Evaluator { spec, profile, opts, euler, cache: Mutex::new(HashMap::new()) }
    }

    pub fn options(&self) -> &EvalOptions {
        &self.opts
    }

    pub fn evaluate(&self, id: &CriterionId) -> Result<CriterionResult, CriteriaError> {
        match id {
            CriterionId::Condition(c) => self.condition(c),
            CriterionId::Theorem(t) => self.theorem(t),
        }
    }

    fn condition(&self, cond: &Condition) -> Result<CriterionResult, CriteriaError> {
        let id = CriterionId::Condition(cond.clone());
        let key = id.code();
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(hit.clone());
        }
        let result = self.condition_uncached(id)?;
        self.cache.lock().expect("cache lock").insert(key, result.clone());
        Ok(result)
    }

    fn euler_route(&self, cond: &Condition) -> Result<Reduction, EulerError> {
        let es = self.euler.as_ref().ok_or_else(|| EulerError::NotEuler("coefficients are not all power laws".into()))?;
        euler_reduce(es, cond)
    }

    fn numeric_route(&self, id: &CriterionId, cond: &Condition) -> CriterionResult {
        let mut r = CriterionResult::new(id.clone(), EvalPath::Numeric);
        match numeric::evaluate(self.spec, self.profile, cond, &self.opts) {
            Ok(out) => {
                r.verdict = out.verdict;
                r.evidence = out.evidence;
                r.notes = out.notes;
                r.series = out.series;
            }
            Err(e) => r.notes.push(e),
        }
        r
    }

    fn condition_uncached(&self, id: CriterionId) -> Result<CriterionResult, CriteriaError> {
        let CriterionId::Condition(cond) = &id else { unreachable!() };
        let from_reduction = |red: Reduction| {
            let mut r = CriterionResult::new(id.clone(), EvalPath::Euler);
            r.verdict = if red.satisfied() { Verdict::Satisfied } else { Verdict::NotSatisfied };
            r.evidence.push(Evidence::Reduction { reduction: red });
            r
        };
        match self.opts.path {
            PathChoice::Numeric => Ok(self.numeric_route(&id, cond)),
            PathChoice::Euler => match self.euler_route(cond) {
                Ok(red) => Ok(from_reduction(red)),
                Err(e @ EulerError::NotEuler(_)) => Err(CriteriaError::Euler(e)),
                Err(e) => {
                    let mut r = CriterionResult::new(id.clone(), EvalPath::Euler);
                    r.notes.push(format!("closed forms do not decide: {e}"));
                    Ok(r)
                }
            },
            PathChoice::Auto => match self.euler_route(cond) {
                Ok(red) => Ok(from_reduction(red)),
                Err(e) => {
                    let mut r = self.numeric_route(&id, cond);
                    if self.euler.is_some() {
                        r.notes.insert(0, format!("closed forms do not decide ({e}); evaluated numerically"));
                    }
                    Ok(r)
                }
            },
            PathChoice::CrossCheck => {
                let numeric = self.numeric_route(&id, cond);
                match self.euler_route(cond) {
                    Ok(red) => {
                        let mut r = from_reduction(red);
                        let clash = matches!(
                            (r.verdict, numeric.verdict),
                            (Verdict::Satisfied, Verdict::NotSatisfied) | (Verdict::NotSatisfied, Verdict::Satisfied)
                        );
                        if clash {
                            return Err(CriteriaError::CrossCheckMismatch {
                                id: id.code(),
                                euler: r.verdict,
                                numeric: numeric.verdict,
                            });
                        }
                        r.notes.push(format!("numeric cross-check: {:?}", numeric.verdict));
                        r.evidence.extend(numeric.evidence);
                        r.series = numeric.series;
                        Ok(r)
                    }
                    Err(e) => {
                        let mut r = numeric;
                        r.notes.insert(0, format!("closed forms do not decide ({e}); numeric only"));
                        Ok(r)
                    }
                }
            }
        }
    }

    fn theorem(&self, th: &Theorem) -> Result<CriterionResult, CriteriaError> {
        let id = CriterionId::Theorem(th.clone());
        let mut r = CriterionResult::new(id, EvalPath::Composite);
        if th.needs_balanced_exponents() {
            let holds = gamma_equals_alpha_beta(self.spec);
            r.hypotheses_checked.push(HypothesisNote { name: "gamma = alpha * beta".into(), holds });
            if !holds {
                r.applicable = false;
                r.path = EvalPath::NotEvaluated;
                r.notes.push("requires gamma = alpha * beta".into());
                return Ok(r);
            }
        }
        match th {
            Theorem::Refined(None) | Theorem::RefinedRiccati(_, None) | Theorem::RefinedRiccatiPi1PowAlpha(None) => {
                self.search_constants(th, r)
            }
            Theorem::Refined(Some(lm)) => {
                self.check_constants(&mut r, *lm, true);
                if r.applicable {
                    self.fill_components(th, &mut r)?;
                }
                Ok(r)
            }
            Theorem::RefinedRiccati(_, Some(l)) | Theorem::RefinedRiccatiPi1PowAlpha(Some(l)) => {
                self.check_constants(&mut r, LambdaMu { lambda: *l, mu: 0.0 }, false);
                if r.applicable {
                    self.fill_components(th, &mut r)?;
                }
                Ok(r)
            }
            _ => {
                self.fill_components(th, &mut r)?;
                Ok(r)
            }
        }
    }

    fn fill_components(&self, th: &Theorem, r: &mut CriterionResult) -> Result<(), CriteriaError> {
        for c in th.requirements() {
            r.components.push(self.condition(&c)?);
        }
        r.verdict = Verdict::combine(r.components.iter().map(|c| c.verdict));
        Ok(())
    }

    fn bounds(&self) -> Option<(f64, f64)> {
        let h = numeric::horizon(self.spec, &self.opts);
        kernels::lambda_mu_bounds(self.spec, self.profile, self.spec.t0, h, self.opts.grid_ratio).ok()
    }

    /// Records the constraint check on the constants; marks the theorem
    /// inapplicable when they fail.
    fn check_constants(&self, r: &mut CriterionResult, lm: LambdaMu, with_mu: bool) {
        let alpha = self.spec.alpha_f();
        let sum_ok = lm.lambda >= 0.0 && lm.mu >= 0.0 && lm.lambda + lm.mu < alpha;
        let (lb, mb) = self.bounds().unwrap_or((0.0, 0.0));
        let bound_ok = lm.lambda <= lb && (!with_mu || lm.mu <= mb);
        r.hypotheses_checked.push(HypothesisNote { name: "0 <= lambda + mu < alpha".into(), holds: sum_ok });
        r.hypotheses_checked.push(HypothesisNote { name: format!("constants within bounds ({lb:.6e}, {mb:.6e})"), holds: bound_ok });
        r.evidence.push(Evidence::Constants { lambda: lm.lambda, mu: lm.mu });
        if !(sum_ok && bound_ok) {
            r.applicable = false;
            r.notes.push("the constants violate their admissibility bounds".into());
        }
    }

    /// Tries constants on the corners `{0, b/2, 0.95 b}` of the admissible box.
    fn search_constants(&self, th: &Theorem, mut r: CriterionResult) -> Result<CriterionResult, CriteriaError> {
        let alpha = self.spec.alpha_f();
        let (lb, mb) = self.bounds().unwrap_or((0.0, 0.0));
        let with_mu = matches!(th, Theorem::Refined(_));
        let corners = |b: f64| [0.0, 0.5 * b, 0.95 * b];
        let mut candidates = Vec::new();
        for lambda in corners(lb) {
            let mus = if with_mu { corners(mb).to_vec() } else { vec![0.0] };
            for mu in mus {
                let lm = LambdaMu { lambda, mu };
                if lambda + mu < alpha && !candidates.contains(&lm) {
                    candidates.push(lm);
                }
            }
        }
        r.notes.push(format!("constant bounds: lambda <= {lb:.6e}, mu <= {mb:.6e}"));
        let mut tried = Vec::new();
        for lm in candidates {
            let fixed = th.with_constants(lm);
            let sub = self.theorem(&fixed)?;
            let done = sub.verdict == Verdict::Satisfied;
            tried.push(sub);
            if done {
                break;
            }
        }
        r.verdict = if tried.iter().any(|s| s.verdict == Verdict::Satisfied) {
            Verdict::Satisfied
        } else if !tried.is_empty() && tried.iter().all(|s| s.verdict == Verdict::NotSatisfied) {
            Verdict::NotSatisfied
        } else {
            Verdict::Inconclusive
        };
        if let Some(s) = tried.iter().find(|s| s.verdict == Verdict::Satisfied) {
            r.notes.push(format!("granted with {}", s.id));
        }
        r.components = tried;
        Ok(r)
    }
}

/// Evaluates one criterion with a fresh evaluator.
pub fn evaluate_criterion(
    spec: &EquationSpec,
    profile: &CanonicalProfile,
    id: &CriterionId,
    opts: &EvalOptions,
) -> Result<CriterionResult, CriteriaError> {
    Evaluator::new(spec, profile, opts.clone()).evaluate(id)
}

#[cfg(test)]
mod tests {
    use super::*;

    use crate::canonical::check_noncanonical;
    use crate::euler::reference::{stated_advanced_limsup, stated_window};
    use crate::euler::EulerSpec;
    use crate::model::{validate_spec, AdvancedArgument, CoefficientFunction, RawSpec};

    fn fractional() -> EquationSpec {
        validate_spec(RawSpec {
            r1: CoefficientFunction::power_law(1.0, 4.0),
            r2: CoefficientFunction::power_law(1.0, 3.0),
            q: CoefficientFunction::power_law(1.0, 6.0),
            sigma: AdvancedArgument::proportional(2.0),
            alpha: "5/3".into(),
            beta: "1/7".into(),
            gamma: "9/5".into(),
            t0: 1.0,
        })
        .unwrap()
    }

    fn family(m: f64, n: f64, q0: f64, delta: f64) -> EquationSpec {
        EulerSpec::example_shape(m, n, q0, delta).to_equation().unwrap()
    }

    fn run(spec: &EquationSpec, code: &str, path: PathChoice) -> Result<CriterionResult, CriteriaError> {
        let profile = check_noncanonical(spec).unwrap();
        let opts = EvalOptions { path, ..EvalOptions::default() };
        evaluate_criterion(spec, &profile, &code.parse().unwrap(), &opts)
    }

    #[test]
    fn fractional_example_has_property_a_on_both_paths() {
        let spec = fractional();
        for path in [PathChoice::Auto, PathChoice::Numeric] {
            let r = run(&spec, "T2_1", path).unwrap();
            assert_eq!(r.verdict, Verdict::Satisfied, "{path:?}: {:?}", r.components[0].notes);
            assert_eq!(r.conclusion_kind, ConclusionKind::PropertyA);
        }
    }

    #[test]
    fn unbalanced_exponents_are_not_applicable() {
        let r = run(&fractional(), "T2_5", PathChoice::Auto).unwrap();
        assert!(!r.applicable);
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert!(r.components.is_empty());
    }

    #[test]
    fn weighted_divergence_fails_in_closed_form() {
        let r = run(&family(2.0, 1.0, 2.0, 2.0), "T2_7", PathChoice::Auto).unwrap();
        assert_eq!(r.verdict, Verdict::NotSatisfied);
        assert_eq!(r.components[0].path, EvalPath::Euler);
    }

    #[test]
    fn limsup_and_window_follow_the_stated_inequalities() {
        for (m, n, q0, d) in [(2.0, 1.0, 2.0, 2.0), (2.0, 1.0, 3.0, 2.0), (2.0, 1.0, 1.0, 2.0), (2.5, 1.2, 1.5, 3.0)] {
            let spec = family(m, n, q0, d);
            let want = stated_advanced_limsup(m, n, q0, d).holds() && stated_window(m, n, q0, d).holds();
            let r = run(&spec, "T2_8", PathChoice::Auto).unwrap();
            let got = r.verdict == Verdict::Satisfied;
            assert_eq!(got, want, "m={m} n={n} q0={q0} delta={d}");
        }
    }

    #[test]
    fn cross_check_agrees_on_the_family() {
        // at q0 = 2 the window inequality fails; at q0 = 3 both hold
        let r = run(&family(2.0, 1.0, 2.0, 2.0), "T2_8", PathChoice::CrossCheck).unwrap();
        assert_eq!(r.verdict, Verdict::NotSatisfied);
        let r = run(&family(2.0, 1.0, 3.0, 2.0), "T2_8", PathChoice::CrossCheck).unwrap();
        assert_eq!(r.verdict, Verdict::Satisfied);
        assert!(r.components.iter().any(|c| c.evidence.iter().any(|e| matches!(e, Evidence::Limit { .. }))));
    }

    #[test]
    fn refined_search_records_constants() {
        let r = run(&family(2.0, 1.0, 2.0, 2.0), "T2_11", PathChoice::Auto).unwrap();
        assert!(!r.components.is_empty());
        for c in &r.components {
            assert!(c.evidence.iter().any(|e| matches!(e, Evidence::Constants { .. })));
        }
    }

    #[test]
    fn euler_only_path_rejects_general_coefficients() {
        let mut spec = family(2.0, 1.0, 2.0, 2.0);
        spec.q = CoefficientFunction::expression("2*t^(2/3)").unwrap();
        assert!(matches!(run(&spec, "E2_1", PathChoice::Euler), Err(CriteriaError::Euler(_))));
    }

    #[test]
    fn combination_rules() {
        use Verdict::*;
        assert_eq!(Verdict::combine([Satisfied, Satisfied]), Satisfied);
        assert_eq!(Verdict::combine([Satisfied, Inconclusive]), Inconclusive);
        assert_eq!(Verdict::combine([Inconclusive, NotSatisfied]), NotSatisfied);
        assert_eq!(Verdict::combine([]), Satisfied);
    }
}
