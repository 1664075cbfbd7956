//! Folding criterion results into the two top-level conclusions.

use serde::Serialize;

use super::ids::{ConclusionKind, Condition, CriterionId, Theorem};
use super::{CriterionResult, EvalPath, Verdict};
use crate::model::EquationSpec;

/// A top-level conclusion and the criteria that grant it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopVerdict {
    /// `Satisfied` when some criterion grants it, `NotSatisfied` when every
    /// relevant evaluated theorem fails, `Inconclusive` otherwise.
    pub verdict: Verdict,
    pub granted_by: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conclusions {
    pub property_a: TopVerdict,
    pub oscillatory: TopVerdict,
    /// Input results after the implications between conditions were applied.
    pub results: Vec<CriterionResult>,
}

fn satisfied_condition(results: &[CriterionResult], target: &Condition) -> Option<String> {
    results.iter().flat_map(|r| r.walk()).find_map(|r| match &r.id {
        CriterionId::Condition(c) if c == target && r.verdict == Verdict::Satisfied => Some(r.id.code()),
        _ => None,
    })
}

fn is_search(th: &Theorem) -> bool {
    matches!(th, Theorem::Refined(None) | Theorem::RefinedRiccati(_, None) | Theorem::RefinedRiccatiPi1PowAlpha(None))
}

/// Upgrades implied conditions in place and recomputes composite verdicts.
fn upgrade(r: &mut CriterionResult, window: &Option<String>, nested: &Option<String>) {
    for c in &mut r.components {
        upgrade(c, window, nested);
    }
    match &r.id {
        CriterionId::Condition(Condition::DoubleWindow) => grant(r, window),
        CriterionId::Condition(Condition::CoefficientDivergence) => grant(r, nested),
        CriterionId::Theorem(th) if r.applicable && !r.components.is_empty() => {
            let vs = r.components.iter().map(|c| c.verdict);
            r.verdict = if is_search(th) {
                let vs: Vec<Verdict> = vs.collect();
                if vs.contains(&Verdict::Satisfied) {
                    Verdict::Satisfied
                } else if vs.iter().all(|v| *v == Verdict::NotSatisfied) {
                    Verdict::NotSatisfied
                } else {
                    Verdict::Inconclusive
                }
            } else {
                Verdict::combine(vs)
            };
        }
        _ => {}
    }
}

fn grant(r: &mut CriterionResult, by: &Option<String>) {
    if let Some(code) = by {
        if r.verdict != Verdict::Satisfied {
            r.verdict = Verdict::Satisfied;
            r.path = EvalPath::Implication;
            r.notes.push(format!("implied by {code}"));
        }
    }
}

fn top(results: &[CriterionResult], kinds: &[ConclusionKind]) -> TopVerdict {
    let relevant: Vec<&CriterionResult> = results
        .iter()
        .filter(|r| matches!(r.id, CriterionId::Theorem(_)) && kinds.contains(&r.conclusion_kind))
        .collect();
    let granted_by: Vec<String> = relevant
        .iter()
        .filter(|r| r.applicable && r.verdict == Verdict::Satisfied)
        .map(|r| r.id.code())
        .collect();
    let verdict = if !granted_by.is_empty() {
        Verdict::Satisfied
    } else if !relevant.is_empty() && relevant.iter().all(|r| r.applicable && r.verdict == Verdict::NotSatisfied) {
        Verdict::NotSatisfied
    } else {
        Verdict::Inconclusive
    };
    TopVerdict { verdict, granted_by }
}

/// Applies the implications (window over `[t, sigma(t)]` implies the double
/// window, nested divergence implies divergence of `∫q`) and derives the
/// top-level conclusions. Oscillation also grants property A. The fold is
/// order independent.
pub fn conclude(_spec: &EquationSpec, results: Vec<CriterionResult>) -> Conclusions {
    let window = satisfied_condition(&results, &Condition::Window);
    let nested = satisfied_condition(&results, &Condition::NestedDivergence);
    let mut results = results;
    for r in &mut results {
        upgrade(r, &window, &nested);
    }
    let oscillatory = top(&results, &[ConclusionKind::Oscillatory]);
    let direct = top(&results, &[ConclusionKind::PropertyA]);
    let mut property_a = top(&results, &[ConclusionKind::PropertyA, ConclusionKind::Oscillatory]);
    property_a.granted_by = direct.granted_by.into_iter().chain(oscillatory.granted_by.iter().cloned()).collect();
    Conclusions { property_a, oscillatory, results }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(c: Condition, v: Verdict) -> CriterionResult {
        let mut r = CriterionResult::new(CriterionId::Condition(c), EvalPath::Numeric);
        r.verdict = v;
        r
    }

    fn theorem(th: Theorem, parts: Vec<CriterionResult>) -> CriterionResult {
        let mut r = CriterionResult::new(CriterionId::Theorem(th), EvalPath::Composite);
        r.verdict = Verdict::combine(parts.iter().map(|p| p.verdict));
        r.components = parts;
        r
    }

    fn spec() -> EquationSpec {
        crate::euler::EulerSpec::example_shape(2.0, 1.0, 2.0, 2.0).to_equation().unwrap()
    }

    #[test]
    fn all_inconclusive_stays_inconclusive() {
        let rs = vec![theorem(Theorem::NestedDivergence, vec![leaf(Condition::NestedDivergence, Verdict::Inconclusive)])];
        let c = conclude(&spec(), rs);
        assert_eq!(c.property_a.verdict, Verdict::Inconclusive);
        assert_eq!(c.oscillatory.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn window_grants_double_window() {
        let t7 = theorem(
            Theorem::WeightedDivergenceAndWindow,
            vec![
                leaf(Condition::WeightedNestedDivergence, Verdict::Satisfied),
                leaf(Condition::DoubleWindow, Verdict::Inconclusive),
            ],
        );
        let rs = vec![t7, leaf(Condition::Window, Verdict::Satisfied)];
        let c = conclude(&spec(), rs);
        assert_eq!(c.results[0].verdict, Verdict::Satisfied);
        assert_eq!(c.results[0].components[1].path, EvalPath::Implication);
        assert_eq!(c.oscillatory.verdict, Verdict::Satisfied);
        assert_eq!(c.property_a.verdict, Verdict::Satisfied);
        assert_eq!(c.oscillatory.granted_by, vec!["T2_7".to_string()]);
    }

    #[test]
    fn nested_divergence_grants_coefficient_divergence() {
        let rs = vec![
            leaf(Condition::NestedDivergence, Verdict::Satisfied),
            leaf(Condition::CoefficientDivergence, Verdict::NotSatisfied),
        ];
        let c = conclude(&spec(), rs);
        assert_eq!(c.results[1].verdict, Verdict::Satisfied);
    }

    #[test]
    fn order_independent() {
        let a = theorem(Theorem::NestedDivergence, vec![leaf(Condition::NestedDivergence, Verdict::Satisfied)]);
        let b = theorem(Theorem::Windows, vec![leaf(Condition::WindowFromStart, Verdict::NotSatisfied)]);
        let x = conclude(&spec(), vec![a.clone(), b.clone()]);
        let y = conclude(&spec(), vec![b, a]);
        assert_eq!(x.property_a, y.property_a);
        assert_eq!(x.oscillatory, y.oscillatory);
        assert_eq!(x.oscillatory.verdict, Verdict::NotSatisfied);
    }
}
