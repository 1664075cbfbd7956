//! Finite-horizon evaluation of conditions. Never concludes `NotSatisfied`:
//! a finite horizon cannot bound a limsup from above or rule out divergence.

use rayon::prelude::*;

use crate::canonical::CanonicalProfile;
use crate::expr::Expr;
use crate::integrate::limits::{geometric_grid, LimitEstimate, LimitKind};
use crate::integrate::nested::{Integrand, Nest};
use crate::integrate::tail::{assess_partials, TailPolicy, TailResult};
use crate::model::EquationSpec;

use super::forms::{shape, Atom, LimsupForm, Monomial, Shape, Starts, WindowKind};
use super::ids::{Condition, Rho};
use super::kernels::{kernel_window, nested_levels, weighted_pow};
use super::{EvalOptions, Evidence, Verdict};

/// Numeric values of the named functions the condition forms use.
pub struct AtomEval<'a> {
    spec: &'a EquationSpec,
    profile: &'a CanonicalProfile,
    rho: Option<(Expr, Expr)>,
}

impl<'a> AtomEval<'a> {
    pub fn new(spec: &'a EquationSpec, profile: &'a CanonicalProfile, rho: Option<&Rho>) -> Result<Self, String> {
        let rho = match rho {
            Some(Rho::Custom { body, derivative }) => {
                let f = Expr::parse(body).map_err(|e| format!("weight {body:?}: {e}"))?;
                let d = Expr::parse(derivative).map_err(|e| format!("derivative {derivative:?}: {e}"))?;
                Some((f, d))
            }
            _ => None,
        };
        Ok(AtomEval { spec, profile, rho })
    }

    pub fn value(&self, atom: Atom, t: f64) -> f64 {
        match atom {
            Atom::Pi1 => self.profile.pi1(t),
            Atom::Pi1Sigma => self.profile.pi1(self.spec.sigma.eval(t)),
            Atom::R1 => self.spec.r1.eval(t),
            Atom::R2 => self.spec.r2.eval(t),
            Atom::PiSigma => self.profile.pi(self.spec.sigma.eval(t)),
            Atom::Rho => self.rho.as_ref().map_or(f64::NAN, |(f, _)| f.eval(t)),
            Atom::RhoDerivAbs => self.rho.as_ref().map_or(f64::NAN, |(_, d)| d.eval(t).abs()),
        }
    }

    fn eval(&self, m: &Monomial, t: f64) -> f64 {
        m.eval(t, &|a, s| self.value(a, s))
    }
}

/// Outcome of one numeric evaluation, plus the sampled criterion function.
#[derive(Debug, Clone)]
pub struct NumericOutcome {
    pub verdict: Verdict,
    pub evidence: Vec<Evidence>,
    pub notes: Vec<String>,
    /// `(t, value)` samples of the criterion function at the first start.
    pub series: Vec<(f64, f64)>,
}

/// `pre(t) * ∫_T^t (pos Q_T^(1/beta) - neg)` at increasing `ts`; NaN where
/// the sweep could not reach.
pub fn limsup_form_values(
    spec: &EquationSpec,
    atoms: &AtomEval<'_>,
    form: &LimsupForm,
    big_t: f64,
    ts: &[f64],
) -> Vec<f64> {
    let b = spec.beta.recip();
    let levels: Vec<Integrand<'_>> = vec![
        Box::new(|u, _| spec.q.eval(u)),
        Box::new(move |u, inner| {
            let pos = weighted_pow(atoms.eval(&form.pos, u), inner, b);
            match &form.neg {
                Some(neg) => pos - atoms.eval(neg, u),
                None => pos,
            }
        }),
    ];
    let sweep = Nest::forward(big_t, levels).sweep(ts);
    ts.iter()
        .enumerate()
        .map(|(i, &t)| sweep.values.get(i).map_or(f64::NAN, |v| atoms.eval(&form.pre, t) * v[1]))
        .collect()
}

fn finite_prefix(ts: &[f64], values: &[f64]) -> usize {
    ts.iter().zip(values).take_while(|(_, v)| v.is_finite()).count()
}

pub fn horizon(spec: &EquationSpec, opts: &EvalOptions) -> f64 {
    opts.horizon.unwrap_or(1e8 * spec.t0)
}

pub fn evaluate(
    spec: &EquationSpec,
    profile: &CanonicalProfile,
    cond: &Condition,
    opts: &EvalOptions,
) -> Result<NumericOutcome, String> {
    let rho = match cond {
        Condition::Riccati(r) | Condition::RefinedRiccati(r, _) => Some(r),
        _ => None,
    };
    let atoms = AtomEval::new(spec, profile, rho)?;
    Ok(match shape(spec, cond) {
        Shape::Divergence { levels, weight } => divergence(spec, &atoms, levels, &weight, opts),
        Shape::Limsup(form) => limsup(spec, &atoms, &form, opts),
        Shape::Window(kind) => window(spec, kind, opts),
    })
}

fn divergence(
    spec: &EquationSpec,
    atoms: &AtomEval<'_>,
    levels: usize,
    weight: &Monomial,
    opts: &EvalOptions,
) -> NumericOutcome {
    let h = horizon(spec, opts);
    let doublings = (h / spec.t0).log2().floor().max(1.0) as i32;
    let targets: Vec<f64> = (0..=doublings).map(|k| spec.t0 * 2f64.powi(k)).collect();
    let w = |u: f64| atoms.eval(weight, u);
    let nest = Nest::forward(spec.t0, nested_levels(spec, Some(&w), levels));
    let sweep = nest.sweep(&targets);
    let partials = sweep.top();
    let mut notes = Vec::new();
    if let Some(at) = sweep.truncated_at {
        notes.push(format!("partial integrals stopped being finite near t = {at:e}"));
    }
    let result = if partials.len() >= 2 {
        assess_partials(&partials, opts.tol, &TailPolicy::default(), spec.t0)
    } else {
        TailResult::Inconclusive { partial_value: partials.first().copied().unwrap_or(0.0), horizon: spec.t0 }
    };
    let verdict = if result.is_diverged() { Verdict::Satisfied } else { Verdict::Inconclusive };
    if result.is_converged() {
        notes.push("the integral appears to converge; a finite horizon cannot certify that".into());
    }
    NumericOutcome {
        verdict,
        evidence: vec![Evidence::Tail { result }],
        notes,
        series: targets.iter().copied().zip(partials).collect(),
    }
}

fn limsup(spec: &EquationSpec, atoms: &AtomEval<'_>, form: &LimsupForm, opts: &EvalOptions) -> NumericOutcome {
    let h = horizon(spec, opts);
    let mut evidence = Vec::new();
    let mut notes = Vec::new();
    let mut verdicts = Vec::new();
    let mut series = Vec::new();
    for (i, &big_t) in form.starts.points().iter().enumerate() {
        let ts = geometric_grid(big_t * opts.grid_ratio, opts.grid_ratio, h);
        let values = limsup_form_values(spec, atoms, form, big_t, &ts);
        let k = finite_prefix(&ts, &values);
        if i == 0 {
            series = ts[..k].iter().copied().zip(values[..k].iter().copied()).collect();
        }
        if k == 0 {
            notes.push(format!("start {big_t}: no finite samples below the horizon"));
            verdicts.push(Verdict::Inconclusive);
            continue;
        }
        if k < ts.len() {
            notes.push(format!("start {big_t}: samples end at t = {:e}", ts[k - 1]));
        }
        match LimitEstimate::from_samples(LimitKind::Limsup, &ts[..k], &values[..k], opts.tail_window) {
            Ok(estimate) => {
                let ok = estimate.exceeds(form.threshold, opts.margin);
                verdicts.push(if ok { Verdict::Satisfied } else { Verdict::Inconclusive });
                evidence.push(Evidence::Limit { start: Some(big_t), estimate, threshold: form.threshold });
            }
            Err(e) => {
                notes.push(format!("start {big_t}: {e}"));
                verdicts.push(Verdict::Inconclusive);
            }
        }
    }
    let verdict = match form.starts {
        Starts::Every(_) => Verdict::combine(verdicts.iter().copied()),
        Starts::Any(_) => {
            if verdicts.contains(&Verdict::Satisfied) {
                Verdict::Satisfied
            } else {
                Verdict::Inconclusive
            }
        }
    };
    NumericOutcome { verdict, evidence, notes, series }
}

fn window_values(spec: &EquationSpec, kind: WindowKind, ts: &[f64]) -> Vec<f64> {
    match kind {
        WindowKind::FromStart => {
            let mut points: Vec<f64> = ts.iter().flat_map(|&t| [t, spec.sigma.eval(t)]).collect();
            points.sort_by(f64::total_cmp);
            points.dedup();
            let nest = Nest::forward(spec.t0, nested_levels(spec, None, 3));
            let sweep = nest.sweep(&points);
            let at = |x: f64| {
                let i = points.partition_point(|&p| p < x);
                sweep.values.get(i).map_or(f64::NAN, |v| v[2])
            };
            ts.iter().map(|&t| at(spec.sigma.eval(t)) - at(t)).collect()
        }
        _ => ts.par_iter().map(|&t| kernel_window(spec, t, kind).unwrap_or(f64::NAN)).collect(),
    }
}

fn window(spec: &EquationSpec, kind: WindowKind, opts: &EvalOptions) -> NumericOutcome {
    let threshold = (-1f64).exp();
    let ts = geometric_grid(spec.t0, opts.grid_ratio, horizon(spec, opts));
    let values = window_values(spec, kind, &ts);
    let k = finite_prefix(&ts, &values);
    let series: Vec<(f64, f64)> = ts[..k].iter().copied().zip(values[..k].iter().copied()).collect();
    let mut notes = Vec::new();
    if k < ts.len() {
        notes.push(format!("window values stop being finite near t = {:e}", ts[k.min(ts.len() - 1)]));
    }
    if k == 0 {
        return NumericOutcome { verdict: Verdict::Inconclusive, evidence: Vec::new(), notes, series };
    }
    match LimitEstimate::from_samples(LimitKind::Liminf, &ts[..k], &values[..k], opts.tail_window) {
        Ok(estimate) => {
            let verdict = if estimate.exceeds(threshold, opts.margin) { Verdict::Satisfied } else { Verdict::Inconclusive };
            NumericOutcome { verdict, evidence: vec![Evidence::Limit { start: None, estimate, threshold }], notes, series }
        }
        Err(e) => {
            notes.push(e.to_string());
            NumericOutcome { verdict: Verdict::Inconclusive, evidence: Vec::new(), notes, series }
        }
    }
}
