//! Configuration, orchestration and report output.
//!
//! A run validates the equation, certifies that it is noncanonical,
//! evaluates the requested criteria and folds them into the two top-level
//! conclusions. Hypothesis failures still yield a report.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::{check_noncanonical_with, CanonicalError, CanonicalOptions, CanonicalProfile, ProfileSummary};
use crate::criteria::numeric::{self, horizon as effective_horizon};
use crate::criteria::{
    conclude, CriteriaError, CriterionId, CriterionResult, EvalOptions, EvalPath, Evaluator, LambdaMu, PathChoice,
    Rho, Theorem, TopVerdict, Verdict,
};
use crate::model::{
    validate_spec, AdvancedArgument, CoefficientFunction, EquationSpec, PowerTerm, RawSpec, SpecError,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientConfig {
    #[serde(rename = "powerlaw")]
    PowerLaw { coef: f64, exp: f64 },
    Sum { terms: Vec<PowerTerm> },
    Expr { body: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArgumentConfig {
    Proportional { delta: f64 },
    Shift { c: f64 },
    Expr {
        body: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        derivative: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquationConfig {
    pub r1: CoefficientConfig,
    pub r2: CoefficientConfig,
    pub q: CoefficientConfig,
    pub sigma: ArgumentConfig,
    /// Exact rationals such as `"5/3"`.
    pub alpha: String,
    pub beta: String,
    pub gamma: String,
    pub t0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CriteriaSelection {
    /// The string `"all"`.
    Keyword(String),
    List(Vec<String>),
}

impl Default for CriteriaSelection {
    fn default() -> Self {
        CriteriaSelection::Keyword("all".into())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

fn default_grid_ratio() -> f64 {
    1.25
}
fn default_tolerance() -> f64 {
    1e-8
}
fn default_margin() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub equation: EquationConfig,
    #[serde(default)]
    pub criteria: CriteriaSelection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default = "default_grid_ratio")]
    pub grid_ratio: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_margin")]
    pub margin: f64,
    /// Weight functions for the Riccati theorems; codes as in criterion ids.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_choices: Option<Vec<String>>,
    /// `[lambda, mu]` pairs for the refined theorems; absent means search.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_mu: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub cross_check: bool,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl AnalysisError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AnalysisError::Config(_) => 2,
            AnalysisError::Numeric(_) | AnalysisError::Io(_) => 4,
        }
    }
}

fn coefficient(c: &CoefficientConfig, name: &str) -> Result<CoefficientFunction, AnalysisError> {
    Ok(match c {
        CoefficientConfig::PowerLaw { coef, exp } => CoefficientFunction::power_law(*coef, *exp),
        CoefficientConfig::Sum { terms } => CoefficientFunction::sum(terms.clone()),
        CoefficientConfig::Expr { body } => CoefficientFunction::expression(body)
            .map_err(|e| AnalysisError::Config(format!("{name}: {e}")))?,
    })
}

impl EquationConfig {
    pub fn to_raw(&self) -> Result<RawSpec, AnalysisError> {
        let sigma = match &self.sigma {
            ArgumentConfig::Proportional { delta } => AdvancedArgument::proportional(*delta),
            ArgumentConfig::Shift { c } => AdvancedArgument::shift(*c),
            ArgumentConfig::Expr { body, derivative } => AdvancedArgument::expression(body, derivative.as_deref())
                .map_err(|e| AnalysisError::Config(format!("sigma: {e}")))?,
        };
        Ok(RawSpec {
            r1: coefficient(&self.r1, "r1")?,
            r2: coefficient(&self.r2, "r2")?,
            q: coefficient(&self.q, "q")?,
            sigma,
            alpha: self.alpha.clone(),
            beta: self.beta.clone(),
            gamma: self.gamma.clone(),
            t0: self.t0,
        })
    }
}

impl AnalysisConfig {
    pub fn from_json(text: &str) -> Result<Self, AnalysisError> {
        let cfg: AnalysisConfig = serde_json::from_str(text).map_err(|e| AnalysisError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, AnalysisError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AnalysisError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Range checks on the numeric settings.
    pub fn check(&self) -> Result<(), AnalysisError> {
        let bad = |m: String| Err(AnalysisError::Config(m));
        if let Some(h) = self.horizon {
            if !(h > 10.0 * self.equation.t0) {
                return bad(format!("horizon {h} must exceed 10 * t0"));
            }
        }
        if !(self.grid_ratio > 1.0 && self.grid_ratio <= 2.0) {
            return bad(format!("grid_ratio {} must lie in (1, 2]", self.grid_ratio));
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1e-2) {
            return bad(format!("tolerance {} must lie in (0, 1e-2)", self.tolerance));
        }
        if !(self.margin >= 0.0 && self.margin < 1.0) {
            return bad(format!("margin {} must lie in [0, 1)", self.margin));
        }
        if let CriteriaSelection::Keyword(k) = &self.criteria {
            if k != "all" {
                return bad(format!("criteria must be \"all\" or a list, got {k:?}"));
            }
        }
        self.criterion_ids()?;
        Ok(())
    }

    fn rhos(&self) -> Result<Vec<Rho>, AnalysisError> {
        match &self.rho_choices {
            None => Ok(Rho::standard()),
            Some(list) => list
                .iter()
                .map(|s| Rho::parse(s).ok_or_else(|| AnalysisError::Config(format!("unknown weight function {s:?}"))))
                .collect(),
        }
    }

    /// The criteria to evaluate, in report order.
    pub fn criterion_ids(&self) -> Result<Vec<CriterionId>, AnalysisError> {
        match &self.criteria {
            CriteriaSelection::List(codes) => codes
                .iter()
                .map(|c| c.parse::<CriterionId>().map_err(|e| AnalysisError::Config(e.to_string())))
                .collect(),
            CriteriaSelection::Keyword(_) => {
                let rhos = self.rhos()?;
                let mut out: Vec<Theorem> = Theorem::catalog(&rhos, None);
                if let Some(pairs) = &self.lambda_mu {
                    let refined = |t: &Theorem| {
                        matches!(t, Theorem::Refined(_) | Theorem::RefinedRiccati(..) | Theorem::RefinedRiccatiPi1PowAlpha(_))
                    };
                    let searched: Vec<Theorem> = out.iter().filter(|t| refined(t)).cloned().collect();
                    out.retain(|t| !refined(t));
                    for [lambda, mu] in pairs {
                        let lm = LambdaMu { lambda: *lambda, mu: *mu };
                        out.extend(searched.iter().map(|t| t.with_constants(lm)));
                    }
                }
                Ok(out.into_iter().map(CriterionId::Theorem).collect())
            }
        }
    }

    pub fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            horizon: self.horizon,
            grid_ratio: self.grid_ratio,
            tail_window: EvalOptions::default().tail_window,
            tol: self.tolerance,
            margin: self.margin,
            path: if self.cross_check { PathChoice::CrossCheck } else { PathChoice::Auto },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    HypothesisFailed,
}

/// The only fields that differ between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunStats {
    pub generated_at_unix: u64,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileReport {
    pub summary: ProfileSummary,
    pub pi1_at_t0: f64,
    pub pi2_at_t0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub equation: EquationConfig,
    pub hypotheses: Vec<crate::model::HypothesisCheck>,
    pub settings: EvalOptions,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileReport>,
    pub results: Vec<CriterionResult>,
    pub property_a: TopVerdict,
    pub oscillatory: TopVerdict,
    pub discrepancies: Vec<String>,
    pub run: RunStats,
}

impl AnalysisReport {
    /// 0 for a completed run, 3 when a hypothesis failed.
    pub fn exit_code(&self) -> i32 {
        match self.status {
            RunStatus::Ok => 0,
            RunStatus::HypothesisFailed => 3,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON without the run statistics, for byte comparison.
    pub fn stable_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(o) = v.as_object_mut() {
            o.remove("run");
        }
        serde_json::to_string_pretty(&v).expect("report serializes")
    }

    pub fn write_json(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_json().as_bytes())?;
        f.write_all(b"\n")
    }
}

impl fmt::Display for AnalysisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: &TopVerdict| match v.verdict {
            Verdict::Satisfied => format!("satisfied (by {})", v.granted_by.join(", ")),
            Verdict::NotSatisfied => "not satisfied".into(),
            Verdict::Inconclusive => "inconclusive".into(),
        };
        if let Some(e) = &self.error {
            writeln!(f, "hypothesis failed: {e}")?;
        }
        for r in &self.results {
            let tag = if r.applicable { format!("{:?}", r.verdict) } else { "not applicable".into() };
            writeln!(f, "{:<24} {tag}", r.id.code())?;
        }
        writeln!(f, "property A:  {}", show(&self.property_a))?;
        write!(f, "oscillatory: {}", show(&self.oscillatory))
    }
}

/// One row of plot data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesRow {
    pub criterion: String,
    pub t: f64,
    pub value: f64,
    pub threshold: Option<f64>,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: AnalysisReport,
    pub series: Vec<SeriesRow>,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn inconclusive() -> TopVerdict {
    TopVerdict { verdict: Verdict::Inconclusive, granted_by: Vec::new() }
}

fn is_config_error(e: &SpecError) -> bool {
    matches!(
        e,
        SpecError::NonOddExponent { .. } | SpecError::NonPositiveT0(_) | SpecError::BadExpression { .. } | SpecError::Malformed(_)
    )
}

/// Runs the analysis. `with_series` also collects criterion functions for
/// plotting, evaluating numerically where the closed forms were used.
pub fn run(config: &AnalysisConfig, with_series: bool) -> Result<RunOutput, AnalysisError> {
    let started = Instant::now();
    let ids = config.criterion_ids()?;
    let opts = config.eval_options();
    let mut report = AnalysisReport {
        schema_version: SCHEMA_VERSION,
        status: RunStatus::Ok,
        error: None,
        equation: config.equation.clone(),
        hypotheses: Vec::new(),
        settings: opts.clone(),
        profile: None,
        results: Vec::new(),
        property_a: inconclusive(),
        oscillatory: inconclusive(),
        discrepancies: Vec::new(),
        run: RunStats { generated_at_unix: unix_now(), elapsed_ms: 0 },
    };
    let finish = |mut report: AnalysisReport, series| {
        report.run.elapsed_ms = started.elapsed().as_millis() as u64;
        Ok(RunOutput { report, series })
    };

    let spec = match validate_spec(config.equation.to_raw()?) {
        Ok(s) => s,
        Err(e) if is_config_error(&e) => return Err(AnalysisError::Config(e.to_string())),
        Err(e) => {
            report.status = RunStatus::HypothesisFailed;
            report.error = Some(e.to_string());
            return finish(report, Vec::new());
        }
    };
    report.hypotheses = spec.checks.clone();

    let h = effective_horizon(&spec, &opts);
    let profile = match check_noncanonical_with(&spec, CanonicalOptions::for_horizon(&spec, h)) {
        Ok(p) => p,
        Err(CanonicalError::Numeric(e)) => return Err(AnalysisError::Numeric(e.to_string())),
        Err(e) => {
            report.status = RunStatus::HypothesisFailed;
            report.error = Some(e.to_string());
            return finish(report, Vec::new());
        }
    };
    report.profile = Some(ProfileReport {
        summary: profile.summary(),
        pi1_at_t0: profile.pi1(spec.t0),
        pi2_at_t0: profile.pi2(spec.t0),
    });

    let evaluator = Evaluator::new(&spec, &profile, opts.clone());
    let results: Vec<CriterionResult> = ids
        .par_iter()
        .map(|id| evaluator.evaluate(id))
        .collect::<Result<_, CriteriaError>>()
        .map_err(|e| AnalysisError::Numeric(e.to_string()))?;

    let conclusions = conclude(&spec, results);
    report.discrepancies = discrepancies(&conclusions.results);
    report.property_a = conclusions.property_a;
    report.oscillatory = conclusions.oscillatory;
    report.results = conclusions.results;

    let series = if with_series { plot_series(&spec, &profile, &report.results, &opts) } else { Vec::new() };
    finish(report, series)
}

/// Notes where the two routes did not agree fully or where the closed
/// forms had to give way to numerics.
fn discrepancies(results: &[CriterionResult]) -> Vec<String> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for r in results.iter().flat_map(|r| r.walk()) {
        for n in &r.notes {
            let relevant = n.starts_with("numeric cross-check: Inconclusive") || n.starts_with("closed forms do not decide");
            if relevant && seen.insert((r.id.code(), n.clone())) {
                out.push(format!("{}: {n}", r.id.code()));
            }
        }
    }
    out
}

fn plot_series(
    spec: &EquationSpec,
    profile: &CanonicalProfile,
    results: &[CriterionResult],
    opts: &EvalOptions,
) -> Vec<SeriesRow> {
    let alpha = spec.alpha_f();
    let mut done = std::collections::BTreeSet::new();
    let mut nodes = Vec::new();
    for r in results.iter().flat_map(|r| r.walk()) {
        if let CriterionId::Condition(c) = &r.id {
            if r.path != EvalPath::Implication && done.insert(r.id.code()) {
                nodes.push((r, c.clone()));
            }
        }
    }
    let computed: Vec<Vec<SeriesRow>> = nodes
        .par_iter()
        .map(|(r, c)| {
            let series = if r.series.is_empty() {
                numeric::evaluate(spec, profile, c, opts).map(|o| o.series).unwrap_or_default()
            } else {
                r.series.clone()
            };
            let threshold = c.threshold(alpha);
            series
                .into_iter()
                .map(|(t, value)| SeriesRow { criterion: r.id.code(), t, value, threshold })
                .collect()
        })
        .collect();
    computed.into_iter().flatten().collect()
}

pub fn write_csv(rows: &[SeriesRow], path: &Path) -> Result<(), AnalysisError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| AnalysisError::Io(e.into()))?;
    for row in rows {
        w.serialize(row).map_err(|e| AnalysisError::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const FRACTIONAL: &str = r#"{
        "equation": {
            "r1": {"kind": "powerlaw", "coef": 1.0, "exp": 4.0},
            "r2": {"kind": "powerlaw", "coef": 1.0, "exp": 3.0},
            "q": {"kind": "powerlaw", "coef": 1.0, "exp": 6.0},
            "sigma": {"kind": "proportional", "delta": 2.0},
            "alpha": "5/3", "beta": "1/7", "gamma": "9/5", "t0": 1.0
        },
        "criteria": ["T2_1"]
    }"#;

    #[test]
    fn parses_and_grants_property_a() {
        let cfg = AnalysisConfig::from_json(FRACTIONAL).unwrap();
        let out = run(&cfg, false).unwrap();
        assert_eq!(out.report.property_a.verdict, Verdict::Satisfied);
        assert_eq!(out.report.property_a.granted_by, vec!["T2_1".to_string()]);
        assert_eq!(out.report.exit_code(), 0);
    }

    #[test]
    fn settings_are_range_checked() {
        for (k, v) in [("grid_ratio", "3.0"), ("tolerance", "0.5"), ("horizon", "5.0")] {
            let text = FRACTIONAL.replacen("\"criteria\"", &format!("\"{k}\": {v}, \"criteria\""), 1);
            assert!(matches!(AnalysisConfig::from_json(&text), Err(AnalysisError::Config(_))), "{k}");
        }
        let text = FRACTIONAL.replace("\"5/3\"", "\"2/3\"");
        let cfg = AnalysisConfig::from_json(&text).unwrap();
        assert!(matches!(run(&cfg, false), Err(AnalysisError::Config(_))));
    }

    #[test]
    fn canonical_operator_is_a_hypothesis_failure() {
        let text = FRACTIONAL.replace("\"exp\": 4.0", "\"exp\": 1.0");
        let out = run(&AnalysisConfig::from_json(&text).unwrap(), false).unwrap();
        assert_eq!(out.report.status, RunStatus::HypothesisFailed);
        assert_eq!(out.report.exit_code(), 3);
        assert!(out.report.results.is_empty());
    }

    #[test]
    fn empty_selection_reports_only_the_profile() {
        let text = FRACTIONAL.replace("[\"T2_1\"]", "[]");
        let out = run(&AnalysisConfig::from_json(&text).unwrap(), false).unwrap();
        assert!(out.report.results.is_empty());
        assert!(out.report.profile.is_some());
        assert_eq!(out.report.exit_code(), 0);
    }

    #[test]
    fn identical_runs_give_identical_reports() {
        let cfg = AnalysisConfig::from_json(FRACTIONAL).unwrap();
        let a = run(&cfg, false).unwrap().report.stable_json();
        let b = run(&cfg, false).unwrap().report.stable_json();
        assert_eq!(a, b);
        assert!(a.contains("\"schema_version\": 1"));
    }

    #[test]
    fn all_expands_to_the_catalog_with_given_constants() {
        let mut cfg = AnalysisConfig::from_json(FRACTIONAL).unwrap();
        cfg.criteria = CriteriaSelection::default();
        let n = cfg.criterion_ids().unwrap().len();
        cfg.lambda_mu = Some(vec![[0.1, 0.2], [0.0, 0.0]]);
        let ids = cfg.criterion_ids().unwrap();
        assert!(ids.iter().any(|i| i.code() == "T2_11(0.1,0.2)"));
        assert!(!ids.iter().any(|i| i.code() == "T2_11"));
        assert_eq!(ids.len(), n + 5);
    }

    #[test]
    fn series_cover_closed_form_results() {
        let cfg = AnalysisConfig::from_json(FRACTIONAL).unwrap();
        let out = run(&cfg, true).unwrap();
        assert!(out.series.iter().any(|r| r.criterion == "E2_1"));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_csv(&out.series, &p).unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        assert!(text.starts_with("criterion,t,value,threshold"));
    }
}
