//! Oscillation and property-A criteria for third-order half-linear
//! advanced differential equations
//! `(r2 ((r1 (y')^alpha)')^beta)' + q y^gamma(sigma(t)) = 0`
//! with a noncanonical operator.

pub mod analysis;
pub mod canonical;
pub mod criteria;
pub mod euler;
pub mod expr;
pub mod integrate;
pub mod model;
pub mod probe;
pub mod rational;

pub use analysis::{run, AnalysisConfig, AnalysisError, AnalysisReport, RunOutput, RunStatus};
pub use canonical::{check_noncanonical, CanonicalError, CanonicalProfile};
pub use criteria::{
    conclude, evaluate_criterion, Conclusions, ConclusionKind, Condition, CriterionId, CriterionResult, EvalOptions,
    Evaluator, PathChoice, Rho, Theorem, Verdict,
};
pub use euler::{euler_reduce, EulerSpec, Reduction};
pub use expr::{Expr, ExprError};
pub use integrate::{IntegrateError, LimitEstimate, TailResult};
pub use model::*;
pub use probe::{manufacture, ManufacturedSolution, SignClass};
pub use rational::{OddRational, RationalError};
