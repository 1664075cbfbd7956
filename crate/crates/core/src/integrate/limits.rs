//! Finite-horizon estimates of `limsup` / `liminf`.
//!
//! A criterion function is sampled on the geometric grid `t_k = t_start * ratio^k`
//! up to the horizon. The estimate is the extremum over the last
//! `tail_window` samples. For a limsup this can only under-report, so it is
//! trusted for "exceeds the threshold" and never for "stays below".

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::IntegrateError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitKind {
    Limsup,
    Liminf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Rising,
    Falling,
    Plateau,
}

/// Relative spread of the tail window below which the trend is a plateau.
pub const PLATEAU_SPREAD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitEstimate {
    pub kind: LimitKind,
    pub estimate: f64,
    pub horizon: f64,
    pub tail_window_width: usize,
    pub trend: Trend,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitPolicy {
    pub grid_ratio: f64,
    /// Last grid point (absolute).
    pub horizon: f64,
    pub tail_window: usize,
}

impl LimitPolicy {
    /// Default grid for an equation starting at `t0`: ratio 1.25 up to `1e8 * t0`.
    pub fn for_start(t0: f64) -> Self {
        LimitPolicy { grid_ratio: 1.25, horizon: 1e8 * t0, tail_window: 20 }
    }
}

/// `t_start * ratio^k` for every `k` with the point not above `end`.
pub fn geometric_grid(t_start: f64, ratio: f64, end: f64) -> Vec<f64> {
    assert!(ratio > 1.0, "grid ratio must exceed 1");
    let mut out = Vec::new();
    let mut k = 0;
    loop {
        let t = t_start * ratio.powi(k);
        // small slack so an end point that is an exact grid power is kept
        if t > end * (1.0 + 1e-12) {
            break;
        }
        out.push(t);
        k += 1;
    }
    out
}

impl LimitEstimate {
    /// Builds the estimate from precomputed samples on an increasing grid.
    pub fn from_samples(
        kind: LimitKind,
        ts: &[f64],
        values: &[f64],
        tail_window: usize,
    ) -> Result<Self, IntegrateError> {
        assert_eq!(ts.len(), values.len());
        assert!(!ts.is_empty(), "no samples");
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(IntegrateError::NonFiniteCriterionFunction { at: ts[i] });
        }
        let width = tail_window.clamp(1, values.len());
        let window = &values[values.len() - width..];
        let (lo, hi) = window
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let scale = lo.abs().max(hi.abs());
        let spread = if scale == 0.0 { 0.0 } else { (hi - lo) / scale };
        let trend = if spread < PLATEAU_SPREAD {
            Trend::Plateau
        } else if window[width - 1] > window[0] {
            Trend::Rising
        } else {
            Trend::Falling
        };
        let estimate = match kind {
            LimitKind::Limsup => hi,
            LimitKind::Liminf => lo,
        };
        Ok(LimitEstimate {
            kind,
            estimate,
            horizon: *ts.last().unwrap(),
            tail_window_width: width,
            trend,
        })
    }

    /// Whether the estimate clears `threshold` by the relative `margin`.
    pub fn exceeds(&self, threshold: f64, margin: f64) -> bool {
        self.estimate > threshold + margin * threshold.abs()
    }
}

fn estimate<G>(kind: LimitKind, g: G, t_start: f64, policy: &LimitPolicy) -> Result<LimitEstimate, IntegrateError>
where
    G: Fn(f64) -> f64 + Sync,
{
    let ts = geometric_grid(t_start, policy.grid_ratio, policy.horizon);
    // fixed grid order keeps the parallel evaluation deterministic
    let values: Vec<f64> = ts.par_iter().map(|&t| g(t)).collect();
    LimitEstimate::from_samples(kind, &ts, &values, policy.tail_window)
}

pub fn estimate_limsup<G>(g: G, t_start: f64, policy: &LimitPolicy) -> Result<LimitEstimate, IntegrateError>
where
    G: Fn(f64) -> f64 + Sync,
{
    estimate(LimitKind::Limsup, g, t_start, policy)
}

pub fn estimate_liminf<G>(g: G, t_start: f64, policy: &LimitPolicy) -> Result<LimitEstimate, IntegrateError>
where
    G: Fn(f64) -> f64 + Sync,
{
    estimate(LimitKind::Liminf, g, t_start, policy)
}
