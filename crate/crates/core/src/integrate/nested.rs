//! Cumulative evaluation of nested integrals.
//!
//! A nest is a stack of levels over a common anchor `A`. Level 0 has
//! cumulative value `C_0(x) = ∫_A^x g_0(u) du`; level `k` integrates
//! `g_k(u, I_{k-1}(u))`, where `I_{k-1} = sign * C_{k-1}` is the inner
//! integral as the formula writes it. `sign = +1` gives inner integrals
//! `∫_A^u`, `sign = -1` gives `∫_u^A`.
//!
//! A sweep walks geometric breakpoints away from the anchor, carrying every
//! level's cumulative value. Inside a panel `[b, x]` the value of `C_k(x)` is
//! `C_k(b)` plus a Gauss-Legendre sum whose nodes need `C_{k-1}`, obtained the
//! same way from `b`. Cost per panel is about `n^depth` integrand calls, and a
//! whole sweep is linear in the number of panels.
//!
//! Panels near the anchor are graded (halving widths) because inner integrals
//! vanish there and fractional powers of them are not smooth.

use super::quadrature::GaussLegendre;

pub type Integrand<'a> = Box<dyn Fn(f64, f64) -> f64 + Send + Sync + 'a>;

/// Default ratio between consecutive breakpoints.
pub const PANEL_RATIO: f64 = 1.05;
const GRADING_LEVELS: i32 = 20;

pub struct Nest<'a> {
    levels: Vec<Integrand<'a>>,
    anchor: f64,
    sign: f64,
    ratio: f64,
}

/// Values of a sweep at its targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    /// `values[i][k]` is `C_k` at the `i`-th target.
    pub values: Vec<Vec<f64>>,
    /// First target that could not be reached because a value became
    /// non-finite. Targets from here on are missing from `values`.
    pub truncated_at: Option<f64>,
}

impl Sweep {
    /// Top-level cumulative values, one per reached target.
    pub fn top(&self) -> Vec<f64> {
        self.values.iter().map(|v| *v.last().unwrap()).collect()
    }
}

impl<'a> Nest<'a> {
    /// Inner integrals run from the anchor outwards: `∫_A^u`.
    pub fn forward(anchor: f64, levels: Vec<Integrand<'a>>) -> Self {
        Nest { levels, anchor, sign: 1.0, ratio: PANEL_RATIO }
    }

    /// Inner integrals run towards the anchor: `∫_u^A`.
    pub fn backward(anchor: f64, levels: Vec<Integrand<'a>>) -> Self {
        Nest { levels, anchor, sign: -1.0, ratio: PANEL_RATIO }
    }

    pub fn with_ratio(mut self, ratio: f64) -> Self {
        assert!(ratio > 1.0);
        self.ratio = ratio;
        self
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    /// The inner integral `I_k(x)` as the formula writes it.
    pub fn oriented(&self, cumulative: f64) -> f64 {
        self.sign * cumulative
    }

    // C_k(x) from the stored values at breakpoint b.
    fn cumulative(&self, k: usize, b: f64, base: &[f64], x: f64) -> f64 {
        if x == b {
            return base[k];
        }
        let gl = GaussLegendre::shared();
        let g = &self.levels[k];
        let step = gl.apply(b, x, |u| {
            let inner = if k == 0 { 0.0 } else { self.sign * self.cumulative(k - 1, b, base, u) };
            g(u, inner)
        });
        base[k] + step
    }

    fn advance(&self, b: f64, base: &[f64], x: f64) -> Vec<f64> {
        (0..self.levels.len()).map(|k| self.cumulative(k, b, base, x)).collect()
    }

    /// Breakpoints from the anchor to `end` (exclusive of the anchor).
    fn breakpoints(&self, end: f64) -> Vec<f64> {
        let a = self.anchor;
        let up = end > a;
        let first = if up { a * self.ratio } else { a / self.ratio };
        let width = (first - a).abs().max(f64::MIN_POSITIVE);
        let dir = if up { 1.0 } else { -1.0 };
        let mut pts = Vec::new();
        for j in (1..=GRADING_LEVELS).rev() {
            let p = a + dir * width * 2f64.powi(-j);
            if (p - end) * dir < 0.0 {
                pts.push(p);
            }
        }
        let mut cur = a + dir * width;
        while (cur - end) * dir < 0.0 {
            pts.push(cur);
            cur = if up { cur * self.ratio } else { cur / self.ratio };
            if a <= 0.0 {
                // geometric stepping needs a positive scale
                cur = a + dir * (cur - a).abs().max(width);
            }
        }
        pts.push(end);
        pts
    }

    /// Cumulative values at `targets`, which must move monotonically away
    /// from the anchor.
    pub fn sweep(&self, targets: &[f64]) -> Sweep {
        let mut values = Vec::with_capacity(targets.len());
        let mut base = vec![0.0; self.levels.len()];
        let mut at = self.anchor;
        for &target in targets {
            if target == at {
                values.push(base.clone());
                continue;
            }
            debug_assert!(
                (target - at) * (at - self.anchor) >= 0.0,
                "targets must move away from the anchor"
            );
            let segment_start = at;
            let points = if segment_start == self.anchor {
                self.breakpoints(target)
            } else {
                self.segment(segment_start, target)
            };
            for p in points {
                let next = self.advance(at, &base, p);
                if next.iter().any(|v| !v.is_finite()) {
                    return Sweep { values, truncated_at: Some(target) };
                }
                base = next;
                at = p;
            }
            values.push(base.clone());
        }
        Sweep { values, truncated_at: None }
    }

    fn segment(&self, from: f64, to: f64) -> Vec<f64> {
        let up = to > from;
        let mut pts = Vec::new();
        let mut cur = if up { from * self.ratio } else { from / self.ratio };
        while if up { cur < to } else { cur > to } {
            pts.push(cur);
            cur = if up { cur * self.ratio } else { cur / self.ratio };
        }
        pts.push(to);
        pts
    }

    /// Cumulative values of every level at one point.
    pub fn values_at(&self, x: f64) -> Option<Vec<f64>> {
        let s = self.sweep(&[x]);
        s.values.into_iter().next()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_level_power() {
        let nest = Nest::forward(1.0, vec![Box::new(|u: f64, _| u * u)]);
        let s = nest.sweep(&[2.0, 10.0, 100.0]);
        for (v, t) in s.values.iter().zip([2.0f64, 10.0, 100.0]) {
            let exact = (t.powi(3) - 1.0) / 3.0;
            assert!(((v[0] - exact) / exact).abs() < 1e-13);
        }
    }

    #[test]
    fn triple_nest_matches_closed_form() {
        // ∫_1^t ∫_1^v ∫_1^u 1 ds du dv = (t-1)^3 / 6
        let nest = Nest::forward(
            1.0,
            vec![
                Box::new(|_, _| 1.0),
                Box::new(|_, inner| inner),
                Box::new(|_, inner| inner),
            ],
        );
        let v = nest.values_at(7.0).unwrap();
        assert!((v[0] - 6.0).abs() < 1e-12);
        assert!((v[1] - 18.0).abs() < 1e-11);
        assert!((v[2] - 36.0).abs() < 1e-10);
    }

    #[test]
    fn backward_orientation() {
        // inner integral ∫_u^5 1 ds = 5 - u, outer ∫ from 5 to x of (5-u) du
        let nest = Nest::backward(5.0, vec![Box::new(|_, _| 1.0), Box::new(|_, inner| inner)]);
        let v = nest.values_at(2.0).unwrap();
        // C_0(2) = ∫_5^2 1 = -3 ; C_1(2) = ∫_5^2 (5-u) du = -4.5
        assert!((v[0] + 3.0).abs() < 1e-13);
        assert!((v[1] + 4.5).abs() < 1e-13);
        let w = nest.values_at(8.0).unwrap();
        // beyond the anchor the inner integral is negative: ∫_5^8 (5-u) du = -4.5
        assert!((w[1] + 4.5).abs() < 1e-13);
    }

    #[test]
    fn fractional_power_of_inner_integral() {
        // ∫_1^t (u-1)^(1/3) du = 3/4 (t-1)^(4/3)
        let nest = Nest::forward(
            1.0,
            vec![Box::new(|_, _| 1.0), Box::new(|_, inner: f64| inner.cbrt())],
        );
        let t: f64 = 3.0;
        let v = nest.values_at(t).unwrap();
        let exact = 0.75 * (t - 1.0).powf(4.0 / 3.0);
        assert!(((v[1] - exact) / exact).abs() < 1e-9, "{} vs {exact}", v[1]);
    }

    #[test]
    fn truncates_on_non_finite() {
        let nest = Nest::forward(1.0, vec![Box::new(|u: f64, _| if u > 50.0 { f64::INFINITY } else { 1.0 })]);
        let s = nest.sweep(&[10.0, 100.0, 1000.0]);
        assert_eq!(s.values.len(), 1);
        assert_eq!(s.truncated_at, Some(100.0));
    }
}
