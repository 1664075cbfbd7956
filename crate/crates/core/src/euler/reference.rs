//! Reference inequalities for the family `r1 = t^m`, `r2 = t^n`,
//! `q = q0 t^(m/3+n-5/3)`, `sigma = delta t`, `alpha = 1`, `beta = gamma = 1/3`,
//! in the form `lhs > rhs` as they are usually stated. Used to cross-check
//! the reductions derived from first principles in the parent module.

/// One side pair of a stated inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatedInequality {
    pub lhs: f64,
    pub rhs: f64,
}

impl StatedInequality {
    pub fn holds(&self) -> bool {
        self.lhs > self.rhs
    }

    /// `lhs / rhs`, the quantity compared with 1.
    pub fn ratio(&self) -> f64 {
        self.lhs / self.rhs
    }
}

/// The advanced limsup condition: `27 q0^3 delta^(1-m) > (m+3n-2)^3 (m-1)^2`.
pub fn stated_advanced_limsup(m: f64, n: f64, q0: f64, delta: f64) -> StatedInequality {
    StatedInequality {
        lhs: 27.0 * q0.powi(3) * delta.powf(1.0 - m),
        rhs: (m + 3.0 * n - 2.0).powi(3) * (m - 1.0).powi(2),
    }
}

/// The window condition with inner integrals from `t0`:
/// `27 q0^3 ln(delta) > (m+3n-2)^3 (m-1) / e`.
pub fn stated_window_from_start(m: f64, n: f64, q0: f64, delta: f64) -> StatedInequality {
    StatedInequality {
        lhs: 27.0 * q0.powi(3) * delta.ln(),
        rhs: (m + 3.0 * n - 2.0).powi(3) * (m - 1.0) / std::f64::consts::E,
    }
}

/// Distance from a removable singular line below which the formula is
/// replaced by a symmetric average.
pub const SINGULAR_BAND: f64 = 1e-6;
/// Offset in `m` used for that average.
pub const SINGULAR_STEP: f64 = 1e-4;

/// The window condition with inner integrals up to `sigma(t)`.
///
/// Two denominators vanish on the lines `m = 6n - 1` and `2m = 3n + 1`,
/// where the singularities cancel; near them the value is the average of
/// the formula at `m ± SINGULAR_STEP` (second-order accurate).
pub fn stated_window(m: f64, n: f64, q0: f64, delta: f64) -> StatedInequality {
    let near = (m - 6.0 * n + 1.0).abs() < SINGULAR_BAND || (2.0 * m - 3.0 * n - 1.0).abs() < SINGULAR_BAND;
    let lhs = if near {
        0.5 * (window_lhs(m - SINGULAR_STEP, n, q0, delta) + window_lhs(m + SINGULAR_STEP, n, q0, delta))
    } else {
        window_lhs(m, n, q0, delta)
    };
    StatedInequality { lhs, rhs: (m + 3.0 * n - 2.0).powi(3) / std::f64::consts::E }
}

fn window_lhs(m: f64, n: f64, q0: f64, d: f64) -> f64 {
    let s = m + 3.0 * n - 2.0;
    let a = m - 6.0 * n + 1.0;
    let b = 2.0 * m - 3.0 * n - 1.0;
    let c = 3.0 * n - 1.0;
    let braces = (d.powf(s) - 1.0) / (s * c) + d.ln() / (m - 1.0) + 27.0 * (d.powf(2.0 * s / 3.0) - 1.0) / (a * 2.0 * s)
        - 27.0 * (d.powf(s / 3.0) - 1.0) / (b * s)
        - (d.powf(m - 1.0) - 1.0) / (m - 1.0) * (1.0 / c + 9.0 / a - 9.0 / b + 1.0 / (m - 1.0));
    27.0 * q0.powi(3) * braces
}
