use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `s_n = 2^{-n/4}`, `a_n = C·2^{-n/4}` and the smallest grid `C` with
///
/// ```text
/// 2ⁿ s_n a_n² ≥ 2 m_n² m_{n+2} (1 + 1/(2ⁿ s_n m_{n+2})),   m_n = L√n
/// ```
///
/// for every `n ≤ n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipationBudget {
    pub l: f64,
    pub n_max: usize,
    pub s: Vec<f64>,
    pub a_budget: Vec<f64>,
    pub c: f64,
    /// `LHS − RHS` for `n = 1..=n_max`.
    pub margins: Vec<f64>,
}

/// Finest spacing of the grid on which `C` is chosen.
pub const C_GRID: f64 = 1e-4;

fn m_seq(l: f64, n: usize) -> f64 {
    l * (n as f64).sqrt()
}

fn s_seq(n: usize) -> f64 {
    2f64.powf(-(n as f64) / 4.0)
}

fn margin(l: f64, c: f64, n: usize) -> f64 {
    let kn = 2f64.powi(n as i32);
    let (s, a) = (s_seq(n), c * s_seq(n));
    let (mn, mn2) = (m_seq(l, n), m_seq(l, n + 2));
    kn * s * a * a - 2.0 * mn * mn * mn2 * (1.0 + 1.0 / (kn * s * mn2))
}

fn satisfies(l: f64, c: f64, n_max: usize) -> bool {
    (1..=n_max).all(|n| margin(l, c, n) >= 0.0)
}

pub fn build_budget(l: f64, n_max: usize) -> Result<DissipationBudget> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::Precondition(format!("L must be positive, got {l}")));
    }
    if n_max == 0 {
        return Err(Error::Precondition("n_max must be positive".into()));
    }
    // integer grid first, then refine one decade at a time
    let mut c = 1.0;
    while !satisfies(l, c, n_max) {
        c *= 2.0;
    }
    let mut lo = 0.0;
    let mut step = 1.0;
    let mut hi = c;
    while step >= C_GRID * 0.5 {
        let mut v = lo;
        while !satisfies(l, v, n_max) {
            v += step;
        }
        hi = v.min(hi);
        lo = (v - step).max(0.0);
        step /= 10.0;
    }
    let c = hi;
    Ok(DissipationBudget {
        l,
        n_max,
        s: (1..=n_max).map(s_seq).collect(),
        a_budget: (1..=n_max).map(|n| c * s_seq(n)).collect(),
        c,
        margins: (1..=n_max).map(|n| margin(l, c, n)).collect(),
    })
}

impl DissipationBudget {
    /// `Σ_{n≥M} s_n` in closed form.
    pub fn s_tail(&self, m: usize) -> f64 {
        s_seq(m) / (1.0 - 2f64.powf(-0.25))
    }

    /// `Σ_{n≥M} a_n` in closed form.
    pub fn a_tail(&self, m: usize) -> f64 {
        self.c * self.s_tail(m)
    }
}
