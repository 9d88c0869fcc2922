//! Self-similar solutions `X_n(t) = a_n / (t − t₀)`.
//!
//! The coefficients obey `a_n a_{n+1} = 2⁻ⁿ a_n + a_{n-1}²/2`; after rescaling
//! `ã_n = 2^{n+n₀} a_{n+n₀}` this becomes `ã_{n+1} = 2 + 4ã_{n-1}²/ã_n` with
//! `ã_0 = 0`. Only `ã_1 = γ` gives a finite-energy profile.

mod lambda;

pub use lambda::{lambda_diagnostics, LambdaReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::series::{beta, eval_h, SeriesTable};
use crate::shell::ShellState;

/// Default envelope multiplier for divergence.
pub const DEFAULT_THRESHOLD: f64 = 1e8;

/// Term count used by shooting: large enough that any `ã_1 ≠ γ` representable
/// in binary64 shows its divergent parity.
pub const SHOOTING_COUNT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Classification {
    Critical,
    DivergesOddUp,
    DivergesEvenUp,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Critical => "Critical",
            Classification::DivergesOddUp => "DivergesOddUp",
            Classification::DivergesEvenUp => "DivergesEvenUp",
        }
    }
}

/// `ã_0..` and, once diagnosed, `λ_n = h⁻¹(ã_n)` and
/// `λ′_n = log λ_n − log λ_{n-1} − log β²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TildeTrace {
    pub a1: f64,
    pub threshold: f64,
    pub a_tilde: Vec<f64>,
    pub lambda: Vec<f64>,
    pub lambda_prime: Vec<f64>,
    /// `None` when the run was too short to decide.
    pub classification: Option<Classification>,
}

/// `(2β)^n = 2^{2n/3}`, the growth of the critical sequence.
fn envelope(n: usize) -> f64 {
    2f64.powf(2.0 * n as f64 / 3.0)
}

/// Runs the recurrence for indices `0..=count`, stopping at the first term
/// above `threshold·(2β)ⁿ`.
pub fn tilde_sequence_with(a1: f64, count: usize, threshold: f64) -> Result<TildeTrace> {
    if !(a1 > 0.0 && a1.is_finite()) {
        return Err(Error::Precondition(format!(
            "a1 must be positive, got {a1}"
        )));
    }
    if count < 3 {
        return Err(Error::Precondition("count must be at least 3".into()));
    }
    let mut a = Vec::with_capacity(count + 1);
    a.push(0.0);
    a.push(a1);
    let mut class = None;
    let check = |n: usize, v: f64| {
        if v > threshold * envelope(n) {
            Some(if n % 2 == 1 {
                Classification::DivergesOddUp
            } else {
                Classification::DivergesEvenUp
            })
        } else {
            None
        }
    };
    if let Some(c) = check(1, a1) {
        class = Some(c);
    }
    let mut n = 1;
    while class.is_none() && n < count {
        let next = 2.0 + 4.0 * a[n - 1] * a[n - 1] / a[n];
        a.push(next);
        n += 1;
        class = check(n, next);
    }
    if class.is_none() {
        let last = a[n] / envelope(n);
        let prev = a[n - 1] / envelope(n - 1);
        let spread = (last / prev).max(prev / last);
        if spread <= 10.0 {
            class = Some(Classification::Critical);
        }
    }
    Ok(TildeTrace {
        a1,
        threshold,
        a_tilde: a,
        lambda: Vec::new(),
        lambda_prime: Vec::new(),
        classification: class,
    })
}

pub fn tilde_sequence(a1: f64, count: usize) -> Result<TildeTrace> {
    tilde_sequence_with(a1, count, DEFAULT_THRESHOLD)
}

/// Critical when no term leaves the envelope within `count` terms, divergent
/// by the parity of the first index that does.
pub fn classify(a1: f64, count: usize, threshold: f64) -> Result<Classification> {
    if !(threshold >= 1e6) {
        return Err(Error::Precondition("threshold must be at least 1e6".into()));
    }
    tilde_sequence_with(a1, count, threshold)?
        .classification
        .ok_or(Error::Inconclusive { count })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootingResult {
    pub gamma: f64,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub class_lo: Classification,
    pub class_hi: Classification,
    pub iterations: usize,
}

/// Points of the coarse scan on `(0, 4]`.
pub const SCAN_POINTS: usize = 400;

/// Bisection on `ã_1` between the two divergent classes.
pub fn gamma_by_shooting(tol: f64, exec: Execution) -> Result<ShootingResult> {
    if !(tol >= 1e-12) {
        return Err(Error::Precondition("tol must be at least 1e-12".into()));
    }
    let side = |a1: f64| classify(a1, SHOOTING_COUNT, DEFAULT_THRESHOLD);
    let grid: Vec<f64> = (1..=SCAN_POINTS)
        .map(|j| 4.0 * j as f64 / SCAN_POINTS as f64)
        .collect();
    let classes: Vec<Result<Classification>> = exec.map(&grid, |&a| side(a));
    let mut bracket = None;
    for j in 1..grid.len() {
        let (a, b) = (&classes[j - 1], &classes[j]);
        if let (Ok(ca), Ok(cb)) = (a, b) {
            if ca != cb && *ca != Classification::Critical && *cb != Classification::Critical {
                bracket = Some((grid[j - 1], grid[j], *ca, *cb));
                break;
            }
        }
    }
    let (mut lo, mut hi, class_lo, class_hi) = bracket.ok_or_else(|| {
        Error::BracketFailure("coarse scan on (0, 4] found a single class".into())
    })?;
    let mut iterations = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        let c = side(mid)?;
        if c == class_lo {
            lo = mid;
        } else if c == class_hi {
            hi = mid;
        } else {
            lo = mid;
            hi = mid;
        }
    }
    Ok(ShootingResult {
        gamma: 0.5 * (lo + hi),
        bracket_lo: lo,
        bracket_hi: hi,
        class_lo,
        class_hi,
        iterations,
    })
}

/// `γ = h(β²R)`.
pub fn gamma_by_series(table: &SeriesTable) -> Result<f64> {
    gamma_at_radius(table, table.radius()?)
}

/// `h(β²r)` for a given radius `r` (sensitivity studies).
pub fn gamma_at_radius(table: &SeriesTable, r: f64) -> Result<f64> {
    eval_h(table, beta().powi(2) * r)
}

/// Coefficients of `X_n(t) = a_n/(t − t₀)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfSimilarProfile {
    pub n0: usize,
    pub t0: f64,
    /// `a_1..a_N`.
    pub a: Vec<f64>,
    pub gamma: f64,
    /// `C_{n₀} = β^{2n₀}/R`, the limit of `a_n β^{-n}`.
    pub c_n0: f64,
}

/// `a_n = 2⁻ⁿ h(β^{2(n−n₀)} R)` for `n > n₀`, zero below.
pub fn build_profile(
    n0: usize,
    t0: f64,
    n_modes: usize,
    table: &SeriesTable,
) -> Result<SelfSimilarProfile> {
    if n_modes <= n0 + 2 {
        return Err(Error::Precondition(format!(
            "need N > n0 + 2, got N={n_modes}, n0={n0}"
        )));
    }
    if !t0.is_finite() {
        return Err(Error::Precondition("t0 must be finite".into()));
    }
    let r = table.radius()?;
    let b2 = beta().powi(2);
    let mut a = vec![0.0; n_modes];
    for n in n0 + 1..=n_modes {
        let x = b2.powi((n - n0) as i32) * r;
        a[n - 1] = 2f64.powi(-(n as i32)) * eval_h(table, x)?;
    }
    Ok(SelfSimilarProfile {
        n0,
        t0,
        a,
        gamma: gamma_by_series(table)?,
        c_n0: b2.powi(n0 as i32) / r,
    })
}

impl SelfSimilarProfile {
    pub fn n_modes(&self) -> usize {
        self.a.len()
    }

    /// `a_n` (1-based), zero outside `1..=N`.
    pub fn coeff(&self, n: usize) -> f64 {
        if n == 0 || n > self.a.len() {
            0.0
        } else {
            self.a[n - 1]
        }
    }

    /// State `a_n/(t − t₀)`; for `t < t₀` every active entry is negative.
    pub fn state_at(&self, t: f64) -> Result<ShellState> {
        if t == self.t0 || !t.is_finite() {
            return Err(Error::Domain(format!("profile undefined at t={t}")));
        }
        let s = t - self.t0;
        ShellState::new(t, self.a.iter().map(|a| a / s).collect())
    }

    /// `−a_n/(t − t₀)²`.
    pub fn derivative_at(&self, t: f64) -> Result<Vec<f64>> {
        if t == self.t0 {
            return Err(Error::Domain(format!("profile undefined at t={t}")));
        }
        let s2 = (t - self.t0).powi(2);
        Ok(self.a.iter().map(|a| -a / s2).collect())
    }

    /// `Σ a_n²`; the energy is this over `(t − t₀)²`.
    pub fn energy_coefficient(&self) -> f64 {
        self.a.iter().map(|a| a * a).sum()
    }

    /// Largest `|a_n a_{n+1} − 2⁻ⁿa_n − a_{n-1}²/2| / (a_n a_{n+1})` over
    /// the active range.
    pub fn recurrence_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for n in self.n0 + 1..self.a.len() {
            let (am, an, ap) = (self.coeff(n - 1), self.coeff(n), self.coeff(n + 1));
            let lhs = an * ap;
            let res = lhs - 2f64.powi(-(n as i32)) * an - 0.5 * am * am;
            worst = worst.max((res / lhs).abs());
        }
        worst
    }

    /// `a_n β^{-n}` at the last mode; tends to `c_n0`.
    pub fn tail_constant(&self) -> f64 {
        let n = self.a.len();
        self.a[n - 1] / beta().powi(n as i32)
    }

    /// Rows `n, a_n`.
    pub fn csv_rows(&self) -> Vec<Vec<f64>> {
        self.a
            .iter()
            .enumerate()
            .map(|(i, a)| vec![(i + 1) as f64, *a])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{build_series, DEFAULT_TERMS};

    const GAMMA_REF: f64 = 0.917576296;

    #[test]
    fn tilde_first_terms() {
        let tr = tilde_sequence(GAMMA_REF, 10).unwrap();
        assert_eq!(tr.a_tilde[0], 0.0);
        assert_eq!(tr.a_tilde[2], 2.0);
        assert!((tr.a_tilde[3] - (2.0 + 2.0 * GAMMA_REF * GAMMA_REF)).abs() < 1e-15);
        assert!((tr.a_tilde[3] - 3.68389).abs() < 1e-5);
        assert!(tr.a_tilde[2..].iter().all(|&v| v >= 2.0));
    }

    #[test]
    fn divergent_classes_are_opposite() {
        let lo = classify(0.5, 40, DEFAULT_THRESHOLD).unwrap();
        let hi = classify(1.2, 40, DEFAULT_THRESHOLD).unwrap();
        assert_ne!(lo, Classification::Critical);
        assert_ne!(hi, Classification::Critical);
        assert_ne!(lo, hi);
        assert!(classify(0.5, 40, 1e5).is_err());
    }

    #[test]
    fn short_runs_are_inconclusive() {
        // parity split visible but nothing has crossed the envelope yet
        assert!(matches!(
            classify(0.5, 8, DEFAULT_THRESHOLD),
            Err(Error::Inconclusive { count: 8 })
        ));
    }

    #[test]
    fn series_gamma_is_critical() {
        let t = build_series(DEFAULT_TERMS).unwrap();
        let g = gamma_by_series(&t).unwrap();
        assert!((g - GAMMA_REF).abs() < 1e-8);
        assert_eq!(classify(g, 40, 1e8).unwrap(), Classification::Critical);
        let moved = gamma_at_radius(&t, t.radius().unwrap() + 1e-6).unwrap();
        assert!(moved < g);
    }

    #[test]
    fn perturbed_gamma_blows_past_1e10() {
        let t = build_series(DEFAULT_TERMS).unwrap();
        let g = gamma_by_series(&t).unwrap();
        for a1 in [g - 1e-6, g + 1e-6] {
            let tr = tilde_sequence_with(a1, 60, f64::INFINITY).unwrap();
            assert!(tr.a_tilde.iter().any(|&v| v > 1e10), "a1={a1}");
        }
    }

    #[test]
    fn profile_properties() {
        let t = build_series(DEFAULT_TERMS).unwrap();
        let p = build_profile(0, -1.0, 40, &t).unwrap();
        assert!((p.a[0] - GAMMA_REF / 2.0).abs() < 1e-8);
        assert!((p.a[1] - 0.5).abs() < 1e-12);
        assert!(p.recurrence_residual() < 1e-12);
        let r = t.radius().unwrap();
        assert!((p.tail_constant() * r - 1.0).abs() < 1e-3);
        let p2 = build_profile(2, -1.0, 40, &t).unwrap();
        assert_eq!(p2.a[0], 0.0);
        assert_eq!(p2.a[1], 0.0);
        assert!((p2.a[2] - p2.gamma / 8.0).abs() < 1e-15);
        assert!(p2.recurrence_residual() < 1e-12);
        assert!((p2.tail_constant() - beta().powi(4) / r).abs() < 1e-3);
        let shifted = build_profile(0, -3.0, 40, &t).unwrap();
        assert_eq!(shifted.a, p.a);
        assert!(build_profile(3, -1.0, 5, &t).is_err());
    }
}
