//! Numeric spot checks of the estimates behind the radius theorem.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{
    alpha, alpha_rational, beta, eval_g_capital, eval_g_capital_series, eval_h, power_sum,
    SeriesTable,
};
use crate::error::{Error, Result};
use crate::exec::Execution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaBoundReport {
    pub k_max: usize,
    /// `C = max(|1 − α_{0,0}|, (4/3)(β² − β⁴))`.
    pub c: f64,
    /// Largest `|1 − α_{k,i}| / (Cβ^{2k})`; at most 1 when the bound holds.
    pub max_ratio: f64,
    /// Edges below one, interior entries above one.
    pub sign_pattern_ok: bool,
    /// Largest relative gap between the two interior formulas.
    pub max_form_gap: f64,
    pub violations: Vec<(usize, usize)>,
    pub pass: bool,
}

pub fn alpha_bound_check(k_max: usize) -> Result<AlphaBoundReport> {
    if k_max < 2 {
        return Err(Error::Precondition("k_max must be at least 2".into()));
    }
    let b = beta();
    let c = (1.0 - alpha(0, 0)?)
        .abs()
        .max(4.0 / 3.0 * (b.powi(2) - b.powi(4)));
    let mut max_ratio: f64 = 0.0;
    let mut sign_ok = true;
    let mut gap: f64 = 0.0;
    let mut violations = Vec::new();
    for k in 0..=k_max {
        let bound = c * b.powi(2 * k as i32);
        for i in 0..=k {
            let a = alpha(k, i)?;
            let ratio = (1.0 - a).abs() / bound;
            max_ratio = max_ratio.max(ratio);
            if ratio > 1.0 {
                violations.push((k, i));
            }
            let edge = i == 0 || i == k;
            if edge && !(a < 1.0) || !edge && !(a > 1.0) {
                sign_ok = false;
            }
            if !edge {
                gap = gap.max(((a - alpha_rational(k, i)?) / a).abs());
            }
        }
    }
    Ok(AlphaBoundReport {
        k_max,
        c,
        max_ratio,
        sign_pattern_ok: sign_ok,
        max_form_gap: gap,
        pass: violations.is_empty() && sign_ok && gap < 1e-14,
        violations,
    })
}

/// Reference values of `g̃_A` at `-1, 1, -4/5, 4/5`.
pub const G_TILDE_A_REFERENCE: [f64; 4] = [3.170, -0.092, 2.650, 0.040];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoucheReport {
    pub grid_points: usize,
    pub max_g_tilde_b_unit: f64,
    pub max_g_tilde_b_inner: f64,
    /// `g̃_A` at `-1, 1, -4/5, 4/5`.
    pub g_tilde_a: [f64; 4],
    /// Smallest `|g̃_A| − |g̃_B|` over both circles.
    pub min_dominance_margin: f64,
    pub pass: bool,
}

fn g_tilde_a(table: &SeriesTable, z: Complex64) -> Complex64 {
    1.0 - 2.0 * table.d_prime[0] * z - 2.0 * table.d_prime[1] * z * z
}

fn g_tilde_b(coef_b: &[f64], z: Complex64) -> Result<Complex64> {
    Ok(-2.0 * z * power_sum(coef_b, z)?.0)
}

/// Splits `g̃ = g̃_A + g̃_B` and compares both parts on `|z| = 1` and `|z| = 4/5`.
pub fn rouche_check(
    table: &SeriesTable,
    grid_points: usize,
    exec: Execution,
) -> Result<RoucheReport> {
    if grid_points < 360 {
        return Err(Error::Precondition(
            "grid_points must be at least 360".into(),
        ));
    }
    let mut coef_b = table.d_prime.clone();
    coef_b[0] = 0.0;
    coef_b[1] = 0.0;
    // per point: (|g̃_B| on 1, |g̃_B| on 4/5, margin)
    let rows: Vec<Result<(f64, f64, f64)>> = exec.map_range(grid_points, |j| {
        let th = 2.0 * PI * j as f64 / grid_points as f64;
        let mut out = [0.0; 2];
        let mut margin = f64::INFINITY;
        for (slot, rho) in [1.0, 0.8].into_iter().enumerate() {
            let z = Complex64::from_polar(rho, th);
            let b = g_tilde_b(&coef_b, z)?.norm();
            out[slot] = b;
            margin = margin.min(g_tilde_a(table, z).norm() - b);
        }
        Ok((out[0], out[1], margin))
    });
    let (mut mu, mut mi, mut margin) = (0.0f64, 0.0f64, f64::INFINITY);
    for r in rows {
        let (a, b, m) = r?;
        mu = mu.max(a);
        mi = mi.max(b);
        margin = margin.min(m);
    }
    let ga = [-1.0, 1.0, -0.8, 0.8].map(|x| g_tilde_a(table, Complex64::new(x, 0.0)).re);
    let values_ok = ga
        .iter()
        .zip(G_TILDE_A_REFERENCE)
        .all(|(v, r)| (v - r).abs() <= 1e-3);
    Ok(RoucheReport {
        grid_points,
        max_g_tilde_b_unit: mu,
        max_g_tilde_b_inner: mi,
        g_tilde_a: ga,
        min_dominance_margin: margin,
        pass: mu <= 0.062 && mi <= 0.031 && values_ok && margin > 0.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HIdentityReport {
    pub points: usize,
    /// Largest `|4h(x)² + 2h(β²x) − h(β⁴x)h(β²x)| / 4h(x)²`.
    pub max_rel_residual: f64,
    /// `h(β⁴R)`, which should equal 2.
    pub h_beta4_r: f64,
    pub pass: bool,
}

/// `4h(x)² = −2h(β²x) + h(β⁴x)h(β²x)` on `x_j = 0.999·R·j/points`.
pub fn h_identity_check(
    table: &SeriesTable,
    points: usize,
    exec: Execution,
) -> Result<HIdentityReport> {
    if points == 0 {
        return Err(Error::Precondition("need at least one point".into()));
    }
    let r = table.radius()?;
    let b2 = beta().powi(2);
    let res: Vec<Result<f64>> = exec.map_range(points, |j| {
        let x = 0.999 * r * (j + 1) as f64 / points as f64;
        let h = eval_h(table, x)?;
        let h2 = eval_h(table, b2 * x)?;
        let h4 = eval_h(table, b2 * b2 * x)?;
        let lhs = 4.0 * h * h;
        Ok((lhs + 2.0 * h2 - h4 * h2).abs() / lhs)
    });
    let mut worst: f64 = 0.0;
    for v in res {
        worst = worst.max(v?);
    }
    let h4r = eval_h(table, b2 * b2 * r)?;
    Ok(HIdentityReport {
        points,
        max_rel_residual: worst,
        h_beta4_r: h4r,
        pass: worst < 1e-9 && (h4r - 2.0).abs() < 1e-8,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiReport {
    pub points: usize,
    /// Largest sampled slope of `ψ(u) = log h(e^u)`.
    pub max_slope: f64,
    /// Largest second difference (nonpositive for a concave sample).
    pub max_second_difference: f64,
    pub strictly_decreasing: bool,
    pub pass: bool,
}

/// Samples `ψ(u) = log h(e^u)` on `u ∈ [log 10⁻³, log 0.999R]`.
pub fn psi_check(table: &SeriesTable, points: usize, exec: Execution) -> Result<PsiReport> {
    if points < 3 {
        return Err(Error::Precondition("need at least 3 points".into()));
    }
    let r = table.radius()?;
    let (u0, u1) = (1e-3f64.ln(), (0.999 * r).ln());
    let du = (u1 - u0) / (points - 1) as f64;
    let psi: Vec<Result<f64>> = exec.map_range(points, |j| {
        let u = u0 + du * j as f64;
        Ok(eval_h(table, u.exp())?.ln())
    });
    let psi: Vec<f64> = psi.into_iter().collect::<Result<_>>()?;
    let slopes: Vec<f64> = psi.windows(2).map(|w| (w[1] - w[0]) / du).collect();
    let max_slope = slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let max_dd = psi
        .windows(3)
        .map(|w| w[2] - 2.0 * w[1] + w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let decreasing = psi.windows(2).all(|w| w[1] < w[0]);
    Ok(PsiReport {
        points,
        max_slope,
        max_second_difference: max_dd,
        strictly_decreasing: decreasing,
        pass: decreasing && max_dd <= 0.0 && max_slope < -1.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailBoundReport {
    pub k_max: usize,
    /// Largest `|d′_{k+1}| / (Cβ^{2k} D_{k+1} / α_{1,0})` over `1 ≤ k < K`.
    pub max_ratio: f64,
    pub pass: bool,
}

/// `|d′_{k+1}| ≤ (Cβ^{2k}/α_{1,0}) D_{k+1}` for every tabulated `k ≥ 1`.
pub fn d_prime_tail_check(table: &SeriesTable) -> Result<TailBoundReport> {
    let b = beta();
    let c = (1.0 - alpha(0, 0)?)
        .abs()
        .max(4.0 / 3.0 * (b.powi(2) - b.powi(4)));
    let a10 = alpha(1, 0)?;
    let mut worst: f64 = 0.0;
    for k in 1..table.terms {
        let bound = c * b.powi(2 * k as i32) / a10 * table.d_capital[k + 1];
        worst = worst.max(table.d_prime[k + 1].abs() / bound);
    }
    Ok(TailBoundReport {
        k_max: table.terms - 1,
        max_ratio: worst,
        pass: worst <= 1.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GClosedFormReport {
    pub points: usize,
    pub max_abs_diff: f64,
    pub pass: bool,
}

/// Closed form of `G` against its series on circles of radius `0.2z₁…0.8z₁`.
pub fn g_closed_form_check(table: &SeriesTable) -> Result<GClosedFormReport> {
    let z1 = super::z1(table);
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for rho in [0.2, 0.4, 0.6, 0.8] {
        for j in 0..64 {
            let z = Complex64::from_polar(rho * z1, 2.0 * PI * j as f64 / 64.0);
            let diff = (eval_g_capital(table, z)? - eval_g_capital_series(table, z)?).norm();
            worst = worst.max(diff);
            points += 1;
        }
    }
    Ok(GClosedFormReport {
        points,
        max_abs_diff: worst,
        pass: worst < 1e-10,
    })
}
