//! Coefficient sequences `d_k`, `d′_k`, `D_k` and their generating functions.
//!
//! ```text
//! g(x) = Σ d_k x^k      ĝ(x) = Σ d′_k x^k      g̃(z) = 1 − 2z ĝ(z)
//! h(x) = 1/x − g(x) = √g̃(x) / x               G(z) = Σ D_k z^k
//! ```
//!
//! `R` is the root of `g̃` in `(4/5, 1)`; it is the radius of convergence of `g`.

mod checks;

pub use checks::{
    alpha_bound_check, d_prime_tail_check, g_closed_form_check, h_identity_check, psi_check,
    rouche_check, AlphaBoundReport, GClosedFormReport, HIdentityReport, PsiReport, RoucheReport,
    TailBoundReport, G_TILDE_A_REFERENCE,
};

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of series terms.
pub const DEFAULT_TERMS: usize = 200;

/// Relative accuracy demanded of every truncated series.
pub const TAIL_TOL: f64 = 1e-14;

/// `β = 2^{-1/3}`.
pub fn beta() -> f64 {
    2f64.powf(-1.0 / 3.0)
}

/// `β^p` through the exact relation `β³ = 1/2`.
pub(crate) fn beta_pow(p: i32) -> f64 {
    let q = p.div_euclid(3);
    let r = p.rem_euclid(3);
    2f64.powi(-q) * beta().powi(r)
}

fn alpha_den(k: usize) -> f64 {
    let k = k as i32;
    1.0 - beta_pow(2 * k + 7) - beta_pow(4 * k + 11)
}

fn check_index(k: usize, i: usize) -> Result<()> {
    if i > k {
        return Err(Error::IndexOutOfRange {
            index: i as i64,
            lo: 0,
            hi: k as i64,
        });
    }
    Ok(())
}

fn alpha_edge(k: usize) -> f64 {
    if k == 0 {
        (1.0 + beta_pow(4) - beta_pow(-1)) / (1.0 - beta_pow(7) - beta_pow(11))
    } else {
        let k = k as i32;
        (1.0 - beta_pow(2 * k + 2)) * (1.0 + beta_pow(2 * k + 7)) / alpha_den(k as usize)
    }
}

/// `α_{k,i}`, interior entries through the hyperbolic-cosine form.
pub fn alpha(k: usize, i: usize) -> Result<f64> {
    check_index(k, i)?;
    if i == 0 || i == k {
        return Ok(alpha_edge(k));
    }
    let (kk, ii) = (k as f64, i as f64);
    let c = ((kk - 2.0 * ii) * beta().ln()).cosh();
    Ok((1.0 - beta_pow(3 * k as i32 + 6) * c) / alpha_den(k))
}

/// `α_{k,i}`, interior entries through the rational form in powers of `β`.
pub fn alpha_rational(k: usize, i: usize) -> Result<f64> {
    check_index(k, i)?;
    if i == 0 || i == k {
        return Ok(alpha_edge(k));
    }
    let (k, i) = (k as i32, i as i32);
    Ok((1.0 - beta_pow(4 * k - 2 * i + 9) - beta_pow(2 * k + 2 * i + 9)) / alpha_den(k as usize))
}

/// `M = ½ max α_{k,i} = α_{2,1}/2`.
pub fn m_constant() -> f64 {
    alpha(2, 1).expect("valid index") / 2.0
}

/// Coefficient tables up to `terms`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesTable {
    pub beta: f64,
    /// `d_{-1}, d_0, …, d_K` (offset by one).
    pub d: Vec<f64>,
    pub d_prime: Vec<f64>,
    pub d_capital: Vec<f64>,
    pub terms: usize,
    #[serde(skip)]
    radius: OnceLock<f64>,
}

impl PartialEq for SeriesTable {
    fn eq(&self, other: &Self) -> bool {
        self.beta == other.beta
            && self.d == other.d
            && self.d_prime == other.d_prime
            && self.d_capital == other.d_capital
            && self.terms == other.terms
    }
}

impl SeriesTable {
    /// `d_k` for `k ≥ -1`.
    pub fn d(&self, k: i64) -> f64 {
        self.d[(k + 1) as usize]
    }

    /// `d_0..=d_K` (without `d_{-1}`).
    pub fn d_nonneg(&self) -> &[f64] {
        &self.d[1..]
    }

    /// Root of `g̃` in `(4/5, 1)` to full double precision, cached.
    pub fn radius(&self) -> Result<f64> {
        if let Some(r) = self.radius.get() {
            return Ok(*r);
        }
        let rep = find_r(self, 0.0)?;
        Ok(*self.radius.get_or_init(|| rep.r))
    }

    /// Rows `k, d_k, d′_k, D_k` for `k = 0..=K`.
    pub fn csv_rows(&self) -> Vec<Vec<f64>> {
        (0..=self.terms)
            .map(|k| vec![k as f64, self.d[k + 1], self.d_prime[k], self.d_capital[k]])
            .collect()
    }
}

/// `d_0 = (2β⁻¹ − β − β³)⁻¹`.
pub fn d0() -> f64 {
    1.0 / (2.0 * beta_pow(-1) - beta_pow(1) - beta_pow(3))
}

/// Builds `d`, `d′` and `D` up to index `terms`.
pub fn build_series(terms: usize) -> Result<SeriesTable> {
    if terms < 2 {
        return Err(Error::Precondition(format!(
            "need at least 2 terms, got {terms}"
        )));
    }
    let m = m_constant();
    let mut d = vec![0.0; terms + 1];
    let mut dp = vec![0.0; terms + 1];
    let mut dc = vec![0.0; terms + 1];
    d[0] = d0();
    dp[0] = d[0];
    dc[0] = d[0];
    for k in 0..terms {
        let mut s = 0.0;
        let mut sp = 0.0;
        let mut sc = 0.0;
        for i in 0..=k {
            let a = alpha(k, i)?;
            let prod = d[i] * d[k - i];
            s += a * prod;
            sp += (a - 1.0) * prod;
            sc += dc[i] * dc[k - i];
        }
        d[k + 1] = 0.5 * s;
        dp[k + 1] = 0.5 * sp;
        dc[k + 1] = if k == 0 { d[1] } else { m * sc };
        if !dc[k + 1].is_finite() || !d[k + 1].is_finite() {
            return Err(Error::SeriesOverflow { largest_safe: k });
        }
    }
    let mut with_minus_one = Vec::with_capacity(terms + 2);
    with_minus_one.push(-1.0);
    with_minus_one.extend(d);
    Ok(SeriesTable {
        beta: beta(),
        d: with_minus_one,
        d_prime: dp,
        d_capital: dc,
        terms,
        radius: OnceLock::new(),
    })
}

/// Partial sum of `Σ c_k z^k` with a geometric tail bound from the ratio of
/// the last computed coefficients.
pub(crate) fn power_sum(coef: &[f64], z: Complex64) -> Result<(Complex64, f64)> {
    let r = z.norm();
    // Horner
    let mut sum = Complex64::new(0.0, 0.0);
    for c in coef.iter().rev() {
        sum = sum * z + c;
    }
    let k = coef.len() - 1;
    let window = 10.min(k);
    let mut ratio: f64 = 0.0;
    for j in k - window..k {
        if coef[j] != 0.0 {
            ratio = ratio.max((coef[j + 1] / coef[j]).abs());
        }
    }
    let q = ratio * r;
    if q >= 1.0 {
        return Err(Error::RadiusExceeded {
            modulus: r,
            bound: f64::INFINITY,
        });
    }
    let bound = coef[k].abs() * r.powi(k as i32) * q / (1.0 - q);
    if bound > TAIL_TOL * sum.norm().max(1.0) {
        return Err(Error::RadiusExceeded { modulus: r, bound });
    }
    Ok((sum, bound))
}

pub fn eval_g(table: &SeriesTable, z: Complex64) -> Result<Complex64> {
    power_sum(table.d_nonneg(), z).map(|p| p.0)
}

pub fn eval_g_hat(table: &SeriesTable, z: Complex64) -> Result<Complex64> {
    power_sum(&table.d_prime, z).map(|p| p.0)
}

pub fn eval_g_tilde(table: &SeriesTable, z: Complex64) -> Result<Complex64> {
    Ok(1.0 - 2.0 * z * eval_g_hat(table, z)?)
}

/// Real `g̃(x)`.
pub fn g_tilde_real(table: &SeriesTable, x: f64) -> Result<f64> {
    eval_g_tilde(table, Complex64::new(x, 0.0)).map(|v| v.re)
}

/// `A = 1 − α_{0,0}/(2M)`.
fn capital_a() -> f64 {
    1.0 - alpha_edge(0) / (2.0 * m_constant())
}

/// Smallest zero of the discriminant of `G`: the radius of `Σ D_k z^k`.
pub fn z1(table: &SeriesTable) -> f64 {
    let a00 = alpha_edge(0);
    let a21 = 2.0 * m_constant();
    (1.0 - (a00 / a21).sqrt()) / ((a21 - a00) * table.d(0))
}

/// `G(z) = 2d₀(1 − AMd₀z) / (1 + √(1 − 4Md₀z + 4AM²d₀²z²))` for `|z| < z₁`.
pub fn eval_g_capital(table: &SeriesTable, z: Complex64) -> Result<Complex64> {
    let lim = z1(table);
    if z.norm() >= lim {
        return Err(Error::RadiusExceeded {
            modulus: z.norm(),
            bound: lim,
        });
    }
    let m = m_constant();
    let a = capital_a();
    let d0 = table.d(0);
    let r = 1.0 - 4.0 * m * d0 * z + 4.0 * a * m * m * d0 * d0 * z * z;
    Ok(2.0 * d0 * (1.0 - a * m * d0 * z) / (1.0 + r.sqrt()))
}

/// `Σ D_k z^k` as a truncated series.
pub fn eval_g_capital_series(table: &SeriesTable, z: Complex64) -> Result<Complex64> {
    power_sum(&table.d_capital, z).map(|p| p.0)
}

/// Output of [`find_r`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusReport {
    #[serde(rename = "R")]
    pub r: f64,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub residual: f64,
    pub z1: f64,
}

/// Bisection for the root of `g̃` on `(4/5, 1)` down to bracket width `tol`
/// (`tol = 0` bisects until the bracket cannot shrink).
pub fn find_r(table: &SeriesTable, tol: f64) -> Result<RadiusReport> {
    if !(tol >= 0.0) {
        return Err(Error::Precondition("tolerance must be nonnegative".into()));
    }
    let (mut lo, mut hi) = (0.8, 1.0);
    let (flo, fhi) = (g_tilde_real(table, lo)?, g_tilde_real(table, hi)?);
    if !(flo > 0.0 && fhi < 0.0) {
        return Err(Error::BracketFailure(format!(
            "g̃(4/5) = {flo}, g̃(1) = {fhi}: no sign change"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g_tilde_real(table, mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    Ok(RadiusReport {
        r,
        bracket_lo: lo,
        bracket_hi: hi,
        residual: g_tilde_real(table, r)?.abs(),
        z1: z1(table),
    })
}

/// `h(x) = 1/x − g(x)` on `(0, R]`, evaluated as `√g̃(x)/x`; `h(R) = 0`.
pub fn eval_h(table: &SeriesTable, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("h needs x > 0, got {x}")));
    }
    let r = table.radius()?;
    if x == r {
        return Ok(0.0);
    }
    if x > r {
        if x - r > 4.0 * f64::EPSILON * r {
            return Err(Error::Domain(format!("h needs x <= R = {r}, got {x}")));
        }
        return Ok(0.0);
    }
    let gt = g_tilde_real(table, x)?;
    Ok(gt.max(0.0).sqrt() / x)
}

/// Lower end of the bracket used by [`h_inverse`].
pub const H_INVERSE_FLOOR: f64 = 1e-150;

/// The unique `x ∈ (10⁻¹⁵⁰, R]` with `h(x) = y`.
pub fn h_inverse(table: &SeriesTable, y: f64) -> Result<f64> {
    if !(y >= 0.0) {
        return Err(Error::Domain(format!("h⁻¹ needs y >= 0, got {y}")));
    }
    let r = table.radius()?;
    if y == 0.0 {
        return Ok(r);
    }
    let mut lo = H_INVERSE_FLOOR;
    let top = eval_h(table, lo)?;
    if y > top {
        return Err(Error::Domain(format!(
            "h⁻¹({y}) lies below the bracket floor {H_INVERSE_FLOOR}"
        )));
    }
    let mut hi = r;
    loop {
        let mid = if hi / lo > 2.0 {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if mid <= lo || mid >= hi {
            break;
        }
        if eval_h(table, mid)? > y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (hl, hh) = (eval_h(table, lo)?, eval_h(table, hi)?);
    Ok(if (hl - y).abs() <= (hh - y).abs() {
        lo
    } else {
        hi
    })
}
