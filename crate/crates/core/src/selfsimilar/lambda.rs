use serde::{Deserialize, Serialize};

use super::{Classification, TildeTrace};
use crate::error::{Error, Result};
use crate::series::{beta, eval_h, h_inverse, SeriesTable, H_INVERSE_FLOOR};

/// Indices over which the dichotomy is asserted.
pub const CHECK_FROM: usize = 3;
pub const CHECK_TO: usize = 20;
/// Critical traces are checked from this index.
pub const CRITICAL_FROM: usize = 2;
pub const CRITICAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaReport {
    pub classification: Option<Classification>,
    /// `K = ½ − 1/h(β⁸R)`.
    pub k_const: f64,
    /// `max |λ′_n|` for `2 ≤ n ≤ 20` (or the last available index).
    pub lambda_prime_max: f64,
    /// Signs of `λ′_n` alternate from the first nonzero entry.
    pub alternating: bool,
    /// Smallest `|λ′_{n+2}| / |λ′_n|` for `3 ≤ n ≤ 20` with `n + 2` available.
    pub min_growth_ratio: f64,
    /// Largest `n` with `λ_n` defined.
    pub last_index: usize,
    pub pass: bool,
}

/// Computes `λ_n` and `λ′_n` for every term inside the invertible window
/// of `h`, stores them in `trace`, and checks the dichotomy.
pub fn lambda_diagnostics(trace: &mut TildeTrace, table: &SeriesTable) -> Result<LambdaReport> {
    let r = table.radius()?;
    let ceiling = eval_h(table, H_INVERSE_FLOOR)?;
    let mut lambda = Vec::new();
    for &a in &trace.a_tilde {
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::Domain(format!("ã = {a} outside the domain of h⁻¹")));
        }
        if a > ceiling {
            break;
        }
        lambda.push(if a == 0.0 { r } else { h_inverse(table, a)? });
    }
    let log_b2 = beta().powi(2).ln();
    let mut lp = vec![0.0];
    for w in lambda.windows(2) {
        lp.push(w[1].ln() - w[0].ln() - log_b2);
    }
    let last = lambda.len().saturating_sub(1);
    let k_const = 0.5 - 1.0 / eval_h(table, beta().powi(8) * r)?;

    let hi = CHECK_TO.min(last);
    let lambda_prime_max = (CRITICAL_FROM..=hi)
        .map(|n| lp[n].abs())
        .fold(0.0, f64::max);

    let first_nonzero = lp.iter().skip(1).position(|v| *v != 0.0).map(|p| p + 1);
    let alternating = match first_nonzero {
        Some(s) => (s + 1..=hi).all(|n| lp[n] * lp[n - 1] < 0.0),
        None => false,
    };
    let mut min_growth = f64::INFINITY;
    for n in CHECK_FROM..=CHECK_TO {
        if n + 2 > last {
            break;
        }
        min_growth = min_growth.min(lp[n + 2].abs() / lp[n].abs());
    }

    let pass = match trace.classification {
        Some(Classification::Critical) => last >= CRITICAL_FROM && lambda_prime_max < CRITICAL_TOL,
        Some(_) => alternating && min_growth >= 1.0 + k_const && k_const > 0.0,
        None => false,
    };
    trace.lambda = lambda;
    trace.lambda_prime = lp;
    Ok(LambdaReport {
        classification: trace.classification,
        k_const,
        lambda_prime_max,
        alternating,
        min_growth_ratio: min_growth,
        last_index: last,
        pass,
    })
}
