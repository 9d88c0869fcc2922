//! State, vector field, energy and flux of the truncated dyadic model
//!
//! ```text
//! dX_n/dt = k_{n-1} X_{n-1}^2 - k_n X_n X_{n+1},   k_n = 2^n,   n = 1..N
//! ```
//!
//! with `X_0 = X_{N+1} = 0`. Modes are stored 0-based: `x[i]` is `X_{i+1}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default truncation level.
pub const DEFAULT_MODES: usize = 28;

/// `k_n = 2^n`, exact in binary64 for every representable power.
pub fn wavenumber(n: u32) -> Result<f64> {
    if n > 1023 {
        return Err(Error::Overflow(n));
    }
    Ok(2f64.powi(n as i32))
}

/// `k_0..=k_n` as a table.
pub(crate) fn wavenumbers(n: usize) -> Vec<f64> {
    (0..=n).map(|i| 2f64.powi(i as i32)).collect()
}

/// Mode amplitudes `X_1..X_N` at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellState {
    pub t: f64,
    pub x: Vec<f64>,
}

impl ShellState {
    pub fn new(t: f64, x: Vec<f64>) -> Result<Self> {
        let s = ShellState { t, x };
        s.validate()?;
        Ok(s)
    }

    pub fn zeros(t: f64, n_modes: usize) -> Result<Self> {
        Self::new(t, vec![0.0; n_modes])
    }

    pub fn n_modes(&self) -> usize {
        self.x.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.is_empty() {
            return Err(Error::InvalidState("at least one mode required".into()));
        }
        if !self.t.is_finite() {
            return Err(Error::InvalidState(format!("time {} not finite", self.t)));
        }
        if let Some(i) = self.x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidState(format!("X{} not finite", i + 1)));
        }
        Ok(())
    }

    pub fn is_positive(&self) -> bool {
        self.x.iter().all(|&v| v >= 0.0)
    }

    /// Amplitude of mode `n` (1-based); `X_0` and `X_{N+1}` read as zero.
    pub fn mode(&self, n: usize) -> f64 {
        if n == 0 || n > self.x.len() {
            0.0
        } else {
            self.x[n - 1]
        }
    }

    /// Euclidean norm `|X|`.
    pub fn norm(&self) -> f64 {
        self.x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Partial energies `φ_n = Σ_{j≤n} X_j²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyDecomposition {
    pub partial: Vec<f64>,
    pub total: f64,
}

impl EnergyDecomposition {
    /// `φ_n` (1-based); `φ_0 = 0`, indices past `N` saturate at the total.
    pub fn phi(&self, n: usize) -> f64 {
        match n {
            0 => 0.0,
            n if n >= self.partial.len() => self.total,
            n => self.partial[n - 1],
        }
    }
}

/// Writes the vector field into `out`. `k` holds `k_0..=k_N`; `upper` is the
/// value taken by `X_{N+1}` (zero for the Galerkin truncation).
#[inline]
pub(crate) fn rhs_into(x: &[f64], upper: f64, k: &[f64], out: &mut [f64]) {
    let n = x.len();
    let mut prev = 0.0;
    for i in 0..n {
        let next = if i + 1 < n { x[i + 1] } else { upper };
        // X_{i+1}: gains k_i X_i^2 from below, loses k_{i+1} X_{i+1} X_{i+2} upward
        out[i] = k[i] * prev * prev - k[i + 1] * x[i] * next;
        prev = x[i];
    }
}

/// Vector field of the Galerkin truncation.
pub fn rhs(state: &ShellState) -> Result<Vec<f64>> {
    state.validate()?;
    let k = wavenumbers(state.n_modes());
    let mut out = vec![0.0; state.n_modes()];
    rhs_into(&state.x, 0.0, &k, &mut out);
    Ok(out)
}

pub fn energy(state: &ShellState) -> EnergyDecomposition {
    energy_of(&state.x)
}

pub(crate) fn energy_of(x: &[f64]) -> EnergyDecomposition {
    let mut acc = 0.0;
    let partial: Vec<f64> = x
        .iter()
        .map(|v| {
            acc += v * v;
            acc
        })
        .collect();
    EnergyDecomposition {
        total: acc,
        partial,
    }
}

/// Energy flux `k_n X_n² X_{n+1}` from shells `≤ n` to shell `n+1`.
pub fn flux(state: &ShellState, n: usize) -> Result<f64> {
    let big_n = state.n_modes();
    if n < 1 || n + 1 > big_n {
        return Err(Error::IndexOutOfRange {
            index: n as i64,
            lo: 1,
            hi: big_n as i64 - 1,
        });
    }
    let xn = state.mode(n);
    Ok(wavenumber(n as u32)? * xn * xn * state.mode(n + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavenumbers_are_powers_of_two() {
        assert_eq!(wavenumber(0).unwrap(), 1.0);
        assert_eq!(wavenumber(1).unwrap(), 2.0);
        assert_eq!(wavenumber(10).unwrap(), 1024.0);
        assert_eq!(wavenumber(60).unwrap(), (1u64 << 60) as f64);
        assert_eq!(wavenumber(1024), Err(Error::Overflow(1024)));
        assert!(wavenumber(1023).unwrap().is_finite());
    }

    #[test]
    fn rhs_single_mode_feeds_second() {
        let s = ShellState::new(0.0, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(rhs(&s).unwrap(), vec![0.0, 2.0, 0.0, 0.0]);
        let z = ShellState::zeros(0.0, 5).unwrap();
        assert!(rhs(&z).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn energy_partial_sums() {
        let s = ShellState::new(0.0, vec![3.0, 4.0]).unwrap();
        let e = energy(&s);
        assert_eq!(e.partial, vec![9.0, 25.0]);
        assert_eq!(e.total, 25.0);
        assert_eq!(e.phi(0), 0.0);
        assert_eq!(e.phi(7), 25.0);
    }

    #[test]
    fn flux_values_and_range() {
        let s = ShellState::new(0.0, vec![1.0, 1.0]).unwrap();
        assert_eq!(flux(&s, 1).unwrap(), 2.0);
        let s = ShellState::new(0.0, vec![1.0, 0.0]).unwrap();
        assert_eq!(flux(&s, 1).unwrap(), 0.0);
        assert!(matches!(flux(&s, 2), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(flux(&s, 0), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn invalid_states_rejected() {
        assert!(ShellState::new(0.0, vec![]).is_err());
        assert!(ShellState::new(0.0, vec![1.0, f64::NAN]).is_err());
        assert!(ShellState::new(f64::INFINITY, vec![1.0]).is_err());
    }

    #[test]
    fn truncated_energy_derivative_vanishes() {
        let s = ShellState::new(0.0, vec![0.7, -1.3, 0.4, 2.1, -0.2, 0.9]).unwrap();
        let f = rhs(&s).unwrap();
        let de: f64 = s.x.iter().zip(&f).map(|(x, d)| 2.0 * x * d).sum();
        assert!(de.abs() < 1e-12, "{de}");
    }
}
