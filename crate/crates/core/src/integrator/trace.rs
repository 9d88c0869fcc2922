use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::output::{fmt_sci, write_atomic};
use crate::shell::{energy_of, EnergyDecomposition, ShellState};

/// Step-control bookkeeping for one integration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: u64,
    pub rejected: u64,
    pub min_step: f64,
    pub max_step: f64,
    /// Accepted-step entries pulled from `[-atol, 0)` back to zero.
    pub clamped: u64,
    /// Largest observed increase of any `φ_n` across one accepted step
    /// (positive runs only; zero otherwise).
    pub max_phi_increase: f64,
}

/// Time-ordered samples of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub samples: Vec<ShellState>,
    pub energies: Vec<EnergyDecomposition>,
    pub step_stats: StepStats,
}

impl Trace {
    pub(crate) fn empty() -> Self {
        Trace {
            samples: Vec::new(),
            energies: Vec::new(),
            step_stats: StepStats {
                min_step: f64::INFINITY,
                ..Default::default()
            },
        }
    }

    /// Builds a trace from bare samples (used when re-reading CSV output).
    pub fn from_samples(samples: Vec<ShellState>) -> Result<Self> {
        let energies = samples.iter().map(|s| energy_of(&s.x)).collect();
        let tr = Trace {
            samples,
            energies,
            step_stats: StepStats::default(),
        };
        tr.check_monotone()?;
        Ok(tr)
    }

    pub(crate) fn push(&mut self, t: f64, x: &[f64]) {
        self.energies.push(energy_of(x));
        self.samples.push(ShellState { t, x: x.to_vec() });
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_modes(&self) -> usize {
        self.samples.first().map_or(0, |s| s.n_modes())
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn first(&self) -> Option<&ShellState> {
        self.samples.first()
    }

    pub fn last(&self) -> Option<&ShellState> {
        self.samples.last()
    }

    /// Time series of mode `n` (1-based).
    pub fn mode_series(&self, n: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.mode(n)).collect()
    }

    pub fn is_positive(&self) -> bool {
        self.samples.iter().all(|s| s.is_positive())
    }

    /// Sample times must be strictly increasing or strictly decreasing.
    pub fn check_monotone(&self) -> Result<()> {
        if self.samples.len() < 2 {
            return Ok(());
        }
        let dir = (self.samples[1].t - self.samples[0].t).signum();
        let ok = dir != 0.0
            && self
                .samples
                .windows(2)
                .all(|w| (w[1].t - w[0].t).signum() == dir);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidState(
                "trace times not strictly monotone".into(),
            ))
        }
    }

    /// CSV with header `t,X1,...,XN,energy`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let n = self.n_modes();
        let mut out = String::from("t");
        for i in 1..=n {
            let _ = write!(out, ",X{i}");
        }
        out.push_str(",energy\n");
        for (s, e) in self.samples.iter().zip(&self.energies) {
            out.push_str(&fmt_sci(s.t));
            for v in &s.x {
                out.push(',');
                out.push_str(&fmt_sci(*v));
            }
            out.push(',');
            out.push_str(&fmt_sci(e.total));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv().as_bytes())
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidState("empty trace CSV".into()))?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() < 3 || cols[0] != "t" || cols[cols.len() - 1] != "energy" {
            return Err(Error::InvalidState(format!("bad trace header `{header}`")));
        }
        let n = cols.len() - 2;
        let mut samples = Vec::new();
        for (row, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let vals: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|v| v.trim().parse::<f64>()).collect();
            let vals = vals.map_err(|e| Error::InvalidState(format!("row {}: {e}", row + 2)))?;
            if vals.len() != n + 2 {
                return Err(Error::InvalidState(format!(
                    "row {} has {} columns, expected {}",
                    row + 2,
                    vals.len(),
                    n + 2
                )));
            }
            samples.push(ShellState::new(vals[0], vals[1..=n].to_vec())?);
        }
        Self::from_samples(samples)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}
