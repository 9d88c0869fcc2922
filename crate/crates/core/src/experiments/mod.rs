//! Desk-scale reproductions of the model's dynamical claims.
//!
//! Every experiment is split into a run, which produces traces, and an
//! evaluation, which is a pure function of those traces. Re-evaluating a
//! stored trace therefore reproduces the verdict bit for bit.

mod blowup;
mod budget;
mod decay;
mod dissipation;

pub use blowup::{
    blowup_demo, coalescence_demo, evaluate_blowup, evaluate_coalescence, BLOWUP_WINDOW,
    GROWTH_TARGET, MATCH_TOL, MATCH_UNTIL,
};
pub use budget::{build_budget, DissipationBudget, C_GRID};
pub use decay::{
    decay_lower_experiment, decay_upper_experiment, evaluate_decay_lower, evaluate_decay_upper,
    integral_from_one, LOWER_DECLINE_TOL, SUP_GROWTH_TOL,
};
pub use dissipation::{dissipation_experiment, evaluate_dissipation};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::integrator::{integrate_positive, IntegratorConfig, Method, StepStats, Trace};
use crate::output::{object, SCHEMA_VERSION};
use crate::series::SeriesTable;
use crate::shell::ShellState;

/// Modes closer than this to the truncation level are not asserted on.
pub const TAIL_WINDOW: usize = 6;

/// Highest mode whose behaviour is asserted at truncation `n_modes`.
pub fn resolved_modes(n_modes: usize) -> usize {
    n_modes.saturating_sub(TAIL_WINDOW).max(1)
}

/// One explicit pass/fail test inside a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    /// `"<="`, `"<"`, `">="` or `"=="`.
    pub relation: String,
    pub pass: bool,
}

impl Criterion {
    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self::new(name, value, bound, "<=", value <= bound)
    }

    pub fn below(name: &str, value: f64, bound: f64) -> Self {
        Self::new(name, value, bound, "<", value < bound)
    }

    pub fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Self::new(name, value, bound, ">=", value >= bound)
    }

    /// A boolean property encoded as `value == 1`.
    pub fn holds(name: &str, ok: bool) -> Self {
        Self::new(name, if ok { 1.0 } else { 0.0 }, 1.0, "==", ok)
    }

    fn new(name: &str, value: f64, bound: f64, rel: &str, pass: bool) -> Self {
        Criterion {
            name: name.into(),
            value,
            bound,
            relation: rel.into(),
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub params: BTreeMap<String, Value>,
    pub scalars: BTreeMap<String, f64>,
    pub criteria: Vec<Criterion>,
    pub pass: bool,
    pub artifacts: Vec<String>,
}

impl ExperimentReport {
    pub fn new(name: &str, params: BTreeMap<String, Value>) -> Self {
        ExperimentReport {
            name: name.into(),
            params,
            scalars: BTreeMap::new(),
            criteria: Vec::new(),
            pass: true,
            artifacts: Vec::new(),
        }
    }

    pub fn scalar(&mut self, key: &str, v: f64) {
        self.scalars.insert(key.into(), v);
    }

    pub fn check(&mut self, c: Criterion) {
        self.pass &= c.pass;
        self.criteria.push(c);
    }

    pub fn criterion(&self, name: &str) -> Option<&Criterion> {
        self.criteria.iter().find(|c| c.name == name)
    }

    /// JSON object with `schema_version`; non-finite scalars become `null`.
    pub fn to_json(&self) -> Value {
        let num = |v: f64| serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number);
        let scalars = object(self.scalars.iter().map(|(k, v)| (k.clone(), num(*v))));
        let criteria = Value::Array(
            self.criteria
                .iter()
                .map(|c| {
                    object([
                        ("name", Value::from(c.name.clone())),
                        ("value", num(c.value)),
                        ("bound", num(c.bound)),
                        ("relation", Value::from(c.relation.clone())),
                        ("pass", Value::from(c.pass)),
                    ])
                })
                .collect(),
        );
        object([
            ("name", Value::from(self.name.clone())),
            ("params", object(self.params.clone())),
            ("scalars", scalars),
            ("criteria", criteria),
            ("pass", Value::from(self.pass)),
            (
                "artifacts",
                Value::Array(self.artifacts.iter().cloned().map(Value::from).collect()),
            ),
            ("schema_version", Value::from(SCHEMA_VERSION)),
        ])
    }
}

/// A report plus the named traces it was computed from.
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub report: ExperimentReport,
    pub traces: Vec<(String, Trace)>,
}

/// Integration settings shared by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub rtol: f64,
    pub atol: f64,
    pub method: Method,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            rtol: 1e-10,
            atol: 1e-14,
            method: Method::Rosenbrock,
        }
    }
}

impl RunSettings {
    pub fn config(&self, t_end: f64, record_every: f64) -> IntegratorConfig {
        IntegratorConfig::new(t_end)
            .with_tolerances(self.rtol, self.atol)
            .with_method(self.method)
            .with_record_every(record_every)
    }
}

pub fn params<I: IntoIterator<Item = (&'static str, Value)>>(it: I) -> BTreeMap<String, Value> {
    it.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Positive integration through consecutive `(t_end, record_every)` segments,
/// concatenated into one trace.
pub(crate) fn integrate_segments(
    initial: &ShellState,
    segments: &[(f64, f64)],
    settings: &RunSettings,
) -> Result<Trace> {
    let mut state = initial.clone();
    let mut out: Option<Trace> = None;
    for &(t_end, every) in segments {
        if t_end <= state.t {
            continue;
        }
        let tr = integrate_positive(&state, &settings.config(t_end, every))?;
        state = tr.last().expect("nonempty trace").clone();
        out = Some(match out {
            None => tr,
            Some(mut acc) => {
                merge_stats(&mut acc.step_stats, &tr.step_stats);
                acc.samples.extend(tr.samples.into_iter().skip(1));
                acc.energies.extend(tr.energies.into_iter().skip(1));
                acc
            }
        });
    }
    out.ok_or_else(|| Error::Precondition("no segment beyond the initial time".into()))
}

fn merge_stats(a: &mut StepStats, b: &StepStats) {
    a.accepted += b.accepted;
    a.rejected += b.rejected;
    a.min_step = a.min_step.min(b.min_step);
    a.max_step = a.max_step.max(b.max_step);
    a.clamped += b.clamped;
    a.max_phi_increase = a.max_phi_increase.max(b.max_phi_increase);
}

/// Decade-graded sampling from `t0` to `t_max`: spacing `1e-3·10^d` on the
/// `d`-th decade above `max(t0, 1)`.
pub(crate) fn log_segments(t0: f64, t_max: f64) -> Vec<(f64, f64)> {
    let mut segs = Vec::new();
    let mut start = t0.max(1.0);
    if t0 < 1.0 {
        segs.push((1.0_f64.min(t_max), 1e-3));
    }
    let mut spacing = 1e-3 * start;
    while start < t_max {
        let end = (start * 10.0).min(t_max);
        segs.push((end, spacing));
        start = end;
        spacing *= 10.0;
    }
    segs
}

/// Independent experiment jobs for [`run_batch`].
#[derive(Debug, Clone, PartialEq)]
pub enum Job {
    Dissipation {
        l: f64,
        n_modes: usize,
        m: usize,
        eps: f64,
    },
    DecayUpper {
        initial: ShellState,
        t_max: f64,
    },
    DecayLower {
        initial: ShellState,
        n: usize,
        t_max: f64,
    },
    Blowup {
        n0: usize,
        t0: f64,
        n_modes: usize,
    },
    Coalescence {
        n0: usize,
        t0: f64,
        n_modes: usize,
    },
}

impl Job {
    pub fn run(&self, table: &SeriesTable, settings: &RunSettings) -> Result<ExperimentRun> {
        match self {
            Job::Dissipation { l, n_modes, m, eps } => {
                dissipation_experiment(*l, *n_modes, *m, *eps, settings)
            }
            Job::DecayUpper { initial, t_max } => decay_upper_experiment(initial, *t_max, settings),
            Job::DecayLower { initial, n, t_max } => {
                decay_lower_experiment(initial, *n, *t_max, settings)
            }
            Job::Blowup { n0, t0, n_modes } => blowup_demo(*n0, *t0, *n_modes, table),
            Job::Coalescence { n0, t0, n_modes } => {
                coalescence_demo(*n0, *t0, *n_modes, table, settings)
            }
        }
    }
}

/// Runs independent jobs, each with its own integrator, keeping input order.
pub fn run_batch(
    jobs: &[Job],
    table: &SeriesTable,
    settings: &RunSettings,
    exec: Execution,
) -> Vec<Result<ExperimentRun>> {
    exec.map(jobs, |j| j.run(table, settings))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segments_cover_range() {
        let s = log_segments(0.0, 1000.0);
        assert_eq!(
            s,
            vec![(1.0, 1e-3), (10.0, 1e-3), (100.0, 1e-2), (1000.0, 1e-1)]
        );
        let s = log_segments(1.0, 50.0);
        assert_eq!(s, vec![(10.0, 1e-3), (50.0, 1e-2)]);
    }

    #[test]
    fn report_json_shape() {
        let mut r = ExperimentReport::new("x", params([("a", Value::from(1))]));
        r.scalar("nan", f64::NAN);
        r.check(Criterion::at_most("c", 1.0, 2.0));
        r.check(Criterion::holds("d", false));
        assert!(!r.pass);
        let j = r.to_json();
        assert_eq!(j["schema_version"], Value::from(SCHEMA_VERSION));
        assert_eq!(j["scalars"]["nan"], Value::Null);
        assert_eq!(j["criteria"][0]["pass"], Value::from(true));
        assert_eq!(j["pass"], Value::from(false));
    }
}
