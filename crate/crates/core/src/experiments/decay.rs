use serde_json::Value;

use super::{
    integrate_segments, log_segments, params, resolved_modes, Criterion, ExperimentReport,
    ExperimentRun, RunSettings,
};
use crate::error::{Error, Result};
use crate::integrator::Trace;
use crate::shell::ShellState;

/// Allowed growth of the running supremum over the last decade.
pub const SUP_GROWTH_TOL: f64 = 0.05;
/// Allowed decline of `I(t) − k_n⁻¹ log t` over the last decade, as a
/// fraction of the bound's growth per decade.
pub const LOWER_DECLINE_TOL: f64 = 0.05;

fn check_positive(initial: &ShellState) -> Result<()> {
    initial.validate()?;
    if !initial.is_positive() {
        return Err(Error::Precondition(
            "initial data must be nonnegative".into(),
        ));
    }
    Ok(())
}

/// Running supremum of `t²·φ(t)` over `t ∈ [1, t_max]`, where `φ` is the
/// resolved energy.
pub fn decay_upper_experiment(
    initial: &ShellState,
    t_max: f64,
    settings: &RunSettings,
) -> Result<ExperimentRun> {
    check_positive(initial)?;
    if !(t_max >= 10.0 * initial.t.max(1.0)) {
        return Err(Error::Precondition(
            "t_max must cover at least one decade beyond max(t, 1)".into(),
        ));
    }
    let trace = integrate_segments(initial, &log_segments(initial.t, t_max), settings)?;
    let report = evaluate_decay_upper(&trace, t_max)?;
    Ok(ExperimentRun {
        report,
        traces: vec![("trace".into(), trace)],
    })
}

pub fn evaluate_decay_upper(trace: &Trace, t_max: f64) -> Result<ExperimentReport> {
    let n = trace.n_modes();
    let res = resolved_modes(n);
    let mut sup: f64 = 0.0;
    let mut sup_decade: f64 = 0.0;
    let mut monotone = true;
    let mut prev = f64::NEG_INFINITY;
    let mut last_q = 0.0;
    let mut samples = 0usize;
    for (s, e) in trace.samples.iter().zip(&trace.energies) {
        if s.t < 1.0 {
            continue;
        }
        let q = s.t * s.t * e.phi(res);
        sup = sup.max(q);
        if s.t <= t_max / 10.0 {
            sup_decade = sup;
        }
        monotone &= q >= prev;
        prev = q;
        last_q = q;
        samples += 1;
    }
    if samples == 0 {
        return Err(Error::InvalidState("no samples with t >= 1".into()));
    }
    let growth = if sup == 0.0 {
        0.0
    } else if sup_decade > 0.0 {
        sup / sup_decade - 1.0
    } else {
        f64::INFINITY
    };
    let last = trace.last().expect("nonempty");
    let mut r = ExperimentReport::new(
        "decay_upper",
        params([("t_max", Value::from(t_max)), ("N", Value::from(n))]),
    );
    r.scalar("sup_t2_energy", sup);
    r.scalar("sup_at_decade_start", sup_decade);
    r.scalar("last_decade_growth", growth);
    r.scalar("t2_energy_final", last_q);
    r.scalar(
        "t2_total_energy_final",
        last.t * last.t * trace.energies.last().unwrap().total,
    );
    r.scalar("sampled_monotone", if monotone { 1.0 } else { 0.0 });
    r.scalar("resolved_modes", res as f64);
    r.check(Criterion::below(
        "last_decade_growth",
        growth,
        SUP_GROWTH_TOL,
    ));
    r.check(Criterion::holds("finite_sup", sup.is_finite()));
    Ok(r)
}

/// `I(t) = ∫₁ᵗ X_{n+1}` against the lower bound `k_n⁻¹ log t`.
pub fn decay_lower_experiment(
    initial: &ShellState,
    n: usize,
    t_max: f64,
    settings: &RunSettings,
) -> Result<ExperimentRun> {
    check_positive(initial)?;
    let res = resolved_modes(initial.n_modes());
    if n < 1 || n + 1 > res {
        return Err(Error::Precondition(format!(
            "mode {n} is outside the resolved window 1..{}",
            res.saturating_sub(1)
        )));
    }
    if initial.t > 1.0 {
        return Err(Error::Precondition("initial time must be at most 1".into()));
    }
    if !(t_max >= 100.0) {
        return Err(Error::Precondition("t_max must be at least 100".into()));
    }
    if initial.t == 1.0 && !(initial.mode(n) > 0.0) {
        return Err(Error::Precondition(format!("X_{n}(1) must be positive")));
    }
    let trace = integrate_segments(initial, &log_segments(initial.t, t_max), settings)?;
    let report = evaluate_decay_lower(&trace, n, t_max)?;
    Ok(ExperimentRun {
        report,
        traces: vec![("trace".into(), trace)],
    })
}

/// Cumulative trapezoid of mode `m` from `t = 1`; returns `(t, I(t))`.
pub fn integral_from_one(trace: &Trace, m: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut acc = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for s in &trace.samples {
        if s.t < 1.0 {
            continue;
        }
        let v = s.mode(m);
        if let Some((tp, vp)) = prev {
            acc += 0.5 * (s.t - tp) * (v + vp);
        }
        out.push((s.t, acc));
        prev = Some((s.t, v));
    }
    out
}

pub fn evaluate_decay_lower(trace: &Trace, n: usize, t_max: f64) -> Result<ExperimentReport> {
    let at_one = trace
        .samples
        .iter()
        .find(|s| s.t == 1.0)
        .ok_or_else(|| Error::InvalidState("trace has no sample at t = 1".into()))?;
    if !(at_one.mode(n) > 0.0) {
        return Err(Error::Precondition(format!("X_{n}(1) must be positive")));
    }
    let kn_inv = 2f64.powi(-(n as i32));
    let integral = integral_from_one(trace, n + 1);
    let d: Vec<(f64, f64)> = integral
        .iter()
        .map(|&(t, i)| (t, i - kn_inv * t.ln()))
        .collect();
    let d_min = d
        .iter()
        .filter(|(t, _)| *t >= 10.0)
        .map(|p| p.1)
        .fold(f64::INFINITY, f64::min);
    let start = t_max / 10.0;
    let d_start = d
        .iter()
        .rev()
        .find(|(t, _)| *t <= start)
        .map(|p| p.1)
        .ok_or_else(|| Error::InvalidState("no sample at the last decade start".into()))?;
    let d_last_min = d
        .iter()
        .filter(|(t, _)| *t >= start)
        .map(|p| p.1)
        .fold(f64::INFINITY, f64::min);
    let decline = (d_start - d_last_min).max(0.0);
    let allowed = LOWER_DECLINE_TOL * kn_inv * 10f64.ln();
    let i_end = integral.last().map_or(0.0, |p| p.1);
    let i_start = integral
        .iter()
        .rev()
        .find(|(t, _)| *t <= start)
        .map_or(0.0, |p| p.1);
    let last = trace.last().expect("nonempty");

    let mut r = ExperimentReport::new(
        "decay_lower",
        params([
            ("n", Value::from(n)),
            ("t_max", Value::from(t_max)),
            ("N", Value::from(trace.n_modes())),
        ]),
    );
    r.scalar("k_n_inverse", kn_inv);
    r.scalar("integral_final", i_end);
    r.scalar("log_slope_last_decade", (i_end - i_start) / 10f64.ln());
    r.scalar("lower_constant", d_min);
    r.scalar("last_decade_decline", decline);
    r.scalar("t_times_next_mode_final", last.t * last.mode(n + 1));
    r.check(Criterion::below("last_decade_decline", decline, allowed));
    r.check(Criterion::holds("lower_constant_finite", d_min.is_finite()));
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_data() {
        let z = ShellState::zeros(0.0, 12).unwrap();
        let run = decay_upper_experiment(&z, 100.0, &RunSettings::default()).unwrap();
        assert_eq!(run.report.scalars["sup_t2_energy"], 0.0);
        assert!(run.report.pass);
        let z1 = ShellState::zeros(1.0, 12).unwrap();
        assert!(decay_lower_experiment(&z1, 3, 1000.0, &RunSettings::default()).is_err());
        let z0 = ShellState::zeros(0.0, 12).unwrap();
        assert!(matches!(
            decay_lower_experiment(&z0, 3, 1000.0, &RunSettings::default()),
            Err(Error::Precondition(_))
        ));
    }
}
