//! Negative self-similar data `Y_n(t) = a_n/(t − t₀)`, `t < t₀`.

use serde_json::Value;

use super::{params, Criterion, ExperimentReport, ExperimentRun, RunSettings};
use crate::error::{Error, Result};
use crate::integrator::{integrate, integrate_outcome, Boundary, IntegratorConfig, Method, Trace};
use crate::selfsimilar::{build_profile, SelfSimilarProfile};
use crate::series::SeriesTable;
use crate::shell::ShellState;

/// Number of active modes followed by the driven blow-up run.
pub const BLOWUP_WINDOW: usize = 3;
pub const GROWTH_TARGET: f64 = 1e6;
pub const MATCH_TOL: f64 = 1e-4;
pub const MATCH_UNTIL: f64 = 1e3;

fn check_t0(t0: f64) -> Result<()> {
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(Error::Precondition(format!(
            "blow-up time must be positive, got {t0}"
        )));
    }
    Ok(())
}

fn profile_for(
    n0: usize,
    t0: f64,
    n_modes: usize,
    table: &SeriesTable,
) -> Result<SelfSimilarProfile> {
    build_profile(n0, t0, n_modes.max(n0 + BLOWUP_WINDOW + 1), table)
}

/// Integrates the tracked window `n₀+1..n₀+3` with `X_{n₀+4}` prescribed by
/// the closed form, up to the step-size underflow before `t₀`. A plain
/// Galerkin run on `n_modes` modes from the same data is reported alongside.
pub fn blowup_demo(
    n0: usize,
    t0: f64,
    n_modes: usize,
    table: &SeriesTable,
) -> Result<ExperimentRun> {
    check_t0(t0)?;
    let profile = profile_for(n0, t0, n_modes, table)?;
    let nd = n0 + BLOWUP_WINDOW;
    let y0 = ShellState::new(0.0, profile.a[..nd].iter().map(|a| -a / t0).collect())?;
    let mut cfg = IntegratorConfig::new(t0)
        .with_method(Method::Dopri5)
        .with_tolerances(1e-12, 1e-300)
        .with_record_every(1e-3 * t0)
        .with_steps(1e-14 * t0, f64::INFINITY)
        .with_boundary(Boundary::Driven {
            amplitude: profile.coeff(nd + 1),
            t0,
        });
    cfg.record_steps = true;
    cfg.max_steps = 5_000_000;
    let driven = integrate_outcome(&y0, &cfg)?.trace;

    let g0 = profile.state_at(0.0)?;
    let g0 = ShellState::new(0.0, g0.x[..n_modes.max(nd)].to_vec())?;
    let gcfg = RunSettings::default().config(0.999 * t0, 1e-3 * t0);
    let galerkin = integrate(&g0, &gcfg)?;

    let report = evaluate_blowup(n0, t0, n_modes, table, &driven, &galerkin)?;
    Ok(ExperimentRun {
        report,
        traces: vec![("driven".into(), driven), ("galerkin".into(), galerkin)],
    })
}

pub fn evaluate_blowup(
    n0: usize,
    t0: f64,
    n_modes: usize,
    table: &SeriesTable,
    driven: &Trace,
    galerkin: &Trace,
) -> Result<ExperimentReport> {
    let profile = profile_for(n0, t0, n_modes, table)?;
    let tracked = n0 + 1..=n0 + BLOWUP_WINDOW;
    let first = driven
        .first()
        .ok_or_else(|| Error::InvalidState("empty trace".into()))?;
    let last = driven.last().expect("nonempty");

    let mut min_growth = f64::INFINITY;
    for n in tracked.clone() {
        let y0 = first.mode(n).abs();
        let peak = driven
            .samples
            .iter()
            .map(|s| s.mode(n).abs())
            .fold(0.0, f64::max);
        min_growth = min_growth.min(peak / y0);
    }
    let mut worst = 0.0f64;
    let mut matched_until = first.t;
    for s in &driven.samples {
        let exact: Vec<f64> = tracked
            .clone()
            .map(|n| profile.coeff(n) / (s.t - t0))
            .collect();
        let size = exact.iter().map(|v| v * v).sum::<f64>().sqrt();
        if size > MATCH_UNTIL {
            break;
        }
        for (j, n) in tracked.clone().enumerate() {
            worst = worst.max(((s.mode(n) - exact[j]) / exact[j]).abs());
        }
        matched_until = s.t;
    }
    let negative = tracked.clone().all(|n| first.mode(n) < 0.0);
    let ended_early = last.t < t0;

    let mut gal_growth: f64 = 0.0;
    if let (Some(g0), Some(_)) = (galerkin.first(), galerkin.last()) {
        for n in tracked.clone() {
            let peak = galerkin
                .samples
                .iter()
                .map(|s| s.mode(n).abs())
                .fold(0.0, f64::max);
            gal_growth = gal_growth.max(peak / g0.mode(n).abs());
        }
    }

    let mut r = ExperimentReport::new(
        "blowup",
        params([
            ("n0", Value::from(n0)),
            ("t0", Value::from(t0)),
            ("N", Value::from(n_modes)),
            ("window", Value::from(BLOWUP_WINDOW)),
        ]),
    );
    r.scalar("min_growth", min_growth);
    r.scalar("max_rel_error_until_1e3", worst);
    r.scalar("matched_until_t", matched_until);
    r.scalar("t_last", last.t);
    r.scalar("distance_to_t0", t0 - last.t);
    r.scalar("galerkin_max_growth", gal_growth);
    r.scalar("energy_coefficient", profile.energy_coefficient());
    r.check(Criterion::holds("initial_components_negative", negative));
    r.check(Criterion::at_least("min_growth", min_growth, GROWTH_TARGET));
    r.check(Criterion::at_most(
        "max_rel_error_until_1e3",
        worst,
        MATCH_TOL,
    ));
    r.check(Criterion::holds("step_underflow_before_t0", ended_early));
    Ok(r)
}

/// Same data `Y(0)`: the analytic solution gains energy like `(t₀ − t)⁻²`
/// while the Galerkin truncation conserves it.
pub fn coalescence_demo(
    n0: usize,
    t0: f64,
    n_modes: usize,
    table: &SeriesTable,
    settings: &RunSettings,
) -> Result<ExperimentRun> {
    check_t0(t0)?;
    let profile = build_profile(n0, t0, n_modes, table)?;
    let y0 = profile.state_at(0.0)?;
    let cfg = settings.config(0.75 * t0, t0 / 200.0);
    let trace = integrate(&y0, &cfg)?;
    let report = evaluate_coalescence(n0, t0, table, &trace)?;
    Ok(ExperimentRun {
        report,
        traces: vec![("galerkin".into(), trace)],
    })
}

pub fn evaluate_coalescence(
    n0: usize,
    t0: f64,
    table: &SeriesTable,
    trace: &Trace,
) -> Result<ExperimentReport> {
    let n = trace.n_modes();
    let profile = build_profile(n0, t0, n, table)?;
    let first = trace
        .first()
        .ok_or_else(|| Error::InvalidState("empty trace".into()))?;
    let e0 = trace.energies[0].total;
    let ecoef = profile.energy_coefficient();
    let mut drift: f64 = 0.0;
    let mut max_ratio: f64 = 0.0;
    let mut gaps = Vec::with_capacity(trace.len());
    for (s, e) in trace.samples.iter().zip(&trace.energies) {
        drift = drift.max(((e.total - e0) / e0).abs());
        max_ratio = max_ratio.max(ecoef / (t0 - s.t).powi(2) / e0);
        let exact = profile.state_at(s.t)?;
        let gap =
            s.x.iter()
                .zip(&exact.x)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
        gaps.push(gap);
    }
    let monotone = gaps.windows(2).all(|w| w[1] >= w[0]);
    let half = ecoef / (0.5 * t0).powi(2) / e0;

    let mut r = ExperimentReport::new(
        "coalescence",
        params([
            ("n0", Value::from(n0)),
            ("t0", Value::from(t0)),
            ("N", Value::from(n)),
        ]),
    );
    r.scalar("initial_energy", e0);
    r.scalar("analytic_ratio_at_half", half);
    r.scalar("analytic_ratio_max", max_ratio);
    r.scalar("galerkin_energy_drift", drift);
    r.scalar("final_gap", *gaps.last().unwrap_or(&0.0));
    r.check(Criterion::holds(
        "initial_components_nonpositive",
        first.x.iter().all(|&v| v <= 0.0),
    ));
    r.check(Criterion::at_least(
        "analytic_energy_ratio_at_half",
        half,
        4.0,
    ));
    r.check(Criterion::below("galerkin_energy_drift", drift, 1e-8));
    r.check(Criterion::holds("gap_monotone", monotone));
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{build_series, DEFAULT_TERMS};

    #[test]
    fn blowup_and_coalescence_pass() {
        let t = build_series(DEFAULT_TERMS).unwrap();
        let run = blowup_demo(0, 1.0, 12, &t).unwrap();
        assert!(run.report.pass, "{:#?}", run.report);
        let run = coalescence_demo(0, 1.0, 12, &t, &RunSettings::default()).unwrap();
        assert!(run.report.pass, "{:#?}", run.report);
        assert!(blowup_demo(0, -1.0, 12, &t).is_err());
    }
}
