use serde_json::Value;

use super::{
    build_budget, integrate_segments, params, resolved_modes, Criterion, ExperimentReport,
    ExperimentRun, RunSettings,
};
use crate::error::{Error, Result};
use crate::integrator::Trace;
use crate::shell::ShellState;

/// Range over which the budget constant is fitted.
const BUDGET_N_MAX: usize = 60;

/// From the flat state `X_n = L` integrates to `T = ε⁻² Σ_{k≥M} s_k` and
/// checks `φ(T) ≤ φ_{M−1}(0) + ε Σ_{n≥M} a_n` on the resolved energy.
pub fn dissipation_experiment(
    l: f64,
    n_modes: usize,
    m: usize,
    eps: f64,
    settings: &RunSettings,
) -> Result<ExperimentRun> {
    if !(1..=n_modes).contains(&m) {
        return Err(Error::Precondition(format!("need 1 <= M <= N, got M={m}")));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Precondition(format!("need 0 < eps <= 1, got {eps}")));
    }
    let budget = build_budget(l, BUDGET_N_MAX)?;
    let horizon = budget.s_tail(m) / (eps * eps);
    let initial = ShellState::new(0.0, vec![l; n_modes])?;
    let trace = integrate_segments(&initial, &[(horizon, horizon / 200.0)], settings)?;
    let report = evaluate_dissipation(l, n_modes, m, eps, &trace)?;
    Ok(ExperimentRun {
        report,
        traces: vec![("trace".into(), trace)],
    })
}

pub fn evaluate_dissipation(
    l: f64,
    n_modes: usize,
    m: usize,
    eps: f64,
    trace: &Trace,
) -> Result<ExperimentReport> {
    let budget = build_budget(l, BUDGET_N_MAX)?;
    let horizon = budget.s_tail(m) / (eps * eps);
    let first = trace
        .first()
        .ok_or_else(|| Error::InvalidState("empty trace".into()))?;
    let last = trace.last().expect("nonempty");
    let res = resolved_modes(n_modes);
    let e0 = &trace.energies[0];
    let e1 = trace.energies.last().expect("nonempty");
    let slack = eps * budget.a_tail(m);
    let bound = e0.phi(m - 1) + slack;

    let mut r = ExperimentReport::new(
        "dissipation",
        params([
            ("L", Value::from(l)),
            ("N", Value::from(n_modes)),
            ("M", Value::from(m)),
            ("eps", Value::from(eps)),
        ]),
    );
    r.scalar("C", budget.c);
    r.scalar("horizon", horizon);
    r.scalar("t_final", last.t);
    r.scalar("phi_resolved_final", e1.phi(res));
    r.scalar("phi_total_final", e1.total);
    r.scalar("phi_total_initial", e0.total);
    r.scalar("phi_M_minus_1_initial", e0.phi(m - 1));
    r.scalar("slack", slack);
    r.scalar("bound", bound);
    r.scalar("resolved_modes", res as f64);
    r.check(Criterion::at_most(
        "reached_horizon",
        (horizon - last.t).abs(),
        1e-9 * horizon,
    ));
    r.check(Criterion::at_most("budget_inequality", e1.phi(res), bound));
    r.check(Criterion::holds(
        "starts_flat",
        first.x.iter().all(|&v| v == l),
    ));
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_unit_data_within_budget() {
        let run = dissipation_experiment(1.0, 28, 1, 1.0, &RunSettings::default()).unwrap();
        assert!(run.report.pass, "{:?}", run.report);
        let tr = &run.traces[0].1;
        let again = evaluate_dissipation(1.0, 28, 1, 1.0, tr).unwrap();
        assert_eq!(again, run.report);
        assert!(dissipation_experiment(1.0, 28, 0, 1.0, &RunSettings::default()).is_err());
        assert!(dissipation_experiment(1.0, 28, 1, 1.5, &RunSettings::default()).is_err());
    }
}
