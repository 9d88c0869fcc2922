//! Command dispatch and artifact writing.

use std::path::Path;

use serde_json::Value;

use dyadic::experiments::{
    blowup_demo, coalescence_demo, decay_lower_experiment, decay_upper_experiment,
    dissipation_experiment, params, resolved_modes, Criterion, ExperimentReport, ExperimentRun,
    RunSettings,
};
use dyadic::output::{object, write_atomic, write_csv, write_json};
use dyadic::selfsimilar::{
    build_profile, gamma_by_series, gamma_by_shooting, lambda_diagnostics, tilde_sequence,
};
use dyadic::series::{
    alpha_bound_check, build_series, d_prime_tail_check, find_r, g_closed_form_check,
    h_identity_check, psi_check, rouche_check, SeriesTable,
};
use dyadic::{integrate, Error, Execution, Method, Result, ShellState};

use crate::config::{CommandKind, RunConfig};

/// Number of `ã` terms used for the λ′ diagnostics of a computed `γ`.
const DIAGNOSTIC_TERMS: usize = 40;
/// Largest relative energy drift accepted by `simulate`.
const SIMULATE_DRIFT_TOL: f64 = 1e-8;

/// Main JSON object of a run and its verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub json: Value,
    pub pass: bool,
}

/// Process exit code for a library error: 2 for rejected input, 3 for
/// numeric or I/O failure.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_) | Error::Precondition(_) | Error::IndexOutOfRange { .. } => 2,
        _ => 3,
    }
}

pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    match cfg.command {
        CommandKind::Simulate => simulate(cfg),
        CommandKind::SelfSimilar => selfsimilar(cfg),
        CommandKind::Gamma => gamma(cfg),
        CommandKind::Radius => radius(cfg),
        CommandKind::Series => series(cfg),
        CommandKind::Verify => verify(cfg),
        CommandKind::Decay => decay(cfg),
        CommandKind::Blowup => blowup(cfg),
        CommandKind::Coalesce => coalesce(cfg),
    }
}

fn table(cfg: &RunConfig) -> Result<SeriesTable> {
    build_series(cfg.count("terms"))
}

fn settings(cfg: &RunConfig) -> RunSettings {
    RunSettings {
        rtol: cfg.float("rtol"),
        atol: cfg.float("atol"),
        method: match cfg.string("method") {
            "dopri5" => Method::Dopri5,
            _ => Method::Rosenbrock,
        },
    }
}

fn finite(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

fn to_value<T: serde::Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Io(e.to_string()))
}

/// Adds the command, parameters and artifact list, then writes `<name>.json`.
fn finish(
    cfg: &RunConfig,
    name: &str,
    body: Value,
    artifacts: Vec<String>,
    pass: bool,
) -> Result<RunOutput> {
    let mut map = match body {
        Value::Object(m) => m,
        _ => {
            return Err(Error::InvalidState(
                "artifact body must be an object".into(),
            ))
        }
    };
    map.insert("command".into(), Value::from(cfg.command.name()));
    map.insert("params".into(), cfg.params_json());
    map.insert("pass".into(), Value::from(pass));
    let file = format!("{name}.json");
    let mut all = artifacts;
    all.push(file.clone());
    map.insert("artifacts".into(), Value::from(all));
    let json = Value::Object(map);
    write_json(&cfg.out_dir.join(&file), json.clone())?;
    Ok(RunOutput {
        json: dyadic::output::with_schema(json)?,
        pass,
    })
}

fn write_report(cfg: &RunConfig, name: &str, run: ExperimentRun) -> Result<RunOutput> {
    let mut report = run.report;
    for (label, trace) in &run.traces {
        let file = format!("{name}_{label}.csv");
        trace.write_csv(&cfg.out_dir.join(&file))?;
        report.artifacts.push(file);
    }
    report_output(cfg, name, report)
}

fn report_output(cfg: &RunConfig, name: &str, mut report: ExperimentReport) -> Result<RunOutput> {
    let file = format!("{name}.json");
    report.artifacts.push(file.clone());
    let mut json = report.to_json();
    json["command"] = Value::from(cfg.command.name());
    json["config"] = cfg.params_json();
    write_json(&cfg.out_dir.join(&file), json.clone())?;
    Ok(RunOutput {
        json,
        pass: report.pass,
    })
}

/// Initial data for a named preset at time `t`.
pub fn preset_state(
    preset: &str,
    t: f64,
    n_modes: usize,
    n0: usize,
    t0: f64,
    amplitude: f64,
    table: &SeriesTable,
) -> Result<ShellState> {
    if n_modes == 0 {
        return Err(Error::Precondition("modes must be positive".into()));
    }
    match preset {
        "selfsimilar" => {
            if !(t > t0) {
                return Err(Error::Precondition(format!(
                    "selfsimilar preset needs t > t0, got t={t}, t0={t0}"
                )));
            }
            build_profile(n0, t0, n_modes, table)?.state_at(t)
        }
        "negative-selfsimilar" => {
            if !(t < t0) {
                return Err(Error::Precondition(format!(
                    "negative-selfsimilar preset needs t < t0, got t={t}, t0={t0}"
                )));
            }
            build_profile(n0, t0, n_modes, table)?.state_at(t)
        }
        "flat" => ShellState::new(t, vec![amplitude; n_modes]),
        "single" => {
            let mut s = ShellState::zeros(t, n_modes)?;
            s.x[0] = 1.0;
            Ok(s)
        }
        other => Err(Error::Precondition(format!("unknown preset {other}"))),
    }
}

fn simulate(cfg: &RunConfig) -> Result<RunOutput> {
    let preset = cfg.string("preset");
    let (n0, t0, n) = (cfg.count("n0"), cfg.float("t0"), cfg.count("modes"));
    let (t_start, t_end) = (cfg.float("t_start"), cfg.float("t_end"));
    let tab = table(cfg)?;
    let initial = preset_state(preset, t_start, n, n0, t0, cfg.float("amplitude"), &tab)?;
    let ic = settings(cfg).config(t_end, cfg.float("record_every"));
    let trace = integrate(&initial, &ic)?;

    let e0 = trace.energies[0].total;
    let drift = trace
        .energies
        .iter()
        .map(|e| {
            if e0 == 0.0 {
                e.total.abs()
            } else {
                ((e.total - e0) / e0).abs()
            }
        })
        .fold(0.0, f64::max);
    let last = trace.last().expect("nonempty trace");
    let mut report = ExperimentReport::new(
        "simulate",
        params([
            ("preset", Value::from(preset)),
            ("N", Value::from(n)),
            ("t_start", Value::from(t_start)),
            ("t_end", Value::from(t_end)),
        ]),
    );
    report.scalar("energy_initial", e0);
    report.scalar(
        "energy_final",
        trace.energies.last().expect("nonempty").total,
    );
    report.scalar("energy_drift", drift);
    report.scalar("t_final", last.t);
    report.scalar("accepted_steps", trace.step_stats.accepted as f64);
    report.scalar("rejected_steps", trace.step_stats.rejected as f64);
    report.scalar("resolved_modes", resolved_modes(n) as f64);
    if preset == "selfsimilar" || preset == "negative-selfsimilar" {
        let profile = build_profile(n0, t0, n, &tab)?;
        let check = cfg.count("check_modes").min(n);
        let mut worst: f64 = 0.0;
        for s in &trace.samples {
            for m in n0 + 1..=check {
                let exact = profile.coeff(m) / (s.t - t0);
                worst = worst.max(((s.mode(m) - exact) / exact).abs());
            }
        }
        let q: Vec<f64> = trace
            .samples
            .iter()
            .zip(&trace.energies)
            .map(|(s, e)| s.t * s.t * e.phi(check))
            .collect();
        let monotone = q.windows(2).all(|w| w[1] >= w[0]);
        report.scalar("profile_max_rel_error", worst);
        report.scalar("check_modes", check as f64);
        report.scalar("sum_a_squared", profile.energy_coefficient());
        report.scalar("t2_checked_energy_final", *q.last().expect("nonempty"));
        report.scalar(
            "t2_checked_energy_monotone",
            if monotone { 1.0 } else { 0.0 },
        );
    }
    report.check(Criterion::below("energy_drift", drift, SIMULATE_DRIFT_TOL));
    write_report(
        cfg,
        "simulate",
        ExperimentRun {
            report,
            traces: vec![("trace".into(), trace)],
        },
    )
}

fn selfsimilar(cfg: &RunConfig) -> Result<RunOutput> {
    let tab = table(cfg)?;
    let profile = build_profile(cfg.count("n0"), cfg.float("t0"), cfg.count("modes"), &tab)?;
    write_csv(
        &cfg.out_dir.join("profile.csv"),
        &["n", "a_n"],
        &profile.csv_rows(),
    )?;
    let tail = profile.tail_constant();
    let body = object([
        ("R", finite(tab.radius()?)),
        ("gamma", finite(profile.gamma)),
        ("c_n0", finite(profile.c_n0)),
        ("tail_constant", finite(tail)),
        ("tail_rel_error", finite((tail / profile.c_n0 - 1.0).abs())),
        ("recurrence_residual", finite(profile.recurrence_residual())),
        ("energy_coefficient", finite(profile.energy_coefficient())),
    ]);
    finish(cfg, "selfsimilar", body, vec!["profile.csv".into()], true)
}

fn gamma(cfg: &RunConfig) -> Result<RunOutput> {
    let method = cfg.string("method");
    let tol = cfg.float("tol");
    let tab = table(cfg)?;
    let r = tab.radius()?;
    let series = if method != "shooting" {
        Some(gamma_by_series(&tab)?)
    } else {
        None
    };
    let shooting = if method != "series" {
        Some(gamma_by_shooting(tol, Execution::default())?)
    } else {
        None
    };
    let primary = series
        .or(shooting.as_ref().map(|s| s.gamma))
        .expect("one route");
    let mut tr = tilde_sequence(primary, DIAGNOSTIC_TERMS)?;
    let lam = lambda_diagnostics(&mut tr, &tab)?;
    let difference = match (series, &shooting) {
        (Some(a), Some(b)) => finite((a - b.gamma).abs()),
        _ => Value::Null,
    };
    let body = object([
        ("gamma", finite(primary)),
        ("gamma_series", series.map_or(Value::Null, finite)),
        (
            "gamma_shooting",
            shooting.as_ref().map_or(Value::Null, |s| finite(s.gamma)),
        ),
        ("difference", difference),
        (
            "shooting",
            shooting.as_ref().map_or(Ok(Value::Null), to_value)?,
        ),
        ("R", finite(r)),
        (
            "classification",
            Value::from(lam.classification.map_or("inconclusive", |c| c.as_str())),
        ),
        ("lambda_prime_max", finite(lam.lambda_prime_max)),
    ]);
    finish(cfg, "gamma", body, Vec::new(), true)
}

fn radius(cfg: &RunConfig) -> Result<RunOutput> {
    let tab = table(cfg)?;
    let rep = find_r(&tab, cfg.float("tol"))?;
    finish(cfg, "radius", to_value(&rep)?, Vec::new(), true)
}

fn series(cfg: &RunConfig) -> Result<RunOutput> {
    let tab = table(cfg)?;
    write_csv(
        &cfg.out_dir.join("series.csv"),
        &["k", "d", "d_prime", "D"],
        &tab.csv_rows(),
    )?;
    let body = object([
        ("terms", Value::from(tab.terms)),
        ("d0", finite(tab.d(0))),
        ("d1", finite(tab.d(1))),
    ]);
    finish(cfg, "series", body, vec!["series.csv".into()], true)
}

const ALL_SUITES: [&str; 6] = ["alpha", "rouche", "h-identity", "psi", "tail", "g-closed"];

fn run_check(name: &str, cfg: &RunConfig, tab: &SeriesTable) -> Result<(Value, bool)> {
    let exec = Execution::default();
    macro_rules! report {
        ($e:expr) => {{
            let r = $e?;
            let pass = r.pass;
            Ok((to_value(&r)?, pass))
        }};
    }
    match name {
        "alpha" => report!(alpha_bound_check(cfg.count("k_max"))),
        "rouche" => report!(rouche_check(tab, cfg.count("grid"), exec)),
        "h-identity" => report!(h_identity_check(tab, cfg.count("points"), exec)),
        "psi" => report!(psi_check(tab, cfg.count("points"), exec)),
        "tail" => report!(d_prime_tail_check(tab)),
        "g-closed" => report!(g_closed_form_check(tab)),
        other => Err(Error::Precondition(format!("unknown suite {other}"))),
    }
}

fn verify(cfg: &RunConfig) -> Result<RunOutput> {
    let tab = table(cfg)?;
    tab.radius()?;
    let suite = cfg.string("suite");
    let names: Vec<&str> = if suite == "all" {
        ALL_SUITES.to_vec()
    } else {
        vec![suite]
    };
    let results = Execution::default().map(&names, |n| run_check(n, cfg, &tab));
    let mut checks = serde_json::Map::new();
    let mut pass = true;
    for (n, r) in names.iter().zip(results) {
        let (v, ok) = r?;
        pass &= ok;
        checks.insert((*n).to_string(), v);
    }
    let body = object([
        ("suite", Value::from(suite)),
        ("checks", Value::Object(checks)),
    ]);
    finish(cfg, "verify", body, Vec::new(), pass)
}

fn decay(cfg: &RunConfig) -> Result<RunOutput> {
    let kind = cfg.string("kind");
    let st = settings(cfg);
    let n = cfg.count("modes");
    let run = if kind == "dissipation" {
        dissipation_experiment(
            cfg.float("amplitude"),
            n,
            cfg.count("m"),
            cfg.float("eps"),
            &st,
        )?
    } else {
        let tab = table(cfg)?;
        let initial = preset_state(
            cfg.string("preset"),
            cfg.float("t_start"),
            n,
            cfg.count("n0"),
            cfg.float("t0"),
            cfg.float("amplitude"),
            &tab,
        )?;
        let t_max = cfg.float("t_max");
        if kind == "upper" {
            decay_upper_experiment(&initial, t_max, &st)?
        } else {
            decay_lower_experiment(&initial, cfg.count("n"), t_max, &st)?
        }
    };
    write_report(cfg, &format!("decay_{kind}"), run)
}

fn blowup(cfg: &RunConfig) -> Result<RunOutput> {
    let tab = table(cfg)?;
    let run = blowup_demo(cfg.count("n0"), cfg.float("t0"), cfg.count("modes"), &tab)?;
    write_report(cfg, "blowup", run)
}

fn coalesce(cfg: &RunConfig) -> Result<RunOutput> {
    let tab = table(cfg)?;
    let run = coalescence_demo(
        cfg.count("n0"),
        cfg.float("t0"),
        cfg.count("modes"),
        &tab,
        &settings(cfg),
    )?;
    write_report(cfg, "coalesce", run)
}

/// Writes raw bytes under the output directory; used for reproducible
/// copies of the resolved configuration.
pub fn write_resolved_config(cfg: &RunConfig) -> Result<()> {
    let mut text = format!("# {}\n", cfg.command.name());
    for (k, v) in &cfg.params {
        let shown = match v.to_json() {
            Value::String(s) => s,
            other => other.to_string(),
        };
        text.push_str(&format!("{k} = {shown}\n"));
    }
    let path: &Path = &cfg.out_dir;
    write_atomic(
        &path.join(format!("{}.conf", cfg.command.name())),
        text.as_bytes(),
    )
}
