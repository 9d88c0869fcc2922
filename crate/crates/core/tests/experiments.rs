use dyadic::experiments::{
    decay_lower_experiment, decay_upper_experiment, evaluate_blowup, evaluate_coalescence,
    evaluate_decay_lower, evaluate_decay_upper, evaluate_dissipation, run_batch, Job, RunSettings,
};
use dyadic::selfsimilar::build_profile;
use dyadic::series::{build_series, DEFAULT_TERMS};
use dyadic::{Execution, ShellState, Trace};

fn reread(tr: &Trace) -> Trace {
    Trace::from_csv(&tr.to_csv()).unwrap()
}

fn single(n: usize) -> ShellState {
    let mut x = vec![0.0; n];
    x[0] = 1.0;
    ShellState::new(0.0, x).unwrap()
}

#[test]
fn batch_is_policy_independent_and_reevaluable() {
    let t = build_series(DEFAULT_TERMS).unwrap();
    let st = RunSettings::default();
    let jobs = vec![
        Job::Dissipation {
            l: 1.0,
            n_modes: 20,
            m: 4,
            eps: 1.0,
        },
        Job::DecayUpper {
            initial: single(20),
            t_max: 100.0,
        },
        Job::DecayLower {
            initial: single(20),
            n: 3,
            t_max: 1000.0,
        },
        Job::Blowup {
            n0: 0,
            t0: 1.0,
            n_modes: 12,
        },
        Job::Coalescence {
            n0: 0,
            t0: 1.0,
            n_modes: 16,
        },
    ];
    let seq = run_batch(&jobs, &t, &st, Execution::Sequential);
    let par = run_batch(&jobs, &t, &st, Execution::Parallel);
    for (job, (a, b)) in jobs.iter().zip(seq.into_iter().zip(par)) {
        let (a, b) = (a.unwrap(), b.unwrap());
        assert_eq!(a.report, b.report, "{job:?}");
        assert!(a.report.pass, "{:#?}", a.report);
        for ((na, ta), (nb, tb)) in a.traces.iter().zip(&b.traces) {
            assert_eq!(na, nb);
            assert_eq!(ta.to_csv(), tb.to_csv());
        }
        // verdicts are pure functions of the stored traces
        let again = match job {
            Job::Dissipation { l, n_modes, m, eps } => {
                evaluate_dissipation(*l, *n_modes, *m, *eps, &reread(&a.traces[0].1)).unwrap()
            }
            Job::DecayUpper { t_max, .. } => {
                evaluate_decay_upper(&reread(&a.traces[0].1), *t_max).unwrap()
            }
            Job::DecayLower { n, t_max, .. } => {
                evaluate_decay_lower(&reread(&a.traces[0].1), *n, *t_max).unwrap()
            }
            Job::Blowup { n0, t0, n_modes } => evaluate_blowup(
                *n0,
                *t0,
                *n_modes,
                &t,
                &reread(&a.traces[0].1),
                &reread(&a.traces[1].1),
            )
            .unwrap(),
            Job::Coalescence { n0, t0, .. } => {
                evaluate_coalescence(*n0, *t0, &t, &reread(&a.traces[0].1)).unwrap()
            }
        };
        assert_eq!(again, a.report, "{job:?}");
    }
}

#[test]
fn decay_upper_on_selfsimilar_data_matches_closed_form() {
    // modes <= 22 at N = 48 track the closed form; t²φ_22 rises to its limit
    // (t²/(t+1)² still grows 18% over [10, 100], so the horizon is 1000)
    let t = build_series(DEFAULT_TERMS).unwrap();
    let p = build_profile(0, -1.0, 48, &t).unwrap();
    let s = p.state_at(0.0).unwrap();
    let run = decay_upper_experiment(&s, 1000.0, &RunSettings::default()).unwrap();
    assert!(run.report.pass, "{:#?}", run.report);
    let tr = &run.traces[0].1;
    let lim: f64 = p.a[..22].iter().map(|a| a * a).sum();
    let mut prev = 0.0;
    for (st, e) in tr.samples.iter().zip(&tr.energies) {
        if st.t < 1.0 {
            continue;
        }
        let q = st.t * st.t * e.phi(22);
        let exact = lim * (st.t / (st.t + 1.0)).powi(2);
        assert!((q / exact - 1.0).abs() < 1e-6, "t={}", st.t);
        assert!(q >= prev);
        prev = q;
    }
}

#[test]
fn decay_lower_reports_log_growth() {
    let run = decay_lower_experiment(&single(28), 3, 1000.0, &RunSettings::default()).unwrap();
    assert!(run.report.pass, "{:#?}", run.report);
    let slope = run.report.scalars["log_slope_last_decade"];
    assert!(slope >= 0.95 / 8.0, "{slope}");
}

#[test]
fn decay_preconditions() {
    let st = RunSettings::default();
    let neg = ShellState::new(0.0, vec![1.0, -0.1, 0.0]).unwrap();
    assert!(decay_upper_experiment(&neg, 100.0, &st).is_err());
    assert!(decay_upper_experiment(&single(10), 5.0, &st).is_err());
    assert!(decay_lower_experiment(&single(10), 5, 1000.0, &st).is_err());
    assert!(decay_lower_experiment(&single(10), 2, 50.0, &st).is_err());
}
