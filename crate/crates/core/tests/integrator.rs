use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dyadic::experiments::{evaluate_decay_lower, integral_from_one};
use dyadic::selfsimilar::build_profile;
use dyadic::series::{build_series, DEFAULT_TERMS};
use dyadic::{
    integrate, integrate_positive, variation_check, IntegratorConfig, Method, ShellState, Trace,
};

fn total(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn max_drift(tr: &Trace) -> f64 {
    let e0 = total(&tr.samples[0].x);
    tr.samples
        .iter()
        .map(|s| ((total(&s.x) - e0) / e0).abs())
        .fold(0.0, f64::max)
}

#[test]
fn random_sign_data_conserves_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..4 {
        let x: Vec<f64> = (1..=28)
            .map(|n| rng.gen_range(-1.0..1.0) * 2f64.powf(-(n as f64) / 3.0))
            .collect();
        let s = ShellState::new(0.0, x).unwrap();
        let tr = integrate(&s, &IntegratorConfig::new(10.0)).unwrap();
        assert!(max_drift(&tr) < 1e-10, "{}", max_drift(&tr));
    }
}

#[test]
fn explicit_method_conserves_on_short_truncation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let s = ShellState::new(0.0, x).unwrap();
    let cfg = IntegratorConfig::new(5.0).with_method(Method::Dopri5);
    let tr = integrate(&s, &cfg).unwrap();
    assert!(max_drift(&tr) < 1e-10);
}

#[test]
fn positive_data_stays_positive_with_monotone_partial_energies() {
    let s = ShellState::new(0.0, {
        let mut x = vec![0.0; 20];
        x[0] = 1.0;
        x
    })
    .unwrap();
    let tr = integrate_positive(&s, &IntegratorConfig::new(20.0).with_record_every(0.05)).unwrap();
    assert!(tr.is_positive());
    for w in tr.samples.windows(2) {
        let (a, b) = (&w[0].x, &w[1].x);
        let mut pa = 0.0;
        let mut pb = 0.0;
        for n in 0..a.len() - 1 {
            pa += a[n] * a[n];
            pb += b[n] * b[n];
            assert!(pb <= pa + 1e-12, "phi_{} grew at t={}", n + 1, w[1].t);
        }
        // the first mode only ever loses energy
        assert!(b[0] <= a[0]);
    }
    assert!(tr.step_stats.max_phi_increase <= 1e-12);
}

#[test]
fn time_inversion_symmetry() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x: Vec<f64> = (1..=12)
        .map(|n| rng.gen_range(-1.0..1.0) * 2f64.powf(-(n as f64) / 3.0))
        .collect();
    let fwd = integrate(
        &ShellState::new(0.0, x.clone()).unwrap(),
        &IntegratorConfig::new(2.0)
            .with_record_every(0.25)
            .with_tolerances(1e-12, 1e-14),
    )
    .unwrap();
    let y0 = ShellState::new(0.0, x.iter().map(|v| -v).collect()).unwrap();
    let bwd = integrate(
        &y0,
        &IntegratorConfig::new(-2.0)
            .with_record_every(0.25)
            .with_tolerances(1e-12, 1e-14),
    )
    .unwrap();
    assert_eq!(fwd.len(), bwd.len());
    for (a, b) in fwd.samples.iter().zip(&bwd.samples) {
        assert_eq!(a.t, -b.t);
        for (u, v) in a.x.iter().zip(&b.x) {
            assert!(
                (u + v).abs() <= 1e-9 * u.abs().max(1e-3),
                "t={}: {u} vs {v}",
                a.t
            );
        }
    }
}

/// Fixed steps of size `h` (loose tolerances, `min_step = max_step = h`).
fn fixed_step(s: &ShellState, t_end: f64, h: f64, method: Method) -> ShellState {
    let cfg = IntegratorConfig::new(t_end)
        .with_method(method)
        .with_tolerances(1e3, 1e3)
        .with_steps(h, h)
        .with_record_every(t_end - s.t);
    let tr = integrate(s, &cfg).unwrap();
    assert_eq!(tr.step_stats.rejected, 0);
    assert_eq!(tr.step_stats.accepted as f64, ((t_end - s.t) / h).round());
    tr.last().unwrap().clone()
}

#[test]
fn step_halving_converges_at_method_order() {
    let s = ShellState::new(0.0, vec![0.8, 0.5, 0.3, 0.2, 0.1, 0.05]).unwrap();
    let reference = integrate(
        &s,
        &IntegratorConfig::new(0.5)
            .with_record_every(0.5)
            .with_tolerances(1e-14, 1e-16)
            .with_method(Method::Dopri5),
    )
    .unwrap();
    let exact = &reference.last().unwrap().x;
    for (method, order) in [(Method::Dopri5, 5), (Method::Rosenbrock, 4)] {
        let err = |h: f64| {
            let y = fixed_step(&s, 0.5, h, method);
            y.x.iter()
                .zip(exact)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(0.025), err(0.0125));
        let ratio = e1 / e2;
        assert!(
            ratio >= 0.8 * 2f64.powi(order),
            "{method:?}: {e1:e} -> {e2:e} ratio {ratio}"
        );
    }
}

#[test]
fn tighter_tolerance_reduces_error_against_closed_form() {
    // N=60 pushes the truncation error on modes <= 8 below 1e-13 over [1, 2]
    let t = build_series(DEFAULT_TERMS).unwrap();
    let p = build_profile(0, -1.0, 60, &t).unwrap();
    let s = p.state_at(1.0).unwrap();
    let err = |rtol: f64| {
        let cfg = IntegratorConfig::new(2.0)
            .with_tolerances(rtol, rtol * 1e-4)
            .with_record_every(0.1);
        let tr = integrate(&s, &cfg).unwrap();
        let mut worst: f64 = 0.0;
        for st in &tr.samples {
            for m in 1..=8 {
                let exact = p.a[m - 1] / (st.t + 1.0);
                worst = worst.max(((st.mode(m) - exact) / exact).abs());
            }
        }
        worst
    };
    let (e6, e8) = (err(1e-6), err(1e-8));
    assert!(e8 * 10.0 <= e6, "{e6:e} vs {e8:e}");
    assert!(e6 < 1e-6 && e8 < 1e-10, "{e6:e} vs {e8:e}");
}

#[test]
fn variation_of_constants_on_selfsimilar_trace() {
    let t = build_series(DEFAULT_TERMS).unwrap();
    let p = build_profile(0, -1.0, 40, &t).unwrap();
    let s = p.state_at(1.0).unwrap();
    let residual = |every: f64| {
        let cfg = IntegratorConfig::new(2.0).with_record_every(every);
        let tr = integrate(&s, &cfg).unwrap();
        variation_check(&tr, 3).unwrap() / p.a[2] * 2.0
    };
    let (coarse, fine) = (residual(2e-3), residual(1e-3));
    assert!(fine < 1e-6, "{fine:e}");
    // trapezoid: second order in the sample spacing
    let ratio = coarse / fine;
    assert!((3.0..5.0).contains(&ratio), "{ratio}");
}

#[test]
fn variation_of_constants_on_single_mode_trace() {
    let s = ShellState::new(0.0, {
        let mut x = vec![0.0; 12];
        x[0] = 1.0;
        x
    })
    .unwrap();
    let tr = integrate_positive(&s, &IntegratorConfig::new(2.0).with_record_every(1e-3)).unwrap();
    for n in 1..6 {
        assert!(variation_check(&tr, n).unwrap() < 1e-5, "mode {n}");
    }
}

#[test]
fn lower_bound_quadrature_is_second_order() {
    let s = ShellState::new(0.0, {
        let mut x = vec![0.0; 16];
        x[0] = 1.0;
        x
    })
    .unwrap();
    let run = |every: f64| {
        let cfg = IntegratorConfig::new(3.0).with_record_every(every);
        let tr = integrate_positive(&s, &cfg).unwrap();
        integral_from_one(&tr, 4).last().unwrap().1
    };
    let (a, b, c) = (run(0.04), run(0.02), run(0.01));
    let ratio = (a - b) / (b - c);
    assert!((3.5..4.5).contains(&ratio), "{ratio}");
}

#[test]
fn trace_csv_round_trip_preserves_verdicts() {
    let s = ShellState::new(0.0, {
        let mut x = vec![0.0; 16];
        x[0] = 1.0;
        x
    })
    .unwrap();
    let cfg = IntegratorConfig::new(1.0).with_record_every(1e-2);
    let mut tr = integrate_positive(&s, &cfg).unwrap();
    let next = integrate_positive(
        tr.last().unwrap(),
        &IntegratorConfig::new(200.0).with_record_every(0.5),
    )
    .unwrap();
    tr.samples.extend(next.samples.into_iter().skip(1));
    tr.energies.extend(next.energies.into_iter().skip(1));
    let text = tr.to_csv();
    let back = Trace::from_csv(&text).unwrap();
    assert_eq!(back.samples, tr.samples);
    assert_eq!(back.energies, tr.energies);
    assert_eq!(back.to_csv(), text);
    let a = evaluate_decay_lower(&tr, 3, 200.0).unwrap();
    let b = evaluate_decay_lower(&back, 3, 200.0).unwrap();
    assert_eq!(a, b);
}

#[test]
fn malformed_csv_is_rejected() {
    assert!(Trace::from_csv("").is_err());
    assert!(Trace::from_csv("t,X1,energy\n0,1\n").is_err());
    assert!(Trace::from_csv("t,X1,energy\n0,abc,1\n").is_err());
}
