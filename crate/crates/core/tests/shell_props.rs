use proptest::prelude::*;

use dyadic::experiments::build_budget;
use dyadic::{energy, flux, rhs, wavenumber, ShellState};

fn state_strategy(signed: bool) -> impl Strategy<Value = Vec<f64>> {
    let lo = if signed { -2.0 } else { 0.0 };
    (2usize..24).prop_flat_map(move |n| prop::collection::vec(lo..2.0f64, n))
}

/// `k_{n-1}X_{n-1}² − k_n X_n X_{n+1}` written out independently.
fn rhs_direct(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let m = i + 1;
            let below = if i == 0 { 0.0 } else { x[i - 1] };
            let above = if i + 1 < n { x[i + 1] } else { 0.0 };
            2f64.powi(m as i32 - 1) * below * below - 2f64.powi(m as i32) * x[i] * above
        })
        .collect()
}

fn scale(a: f64, b: f64) -> f64 {
    a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #[test]
    fn rhs_matches_written_out_field(x in state_strategy(true)) {
        let f = rhs(&ShellState::new(0.0, x.clone()).unwrap()).unwrap();
        let g = rhs_direct(&x);
        for (a, b) in f.iter().zip(&g) {
            prop_assert!((a - b).abs() <= 1e-15 * scale(*a, *b) * 2f64.powi(x.len() as i32));
        }
    }

    #[test]
    fn rhs_is_homogeneous_of_degree_two(x in state_strategy(true), c in -3.0f64..3.0) {
        let s = ShellState::new(0.0, x.clone()).unwrap();
        let sc = ShellState::new(0.0, x.iter().map(|v| c * v).collect()).unwrap();
        let f = rhs(&s).unwrap();
        let fc = rhs(&sc).unwrap();
        for (a, b) in f.iter().zip(&fc) {
            let want = c * c * a;
            prop_assert!((b - want).abs() <= 1e-13 * scale(want, *b) * 2f64.powi(x.len() as i32));
        }
    }

    #[test]
    fn energy_derivative_telescopes_to_zero(x in state_strategy(true)) {
        let s = ShellState::new(0.0, x.clone()).unwrap();
        let f = rhs(&s).unwrap();
        let terms: Vec<f64> = x.iter().zip(&f).map(|(a, b)| 2.0 * a * b).collect();
        let total: f64 = terms.iter().sum();
        let mag: f64 = terms.iter().map(|t| t.abs()).sum();
        prop_assert!(total.abs() <= 1e-14 * mag.max(1e-300) * x.len() as f64);
    }

    #[test]
    fn partial_energy_rate_is_minus_flux(x in state_strategy(false)) {
        let s = ShellState::new(0.0, x.clone()).unwrap();
        let f = rhs(&s).unwrap();
        let mut acc = 0.0;
        for n in 1..x.len() {
            acc += 2.0 * x[n - 1] * f[n - 1];
            let fl = flux(&s, n).unwrap();
            let want = 2f64.powi(n as i32) * x[n - 1] * x[n - 1] * x[n];
            prop_assert!((fl - want).abs() <= 1e-15 * want.abs().max(1e-300));
            prop_assert!(fl >= 0.0);
            // 2Σ_{j≤n} X_j·rhs_j = −2·flux with the factor-two energy convention
            prop_assert!((acc + 2.0 * fl).abs() <= 1e-12 * scale(acc, 2.0 * fl) * 2f64.powi(n as i32));
        }
    }

    #[test]
    fn energy_partials_accumulate(x in state_strategy(true)) {
        let s = ShellState::new(0.0, x.clone()).unwrap();
        let e = energy(&s);
        let mut acc = 0.0;
        for (n, v) in x.iter().enumerate() {
            acc += v * v;
            prop_assert_eq!(e.phi(n + 1), acc);
        }
        prop_assert_eq!(e.phi(0), 0.0);
        prop_assert_eq!(e.phi(x.len() + 5), e.total);
    }

    #[test]
    fn budget_constant_grows_with_level(l in 0.1f64..4.0, dl in 0.05f64..2.0) {
        let a = build_budget(l, 30).unwrap();
        let b = build_budget(l + dl, 30).unwrap();
        prop_assert!(b.c >= a.c);
        prop_assert!(a.margins.iter().all(|m| *m >= 0.0));
    }
}

#[test]
fn wavenumbers_are_exact_powers() {
    for n in 0..=60u32 {
        assert_eq!(wavenumber(n).unwrap(), (1u64 << n) as f64);
    }
    assert!(wavenumber(2000).is_err());
}

#[test]
fn flux_index_range() {
    let s = ShellState::new(0.0, vec![1.0, 2.0, 3.0]).unwrap();
    assert!(flux(&s, 0).is_err());
    assert!(flux(&s, 3).is_err());
    assert_eq!(flux(&s, 2).unwrap(), 4.0 * 4.0 * 3.0);
}
