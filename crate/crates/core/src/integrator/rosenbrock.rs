//! Linearly implicit Rosenbrock 4(3) with Shampine's coefficients.
//!
//! The Jacobian of the truncated field is tridiagonal, so each stage is one
//! Thomas solve against a matrix factored once per step.

use super::{error_norm, Field, Stepper, Tol};

const GAM: f64 = 0.5;
const A21: f64 = 2.0;
const A31: f64 = 48.0 / 25.0;
const A32: f64 = 6.0 / 25.0;
const C21: f64 = -8.0;
const C31: f64 = 372.0 / 25.0;
const C32: f64 = 12.0 / 5.0;
const C41: f64 = -112.0 / 125.0;
const C42: f64 = -54.0 / 125.0;
const C43: f64 = -2.0 / 5.0;
const B1: f64 = 19.0 / 9.0;
const B2: f64 = 1.0 / 2.0;
const B3: f64 = 25.0 / 108.0;
const B4: f64 = 125.0 / 108.0;
const E1: f64 = 17.0 / 54.0;
const E2: f64 = 7.0 / 36.0;
const E4: f64 = 125.0 / 108.0;

/// LU factors of a tridiagonal matrix without pivoting.
pub(crate) struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    // modified super-diagonal and pivots
    c: Vec<f64>,
    piv: Vec<f64>,
}

impl Tridiagonal {
    pub(crate) fn new(n: usize) -> Self {
        Tridiagonal {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
            c: vec![0.0; n],
            piv: vec![0.0; n],
        }
    }

    /// Returns false on a vanishing or non-finite pivot.
    pub(crate) fn factor(&mut self) -> bool {
        let n = self.diag.len();
        let mut prev_c = 0.0;
        for i in 0..n {
            let m = self.diag[i] - if i > 0 { self.lower[i] * prev_c } else { 0.0 };
            if !m.is_finite() || m.abs() < 1e-300 {
                return false;
            }
            self.piv[i] = m;
            prev_c = self.upper[i] / m;
            self.c[i] = prev_c;
        }
        true
    }

    pub(crate) fn solve(&self, r: &mut [f64]) {
        let n = r.len();
        r[0] /= self.piv[0];
        for i in 1..n {
            r[i] = (r[i] - self.lower[i] * r[i - 1]) / self.piv[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            r[i] -= self.c[i] * r[i + 1];
        }
    }
}

pub(crate) struct Rosenbrock {
    mat: Tridiagonal,
    f: Vec<f64>,
    g: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Rosenbrock {
    pub(crate) fn new(n: usize) -> Self {
        Rosenbrock {
            mat: Tridiagonal::new(n),
            f: vec![0.0; n],
            g: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
        }
    }
}

impl Stepper for Rosenbrock {
    fn error_order(&self) -> f64 {
        4.0
    }

    fn uses_pi_control(&self) -> bool {
        false
    }

    fn attempt(
        &mut self,
        field: &Field,
        s: f64,
        x: &[f64],
        h: f64,
        tol: Tol,
        y: &mut [f64],
    ) -> Option<f64> {
        let n = x.len();
        field.shifted_jacobian(s, x, 1.0 / (GAM * h), &mut self.mat);
        if !self.mat.factor() {
            return None;
        }
        let [g1, g2, g3, g4] = &mut self.g;
        let (f, tmp) = (&mut self.f, &mut self.tmp);

        field.eval(s, x, f);
        g1.copy_from_slice(f);
        self.mat.solve(g1);

        for i in 0..n {
            tmp[i] = x[i] + A21 * g1[i];
        }
        field.eval(s, tmp, f);
        for i in 0..n {
            g2[i] = f[i] + C21 * g1[i] / h;
        }
        self.mat.solve(g2);

        for i in 0..n {
            tmp[i] = x[i] + A31 * g1[i] + A32 * g2[i];
        }
        field.eval(s, tmp, f);
        for i in 0..n {
            g3[i] = f[i] + (C31 * g1[i] + C32 * g2[i]) / h;
        }
        self.mat.solve(g3);
        for i in 0..n {
            g4[i] = f[i] + (C41 * g1[i] + C42 * g2[i] + C43 * g3[i]) / h;
        }
        self.mat.solve(g4);

        for i in 0..n {
            y[i] = x[i] + B1 * g1[i] + B2 * g2[i] + B3 * g3[i] + B4 * g4[i];
            tmp[i] = E1 * g1[i] + E2 * g2[i] + E4 * g4[i];
        }
        let err = error_norm(tmp, x, y, tol);
        err.is_finite().then_some(err)
    }

    fn accepted(&mut self, _state_modified: bool) {}
}
