//! Adaptive time stepping for the Galerkin-truncated system.
//!
//! Backward runs integrate the negated-time system `dX/ds = -f(X)` with
//! `t = t_start - s`, so both directions share one forward code path.

mod dopri5;
mod rosenbrock;
mod trace;

pub use trace::{StepStats, Trace};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shell::{rhs_into, wavenumbers, ShellState};
use dopri5::Dopri5;
use rosenbrock::{Rosenbrock, Tridiagonal};

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Explicit Dormand–Prince 5(4), PI step control.
    Dopri5,
    /// Linearly implicit Rosenbrock 4(3); handles the stiff top mode.
    Rosenbrock,
}

/// Value taken by the first omitted mode `X_{N+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Boundary {
    /// `X_{N+1} = 0`.
    Galerkin,
    /// `X_{N+1}(t) = amplitude / (t - t0)`: the exact self-similar tail.
    Driven { amplitude: f64, t0: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub t_end: f64,
    pub record_every: f64,
    pub method: Method,
    pub boundary: Boundary,
    /// Also record every accepted step, not just the sampling grid.
    pub record_steps: bool,
    pub max_steps: u64,
}

impl IntegratorConfig {
    pub fn new(t_end: f64) -> Self {
        IntegratorConfig {
            rtol: 1e-10,
            atol: 1e-14,
            max_step: f64::INFINITY,
            min_step: 1e-14,
            t_end,
            record_every: 1.0,
            method: Method::Rosenbrock,
            boundary: Boundary::Galerkin,
            record_steps: false,
            max_steps: 50_000_000,
        }
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn with_record_every(mut self, dt: f64) -> Self {
        self.record_every = dt;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_steps(mut self, min_step: f64, max_step: f64) -> Self {
        self.min_step = min_step;
        self.max_step = max_step;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return bad("rtol and atol must be positive");
        }
        if !(self.min_step > 0.0) || self.min_step > self.max_step {
            return bad("need 0 < min_step <= max_step");
        }
        if !(self.record_every > 0.0) {
            return bad("record_every must be positive");
        }
        if !self.t_end.is_finite() {
            return bad("t_end must be finite");
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive");
        }
        if let Boundary::Driven { amplitude, t0 } = self.boundary {
            if self.method != Method::Dopri5 {
                return bad("driven boundary requires the explicit method");
            }
            if !(amplitude.is_finite() && t0.is_finite()) {
                return bad("driven boundary parameters must be finite");
            }
        }
        Ok(())
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Termination {
    Completed,
    StepUnderflow { t: f64, step: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub trace: Trace,
    pub termination: Termination,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Tol {
    rtol: f64,
    atol: f64,
}

/// RMS of `err_i / (atol + rtol·max(|x_i|, |y_i|))`.
pub(crate) fn error_norm(err: &[f64], x: &[f64], y: &[f64], tol: Tol) -> f64 {
    let sum: f64 = err
        .iter()
        .zip(x.iter().zip(y))
        .map(|(e, (a, b))| {
            let sc = tol.atol + tol.rtol * a.abs().max(b.abs());
            (e / sc) * (e / sc)
        })
        .sum();
    (sum / err.len() as f64).sqrt()
}

/// The vector field in the integration variable `s`.
pub(crate) struct Field {
    k: Vec<f64>,
    sign: f64,
    t_start: f64,
    boundary: Boundary,
}

impl Field {
    fn upper(&self, s: f64) -> f64 {
        match self.boundary {
            Boundary::Galerkin => 0.0,
            Boundary::Driven { amplitude, t0 } => amplitude / (self.t_start + self.sign * s - t0),
        }
    }

    pub(crate) fn eval(&self, s: f64, x: &[f64], out: &mut [f64]) {
        rhs_into(x, self.upper(s), &self.k, out);
        if self.sign < 0.0 {
            out.iter_mut().for_each(|v| *v = -*v);
        }
    }

    /// Fills `shift·I − J` where `J` is the Jacobian of `eval`.
    pub(crate) fn shifted_jacobian(&self, s: f64, x: &[f64], shift: f64, m: &mut Tridiagonal) {
        let n = x.len();
        let sg = self.sign;
        let upper = self.upper(s);
        for i in 0..n {
            let next = if i + 1 < n { x[i + 1] } else { upper };
            m.lower[i] = if i > 0 {
                -sg * 2.0 * self.k[i] * x[i - 1]
            } else {
                0.0
            };
            m.diag[i] = shift + sg * self.k[i + 1] * next;
            m.upper[i] = if i + 1 < n {
                sg * self.k[i + 1] * x[i]
            } else {
                0.0
            };
        }
    }
}

pub(crate) trait Stepper {
    /// Exponent denominator for the step-size controller.
    fn error_order(&self) -> f64;
    fn uses_pi_control(&self) -> bool;
    /// Attempts one step of size `h`; `None` means the stage computation
    /// failed (non-finite values or a singular solve).
    fn attempt(
        &mut self,
        field: &Field,
        s: f64,
        x: &[f64],
        h: f64,
        tol: Tol,
        y: &mut [f64],
    ) -> Option<f64>;
    fn accepted(&mut self, state_modified: bool);
}

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;
const PI_BETA: f64 = 0.08;
const OVERFLOW_GUARD: f64 = 1e150;

fn initial_step(field: &Field, x: &[f64], tol: Tol, order: f64, span: f64) -> f64 {
    let n = x.len();
    let mut f0 = vec![0.0; n];
    field.eval(0.0, x, &mut f0);
    let zeros = vec![0.0; n];
    let d0 = error_norm(x, x, &zeros, tol);
    let d1 = error_norm(&f0, x, &zeros, tol);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(span);
    let x1: Vec<f64> = x.iter().zip(&f0).map(|(a, b)| a + h0 * b).collect();
    let mut f1 = vec![0.0; n];
    field.eval(h0, &x1, &mut f1);
    let df: Vec<f64> = f1.iter().zip(&f0).map(|(a, b)| a - b).collect();
    let d2 = error_norm(&df, x, &zeros, tol) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / order)
    };
    (100.0 * h0).min(h1).min(span)
}

struct Driver<'a> {
    cfg: &'a IntegratorConfig,
    positive: bool,
}

impl Driver<'_> {
    fn run(&self, initial: &ShellState) -> Result<Outcome> {
        let cfg = self.cfg;
        cfg.validate()?;
        initial.validate()?;
        if cfg.t_end == initial.t {
            return Err(Error::InvalidConfig("t_end equals the initial time".into()));
        }
        let sign = if cfg.t_end > initial.t { 1.0 } else { -1.0 };
        if self.positive {
            if sign < 0.0 {
                return Err(Error::InvalidConfig(
                    "positive runs are forward only".into(),
                ));
            }
            if let Some(i) = initial.x.iter().position(|&v| v < 0.0) {
                return Err(Error::PositivityViolation {
                    t: initial.t,
                    mode: i + 1,
                    value: initial.x[i],
                });
            }
        }
        let n = initial.n_modes();
        let field = Field {
            k: wavenumbers(n),
            sign,
            t_start: initial.t,
            boundary: cfg.boundary,
        };
        let tol = Tol {
            rtol: cfg.rtol,
            atol: cfg.atol,
        };
        match cfg.method {
            Method::Dopri5 => self.drive(initial, &field, tol, Dopri5::new(n)),
            Method::Rosenbrock => self.drive(initial, &field, tol, Rosenbrock::new(n)),
        }
    }

    fn drive<S: Stepper>(
        &self,
        initial: &ShellState,
        field: &Field,
        tol: Tol,
        mut stepper: S,
    ) -> Result<Outcome> {
        let cfg = self.cfg;
        let t_start = initial.t;
        let span = (cfg.t_end - t_start).abs();
        let time_at = |s: f64| {
            if s >= span {
                cfg.t_end
            } else {
                t_start + field.sign * s
            }
        };
        let grid_target = |idx: u64| {
            let s = idx as f64 * cfg.record_every;
            if s > span - 1e-9 * cfg.record_every {
                span
            } else {
                s
            }
        };

        let mut trace = Trace::empty();
        let mut x = initial.x.clone();
        let mut y = vec![0.0; x.len()];
        trace.push(t_start, &x);

        let order = stepper.error_order();
        let mut h = initial_step(field, &x, tol, order, span).min(cfg.max_step);
        let mut s = 0.0;
        let mut rec_idx: u64 = 1;
        let mut err_prev: f64 = 1e-4;
        let mut rejected_last = false;
        let mut steps: u64 = 0;
        let mut last_recorded_s = 0.0;
        let mut phi_old = vec![0.0; x.len()];

        while s < span {
            steps += 1;
            if steps > cfg.max_steps {
                return Err(Error::InvalidState(format!(
                    "step budget of {} exhausted at t={}",
                    cfg.max_steps,
                    time_at(s)
                )));
            }
            let target = grid_target(rec_idx);
            let mut h_try = h.min(cfg.max_step);
            let remaining = target - s;
            let clipped = h_try >= remaining * (1.0 - 1e-12);
            if clipped {
                h_try = remaining;
            }
            if (!clipped && h_try < cfg.min_step) || s + h_try == s {
                if s > last_recorded_s {
                    trace.push(time_at(s), &x);
                }
                return Ok(Outcome {
                    trace,
                    termination: Termination::StepUnderflow {
                        t: time_at(s),
                        step: h_try,
                    },
                });
            }

            let err = stepper.attempt(field, s, &x, h_try, tol, &mut y);
            let Some(err) = err.filter(|e| *e <= 1.0) else {
                trace.step_stats.rejected += 1;
                let fac = match err {
                    Some(e) => (SAFETY * e.powf(-1.0 / order)).max(FAC_MIN),
                    None => FAC_MIN,
                };
                h = h_try * fac;
                rejected_last = true;
                continue;
            };

            // accepted
            let s_new = if clipped { target } else { s + h_try };
            let mut modified = false;
            if self.positive {
                let mut acc = 0.0;
                for (i, v) in x.iter().enumerate() {
                    acc += v * v;
                    phi_old[i] = acc;
                }
                for (i, v) in y.iter_mut().enumerate() {
                    if *v < 0.0 {
                        if *v < -cfg.atol {
                            return Err(Error::PositivityViolation {
                                t: time_at(s_new),
                                mode: i + 1,
                                value: *v,
                            });
                        }
                        *v = 0.0;
                        modified = true;
                        trace.step_stats.clamped += 1;
                    }
                }
                let mut acc = 0.0;
                for (i, v) in y.iter().enumerate() {
                    acc += v * v;
                    let inc = acc - phi_old[i];
                    if inc > trace.step_stats.max_phi_increase {
                        trace.step_stats.max_phi_increase = inc;
                    }
                }
            }
            if y.iter().any(|v| !(v.abs() < OVERFLOW_GUARD)) {
                return Err(Error::NonFinite { t: time_at(s_new) });
            }
            std::mem::swap(&mut x, &mut y);
            stepper.accepted(modified);
            s = s_new;

            let st = &mut trace.step_stats;
            st.accepted += 1;
            st.min_step = st.min_step.min(h_try);
            st.max_step = st.max_step.max(h_try);

            if clipped {
                trace.push(time_at(s), &x);
                last_recorded_s = s;
                rec_idx += 1;
            } else if cfg.record_steps {
                trace.push(time_at(s), &x);
                last_recorded_s = s;
            }

            let e = err.max(1e-10);
            let mut fac = if stepper.uses_pi_control() {
                SAFETY * e.powf(-(1.0 / order - 0.75 * PI_BETA)) * err_prev.powf(PI_BETA)
            } else {
                SAFETY * e.powf(-1.0 / order)
            };
            fac = fac.clamp(FAC_MIN, FAC_MAX);
            if rejected_last {
                fac = fac.min(1.0);
            }
            err_prev = e.max(1e-4);
            rejected_last = false;
            let proposal = h_try * fac;
            h = if clipped { proposal.max(h) } else { proposal };
        }
        Ok(Outcome {
            trace,
            termination: Termination::Completed,
        })
    }
}

/// Integrates from `initial` to `cfg.t_end`; a step-size underflow is returned
/// as a termination reason alongside the partial trace.
pub fn integrate_outcome(initial: &ShellState, cfg: &IntegratorConfig) -> Result<Outcome> {
    Driver {
        cfg,
        positive: false,
    }
    .run(initial)
}

/// Integrates from `initial` to `cfg.t_end` in either direction.
pub fn integrate(initial: &ShellState, cfg: &IntegratorConfig) -> Result<Trace> {
    let out = integrate_outcome(initial, cfg)?;
    match out.termination {
        Termination::Completed => Ok(out.trace),
        Termination::StepUnderflow { t, step } => Err(Error::StepUnderflow { t, step }),
    }
}

/// Forward integration of nonnegative data with clamping of tolerance-level
/// negative excursions.
pub fn integrate_positive(initial: &ShellState, cfg: &IntegratorConfig) -> Result<Trace> {
    let out = Driver {
        cfg,
        positive: true,
    }
    .run(initial)?;
    match out.termination {
        Termination::Completed => Ok(out.trace),
        Termination::StepUnderflow { t, step } => Err(Error::StepUnderflow { t, step }),
    }
}

/// Maximum absolute residual of the variation-of-constants identity
///
/// ```text
/// X_n(t) = X_n(t₀)·e^{-k_n ∫X_{n+1}} + ∫ e^{-k_n ∫_s^t X_{n+1}} k_{n-1} X_{n-1}(s)² ds
/// ```
///
/// evaluated by the trapezoidal rule on the recorded samples.
pub fn variation_check(trace: &Trace, n: usize) -> Result<f64> {
    let big_n = trace.n_modes();
    if n < 1 || n >= big_n {
        return Err(Error::IndexOutOfRange {
            index: n as i64,
            lo: 1,
            hi: big_n as i64 - 1,
        });
    }
    let kn = 2f64.powi(n as i32);
    let km = 2f64.powi(n as i32 - 1);
    let samples = &trace.samples;
    let Some(first) = samples.first() else {
        return Ok(0.0);
    };
    let x0 = first.mode(n);
    let src = |st: &ShellState| km * st.mode(n - 1).powi(2);
    let mut phi = 0.0; // ∫_{t0}^{t} X_{n+1}
    let mut conv = 0.0; // ∫_{t0}^{t} e^{-k(Φ(t)-Φ(s))} g(s) ds
    let mut worst: f64 = 0.0;
    for w in samples.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let dt = b.t - a.t;
        let dphi = 0.5 * dt * (a.mode(n + 1) + b.mode(n + 1));
        let decay = (-kn * dphi).exp();
        conv = decay * conv + 0.5 * dt * (decay * src(a) + src(b));
        phi += dphi;
        let rhs = x0 * (-kn * phi).exp() + conv;
        worst = worst.max((b.mode(n) - rhs).abs());
    }
    Ok(worst)
}
