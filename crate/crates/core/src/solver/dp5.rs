//! Explicit Dormand–Prince 5(4) with FSAL, embedded error control and
//! 4th-order dense output; also drives the method of steps for delays.

use super::dense::*;
use super::events::{detect_events, EventSpec, IntegratorState};
use super::implicit::run_implicit;
use super::{error_norm, DynamicalSystem, Solution, SolverConfig};
use crate::error::{Error, Result};

pub(crate) struct Delay<'h> {
    pub tau: f64,
    pub ring: HistoryRing<'h>,
    pub buf: Vec<f64>,
}

/// Evaluates the right-hand side, reading delayed states from the ring.
#[inline]
pub(crate) fn eval_rhs<S, P>(
    sys: &S,
    delay: &mut Option<Delay<'_>>,
    du: &mut [f64],
    u: &[f64],
    p: &P,
    t: f64,
) -> Result<()>
where
    S: DynamicalSystem<P> + ?Sized,
{
    match delay {
        None => sys.rhs(du, u, p, t),
        Some(d) => {
            d.ring.lookup(t - d.tau, &mut d.buf)?;
            sys.rhs_delayed(du, u, &d.buf, p, t);
        }
    }
    Ok(())
}

pub(crate) fn check_common<S, P>(sys: &S, u0: &[f64], tspan: (f64, f64), p: &P, cfg: &SolverConfig) -> Result<()>
where
    S: DynamicalSystem<P> + ?Sized,
{
    cfg.validate()?;
    sys.validate_params(p)?;
    if u0.len() != sys.dim() {
        return Err(Error::LengthMismatch {
            what: "initial state",
            expected: sys.dim(),
            got: u0.len(),
        });
    }
    if !tspan.0.is_finite() || !tspan.1.is_finite() || tspan.1 <= tspan.0 {
        return Err(Error::InvalidParameter(format!(
            "time span ({}, {}) must be finite and increasing",
            tspan.0, tspan.1
        )));
    }
    if u0.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteState { t: tspan.0 });
    }
    Ok(())
}

fn is_pure_ode<S: DynamicalSystem<P> + ?Sized, P>(sys: &S) -> bool {
    sys.mass_diagonal().is_none_or(|m| m.iter().all(|&x| x == 1.0))
}

/// Integrates a pure ODE (identity mass matrix) with adaptive DP5, or with
/// fixed steps when `cfg.fixed_dt` is set. `p` may be modified by event
/// affects.
pub fn integrate_dp5<S, P>(
    sys: &S,
    u0: &[f64],
    tspan: (f64, f64),
    p: &mut P,
    cfg: &SolverConfig,
    events: Option<&mut EventSpec<'_, P>>,
) -> Result<Solution>
where
    S: DynamicalSystem<P> + ?Sized,
{
    check_common(sys, u0, tspan, p, cfg)?;
    if !is_pure_ode(sys) {
        return Err(Error::Unsupported(
            "explicit integration of a system with algebraic rows; use integrate_mass_matrix".into(),
        ));
    }
    run_dp5(sys, u0, tspan, p, cfg, events, None)
}

/// Integrates a system with one constant lag `tau` by the method of steps.
///
/// `history(out, t)` supplies the state for `t < tspan.0`. Pure ODE systems
/// use DP5 with steps capped at `tau`, reading delayed states from the dense
/// output of completed steps. Systems with algebraic rows use the implicit
/// Euler stepper with linear interpolation between its accepted states.
#[allow(clippy::too_many_arguments)]
pub fn integrate_dde<S, P>(
    sys: &S,
    u0: &[f64],
    history: &dyn Fn(&mut [f64], f64),
    tspan: (f64, f64),
    p: &mut P,
    tau: f64,
    cfg: &SolverConfig,
    events: Option<&mut EventSpec<'_, P>>,
) -> Result<Solution>
where
    S: DynamicalSystem<P> + ?Sized,
{
    check_common(sys, u0, tspan, p, cfg)?;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!("lag {tau} must be positive")));
    }
    let kind = if is_pure_ode(sys) {
        DenseKind::Dp5
    } else {
        DenseKind::Linear
    };
    let delay = Delay {
        tau,
        ring: HistoryRing::new(kind, tspan.0, u0, history),
        buf: vec![0.0; u0.len()],
    };
    match kind {
        DenseKind::Dp5 => run_dp5(sys, u0, tspan, p, cfg, events, Some(delay)),
        DenseKind::Linear => run_implicit(sys, u0, tspan, p, cfg, events, Some(delay)),
    }
}

struct Stages {
    k: [Vec<f64>; 7],
    y: Vec<f64>,
    y_new: Vec<f64>,
    err: Vec<f64>,
    coeffs: Vec<f64>,
}

impl Stages {
    fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; n]),
            y: vec![0.0; n],
            y_new: vec![0.0; n],
            err: vec![0.0; n],
            coeffs: vec![0.0; 5 * n],
        }
    }

    /// Stages 2..7 from `k[0] = f(u, t)`; leaves the 5th-order solution in
    /// `y_new` and `f(y_new, t + h)` in `k[6]`.
    fn step<S, P>(&mut self, sys: &S, delay: &mut Option<Delay<'_>>, u: &[f64], p: &P, t: f64, h: f64) -> Result<()>
    where
        S: DynamicalSystem<P> + ?Sized,
    {
        let n = u.len();
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let y = &mut self.y;

        for i in 0..n {
            y[i] = u[i] + h * (A21 * k1[i]);
        }
        eval_rhs(sys, delay, k2, y, p, t + C2 * h)?;
        for i in 0..n {
            y[i] = u[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        eval_rhs(sys, delay, k3, y, p, t + C3 * h)?;
        for i in 0..n {
            y[i] = u[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        eval_rhs(sys, delay, k4, y, p, t + C4 * h)?;
        for i in 0..n {
            y[i] = u[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        eval_rhs(sys, delay, k5, y, p, t + C5 * h)?;
        for i in 0..n {
            y[i] = u[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        eval_rhs(sys, delay, k6, y, p, t + h)?;
        let y_new = &mut self.y_new;
        for i in 0..n {
            y_new[i] = u[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        eval_rhs(sys, delay, k7, y_new, p, t + h)?;
        Ok(())
    }

    fn error_estimate(&mut self, h: f64) {
        let [k1, _, k3, k4, k5, k6, k7] = &self.k;
        for i in 0..self.err.len() {
            self.err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
    }

    fn dense_coefficients(&mut self, u: &[f64], h: f64) {
        let n = u.len();
        let [k1, _, k3, k4, k5, k6, k7] = &self.k;
        let (r1, rest) = self.coeffs.split_at_mut(n);
        let (r2, rest) = rest.split_at_mut(n);
        let (r3, rest) = rest.split_at_mut(n);
        let (r4, r5) = rest.split_at_mut(n);
        for i in 0..n {
            let dy = self.y_new[i] - u[i];
            let bspl = h * k1[i] - dy;
            r1[i] = u[i];
            r2[i] = dy;
            r3[i] = bspl;
            r4[i] = dy - h * k7[i] - bspl;
            r5[i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
    }
}

/// Hairer–Nørsett–Wanner starting step from two derivative evaluations.
#[allow(clippy::too_many_arguments)]
fn initial_step<S, P>(
    sys: &S,
    delay: &mut Option<Delay<'_>>,
    u0: &[f64],
    f0: &[f64],
    p: &P,
    t0: f64,
    cfg: &SolverConfig,
    h_max: f64,
) -> Result<f64>
where
    S: DynamicalSystem<P> + ?Sized,
{
    let n = u0.len() as f64;
    let scale = |i: usize| cfg.atol + cfg.rtol * u0[i].abs();
    let rms = |v: &dyn Fn(usize) -> f64| ((0..u0.len()).map(|i| v(i).powi(2)).sum::<f64>() / n).sqrt();
    let d0 = rms(&|i| u0[i] / scale(i));
    let d1 = rms(&|i| f0[i] / scale(i));
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(h_max);

    let u1: Vec<f64> = u0.iter().zip(f0).map(|(u, f)| u + h0 * f).collect();
    let mut f1 = vec![0.0; u0.len()];
    eval_rhs(sys, delay, &mut f1, &u1, p, t0 + h0)?;
    let d2 = rms(&|i| (f1[i] - f0[i]) / scale(i)) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    Ok((100.0 * h0).min(h1).min(h_max))
}

pub(crate) fn run_dp5<S, P>(
    sys: &S,
    u0: &[f64],
    (t0, t1): (f64, f64),
    p: &mut P,
    cfg: &SolverConfig,
    mut events: Option<&mut EventSpec<'_, P>>,
    mut delay: Option<Delay<'_>>,
) -> Result<Solution>
where
    S: DynamicalSystem<P> + ?Sized,
{
    let n = u0.len();
    let dense = cfg.save_steps.then_some(DenseKind::Dp5);
    let mut sol = Solution::new(n, dense, sys.symbols());
    sol.push_point(t0, u0);

    let span = t1 - t0;
    let h_max = match &delay {
        Some(d) => cfg.dt_max.min(d.tau),
        None => cfg.dt_max,
    };
    // fixed-step grid: t0 + k * h_fixed
    let fixed = cfg.fixed_dt.map(|dt| {
        let steps = (span / dt.min(h_max) - 1e-9).ceil().max(1.0);
        (steps as usize, span / steps)
    });

    let mut st = Stages::new(n);
    let mut u = u0.to_vec();
    let mut t = t0;
    eval_rhs(sys, &mut delay, &mut st.k[0], &u, p, t)?;
    sol.stats.rhs_evals += 1;

    let mut h = match fixed {
        Some((_, hf)) => hf,
        None if cfg.dt_init > 0.0 => cfg.dt_init.min(h_max),
        None => {
            let f0 = st.k[0].clone();
            sol.stats.rhs_evals += 1;
            initial_step(sys, &mut delay, &u, &f0, p, t, cfg, h_max)?
        }
    };

    let mut g_old = vec![0.0; events.as_ref().map_or(0, |e| e.n_conditions())];
    if let Some(ev) = events.as_deref() {
        ev.evaluate(&mut g_old, &u, t);
    }

    let mut grid_index = 0usize;
    let mut last_rejected = false;
    let mut attempts = 0usize;
    while t < t1 {
        if sol.stats.accepted >= cfg.max_steps || attempts >= cfg.max_steps.saturating_mul(4) {
            return Err(Error::MaxStepsExceeded {
                max_steps: cfg.max_steps,
                t,
            });
        }
        attempts += 1;

        let t_target = match fixed {
            Some((steps, hf)) => {
                if grid_index + 1 >= steps {
                    t1
                } else {
                    t0 + (grid_index + 1) as f64 * hf
                }
            }
            None => {
                if t + h >= t1 - 1e-12 * span {
                    t1
                } else {
                    t + h
                }
            }
        };
        let h_step = t_target - t;

        st.step(sys, &mut delay, &u, p, t, h_step)?;
        sol.stats.rhs_evals += 6;

        let mut err = 0.0;
        if fixed.is_none() {
            st.error_estimate(h_step);
            err = error_norm(&st.err, &u, &st.y_new, cfg.rtol, cfg.atol);
            if err.is_nan() {
                return Err(Error::NonFiniteState { t });
            }
            if err > 1.0 {
                sol.stats.rejected += 1;
                last_rejected = true;
                h = h_step * (cfg.safety * err.powf(-0.2)).clamp(cfg.facmin, 1.0);
                if h < 16.0 * f64::EPSILON * t.abs().max(1.0) {
                    return Err(Error::StepSizeTooSmall { t, h });
                }
                continue;
            }
        }
        if st.y_new.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteState { t: t_target });
        }

        st.dense_coefficients(&u, h_step);
        let mut t_new = t_target;
        let mut fired = None;
        if let Some(ev) = events.as_deref() {
            let coeffs = &st.coeffs;
            let mut interp = |tq: f64, out: &mut [f64]| eval_segment(DenseKind::Dp5, coeffs, t, h_step, tq, out);
            if let Some((te, idx)) = detect_events(ev, t, t_target, &g_old, &st.y_new, &mut interp) {
                if te < t_target {
                    t_new = te;
                    let y_new = &mut st.y_new;
                    eval_segment(DenseKind::Dp5, coeffs, t, h_step, te, y_new);
                }
                fired = Some(idx);
            }
        }

        if cfg.save_steps {
            sol.push_step(h_step, &st.coeffs, t_new, &st.y_new);
        } else {
            sol.set_last(t_new, &st.y_new);
        }
        if let Some(d) = delay.as_mut() {
            d.ring.push(t, t_new, h_step, &st.coeffs, &st.y_new);
            d.ring.prune(t_new - d.tau);
        }
        sol.stats.accepted += 1;
        t = t_new;
        u.copy_from_slice(&st.y_new);
        if t_new == t_target {
            grid_index += 1;
        }

        match (fired, events.as_deref_mut()) {
            (Some(idx), Some(ev)) => {
                sol.push_event(t, idx);
                ev.fire(&mut IntegratorState { t, u: &mut u, p }, idx);
                if u.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFiniteState { t });
                }
                // FSAL value is stale after an affect
                eval_rhs(sys, &mut delay, &mut st.k[0], &u, p, t)?;
                sol.stats.rhs_evals += 1;
                ev.evaluate(&mut g_old, &u, t);
            }
            (_, ev) => {
                st.k.swap(0, 6);
                if let Some(ev) = ev {
                    ev.evaluate(&mut g_old, &u, t);
                }
            }
        }

        if fixed.is_none() {
            let fac_max = if last_rejected { 1.0 } else { cfg.facmax };
            let fac = if err == 0.0 {
                fac_max
            } else {
                (cfg.safety * err.powf(-0.2)).clamp(cfg.facmin, fac_max)
            };
            h = (h_step * fac).min(h_max);
            last_rejected = false;
        }
    }
    Ok(sol)
}
