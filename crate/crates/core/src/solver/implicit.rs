//! Implicit Euler for `M u' = f(u, p, t)` with a diagonal 0/1 mass matrix.
//!
//! Each step solves, with damped Newton on a finite-difference Jacobian,
//!
//! - `x - u - h f(x)` for differential rows (mass 1),
//! - `f(x)` for algebraic rows (mass 0),
//!
//! so the Newton tolerance bounds the constraint residual directly.

use super::dense::{eval_segment, DenseKind};
use super::dp5::{check_common, eval_rhs, Delay};
use super::events::{detect_events, EventSpec, IntegratorState};
use super::{DynamicalSystem, Solution, SolverConfig};
use crate::error::{Error, Result};
use crate::linalg::{newton, LinearSolve, NewtonFailure, NewtonOptions};

/// Step used when neither `fixed_dt` nor a finite `dt_max` is configured.
pub const DEFAULT_IMPLICIT_DT: f64 = 1e-2;

/// Integrates `M u' = f(u)` on a uniform grid of implicit Euler steps. The
/// step is `fixed_dt`, else `dt_max`, else [`DEFAULT_IMPLICIT_DT`], shrunk so
/// the grid ends exactly at `tspan.1`. Algebraic rows of `u0` should already
/// be consistent (see [`crate::convenience::find_valid_ic`]).
pub fn integrate_mass_matrix<S, P>(
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
    run_implicit(sys, u0, tspan, p, cfg, events, None)
}

pub(crate) fn run_implicit<S, P>(
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
    let mass: Vec<f64> = match sys.mass_diagonal() {
        Some(m) => m.to_vec(),
        None => vec![1.0; n],
    };
    if mass.len() != n {
        return Err(Error::LengthMismatch {
            what: "mass diagonal",
            expected: n,
            got: mass.len(),
        });
    }

    let mut dt = cfg.fixed_dt.unwrap_or(if cfg.dt_max.is_finite() {
        cfg.dt_max
    } else {
        DEFAULT_IMPLICIT_DT
    });
    if let Some(d) = &delay {
        dt = dt.min(d.tau);
    }
    let span = t1 - t0;
    let steps = (span / dt - 1e-9).ceil().max(1.0) as usize;
    let h_grid = span / steps as f64;
    if steps > cfg.max_steps {
        return Err(Error::MaxStepsExceeded {
            max_steps: cfg.max_steps,
            t: t0,
        });
    }

    let dense = cfg.save_steps.then_some(DenseKind::Linear);
    let mut sol = Solution::new(n, dense, sys.symbols());
    sol.push_point(t0, u0);

    let opts = NewtonOptions {
        tol: cfg.newton_tol,
        max_iter: cfg.newton_max_iter,
        max_halvings: 10,
        solve: LinearSolve::Lu,
    };

    let mut u = u0.to_vec();
    let mut x = vec![0.0; n];
    let mut coeffs = vec![0.0; 2 * n];
    let mut t = t0;
    let mut g_old = vec![0.0; events.as_ref().map_or(0, |e| e.n_conditions())];
    if let Some(ev) = events.as_deref() {
        ev.evaluate(&mut g_old, &u, t);
    }

    let mut grid_index = 0usize;
    let mut step_count = 0usize;
    while grid_index < steps {
        let t_target = if grid_index + 1 == steps {
            t1
        } else {
            t0 + (grid_index + 1) as f64 * h_grid
        };
        let h = t_target - t;
        step_count += 1;
        if step_count > cfg.max_steps {
            return Err(Error::MaxStepsExceeded {
                max_steps: cfg.max_steps,
                t,
            });
        }

        x.copy_from_slice(&u);
        implicit_step(sys, &mut delay, &mass, &u, &mut x, p, t_target, h, opts, step_count, &mut sol)?;

        coeffs[..n].copy_from_slice(&u);
        coeffs[n..].copy_from_slice(&x);
        let mut t_new = t_target;
        let mut fired = None;
        if let Some(ev) = events.as_deref() {
            let c = &coeffs;
            let mut interp = |tq: f64, out: &mut [f64]| eval_segment(DenseKind::Linear, c, t, h, tq, out);
            if let Some((te, idx)) = detect_events(ev, t, t_target, &g_old, &x, &mut interp) {
                if te < t_target {
                    // re-solve the shortened step so algebraic rows stay consistent
                    t_new = te;
                    eval_segment(DenseKind::Linear, &coeffs, t, h, te, &mut x);
                    implicit_step(sys, &mut delay, &mass, &u, &mut x, p, te, te - t, opts, step_count, &mut sol)?;
                    coeffs[n..].copy_from_slice(&x);
                }
                fired = Some(idx);
            }
        }
        // linear segment expressed over [t, t_new]
        let h_seg = t_new - t;

        if cfg.save_steps {
            sol.push_step(h_seg, &coeffs, t_new, &x);
        } else {
            sol.set_last(t_new, &x);
        }
        if let Some(d) = delay.as_mut() {
            d.ring.push(t, t_new, h_seg, &coeffs, &x);
            d.ring.prune(t_new - d.tau);
        }
        sol.stats.accepted += 1;
        t = t_new;
        u.copy_from_slice(&x);
        if t_new == t_target {
            grid_index += 1;
        }

        if let Some(ev) = events.as_deref_mut() {
            if let Some(idx) = fired {
                sol.push_event(t, idx);
                ev.fire(&mut IntegratorState { t, u: &mut u, p }, idx);
                if u.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFiniteState { t });
                }
            }
            ev.evaluate(&mut g_old, &u, t);
        }
    }
    Ok(sol)
}

/// One implicit Euler step ending at `t_end`; `x` holds the initial guess
/// and receives the solution.
#[allow(clippy::too_many_arguments)]
fn implicit_step<S, P>(
    sys: &S,
    delay: &mut Option<Delay<'_>>,
    mass: &[f64],
    u: &[f64],
    x: &mut [f64],
    p: &P,
    t_end: f64,
    h: f64,
    opts: NewtonOptions,
    step: usize,
    sol: &mut Solution,
) -> Result<()>
where
    S: DynamicalSystem<P> + ?Sized,
{
    let mut eval_err = None;
    let mut evals = 0usize;
    let mut residual = |xs: &[f64], out: &mut [f64]| {
        evals += 1;
        if let Err(e) = eval_rhs(sys, delay, out, xs, p, t_end) {
            eval_err.get_or_insert(e);
            out.fill(f64::NAN);
            return;
        }
        for i in 0..xs.len() {
            if mass[i] != 0.0 {
                out[i] = mass[i] * (xs[i] - u[i]) - h * out[i];
            }
        }
    };
    let outcome = newton(&mut residual, x, opts);
    sol.stats.rhs_evals += evals;
    if let Some(e) = eval_err {
        return Err(e);
    }
    match outcome {
        Ok(_) => Ok(()),
        Err(NewtonFailure::NoConvergence { residual, .. }) => Err(Error::NewtonFailed { step, t: t_end, residual }),
        Err(NewtonFailure::NonFinite { .. }) => Err(Error::NonFiniteState { t: t_end }),
    }
}
