//! Finite-difference Jacobians and a damped Newton iteration.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LinearSolve {
    /// LU with an SVD fallback when the factorization is singular.
    Lu,
    /// Minimum-norm least squares; tolerates rank-deficient Jacobians.
    Svd,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    pub solve: LinearSolve,
}

#[derive(Debug)]
pub(crate) enum NewtonFailure {
    /// Residual still above tolerance after `max_iter` iterations, or the
    /// damping could not reduce it.
    NoConvergence { iterations: usize, residual: f64 },
    NonFinite { iterations: usize },
}

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Central-difference Jacobian of `f` at `x`, perturbing component `j` by
/// `sqrt(eps) * max(|x_j|, 1)`. `x` is restored on return.
pub(crate) fn fd_jacobian<F>(f: &mut F, x: &mut [f64], m: usize) -> DMatrix<f64>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n = x.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut fp = vec![0.0; m];
    let mut fm = vec![0.0; m];
    let sqrt_eps = f64::EPSILON.sqrt();
    for j in 0..n {
        let xj = x[j];
        let delta = sqrt_eps * xj.abs().max(1.0);
        x[j] = xj + delta;
        f(x, &mut fp);
        x[j] = xj - delta;
        f(x, &mut fm);
        x[j] = xj;
        // actual spacing after rounding
        let span = (xj + delta) - (xj - delta);
        for i in 0..m {
            jac[(i, j)] = (fp[i] - fm[i]) / span;
        }
    }
    jac
}

fn solve_linear(jac: DMatrix<f64>, rhs: DVector<f64>, how: LinearSolve) -> Option<DVector<f64>> {
    if how == LinearSolve::Lu {
        if let Some(x) = jac.clone().lu().solve(&rhs) {
            if x.iter().all(|v| v.is_finite()) {
                return Some(x);
            }
        }
    }
    let svd = jac.svd(true, true);
    let cutoff = svd.singular_values.max() * 1e-10;
    svd.solve(&rhs, cutoff.max(f64::MIN_POSITIVE)).ok()
}

/// Damped Newton on `f(x) = 0`. Each full step is halved until the residual
/// 2-norm decreases (at most `max_halvings` times). Converged when the
/// max-abs residual is at most `tol`. Returns the iteration count.
pub(crate) fn newton<F>(f: &mut F, x: &mut [f64], opts: NewtonOptions) -> Result<usize, NewtonFailure>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n = x.len();
    let mut r = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut r_trial = vec![0.0; n];
    f(x, &mut r);
    for iter in 0..=opts.max_iter {
        let res = max_abs(&r);
        if !res.is_finite() {
            return Err(NewtonFailure::NonFinite { iterations: iter });
        }
        if res <= opts.tol {
            return Ok(iter);
        }
        if iter == opts.max_iter {
            return Err(NewtonFailure::NoConvergence {
                iterations: iter,
                residual: res,
            });
        }
        let jac = fd_jacobian(f, x, n);
        let rhs = DVector::from_iterator(n, r.iter().map(|v| -v));
        let Some(step) = solve_linear(jac, rhs, opts.solve) else {
            return Err(NewtonFailure::NoConvergence {
                iterations: iter,
                residual: res,
            });
        };

        let base = norm2(&r);
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            for i in 0..n {
                trial[i] = x[i] + scale * step[i];
            }
            f(&trial, &mut r_trial);
            let rn = norm2(&r_trial);
            if rn.is_finite() && (rn < base || max_abs(&r_trial) <= opts.tol) {
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            return Err(NewtonFailure::NoConvergence {
                iterations: iter + 1,
                residual: res,
            });
        }
        x.copy_from_slice(&trial);
        r.copy_from_slice(&r_trial);
    }
    unreachable!()
}
