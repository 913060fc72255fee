//! Fixpoints and consistent initial conditions.

use crate::error::{Error, Result};
use crate::linalg::{newton, LinearSolve, NewtonFailure, NewtonOptions};
use crate::solver::DynamicalSystem;

const OPTIONS: NewtonOptions = NewtonOptions {
    tol: 1e-10,
    max_iter: 100,
    max_halvings: 10,
    // Kuramoto-type Jacobians are singular along the global phase shift
    solve: LinearSolve::Svd,
};

fn check_guess<S, P>(sys: &S, x_guess: &[f64]) -> Result<()>
where
    S: DynamicalSystem<P> + ?Sized,
{
    if x_guess.len() != sys.dim() {
        return Err(Error::LengthMismatch {
            what: "initial guess",
            expected: sys.dim(),
            got: x_guess.len(),
        });
    }
    if x_guess.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("initial guess must be finite".into()));
    }
    Ok(())
}

fn to_error(f: NewtonFailure) -> Error {
    match f {
        NewtonFailure::NoConvergence { iterations, residual } => Error::NoConvergence { iterations, residual },
        NewtonFailure::NonFinite { iterations } => Error::NoConvergence {
            iterations,
            residual: f64::NAN,
        },
    }
}

/// Solves `rhs(x) = 0` (at `t = 0`) by damped Newton from `x_guess`.
///
/// The result has max-abs residual at most `1e-10`. Degenerate families
/// (e.g. phase-shift invariant networks) converge to some member.
pub fn find_fixpoint<S, P>(sys: &S, p: &P, x_guess: &[f64]) -> Result<Vec<f64>>
where
    S: DynamicalSystem<P> + ?Sized,
{
    check_guess(sys, x_guess)?;
    sys.validate_params(p)?;
    let mut x = x_guess.to_vec();
    let mut f = |xs: &[f64], out: &mut [f64]| sys.rhs(out, xs, p, 0.0);
    newton(&mut f, &mut x, OPTIONS).map_err(to_error)?;
    Ok(x)
}

/// Makes the algebraic rows (mass 0) consistent, holding every differential
/// component at its guessed value. Systems without algebraic rows get the
/// guess back unchanged.
pub fn find_valid_ic<S, P>(sys: &S, p: &P, x_guess: &[f64]) -> Result<Vec<f64>>
where
    S: DynamicalSystem<P> + ?Sized,
{
    check_guess(sys, x_guess)?;
    sys.validate_params(p)?;
    let algebraic: Vec<usize> = match sys.mass_diagonal() {
        Some(m) => (0..m.len()).filter(|&i| m[i] == 0.0).collect(),
        None => Vec::new(),
    };
    if algebraic.is_empty() {
        return Ok(x_guess.to_vec());
    }

    let mut full = x_guess.to_vec();
    let mut du = vec![0.0; full.len()];
    let mut y: Vec<f64> = algebraic.iter().map(|&i| full[i]).collect();
    let mut g = |ys: &[f64], out: &mut [f64]| {
        for (k, &i) in algebraic.iter().enumerate() {
            full[i] = ys[k];
        }
        sys.rhs(&mut du, &full, p, 0.0);
        for (k, &i) in algebraic.iter().enumerate() {
            out[k] = du[i];
        }
    };
    newton(&mut g, &mut y, OPTIONS).map_err(to_error)?;

    let mut x = x_guess.to_vec();
    for (k, &i) in algebraic.iter().enumerate() {
        x[i] = y[k];
    }
    Ok(x)
}
