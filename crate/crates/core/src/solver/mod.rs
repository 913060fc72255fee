//! Time integration.
//!
//! Every integrator works on a [`DynamicalSystem`] and produces a
//! [`Solution`] holding the accepted steps and, unless disabled, their dense
//! output. Vector continuous callbacks ([`EventSpec`]) are located on the
//! dense output by bisection, the step is truncated at the root, the affect
//! runs, and integration restarts from the (possibly modified) state.

mod dense;
mod dp5;
mod events;
mod implicit;

use std::io::Write;

pub use dense::DenseKind;
pub use dp5::{integrate_dde, integrate_dp5};
pub use events::{EventRecord, EventSpec, IntegratorState};
pub use implicit::integrate_mass_matrix;

use crate::error::{Error, Result};

/// A right-hand side `M u' = f(u, p, t)` with diagonal 0/1 mass matrix.
pub trait DynamicalSystem<P> {
    fn dim(&self) -> usize;

    fn rhs(&self, du: &mut [f64], u: &[f64], p: &P, t: f64);

    /// Right-hand side with access to the state one lag in the past. Systems
    /// without delays ignore `history`.
    fn rhs_delayed(&self, du: &mut [f64], u: &[f64], history: &[f64], p: &P, t: f64) {
        let _ = history;
        self.rhs(du, u, p, t)
    }

    /// `None` means the identity.
    fn mass_diagonal(&self) -> Option<&[f64]> {
        None
    }

    fn symbols(&self) -> Option<&[String]> {
        None
    }

    fn validate_params(&self, p: &P) -> Result<()> {
        let _ = p;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; `0.0` selects it automatically.
    pub dt_init: f64,
    pub dt_max: f64,
    pub max_steps: usize,
    pub safety: f64,
    pub facmin: f64,
    pub facmax: f64,
    /// Disables error control and steps with (at most) this size.
    pub fixed_dt: Option<f64>,
    /// Keep every accepted step and its dense output. When off, only the
    /// initial and final states are stored.
    pub save_steps: bool,
    /// Max-abs residual at which Newton iterations stop.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-6,
            atol: 1e-8,
            dt_init: 0.0,
            dt_max: f64::INFINITY,
            max_steps: 1_000_000,
            safety: 0.9,
            facmin: 0.2,
            facmax: 10.0,
            fixed_dt: None,
            save_steps: true,
            newton_tol: 1e-10,
            newton_max_iter: 25,
        }
    }
}

impl SolverConfig {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    pub fn fixed_step(dt: f64) -> Self {
        Self {
            fixed_dt: Some(dt),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return bad(format!("tolerances must be positive (rtol {}, atol {})", self.rtol, self.atol));
        }
        if !(self.facmin < 1.0 && self.facmax > 1.0 && self.facmin > 0.0) {
            return bad(format!("need 0 < facmin < 1 < facmax, got {} / {}", self.facmin, self.facmax));
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return bad(format!("safety factor {} not in (0, 1]", self.safety));
        }
        if self.dt_max.is_nan() || self.dt_max <= 0.0 || self.dt_init < 0.0 {
            return bad("step bounds must be positive".into());
        }
        if let Some(h) = self.fixed_dt {
            if !(h > 0.0 && h.is_finite()) {
                return bad(format!("fixed step {h} must be positive"));
            }
        }
        if self.newton_tol.is_nan() || self.newton_tol <= 0.0 || self.newton_max_iter == 0 {
            return bad("invalid Newton settings".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub rhs_evals: usize,
    pub accepted: usize,
    pub rejected: usize,
}

/// Accepted time points, states and dense output of one integration.
#[derive(Debug, Clone)]
pub struct Solution {
    dim: usize,
    times: Vec<f64>,
    states: Vec<f64>,
    dense: Option<DenseKind>,
    // per segment i (between times[i] and times[i + 1]): step size and coefficients
    seg_h: Vec<f64>,
    seg_coeffs: Vec<f64>,
    symbols: Vec<String>,
    events: Vec<EventRecord>,
    pub stats: SolverStats,
}

impl Solution {
    pub(crate) fn new(dim: usize, dense: Option<DenseKind>, symbols: Option<&[String]>) -> Self {
        let symbols = match symbols {
            Some(s) => s.to_vec(),
            None => (0..dim).map(|i| format!("u_{i}")).collect(),
        };
        Self {
            dim,
            times: Vec::new(),
            states: Vec::new(),
            dense,
            seg_h: Vec::new(),
            seg_coeffs: Vec::new(),
            symbols,
            events: Vec::new(),
            stats: SolverStats::default(),
        }
    }

    pub(crate) fn push_point(&mut self, t: f64, u: &[f64]) {
        self.times.push(t);
        self.states.extend_from_slice(u);
    }

    pub(crate) fn push_step(&mut self, h: f64, coeffs: &[f64], t_end: f64, u_end: &[f64]) {
        if self.dense.is_some() {
            self.seg_h.push(h);
            self.seg_coeffs.extend_from_slice(coeffs);
        }
        self.push_point(t_end, u_end);
    }

    /// Replaces the stored final point (used when steps are not saved).
    pub(crate) fn set_last(&mut self, t: f64, u: &[f64]) {
        if self.times.len() < 2 {
            self.push_point(t, u);
        } else {
            *self.times.last_mut().unwrap() = t;
            let n = self.states.len();
            self.states[n - self.dim..].copy_from_slice(u);
        }
    }

    pub(crate) fn push_event(&mut self, t: f64, index: usize) {
        self.events.push(EventRecord { t, index });
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn states(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.states.chunks_exact(self.dim)
    }

    pub fn t_final(&self) -> f64 {
        *self.times.last().expect("empty solution")
    }

    pub fn final_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn events(&self) -> &[EventRecord] {
        &self.events
    }

    pub fn dense_kind(&self) -> Option<DenseKind> {
        self.dense
    }

    /// Dense coefficients and step size of segment `i` (between `times[i]`
    /// and `times[i + 1]`).
    pub fn segment(&self, i: usize) -> Option<(f64, &[f64])> {
        let kind = self.dense?;
        let stride = kind.rows() * self.dim;
        let h = *self.seg_h.get(i)?;
        Some((h, &self.seg_coeffs[i * stride..(i + 1) * stride]))
    }

    /// State at time `t`. Stored times return the stored state exactly;
    /// other times use the dense output of the enclosing step.
    pub fn interpolate(&self, t: f64, out: &mut [f64]) -> Result<()> {
        let (t0, t1) = (self.times[0], self.t_final());
        if !(t >= t0 && t <= t1) {
            return Err(Error::OutOfSpan { t, t0, t1 });
        }
        let k = self.times.partition_point(|&x| x < t);
        if self.times[k] == t {
            out.copy_from_slice(self.state(k));
            return Ok(());
        }
        let i = k - 1;
        match (self.dense, self.segment(i)) {
            (Some(kind), Some((h, coeffs))) => {
                dense::eval_segment(kind, coeffs, self.times[i], h, t, out);
                Ok(())
            }
            _ => Err(Error::Unsupported(
                "interpolation needs dense output (save_steps was off)".into(),
            )),
        }
    }

    pub fn interpolate_vec(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.interpolate(t, &mut out)?;
        Ok(out)
    }

    /// Writes `t,<symbols...>` CSV rows at the requested sample times.
    pub fn write_csv<W: Write>(&self, mut out: W, sample_times: &[f64]) -> Result<()> {
        write!(out, "t")?;
        for s in &self.symbols {
            write!(out, ",{s}")?;
        }
        writeln!(out)?;
        let mut u = vec![0.0; self.dim];
        for &t in sample_times {
            self.interpolate(t, &mut u)?;
            write!(out, "{t}")?;
            for x in &u {
                write!(out, ",{x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Weighted RMS norm used for step-size control.
pub(crate) fn error_norm(err: &[f64], u: &[f64], u_new: &[f64], rtol: f64, atol: f64) -> f64 {
    let sum: f64 = err
        .iter()
        .zip(u.iter().zip(u_new))
        .map(|(e, (a, b))| {
            let sc = atol + rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (sum / err.len().max(1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        assert!(SolverConfig::with_tolerances(0.0, 1e-8).validate().is_err());
        assert!(SolverConfig { facmin: 1.5, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { facmax: 0.9, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { fixed_dt: Some(-1.0), ..Default::default() }.validate().is_err());
    }

    #[test]
    fn error_norm_is_weighted_rms() {
        let n = error_norm(&[1e-6, 1e-6], &[0.0, 0.0], &[0.0, 0.0], 1e-3, 1e-6);
        assert!((n - 1.0).abs() < 1e-12);
        let n = error_norm(&[1e-3, 0.0], &[1.0, 0.0], &[-2.0, 0.0], 1e-3, 0.0 + 1e-300);
        assert!((n - (0.5f64 * 0.25).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn csv_export() {
        let mut sol = Solution::new(2, Some(DenseKind::Linear), Some(&["a_0".into(), "b_0".into()]));
        sol.push_point(0.0, &[0.0, 1.0]);
        sol.push_step(1.0, &[0.0, 1.0, 2.0, 3.0], 1.0, &[2.0, 3.0]);
        let mut out = Vec::new();
        sol.write_csv(&mut out, &[0.0, 0.5, 1.0]).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "t,a_0,b_0\n0,0,1\n0.5,1,2\n1,2,3\n");
        assert!(sol.interpolate_vec(1.5).is_err());
    }
}
