//! Dormand–Prince tableau, continuous extensions and the rolling history
//! used for delayed reads.

use std::collections::VecDeque;

use crate::error::{Error, Result};

pub(crate) const C2: f64 = 1.0 / 5.0;
pub(crate) const C3: f64 = 3.0 / 10.0;
pub(crate) const C4: f64 = 4.0 / 5.0;
pub(crate) const C5: f64 = 8.0 / 9.0;

pub(crate) const A21: f64 = 1.0 / 5.0;
pub(crate) const A31: f64 = 3.0 / 40.0;
pub(crate) const A32: f64 = 9.0 / 40.0;
pub(crate) const A41: f64 = 44.0 / 45.0;
pub(crate) const A42: f64 = -56.0 / 15.0;
pub(crate) const A43: f64 = 32.0 / 9.0;
pub(crate) const A51: f64 = 19372.0 / 6561.0;
pub(crate) const A52: f64 = -25360.0 / 2187.0;
pub(crate) const A53: f64 = 64448.0 / 6561.0;
pub(crate) const A54: f64 = -212.0 / 729.0;
pub(crate) const A61: f64 = 9017.0 / 3168.0;
pub(crate) const A62: f64 = -355.0 / 33.0;
pub(crate) const A63: f64 = 46732.0 / 5247.0;
pub(crate) const A64: f64 = 49.0 / 176.0;
pub(crate) const A65: f64 = -5103.0 / 18656.0;
pub(crate) const A71: f64 = 35.0 / 384.0;
pub(crate) const A73: f64 = 500.0 / 1113.0;
pub(crate) const A74: f64 = 125.0 / 192.0;
pub(crate) const A75: f64 = -2187.0 / 6784.0;
pub(crate) const A76: f64 = 11.0 / 84.0;

// 5th-order weights minus embedded 4th-order weights
pub(crate) const E1: f64 = 71.0 / 57600.0;
pub(crate) const E3: f64 = -71.0 / 16695.0;
pub(crate) const E4: f64 = 71.0 / 1920.0;
pub(crate) const E5: f64 = -17253.0 / 339200.0;
pub(crate) const E6: f64 = 22.0 / 525.0;
pub(crate) const E7: f64 = -1.0 / 40.0;

// 4th-order continuous extension
pub(crate) const D1: f64 = -12715105075.0 / 11282082432.0;
pub(crate) const D3: f64 = 87487479700.0 / 32700410799.0;
pub(crate) const D4: f64 = -10690763975.0 / 1880347072.0;
pub(crate) const D5: f64 = 701980252875.0 / 199316789632.0;
pub(crate) const D6: f64 = -1453857185.0 / 822651844.0;
pub(crate) const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DenseKind {
    /// Five coefficient rows per step (Dormand–Prince 4th-order extension).
    Dp5,
    /// Two rows per step: start and end state.
    Linear,
}

impl DenseKind {
    pub(crate) fn rows(self) -> usize {
        match self {
            Self::Dp5 => 5,
            Self::Linear => 2,
        }
    }
}

/// Evaluates a segment starting at `t0` with step `h` at time `t`.
#[inline]
pub(crate) fn eval_segment(kind: DenseKind, coeffs: &[f64], t0: f64, h: f64, t: f64, out: &mut [f64]) {
    let n = out.len();
    let theta = (t - t0) / h;
    match kind {
        DenseKind::Dp5 => {
            let (r1, rest) = coeffs.split_at(n);
            let (r2, rest) = rest.split_at(n);
            let (r3, rest) = rest.split_at(n);
            let (r4, r5) = rest.split_at(n);
            let theta1 = 1.0 - theta;
            for i in 0..n {
                out[i] = r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i])));
            }
        }
        DenseKind::Linear => {
            let (a, b) = coeffs.split_at(n);
            for i in 0..n {
                out[i] = a[i] + theta * (b[i] - a[i]);
            }
        }
    }
}

/// Dense-output segments covering the most recent lag window, plus the
/// user history for times before the start.
pub(crate) struct HistoryRing<'h> {
    kind: DenseKind,
    dim: usize,
    t_start: f64,
    u_start: Vec<f64>,
    history: &'h dyn Fn(&mut [f64], f64),
    segments: VecDeque<Segment>,
    spare: Vec<Vec<f64>>,
}

struct Segment {
    t0: f64,
    t1: f64,
    h: f64,
    /// Dense coefficients followed by the stored end state.
    data: Vec<f64>,
}

impl<'h> HistoryRing<'h> {
    pub(crate) fn new(kind: DenseKind, t_start: f64, u_start: &[f64], history: &'h dyn Fn(&mut [f64], f64)) -> Self {
        Self {
            kind,
            dim: u_start.len(),
            t_start,
            u_start: u_start.to_vec(),
            history,
            segments: VecDeque::new(),
            spare: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, t0: f64, t1: f64, h: f64, coeffs: &[f64], end_state: &[f64]) {
        let mut data = self.spare.pop().unwrap_or_default();
        data.clear();
        data.extend_from_slice(coeffs);
        data.extend_from_slice(end_state);
        self.segments.push_back(Segment { t0, t1, h, data });
    }

    /// Drops segments that end before `t_oldest`.
    pub(crate) fn prune(&mut self, t_oldest: f64) {
        while self.segments.len() > 1 && self.segments[0].t1 < t_oldest {
            if let Some(s) = self.segments.pop_front() {
                self.spare.push(s.data);
            }
        }
    }

    /// Writes the state at time `t` into `out`. Stored step endpoints are
    /// returned exactly; times before the start come from the history.
    pub(crate) fn lookup(&self, t: f64, out: &mut [f64]) -> Result<()> {
        if t < self.t_start {
            (self.history)(out, t);
            return Ok(());
        }
        let Some(last) = self.segments.back() else {
            if t <= self.t_start + 1e-12 * self.t_start.abs().max(1.0) {
                out.copy_from_slice(&self.u_start);
                return Ok(());
            }
            return Err(Error::HistoryCoverage { t });
        };
        if t == self.t_start {
            out.copy_from_slice(&self.u_start);
            return Ok(());
        }
        let t = if t > last.t1 && t <= last.t1 + 1e-12 * last.t1.abs().max(1.0) {
            last.t1
        } else {
            t
        };
        let idx = self.segments.partition_point(|s| s.t1 < t);
        let Some(seg) = self.segments.get(idx) else {
            return Err(Error::HistoryCoverage { t });
        };
        if t < seg.t0 {
            return Err(Error::HistoryCoverage { t });
        }
        let ncoef = self.kind.rows() * self.dim;
        if t == seg.t1 {
            out.copy_from_slice(&seg.data[ncoef..]);
        } else {
            eval_segment(self.kind, &seg.data[..ncoef], seg.t0, seg.h, t, out);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tableau_rows_sum_to_nodes() {
        assert!((A21 - C2).abs() < 1e-15);
        assert!((A31 + A32 - C3).abs() < 1e-15);
        assert!((A41 + A42 + A43 - C4).abs() < 1e-15);
        assert!((A51 + A52 + A53 + A54 - C5).abs() < 1e-14);
        assert!((A61 + A62 + A63 + A64 + A65 - 1.0).abs() < 1e-14);
        assert!((A71 + A73 + A74 + A75 + A76 - 1.0).abs() < 1e-15);
        assert!((E1 + E3 + E4 + E5 + E6 + E7).abs() < 1e-15);
    }

    #[test]
    fn linear_segment_endpoints() {
        let coeffs = [1.0, 2.0, 3.0, 6.0];
        let mut out = [0.0; 2];
        eval_segment(DenseKind::Linear, &coeffs, 1.0, 2.0, 2.0, &mut out);
        assert_eq!(out, [2.0, 4.0]);
    }

    #[test]
    fn ring_lookup_and_prune() {
        let hist = |out: &mut [f64], _t: f64| out.fill(-1.0);
        let mut ring = HistoryRing::new(DenseKind::Linear, 0.0, &[0.0], &hist);
        let mut out = [0.0];
        ring.lookup(-0.5, &mut out).unwrap();
        assert_eq!(out, [-1.0]);
        ring.lookup(0.0, &mut out).unwrap();
        assert_eq!(out, [0.0]);
        assert!(ring.lookup(0.1, &mut out).is_err());

        ring.push(0.0, 1.0, 1.0, &[0.0, 1.0], &[1.0]);
        ring.push(1.0, 2.0, 1.0, &[1.0, 3.0], &[3.0]);
        ring.lookup(1.5, &mut out).unwrap();
        assert_eq!(out, [2.0]);
        ring.lookup(1.0, &mut out).unwrap();
        assert_eq!(out, [1.0]);
        assert!(ring.lookup(2.5, &mut out).is_err());

        ring.prune(1.5);
        ring.lookup(1.25, &mut out).unwrap();
        assert_eq!(out, [1.5]);
        assert!(ring.lookup(0.5, &mut out).is_err());
    }
}
