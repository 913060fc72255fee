//! Vector continuous callbacks.

use std::fmt;

/// One fired event: the condition `index` crossed zero at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub t: f64,
    pub index: usize,
}

/// Mutable view handed to an affect: the event time, the state at the event
/// and the parameters. Dimensions must not change.
pub struct IntegratorState<'a, P> {
    pub t: f64,
    pub u: &'a mut [f64],
    pub p: &'a mut P,
}

type ConditionFn<'a> = dyn Fn(&mut [f64], &[f64], f64) + 'a;
type AffectFn<'a, P> = dyn FnMut(&mut IntegratorState<'_, P>, usize) + 'a;

/// `n_conditions` scalar conditions evaluated together; whenever component
/// `i` crosses zero the affect is called with index `i`.
pub struct EventSpec<'a, P> {
    n_conditions: usize,
    condition: Box<ConditionFn<'a>>,
    affect: Box<AffectFn<'a, P>>,
}

impl<'a, P> EventSpec<'a, P> {
    pub fn new<C, A>(n_conditions: usize, condition: C, affect: A) -> Self
    where
        C: Fn(&mut [f64], &[f64], f64) + 'a,
        A: FnMut(&mut IntegratorState<'_, P>, usize) + 'a,
    {
        Self {
            n_conditions,
            condition: Box::new(condition),
            affect: Box::new(affect),
        }
    }

    pub fn n_conditions(&self) -> usize {
        self.n_conditions
    }

    pub fn evaluate(&self, out: &mut [f64], u: &[f64], t: f64) {
        (self.condition)(out, u, t)
    }

    pub(crate) fn fire(&mut self, state: &mut IntegratorState<'_, P>, index: usize) {
        (self.affect)(state, index)
    }
}

impl<P> fmt::Debug for EventSpec<'_, P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EventSpec")
            .field("n_conditions", &self.n_conditions)
            .finish_non_exhaustive()
    }
}

/// A sign change from `before` to `after`. An exact zero counts on the right
/// end only, so a condition sitting at zero after a restart does not re-fire.
#[inline]
pub(crate) fn crossed(before: f64, after: f64) -> bool {
    (before < 0.0 && after >= 0.0) || (before > 0.0 && after <= 0.0)
}

/// Finds the earliest zero crossing inside `[t0, t1]`.
///
/// `g_old` holds the condition values at `t0`, `u_end` the state at `t1`, and
/// `interp(t, out)` the dense output of the step. Each crossing is bracketed
/// by bisection down to `1e-10 * max(1, |t|)`; the returned time is the right
/// end of the final bracket, where the condition has already crossed.
pub fn detect_events<P>(
    spec: &EventSpec<'_, P>,
    t0: f64,
    t1: f64,
    g_old: &[f64],
    u_end: &[f64],
    interp: &mut dyn FnMut(f64, &mut [f64]),
) -> Option<(f64, usize)> {
    let n = spec.n_conditions;
    let mut g = vec![0.0; n];
    spec.evaluate(&mut g, u_end, t1);
    let candidates: Vec<usize> = (0..n).filter(|&i| crossed(g_old[i], g[i])).collect();
    if candidates.is_empty() {
        return None;
    }

    let mut u = vec![0.0; u_end.len()];
    let tol = 1e-10 * t0.abs().max(t1.abs()).max(1.0);
    let mut best: Option<(f64, usize)> = None;
    for i in candidates {
        let (mut a, mut b) = (t0, best.map_or(t1, |(tb, _)| tb));
        // skip roots that cannot beat the current best
        if b < t1 {
            interp(b, &mut u);
            spec.evaluate(&mut g, &u, b);
            if !crossed(g_old[i], g[i]) {
                continue;
            }
        }
        while b - a > tol {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            interp(m, &mut u);
            spec.evaluate(&mut g, &u, m);
            if crossed(g_old[i], g[i]) {
                b = m;
            } else {
                a = m;
            }
        }
        match best {
            Some((tb, _)) if tb <= b => {}
            _ => best = Some((b, i)),
        }
    }
    best
}
