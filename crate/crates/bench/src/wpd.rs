//! Work-precision runs: error against a tight reference vs. CPU time.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Duration;

use cpu_time::ThreadTime;
use netdyn::solver::integrate_dp5;
use netdyn::{graphs, DynamicalSystem, Solution, SolverConfig};

use crate::incidence::IncidenceKuramoto;
use crate::kuramoto::{build_kuramoto, InitData, Variant};

pub const CSV_HEADER: [&str; 8] = ["n_nodes", "backend", "rtol", "atol", "error", "cpu_ms_per_node", "rep", "seed"];

pub const REFERENCE_RTOL: f64 = 1e-12;
pub const REFERENCE_ATOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Backend {
    /// Component-assembled network function.
    Assembled,
    /// Sparse incidence-matrix product.
    Incidence,
}

impl Backend {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Assembled => "assembled",
            Self::Incidence => "incidence",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "assembled" => Ok(Self::Assembled),
            "incidence" => Ok(Self::Incidence),
            other => Err(format!("unknown backend `{other}`")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub n_nodes: usize,
    pub degree: usize,
    pub rewire: f64,
    pub tspan: (f64, f64),
    pub sigma: f64,
    /// `(rtol, atol)` pairs with decreasing `rtol`.
    pub ladder: Vec<(f64, f64)>,
    pub reps: usize,
    pub seed: u64,
    pub backends: Vec<Backend>,
    /// Each timed solve is repeated until this much CPU time has passed;
    /// the per-call average is reported.
    pub min_time: Duration,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            n_nodes: 10,
            degree: 4,
            rewire: 0.2,
            tspan: (0.0, 10.0),
            sigma: 5.0,
            ladder: default_ladder(),
            reps: 10,
            seed: 42,
            backends: vec![Backend::Assembled, Backend::Incidence],
            min_time: Duration::from_millis(10),
        }
    }
}

/// `rtol = atol = 1e-3, ..., 1e-9`.
pub fn default_ladder() -> Vec<(f64, f64)> {
    (3..=9).map(|k| (10f64.powi(-k), 10f64.powi(-k))).collect()
}

impl BenchConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        anyhow::ensure!(!self.ladder.is_empty(), "tolerance ladder is empty");
        anyhow::ensure!(
            self.ladder.windows(2).all(|w| w[1].0 < w[0].0),
            "tolerance ladder must have strictly decreasing rtol"
        );
        anyhow::ensure!(self.reps > 0, "need at least one repetition");
        anyhow::ensure!(!self.backends.is_empty(), "no backend selected");
        anyhow::ensure!(self.tspan.1 > self.tspan.0, "empty time span");
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WpdRow {
    pub n_nodes: usize,
    pub backend: Backend,
    pub rtol: f64,
    pub atol: f64,
    /// `‖u(t1) - u_ref(t1)‖₂ / √D`; NaN when the solve failed.
    pub error: f64,
    pub cpu_ms_per_node: f64,
    pub rep: usize,
    pub seed: u64,
}

/// Root-mean-square deviation of two final states.
pub fn final_state_error(u: &[f64], reference: &[f64]) -> f64 {
    let sq: f64 = u.iter().zip(reference).map(|(a, b)| (a - b).powi(2)).sum();
    (sq / u.len() as f64).sqrt()
}

fn timed<F>(min_time: Duration, mut solve: F) -> (netdyn::Result<Solution>, Duration)
where
    F: FnMut() -> netdyn::Result<Solution>,
{
    let start = ThreadTime::now();
    let first = solve();
    if first.is_err() {
        return (first, start.elapsed());
    }
    let mut calls = 1u32;
    while start.elapsed() < min_time {
        let _ = solve();
        calls += 1;
    }
    (first, start.elapsed() / calls)
}

fn solver_config(rtol: f64, atol: f64) -> SolverConfig {
    SolverConfig {
        save_steps: false,
        ..SolverConfig::with_tolerances(rtol, atol)
    }
}

#[allow(clippy::too_many_arguments)]
fn ladder_rows<S, P>(sys: &S, p: &mut P, x0: &[f64], reference: &[f64], cfg: &BenchConfig, backend: Backend, rep: usize, seed: u64, rows: &mut Vec<WpdRow>)
where
    S: DynamicalSystem<P>,
{
    for &(rtol, atol) in &cfg.ladder {
        let solver = solver_config(rtol, atol);
        let (result, per_call) = timed(cfg.min_time, || integrate_dp5(sys, x0, cfg.tspan, p, &solver, None));
        let error = match result {
            Ok(sol) => final_state_error(sol.final_state(), reference),
            Err(_) => f64::NAN,
        };
        rows.push(WpdRow {
            n_nodes: cfg.n_nodes,
            backend,
            rtol,
            atol,
            error,
            cpu_ms_per_node: per_call.as_secs_f64() * 1e3 / cfg.n_nodes as f64,
            rep,
            seed,
        });
    }
}

/// Runs every repetition and ladder point. Repetition `r` uses seed
/// `cfg.seed + r` for both the graph and the initial data. Failures of
/// individual ladder solves are recorded as NaN errors; a failing reference
/// solve aborts.
pub fn run_wpd(cfg: &BenchConfig) -> anyhow::Result<Vec<WpdRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for rep in 0..cfg.reps {
        let seed = cfg.seed.wrapping_add(rep as u64);
        let graph = graphs::watts_strogatz(cfg.n_nodes, cfg.degree, cfg.rewire, seed)?;
        let net = build_kuramoto(cfg.n_nodes, &graph, Variant::first_order(), InitData::Seeded(seed))?;
        let mut p = net.params(cfg.sigma);

        let reference = integrate_dp5(
            &net.nf,
            &net.x0,
            cfg.tspan,
            &mut p,
            &solver_config(REFERENCE_RTOL, REFERENCE_ATOL),
            None,
        )
        .map_err(|e| anyhow::anyhow!("reference solve failed (rep {rep}, seed {seed}): {e}"))?;
        let reference = reference.final_state().to_vec();

        for &backend in &cfg.backends {
            match backend {
                Backend::Assembled => ladder_rows(&net.nf, &mut p, &net.x0, &reference, cfg, backend, rep, seed, &mut rows),
                Backend::Incidence => {
                    let sys = IncidenceKuramoto::new(&graph, net.omega.clone(), cfg.sigma)?;
                    ladder_rows(&sys, &mut (), &net.x0, &reference, cfg, backend, rep, seed, &mut rows)
                }
            }
        }
    }
    Ok(rows)
}

pub fn write_csv<W: Write>(rows: &[WpdRow], out: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.n_nodes.to_string(),
            r.backend.to_string(),
            format!("{:e}", r.rtol),
            format!("{:e}", r.atol),
            format!("{:e}", r.error),
            format!("{:e}", r.cpu_ms_per_node),
            r.rep.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub n_nodes: usize,
    pub backend: Backend,
    pub rtol: f64,
    pub atol: f64,
    pub median_error: f64,
    pub median_cpu_ms_per_node: f64,
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Medians over repetitions per (size, backend, tolerance).
pub fn summarize(rows: &[WpdRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(usize, Backend, f64, f64)> = Vec::new();
    for r in rows {
        let k = (r.n_nodes, r.backend, r.rtol, r.atol);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(n_nodes, backend, rtol, atol)| {
            let group = rows
                .iter()
                .filter(|r| r.n_nodes == n_nodes && r.backend == backend && r.rtol == rtol && r.atol == atol);
            let mut errors: Vec<f64> = group.clone().map(|r| r.error).collect();
            let mut cpu: Vec<f64> = group.map(|r| r.cpu_ms_per_node).collect();
            SummaryRow {
                n_nodes,
                backend,
                rtol,
                atol,
                median_error: median(&mut errors),
                median_cpu_ms_per_node: median(&mut cpu),
            }
        })
        .collect()
}

pub fn print_summary<W: Write>(summary: &[SummaryRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{:>7} {:>10} {:>9} {:>9} {:>12} {:>16}", "n_nodes", "backend", "rtol", "atol", "med_error", "med_cpu_ms/node")?;
    for s in summary {
        writeln!(
            out,
            "{:>7} {:>10} {:>9.1e} {:>9.1e} {:>12.3e} {:>16.4e}",
            s.n_nodes, s.backend, s.rtol, s.atol, s.median_error, s.median_cpu_ms_per_node
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_odd_even() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&mut []).is_nan());
    }

    #[test]
    fn ladder_must_decrease() {
        let cfg = BenchConfig {
            ladder: vec![(1e-6, 1e-6), (1e-3, 1e-3)],
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        assert!(BenchConfig::default().validate().is_ok());
    }

    #[test]
    fn csv_header_and_rows() {
        let row = WpdRow {
            n_nodes: 10,
            backend: Backend::Incidence,
            rtol: 1e-3,
            atol: 1e-4,
            error: f64::NAN,
            cpu_ms_per_node: 0.5,
            rep: 1,
            seed: 43,
        };
        let mut buf = Vec::new();
        write_csv(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("n_nodes,backend,rtol,atol,error,cpu_ms_per_node,rep,seed"));
        assert_eq!(lines.next(), Some("10,incidence,1e-3,1e-4,NaN,5e-1,1,43"));
    }

    #[test]
    fn small_run_is_deterministic() {
        let cfg = BenchConfig {
            ladder: vec![(1e-4, 1e-4), (1e-6, 1e-6)],
            reps: 2,
            min_time: Duration::ZERO,
            ..Default::default()
        };
        let a = run_wpd(&cfg).unwrap();
        let b = run_wpd(&cfg).unwrap();
        assert_eq!(a.len(), 2 * 2 * 2);
        let errs = |rows: &[WpdRow]| rows.iter().map(|r| r.error).collect::<Vec<_>>();
        assert_eq!(errs(&a), errs(&b));
        assert!(a.iter().all(|r| r.error.is_finite() && r.cpu_ms_per_node > 0.0));
    }
}
