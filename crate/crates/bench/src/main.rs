use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Parser, ValueEnum};
use netdyn::graphs;
use netdyn_bench::wpd::print_summary;
use netdyn_bench::{run_wpd, summarize, write_csv, Backend, BenchConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BackendArg {
    Assembled,
    Incidence,
    Both,
}

/// Work-precision benchmark: Kuramoto oscillators on Watts–Strogatz graphs,
/// integrated on t in [0, 10] with adaptive Dormand–Prince.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// Network sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
    nodes: Vec<usize>,
    /// Mean degree (even).
    #[arg(long, default_value_t = 4)]
    degree: usize,
    /// Rewiring probability.
    #[arg(long, default_value_t = 0.2)]
    rewire: f64,
    /// Tolerance ladder as rtol:atol pairs, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_tol)]
    tols: Vec<(f64, f64)>,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_enum, default_value = "both")]
    backend: BackendArg,
    /// Coupling strength.
    #[arg(long, default_value_t = 5.0)]
    sigma: f64,
    /// Minimum CPU time per timed measurement, in milliseconds.
    #[arg(long, default_value_t = 10)]
    min_time_ms: u64,
    /// CSV output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Writes the first repetition's graph for each size as an edge list;
    /// `{n}` in the path is replaced by the size.
    #[arg(long)]
    graph_out: Option<PathBuf>,
}

fn parse_tol(s: &str) -> Result<(f64, f64), String> {
    let (r, a) = s.split_once(':').ok_or_else(|| format!("expected rtol:atol, got `{s}`"))?;
    let r: f64 = r.trim().parse().map_err(|e| format!("rtol `{r}`: {e}"))?;
    let a: f64 = a.trim().parse().map_err(|e| format!("atol `{a}`: {e}"))?;
    Ok((r, a))
}

fn main() -> anyhow::Result<()> {
    let args = Args::parse();
    if args.nodes.is_empty() {
        bail!("--nodes needs at least one size");
    }
    let backends = match args.backend {
        BackendArg::Assembled => vec![Backend::Assembled],
        BackendArg::Incidence => vec![Backend::Incidence],
        BackendArg::Both => vec![Backend::Assembled, Backend::Incidence],
    };

    let mut rows = Vec::new();
    for &n in &args.nodes {
        let mut cfg = BenchConfig {
            n_nodes: n,
            degree: args.degree,
            rewire: args.rewire,
            sigma: args.sigma,
            reps: args.reps,
            seed: args.seed,
            backends: backends.clone(),
            min_time: Duration::from_millis(args.min_time_ms),
            ..Default::default()
        };
        if !args.tols.is_empty() {
            cfg.ladder = args.tols.clone();
        }
        if let Some(path) = &args.graph_out {
            let g = graphs::watts_strogatz(n, cfg.degree, cfg.rewire, cfg.seed)?;
            let path = PathBuf::from(path.to_string_lossy().replace("{n}", &n.to_string()));
            let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            g.write_edge_list(BufWriter::new(file))?;
        }
        eprintln!("running n = {n} ({} reps)", cfg.reps);
        rows.extend(run_wpd(&cfg)?);
    }

    match &args.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_csv(&rows, BufWriter::new(file))?;
        }
        None => write_csv(&rows, io::stdout().lock())?,
    }
    let summary = summarize(&rows);
    // the CSV owns stdout when no path is given
    if args.out.is_some() {
        print_summary(&summary, io::stdout().lock())?;
    } else {
        print_summary(&summary, io::stderr().lock())?;
    }
    Ok(())
}
