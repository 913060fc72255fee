//! Kuramoto benchmark models and the work-precision runner.
//!
//! Two right-hand sides of the same first-order Kuramoto network are compared:
//! the component-assembled [`netdyn::NetworkFunction`] and a hand-written
//! sparse incidence-matrix product ([`IncidenceKuramoto`]).

pub mod incidence;
pub mod kuramoto;
pub mod wpd;

pub use incidence::IncidenceKuramoto;
pub use kuramoto::{build_kuramoto, InitData, KuramotoNetwork, Variant};
pub use wpd::{run_wpd, summarize, write_csv, Backend, BenchConfig, WpdRow};
