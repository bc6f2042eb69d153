//! Exact and approximate closest-pair search.
//!
//! * [`refscan`]: Euclidean closest pair and fixed-radius neighbours with
//!   reference-point pruning.
//! * [`lightbulb`]: bucketing on random column samples for the most
//!   correlated pair of symbol strings.
//! * [`hamming_pairs`]: closest and farthest Hamming pairs via one-hot
//!   encoding.
//! * [`twolocus`]: two-locus association scan between two subject groups.
//! * [`runner`] and [`report`]: configured runs, sweeps and their JSON/CSV
//!   reports.

pub mod datagen;
pub mod error;
pub mod hamming_pairs;
pub mod io;
pub mod lightbulb;
pub mod matrix;
pub mod metrics;
pub mod refscan;
pub mod report;
pub mod rng;
pub mod runner;
pub mod twolocus;

pub use error::{Error, Result};
