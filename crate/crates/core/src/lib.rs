//! Rumour percolation on the integer lattice.
//!
//! Engines for the basic and reactivated rumour processes, exact small-instance
//! oracles, renewal-based and Monte Carlo estimators, and the experiment
//! runner behind the `rumour` command line tool.

pub mod config;
pub mod engine;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod field;
pub mod keyed;
pub mod law;
pub mod oracles;
pub mod react;
pub mod renewal;
pub mod sites;
pub mod stats;

pub use error::{Error, Result};
pub use law::RadiusLaw;
