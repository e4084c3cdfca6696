//! Exact finite-n quantities for the Bolthausen–Sznitman block counting
//! process and fixation line, plus Monte Carlo checks of their large-n
//! limits (Mittag–Leffler process and Neveu's branching process).
//!
//! Matrix and state indices are 1-based throughout, so `(i, j)` in code is
//! the `(i, j)` entry of the corresponding formula.

pub mod analytics;
pub mod cli;
pub mod combinatorics;
pub mod error;
pub mod limits;
pub mod rng;
pub mod simulate;
pub mod spectral;

pub use error::{CoalabError, Result};
