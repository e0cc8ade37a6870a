//! Compressive-sensing image reconstruction driven by nonlocal low-rank CP
//! tensor factors.
//!
//! Similar patches are grouped into `m x n x k` tensors, each tensor is
//! CP-decomposed with Jenrich's algorithm and truncated to its leading
//! components, and the aggregated low-rank image regularises an ADMM solve
//! against the measurements.

pub mod cli;
pub mod error;
pub mod grid;
pub mod imageio;
pub mod metrics;
pub mod patch;
pub mod sensing;
pub mod solver;
pub mod tensor_cp;

pub use error::{Error, Result};
pub use grid::Image;
