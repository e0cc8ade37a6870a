//! Outer low-rank loop and inner ADMM iterations.

mod config;
mod field;
mod init;
mod run;
mod updates;

pub use config::SolverConfig;
pub use field::{build_lowrank_field, group_seed, LowRankField};
pub use init::{init_estimate, ista_dct, spectral_norm_sq, Dct2};
pub use run::{
    outer_seed, reconstruct, reconstruct_with_reference, ReportRow, RunReport, REPORT_HEADER,
};
pub use updates::{
    augmented_objective, mu_update, mu_update_with, run_inner, x_update_dense,
    x_update_dense_with, x_update_fourier, x_update_fourier_with, z_update, z_update_with,
    AdmmState, WoodburyCache, XUpdater, EXACT_WOODBURY,
};
