use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::patch::GroupingConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Weight of the low-rank patch term.
    pub eta: f64,
    /// ADMM penalty.
    pub beta: f64,
    pub outer_iters: usize,
    pub inner_iters: usize,
    /// Requested CP rank per group; capped at `min(patch_m, patch_n)`.
    pub rank_ell: usize,
    /// ALS sweeps applied to the truncated decomposition of every group;
    /// 0 keeps the plain truncated decomposition.
    pub cp_refine_sweeps: usize,
    #[serde(flatten)]
    pub grouping: GroupingConfig,
    /// Noisy runs use `eta * (1 + sigma * noise_eta_scale)`.
    pub noise_eta_scale: f64,
    /// Stop the outer loop once `||x_new - x|| / ||x||` drops below this.
    pub early_exit_tol: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            eta: 0.05,
            beta: 0.01,
            outer_iters: 50,
            inner_iters: 2,
            rank_ell: 20,
            cp_refine_sweeps: 5,
            grouping: GroupingConfig::default(),
            noise_eta_scale: 0.1,
            early_exit_tol: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        if self.outer_iters == 0 || self.inner_iters == 0 {
            return bad("iteration counts must be at least 1".into());
        }
        if self.rank_ell == 0 {
            return bad("rank must be at least 1".into());
        }
        if !(self.noise_eta_scale >= 0.0) {
            return bad("noise_eta_scale must be non-negative".into());
        }
        self.grouping.validate()
    }

    /// Rank actually imposed: the requested rank capped by the number of
    /// eigenvectors Jenrich's algorithm can produce.
    pub fn effective_rank(&self) -> usize {
        self.rank_ell
            .min(self.grouping.patch_m)
            .min(self.grouping.patch_n)
    }

    /// Copy with `eta` raised for measurement noise of standard deviation `sigma`.
    pub fn for_noise_level(&self, sigma: f64) -> SolverConfig {
        SolverConfig {
            eta: self.eta * (1.0 + sigma.max(0.0) * self.noise_eta_scale),
            ..*self
        }
    }
}
