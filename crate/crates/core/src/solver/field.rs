use rayon::prelude::*;

use super::SolverConfig;
use crate::error::{Error, Result};
use crate::grid::Image;
use crate::patch::{aggregate, extract_patch_groups, form_tensor, PatchGroup};
use crate::tensor_cp::{
    decompose_with_retries, reconstruct_cp, refine_als, truncate_rank, Tensor3, DEFAULT_RETRIES,
};

/// Low-rank group tensors for one outer iteration, with their aggregation
/// precomputed.
#[derive(Debug, Clone)]
pub struct LowRankField {
    pub groups: Vec<PatchGroup>,
    pub lowrank_tensors: Vec<Tensor3>,
    /// `sum_p T_p^T L_p`.
    pub agg_numerator: Image,
    /// `sum_p T_p^T T_p`, the per-pixel patch coverage.
    pub counts: Image,
    /// Groups that fell back to `L_p = T_p` after failed decompositions.
    pub degenerate_count: usize,
    pub requested_rank: usize,
    pub effective_rank: usize,
}

/// Per-group seed: the run seed xor the group index.
pub fn group_seed(seed: u64, index: usize) -> u64 {
    seed ^ index as u64
}

/// Groups patches of `x`, decomposes each group tensor, keeps the leading
/// `rank` components, refines them and aggregates the result.
pub fn build_lowrank_field(x: &Image, cfg: &SolverConfig, seed: u64) -> Result<LowRankField> {
    cfg.validate()?;
    let groups = extract_patch_groups(x, &cfg.grouping)?;
    let rank = cfg.effective_rank();

    let outcomes: Vec<(Tensor3, bool)> = groups
        .par_iter()
        .enumerate()
        .map(|(p, g)| -> Result<(Tensor3, bool)> {
            let t = form_tensor(x, g)?;
            match decompose_with_retries(&t, group_seed(seed, p), DEFAULT_RETRIES) {
                Ok(f) => {
                    let kept = truncate_rank(&f, rank);
                    match refine_als(&t, &kept, rank, cfg.cp_refine_sweeps) {
                        Ok(fitted) => Ok((reconstruct_cp(&fitted, t.dims())?, false)),
                        Err(Error::DegenerateEigensystem(_)) => {
                            Ok((reconstruct_cp(&kept, t.dims())?, true))
                        }
                        Err(e) => Err(e),
                    }
                }
                Err(Error::ZeroTensor) => Ok((t, false)),
                Err(Error::DegenerateEigensystem(_)) => Ok((t, true)),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;

    let degenerate_count = outcomes.iter().filter(|(_, d)| *d).count();
    let lowrank_tensors: Vec<Tensor3> = outcomes.into_iter().map(|(t, _)| t).collect();
    let (agg_numerator, counts) = aggregate(&groups, &lowrank_tensors, x.dims())?;
    Ok(LowRankField {
        groups,
        lowrank_tensors,
        agg_numerator,
        counts,
        degenerate_count,
        requested_rank: cfg.rank_ell,
        effective_rank: rank,
    })
}

impl LowRankField {
    pub fn dims(&self) -> (usize, usize) {
        self.counts.dims()
    }

    /// `sum_p ||T_p x - L_p||_F^2`.
    pub fn residual(&self, x: &Image) -> Result<f64> {
        if x.dims() != self.dims() {
            return Err(Error::DimensionMismatch(format!(
                "field is {:?}, image is {:?}",
                self.dims(),
                x.dims()
            )));
        }
        self.groups
            .par_iter()
            .zip(&self.lowrank_tensors)
            .map(|(g, l)| Ok(form_tensor(x, g)?.distance(l).powi(2)))
            .collect::<Result<Vec<f64>>>()
            .map(|parts| parts.into_iter().sum())
    }

    /// Per-pixel average of the aggregated low-rank patches; pixels no patch
    /// covers keep their value from `fallback`.
    pub fn averaged(&self, fallback: &Image) -> Image {
        Image::from_fn(self.dims().0, self.dims().1, |r, c| {
            let n = self.counts[(r, c)];
            if n > 0.0 {
                self.agg_numerator[(r, c)] / n
            } else {
                fallback[(r, c)]
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patch::GroupingConfig;

    fn cfg(patch: usize, k: usize, rank: usize) -> SolverConfig {
        SolverConfig {
            rank_ell: rank,
            grouping: GroupingConfig {
                patch_m: patch,
                patch_n: patch,
                k,
                stride: 2,
                search_window: 0,
            },
            ..Default::default()
        }
    }

    #[test]
    fn constant_image_is_reproduced() {
        let x = Image::filled(12, 12, 42.0);
        let field = build_lowrank_field(&x, &cfg(4, 6, 1), 7).unwrap();
        assert_eq!(field.degenerate_count, 0);
        let avg = field.averaged(&x);
        for v in avg.as_slice() {
            assert!((v - 42.0).abs() < 1e-9);
        }
        assert!(field.residual(&x).unwrap() < 1e-15 * 42.0 * 42.0 * 144.0 * 100.0);
    }

    #[test]
    fn rank_is_capped_by_patch_size() {
        let x = Image::from_fn(10, 10, |r, c| (r * c) as f64);
        let field = build_lowrank_field(&x, &cfg(3, 4, 20), 1).unwrap();
        assert_eq!(field.requested_rank, 20);
        assert_eq!(field.effective_rank, 3);
    }

    #[test]
    fn zero_image_takes_the_zero_path() {
        let x = Image::zeros(8, 8);
        let field = build_lowrank_field(&x, &cfg(4, 3, 2), 1).unwrap();
        assert_eq!(field.degenerate_count, 0);
        assert!(field.agg_numerator.as_slice().iter().all(|&v| v == 0.0));
    }
}
