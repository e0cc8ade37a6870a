//! Overlapping patch groups: block matching, tensor gather and scatter.
//!
//! `form_tensor` is the operator that stacks a group's patches into an
//! `m x n x k` tensor; `aggregate` applies its adjoint, adding every slice back
//! at its source coordinates and counting how many patches cover each pixel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Image;
use crate::tensor_cp::Tensor3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GroupingConfig {
    pub patch_m: usize,
    pub patch_n: usize,
    /// Patches per group, the reference included.
    pub k: usize,
    /// Step between reference patches.
    pub stride: usize,
    /// Half-width of the search window around the reference; 0 searches the
    /// whole image.
    pub search_window: usize,
}

impl Default for GroupingConfig {
    fn default() -> Self {
        GroupingConfig {
            patch_m: 4,
            patch_n: 4,
            k: 50,
            stride: 2,
            search_window: 20,
        }
    }
}

impl GroupingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patch_m < 2 || self.patch_n < 2 {
            return Err(Error::InvalidConfig(format!(
                "patch size must be at least 2x2, got {}x{}",
                self.patch_m, self.patch_n
            )));
        }
        if self.k < 2 {
            return Err(Error::InvalidConfig(format!(
                "group size must be at least 2, got {}",
                self.k
            )));
        }
        if self.stride == 0 {
            return Err(Error::InvalidConfig("stride must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchGroup {
    /// Top-left corner of the reference patch.
    pub reference: (usize, usize),
    /// Top-left corners ordered by distance to the reference;
    /// `members[0] == reference`.
    pub members: Vec<(usize, usize)>,
    pub patch_dims: (usize, usize),
}

/// Reference positions along one axis: `0, stride, 2*stride, ...`, with the
/// last one clamped to `extent - patch` so the border is covered.
pub fn reference_positions(extent: usize, patch: usize, stride: usize) -> Vec<usize> {
    let last = extent - patch;
    let mut out: Vec<usize> = (0..=last).step_by(stride).collect();
    if *out.last().expect("extent >= patch") != last {
        out.push(last);
    }
    out
}

fn ensure_fits(img: &Image, m: usize, n: usize) -> Result<()> {
    if img.height() < m || img.width() < n {
        return Err(Error::ImageTooSmall {
            height: img.height(),
            width: img.width(),
            min_height: m,
            min_width: n,
        });
    }
    Ok(())
}

fn patch_distance(img: &Image, a: (usize, usize), b: (usize, usize), m: usize, n: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..m {
        let ra = &img.row(a.0 + i)[a.1..a.1 + n];
        let rb = &img.row(b.0 + i)[b.1..b.1 + n];
        for (x, y) in ra.iter().zip(rb) {
            let d = x - y;
            acc += d * d;
        }
    }
    acc
}

/// Block matching: for every reference patch, the reference followed by the
/// `k - 1` closest other patches in its search window (squared Euclidean
/// distance, ties broken by row-major position).
pub fn extract_patch_groups(img: &Image, cfg: &GroupingConfig) -> Result<Vec<PatchGroup>> {
    cfg.validate()?;
    let (m, n) = (cfg.patch_m, cfg.patch_n);
    ensure_fits(img, m, n)?;
    let (max_r, max_c) = (img.height() - m, img.width() - n);

    let rows = reference_positions(img.height(), m, cfg.stride);
    let cols = reference_positions(img.width(), n, cfg.stride);
    let refs: Vec<(usize, usize)> = rows
        .iter()
        .flat_map(|&r| cols.iter().map(move |&c| (r, c)))
        .collect();

    refs.par_iter()
        .map(|&reference| {
            let (r_lo, r_hi, c_lo, c_hi) = if cfg.search_window == 0 {
                (0, max_r, 0, max_c)
            } else {
                let w = cfg.search_window;
                (
                    reference.0.saturating_sub(w),
                    (reference.0 + w).min(max_r),
                    reference.1.saturating_sub(w),
                    (reference.1 + w).min(max_c),
                )
            };
            let available = (r_hi - r_lo + 1) * (c_hi - c_lo + 1);
            if available < cfg.k {
                return Err(Error::InvalidConfig(format!(
                    "group size {} exceeds the {available} candidate patches around {:?}",
                    cfg.k, reference
                )));
            }
            let mut scored: Vec<(f64, usize, (usize, usize))> = Vec::with_capacity(available - 1);
            let mut order = 0;
            for r in r_lo..=r_hi {
                for c in c_lo..=c_hi {
                    if (r, c) != reference {
                        scored.push((patch_distance(img, reference, (r, c), m, n), order, (r, c)));
                    }
                    order += 1;
                }
            }
            let cmp = |x: &(f64, usize, (usize, usize)), y: &(f64, usize, (usize, usize))| {
                x.0.total_cmp(&y.0).then(x.1.cmp(&y.1))
            };
            let need = cfg.k - 1;
            if need < scored.len() {
                scored.select_nth_unstable_by(need, cmp);
                scored.truncate(need);
            }
            scored.sort_unstable_by(cmp);

            let mut members = Vec::with_capacity(cfg.k);
            members.push(reference);
            members.extend(scored.into_iter().map(|(_, _, pos)| pos));
            Ok(PatchGroup {
                reference,
                members,
                patch_dims: (m, n),
            })
        })
        .collect()
}

/// Stacks the group's patches: slice `s` is the block at `members[s]`.
pub fn form_tensor(img: &Image, g: &PatchGroup) -> Result<Tensor3> {
    let (m, n) = g.patch_dims;
    check_members(g, img.height(), img.width())?;
    let mut t = Tensor3::zeros(m, n, g.members.len());
    for (s, &(r0, c0)) in g.members.iter().enumerate() {
        let slice = t.slice_mut(s);
        for i in 0..m {
            slice[i * n..(i + 1) * n].copy_from_slice(&img.row(r0 + i)[c0..c0 + n]);
        }
    }
    Ok(t)
}

fn check_members(g: &PatchGroup, height: usize, width: usize) -> Result<()> {
    let (m, n) = g.patch_dims;
    if g.members.is_empty() {
        return Err(Error::InvalidConfig("patch group has no members".into()));
    }
    for &(r, c) in &g.members {
        if r + m > height || c + n > width {
            return Err(Error::OutOfBounds {
                row: r,
                col: c,
                height,
                width,
            });
        }
    }
    Ok(())
}

/// Adds every slice of `t` back at its group coordinates.
pub fn scatter_add(t: &Tensor3, g: &PatchGroup, numerator: &mut Image) -> Result<()> {
    let (m, n) = g.patch_dims;
    check_members(g, numerator.height(), numerator.width())?;
    if t.dims() != (m, n, g.members.len()) {
        return Err(Error::DimensionMismatch(format!(
            "tensor {:?} does not match group of {} {}x{} patches",
            t.dims(),
            g.members.len(),
            m,
            n
        )));
    }
    for (s, &(r0, c0)) in g.members.iter().enumerate() {
        let slice = t.slice(s);
        for i in 0..m {
            for j in 0..n {
                numerator[(r0 + i, c0 + j)] += slice[i * n + j];
            }
        }
    }
    Ok(())
}

/// Returns `(numerator, counts)`: the scatter of all tensors and the number of
/// patches covering each pixel. Accumulation runs in group order.
pub fn aggregate(
    groups: &[PatchGroup],
    tensors: &[Tensor3],
    dims: (usize, usize),
) -> Result<(Image, Image)> {
    if groups.len() != tensors.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} groups but {} tensors",
            groups.len(),
            tensors.len()
        )));
    }
    let mut numerator = Image::zeros(dims.0, dims.1);
    for (g, t) in groups.iter().zip(tensors) {
        scatter_add(t, g, &mut numerator)?;
    }
    Ok((numerator, overlap_counts(groups, dims)?))
}

/// Per-pixel number of group patches covering it.
pub fn overlap_counts(groups: &[PatchGroup], dims: (usize, usize)) -> Result<Image> {
    let mut counts = Image::zeros(dims.0, dims.1);
    for g in groups {
        check_members(g, dims.0, dims.1)?;
        let (m, n) = g.patch_dims;
        for &(r0, c0) in &g.members {
            for i in 0..m {
                for j in 0..n {
                    counts[(r0 + i, c0 + j)] += 1.0;
                }
            }
        }
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(m: usize, k: usize, stride: usize, window: usize) -> GroupingConfig {
        GroupingConfig {
            patch_m: m,
            patch_n: m,
            k,
            stride,
            search_window: window,
        }
    }

    #[test]
    fn reference_positions_clamp_last() {
        assert_eq!(reference_positions(8, 4, 4), vec![0, 4]);
        assert_eq!(reference_positions(9, 4, 4), vec![0, 4, 5]);
        assert_eq!(reference_positions(4, 4, 2), vec![0]);
    }

    #[test]
    fn constant_image_uses_row_major_ties() {
        let img = Image::filled(8, 8, 3.0);
        let groups = extract_patch_groups(&img, &cfg(4, 4, 4, 0)).unwrap();
        assert_eq!(groups.len(), 4);
        assert_eq!(groups[0].members, vec![(0, 0), (0, 1), (0, 2), (0, 3)]);
        assert_eq!(groups[1].members, vec![(0, 4), (0, 0), (0, 1), (0, 2)]);
    }

    #[test]
    fn duplicate_patch_is_first_neighbour() {
        let mut img = Image::from_fn(12, 12, |r, c| ((r * r * 7 + c * c * 13 + r * c * 5) % 101) as f64);
        for i in 0..4 {
            for j in 0..4 {
                img[(7 + i, 6 + j)] = img[(i, j)];
            }
        }
        let groups = extract_patch_groups(&img, &cfg(4, 3, 4, 0)).unwrap();
        assert_eq!(groups[0].reference, (0, 0));
        assert_eq!(groups[0].members[1], (7, 6));
    }

    #[test]
    fn too_small_image() {
        let img = Image::zeros(3, 8);
        assert!(matches!(
            extract_patch_groups(&img, &cfg(4, 2, 1, 0)),
            Err(Error::ImageTooSmall { .. })
        ));
    }

    #[test]
    fn group_larger_than_window_is_rejected() {
        let img = Image::zeros(8, 8);
        assert!(extract_patch_groups(&img, &cfg(4, 26, 1, 0)).is_err());
    }

    #[test]
    fn single_slice_group_round_trip() {
        let img = Image::from_fn(6, 6, |r, c| (r * 6 + c) as f64);
        let g = PatchGroup {
            reference: (1, 2),
            members: vec![(1, 2)],
            patch_dims: (3, 2),
        };
        let t = form_tensor(&img, &g).unwrap();
        assert_eq!(t.dims(), (3, 2, 1));
        assert_eq!(t.slice(0), &[8.0, 9.0, 14.0, 15.0, 20.0, 21.0]);
        let (num, counts) = aggregate(std::slice::from_ref(&g), &[t], (6, 6)).unwrap();
        for r in 0..6 {
            for c in 0..6 {
                let inside = (1..4).contains(&r) && (2..4).contains(&c);
                assert_eq!(counts[(r, c)], if inside { 1.0 } else { 0.0 });
                assert_eq!(num[(r, c)], if inside { img[(r, c)] } else { 0.0 });
            }
        }
    }

    #[test]
    fn constant_tensor_value() {
        let img = Image::filled(10, 10, 7.0);
        let groups = extract_patch_groups(&img, &cfg(4, 5, 3, 0)).unwrap();
        let t = form_tensor(&img, &groups[2]).unwrap();
        assert!(t.as_slice().iter().all(|&v| v == 7.0));
    }

    #[test]
    fn out_of_bounds_member() {
        let img = Image::zeros(6, 6);
        let g = PatchGroup {
            reference: (0, 0),
            members: vec![(0, 0), (4, 0)],
            patch_dims: (3, 3),
        };
        assert!(matches!(form_tensor(&img, &g), Err(Error::OutOfBounds { .. })));
    }

    #[test]
    fn overlapping_constant_tensors() {
        let g1 = PatchGroup {
            reference: (0, 0),
            members: vec![(0, 0)],
            patch_dims: (2, 2),
        };
        let g2 = PatchGroup {
            reference: (1, 1),
            members: vec![(1, 1)],
            patch_dims: (2, 2),
        };
        let t1 = Tensor3::from_fn(2, 2, 1, |_, _, _| 1.0);
        let t3 = Tensor3::from_fn(2, 2, 1, |_, _, _| 3.0);
        let (num, counts) = aggregate(&[g1, g2], &[t1, t3], (3, 3)).unwrap();
        assert_eq!(num[(1, 1)], 4.0);
        assert_eq!(counts[(1, 1)], 2.0);
        assert_eq!(num[(0, 0)], 1.0);
        assert_eq!(num[(2, 2)], 3.0);
        assert_eq!(counts[(0, 2)], 0.0);
    }

    #[test]
    fn aggregate_length_mismatch() {
        assert!(aggregate(&[], &[Tensor3::zeros(2, 2, 1)], (3, 3)).is_err());
    }
}
