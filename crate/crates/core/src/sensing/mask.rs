//! Pseudo-radial sampling masks over the 2D DFT plane.
//!
//! Lines through the DC bin at angles `j * pi / L` are rasterised by stepping
//! one bin at a time along the dominant axis and rounding the other
//! coordinate. `L` grows until the kept fraction reaches the target.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct RadialMask {
    height: usize,
    width: usize,
    keep: Vec<bool>,
    csr_target: f64,
    lines: usize,
}

impl PartialEq for RadialMask {
    fn eq(&self, other: &Self) -> bool {
        self.height == other.height && self.width == other.width && self.keep == other.keep
    }
}

impl RadialMask {
    /// Mask from an explicit keep-grid, e.g. one read from disk.
    pub fn from_keep(height: usize, width: usize, keep: Vec<bool>) -> Result<Self> {
        if height == 0 || width == 0 || keep.len() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "{} mask bins for a {height}x{width} grid",
                keep.len()
            )));
        }
        let mut mask = RadialMask {
            height,
            width,
            keep,
            csr_target: 0.0,
            lines: 0,
        };
        mask.csr_target = mask.csr_actual();
        Ok(mask)
    }

    pub fn full(height: usize, width: usize) -> Self {
        RadialMask {
            height,
            width,
            keep: vec![true; height * width],
            csr_target: 1.0,
            lines: 0,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn keep(&self) -> &[bool] {
        &self.keep
    }

    pub fn is_kept(&self, u: usize, v: usize) -> bool {
        self.keep[u * self.width + v]
    }

    pub fn kept_count(&self) -> usize {
        self.keep.iter().filter(|&&k| k).count()
    }

    pub fn csr_target(&self) -> f64 {
        self.csr_target
    }

    pub fn csr_actual(&self) -> f64 {
        self.kept_count() as f64 / (self.height * self.width) as f64
    }

    /// Number of radial lines used; 0 when the mask was not built from lines.
    pub fn lines(&self) -> usize {
        self.lines
    }

    /// Flat row-major indices of the kept bins.
    pub fn kept_indices(&self) -> Vec<usize> {
        self.keep
            .iter()
            .enumerate()
            .filter_map(|(i, &k)| k.then_some(i))
            .collect()
    }

    pub fn is_conjugate_symmetric(&self) -> bool {
        let (h, w) = (self.height, self.width);
        (0..h).all(|u| {
            (0..w).all(|v| !self.is_kept(u, v) || self.is_kept((h - u) % h, (w - v) % w))
        })
    }
}

/// Bins hit by the line through DC at angle `theta`, as wrapped `(u, v)`
/// indices. The line covers both directions from DC.
pub fn rasterize_line(height: usize, width: usize, theta: f64) -> Vec<(usize, usize)> {
    let (sin, cos) = theta.sin_cos();
    let (h, w) = (height as i64, width as i64);
    let wrap = |x: i64, n: i64| x.rem_euclid(n) as usize;
    let mut out = Vec::new();
    if cos.abs() >= sin.abs() {
        let slope = sin / cos;
        for t in -(w / 2)..=(w / 2) {
            let dy = (t as f64 * slope).round() as i64;
            if dy.abs() <= h / 2 {
                out.push((wrap(dy, h), wrap(t, w)));
            }
        }
    } else {
        let slope = cos / sin;
        for t in -(h / 2)..=(h / 2) {
            let dx = (t as f64 * slope).round() as i64;
            if dx.abs() <= w / 2 {
                out.push((wrap(t, h), wrap(dx, w)));
            }
        }
    }
    out
}

fn lines_mask(height: usize, width: usize, lines: usize, jitter: f64, seed: u64) -> Vec<bool> {
    let mut keep = vec![false; height * width];
    keep[0] = true;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for j in 0..lines {
        let offset = if jitter > 0.0 {
            jitter * (rng.gen::<f64>() - 0.5)
        } else {
            0.0
        };
        let theta = (j as f64 + offset) * std::f64::consts::PI / lines as f64;
        for (u, v) in rasterize_line(height, width, theta) {
            keep[u * width + v] = true;
        }
    }
    // conjugate symmetry: (u, v) -> (-u mod H, -v mod W)
    for u in 0..height {
        for v in 0..width {
            if keep[u * width + v] {
                keep[((height - u) % height) * width + (width - v) % width] = true;
            }
        }
    }
    keep
}

/// Equiangular pseudo-radial mask with at least `csr` of the bins kept.
pub fn make_radial_mask(dims: (usize, usize), csr: f64, lines_seed: u64) -> Result<RadialMask> {
    make_radial_mask_jittered(dims, csr, lines_seed, 0.0)
}

/// As [`make_radial_mask`], with each angle perturbed by up to
/// `jitter / 2` of the angular spacing, drawn from `lines_seed`.
pub fn make_radial_mask_jittered(
    dims: (usize, usize),
    csr: f64,
    lines_seed: u64,
    jitter: f64,
) -> Result<RadialMask> {
    if !(csr > 0.0 && csr <= 1.0) {
        return Err(Error::InvalidRatio(csr));
    }
    let (height, width) = dims;
    if height == 0 || width == 0 {
        return Err(Error::DimensionMismatch("mask dims must be positive".into()));
    }
    if csr >= 1.0 {
        return Ok(RadialMask::full(height, width));
    }
    let total = (height * width) as f64;
    let max_lines = 8 * height.max(width);
    for lines in 1..=max_lines {
        let keep = lines_mask(height, width, lines, jitter, lines_seed);
        let kept = keep.iter().filter(|&&k| k).count();
        if kept as f64 / total >= csr {
            return Ok(RadialMask {
                height,
                width,
                keep,
                csr_target: csr,
                lines,
            });
        }
    }
    let mut full = RadialMask::full(height, width);
    full.csr_target = csr;
    Ok(full)
}
