//! Fast initial estimates for the outer loop.

use std::sync::Arc;

use rustdct::{DctPlanner, TransformType2And3};

use crate::error::Result;
use crate::grid::Image;
use crate::sensing::{GaussianMatrix, Measurement, SensingOperator};

pub const ISTA_ITERS: usize = 40;
pub const ISTA_THRESHOLD_FRACTION: f64 = 0.1;
pub const ISTA_ANNEAL: f64 = 0.85;

/// Orthonormal 2D DCT-II and its inverse.
pub struct Dct2 {
    height: usize,
    width: usize,
    rows: Arc<dyn TransformType2And3<f64>>,
    cols: Arc<dyn TransformType2And3<f64>>,
}

impl Dct2 {
    pub fn new(height: usize, width: usize) -> Self {
        let mut planner = DctPlanner::new();
        Dct2 {
            height,
            width,
            rows: planner.plan_dct2(width),
            cols: planner.plan_dct2(height),
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.apply(x, true)
    }

    pub fn inverse(&self, x: &[f64]) -> Vec<f64> {
        self.apply(x, false)
    }

    fn apply(&self, x: &[f64], forward: bool) -> Vec<f64> {
        let (h, w) = (self.height, self.width);
        let mut out = x.to_vec();
        for row in out.chunks_exact_mut(w) {
            transform_1d(self.rows.as_ref(), row, forward);
        }
        let mut column = vec![0.0; h];
        for c in 0..w {
            for r in 0..h {
                column[r] = out[r * w + c];
            }
            transform_1d(self.cols.as_ref(), &mut column, forward);
            for r in 0..h {
                out[r * w + c] = column[r];
            }
        }
        out
    }
}

// rustdct computes the unnormalised DCT-II `sum x_n cos(...)` and DCT-III
// `x_0 / 2 + sum_{k>0} X_k cos(...)`; rescale both to the orthonormal pair.
fn transform_1d(plan: &dyn TransformType2And3<f64>, buf: &mut [f64], forward: bool) {
    let n = buf.len() as f64;
    let s0 = (1.0 / n).sqrt();
    let sk = (2.0 / n).sqrt();
    if forward {
        plan.process_dct2(buf);
        buf[0] *= s0;
        for v in &mut buf[1..] {
            *v *= sk;
        }
    } else {
        buf[0] *= 2.0 * s0;
        for v in &mut buf[1..] {
            *v *= sk;
        }
        plan.process_dct3(buf);
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Largest eigenvalue of `Phi^T Phi` by power iteration from a fixed start.
pub fn spectral_norm_sq(g: &GaussianMatrix, iters: usize) -> f64 {
    let n = g.cols();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut estimate = 0.0;
    for _ in 0..iters {
        let w = g.apply_transpose(&g.apply(&v));
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        estimate = norm;
        v = w.into_iter().map(|x| x / norm).collect();
    }
    estimate
}

/// Iterative soft thresholding in the DCT domain with a geometrically
/// annealed threshold, starting from zero.
pub fn ista_dct(g: &GaussianMatrix, y: &[f64]) -> Image {
    let (h, w) = g.input_dims();
    let dct = Dct2::new(h, w);
    // 5% headroom over the power-iteration estimate keeps the step stable.
    let lipschitz = spectral_norm_sq(g, 100) * 1.05;
    if lipschitz == 0.0 {
        return Image::zeros(h, w);
    }
    let step = 1.0 / lipschitz;

    let backprojected = g.apply_transpose(y);
    let mut threshold = ISTA_THRESHOLD_FRACTION
        * dct
            .forward(&backprojected)
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));

    let mut x = vec![0.0; h * w];
    for _ in 0..ISTA_ITERS {
        let residual: Vec<f64> = g.apply(&x).iter().zip(y).map(|(p, q)| q - p).collect();
        let grad = g.apply_transpose(&residual);
        let moved: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi + step * gi).collect();
        let coeffs: Vec<f64> = dct
            .forward(&moved)
            .into_iter()
            .map(|c| soft_threshold(c, step * threshold))
            .collect();
        x = dct.inverse(&coeffs);
        threshold *= ISTA_ANNEAL;
    }
    Image::from_fn(h, w, |r, c| x[r * w + c])
}

/// Initial estimate clamped to `[0, 255]`: the zero-filled adjoint for
/// Fourier sensing, DCT-domain soft thresholding for dense sensing.
pub fn init_estimate(op: &SensingOperator, y: &Measurement) -> Result<Image> {
    let raw = match (op, y) {
        (SensingOperator::DenseGaussian(g), Measurement::Real(values))
            if values.len() == g.rows() =>
        {
            ista_dct(g, values)
        }
        _ => op.adjoint(y)?,
    };
    Ok(raw.clamped(0.0, 255.0))
}
