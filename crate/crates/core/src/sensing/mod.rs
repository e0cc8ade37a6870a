//! Measurement operators: partial Fourier with a pseudo-radial mask, and dense
//! Gaussian matrices.

mod fft;
pub mod io;
mod mask;
mod operator;

pub use fft::Fft2;
pub use mask::{make_radial_mask, make_radial_mask_jittered, rasterize_line, RadialMask};
pub use operator::{GaussianMatrix, Measurement, PartialFourier, SensingOperator};
