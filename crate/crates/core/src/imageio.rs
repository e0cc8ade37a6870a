//! 8-bit grayscale PNG input and output.

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Image;

/// Loads any supported raster file as luma in `[0, 255]`. Colour inputs go
/// through the standard luma transform.
pub fn load_gray(path: &Path) -> Result<Image> {
    let img = image::open(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::Image {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    })?;
    let luma = img.to_luma8();
    let (w, h) = luma.dimensions();
    Image::from_vec(
        h as usize,
        w as usize,
        luma.into_raw().into_iter().map(f64::from).collect(),
    )
}

/// Loads and, when `size` is given, center-crops to `size x size`.
pub fn load_gray_cropped(path: &Path, size: Option<usize>) -> Result<Image> {
    let img = load_gray(path)?;
    match size {
        Some(s) if img.dims() != (s, s) => img.center_crop(s, s),
        _ => Ok(img),
    }
}

/// Rounds to the nearest integer in `[0, 255]` and writes an 8-bit PNG.
pub fn save_gray(path: &Path, img: &Image) -> Result<()> {
    let bytes: Vec<u8> = img
        .as_slice()
        .iter()
        .map(|v| v.round().clamp(0.0, 255.0) as u8)
        .collect();
    let buf = image::GrayImage::from_raw(img.width() as u32, img.height() as u32, bytes)
        .expect("buffer matches dims");
    buf.save(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}
