//! Binary interchange formats for masks, measurements and Gaussian operators.
//!
//! All integers and floats are little-endian.
//!
//! | file        | layout                                                              |
//! |-------------|---------------------------------------------------------------------|
//! | mask        | `NLRTFA-MSK1`, H: u32, W: u32, row-major bits (MSB first, zero pad) |
//! | measurement | `NLRTFA-MEA1`, flags: u8 (0 real, 1 complex), M: u64, f64 values    |
//! | operator    | `NLRTFA-PHI1`, M: u64, N: u64, seed: u64, row-major f64 entries     |
//!
//! Complex measurements interleave real and imaginary parts.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use super::{GaussianMatrix, Measurement, RadialMask};
use crate::error::{Error, Result};

pub const MASK_MAGIC: &[u8; 11] = b"NLRTFA-MSK1";
pub const MEASUREMENT_MAGIC: &[u8; 11] = b"NLRTFA-MEA1";
pub const OPERATOR_MAGIC: &[u8; 11] = b"NLRTFA-PHI1";

const FLAG_REAL: u8 = 0;
const FLAG_COMPLEX: u8 = 1;

struct Reader<'a> {
    kind: &'static str,
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(kind: &'static str, buf: &'a [u8], magic: &[u8; 11]) -> Result<Self> {
        let mut r = Reader { kind, buf, pos: 0 };
        if r.take(magic.len())? != magic {
            return Err(r.error("bad magic"));
        }
        Ok(r)
    }

    fn error(&self, reason: impl Into<String>) -> Error {
        Error::Format {
            kind: self.kind,
            reason: reason.into(),
        }
    }

    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| self.error(format!("truncated at byte {}", self.pos)))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn count(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| self.error(format!("count {v} does not fit in memory")))
    }

    fn f64s(&mut self, count: usize) -> Result<Vec<f64>> {
        let bytes = count
            .checked_mul(8)
            .ok_or_else(|| self.error("payload size overflows"))?;
        Ok(self
            .take(bytes)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    fn finish(self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(self.error(format!(
                "{} trailing bytes",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

pub fn encode_mask(mask: &RadialMask) -> Vec<u8> {
    let (h, w) = mask.dims();
    let mut out = Vec::with_capacity(19 + (h * w).div_ceil(8));
    out.extend_from_slice(MASK_MAGIC);
    out.extend_from_slice(&(h as u32).to_le_bytes());
    out.extend_from_slice(&(w as u32).to_le_bytes());
    for chunk in mask.keep().chunks(8) {
        let mut byte = 0u8;
        for (bit, &k) in chunk.iter().enumerate() {
            if k {
                byte |= 0x80 >> bit;
            }
        }
        out.push(byte);
    }
    out
}

pub fn decode_mask(bytes: &[u8]) -> Result<RadialMask> {
    let mut r = Reader::new("mask", bytes, MASK_MAGIC)?;
    let h = r.u32()? as usize;
    let w = r.u32()? as usize;
    let total = h
        .checked_mul(w)
        .ok_or_else(|| r.error("mask dims overflow"))?;
    let packed = r.take(total.div_ceil(8))?;
    r.finish()?;
    let keep = (0..total)
        .map(|i| packed[i / 8] & (0x80 >> (i % 8)) != 0)
        .collect();
    RadialMask::from_keep(h, w, keep)
}

pub fn encode_measurement(y: &Measurement) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MEASUREMENT_MAGIC);
    match y {
        Measurement::Real(values) => {
            out.push(FLAG_REAL);
            out.extend_from_slice(&(values.len() as u64).to_le_bytes());
            for v in values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Measurement::Complex(values) => {
            out.push(FLAG_COMPLEX);
            out.extend_from_slice(&(values.len() as u64).to_le_bytes());
            for v in values {
                out.extend_from_slice(&v.re.to_le_bytes());
                out.extend_from_slice(&v.im.to_le_bytes());
            }
        }
    }
    out
}

pub fn decode_measurement(bytes: &[u8]) -> Result<Measurement> {
    let mut r = Reader::new("measurement", bytes, MEASUREMENT_MAGIC)?;
    let flags = r.u8()?;
    let m = r.count()?;
    let y = match flags {
        FLAG_REAL => Measurement::Real(r.f64s(m)?),
        FLAG_COMPLEX => {
            let raw = r.f64s(m.checked_mul(2).ok_or_else(|| r.error("M overflows"))?)?;
            Measurement::Complex(
                raw.chunks_exact(2)
                    .map(|p| Complex64::new(p[0], p[1]))
                    .collect(),
            )
        }
        other => return Err(r.error(format!("unknown flags byte {other}"))),
    };
    r.finish()?;
    Ok(y)
}

pub fn encode_gaussian(g: &GaussianMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(35 + 8 * g.data().len());
    out.extend_from_slice(OPERATOR_MAGIC);
    out.extend_from_slice(&(g.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(g.cols() as u64).to_le_bytes());
    out.extend_from_slice(&g.seed().to_le_bytes());
    for v in g.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decodes a Gaussian operator. The file stores only `N`; `input_dims`
/// gives the image shape, defaulting to square when `None`.
pub fn decode_gaussian(bytes: &[u8], input_dims: Option<(usize, usize)>) -> Result<GaussianMatrix> {
    let mut r = Reader::new("operator", bytes, OPERATOR_MAGIC)?;
    let m = r.count()?;
    let n = r.count()?;
    let seed = r.u64()?;
    let data = r.f64s(m.checked_mul(n).ok_or_else(|| r.error("M*N overflows"))?)?;
    r.finish()?;
    let dims = match input_dims {
        Some(d) if d.0 * d.1 == n => d,
        Some(d) => {
            return Err(Error::DimensionMismatch(format!(
                "operator has N = {n} columns, image is {}x{}",
                d.0, d.1
            )))
        }
        None => {
            let side = (n as f64).sqrt().round() as usize;
            if side * side != n {
                return Err(Error::DimensionMismatch(format!(
                    "N = {n} is not square; pass the image shape explicitly"
                )));
            }
            (side, side)
        }
    };
    GaussianMatrix::from_raw(m, dims, seed, data)
}

pub fn write_mask(path: &Path, mask: &RadialMask) -> Result<()> {
    write_file(path, &encode_mask(mask))
}

pub fn read_mask(path: &Path) -> Result<RadialMask> {
    decode_mask(&read_file(path)?)
}

pub fn write_measurement(path: &Path, y: &Measurement) -> Result<()> {
    write_file(path, &encode_measurement(y))
}

pub fn read_measurement(path: &Path) -> Result<Measurement> {
    decode_measurement(&read_file(path)?)
}

pub fn write_gaussian(path: &Path, g: &GaussianMatrix) -> Result<()> {
    write_file(path, &encode_gaussian(g))
}

pub fn read_gaussian(path: &Path, input_dims: Option<(usize, usize)>) -> Result<GaussianMatrix> {
    decode_gaussian(&read_file(path)?, input_dims)
}
