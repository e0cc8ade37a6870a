//! C ABI for the `nlrtfa` reconstruction library.
//!
//! Objects are opaque handles created by `nlrtfa_*_new`/`load`/`measure`
//! calls and released with the matching `*_free`. Every fallible call returns
//! an [`NlrtfaStatus`]; on failure, [`nlrtfa_last_error`] describes the error
//! for the calling thread. Panics are caught at the boundary and reported as
//! [`NlrtfaStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use nlrtfa::imageio::{load_gray, save_gray};
use nlrtfa::metrics::{psnr, ssim};
use nlrtfa::patch::GroupingConfig;
use nlrtfa::sensing::{make_radial_mask, Measurement, SensingOperator};
use nlrtfa::solver::{reconstruct_with_reference, SolverConfig};
use nlrtfa::{Error, Image};

/// Status code returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NlrtfaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Numerical = 4,
    Io = 5,
    Format = 6,
    Panic = 7,
}

/// Grayscale image of `f64` pixels, row-major.
pub struct NlrtfaImage(Image);

/// Sensing operator: partial Fourier with a radial mask, or dense Gaussian.
pub struct NlrtfaOperator(SensingOperator);

/// Measurement vector produced by an operator.
pub struct NlrtfaMeasurement(Measurement);

/// Solver parameters. Obtain defaults with [`nlrtfa_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlrtfaConfig {
    pub eta: f64,
    pub beta: f64,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub rank: usize,
    pub refine_sweeps: usize,
    pub patch_rows: usize,
    pub patch_cols: usize,
    pub group_size: usize,
    pub stride: usize,
    /// 0 searches the whole image.
    pub search_window: usize,
    pub noise_eta_scale: f64,
}

/// Outcome of [`nlrtfa_reconstruct`]. PSNR fields are NaN without a reference.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlrtfaRunSummary {
    pub outer_iters_run: usize,
    pub initial_psnr: f64,
    pub final_psnr: f64,
    pub degenerate_groups: usize,
    pub seconds: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(NlrtfaStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::DimensionMismatch(_) | Error::ImageTooSmall { .. } | Error::OutOfBounds { .. } => {
                NlrtfaStatus::DimensionMismatch
            }
            Error::Io { .. } => NlrtfaStatus::Io,
            Error::Format { .. } | Error::Image { .. } => NlrtfaStatus::Format,
            _ if e.is_numerical() => NlrtfaStatus::Numerical,
            _ => NlrtfaStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(NlrtfaStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(NlrtfaStatus::InvalidArgument, msg.into())
}

/// Runs `f`, recording any error or panic for [`nlrtfa_last_error`].
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> NlrtfaStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NlrtfaStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            NlrtfaStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid("path is not valid UTF-8"))?;
    Ok(PathBuf::from(s))
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Message of the last failed call on this thread, or NULL after a success.
/// The pointer stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn nlrtfa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nlrtfa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a `height` x `width` image from `height * width` row-major values.
/// `data` may be NULL for an all-zero image.
///
/// # Safety
/// `data`, when non-NULL, must point to `height * width` readable doubles;
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nlrtfa_image_new(
    height: usize,
    width: usize,
    data: *const f64,
    out: *mut *mut NlrtfaImage,
) -> NlrtfaStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if height == 0 || width == 0 {
            return Err(invalid("image dims must be positive"));
        }
        let len = height
            .checked_mul(width)
            .ok_or_else(|| invalid("image dims overflow"))?;
        let img = if data.is_null() {
            Image::zeros(height, width)
        } else {
            Image::from_vec(height, width, std::slice::from_raw_parts(data, len).to_vec())?
        };
        *out = boxed(NlrtfaImage(img));
        Ok(())
    })
}

/// Loads an 8-bit grayscale (or colour, converted to luma) image file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nlrtfa_image_load(
    path: *const c_char,
    out: *mut *mut NlrtfaImage,
) -> NlrtfaStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let img = load_gray(&path_arg(path)?)?;
        *out = boxed(NlrtfaImage(img));
        Ok(())
    })
}

/// Writes `image`, clamped to [0, 255] and rounded, as an 8-bit PNG.
///
/// # Safety
/// `image` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn nlrtfa_image_save(
    image: *const NlrtfaImage,
    path: *const c_char,
) -> NlrtfaStatus {
    guard(|| {
        let img = deref(image, "image")?;
        save_gray(&path_arg(path)?, &img.0)?;
        Ok(())
    })
}

/// Releases an image. NULL is ignored.
///
/// # Safety
/// `image` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nlrtfa_image_free(image: *mut NlrtfaImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

/// # Safety
/// `image` must come from this library; `height` and `width` must be valid.
#[no_mangle]
pub unsafe extern "C" fn nlrtfa_image_dims(
    image: *const NlrtfaImage,
    height: *mut usize,
    width: *mut usize,
) -> NlrtfaStatus {
    guard(|| {
        let img = deref(image, "image")?;
        let (h, w) = img.0.dims();
        *out_ptr(height, "height")? = h;
        *out_ptr(width, "width")? = w;
        Ok(())
    })
}

/// Copies the pixels row-major into `out`, which holds `len` doubles.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn nlrtfa_image_copy_data(
    image: *const NlrtfaImage,
    out: *mut f64,
    len: usize,
) -> NlrtfaStatus {
    guard(|| {
        let img = deref(image, "image")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let data = img.0.as_slice();
        if len != data.len() {
            return Err(Failure(
                NlrtfaStatus::DimensionMismatch,
                format!("buffer holds {len} values, image has {}", data.len()),
            ));
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(data);
        Ok(())
    })
}

/// Partial Fourier operator with a pseudo-radial mask of sampling ratio `csr`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nlrtfa_operator_radial(
    height: usize,
    width: usize,
    csr: f64,
    out: *mut *mut NlrtfaOperator,
) -> NlrtfaStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let mask = make_radial_mask((height, width), csr, 0)?;
        *out = boxed(NlrtfaOperator(SensingOperator::partial_fourier(mask)));
        Ok(())
    })
}

/// Dense Gaussian operator with `round(csr * height * width)` rows.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nlrtfa_operator_gaussian(
    height: usize,
    width: usize,
    csr: f64,
    seed: u64,
    out: *mut *mut NlrtfaOperator,
) -> NlrtfaStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let op = SensingOperator::gaussian_with_ratio((height, width), csr, seed)?;
        *out = boxed(NlrtfaOperator(op));
        Ok(())
    })
}

/// Releases an operator. NULL is ignored.
///
/// # Safety
/// `op` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nlrtfa_operator_free(op: *mut NlrtfaOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Number of measurements and the achieved sampling ratio.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nlrtfa_operator_info(
    op: *const NlrtfaOperator,
    measurements: *mut usize,
    csr: *mut f64,
) -> NlrtfaStatus {
    guard(|| {
        let op = deref(op, "op")?;
        *out_ptr(measurements, "measurements")? = op.0.output_dim();
        *out_ptr(csr, "csr")? = op.0.csr();
        Ok(())
    })
}

/// `y = Phi x + e` with Gaussian noise of standard deviation `sigma`.
///
/// # Safety
/// All pointers must be valid handles or out-pointers.
#[no_mangle]
pub unsafe extern "C" fn nlrtfa_measure(
    op: *const NlrtfaOperator,
    image: *const NlrtfaImage,
    sigma: f64,
    noise_seed: u64,
    out: *mut *mut NlrtfaMeasurement,
) -> NlrtfaStatus {
    guard(|| {
        let op = deref(op, "op")?;
        let img = deref(image, "image")?;
        let out = out_ptr(out, "out")?;
        let y = op.0.measure_noisy(&img.0, sigma, noise_seed)?;
        *out = boxed(NlrtfaMeasurement(y));
        Ok(())
    })
}

/// Releases a measurement. NULL is ignored.
///
/// # Safety
/// `y` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nlrtfa_measurement_free(y: *mut NlrtfaMeasurement) {
    if !y.is_null() {
        drop(Box::from_raw(y));
    }
}

/// Number of entries, and whether they are complex.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nlrtfa_measurement_info(
    y: *const NlrtfaMeasurement,
    len: *mut usize,
    is_complex: *mut bool,
) -> NlrtfaStatus {
    guard(|| {
        let y = deref(y, "measurement")?;
        *out_ptr(len, "len")? = y.0.len();
        *out_ptr(is_complex, "is_complex")? = y.0.is_complex();
        Ok(())
    })
}

fn to_config(c: &NlrtfaConfig) -> SolverConfig {
    SolverConfig {
        eta: c.eta,
        beta: c.beta,
        outer_iters: c.outer_iters,
        inner_iters: c.inner_iters,
        rank_ell: c.rank,
        cp_refine_sweeps: c.refine_sweeps,
        grouping: GroupingConfig {
            patch_m: c.patch_rows,
            patch_n: c.patch_cols,
            k: c.group_size,
            stride: c.stride,
            search_window: c.search_window,
        },
        noise_eta_scale: c.noise_eta_scale,
        early_exit_tol: None,
    }
}

fn from_config(s: &SolverConfig) -> NlrtfaConfig {
    NlrtfaConfig {
        eta: s.eta,
        beta: s.beta,
        outer_iters: s.outer_iters,
        inner_iters: s.inner_iters,
        rank: s.rank_ell,
        refine_sweeps: s.cp_refine_sweeps,
        patch_rows: s.grouping.patch_m,
        patch_cols: s.grouping.patch_n,
        group_size: s.grouping.k,
        stride: s.grouping.stride,
        search_window: s.grouping.search_window,
        noise_eta_scale: s.noise_eta_scale,
    }
}

/// Fills `out` with the default solver parameters.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nlrtfa_config_default(out: *mut NlrtfaConfig) -> NlrtfaStatus {
    guard(|| {
        *out_ptr(out, "out")? = from_config(&SolverConfig::default());
        Ok(())
    })
}

/// Reconstructs an image from `y`. `config` NULL means defaults; `sigma` is the
/// measurement noise level used to scale `eta`. `reference` and `summary` may
/// be NULL. The result is clamped to [0, 255].
///
/// # Safety
/// Non-NULL pointers must be valid handles or out-pointers.
#[no_mangle]
pub unsafe extern "C" fn nlrtfa_reconstruct(
    op: *const NlrtfaOperator,
    y: *const NlrtfaMeasurement,
    config: *const NlrtfaConfig,
    sigma: f64,
    seed: u64,
    reference: *const NlrtfaImage,
    out: *mut *mut NlrtfaImage,
    summary: *mut NlrtfaRunSummary,
) -> NlrtfaStatus {
    guard(|| {
        let op = deref(op, "op")?;
        let y = deref(y, "measurement")?;
        let out = out_ptr(out, "out")?;
        let cfg = match config.as_ref() {
            Some(c) => to_config(c),
            None => SolverConfig::default(),
        }
        .for_noise_level(sigma);
        let reference = reference.as_ref().map(|r| &r.0);
        let (x, report) = reconstruct_with_reference(&op.0, &y.0, &cfg, seed, reference)?;
        if let Some(s) = summary.as_mut() {
            let last = report.rows.last();
            *s = NlrtfaRunSummary {
                outer_iters_run: last.map_or(0, |r| r.outer_iter),
                initial_psnr: report.initial_psnr().unwrap_or(f64::NAN),
                final_psnr: report.final_psnr().unwrap_or(f64::NAN),
                degenerate_groups: report.rows.iter().map(|r| r.degenerate_count).sum(),
                seconds: last.map_or(0.0, |r| r.seconds),
            };
        }
        *out = boxed(NlrtfaImage(x));
        Ok(())
    })
}

/// PSNR in dB with peak 255; identical images give +infinity.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nlrtfa_psnr(
    a: *const NlrtfaImage,
    b: *const NlrtfaImage,
    out: *mut f64,
) -> NlrtfaStatus {
    guard(|| {
        let (a, b) = (deref(a, "a")?, deref(b, "b")?);
        *out_ptr(out, "out")? = psnr(&a.0, &b.0)?;
        Ok(())
    })
}

/// Mean SSIM over 11x11 Gaussian windows.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nlrtfa_ssim(
    a: *const NlrtfaImage,
    b: *const NlrtfaImage,
    out: *mut f64,
) -> NlrtfaStatus {
    guard(|| {
        let (a, b) = (deref(a, "a")?, deref(b, "b")?);
        *out_ptr(out, "out")? = ssim(&a.0, &b.0)?;
        Ok(())
    })
}
