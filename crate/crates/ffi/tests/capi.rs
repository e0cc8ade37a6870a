use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use nlrtfa_ffi::*;

fn last_error() -> String {
    let p = nlrtfa_last_error();
    assert!(!p.is_null(), "expected an error message");
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn image(h: usize, w: usize, f: impl Fn(usize, usize) -> f64) -> *mut NlrtfaImage {
    let data: Vec<f64> = (0..h * w).map(|i| f(i / w, i % w)).collect();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { nlrtfa_image_new(h, w, data.as_ptr(), &mut out) }, NlrtfaStatus::Ok);
    out
}

fn smooth(r: usize, c: usize) -> f64 {
    128.0 + 60.0 * (r as f64 / 5.0).sin() * (c as f64 / 7.0).cos()
}

#[test]
fn image_round_trip() {
    let img = image(3, 4, |r, c| (r * 4 + c) as f64);
    let (mut h, mut w) = (0, 0);
    unsafe {
        assert_eq!(nlrtfa_image_dims(img, &mut h, &mut w), NlrtfaStatus::Ok);
        assert_eq!((h, w), (3, 4));
        let mut buf = vec![0.0; 12];
        assert_eq!(nlrtfa_image_copy_data(img, buf.as_mut_ptr(), 12), NlrtfaStatus::Ok);
        assert_eq!(buf, (0..12).map(f64::from).collect::<Vec<_>>());
        assert_eq!(nlrtfa_image_copy_data(img, buf.as_mut_ptr(), 5), NlrtfaStatus::DimensionMismatch);
        nlrtfa_image_free(img);
    }
}

#[test]
fn null_pointers_are_reported() {
    unsafe {
        assert_eq!(nlrtfa_image_new(2, 2, ptr::null(), ptr::null_mut()), NlrtfaStatus::NullPointer);
        assert!(last_error().contains("out"));
        let mut v = 0.0;
        assert_eq!(nlrtfa_psnr(ptr::null(), ptr::null(), &mut v), NlrtfaStatus::NullPointer);
        nlrtfa_image_free(ptr::null_mut());
        nlrtfa_operator_free(ptr::null_mut());
        nlrtfa_measurement_free(ptr::null_mut());
    }
}

#[test]
fn success_clears_the_last_error() {
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(nlrtfa_image_new(0, 2, ptr::null(), &mut out), NlrtfaStatus::InvalidArgument);
        assert!(!nlrtfa_last_error().is_null());
        assert_eq!(nlrtfa_image_new(2, 2, ptr::null(), &mut out), NlrtfaStatus::Ok);
        assert!(nlrtfa_last_error().is_null());
        nlrtfa_image_free(out);
    }
}

#[test]
fn invalid_ratio_is_an_argument_error() {
    let mut op = ptr::null_mut();
    let status = unsafe { nlrtfa_operator_radial(16, 16, 1.5, &mut op) };
    assert_eq!(status, NlrtfaStatus::InvalidArgument);
    assert!(last_error().contains("1.5"));
    assert!(op.is_null());
}

#[test]
fn missing_file_is_an_io_error_naming_the_path() {
    let path = CString::new("/nonexistent/nlrtfa/input.png").unwrap();
    let mut out = ptr::null_mut();
    let status = unsafe { nlrtfa_image_load(path.as_ptr(), &mut out) };
    assert_eq!(status, NlrtfaStatus::Io);
    assert!(last_error().contains("/nonexistent/nlrtfa/input.png"));
}

#[test]
fn metrics_of_identical_and_shifted_images() {
    let a = image(16, 16, smooth);
    let b = image(16, 16, |r, c| smooth(r, c) + 1.0);
    let (mut p, mut s) = (0.0, 0.0);
    unsafe {
        assert_eq!(nlrtfa_psnr(a, a, &mut p), NlrtfaStatus::Ok);
        assert!(p.is_infinite() && p > 0.0);
        assert_eq!(nlrtfa_ssim(a, a, &mut s), NlrtfaStatus::Ok);
        assert!((s - 1.0).abs() < 1e-12);
        assert_eq!(nlrtfa_psnr(a, b, &mut p), NlrtfaStatus::Ok);
        assert!((p - 20.0 * 255f64.log10()).abs() < 1e-9);
        let small = image(4, 4, |_, _| 0.0);
        assert_eq!(nlrtfa_ssim(small, small, &mut s), NlrtfaStatus::DimensionMismatch);
        nlrtfa_image_free(small);
        nlrtfa_image_free(a);
        nlrtfa_image_free(b);
    }
}

#[test]
fn full_fourier_sampling_reconstructs_exactly() {
    let truth = image(16, 16, smooth);
    unsafe {
        let mut op = ptr::null_mut();
        assert_eq!(nlrtfa_operator_radial(16, 16, 1.0, &mut op), NlrtfaStatus::Ok);
        let (mut m, mut csr) = (0, 0.0);
        assert_eq!(nlrtfa_operator_info(op, &mut m, &mut csr), NlrtfaStatus::Ok);
        assert_eq!((m, csr), (256, 1.0));

        let mut y = ptr::null_mut();
        assert_eq!(nlrtfa_measure(op, truth, 0.0, 0, &mut y), NlrtfaStatus::Ok);
        let (mut len, mut complex) = (0, false);
        assert_eq!(nlrtfa_measurement_info(y, &mut len, &mut complex), NlrtfaStatus::Ok);
        assert_eq!((len, complex), (256, true));

        let mut cfg = std::mem::zeroed::<NlrtfaConfig>();
        assert_eq!(nlrtfa_config_default(&mut cfg), NlrtfaStatus::Ok);
        cfg.outer_iters = 2;
        let mut x = ptr::null_mut();
        let mut summary = std::mem::zeroed::<NlrtfaRunSummary>();
        let status = nlrtfa_reconstruct(op, y, &cfg, 0.0, 1, truth, &mut x, &mut summary);
        assert_eq!(status, NlrtfaStatus::Ok, "{}", last_error());
        assert_eq!(summary.outer_iters_run, 2);
        assert!(summary.initial_psnr >= 50.0);
        let mut p = 0.0;
        assert_eq!(nlrtfa_psnr(x, truth, &mut p), NlrtfaStatus::Ok);
        assert!(p >= 50.0, "psnr {p}");
        assert!((p - summary.final_psnr).abs() < 1e-9 || p.is_infinite());

        nlrtfa_image_free(x);
        nlrtfa_measurement_free(y);
        nlrtfa_operator_free(op);
        nlrtfa_image_free(truth);
    }
}

#[test]
fn gaussian_measurements_are_real_and_seeded() {
    let truth = image(8, 8, smooth);
    unsafe {
        let mut op = ptr::null_mut();
        assert_eq!(nlrtfa_operator_gaussian(8, 8, 0.5, 3, &mut op), NlrtfaStatus::Ok);
        let mut y = ptr::null_mut();
        assert_eq!(nlrtfa_measure(op, truth, 0.0, 0, &mut y), NlrtfaStatus::Ok);
        let (mut len, mut complex) = (0, true);
        assert_eq!(nlrtfa_measurement_info(y, &mut len, &mut complex), NlrtfaStatus::Ok);
        assert_eq!((len, complex), (32, false));
        let wrong = image(4, 4, smooth);
        let mut y2 = ptr::null_mut();
        assert_eq!(nlrtfa_measure(op, wrong, 0.0, 0, &mut y2), NlrtfaStatus::DimensionMismatch);
        nlrtfa_image_free(wrong);
        nlrtfa_measurement_free(y);
        nlrtfa_operator_free(op);
        nlrtfa_image_free(truth);
    }
}

#[test]
fn save_and_load_png() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("x.png").to_str().unwrap()).unwrap();
    let img = image(5, 6, |r, c| (r * 40 + c) as f64);
    unsafe {
        assert_eq!(nlrtfa_image_save(img, path.as_ptr()), NlrtfaStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(nlrtfa_image_load(path.as_ptr(), &mut back), NlrtfaStatus::Ok);
        let mut p = 0.0;
        assert_eq!(nlrtfa_psnr(img, back, &mut p), NlrtfaStatus::Ok);
        assert!(p.is_infinite());
        nlrtfa_image_free(back);
        nlrtfa_image_free(img);
    }
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(nlrtfa_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/nlrtfa.h"))
        .expect("build script writes the header");
    for name in [
        "NLRTFA_STATUS_OK",
        "NLRTFA_STATUS_PANIC",
        "typedef struct NlrtfaImage NlrtfaImage",
        "NlrtfaConfig",
        "NlrtfaRunSummary",
        "nlrtfa_reconstruct(",
        "nlrtfa_last_error(",
        "nlrtfa_image_free(",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = std::process::Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler on PATH; skipping");
        return;
    };
    assert!(cc.status.success());
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let out = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(root.join("include"))
        .arg(root.join("tests/c/smoke.c"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
