use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn nlrtfa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlrtfa"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn missing_image_is_a_usage_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = nlrtfa(&[
        "measure", "--image", "/no/such/image.png", "--fourier", "--csr", "0.1", "--out", s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/image.png"));
}

#[test]
fn out_of_range_ratio_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let img = data("camera256.png");
    let out = nlrtfa(&["measure", "--image", s(&img), "--fourier", "--csr", "1.5", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn measure_is_deterministic() {
    let img = data("camera256.png");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let out = nlrtfa(&[
            "measure", "--image", s(&img), "--fourier", "--csr", "0.1", "--sigma", "5", "--seed", "11",
            "--crop", "32", "--out", s(dir.path()),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(stdout(&out).starts_with("M="));
    }
    for f in ["mask.msk", "measurement.mea"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn full_sampling_round_trip_and_evaluate() {
    let img = data("camera256.png");
    let dir = tempfile::tempdir().unwrap();
    let meas = dir.path().join("m");
    let rec = dir.path().join("r");
    let out = nlrtfa(&[
        "measure", "--image", s(&img), "--fourier", "--csr", "1.0", "--crop", "24", "--out", s(&meas),
    ]);
    assert!(out.status.success());

    let cfg = dir.path().join("solver.toml");
    std::fs::write(&cfg, "outer_iters = 1\n").unwrap();
    let out = nlrtfa(&[
        "reconstruct",
        "--measurement", s(&meas.join("measurement.mea")),
        "--mask", s(&meas.join("mask.msk")),
        "--truth", s(&img),
        "--crop", "24",
        "--config", s(&cfg),
        "--out", s(&rec),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let line = text.lines().find(|l| l.starts_with("output ")).expect("output line");
    let psnr: f64 = line["output ".len()..].split(',').next().unwrap().parse().unwrap();
    assert!(psnr >= 50.0, "{text}");
    assert!(rec.join("report.csv").is_file());

    let table = dir.path().join("results.csv");
    let out = nlrtfa(&[
        "evaluate",
        "--reference", s(&rec.join("recon.png")),
        "--candidate", s(&rec.join("recon.png")),
        "--csv", s(&table),
        "--image", "camera",
    ]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "inf,1.000000");
    let csv = std::fs::read_to_string(&table).unwrap();
    assert!(csv.contains("camera,ours,0.0000,0.00,inf,1.000000"), "{csv}");
}

#[test]
fn reconstruct_requires_an_operator() {
    let out = nlrtfa(&["reconstruct", "--measurement", "x.mea", "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
}
