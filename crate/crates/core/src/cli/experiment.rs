//! Experiment grids: images x sampling ratios x noise levels, run through
//! measure, reconstruct and evaluate with seeds derived from one master seed.
//!
//! ```toml
//! images = ["house.png"]
//! sensing = "fourier"
//! csr = [0.02, 0.06, 0.10]
//! sigma = [0.0, 10.0]
//! seed = 7
//! out = "runs/house"
//! crop = 128
//!
//! [solver]
//! outer_iters = 20
//! [solver.csr."0.10"]
//! eta = 0.08
//! ```

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use super::table::{self, ResultRow};
use super::{build_operator, file_stem, noise_seed, read_operator, reconstruct_to_dir, write_operator, ConfigFile, Sensing, MEASUREMENT_FILE, RECON_FILE};
use crate::error::{Error, Result};
use crate::grid::Image;
use crate::imageio::{load_gray, load_gray_cropped};
use crate::metrics::{format_psnr, QualityScore};
use crate::sensing::io::{read_measurement, write_measurement};

pub const RESULTS_FILE: &str = "results.csv";
pub const FAILURES_FILE: &str = "failures.txt";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    images: Vec<PathBuf>,
    #[serde(default = "default_sensing")]
    sensing: Sensing,
    csr: Vec<f64>,
    #[serde(default = "default_sigma")]
    sigma: Vec<f64>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    out: Option<PathBuf>,
    #[serde(default)]
    crop: Option<usize>,
    #[serde(default = "default_method")]
    method: String,
    #[serde(default)]
    solver: toml::Table,
}

fn default_sensing() -> Sensing {
    Sensing::Fourier
}

fn default_sigma() -> Vec<f64> {
    vec![0.0]
}

fn default_method() -> String {
    "ours".into()
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub images: Vec<PathBuf>,
    pub sensing: Sensing,
    pub csr: Vec<f64>,
    pub sigma: Vec<f64>,
    pub seed: u64,
    pub out: PathBuf,
    pub crop: Option<usize>,
    pub method: String,
    pub solver: ConfigFile,
}

impl ExperimentSpec {
    /// Parses an experiment file. Relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let raw: RawSpec = toml::from_str(text).map_err(|e| Error::Format {
            kind: "experiment",
            reason: e.message().to_string(),
        })?;
        let resolve = |p: PathBuf| if p.is_relative() { base.join(p) } else { p };
        let spec = ExperimentSpec {
            images: raw.images.into_iter().map(resolve).collect(),
            sensing: raw.sensing,
            csr: raw.csr,
            sigma: raw.sigma,
            seed: raw.seed,
            out: resolve(raw.out.unwrap_or_else(|| PathBuf::from("sweep-out"))),
            crop: raw.crop,
            method: raw.method,
            solver: ConfigFile::from_table(raw.solver)?,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn validate(&self) -> Result<()> {
        if self.images.is_empty() || self.csr.is_empty() || self.sigma.is_empty() {
            return Err(Error::InvalidConfig(
                "images, csr and sigma must all be non-empty".into(),
            ));
        }
        for &c in &self.csr {
            if !(c > 0.0 && c <= 1.0) {
                return Err(Error::InvalidRatio(c));
            }
        }
        for &s in &self.sigma {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::InvalidConfig(format!("sigma must be >= 0, got {s}")));
            }
        }
        let mut stems = HashMap::new();
        for p in &self.images {
            if !p.is_file() {
                return Err(Error::io(
                    p,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
                ));
            }
            if let Some(prev) = stems.insert(file_stem(p), p) {
                return Err(Error::InvalidConfig(format!(
                    "{} and {} share a file stem",
                    prev.display(),
                    p.display()
                )));
            }
        }
        Ok(())
    }

    /// Output directory of one grid cell.
    pub fn cell_dir(&self, image: &Path, csr: f64, sigma: f64) -> PathBuf {
        self.out
            .join(file_stem(image))
            .join(format!("csr_{csr:.4}"))
            .join(format!("sigma_{sigma:.2}"))
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeds of one grid cell: the operator depends on (image, csr) only, so all
/// noise levels of a cell share it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellSeeds {
    pub operator: u64,
    pub noise: u64,
    pub solver: u64,
}

pub fn cell_seeds(master: u64, image: usize, csr: usize, sigma: usize) -> CellSeeds {
    let operator = splitmix(master ^ splitmix(((image as u64) << 32) | csr as u64));
    let noise = noise_seed(splitmix(operator ^ splitmix(sigma as u64 + 1)));
    let solver = splitmix(operator ^ splitmix((1 << 40) | sigma as u64));
    CellSeeds {
        operator,
        noise,
        solver,
    }
}

#[derive(Debug, Clone, Default)]
pub struct SweepSummary {
    /// Successful cells in grid order.
    pub rows: Vec<ResultRow>,
    /// One message per failed cell.
    pub failures: Vec<String>,
    /// Per image: whether the CSr-averaged PSNR is non-increasing in sigma.
    pub sigma_trend: Vec<(String, bool)>,
}

struct Cell {
    image: usize,
    csr: usize,
    sigma: usize,
}

fn run_cell(spec: &ExperimentSpec, truth: &Image, cell: &Cell) -> Result<ResultRow> {
    let image_path = &spec.images[cell.image];
    let csr = spec.csr[cell.csr];
    let sigma = spec.sigma[cell.sigma];
    let seeds = cell_seeds(spec.seed, cell.image, cell.csr, cell.sigma);
    let dir = spec.cell_dir(image_path, csr, sigma);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

    let op = build_operator(spec.sensing, truth.dims(), csr, seeds.operator)?;
    let y = op.measure_noisy(truth, sigma, seeds.noise)?;
    let op_path = write_operator(&dir, &op)?;
    let y_path = dir.join(MEASUREMENT_FILE);
    write_measurement(&y_path, &y)?;

    // Reconstruct from the files on disk, exactly as `reconstruct` would.
    let op = match spec.sensing {
        Sensing::Fourier => read_operator(Some(&op_path), None, None)?,
        Sensing::Gaussian => read_operator(None, Some(&op_path), Some(truth.dims()))?,
    };
    let y = read_measurement(&y_path)?;
    let cfg = spec.solver.resolve(Some(csr))?.for_noise_level(sigma);
    reconstruct_to_dir(&op, &y, &cfg, seeds.solver, Some(truth), &dir)?;

    let recon = load_gray(&dir.join(RECON_FILE))?;
    let score = QualityScore::between(truth, &recon)?;
    Ok(ResultRow {
        image: file_stem(image_path),
        method: spec.method.clone(),
        csr,
        sigma,
        psnr_db: score.psnr_db,
        ssim: score.ssim,
    })
}

fn sigma_trend(spec: &ExperimentSpec, rows: &[ResultRow]) -> Vec<(String, bool)> {
    let mut out = Vec::new();
    if spec.sigma.len() < 2 {
        return out;
    }
    for image in &spec.images {
        let stem = file_stem(image);
        let means: Vec<Option<f64>> = spec
            .sigma
            .iter()
            .map(|&s| {
                let vals: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.image == stem && r.sigma == s && r.psnr_db.is_finite())
                    .map(|r| r.psnr_db)
                    .collect();
                (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
            })
            .collect();
        let mut order: Vec<usize> = (0..spec.sigma.len()).collect();
        order.sort_by(|&a, &b| spec.sigma[a].total_cmp(&spec.sigma[b]));
        let seq: Vec<f64> = order.iter().filter_map(|&i| means[i]).collect();
        let ok = seq.windows(2).all(|w| w[1] <= w[0]);
        out.push((stem, ok));
    }
    out
}

/// Runs every cell of the grid, writes `results.csv` (and `failures.txt` if
/// any cell failed) under `spec.out`, and prints a summary to `log`.
pub fn run_sweep(spec: &ExperimentSpec, log: &mut dyn Write) -> Result<SweepSummary> {
    spec.validate()?;
    std::fs::create_dir_all(&spec.out).map_err(|e| Error::io(&spec.out, e))?;
    let truths: Vec<Result<Image>> = spec
        .images
        .iter()
        .map(|p| load_gray_cropped(p, spec.crop))
        .collect();

    let mut cells = Vec::new();
    for image in 0..spec.images.len() {
        for csr in 0..spec.csr.len() {
            for sigma in 0..spec.sigma.len() {
                cells.push(Cell { image, csr, sigma });
            }
        }
    }
    let outcomes: Vec<Result<ResultRow>> = cells
        .par_iter()
        .map(|cell| match &truths[cell.image] {
            Ok(truth) => run_cell(spec, truth, cell),
            Err(e) => Err(Error::InvalidConfig(e.to_string())),
        })
        .collect();

    let mut summary = SweepSummary::default();
    for (cell, outcome) in cells.iter().zip(outcomes) {
        match outcome {
            Ok(row) => summary.rows.push(row),
            Err(e) => summary.failures.push(format!(
                "{} csr={} sigma={}: {e}",
                spec.images[cell.image].display(),
                spec.csr[cell.csr],
                spec.sigma[cell.sigma]
            )),
        }
    }
    summary.sigma_trend = sigma_trend(spec, &summary.rows);

    table::write(&spec.out.join(RESULTS_FILE), &summary.rows)?;
    let failures_path = spec.out.join(FAILURES_FILE);
    if summary.failures.is_empty() {
        if failures_path.exists() {
            std::fs::remove_file(&failures_path).map_err(|e| Error::io(&failures_path, e))?;
        }
    } else {
        let text: String = summary.failures.iter().map(|f| format!("{f}\n")).collect();
        std::fs::write(&failures_path, text).map_err(|e| Error::io(&failures_path, e))?;
    }

    let w = |e| Error::io("<stdout>", e);
    for r in &summary.rows {
        writeln!(log, "{} csr={:.4} sigma={:.2} psnr={} ssim={:.6}", r.image, r.csr, r.sigma, format_psnr(r.psnr_db), r.ssim).map_err(w)?;
    }
    for f in &summary.failures {
        writeln!(log, "FAILED {f}").map_err(w)?;
    }
    for (image, ok) in &summary.sigma_trend {
        let verdict = if *ok { "non-increasing" } else { "NOT non-increasing" };
        writeln!(log, "sigma trend {image}: {verdict}").map_err(w)?;
    }
    writeln!(
        log,
        "{} cells, {} failed; results in {}",
        cells.len(),
        summary.failures.len(),
        spec.out.join(RESULTS_FILE).display()
    )
    .map_err(w)?;
    Ok(summary)
}

/// Name of the operator file written into each cell directory.
pub fn operator_file_name(sensing: Sensing) -> &'static str {
    match sensing {
        Sensing::Fourier => super::MASK_FILE,
        Sensing::Gaussian => super::OPERATOR_FILE,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_distinct_and_stable() {
        let a = cell_seeds(7, 0, 0, 0);
        assert_eq!(a, cell_seeds(7, 0, 0, 0));
        assert_ne!(a.operator, cell_seeds(7, 0, 1, 0).operator);
        assert_ne!(a.operator, cell_seeds(7, 1, 0, 0).operator);
        assert_ne!(a.operator, cell_seeds(8, 0, 0, 0).operator);
        let b = cell_seeds(7, 0, 0, 1);
        assert_eq!(a.operator, b.operator);
        assert_ne!(a.noise, b.noise);
        assert_ne!(a.solver, b.solver);
    }

    #[test]
    fn parses_and_resolves_paths() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.png"), b"x").unwrap();
        let spec = ExperimentSpec::parse(
            "images = [\"a.png\"]\ncsr = [0.1, 0.05]\nseed = 3\nout = \"o\"\n[solver]\nouter_iters = 2\n[solver.csr.\"0.1\"]\neta = 0.3\n",
            dir.path(),
        )
        .unwrap();
        assert_eq!(spec.images[0], dir.path().join("a.png"));
        assert_eq!(spec.out, dir.path().join("o"));
        assert_eq!(spec.sigma, vec![0.0]);
        assert_eq!(spec.sensing, Sensing::Fourier);
        assert_eq!(spec.solver.resolve(Some(0.1)).unwrap().eta, 0.3);
        assert_eq!(spec.solver.resolve(Some(0.05)).unwrap().outer_iters, 2);
        assert_eq!(
            spec.cell_dir(&spec.images[0], 0.1, 0.0),
            dir.path().join("o/a/csr_0.1000/sigma_0.00")
        );
    }

    #[test]
    fn rejects_invalid_specs() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.png"), b"x").unwrap();
        for text in [
            "images = [\"missing.png\"]\ncsr = [0.1]",
            "images = [\"a.png\"]\ncsr = [0.0]",
            "images = [\"a.png\"]\ncsr = [0.1]\nsigma = [-1.0]",
            "images = [\"a.png\"]\ncsr = []",
            "images = [\"a.png\"]\ncsr = [0.1]\nbogus = 1",
            "images = [\"a.png\"]\ncsr = [0.1]\nsensing = \"radon\"",
            "images = [\"a.png\", \"a.png\"]\ncsr = [0.1]",
        ] {
            assert!(ExperimentSpec::parse(text, dir.path()).is_err(), "{text}");
        }
    }
}
