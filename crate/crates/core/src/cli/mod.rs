//! Command-line front end: `measure`, `reconstruct`, `evaluate`, `sweep`.
//!
//! Exit codes: 0 on success, 1 when the numerical pipeline fails (or any
//! sweep cell fails), 2 for usage and I/O errors.

pub mod config_file;
pub mod experiment;
pub mod table;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Image;
use crate::imageio::{load_gray_cropped, save_gray};
use crate::metrics::{format_psnr, QualityScore};
use crate::sensing::io::{read_gaussian, read_mask, read_measurement, write_gaussian, write_mask, write_measurement};
use crate::sensing::{make_radial_mask, Measurement, SensingOperator};
use crate::solver::{reconstruct_with_reference, RunReport, SolverConfig};

pub use config_file::ConfigFile;
pub use experiment::{run_sweep, ExperimentSpec, SweepSummary};
pub use table::ResultRow;

pub const MASK_FILE: &str = "mask.msk";
pub const OPERATOR_FILE: &str = "phi.bin";
pub const MEASUREMENT_FILE: &str = "measurement.mea";
pub const RECON_FILE: &str = "recon.png";
pub const REPORT_FILE: &str = "report.csv";

#[derive(Debug, Parser)]
#[command(name = "nlrtfa", version, about = "Compressive sensing reconstruction with nonlocal low-rank tensor factors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate measurements of an image and write the operator and measurement files.
    Measure(MeasureArgs),
    /// Reconstruct an image from a measurement file.
    Reconstruct(ReconstructArgs),
    /// Print PSNR and SSIM of a candidate against a reference image.
    Evaluate(EvaluateArgs),
    /// Run a measure/reconstruct/evaluate grid described by an experiment file.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Sensing {
    Fourier,
    Gaussian,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("sensing").required(true).args(["fourier", "gaussian"])))]
pub struct MeasureArgs {
    #[arg(long)]
    pub image: PathBuf,
    /// Partial Fourier sensing with a pseudo-radial mask.
    #[arg(long)]
    pub fourier: bool,
    /// Dense Gaussian sensing matrix.
    #[arg(long)]
    pub gaussian: bool,
    #[arg(long)]
    pub csr: f64,
    /// Standard deviation of additive measurement noise.
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Center-crop the image to `N x N` before measuring.
    #[arg(long)]
    pub crop: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("operator").required(true).args(["mask", "phi"])))]
pub struct ReconstructArgs {
    #[arg(long)]
    pub measurement: PathBuf,
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(long)]
    pub phi: Option<PathBuf>,
    /// Image shape `HxW` for a Gaussian operator; square by default.
    #[arg(long, value_parser = parse_shape)]
    pub shape: Option<(usize, usize)>,
    /// Ground-truth image; adds per-iteration PSNR to the report.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Center-crop the truth image to `N x N`.
    #[arg(long)]
    pub crop: Option<usize>,
    /// Solver configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Sampling ratio used to pick a per-CSr config section; defaults to the operator's.
    #[arg(long)]
    pub csr: Option<f64>,
    /// Noise level the measurement was taken at; raises the low-rank weight.
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long)]
    pub candidate: PathBuf,
    /// Center-crop the reference to `N x N`.
    #[arg(long)]
    pub crop: Option<usize>,
    /// Results table to insert the score into.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Image label for the table; defaults to the reference file stem.
    #[arg(long)]
    pub image: Option<String>,
    #[arg(long, default_value = "ours")]
    pub method: String,
    #[arg(long, default_value_t = 0.0)]
    pub csr: f64,
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Experiment file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides the file's `out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed; overrides the file's `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

fn parse_shape(s: &str) -> std::result::Result<(usize, usize), String> {
    let (h, w) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected HxW, got `{s}`"))?;
    let h: usize = h.trim().parse().map_err(|_| format!("bad height in `{s}`"))?;
    let w: usize = w.trim().parse().map_err(|_| format!("bad width in `{s}`"))?;
    if h == 0 || w == 0 {
        return Err(format!("shape `{s}` has a zero side"));
    }
    Ok((h, w))
}

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> u8 {
    if err.is_numerical() {
        1
    } else {
        2
    }
}

/// Runs a parsed command, writing its report lines to `out`. Returns the
/// exit code for runs that complete with partial failures.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<u8> {
    match cli.command {
        Command::Measure(a) => cmd_measure(&a, out).map(|_| 0),
        Command::Reconstruct(a) => cmd_reconstruct(&a, out).map(|_| 0),
        Command::Evaluate(a) => cmd_evaluate(&a, out).map(|_| 0),
        Command::Sweep(a) => cmd_sweep(&a, out),
    }
}

/// Seed of the measurement noise for a given operator seed.
pub fn noise_seed(seed: u64) -> u64 {
    seed ^ 0x6E6F_6973_655F_7365
}

/// Builds the sensing operator for an image of `dims` at ratio `csr`.
pub fn build_operator(sensing: Sensing, dims: (usize, usize), csr: f64, seed: u64) -> Result<SensingOperator> {
    match sensing {
        Sensing::Fourier => Ok(SensingOperator::partial_fourier(make_radial_mask(dims, csr, seed)?)),
        Sensing::Gaussian => SensingOperator::gaussian_with_ratio(dims, csr, seed),
    }
}

/// Writes the operator file into `dir` and returns its path.
pub fn write_operator(dir: &Path, op: &SensingOperator) -> Result<PathBuf> {
    match op {
        SensingOperator::PartialFourier(pf) => {
            let path = dir.join(MASK_FILE);
            write_mask(&path, pf.mask())?;
            Ok(path)
        }
        SensingOperator::DenseGaussian(g) => {
            let path = dir.join(OPERATOR_FILE);
            write_gaussian(&path, g)?;
            Ok(path)
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn io_out(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

pub fn cmd_measure(args: &MeasureArgs, out: &mut dyn Write) -> Result<()> {
    if !(args.csr > 0.0 && args.csr <= 1.0) {
        return Err(Error::InvalidRatio(args.csr));
    }
    if !(args.sigma >= 0.0 && args.sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!("sigma must be >= 0, got {}", args.sigma)));
    }
    let img = load_gray_cropped(&args.image, args.crop)?;
    let sensing = if args.gaussian { Sensing::Gaussian } else { Sensing::Fourier };
    let op = build_operator(sensing, img.dims(), args.csr, args.seed)?;
    let y = op.measure_noisy(&img, args.sigma, noise_seed(args.seed))?;

    create_dir(&args.out)?;
    let op_path = write_operator(&args.out, &op)?;
    let y_path = args.out.join(MEASUREMENT_FILE);
    write_measurement(&y_path, &y)?;
    let (h, w) = img.dims();
    writeln!(out, "M={} N={} csr_actual={:.6}", op.output_dim(), h * w, op.csr()).map_err(io_out)?;
    writeln!(out, "wrote {} and {}", op_path.display(), y_path.display()).map_err(io_out)?;
    Ok(())
}

/// Loads an operator from a mask or Gaussian-matrix file.
pub fn read_operator(mask: Option<&Path>, phi: Option<&Path>, shape: Option<(usize, usize)>) -> Result<SensingOperator> {
    match (mask, phi) {
        (Some(m), None) => Ok(SensingOperator::partial_fourier(read_mask(m)?)),
        (None, Some(p)) => Ok(SensingOperator::DenseGaussian(read_gaussian(p, shape)?)),
        _ => Err(Error::InvalidConfig("exactly one of --mask and --phi is required".into())),
    }
}

fn check_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        ))
    }
}

pub fn load_config(path: Option<&Path>, csr: f64, sigma: f64) -> Result<SolverConfig> {
    let cfg = match path {
        Some(p) => ConfigFile::read(p)?.resolve(Some(csr))?,
        None => SolverConfig::default(),
    };
    Ok(cfg.for_noise_level(sigma))
}

/// Reconstructs `y` and writes the image and report into `dir`.
pub fn reconstruct_to_dir(
    op: &SensingOperator,
    y: &Measurement,
    cfg: &SolverConfig,
    seed: u64,
    truth: Option<&Image>,
    dir: &Path,
) -> Result<(Image, RunReport)> {
    let (x, report) = reconstruct_with_reference(op, y, cfg, seed, truth)?;
    create_dir(dir)?;
    save_gray(&dir.join(RECON_FILE), &x)?;
    report.write_csv(&dir.join(REPORT_FILE))?;
    Ok((x, report))
}

pub fn cmd_reconstruct(args: &ReconstructArgs, out: &mut dyn Write) -> Result<()> {
    check_file(&args.measurement)?;
    for p in [&args.mask, &args.phi, &args.truth, &args.config].into_iter().flatten() {
        check_file(p)?;
    }
    let op = read_operator(args.mask.as_deref(), args.phi.as_deref(), args.shape)?;
    let y = read_measurement(&args.measurement)?;
    let truth = args
        .truth
        .as_deref()
        .map(|p| load_gray_cropped(p, args.crop))
        .transpose()?;
    let csr = args.csr.unwrap_or_else(|| op.csr());
    let cfg = load_config(args.config.as_deref(), csr, args.sigma)?;

    let (x, report) = reconstruct_to_dir(&op, &y, &cfg, args.seed, truth.as_ref(), &args.out)?;
    writeln!(
        out,
        "inverter={} rank={}/{} outer_iters={}",
        report.inverter,
        report.effective_rank,
        report.requested_rank,
        report.rows.len() - 1
    )
    .map_err(io_out)?;
    if let (Some(init), Some(last)) = (report.initial_psnr(), report.final_psnr()) {
        writeln!(out, "init_psnr={} final_psnr={}", format_psnr(init), format_psnr(last)).map_err(io_out)?;
    }
    if let Some(t) = &truth {
        let score = QualityScore::between(t, &x)?;
        writeln!(out, "output {},{:.6}", format_psnr(score.psnr_db), score.ssim).map_err(io_out)?;
    }
    writeln!(out, "wrote {}", args.out.join(RECON_FILE).display()).map_err(io_out)?;
    Ok(())
}

pub fn cmd_evaluate(args: &EvaluateArgs, out: &mut dyn Write) -> Result<()> {
    let reference = load_gray_cropped(&args.reference, args.crop)?;
    let candidate = load_gray_cropped(&args.candidate, None)?;
    let score = QualityScore::between(&reference, &candidate)?;
    writeln!(out, "{},{:.6}", format_psnr(score.psnr_db), score.ssim).map_err(io_out)?;
    if let Some(path) = &args.csv {
        let image = match &args.image {
            Some(name) => name.clone(),
            None => file_stem(&args.reference),
        };
        table::upsert(
            path,
            ResultRow {
                image,
                method: args.method.clone(),
                csr: args.csr,
                sigma: args.sigma,
                psnr_db: score.psnr_db,
                ssim: score.ssim,
            },
        )?;
    }
    Ok(())
}

pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<u8> {
    let mut spec = ExperimentSpec::read(&args.config)?;
    if let Some(o) = &args.out {
        spec.out = o.clone();
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    let summary = run_sweep(&spec, out)?;
    Ok(if summary.failures.is_empty() { 0 } else { 1 })
}

pub(crate) fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}
