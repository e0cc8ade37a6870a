use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use super::{build_lowrank_field, init_estimate, run_inner, AdmmState, SolverConfig, XUpdater};
use crate::error::{Error, Result};
use crate::grid::Image;
use crate::metrics::{format_psnr, psnr};
use crate::sensing::{Measurement, SensingOperator};

/// One row per outer iteration; row 0 describes the initial estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub outer_iter: usize,
    /// `||y - Phi x||_2`.
    pub data_fidelity: f64,
    /// `sum_p ||T_p x - L_p||_F^2` against the field used to produce `x`;
    /// `None` for the initial estimate.
    pub lowrank_residual: Option<f64>,
    pub psnr_vs_ref: Option<f64>,
    pub degenerate_count: usize,
    /// Wall time since the start of the run.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub rows: Vec<ReportRow>,
    pub inverter: &'static str,
    pub requested_rank: usize,
    pub effective_rank: usize,
}

pub const REPORT_HEADER: &str =
    "outer_iter,data_fidelity,lowrank_residual,psnr_vs_ref,degenerate_count,seconds";

impl RunReport {
    pub fn initial_psnr(&self) -> Option<f64> {
        self.rows.first().and_then(|r| r.psnr_vs_ref)
    }

    pub fn final_psnr(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.psnr_vs_ref)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{},{:.9e},{},{},{},{:.3}",
                row.outer_iter,
                row.data_fidelity,
                row.lowrank_residual
                    .map(|v| format!("{v:.9e}"))
                    .unwrap_or_default(),
                row.psnr_vs_ref.map(format_psnr).unwrap_or_default(),
                row.degenerate_count,
                row.seconds
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Parses a CSV produced by [`RunReport::to_csv`]. Report metadata that
    /// is not part of the CSV is left at its defaults.
    pub fn from_csv(text: &str) -> Result<RunReport> {
        let bad = |reason: String| Error::Format {
            kind: "report",
            reason,
        };
        let mut lines = text.lines();
        if lines.next() != Some(REPORT_HEADER) {
            return Err(bad("missing header".into()));
        }
        let parse_f = |s: &str| -> Result<f64> {
            if s == "inf" {
                return Ok(f64::INFINITY);
            }
            s.parse().map_err(|_| bad(format!("bad number {s:?}")))
        };
        let opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                parse_f(s).map(Some)
            }
        };
        let mut rows = Vec::new();
        for line in lines.filter(|l| !l.is_empty()) {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 6 {
                return Err(bad(format!("expected 6 columns in {line:?}")));
            }
            rows.push(ReportRow {
                outer_iter: cells[0].parse().map_err(|_| bad(cells[0].into()))?,
                data_fidelity: parse_f(cells[1])?,
                lowrank_residual: opt(cells[2])?,
                psnr_vs_ref: opt(cells[3])?,
                degenerate_count: cells[4].parse().map_err(|_| bad(cells[4].into()))?,
                seconds: parse_f(cells[5])?,
            });
        }
        Ok(RunReport {
            rows,
            inverter: "",
            requested_rank: 0,
            effective_rank: 0,
        })
    }
}

/// Seed for the decompositions of outer iteration `outer`.
pub fn outer_seed(seed: u64, outer: usize) -> u64 {
    seed.wrapping_add((outer as u64).wrapping_mul(0xD1B5_4A32_D192_ED03))
}

pub fn reconstruct(
    op: &SensingOperator,
    y: &Measurement,
    cfg: &SolverConfig,
    seed: u64,
) -> Result<(Image, RunReport)> {
    reconstruct_with_reference(op, y, cfg, seed, None)
}

/// Full reconstruction. When `reference` is given, every report row carries
/// the PSNR of the (clamped) iterate against it.
pub fn reconstruct_with_reference(
    op: &SensingOperator,
    y: &Measurement,
    cfg: &SolverConfig,
    seed: u64,
    reference: Option<&Image>,
) -> Result<(Image, RunReport)> {
    cfg.validate()?;
    if let Some(r) = reference {
        if r.dims() != op.input_dims() {
            return Err(Error::DimensionMismatch(format!(
                "reference is {:?}, operator expects {:?}",
                r.dims(),
                op.input_dims()
            )));
        }
    }
    let started = Instant::now();
    let updater = XUpdater::new(op, cfg.beta)?;
    let score = |x: &Image| -> Result<Option<f64>> {
        reference
            .map(|r| psnr(&x.clamped(0.0, 255.0), r))
            .transpose()
    };

    let mut x = init_estimate(op, y)?;
    let mut report = RunReport {
        rows: vec![ReportRow {
            outer_iter: 0,
            data_fidelity: op.forward(&x)?.distance(y)?,
            lowrank_residual: None,
            psnr_vs_ref: score(&x)?,
            degenerate_count: 0,
            seconds: started.elapsed().as_secs_f64(),
        }],
        inverter: updater.label(),
        requested_rank: cfg.rank_ell,
        effective_rank: cfg.effective_rank(),
    };

    for outer in 0..cfg.outer_iters {
        let field = build_lowrank_field(&x, cfg, outer_seed(seed, outer))?;
        let mut state = AdmmState::start(x.clone());
        state.outer = outer;
        run_inner(
            &mut state,
            op,
            y,
            &field,
            cfg.eta,
            cfg.beta,
            &updater,
            cfg.inner_iters,
        )?;
        if state.x.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateEigensystem(format!(
                "iterate diverged at outer iteration {}",
                outer + 1
            )));
        }
        let change = state.x.zip_map(&x, |a, b| a - b).norm() / x.norm().max(f64::MIN_POSITIVE);
        x = state.x;
        report.rows.push(ReportRow {
            outer_iter: outer + 1,
            data_fidelity: op.forward(&x)?.distance(y)?,
            lowrank_residual: Some(field.residual(&x)?),
            psnr_vs_ref: score(&x)?,
            degenerate_count: field.degenerate_count,
            seconds: started.elapsed().as_secs_f64(),
        });
        if cfg.early_exit_tol.is_some_and(|tol| change < tol) {
            break;
        }
    }
    Ok((x.clamped(0.0, 255.0), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patch::GroupingConfig;
    use crate::sensing::{make_radial_mask, RadialMask};

    fn small_cfg() -> SolverConfig {
        SolverConfig {
            outer_iters: 1,
            grouping: GroupingConfig {
                patch_m: 4,
                patch_n: 4,
                k: 6,
                stride: 2,
                search_window: 4,
            },
            ..Default::default()
        }
    }

    #[test]
    fn full_mask_recovers_exactly() {
        let truth = Image::from_fn(16, 16, |r, c| 40.0 + 8.0 * r as f64 + 3.0 * c as f64);
        let op = SensingOperator::partial_fourier(RadialMask::full(16, 16));
        let y = op.forward(&truth).unwrap();
        let (x, report) =
            reconstruct_with_reference(&op, &y, &small_cfg(), 1, Some(&truth)).unwrap();
        assert!(psnr(&x, &truth).unwrap() >= 50.0);
        assert_eq!(report.rows.len(), 2);
        assert_eq!(report.inverter, "fourier-diagonal");
    }

    #[test]
    fn constant_image_is_captured_by_dc() {
        let truth = Image::filled(16, 16, 77.0);
        let op = SensingOperator::partial_fourier(make_radial_mask((16, 16), 0.05, 0).unwrap());
        let y = op.forward(&truth).unwrap();
        let (x, _) = reconstruct(&op, &y, &small_cfg(), 3).unwrap();
        assert!(psnr(&x, &truth).unwrap() >= 50.0);
    }

    #[test]
    fn report_csv_roundtrip() {
        let report = RunReport {
            rows: vec![
                ReportRow {
                    outer_iter: 0,
                    data_fidelity: 12.5,
                    lowrank_residual: None,
                    psnr_vs_ref: Some(f64::INFINITY),
                    degenerate_count: 0,
                    seconds: 0.25,
                },
                ReportRow {
                    outer_iter: 1,
                    data_fidelity: 1.0 / 3.0,
                    lowrank_residual: Some(7.0),
                    psnr_vs_ref: None,
                    degenerate_count: 2,
                    seconds: 1.5,
                },
            ],
            inverter: "fourier-diagonal",
            requested_rank: 20,
            effective_rank: 4,
        };
        let csv = report.to_csv();
        assert!(csv.starts_with(REPORT_HEADER));
        let back = RunReport::from_csv(&csv).unwrap();
        assert_eq!(back.to_csv(), csv);
        assert_eq!(back.rows[0].psnr_vs_ref, Some(f64::INFINITY));
        assert_eq!(back.rows[1].lowrank_residual, Some(7.0));
    }
}
