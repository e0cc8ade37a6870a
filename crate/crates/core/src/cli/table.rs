//! Results table: one row per (image, method, CSr, sigma) with PSNR and SSIM.

use std::cmp::Ordering;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::format_psnr;

pub const RESULTS_HEADER: [&str; 6] = ["image", "method", "csr", "sigma", "psnr_db", "ssim"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub image: String,
    pub method: String,
    pub csr: f64,
    pub sigma: f64,
    pub psnr_db: f64,
    pub ssim: f64,
}

impl ResultRow {
    fn key_cmp(&self, other: &ResultRow) -> Ordering {
        self.image
            .cmp(&other.image)
            .then_with(|| self.method.cmp(&other.method))
            .then_with(|| self.csr.total_cmp(&other.csr))
            .then_with(|| self.sigma.total_cmp(&other.sigma))
    }

    fn same_key(&self, other: &ResultRow) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }

    fn fields(&self) -> [String; 6] {
        [
            self.image.clone(),
            self.method.clone(),
            format!("{:.4}", self.csr),
            format!("{:.2}", self.sigma),
            format_psnr(self.psnr_db),
            format!("{:.6}", self.ssim),
        ]
    }
}

pub fn to_csv(rows: &[ResultRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RESULTS_HEADER).map_err(table_error)?;
    for row in rows {
        w.write_record(row.fields()).map_err(table_error)?;
    }
    let bytes = w.into_inner().map_err(|e| table_error(e.into_error().into()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format {
        kind: "results table",
        reason: e.to_string(),
    })
}

pub fn from_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(table_error)?;
    if header.iter().ne(RESULTS_HEADER) {
        return Err(Error::Format {
            kind: "results table",
            reason: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        });
    }
    r.deserialize()
        .map(|rec| rec.map_err(table_error))
        .collect()
}

pub fn write(path: &Path, rows: &[ResultRow]) -> Result<()> {
    std::fs::write(path, to_csv(rows)?).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<Vec<ResultRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_csv(&text)
}

/// Inserts `row` into the table at `path` (created if missing), replacing a
/// row with the same key, and rewrites it sorted by image, method, CSr, sigma.
pub fn upsert(path: &Path, row: ResultRow) -> Result<Vec<ResultRow>> {
    let mut rows = if path.exists() { read(path)? } else { Vec::new() };
    rows.retain(|r| !r.same_key(&row));
    rows.push(row);
    rows.sort_by(|a, b| a.key_cmp(b));
    write(path, &rows)?;
    Ok(rows)
}

fn table_error(e: csv::Error) -> Error {
    Error::Format {
        kind: "results table",
        reason: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(image: &str, csr: f64, sigma: f64, psnr: f64) -> ResultRow {
        ResultRow {
            image: image.into(),
            method: "ours".into(),
            csr,
            sigma,
            psnr_db: psnr,
            ssim: 0.5,
        }
    }

    #[test]
    fn csv_round_trip_with_infinite_psnr() {
        let rows = vec![row("a", 0.1, 0.0, f64::INFINITY), row("b,c", 0.02, 10.0, 21.5)];
        let text = to_csv(&rows).unwrap();
        assert!(text.starts_with("image,method,csr,sigma,psnr_db,ssim\n"));
        assert!(text.contains("a,ours,0.1000,0.00,inf,0.500000\n"));
        assert_eq!(from_csv(&text).unwrap(), rows);
    }

    #[test]
    fn upsert_sorts_and_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        for csr in [0.10, 0.02, 0.08, 0.04, 0.06] {
            upsert(&path, row("house", csr, 0.0, 20.0)).unwrap();
        }
        let rows = upsert(&path, row("house", 0.06, 0.0, 30.0)).unwrap();
        let csrs: Vec<f64> = rows.iter().map(|r| r.csr).collect();
        assert_eq!(csrs, vec![0.02, 0.04, 0.06, 0.08, 0.10]);
        assert_eq!(rows[2].psnr_db, 30.0);
        assert_eq!(read(&path).unwrap().len(), 5);
    }

    #[test]
    fn rejects_foreign_header() {
        assert!(from_csv("a,b\n1,2\n").is_err());
    }
}
