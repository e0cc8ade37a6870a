//! Solver configuration files: flat `key = value` pairs with optional
//! per-sampling-ratio override sections.
//!
//! ```toml
//! eta = 0.05
//! outer_iters = 30
//!
//! [csr."0.10"]
//! eta = 0.08
//! ```

use std::path::Path;

use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::solver::SolverConfig;

const SECTION: &str = "csr";

/// Parsed configuration file: base keys plus per-CSr override tables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    base: Table,
    per_csr: Vec<(f64, Table)>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| Error::Format {
            kind: "config",
            reason: e.message().to_string(),
        })?;
        Self::from_table(table)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Format { kind, reason } => Error::Format {
                kind,
                reason: format!("{}: {reason}", path.display()),
            },
            other => other,
        })
    }

    pub fn from_table(mut table: Table) -> Result<Self> {
        let mut per_csr = Vec::new();
        if let Some(section) = table.remove(SECTION) {
            let Value::Table(section) = section else {
                return Err(config_error(format!("`{SECTION}` must be a table of sections")));
            };
            for (key, value) in section {
                let csr: f64 = key
                    .parse()
                    .map_err(|_| config_error(format!("section key `{key}` is not a number")))?;
                if !(csr > 0.0 && csr <= 1.0) {
                    return Err(Error::InvalidRatio(csr));
                }
                let Value::Table(overrides) = value else {
                    return Err(config_error(format!("section `{key}` must be a table")));
                };
                check_keys(&overrides)?;
                per_csr.push((csr, overrides));
            }
        }
        check_keys(&table)?;
        per_csr.sort_by(|a, b| a.0.total_cmp(&b.0));
        let file = ConfigFile { base: table, per_csr };
        file.resolve(None)?;
        for (csr, _) in &file.per_csr {
            file.resolve(Some(*csr))?;
        }
        Ok(file)
    }

    /// Sampling ratios with override sections, ascending.
    pub fn sections(&self) -> Vec<f64> {
        self.per_csr.iter().map(|(c, _)| *c).collect()
    }

    /// Base keys merged with the section whose ratio matches `csr` within 1e-9.
    pub fn resolve(&self, csr: Option<f64>) -> Result<SolverConfig> {
        let mut merged = self.base.clone();
        if let Some(csr) = csr {
            if let Some((_, overrides)) = self.per_csr.iter().find(|(c, _)| (c - csr).abs() < 1e-9) {
                for (k, v) in overrides {
                    merged.insert(k.clone(), v.clone());
                }
            }
        }
        let cfg: SolverConfig = Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| config_error(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn config_error(reason: String) -> Error {
    Error::Format {
        kind: "config",
        reason,
    }
}

fn check_keys(table: &Table) -> Result<()> {
    let known = known_keys();
    for key in table.keys() {
        if !known.iter().any(|k| k == key) {
            return Err(config_error(format!(
                "unknown key `{key}`; expected one of {}",
                known.join(", ")
            )));
        }
    }
    Ok(())
}

fn known_keys() -> Vec<String> {
    let mut keys: Vec<String> = match Value::try_from(SolverConfig::default()) {
        Ok(Value::Table(t)) => t.keys().cloned().collect(),
        _ => Vec::new(),
    };
    // Unset options are skipped during serialisation.
    keys.push("early_exit_tol".into());
    keys.sort();
    keys.dedup();
    keys
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let f = ConfigFile::parse("").unwrap();
        assert_eq!(f.resolve(None).unwrap(), SolverConfig::default());
        assert_eq!(f.resolve(Some(0.1)).unwrap(), SolverConfig::default());
    }

    #[test]
    fn section_overrides_base() {
        let f = ConfigFile::parse(
            "eta = 0.2\nouter_iters = 7\n[csr.\"0.10\"]\neta = 0.5\n[csr.\"0.02\"]\nbeta = 0.3\n",
        )
        .unwrap();
        assert_eq!(f.sections(), vec![0.02, 0.10]);
        let base = f.resolve(Some(0.06)).unwrap();
        assert_eq!((base.eta, base.outer_iters), (0.2, 7));
        let hi = f.resolve(Some(0.1)).unwrap();
        assert_eq!((hi.eta, hi.outer_iters), (0.5, 7));
        let lo = f.resolve(Some(0.02)).unwrap();
        assert_eq!((lo.eta, lo.beta), (0.2, 0.3));
    }

    #[test]
    fn grouping_keys_are_flat() {
        let f = ConfigFile::parse("patch_m = 8\npatch_n = 8\nk = 20\nearly_exit_tol = 1e-4").unwrap();
        let cfg = f.resolve(None).unwrap();
        assert_eq!((cfg.grouping.patch_m, cfg.grouping.k), (8, 20));
        assert_eq!(cfg.early_exit_tol, Some(1e-4));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ConfigFile::parse("etaa = 1").is_err());
        assert!(ConfigFile::parse("eta = -1").is_err());
        assert!(ConfigFile::parse("[csr.\"abc\"]\neta = 1").is_err());
        assert!(ConfigFile::parse("[csr.\"1.5\"]\neta = 1").is_err());
        assert!(ConfigFile::parse("[csr.\"0.1\"]\nbogus = 1").is_err());
        assert!(ConfigFile::parse("eta = ").is_err());
    }
}
