use crate::error::{CliError, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use xxz_core::probes::DecayProfile;

/// One Monte Carlo estimate; the canonical numeric output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub estimand_id: String,
    /// Distance, interval width or particle number, depending on the estimand.
    pub r: f64,
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
    pub flagged: usize,
    pub seed: u64,
}

/// `value ≈ prefactor * exp(-rate * r)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub estimand_id: String,
    pub rate: f64,
    pub rate_stderr: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub prefactor: f64,
    pub r_squared: f64,
    pub r_min: f64,
    pub r_max: f64,
}

impl FitRow {
    pub fn new(id: &str, p: &DecayProfile) -> Self {
        FitRow {
            estimand_id: id.to_string(),
            rate: p.rate,
            rate_stderr: p.rate_stderr,
            ci_low: p.rate_ci.map(|c| c.0),
            ci_high: p.rate_ci.map(|c| c.1),
            prefactor: p.prefactor,
            r_squared: p.r_squared,
            r_min: p.fit_window.0,
            r_max: p.fit_window.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub particles: usize,
    pub index: usize,
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowRow {
    pub k: usize,
    pub upper: f64,
    pub count: usize,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateRow {
    pub r: u64,
    pub margin: String,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
    pub hypotheses_pass: bool,
    pub condition: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    pub r: u64,
    pub mean_count: f64,
    /// Whether every sample stayed below its eigenvalue count.
    pub dominated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionRow {
    pub r: u64,
    pub distance: String,
    pub time: f64,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
    pub commutation_defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionRow {
    pub r: u64,
    pub distance: String,
    pub measured: f64,
    pub trend: f64,
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| CliError::MissingArtifacts(format!("{}: {e}", path.display())))?;
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()?;
    Ok(rows)
}

/// Whitespace-separated columns with a `#` header line, readable by gnuplot.
pub fn write_dat(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "# {header}")?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        writeln!(f, "{}", line.join(" "))?;
    }
    f.flush()?;
    Ok(())
}
