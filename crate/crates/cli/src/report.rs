use crate::artifacts::{read_csv, CertificateRow, EvolutionRow, FitRow, ResultRow};
use crate::error::{CliError, Result};
use crate::runner::{RunManifest, FITS_FILE, MANIFEST_FILE, RESULTS_FILE};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;
use xxz_core::disorder::WegnerFit;
use xxz_core::identities::IdentitySummary;

pub const REPORT_TEXT: &str = "report.txt";
pub const REPORT_JSON: &str = "report.json";

/// Pass count out of a total.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub passed: usize,
    pub total: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub config_hash: String,
    pub fits: Vec<FitRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identities: Option<Tally>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificates: Option<Tally>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evolution: Option<Tally>,
    pub wegner: Vec<WegnerFit>,
    pub estimates: usize,
    pub flagged_total: usize,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub text: String,
}

fn optional<T: serde::de::DeserializeOwned>(
    dir: &Path,
    manifest: &RunManifest,
    name: &str,
) -> Result<Option<Vec<T>>> {
    if manifest.artifacts.iter().any(|a| a == name) {
        Ok(Some(read_csv(&dir.join(name))?))
    } else {
        Ok(None)
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}

/// Summarizes the artifacts of one run directory and writes `report.txt` and `report.json` there.
pub fn emit_report(dir: &Path) -> Result<Report> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&manifest_path).map_err(|_| {
        CliError::MissingArtifacts(format!("no {MANIFEST_FILE} in {}", dir.display()))
    })?;
    let manifest: RunManifest = serde_json::from_str(&text)
        .map_err(|e| CliError::MissingArtifacts(format!("{}: {e}", manifest_path.display())))?;
    if manifest.artifacts.is_empty() {
        return Err(CliError::MissingArtifacts(format!(
            "the run in {} produced no artifacts",
            dir.display()
        )));
    }
    for a in &manifest.artifacts {
        if !dir.join(a).exists() {
            return Err(CliError::MissingArtifacts(format!(
                "{a} listed in the manifest is absent"
            )));
        }
    }

    let fits: Vec<FitRow> = optional(dir, &manifest, FITS_FILE)?.unwrap_or_default();
    let results: Vec<ResultRow> = optional(dir, &manifest, RESULTS_FILE)?.unwrap_or_default();
    let identities = optional::<IdentitySummary>(dir, &manifest, "identities.csv")?.map(|rows| {
        let checked: Vec<&IdentitySummary> = rows.iter().filter(|s| !s.info).collect();
        Tally {
            passed: checked.iter().filter(|s| s.failures == 0).count(),
            total: checked.len(),
        }
    });
    let certificates = optional::<CertificateRow>(dir, &manifest, "ct.csv")?.map(|rows| Tally {
        passed: rows.iter().filter(|c| c.pass).count(),
        total: rows.len(),
    });
    let evolution = optional::<EvolutionRow>(dir, &manifest, "evolution.csv")?.map(|rows| Tally {
        passed: rows.iter().filter(|c| c.pass).count(),
        total: rows.len(),
    });
    let wegner: Vec<WegnerFit> = optional(dir, &manifest, "wegner_fits.csv")?.unwrap_or_default();

    let mut out = String::new();
    let _ = writeln!(
        out,
        "experiment {} (config {})",
        manifest.experiment,
        &manifest.config_hash[..12]
    );
    let _ = writeln!(
        out,
        "wall time {:.2} s, flagged samples {}",
        manifest.wall_time_s, manifest.flagged_total
    );
    if !results.is_empty() {
        let _ = writeln!(
            out,
            "\n{:<24} {:>8} {:>14} {:>12} {:>6} {:>7}",
            "estimand", "r", "mean", "stderr", "n", "flagged"
        );
        for r in &results {
            let _ = writeln!(
                out,
                "{:<24} {:>8} {:>14.6e} {:>12.3e} {:>6} {:>7}",
                r.estimand_id, r.r, r.mean, r.stderr, r.n, r.flagged
            );
        }
    }
    if !fits.is_empty() {
        let _ = writeln!(
            out,
            "\n{:<24} {:>10} {:>22} {:>8}",
            "fit", "rate", "95% CI", "R^2"
        );
        for f in &fits {
            let ci = format!("[{}, {}]", fmt_opt(f.ci_low), fmt_opt(f.ci_high));
            let _ = writeln!(
                out,
                "{:<24} {:>10.4} {:>22} {:>8.4}",
                f.estimand_id, f.rate, ci, f.r_squared
            );
        }
    }
    for w in &wegner {
        let _ = writeln!(
            out,
            "wegner lambda = {}: slope {:.4}, R^2 {:.4}",
            w.lambda, w.slope, w.r_squared
        );
    }
    for (label, tally) in [
        ("identities", identities),
        ("certificates", certificates),
        ("evolution bounds", evolution),
    ] {
        if let Some(t) = tally {
            let _ = writeln!(out, "{label}: {}/{} pass", t.passed, t.total);
        }
    }
    for n in &manifest.notes {
        let _ = writeln!(out, "note: {n}");
    }

    let report = Report {
        experiment: manifest.experiment.to_string(),
        config_hash: manifest.config_hash.clone(),
        fits,
        identities,
        certificates,
        evolution,
        wegner,
        estimates: results.len(),
        flagged_total: manifest.flagged_total,
        notes: manifest.notes.clone(),
        text: out,
    };
    std::fs::write(dir.join(REPORT_TEXT), &report.text)?;
    std::fs::write(
        dir.join(REPORT_JSON),
        serde_json::to_string_pretty(&report)?,
    )?;
    Ok(report)
}
