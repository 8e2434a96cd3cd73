use crate::artifacts::{write_csv, write_dat, FitRow, ResultRow};
use crate::config::{Experiment, ExperimentConfig};
use crate::error::{CliError, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Instant;
use xxz_core::disorder::sample_omega;
use xxz_core::disorder::{
    dynloc_expectation, event_probability, frac_moment_scan, wegner_scan, MCEstimate, ScanRow,
};
use xxz_core::identities::{default_geometries, identity_battery, BatteryConfig};
use xxz_core::lattice::{deform, Depth, Region};
use xxz_core::operators::{
    build_hamiltonian, diagonalize, energy_interval, Flavor, IntervalKind, DEGENERACY_TOL,
};
use xxz_core::probes::{
    ct_certificate, evolution_decay_check, f_estimator, fit_decay, DecayProfile, ProbeFlavor,
    ProfileSample,
};

/// Metadata of one run; the numbers themselves live in the CSV artifacts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub experiment: Experiment,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub wall_time_s: f64,
    /// `(stage, seconds)` in execution order.
    pub stages: Vec<(String, f64)>,
    pub flagged_total: usize,
    /// File names written next to the manifest.
    pub artifacts: Vec<String>,
    pub notes: Vec<String>,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RESULTS_FILE: &str = "results.csv";
pub const FITS_FILE: &str = "fits.csv";

struct Outputs<'a> {
    dir: &'a Path,
    files: Vec<String>,
    notes: Vec<String>,
    flagged: usize,
}

impl Outputs<'_> {
    fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        write_csv(&self.dir.join(name), rows)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn dat(&mut self, name: &str, header: &str, rows: &[Vec<f64>]) -> Result<()> {
        write_dat(&self.dir.join(name), header, rows)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn results(&mut self, rows: &[ResultRow]) -> Result<()> {
        self.flagged += rows.iter().map(|r| r.flagged).sum::<usize>();
        self.csv(RESULTS_FILE, rows)
    }

    /// Records a fit, or a note when too few points lie above the floor.
    fn fit(&mut self, fits: &mut Vec<FitRow>, id: &str, fit: xxz_core::Result<DecayProfile>) {
        match fit {
            Ok(p) => fits.push(FitRow::new(id, &p)),
            Err(e) => self.notes.push(format!("{id}: no decay fit ({e})")),
        }
    }
}

fn result_row(id: &str, r: f64, e: &MCEstimate) -> ResultRow {
    ResultRow {
        estimand_id: id.to_string(),
        r,
        mean: e.mean,
        stderr: e.stderr,
        n: e.n_samples,
        flagged: e.flagged,
        seed: e.seed,
    }
}

fn scan_rows(id: &str, rows: &[ScanRow]) -> Vec<ResultRow> {
    rows.iter()
        .map(|row| result_row(id, row.r as f64, &row.estimate))
        .collect()
}

fn mean_profile(rows: &[ResultRow]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| vec![r.r, r.mean, r.stderr]).collect()
}

/// Runs the configured experiment and writes every artifact into `out`.
pub fn run_experiment(config: &ExperimentConfig, out: &Path) -> Result<RunManifest> {
    let start = Instant::now();
    let experiment = config
        .experiment
        .ok_or_else(|| CliError::Schema("no experiment selected".into()))?;
    config.validate()?;
    let lambda = config.region.resolve()?;
    config.guard(&lambda)?;
    let validated = start.elapsed().as_secs_f64();

    std::fs::create_dir_all(out)?;
    let mut o = Outputs {
        dir: out,
        files: Vec::new(),
        notes: Vec::new(),
        flagged: 0,
    };
    let compute_start = Instant::now();
    match experiment {
        Experiment::Identities => identities(config, &mut o)?,
        Experiment::Spectrum => spectrum(config, &lambda, &mut o)?,
        Experiment::Ct => ct(config, &lambda, &mut o)?,
        Experiment::Quasiloc => quasiloc(config, &lambda, &mut o)?,
        Experiment::Fracmom => fracmom(config, &lambda, &mut o)?,
        Experiment::Wegner => wegner(config, &lambda, &mut o)?,
        Experiment::Event => event(config, &lambda, &mut o)?,
        Experiment::Dynloc => dynloc(config, &lambda, &mut o)?,
        Experiment::Evolution => evolution(config, &lambda, &mut o)?,
    }
    let computed = compute_start.elapsed().as_secs_f64();

    let mut manifest = RunManifest {
        tool: "xxzlab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        experiment,
        config_hash: config.hash(),
        config: config.clone(),
        wall_time_s: 0.0,
        stages: vec![("validate".into(), validated), ("compute".into(), computed)],
        flagged_total: o.flagged,
        artifacts: o.files,
        notes: o.notes,
    };
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    std::fs::write(
        out.join(MANIFEST_FILE),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(manifest)
}

/// Output directory: the flag or environment value, then the config, then `xxzlab-out`.
pub fn output_dir(config: &ExperimentConfig, flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| config.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("xxzlab-out"))
}

fn compute<T>(what: &str, r: xxz_core::Result<T>) -> Result<T> {
    r.map_err(|e| CliError::compute(what, e))
}

fn identities(config: &ExperimentConfig, o: &mut Outputs) -> Result<()> {
    let s = &config.identities;
    let battery = BatteryConfig {
        geometries: compute("geometries", default_geometries(s.n_random, config.seed))?,
        deltas: s.deltas.clone(),
        lambda: s.lambda,
        draws: s.draws,
        seed: config.seed,
        tol: s.tol,
    };
    let outcome = compute("identity battery", identity_battery(&battery))?;
    o.csv("identities.csv", &outcome.summary)?;
    o.csv("identity_failures.csv", &outcome.failures)?;
    if !outcome.skipped.is_empty() {
        o.notes.push(format!(
            "{} parameter tuples skipped with the energy on a spectrum",
            outcome.skipped.len()
        ));
    }
    o.notes.push(format!(
        "{} failures over {} identities",
        outcome.total_failures(),
        outcome.summary.len()
    ));
    Ok(())
}

fn spectrum(config: &ExperimentConfig, lambda: &Region, o: &mut Outputs) -> Result<()> {
    let model = config.model.resolve()?;
    let omega = compute(
        "sampling",
        sample_omega(lambda, &config.disorder, config.seed, 0),
    )?;
    let h = compute(
        "hamiltonian",
        build_hamiltonian(lambda, &model, Some(&omega), Flavor::Full),
    )?;
    let eig = compute("diagonalization", diagonalize(&h, DEGENERACY_TOL))?;
    let mut rows = Vec::new();
    for sector in eig.sectors() {
        for (i, &e) in sector.values.iter().enumerate() {
            rows.push(crate::artifacts::LevelRow {
                particles: sector.particles,
                index: i,
                energy: e,
            });
        }
    }
    o.csv("spectrum.csv", &rows)?;
    let all = eig.eigenvalues();
    o.dat(
        "spectrum.dat",
        "index energy",
        &all.iter()
            .enumerate()
            .map(|(i, &e)| vec![i as f64, e])
            .collect::<Vec<_>>(),
    )?;
    let mut windows = Vec::new();
    for k in 0..=config.probe.k.max(1) {
        let w = compute(
            "window",
            energy_interval(IntervalKind::UpTo, k, model.delta),
        )?;
        let bound = k as f64 * (lambda.len() as f64).powi(2 * k as i32) + 1.0;
        windows.push(crate::artifacts::WindowRow {
            k,
            upper: w.upper,
            count: eig.spectral_count(&w),
            bound,
        });
    }
    o.csv("spectrum_windows.csv", &windows)?;
    let residual = compute("reconstruction", eig.reconstruction_residual(&h))?;
    let gap = all
        .iter()
        .copied()
        .filter(|e| *e > 1e-10)
        .fold(f64::INFINITY, f64::min);
    o.notes.push(format!(
        "reconstruction residual {residual:.3e}; lowest nonzero level {gap:.6}; g = {:.6}",
        model.gap()
    ));
    Ok(())
}

fn ct(config: &ExperimentConfig, lambda: &Region, o: &mut Outputs) -> Result<()> {
    let model = config.model.resolve()?;
    let probe = xxz_core::probes::ProbeParams {
        flavor: ProbeFlavor::Dressed,
        ..config.probe.resolve()?
    };
    let a = config.probe_set(lambda)?;
    let omega = compute(
        "sampling",
        sample_omega(lambda, &config.disorder, config.seed, 0),
    )?;
    let mut rows = Vec::new();
    for &r in &config.geometry.r_list {
        let b = compute("geometry", deform(lambda, &a, Depth::Finite(r as i64)))?;
        let cert = compute(
            &format!("certificate at r = {r}"),
            ct_certificate(lambda, &model, &omega, &probe, &a, &b),
        )?;
        rows.push(crate::artifacts::CertificateRow {
            r,
            margin: cert.margin.to_string(),
            measured: cert.measured,
            bound: cert.bound,
            pass: cert.pass,
            hypotheses_pass: cert.hypotheses_pass(),
            condition: cert.condition_estimate,
        });
        o.flagged += cert.near_singular as usize;
    }
    o.dat(
        "ct.dat",
        "r measured bound",
        &rows
            .iter()
            .map(|c| vec![c.r as f64, c.measured, c.bound])
            .collect::<Vec<_>>(),
    )?;
    o.notes.push(format!(
        "{} of {} certificates hold",
        rows.iter().filter(|c| c.pass).count(),
        rows.len()
    ));
    o.csv("ct.csv", &rows)
}

fn quasiloc(config: &ExperimentConfig, lambda: &Region, o: &mut Outputs) -> Result<()> {
    let model = config.model.resolve()?;
    let probe = config.probe.resolve()?;
    let r_list = &config.geometry.r_list;
    let mc = config.mc();
    let per_sample = compute(
        "quasi-locality estimator",
        mc.run(lambda, |_, omega| {
            r_list
                .iter()
                .map(|&r| f_estimator(lambda, &model, omega, &probe, r, config.probe.scope))
                .collect::<xxz_core::Result<Vec<_>>>()
        }),
    )?;
    let mut rows = Vec::new();
    for (i, &r) in r_list.iter().enumerate() {
        let vals: Vec<f64> = per_sample.iter().map(|s| s[i].value).collect();
        let flagged = per_sample.iter().filter(|s| s[i].flagged > 0).count();
        let e = compute(
            "estimate",
            MCEstimate::from_samples(&vals, mc.seed, flagged),
        )?;
        rows.push(result_row("quasiloc_f", r as f64, &e));
    }
    let mut fits = Vec::new();
    o.fit(
        &mut fits,
        "quasiloc_f",
        fit_rows(&rows, config.geometry.fit_floor),
    );
    o.dat("quasiloc.dat", "r mean stderr", &mean_profile(&rows))?;
    o.results(&rows)?;
    o.csv(FITS_FILE, &fits)
}

fn fit_rows(rows: &[ResultRow], floor: f64) -> xxz_core::Result<DecayProfile> {
    let samples: Vec<ProfileSample> = rows
        .iter()
        .map(|r| ProfileSample {
            r: r.r,
            value: r.mean,
            stderr: Some(r.stderr),
        })
        .collect();
    fit_decay(&samples, floor)
}

fn fracmom(config: &ExperimentConfig, lambda: &Region, o: &mut Outputs) -> Result<()> {
    let model = config.model.resolve()?;
    let probe = config.probe.resolve()?;
    let a = config.probe_set(lambda)?;
    let scan = compute(
        "fractional moment scan",
        frac_moment_scan(
            lambda,
            &model,
            &probe,
            &a,
            &config.geometry.r_list,
            config.probe.dressing,
            &config.mc(),
        ),
    )?;
    let rows = scan_rows("fracmom", &scan.rows);
    let mut fits = Vec::new();
    o.fit(
        &mut fits,
        "fracmom",
        scan.decay_profile(config.geometry.fit_floor),
    );
    o.dat("fracmom.dat", "r mean stderr", &mean_profile(&rows))?;
    o.results(&rows)?;
    o.csv(FITS_FILE, &fits)
}

fn wegner(config: &ExperimentConfig, lambda: &Region, o: &mut Outputs) -> Result<()> {
    let w = &config.wegner;
    let model = config.model.resolve()?;
    let kset = match &w.k_set {
        Some(s) => Region::new(s.iter().copied()).map_err(CliError::validation)?,
        None => config.probe_set(lambda)?,
    };
    let scan = compute(
        "Wegner scan",
        wegner_scan(
            lambda,
            &kset,
            config.probe.k,
            model.delta,
            w.center,
            &w.widths,
            &w.lambdas,
            &config.mc(),
        ),
    )?;
    let rows: Vec<ResultRow> = scan
        .rows
        .iter()
        .map(|row| {
            result_row(
                &format!("wegner_lambda={}", row.lambda),
                row.width,
                &row.estimate,
            )
        })
        .collect();
    for &l in &w.lambdas {
        let id = format!("wegner_lambda={l}");
        let data: Vec<Vec<f64>> = rows
            .iter()
            .filter(|r| r.estimand_id == id)
            .map(|r| vec![r.r, r.mean, r.stderr])
            .collect();
        o.dat(
            &format!("wegner_lambda={l}.dat"),
            "width probability stderr",
            &data,
        )?;
    }
    o.csv("wegner_fits.csv", &scan.fits)?;
    o.results(&rows)
}

fn event(config: &ExperimentConfig, lambda: &Region, o: &mut Outputs) -> Result<()> {
    let model = config.model.resolve()?;
    let k = config.probe.k;
    let mc = config.mc();
    let id = format!("event_k={k}");
    let mut rows = Vec::new();
    for &n in &config.event.n_list {
        let e = compute(
            "event probability",
            event_probability(lambda, k, n, &model, &mc),
        )?;
        rows.push(result_row(&id, n as f64, &e));
    }
    let mut fits = Vec::new();
    o.fit(&mut fits, &id, fit_rows(&rows, config.geometry.fit_floor));
    o.dat("event.dat", "N probability stderr", &mean_profile(&rows))?;
    o.results(&rows)?;
    o.csv(FITS_FILE, &fits)
}

fn dynloc(config: &ExperimentConfig, lambda: &Region, o: &mut Outputs) -> Result<()> {
    let model = config.model.resolve()?;
    let a = config.probe_set(lambda)?;
    let scan = compute(
        "eigencorrelator scan",
        dynloc_expectation(
            lambda,
            &model,
            config.probe.k,
            &a,
            &config.geometry.r_list,
            &config.mc(),
        ),
    )?;
    let rows: Vec<ResultRow> = scan
        .rows
        .iter()
        .map(|row| result_row("dynloc", row.r as f64, &row.estimate))
        .collect();
    let counts: Vec<crate::artifacts::CountRow> = scan
        .rows
        .iter()
        .map(|row| crate::artifacts::CountRow {
            r: row.r,
            mean_count: row.mean_count,
            dominated: row.dominated,
        })
        .collect();
    o.csv("dynloc_counts.csv", &counts)?;
    if scan.rows.iter().any(|r| !r.dominated) {
        o.notes
            .push("some sample exceeded its eigenvalue count".into());
    }
    let mut fits = Vec::new();
    o.fit(
        &mut fits,
        "dynloc",
        scan.decay_profile(config.geometry.fit_floor),
    );
    o.dat("dynloc.dat", "r mean stderr", &mean_profile(&rows))?;
    o.results(&rows)?;
    o.csv(FITS_FILE, &fits)
}

fn evolution(config: &ExperimentConfig, lambda: &Region, o: &mut Outputs) -> Result<()> {
    let model = config.model.resolve()?;
    let a = config.probe_set(lambda)?;
    let omega = compute(
        "sampling",
        sample_omega(lambda, &config.disorder, config.seed, 0),
    )?;
    let h = compute(
        "hamiltonian",
        build_hamiltonian(lambda, &model, Some(&omega), Flavor::Full),
    )?;
    let eig = compute("diagonalization", diagonalize(&h, DEGENERACY_TOL))?;
    let gamma = 1.0 / model.delta;
    let mut rows = Vec::new();
    let mut functions = Vec::new();
    for &r in &config.geometry.r_list {
        let b = compute("geometry", deform(lambda, &a, Depth::Finite(r as i64)))?;
        let rep = compute(
            &format!("evolution at r = {r}"),
            evolution_decay_check(
                &eig,
                gamma,
                &a,
                &b,
                &config.evolution.times,
                config.evolution.bump,
                config.probe.tol,
            ),
        )?;
        for s in &rep.samples {
            rows.push(crate::artifacts::EvolutionRow {
                r,
                distance: rep.distance.to_string(),
                time: s.time,
                measured: s.measured,
                bound: s.bound,
                pass: s.pass,
                commutation_defect: s.commutation_defect,
            });
        }
        if let Some(f) = rep.function {
            functions.push(crate::artifacts::FunctionRow {
                r,
                distance: rep.distance.to_string(),
                measured: f.measured,
                trend: f.trend,
            });
        }
    }
    for &t in &config.evolution.times {
        let data: Vec<Vec<f64>> = rows
            .iter()
            .filter(|row| row.time == t)
            .map(|row| vec![row.r as f64, row.measured, row.bound])
            .collect();
        o.dat(&format!("evolution_t={t}.dat"), "r measured bound", &data)?;
    }
    o.notes.push(format!(
        "{} of {} samples within the bound",
        rows.iter().filter(|r| r.pass).count(),
        rows.len()
    ));
    if !functions.is_empty() {
        o.csv("evolution_function.csv", &functions)?;
    }
    o.csv("evolution.csv", &rows)
}
