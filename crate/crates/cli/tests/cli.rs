use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;
use xxz_cli::artifacts::{read_csv, FitRow, ResultRow};
use xxz_cli::runner::RunManifest;
use xxz_cli::{emit_report, run_experiment, CliError, Experiment, ExperimentConfig};
use xxz_core::identities::IdentitySummary;

fn xxzlab(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_xxzlab"));
    cmd.args(args)
        .env_remove("XXZLAB_WORKERS")
        .env_remove("XXZLAB_OUT");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL_FRACMOM: &str = "\
seed = 5
[region]
interval = [1, 8]
[model]
delta = 8.0
lambda = 10.0
[mc]
n_samples = 24
[geometry]
a = [4]
r_list = [0, 1, 2, 3]
";

#[test]
fn default_identity_grid_has_no_failures() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("ids");
    let o = xxzlab(&["identities", "--out", out.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: Vec<IdentitySummary> = read_csv(&out.join("identities.csv")).unwrap();
    assert!(!summary.is_empty());
    assert_eq!(summary.iter().map(|s| s.failures).sum::<usize>(), 0);
    let manifest: RunManifest =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.experiment, Experiment::Identities);
    let report = emit_report(&out).unwrap();
    let tally = report.identities.unwrap();
    assert_eq!(tally.passed, tally.total);
    assert!(report
        .text
        .contains(&format!("identities: {0}/{0} pass", tally.total)));
}

#[test]
fn unreachable_rows_are_exactly_zero() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        "[region]\nsites = [0, 1, 2, 5, 6]\n[model]\ndelta = 4.0\nlambda = 3.0\n[mc]\nn_samples = 12\n[geometry]\na = [1]\nr_list = [0, 1, 2]\n",
    );
    let out = tmp.path().join("f");
    let o = xxzlab(
        &[
            "fracmom",
            "--config",
            &config,
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let rows: Vec<ResultRow> = read_csv(&out.join("results.csv")).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].mean > 0.0);
    let last = &rows[2];
    assert_eq!(
        (last.r, last.mean, last.stderr, last.flagged),
        (2.0, 0.0, 0.0, 0)
    );
}

#[test]
fn subcritical_anisotropy_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), "[model]\ndelta = 0.5\nlambda = 1.0\n");
    let out = tmp.path().join("x");
    let o = xxzlab(
        &[
            "spectrum",
            "--config",
            &config,
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Δ > 1"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn unknown_keys_and_mismatched_experiments_are_rejected() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        "[model]\ndelta = 2.0\nlambda = 1.0\nanisotropy = 3.0\n",
    );
    let o = xxzlab(&["spectrum", "--config", &config], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("anisotropy"), "{}", stderr(&o));

    let config = write_config(tmp.path(), "experiment = \"wegner\"\n");
    let o = xxzlab(&["spectrum", "--config", &config], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oversized_region_is_refused_before_compute() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), "[region]\ninterval = [0, 16]\n");
    let out = tmp.path().join("big");
    let o = xxzlab(
        &[
            "spectrum",
            "--config",
            &config,
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(!out.exists());

    let config = write_config(
        tmp.path(),
        "[region]\ninterval = [0, 9]\n[limits]\nmax_block_dim = 100\n",
    );
    let o = xxzlab(
        &[
            "spectrum",
            "--config",
            &config,
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn particle_count_beyond_region_is_a_config_error() {
    let config = ExperimentConfig {
        experiment: Some(Experiment::Event),
        ..ExperimentConfig::from_toml("[region]\ninterval = [1, 8]\n[event]\nn_list = [9]\n")
            .unwrap()
    };
    let tmp = TempDir::new().unwrap();
    let err = run_experiment(&config, tmp.path()).unwrap_err();
    assert!(matches!(err, CliError::Schema(_)), "{err:?}");
}

#[test]
fn manifest_reruns_reproduce_the_tables() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), SMALL_FRACMOM);
    let first = tmp.path().join("first");
    let o = xxzlab(
        &[
            "fracmom",
            "--config",
            &config,
            "--out",
            first.to_str().unwrap(),
        ],
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));

    let second = tmp.path().join("second");
    let manifest = first.join("manifest.json");
    let o = xxzlab(
        &[
            "fracmom",
            "--config",
            manifest.to_str().unwrap(),
            "--out",
            second.to_str().unwrap(),
        ],
        &[("XXZLAB_WORKERS", "3")],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    for name in ["results.csv", "fits.csv", "fracmom.dat"] {
        assert_eq!(
            std::fs::read(first.join(name)).unwrap(),
            std::fs::read(second.join(name)).unwrap(),
            "{name}"
        );
    }
    let read = |d: &Path| -> RunManifest {
        serde_json::from_str(&std::fs::read_to_string(d.join("manifest.json")).unwrap()).unwrap()
    };
    let (a, b) = (read(&first), read(&second));
    assert_eq!(a.config_hash, b.config_hash);
    assert_eq!(b.config.workers, 3);

    let third = tmp.path().join("third");
    let o = xxzlab(
        &[
            "fracmom",
            "--config",
            &config,
            "--seed",
            "6",
            "--out",
            third.to_str().unwrap(),
        ],
        &[],
    );
    assert!(o.status.success());
    assert_ne!(read(&third).config_hash, a.config_hash);
    assert_ne!(
        std::fs::read(third.join("results.csv")).unwrap(),
        std::fs::read(first.join("results.csv")).unwrap()
    );
}

#[test]
fn output_directory_comes_from_the_environment() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        "[region]\ninterval = [0, 4]\n[model]\ndelta = 2.0\nlambda = 1.0\n",
    );
    let out = tmp.path().join("env-out");
    let o = xxzlab(
        &["spectrum", "--config", &config],
        &[("XXZLAB_OUT", out.to_str().unwrap())],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("spectrum.csv").exists());
    let windows = std::fs::read_to_string(out.join("spectrum_windows.csv")).unwrap();
    assert!(windows.starts_with("k,upper,count,bound"));
}

#[test]
fn report_renders_fit_table() {
    let tmp = TempDir::new().unwrap();
    let config = ExperimentConfig {
        experiment: Some(Experiment::Fracmom),
        ..ExperimentConfig::from_toml(SMALL_FRACMOM).unwrap()
    };
    run_experiment(&config, tmp.path()).unwrap();
    let fits: Vec<FitRow> = read_csv(&tmp.path().join("fits.csv")).unwrap();
    assert_eq!(fits.len(), 1);
    assert!(fits[0].rate > 0.0 && fits[0].ci_low.is_some());
    let report = emit_report(tmp.path()).unwrap();
    assert!(
        report.text.contains("rate")
            && report.text.contains("95% CI")
            && report.text.contains("R^2")
    );
    assert!(report.text.contains(&format!("{:.4}", fits[0].rate)));
    assert_eq!(report.estimates, 4);
    assert!(tmp.path().join("report.json").exists());

    let o = xxzlab(&["report", "--out", tmp.path().to_str().unwrap()], &[]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("fracmom"));
}

#[test]
fn report_on_empty_directory_is_missing_artifacts() {
    let tmp = TempDir::new().unwrap();
    assert!(matches!(
        emit_report(tmp.path()),
        Err(CliError::MissingArtifacts(_))
    ));
    let o = xxzlab(&["report", "--out", tmp.path().to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing artifacts"));
}

#[test]
fn every_experiment_runs_on_a_small_chain() {
    let base = "seed = 2\n[region]\ninterval = [1, 7]\n[model]\ndelta = 8.0\nlambda = 10.0\n[mc]\nn_samples = 6\n\
                [geometry]\na = [4]\nr_list = [0, 1, 2]\n[event]\nn_list = [2, 3]\n[wegner]\nk_set = [3, 4]\n";
    for e in Experiment::ALL {
        if e == Experiment::Identities {
            continue;
        }
        let tmp = TempDir::new().unwrap();
        let config = ExperimentConfig {
            experiment: Some(e),
            ..ExperimentConfig::from_toml(base).unwrap()
        };
        let manifest =
            run_experiment(&config, tmp.path()).unwrap_or_else(|err| panic!("{e}: {err}"));
        assert!(!manifest.artifacts.is_empty());
        for a in &manifest.artifacts {
            assert!(tmp.path().join(a).exists(), "{e}: {a}");
        }
        emit_report(tmp.path()).unwrap_or_else(|err| panic!("{e}: {err}"));
    }
}

#[test]
fn help_documents_csv_columns() {
    let o = xxzlab(&["--help"], &[]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(
        text.contains("estimand_id,r,mean,stderr,n,flagged,seed"),
        "{text}"
    );
}
