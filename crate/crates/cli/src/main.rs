use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use xxz_cli::runner::output_dir;
use xxz_cli::{emit_report, run_experiment, CliError, Experiment, ExperimentConfig};

const COLUMNS: &str = "\
Every run writes manifest.json (config, config hash, timings, flagged totals) into the output
directory. Monte Carlo estimates go to results.csv with columns
  estimand_id,r,mean,stderr,n,flagged,seed
and exponential fits to fits.csv with columns
  estimand_id,rate,rate_stderr,ci_low,ci_high,prefactor,r_squared,r_min,r_max
Two-column *.dat files hold the same profiles for gnuplot.

Exit status: 0 success, 2 configuration error, 3 resource limit, 4 numerical failure.";

#[derive(Parser)]
#[command(name = "xxzlab", version, about = "Numerical experiments on the random XXZ chain in the Ising phase", after_help = COLUMNS)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// TOML config, or a manifest.json from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "XXZLAB_WORKERS")]
    workers: Option<usize>,
    #[arg(long, env = "XXZLAB_OUT")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Identity battery; writes identities.csv (id,checks,failures,max_residual,info,note)
    /// and identity_failures.csv.
    Identities(RunArgs),
    /// Spectrum of one draw; writes spectrum.csv (particles,index,energy) and
    /// spectrum_windows.csv (k,upper,count,bound).
    Spectrum(RunArgs),
    /// Deterministic resolvent certificate per r; writes ct.csv
    /// (r,margin,measured,bound,pass,hypotheses_pass,condition).
    Ct(RunArgs),
    /// Monte Carlo mean of the quasi-locality estimator per r; writes results.csv and fits.csv.
    Quasiloc(RunArgs),
    /// Fractional moments of the resolvent block per r; writes results.csv and fits.csv.
    Fracmom(RunArgs),
    /// Probability of spectrum in shrinking windows; writes results.csv (r = width) and
    /// wegner_fits.csv (lambda,slope,intercept,r_squared).
    Wegner(RunArgs),
    /// Large-deviation event probability per particle number; writes results.csv (r = N) and fits.csv.
    Event(RunArgs),
    /// Eigenprojection sum per r; writes results.csv, fits.csv and dynloc_counts.csv (r,mean_count,dominated).
    Dynloc(RunArgs),
    /// Propagation bound of exp(itH) per r and time; writes evolution.csv
    /// (r,distance,time,measured,bound,pass,commutation_defect).
    Evolution(RunArgs),
    /// Summarizes the artifacts of a finished run; writes report.txt and report.json.
    Report {
        #[arg(long, env = "XXZLAB_OUT")]
        out: PathBuf,
    },
}

fn run(experiment: Experiment, args: RunArgs) -> Result<(), CliError> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    match config.experiment {
        Some(e) if e != experiment => {
            return Err(CliError::Schema(format!(
                "config is for experiment {e}, not {experiment}"
            )));
        }
        _ => config.experiment = Some(experiment),
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(workers) = args.workers {
        config.workers = workers;
    }
    let out = output_dir(&config, args.out);
    let manifest = run_experiment(&config, &out)?;
    println!(
        "{experiment}: {} artifacts in {}",
        manifest.artifacts.len(),
        out.display()
    );
    for note in &manifest.notes {
        println!("  {note}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Identities(a) => run(Experiment::Identities, a),
        Command::Spectrum(a) => run(Experiment::Spectrum, a),
        Command::Ct(a) => run(Experiment::Ct, a),
        Command::Quasiloc(a) => run(Experiment::Quasiloc, a),
        Command::Fracmom(a) => run(Experiment::Fracmom, a),
        Command::Wegner(a) => run(Experiment::Wegner, a),
        Command::Event(a) => run(Experiment::Event, a),
        Command::Dynloc(a) => run(Experiment::Dynloc, a),
        Command::Evolution(a) => run(Experiment::Evolution, a),
        Command::Report { out } => emit_report(&out).map(|r| print!("{}", r.text)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("xxzlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
