//! Thin command-line front end: one subcommand per named experiment,
//! dispatching into the library. The runnable examples in `examples/`
//! are the richer entry point; this binary exists for scripted runs.
//!
//! Exit codes: 0 all verdicts pass, 2 at least one FAIL, 1 usage or
//! configuration error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spde_lab::experiments::{compare_baseline, run_experiment, ExperimentConfig};

const SCHEMAS: &str = "\
CSV artifacts per subcommand (all floats are emitted as `{:.17e}`):
  spectrum    spectrum.csv: index,eigenvalue
              fd_spectrum.csv: index,fd,formula,rel_err
  lemma1      lemma1.csv: t,max_ratio,bound,max_sq_ratio,sq_bound
  lemma2      isometry.csv: name,mc,stderr,analytic
              convolution_bound.csv: t,estimate,stderr,bound
  thm1        moments.csv: t,estimate,stderr
              bound.csv: i1,i2,i3,total,bounded
  thm2        moments.csv: t,estimate,stderr
  picard      picard.csv: sweep,diff,gamma
  thm4lin     ou_variance.csv: burn_in,estimate,stderr,target
              stability_linear.csv: t,estimate,stderr
              fits.csv: case,rate,ci,floor
  thm5        certificate.csv: l,trace,cond1,cond2,eligible
              diff_series.csv: sweep,diff,ratio
              uniform_bound.csv: quantity,value,bound
              stability_nonlinear.csv: t,estimate,stderr
              fits.csv: case,rate,ci,floor
  uniqueness  rate.csv: r_hat,ci,horizon
              energy_distance.csv: t,statistic,p_value
              stationarity.csv: t1,t2,statistic,p_value
  doob        doob.csv: name,lhs,lhs_stderr,rhs,pass

Every run also writes manifest.txt (all resolved parameters) and
verdicts.txt (one [verdict] block per check: name, pass, margin, seed).";

#[derive(Parser)]
#[command(name = "spde-lab", version, about = "Stochastic reaction-diffusion laboratory")]
#[command(after_long_help = SCHEMAS, after_help = SCHEMAS)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Flat key=value config file overriding the experiment defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// RNG seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (also settable via SPDE_LAB_WORKERS).
    #[arg(long)]
    workers: Option<usize>,
    /// Baseline artifact directory: after the run, compare CSV outputs
    /// column by column. Analytic columns must agree to 1e-12.
    #[arg(long)]
    baseline: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Operator eigenvalues against an independent finite-difference solve.
    Spectrum(RunArgs),
    /// Semigroup contraction on random states.
    Lemma1(RunArgs),
    /// Itô isometry and the stochastic-convolution moment bound.
    Lemma2(RunArgs),
    /// Uniform weighted second-moment bound on the torus.
    Thm1(RunArgs),
    /// Boundedness with square-integrable noise envelopes.
    Thm2(RunArgs),
    /// Picard iteration contraction factor.
    Picard(RunArgs),
    /// Linear stationary variance calibration and linear decay rate.
    Thm4lin(RunArgs),
    /// Stationary construction: contraction ratio, uniform bound, decay.
    Thm5(RunArgs),
    /// Merging of laws and two-time stationarity.
    Uniqueness(RunArgs),
    /// Maximal-inequality probes.
    Doob(RunArgs),
}

impl Command {
    fn split(&self) -> (&'static str, &RunArgs) {
        match self {
            Command::Spectrum(a) => ("spectrum", a),
            Command::Lemma1(a) => ("lemma1", a),
            Command::Lemma2(a) => ("lemma2", a),
            Command::Thm1(a) => ("thm1", a),
            Command::Thm2(a) => ("thm2", a),
            Command::Picard(a) => ("picard", a),
            Command::Thm4lin(a) => ("thm4lin", a),
            Command::Thm5(a) => ("thm5", a),
            Command::Uniqueness(a) => ("uniqueness", a),
            Command::Doob(a) => ("doob", a),
        }
    }
}

fn run(name: &str, args: &RunArgs) -> Result<bool, spde_lab::Error> {
    let mut cfg = ExperimentConfig::for_experiment(name)?;
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)?;
        cfg.apply_text(&text)?;
        // The file may not redirect the run to another experiment.
        cfg.experiment = name.to_string();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out = out.clone();
    }
    let workers = args
        .workers
        .or_else(|| {
            std::env::var("SPDE_LAB_WORKERS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or_else(|| {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        });
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .ok();

    let arts = run_experiment(&cfg)?;
    let mut pass = true;
    for v in &arts.verdicts {
        println!(
            "{name}/{}: {} (margin {:.3e}, seed {})",
            v.name,
            if v.pass { "PASS" } else { "FAIL" },
            v.margin,
            v.seed
        );
        pass &= v.pass;
    }
    if let Some(baseline) = &args.baseline {
        let rep = compare_baseline(&arts.dir, baseline, 1e-12)?;
        for (file, col, diff, ok) in &rep.columns {
            println!(
                "baseline {file}:{col}: {} (max diff {diff:.3e})",
                if *ok { "PASS" } else { "FAIL" }
            );
        }
        pass &= rep.pass;
    }
    println!("artifacts: {}", arts.dir.display());
    Ok(pass)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are not errors.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (name, args) = cli.command.split();
    match run(name, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
