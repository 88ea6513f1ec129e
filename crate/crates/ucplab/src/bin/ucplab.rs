//! Thin command-line front end: resolves a configuration (defaults, then a
//! flat key=value file, then flags, then --set overrides) and hands it to
//! the library harness. All computation lives in the library.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use ucplab::harness::{self, Experiment, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "ucplab",
    about = "Numerical laboratory for observability constants, spectral projectors, \
             Carleman weights and sampling bounds of discretized operators on cubes",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct RunArgs {
    /// Flat key=value configuration file ('#' comments allowed)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one parameter (repeatable): --set key=value
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output CSV path
    #[arg(long)]
    output: Option<PathBuf>,
    /// Ball radius list, comma separated
    #[arg(long)]
    delta: Option<String>,
    /// Side length list, comma separated
    #[arg(long = "length")]
    length: Option<String>,
    /// Energy threshold E
    #[arg(long)]
    energy: Option<f64>,
    /// Root seed list, comma separated
    #[arg(long)]
    seed: Option<String>,
    /// Jitter seed for ball arrangements
    #[arg(long)]
    jitter_seed: Option<u64>,
    /// Jitter amplitude for ball arrangements
    #[arg(long)]
    jitter_amp: Option<f64>,
    /// Bandwidth list for the sampling benchmark
    #[arg(long)]
    bandwidth: Option<String>,
    /// Truncation order J for the sampling series
    #[arg(long)]
    truncation: Option<usize>,
    /// Sampling-node jitter amplitude
    #[arg(long)]
    jitter: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenpairs below an energy threshold, exported as CSV
    Spectrum(RunArgs),
    /// One observability measurement (ratio, lambda_min, bound formulas)
    Observability(RunArgs),
    /// Sweep over L, delta and seeds with one CSV row per configuration
    Sweep(RunArgs),
    /// Worst-case search over ball centers and/or potentials
    Adversarial(RunArgs),
    /// Sampling-series reconstruction and the aliasing bound
    Shannon(RunArgs),
    /// Carleman weight bounds and the weighted functional sweep
    Carleman(RunArgs),
    /// Ghost-dimension extension residuals under refinement
    Extend(RunArgs),
    /// Geometric hypothesis checks of the unique-continuation theorems
    #[command(name = "quc-check")]
    QucCheck(RunArgs),
    /// Aggregate sweep CSVs (per-L extremes and power-law fits)
    Summary {
        /// Sweep CSV files
        paths: Vec<PathBuf>,
    },
}

fn resolve(experiment: Experiment, args: &RunArgs) -> ucplab::Result<ExperimentConfig> {
    let default_output = PathBuf::from(format!("ucplab_{}.csv", experiment.name()));
    let mut config = ExperimentConfig::new(experiment, default_output);
    if let Some(path) = &args.config {
        config.apply_file(path)?;
    }
    if let Some(v) = &args.length {
        config.apply("L", v)?;
    }
    if let Some(v) = &args.delta {
        config.apply("delta", v)?;
    }
    if let Some(v) = args.energy {
        config.apply("E", &v.to_string())?;
    }
    if let Some(v) = &args.seed {
        config.apply("seeds", v)?;
    }
    if let Some(v) = args.jitter_seed {
        config.apply("jitter_seed", &v.to_string())?;
    }
    if let Some(v) = args.jitter_amp {
        config.apply("jitter_amp", &v.to_string())?;
    }
    if let Some(v) = &args.bandwidth {
        config.apply("bandwidth", v)?;
    }
    if let Some(v) = args.truncation {
        config.apply("truncation", &v.to_string())?;
    }
    if let Some(v) = args.jitter {
        config.apply("jitter", &v.to_string())?;
    }
    for assignment in &args.set {
        let Some((key, value)) = assignment.split_once('=') else {
            return Err(ucplab::Error::Config(format!(
                "--set expects key=value, got '{assignment}'"
            )));
        };
        config.apply(key.trim(), value.trim())?;
    }
    if let Some(path) = &args.output {
        config.output = path.clone();
    }
    Ok(config)
}

fn real_main() -> ucplab::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Summary { paths } => {
            if paths.is_empty() {
                return Err(ucplab::Error::Config(
                    "summary needs at least one CSV path".into(),
                ));
            }
            let rows = harness::report_summary(&paths)?;
            print!("{}", harness::format_summary(&rows));
        }
        other => {
            let (experiment, args) = match &other {
                Command::Spectrum(a) => (Experiment::Spectrum, a),
                Command::Observability(a) => (Experiment::Observability, a),
                Command::Sweep(a) => (Experiment::Sweep, a),
                Command::Adversarial(a) => (Experiment::Adversarial, a),
                Command::Shannon(a) => (Experiment::Shannon, a),
                Command::Carleman(a) => (Experiment::Carleman, a),
                Command::Extend(a) => (Experiment::Extend, a),
                Command::QucCheck(a) => (Experiment::QucCheck, a),
                Command::Summary { .. } => unreachable!(),
            };
            let config = resolve(experiment, args)?;
            let artifacts = harness::run(&config)?;
            println!("{}", artifacts.summary);
            for path in &artifacts.outputs {
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() {
    if let Err(err) = real_main() {
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}
